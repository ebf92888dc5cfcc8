use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cond::ConditionEmbedding;
use super::model::{Input, ToyARModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateConfig {
    pub max_tokens: usize,
    /// Tokens of context kept; the BOS input counts while it is still in view.
    pub window: usize,
    pub seed: u64,
    /// Sampling this token ends generation; it is kept in the output.
    pub stop: Option<u32>,
}

/// Samples tokens one at a time from a sliding context window.
pub fn generate(model: &ToyARModel, cond: &ConditionEmbedding, cfg: &GenerateConfig) -> Result<Vec<u32>> {
    if cfg.window == 0 || cfg.window > model.config.context {
        return Err(Error::Precondition(format!(
            "window {} outside [1, {}]",
            cfg.window, model.config.context
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<u32> = Vec::with_capacity(cfg.max_tokens);
    while out.len() < cfg.max_tokens {
        let mut inputs: Vec<Input> = std::iter::once(Input::Bos)
            .chain(out.iter().map(|&t| Input::Token(t as usize)))
            .collect();
        if inputs.len() > cfg.window {
            inputs.drain(..inputs.len() - cfg.window);
        }
        let cache = model.run(&inputs, cond)?;
        let last = cache.probs.row(inputs.len() - 1);
        let dist = WeightedIndex::new(last.iter().copied())
            .map_err(|e| Error::Numeric(format!("sampling distribution: {e}")))?;
        let t = dist.sample(&mut rng) as u32;
        out.push(t);
        if cfg.stop == Some(t) {
            break;
        }
    }
    Ok(out)
}
