use serde::{Deserialize, Serialize};

use super::cond::ConditionEmbedding;
use super::model::{realized, ToyARModel, DEFAULT_PROB_FLOOR};
use super::TokenProbs;
use crate::error::{Error, Result};
use crate::preference::{MaskVector, PreferenceTriplet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpoConfig {
    pub beta: f64,
    pub epsilon_prob: f64,
}

impl Default for MdpoConfig {
    fn default() -> Self {
        MdpoConfig {
            beta: 0.1,
            epsilon_prob: DEFAULT_PROB_FLOOR,
        }
    }
}

impl MdpoConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.epsilon_prob > 0.0 && self.epsilon_prob <= 1e-3) {
            return Err(Error::Domain(format!("epsilon_prob = {} outside (0, 1e-3]", self.epsilon_prob)));
        }
        Ok(())
    }
}

/// Negative log-likelihood of `tokens`, summed over positions.
pub fn nll_loss(model: &ToyARModel, tokens: &[u32], cond: &ConditionEmbedding) -> Result<f64> {
    let p = model.token_probs(tokens, cond, DEFAULT_PROB_FLOOR)?;
    Ok(-p.probs.iter().map(|x| x.ln()).sum::<f64>())
}

/// Loss and parameter gradient of [`nll_loss`].
pub fn nll_grad(model: &ToyARModel, tokens: &[u32], cond: &ConditionEmbedding) -> Result<(f64, Vec<f64>)> {
    let cache = model.run(&model.shifted(tokens)?, cond)?;
    let p = realized(&cache, tokens, DEFAULT_PROB_FLOOR);
    let loss = -p.probs.iter().map(|x| x.ln()).sum::<f64>();
    let upstream = vec![-1.0; tokens.len()];
    let grad = model.backward(&cache, tokens, &upstream, DEFAULT_PROB_FLOOR)?;
    Ok((loss, grad))
}

fn masked_sums(policy: &TokenProbs, reference: &TokenProbs, mask: &MaskVector, keep: u8) -> Result<Option<(f64, f64)>> {
    if policy.len() != reference.len() || policy.len() != mask.len() {
        return Err(Error::Consistency(format!(
            "lengths differ: policy {}, reference {}, mask {}",
            policy.len(),
            reference.len(),
            mask.len()
        )));
    }
    let mut any = false;
    let (mut sp, mut sr) = (0.0, 0.0);
    for ((&p, &r), &m) in policy.probs.iter().zip(&reference.probs).zip(&mask.bits) {
        if m == keep {
            any = true;
            sp += p;
            sr += r;
        }
    }
    Ok(any.then_some((sp, sr)))
}

/// `log(‖policy ⊙ φ‖₁ / ‖ref ⊙ φ‖₁)`.
pub fn masked_log_ratio_pos(policy: &TokenProbs, reference: &TokenProbs, mask: &MaskVector) -> Result<f64> {
    let (sp, sr) = masked_sums(policy, reference, mask, 1)?.ok_or(Error::MaskEmpty { side: "winner" })?;
    Ok(sp.ln() - sr.ln())
}

/// `log(‖policy ⊙ (1-φ)‖₁ / ‖ref ⊙ (1-φ)‖₁)`.
pub fn masked_log_ratio_neg(policy: &TokenProbs, reference: &TokenProbs, mask: &MaskVector) -> Result<f64> {
    let (sp, sr) = masked_sums(policy, reference, mask, 0)?.ok_or(Error::MaskEmpty { side: "loser" })?;
    Ok(sp.ln() - sr.ln())
}

/// `-log σ(x)` without overflow.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss value together with its two log-ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpoTerms {
    pub loss: f64,
    pub pos: f64,
    pub neg: f64,
}

impl MdpoTerms {
    pub fn from_ratios(pos: f64, neg: f64, beta: f64) -> Self {
        MdpoTerms {
            loss: neg_log_sigmoid(beta * (pos - neg)),
            pos,
            neg,
        }
    }

    /// Implicit reward margin `β(L⁺ - L⁻)`.
    pub fn margin(&self, beta: f64) -> f64 {
        beta * (self.pos - self.neg)
    }
}

pub fn mdpo_terms(
    triplet: &PreferenceTriplet,
    policy: &TokenProbs,
    policy_lose: &TokenProbs,
    reference: &TokenProbs,
    reference_lose: &TokenProbs,
    cfg: &MdpoConfig,
) -> Result<MdpoTerms> {
    cfg.check()?;
    let pos = masked_log_ratio_pos(policy, reference, &triplet.winner.mask)?;
    let neg = masked_log_ratio_neg(policy_lose, reference_lose, &triplet.loser.mask)?;
    Ok(MdpoTerms::from_ratios(pos, neg, cfg.beta))
}

/// Masked preference loss of `policy` against the frozen `reference`.
pub fn mdpo_loss(
    triplet: &PreferenceTriplet,
    policy: &ToyARModel,
    reference: &ToyARModel,
    cfg: &MdpoConfig,
    cond: &ConditionEmbedding,
) -> Result<f64> {
    let ex = MdpoExample::new(triplet.clone(), reference, cfg, cond.clone())?;
    Ok(ex.terms(policy, cfg)?.loss)
}

/// A triplet with the frozen reference probabilities precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpoExample {
    pub triplet: PreferenceTriplet,
    pub cond: ConditionEmbedding,
    pub ref_win: TokenProbs,
    pub ref_lose: TokenProbs,
}

impl MdpoExample {
    pub fn new(triplet: PreferenceTriplet, reference: &ToyARModel, cfg: &MdpoConfig, cond: ConditionEmbedding) -> Result<Self> {
        cfg.check()?;
        if !triplet.winner.mask.bits.contains(&1) {
            return Err(Error::MaskEmpty { side: "winner" });
        }
        if !triplet.loser.mask.bits.contains(&0) {
            return Err(Error::MaskEmpty { side: "loser" });
        }
        let ref_win = reference.token_probs(&triplet.winner.tokens, &cond, cfg.epsilon_prob)?;
        let ref_lose = reference.token_probs(&triplet.loser.tokens, &cond, cfg.epsilon_prob)?;
        Ok(MdpoExample {
            triplet,
            cond,
            ref_win,
            ref_lose,
        })
    }

    pub fn terms(&self, policy: &ToyARModel, cfg: &MdpoConfig) -> Result<MdpoTerms> {
        let pw = policy.token_probs(&self.triplet.winner.tokens, &self.cond, cfg.epsilon_prob)?;
        let pl = policy.token_probs(&self.triplet.loser.tokens, &self.cond, cfg.epsilon_prob)?;
        mdpo_terms(&self.triplet, &pw, &pl, &self.ref_win, &self.ref_lose, cfg)
    }

    /// Loss terms and the gradient with respect to the policy parameters only.
    pub fn grad(&self, policy: &ToyARModel, cfg: &MdpoConfig) -> Result<(MdpoTerms, Vec<f64>)> {
        let (win, lose) = (&self.triplet.winner, &self.triplet.loser);
        let cw = policy.run(&policy.shifted(&win.tokens)?, &self.cond)?;
        let cl = policy.run(&policy.shifted(&lose.tokens)?, &self.cond)?;
        let pw = realized(&cw, &win.tokens, cfg.epsilon_prob);
        let pl = realized(&cl, &lose.tokens, cfg.epsilon_prob);
        let terms = mdpo_terms(&self.triplet, &pw, &pl, &self.ref_win, &self.ref_lose, cfg)?;

        // d loss / d z with z = β(L⁺ - L⁻)
        let dz = sigmoid(cfg.beta * (terms.pos - terms.neg)) - 1.0;
        let upstream = |p: &TokenProbs, mask: &MaskVector, keep: u8, sign: f64| -> Vec<f64> {
            let total: f64 = p.probs.iter().zip(&mask.bits).filter(|(_, &m)| m == keep).map(|(x, _)| x).sum();
            p.probs
                .iter()
                .zip(&mask.bits)
                .map(|(&x, &m)| if m == keep { sign * dz * cfg.beta * x / total } else { 0.0 })
                .collect()
        };
        let mut grad = policy.backward(&cw, &win.tokens, &upstream(&pw, &win.mask, 1, 1.0), cfg.epsilon_prob)?;
        let g_lose = policy.backward(&cl, &lose.tokens, &upstream(&pl, &lose.mask, 0, -1.0), cfg.epsilon_prob)?;
        for (a, b) in grad.iter_mut().zip(g_lose) {
            *a += b;
        }
        Ok((terms, grad))
    }
}
