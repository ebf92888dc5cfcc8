//! Desk-scale autoregressive scorer with a likelihood objective and the
//! masked preference objective.
//!
//! All gradients are exact reverse-mode derivatives written by hand; the
//! reference model in the preference objective only contributes cached
//! probabilities and never receives a gradient.

mod checkpoint;
mod cond;
mod generate;
mod loss;
mod model;
pub mod synthetic;
mod train;

pub use checkpoint::{checkpoint_from_json, checkpoint_to_json, load_checkpoint, save_checkpoint};
pub use cond::{ConditionEmbedding, DEFAULT_VOXEL_RESOLUTION};
pub use generate::{generate, GenerateConfig};
pub use loss::{
    masked_log_ratio_neg, masked_log_ratio_pos, mdpo_loss, mdpo_terms, neg_log_sigmoid, nll_grad, nll_loss, sigmoid,
    MdpoConfig, MdpoExample, MdpoTerms,
};
pub use model::{ModelConfig, Segment, ToyARModel, DEFAULT_PROB_FLOOR};
pub use train::{
    batch_mdpo, batch_nll, gd_step, train_step_mdpo, train_step_nll, write_log_line, LogRecord, Sample, StepStats,
    TrainState,
};

use serde::{Deserialize, Serialize};

/// Probabilities of the realized tokens, one per position, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenProbs {
    pub probs: Vec<f64>,
}

impl TokenProbs {
    pub fn new(probs: Vec<f64>) -> Self {
        TokenProbs { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Realized-token probabilities under the default floor.
pub fn forward(model: &ToyARModel, tokens: &[u32], cond: &ConditionEmbedding) -> crate::Result<TokenProbs> {
    model.token_probs(tokens, cond, DEFAULT_PROB_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::preference::{MaskVector, PreferenceTriplet, Scored};
    use proptest::prelude::*;

    fn tiny(vocab: usize) -> ModelConfig {
        ModelConfig {
            vocab_size: vocab,
            embed_dim: 4,
            context: 5,
            layers: 1,
            cond_dim: 3,
        }
    }

    fn cond3() -> ConditionEmbedding {
        ConditionEmbedding::from_values(vec![0.2, -0.1, 0.4]).unwrap()
    }

    #[test]
    fn param_count_matches_segments() {
        let cfg = ModelConfig { layers: 2, ..tiny(7) };
        let segs = cfg.segments();
        let total: usize = segs.iter().map(Segment::len).sum();
        // 7·4 + 4 + 3·4 + 2·(4·16 + 5) + 4·7 + 7
        assert_eq!(total, 28 + 4 + 12 + 2 * 69 + 28 + 7);
        assert_eq!(cfg.param_count(), total);
        for w in segs.windows(2) {
            assert_eq!(w[0].offset + w[0].len(), w[1].offset);
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ToyARModel::zeros(tiny(6)).unwrap();
        let p = forward(&m, &[1, 2, 3, 0], &cond3()).unwrap();
        assert!(p.probs.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        let nll = nll_loss(&m, &[1, 2, 3, 0], &cond3()).unwrap();
        assert!((nll - 4.0 * 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn forward_errors() {
        let m = ToyARModel::zeros(tiny(6)).unwrap();
        assert!(matches!(forward(&m, &[1, 6], &cond3()), Err(Error::Domain(_))));
        assert!(forward(&m, &[], &cond3()).is_err());
        assert!(forward(&m, &[1], &ConditionEmbedding::zeros(2)).is_err());
    }

    #[test]
    fn nll_matches_direct_sum() {
        let m = ToyARModel::random(tiny(5), 3, 0.8).unwrap();
        let toks = [4, 0, 1, 1, 3, 2, 0];
        let dist = m.distributions(&toks, &cond3()).unwrap();
        let direct: f64 = toks.iter().enumerate().map(|(i, &t)| -dist[[i, t as usize]].ln()).sum();
        assert!((nll_loss(&m, &toks, &cond3()).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn ratio_examples() {
        let pos = masked_log_ratio_pos(
            &TokenProbs::new(vec![0.5, 0.5, 0.9]),
            &TokenProbs::new(vec![0.25, 0.25, 0.9]),
            &MaskVector { bits: vec![1, 1, 0] },
        )
        .unwrap();
        assert!((pos - 2f64.ln()).abs() < 1e-15);
        let neg = masked_log_ratio_neg(
            &TokenProbs::new(vec![0.2, 0.3]),
            &TokenProbs::new(vec![0.4, 0.3]),
            &MaskVector { bits: vec![0, 1] },
        )
        .unwrap();
        assert!((neg + 2f64.ln()).abs() < 1e-15);
        let p = TokenProbs::new(vec![0.3, 0.6]);
        assert_eq!(masked_log_ratio_pos(&p, &p, &MaskVector { bits: vec![1, 0] }).unwrap(), 0.0);
        assert!(matches!(
            masked_log_ratio_pos(&p, &p, &MaskVector { bits: vec![0, 0] }),
            Err(Error::MaskEmpty { side: "winner" })
        ));
        assert!(matches!(
            masked_log_ratio_neg(&p, &p, &MaskVector { bits: vec![1, 1] }),
            Err(Error::MaskEmpty { side: "loser" })
        ));
        assert!(masked_log_ratio_pos(&p, &p, &MaskVector { bits: vec![1] }).is_err());
    }

    #[test]
    fn worked_loss_value() {
        let t = MdpoTerms::from_ratios(2f64.ln(), -(2f64.ln()), 1.0);
        // -ln σ(2 ln 2) = ln(1 + 1/4)
        assert!((t.loss - 1.25f64.ln()).abs() < 1e-12);
        assert!((t.loss - 0.223144).abs() < 1e-6);
        for beta in [1e-9, 1e-6] {
            let t = MdpoTerms::from_ratios(0.7, -0.4, beta);
            assert!((t.loss - 2f64.ln()).abs() < 1e-5);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(neg_log_sigmoid(800.0), 0.0);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }

    fn triplet(vocab: u32) -> PreferenceTriplet {
        synthetic::synthetic_triplets(1, 6, vocab, 9).remove(0)
    }

    #[test]
    fn identity_policy_loss_is_ln2() {
        let m = ToyARModel::random(tiny(6), 4, 0.5).unwrap();
        for beta in [0.01, 0.1, 1.0] {
            let cfg = MdpoConfig { beta, ..MdpoConfig::default() };
            let loss = mdpo_loss(&triplet(6), &m, &m.clone(), &cfg, &cond3()).unwrap();
            assert!((loss - 2f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn mask_empty_is_tagged() {
        let m = ToyARModel::zeros(tiny(6)).unwrap();
        let mut t = triplet(6);
        t.loser.mask.bits.fill(1);
        let err = mdpo_loss(&t, &m, &m, &MdpoConfig::default(), &cond3()).unwrap_err();
        assert!(matches!(err, Error::MaskEmpty { side: "loser" }));
        let mut t = triplet(6);
        t.winner.mask.bits.fill(0);
        let err = mdpo_loss(&t, &m, &m, &MdpoConfig::default(), &cond3()).unwrap_err();
        assert!(matches!(err, Error::MaskEmpty { side: "winner" }));
    }

    #[test]
    fn config_bounds() {
        assert!(MdpoConfig::default().check().is_ok());
        assert!(MdpoConfig { beta: 0.0, ..Default::default() }.check().is_err());
        assert!(MdpoConfig { epsilon_prob: 1e-2, ..Default::default() }.check().is_err());
        assert!(MdpoConfig { epsilon_prob: 0.0, ..Default::default() }.check().is_err());
    }

    #[test]
    fn reference_gradient_is_absent() {
        // the preference gradient has exactly one entry per policy parameter
        let m = ToyARModel::random(tiny(6), 5, 0.5).unwrap();
        let ex = MdpoExample::new(triplet(6), &m, &MdpoConfig::default(), cond3()).unwrap();
        let (t, g) = ex.grad(&m, &MdpoConfig::default()).unwrap();
        assert_eq!(g.len(), m.param_count());
        assert!((t.loss - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unused_parameters_have_zero_gradient() {
        // embedding rows of tokens never fed as input get no gradient
        let m = ToyARModel::random(tiny(6), 5, 0.5).unwrap();
        let (_, g) = nll_grad(&m, &[1, 2, 5], &cond3()).unwrap();
        let d = 4;
        for t in [0usize, 3, 4, 5] {
            assert!(g[t * d..(t + 1) * d].iter().all(|&x| x == 0.0), "row {t}");
        }
        assert!(g[d..2 * d].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn generate_edge_cases() {
        let m = ToyARModel::random(tiny(6), 1, 0.5).unwrap();
        let cfg = GenerateConfig { max_tokens: 0, window: 4, seed: 1, stop: None };
        assert!(generate(&m, &cond3(), &cfg).unwrap().is_empty());
        let cfg = GenerateConfig { max_tokens: 20, ..cfg };
        let a = generate(&m, &cond3(), &cfg).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, generate(&m, &cond3(), &cfg).unwrap());
        assert!(a.iter().all(|&t| t < 6));
        assert!(generate(&m, &cond3(), &GenerateConfig { window: 6, ..cfg }).is_err());
        let stop = a[3];
        let first = a.iter().position(|&t| t == stop).unwrap();
        let b = generate(&m, &cond3(), &GenerateConfig { stop: Some(stop), ..cfg }).unwrap();
        assert_eq!(b, a[..=first]);
    }

    #[test]
    fn numeric_overflow_names_segment() {
        let mut m = ToyARModel::zeros(tiny(4)).unwrap();
        let seg = m.config.segments().into_iter().find(|s| s.name == "out_w").unwrap();
        m.params[seg.offset] = f64::INFINITY;
        match m.check_finite() {
            Err(Error::NumericOverflow { segment }) => assert_eq!(segment, "out_w"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distributions_sum_to_one(seed in 0u64..1000, toks in prop::collection::vec(0u32..6, 1..12)) {
            let m = ToyARModel::random(tiny(6), seed, 1.0).unwrap();
            let d = m.distributions(&toks, &cond3()).unwrap();
            for row in d.rows() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn prefix_is_causal(
            seed in 0u64..1000,
            toks in prop::collection::vec(0u32..6, 2..14),
            cut in 1usize..14,
            edit in prop::collection::vec(0u32..6, 1..6),
        ) {
            let m = ToyARModel::random(tiny(6), seed, 1.0).unwrap();
            let cut = cut.min(toks.len() - 1);
            let mut other = toks[..cut].to_vec();
            other.extend(edit);
            let a = forward(&m, &toks, &cond3()).unwrap();
            let b = forward(&m, &other, &cond3()).unwrap();
            // position i sees tokens < i, so the first cut+1 probabilities only see the shared prefix
            for i in 0..cut {
                prop_assert_eq!(a.probs[i].to_bits(), b.probs[i].to_bits());
            }
        }

        #[test]
        fn loss_monotone_in_ratios(p in 0.05f64..0.9, q in 0.05f64..0.9, step in 0.01f64..0.09, beta in 0.01f64..2.0) {
            let cfg = MdpoConfig { beta, ..MdpoConfig::default() };
            let t = PreferenceTriplet {
                condition_id: "c".into(),
                winner: Scored { id: "w".into(), tokens: vec![0, 0], mask: MaskVector { bits: vec![1, 0] } },
                loser: Scored { id: "l".into(), tokens: vec![0, 0], mask: MaskVector { bits: vec![1, 0] } },
            };
            let r = TokenProbs::new(vec![0.5, 0.5]);
            let base = mdpo_terms(&t, &TokenProbs::new(vec![p, 0.5]), &TokenProbs::new(vec![0.5, q]), &r, &r, &cfg).unwrap();
            let up_pos = mdpo_terms(&t, &TokenProbs::new(vec![p + step, 0.5]), &TokenProbs::new(vec![0.5, q]), &r, &r, &cfg).unwrap();
            let up_neg = mdpo_terms(&t, &TokenProbs::new(vec![p, 0.5]), &TokenProbs::new(vec![0.5, q + step]), &r, &r, &cfg).unwrap();
            prop_assert!(up_pos.pos > base.pos && up_pos.loss < base.loss);
            prop_assert!(up_neg.neg > base.neg && up_neg.loss > base.loss);
        }
    }
}
