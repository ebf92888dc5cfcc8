use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cond::ConditionEmbedding;
use super::loss::{nll_grad, MdpoConfig, MdpoExample};
use super::model::ToyARModel;
use crate::error::{Error, Result};

/// A pre-training sequence with its condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tokens: Vec<u32>,
    pub cond: ConditionEmbedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: ToyARModel,
    pub step: usize,
}

impl TrainState {
    pub fn new(model: ToyARModel) -> Self {
        TrainState { model, step: 0 }
    }
}

/// One line of the training log; `margin` is absent for likelihood training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub loss: f64,
    pub margin: Option<f64>,
}

pub fn write_log_line(mut out: impl Write, record: &LogRecord) -> Result<()> {
    let line = serde_json::to_string(record)?;
    writeln!(out, "{line}").map_err(|e| Error::io("<log>", e))
}

/// `params -= lr * grad`.
pub fn gd_step(params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Domain(format!("learning rate {lr} must be positive")));
    }
    if params.len() != grad.len() {
        return Err(Error::Consistency("gradient length differs from parameter count".into()));
    }
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
    Ok(())
}

/// Per-item values summed in input order, so results do not depend on the
/// thread count.
fn ordered_mean<T, F>(items: &[T], f: F, width: usize) -> Result<(Vec<f64>, Vec<f64>)>
where
    T: Sync,
    F: Fn(&T) -> Result<(Vec<f64>, Vec<f64>)> + Sync + Send,
{
    if items.is_empty() {
        return Err(Error::Precondition("empty batch".into()));
    }
    let parts: Vec<(Vec<f64>, Vec<f64>)> = items.par_iter().map(f).collect::<Result<_>>()?;
    let n = items.len() as f64;
    let mut stats = vec![0.0; parts[0].0.len()];
    let mut grad = vec![0.0; width];
    for (s, g) in &parts {
        for (a, b) in stats.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    stats.iter_mut().for_each(|x| *x /= n);
    grad.iter_mut().for_each(|x| *x /= n);
    Ok((stats, grad))
}

/// Mean negative log-likelihood over the batch and its gradient.
pub fn batch_nll(model: &ToyARModel, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
    let (stats, grad) = ordered_mean(
        batch,
        |s| {
            let (loss, g) = nll_grad(model, &s.tokens, &s.cond)?;
            Ok((vec![loss], g))
        },
        model.param_count(),
    )?;
    Ok((stats[0], grad))
}

/// One descent step on the likelihood objective; returns the pre-step batch mean loss.
pub fn train_step_nll(state: &mut TrainState, batch: &[Sample], lr: f64) -> Result<f64> {
    let (loss, grad) = batch_nll(&state.model, batch)?;
    gd_step(&mut state.model.params, &grad, lr)?;
    state.model.check_finite()?;
    state.step += 1;
    Ok(loss)
}

/// Batch means of the preference loss and margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub margin: f64,
}

pub fn batch_mdpo(model: &ToyARModel, batch: &[MdpoExample], cfg: &MdpoConfig) -> Result<(StepStats, Vec<f64>)> {
    let (stats, grad) = ordered_mean(
        batch,
        |ex| {
            let (t, g) = ex.grad(model, cfg)?;
            Ok((vec![t.loss, t.margin(cfg.beta)], g))
        },
        model.param_count(),
    )?;
    Ok((
        StepStats {
            loss: stats[0],
            margin: stats[1],
        },
        grad,
    ))
}

/// One descent step on the masked preference objective; statistics are pre-step.
pub fn train_step_mdpo(state: &mut TrainState, batch: &[MdpoExample], cfg: &MdpoConfig, lr: f64) -> Result<StepStats> {
    let (stats, grad) = batch_mdpo(&state.model, batch, cfg)?;
    gd_step(&mut state.model.params, &grad, lr)?;
    state.model.check_finite()?;
    state.step += 1;
    Ok(stats)
}
