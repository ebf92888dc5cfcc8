use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, ensure, Context};
use serde::Deserialize;

use meshtopo::mdpo::{
    generate as sample_tokens, load_checkpoint, nll_loss, save_checkpoint, train_step_mdpo, train_step_nll,
    write_log_line, ConditionEmbedding, GenerateConfig, LogRecord, MdpoConfig, MdpoExample, ModelConfig, Sample,
    ToyARModel, TrainState, DEFAULT_VOXEL_RESOLUTION,
};
use meshtopo::mesh::load_xyz;
use meshtopo::preference::read_triplets;

use crate::args::{GenerateArgs, ModelShape, TrainCommand, TrainCommon};
use crate::io::{condition, emit, read_jsonl, write_text};

/// A training sequence; token records parse as this too.
#[derive(Debug, Deserialize)]
struct SeqLine {
    tokens: Vec<u32>,
    #[serde(default)]
    cond: Option<String>,
    #[serde(default)]
    vocab: Option<u32>,
}

pub fn train(cmd: &TrainCommand) -> anyhow::Result<()> {
    match cmd {
        TrainCommand::Pretrain { common, shape } => pretrain(common, shape),
        TrainCommand::Mdpo {
            common,
            reference,
            beta,
        } => {
            let cfg = MdpoConfig {
                beta: *beta,
                ..MdpoConfig::default()
            };
            cfg.check()?;
            let reference = load_checkpoint(reference)?;
            mdpo(common, reference, cfg)
        }
    }
}

fn check_lr(c: &TrainCommon) -> anyhow::Result<()> {
    ensure!(c.lr > 0.0 && c.lr.is_finite(), "learning rate {} must be positive", c.lr);
    Ok(())
}

fn open_log(c: &TrainCommon) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(&c.log).with_context(|| format!("creating {}", c.log.display()))?;
    Ok(BufWriter::new(f))
}

fn pretrain(c: &TrainCommon, shape: &ModelShape) -> anyhow::Result<()> {
    check_lr(c)?;
    let lines: Vec<SeqLine> = read_jsonl(&c.data)?;
    ensure!(!lines.is_empty(), "{} holds no sequences", c.data.display());
    if let Some(i) = lines.iter().position(|l| l.tokens.is_empty()) {
        bail!("sequence {} is empty", i + 1);
    }
    let model = match &c.model_in {
        Some(p) => load_checkpoint(p)?,
        None => {
            let vocab = shape
                .vocab
                .or_else(|| lines.iter().filter_map(|l| l.vocab).max().map(|v| v as usize))
                .unwrap_or_else(|| lines.iter().flat_map(|l| &l.tokens).max().map_or(2, |&t| t as usize + 1));
            let cfg = ModelConfig {
                vocab_size: vocab,
                embed_dim: shape.embed_dim,
                context: shape.context,
                layers: shape.layers,
                cond_dim: shape.cond_dim,
            };
            ToyARModel::random(cfg, c.seed, shape.init_scale)?
        }
    };
    let vocab = model.config.vocab_size;
    let samples: Vec<Sample> = lines
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if let Some(t) = l.tokens.iter().find(|&&t| t as usize >= vocab) {
                bail!("sequence {}: token {t} outside vocabulary of {vocab}", i + 1);
            }
            Ok(Sample {
                cond: condition(c.clouds.as_deref(), l.cond.as_deref(), model.config.cond_dim)?,
                tokens: l.tokens,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let mut log = open_log(c)?;
    let mut state = TrainState::new(model);
    let mut initial = None;
    for step in 0..c.steps {
        let loss = train_step_nll(&mut state, &samples, c.lr).with_context(|| format!("training step {step}"))?;
        initial.get_or_insert(loss);
        write_log_line(&mut log, &LogRecord { step, loss, margin: None })?;
    }
    let mut total = 0.0;
    for s in &samples {
        total += nll_loss(&state.model, &s.tokens, &s.cond).context("final evaluation")?;
    }
    let last = total / samples.len() as f64;
    write_log_line(
        &mut log,
        &LogRecord {
            step: c.steps,
            loss: last,
            margin: None,
        },
    )?;
    save_checkpoint(&state.model, &c.model_out)?;
    emit(&serde_json::json!({
        "mode": "pretrain",
        "steps": c.steps,
        "params": state.model.param_count(),
        "initial_loss": initial.unwrap_or(last),
        "final_loss": last,
    }))
}

fn mdpo(c: &TrainCommon, reference: ToyARModel, cfg: MdpoConfig) -> anyhow::Result<()> {
    check_lr(c)?;
    let policy = match &c.model_in {
        Some(p) => load_checkpoint(p)?,
        None => reference.clone(),
    };
    ensure!(
        policy.config == reference.config,
        "policy and reference checkpoints have different shapes"
    );
    let triplets = read_triplets(&c.data)?;
    ensure!(!triplets.is_empty(), "{} holds no triplets", c.data.display());
    let examples: Vec<MdpoExample> = triplets
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let cond = condition(c.clouds.as_deref(), Some(&t.condition_id), reference.config.cond_dim)?;
            MdpoExample::new(t, &reference, &cfg, cond).with_context(|| format!("triplet {}", i + 1))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut log = open_log(c)?;
    let mut state = TrainState::new(policy);
    let mut initial = None;
    for step in 0..c.steps {
        let stats =
            train_step_mdpo(&mut state, &examples, &cfg, c.lr).with_context(|| format!("training step {step}"))?;
        initial.get_or_insert(stats.loss);
        write_log_line(
            &mut log,
            &LogRecord {
                step,
                loss: stats.loss,
                margin: Some(stats.margin),
            },
        )?;
    }
    let (mut loss, mut margin) = (0.0, 0.0);
    for ex in &examples {
        let t = ex.terms(&state.model, &cfg).context("final evaluation")?;
        loss += t.loss;
        margin += t.margin(cfg.beta);
    }
    let n = examples.len() as f64;
    let (loss, margin) = (loss / n, margin / n);
    write_log_line(
        &mut log,
        &LogRecord {
            step: c.steps,
            loss,
            margin: Some(margin),
        },
    )?;
    save_checkpoint(&state.model, &c.model_out)?;
    emit(&serde_json::json!({
        "mode": "mdpo",
        "steps": c.steps,
        "beta": cfg.beta,
        "initial_loss": initial.unwrap_or(loss),
        "final_loss": loss,
        "final_margin": margin,
    }))
}

pub fn generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let model = load_checkpoint(&a.model)?;
    let cond = match &a.cloud {
        Some(p) => ConditionEmbedding::from_cloud(&load_xyz(p)?, model.config.cond_dim, DEFAULT_VOXEL_RESOLUTION)?,
        None => ConditionEmbedding::zeros(model.config.cond_dim),
    };
    let cfg = GenerateConfig {
        max_tokens: a.max_tokens,
        window: a.window.unwrap_or(model.config.context),
        seed: a.seed,
        stop: a.stop,
    };
    let tokens = sample_tokens(&model, &cond, &cfg)?;
    let doc = serde_json::json!({ "id": a.id, "tokens": tokens });
    if let Some(out) = &a.out {
        write_text(out, &format!("{doc}\n"))?;
    }
    emit(&doc)
}
