use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use meshtopo::bpt::{decode, encode, read_token_records, write_token_records, TokenRecord};
use meshtopo::mesh::{canonicalize, load_obj, load_xyz, save_obj};
use meshtopo::metrics::evaluate as evaluate_mesh;
use meshtopo::preference::{build_triplets, mask_phi, patch_report, write_triplets, Candidate, CandidateSet};
use meshtopo::{BptConfig, MaskConfig, Mesh, QualityReport};

use crate::args::{DetokenizeArgs, EvaluateArgs, MaskArgs, MaskArgsCommon, RankArgs, TokenizeArgs};
use crate::io::{bpt_config, emit, pick_record, read_jsonl, read_text, stem, write_text};

/// A quality report tagged with its condition.
#[derive(Debug, Serialize, Deserialize)]
struct ReportLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cond: Option<String>,
    #[serde(flatten)]
    report: QualityReport,
}

/// Normalized, quantized and reordered form the codec works on.
fn canonical(path: &Path, cfg: &BptConfig) -> anyhow::Result<Mesh> {
    let mesh = load_obj(path)?;
    Ok(canonicalize(&mesh.normalize_unit_cube()?, &cfg.grid())?)
}

fn mask_config(m: &MaskArgsCommon) -> anyhow::Result<MaskConfig> {
    let cfg = MaskConfig {
        tau_quad: m.tau_quad,
        tau_topo: m.tau_topo,
    };
    cfg.check()?;
    Ok(cfg)
}

pub fn tokenize(a: &TokenizeArgs) -> anyhow::Result<()> {
    let cfg = bpt_config(&a.grid)?;
    let mesh = canonical(&a.input, &cfg)?;
    let seq = encode(&mesh, &cfg)?;
    if a.verify {
        let back = decode(&seq, &cfg)?;
        if back.vertices != mesh.vertices || back.faces != mesh.faces {
            bail!("roundtrip mismatch: decoded mesh differs from the canonical input");
        }
        eprintln!("roundtrip OK");
    }
    let record = TokenRecord::new(a.id.clone().unwrap_or_else(|| stem(&a.input)), &seq);
    if let Some(out) = &a.out {
        write_token_records(out, std::slice::from_ref(&record))?;
    }
    emit(&record)
}

pub fn detokenize(a: &DetokenizeArgs) -> anyhow::Result<()> {
    let cfg = bpt_config(&a.grid)?;
    let record = pick_record(&a.input, a.id.as_deref())?;
    let id = record.id.clone();
    let mesh = decode(&record.into_sequence()?, &cfg)?;
    save_obj(&mesh, &a.out)?;
    emit(&serde_json::json!({
        "id": id,
        "vertices": mesh.vertices.len(),
        "faces": mesh.faces.len(),
    }))
}

pub fn evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let cloud = load_xyz(&a.cloud)?;
    let id = a.id.clone().unwrap_or_else(|| stem(&a.mesh));
    let report = evaluate_mesh(id, &mesh, &cloud, a.samples, a.seed)?;
    let line = ReportLine {
        cond: a.cond.clone(),
        report,
    };
    if let Some(out) = &a.out {
        write_text(out, &serde_json::to_string(&line)?)?;
    }
    emit(&line)
}

fn read_reports(path: &Path) -> anyhow::Result<Vec<ReportLine>> {
    if !path.is_dir() {
        return read_jsonl(path);
    }
    let mut files: Vec<_> = fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            serde_json::from_str(&read_text(f)?).with_context(|| format!("parsing report {}", f.display()))
        })
        .collect()
}

pub fn rank(a: &RankArgs) -> anyhow::Result<()> {
    let cfg = bpt_config(&a.grid)?;
    let mask = mask_config(&a.mask)?;
    let reports = read_reports(&a.reports)?;
    let mut tokens: HashMap<String, TokenRecord> =
        read_token_records(&a.tokens)?.into_iter().map(|r| (r.id.clone(), r)).collect();

    let mut groups: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for line in reports {
        let Some(record) = tokens.remove(&line.report.id) else {
            bail!("no token record for candidate {:?}", line.report.id);
        };
        groups
            .entry(line.cond.unwrap_or_else(|| a.cond.clone()))
            .or_default()
            .push(Candidate {
                id: line.report.id.clone(),
                tokens: record.into_sequence()?,
                report: line.report,
            });
    }

    let mut triplets = Vec::new();
    let mut pairs = 0usize;
    for (condition_id, candidates) in groups.iter() {
        let n = candidates.len();
        pairs += n * n.saturating_sub(1) / 2;
        let set = CandidateSet {
            condition_id: condition_id.clone(),
            candidates: candidates.clone(),
        };
        triplets.extend(build_triplets(&set, &cfg, &mask).with_context(|| format!("condition {condition_id}"))?);
    }
    write_triplets(&a.out, &triplets)?;
    eprintln!("{} triplets from {} pairs", triplets.len(), pairs);
    emit(&serde_json::json!({
        "triplets": triplets.len(),
        "pairs": pairs,
        "conditions": groups.len(),
    }))
}

pub fn mask(a: &MaskArgs) -> anyhow::Result<()> {
    let cfg = bpt_config(&a.grid)?;
    let mcfg = mask_config(&a.mask)?;
    let record = pick_record(&a.tokens, a.id.as_deref())?;
    let id = record.id.clone();
    let seq = record.into_sequence()?;
    let mesh = canonical(&a.mesh, &cfg)?;
    let phi = mask_phi(&seq, &mesh, &mcfg, &cfg)?;
    let patches = patch_report(&seq, &cfg, &mcfg)?;
    let doc = serde_json::json!({
        "id": id,
        "mask": phi,
        "ones": phi.ones(),
        "patches": patches,
    });
    if let Some(out) = &a.out {
        write_text(out, &serde_json::to_string(&doc)?)?;
    }
    emit(&doc)
}
