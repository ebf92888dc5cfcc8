use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;

use meshtopo::bpt::{read_token_records, TokenRecord};
use meshtopo::mdpo::{ConditionEmbedding, DEFAULT_VOXEL_RESOLUTION};
use meshtopo::mesh::load_xyz;
use meshtopo::BptConfig;

use crate::args::GridArgs;

/// One JSON document on stdout.
pub fn emit(value: &impl Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into())
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| meshtopo::Error::Io {
        path: path.into(),
        source: e,
    })?)
}

/// Every non-blank line of a JSONL file; errors name the line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| meshtopo::Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| meshtopo::Error::Parse {
            line: i + 1,
            msg: format!("{}: {e}", path.display()),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn bpt_config(grid: &GridArgs) -> anyhow::Result<BptConfig> {
    Ok(BptConfig::new(grid.levels, grid.blocks)?)
}

/// The record named `id`, or the first one.
pub fn pick_record(path: &Path, id: Option<&str>) -> anyhow::Result<TokenRecord> {
    let records = read_token_records(path)?;
    match id {
        Some(id) => records
            .into_iter()
            .find(|r| r.id == id)
            .ok_or_else(|| anyhow!("no token record with id {id:?} in {}", path.display())),
        None => records
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("{} holds no token records", path.display())),
    }
}

/// Embedding of `<dir>/<cond>.xyz`, or zeros without a cloud directory.
pub fn condition(dir: Option<&Path>, cond: Option<&str>, dim: usize) -> anyhow::Result<ConditionEmbedding> {
    match (dir, cond) {
        (Some(dir), Some(cond)) => {
            let cloud = load_xyz(dir.join(format!("{cond}.xyz")))?;
            Ok(ConditionEmbedding::from_cloud(&cloud, dim, DEFAULT_VOXEL_RESOLUTION)?)
        }
        _ => Ok(ConditionEmbedding::zeros(dim)),
    }
}
