use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, ToyARModel};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct SegmentValues {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    config: ModelConfig,
    segments: Vec<SegmentValues>,
}

pub fn checkpoint_to_json(model: &ToyARModel) -> Result<String> {
    let segments = model
        .config
        .segments()
        .into_iter()
        .map(|s| SegmentValues {
            values: model.params[s.range()].to_vec(),
            name: s.name,
            shape: s.shape,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&Checkpoint {
        config: model.config,
        segments,
    })?)
}

pub fn checkpoint_from_json(text: &str) -> Result<ToyARModel> {
    let ck: Checkpoint = serde_json::from_str(text)?;
    ck.config.check()?;
    let expected = ck.config.segments();
    if expected.len() != ck.segments.len() {
        return Err(Error::Consistency(format!(
            "checkpoint has {} segments, architecture needs {}",
            ck.segments.len(),
            expected.len()
        )));
    }
    let mut params = Vec::with_capacity(ck.config.param_count());
    for (want, got) in expected.iter().zip(ck.segments) {
        if want.name != got.name || want.shape != got.shape || got.values.len() != want.len() {
            return Err(Error::Consistency(format!(
                "segment {} {:?} does not match expected {} {:?}",
                got.name, got.shape, want.name, want.shape
            )));
        }
        params.extend(got.values);
    }
    ToyARModel::from_params(ck.config, params)
}

pub fn save_checkpoint(model: &ToyARModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ToyARModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_json(&text)
}
