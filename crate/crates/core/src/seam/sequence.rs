use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{sort_key_yzx, Mesh, QuantGrid, Vec3, YzxKey};

/// A seam edge; `head` never follows `tail` in yzx order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamSegment {
    pub head: Vec3,
    pub tail: Vec3,
}

impl SeamSegment {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        if sort_key_yzx(b) < sort_key_yzx(a) {
            SeamSegment { head: b, tail: a }
        } else {
            SeamSegment { head: a, tail: b }
        }
    }

    fn key(&self) -> (YzxKey, YzxKey) {
        (sort_key_yzx(self.head), sort_key_yzx(self.tail))
    }
}

/// Segments sorted ascending by `(head, tail)` yzx keys.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeamSequence {
    pub segments: Vec<SeamSegment>,
}

impl SeamSequence {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn normalize(segments: impl IntoIterator<Item = (Vec3, Vec3)>) -> SeamSequence {
    let mut segments: Vec<SeamSegment> = segments.into_iter().map(|(a, b)| SeamSegment::new(a, b)).collect();
    segments.sort_by_key(SeamSegment::key);
    SeamSequence { segments }
}

/// Orients every segment head-first and sorts the list.
pub fn order_seams(segments: &[(Vec3, Vec3)]) -> Result<SeamSequence> {
    if let Some(index) = segments.iter().position(|(a, b)| a == b) {
        return Err(Error::DegenerateSegment { index });
    }
    Ok(normalize(segments.iter().copied()))
}

/// Flat coordinate tokens, six per segment, ordered at bin resolution.
pub fn encode_seam(seq: &SeamSequence, grid: &QuantGrid) -> Vec<u32> {
    let mut bins: Vec<([u32; 3], [u32; 3])> = seq
        .segments
        .iter()
        .map(|s| {
            let (h, t) = (grid.quantize_point(s.head), grid.quantize_point(s.tail));
            let (kh, kt) = ([h[1], h[2], h[0]], [t[1], t[2], t[0]]);
            if kt < kh {
                (t, h)
            } else {
                (h, t)
            }
        })
        .collect();
    bins.sort_by_key(|(h, t)| ([h[1], h[2], h[0]], [t[1], t[2], t[0]]));
    bins.into_iter().flat_map(|(h, t)| h.into_iter().chain(t)).collect()
}

/// Inverse of [`encode_seam`]. Segments that collapse to one bin are kept.
pub fn decode_seam(tokens: &[u32], grid: &QuantGrid) -> Result<SeamSequence> {
    if !tokens.len().is_multiple_of(6) {
        return Err(Error::Framing { len: tokens.len() });
    }
    let segs = tokens
        .chunks_exact(6)
        .map(|c| {
            Ok((
                grid.dequantize_point([c[0], c[1], c[2]])?,
                grid.dequantize_point([c[3], c[4], c[5]])?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize(segs))
}

pub const SEAM_RATIO_BAND: (f64, f64) = (0.1, 0.35);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioBand {
    Low,
    Valid,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamRatio {
    pub ratio: f64,
    pub band: RatioBand,
}

impl SeamRatio {
    pub fn is_valid(&self) -> bool {
        self.band == RatioBand::Valid
    }
}

/// Segment count over vertex count, classified against the valid band (inclusive).
pub fn seam_ratio(seq: &SeamSequence, mesh: &Mesh) -> Result<SeamRatio> {
    ratio_of(seq.len(), mesh.vertices.len())
}

pub fn ratio_of(segments: usize, vertices: usize) -> Result<SeamRatio> {
    if vertices == 0 {
        return Err(Error::Domain("seam ratio of a mesh without vertices".into()));
    }
    let ratio = segments as f64 / vertices as f64;
    let band = if ratio < SEAM_RATIO_BAND.0 {
        RatioBand::Low
    } else if ratio > SEAM_RATIO_BAND.1 {
        RatioBand::High
    } else {
        RatioBand::Valid
    };
    Ok(SeamRatio { ratio, band })
}

/// One coordinate-token record of a seam file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamRecord {
    pub id: String,
    pub tokens: Vec<u32>,
}

pub fn read_seam_records(path: impl AsRef<Path>) -> Result<Vec<SeamRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeamRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_seam_records(path: impl AsRef<Path>, records: &[SeamRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(file, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Plain-text segments, `x y z x y z` per line; `#` starts a comment.
pub fn parse_seam_text(text: &str) -> Result<Vec<(Vec3, Vec3)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: i + 1,
                        msg: format!("bad coordinate {t:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 6 coordinates, found {}", vals.len()),
            });
        }
        out.push(([vals[0], vals[1], vals[2]], [vals[3], vals[4], vals[5]]));
    }
    Ok(out)
}

pub fn write_seam_text(seq: &SeamSequence) -> String {
    let mut s = String::new();
    for seg in &seq.segments {
        let [a, b, c] = seg.head;
        let [d, e, f] = seg.tail;
        s.push_str(&format!("{a} {b} {c} {d} {e} {f}\n"));
    }
    s
}
