//! Blocked and patchified tokenization.
//!
//! Every vertex is written as a `(block, offset)` token pair: each quantized
//! axis splits into a coarse block index and a fine offset inside the block.
//! Faces are grouped into patches around high-valence centers; a patch is its
//! center followed by one or more runs of peripheral vertices, and each
//! consecutive peripheral pair closes a triangle with the center.
//!
//! Token layout for `B` blocks and `O` offsets per axis:
//!
//! | id                    | meaning                               |
//! |-----------------------|---------------------------------------|
//! | `0`                   | patch start, first run open           |
//! | `1 ..= B³`            | block id + 1                          |
//! | `B³+1 ..= B³+O³`      | offset id + B³ + 1                    |
//! | `B³+O³+1`             | patch start, first run a closed ring  |
//! | `B³+O³+2`             | new open run in the current patch     |
//! | `B³+O³+3`             | new closed run in the current patch   |
//! | `B³+O³+4`             | next peripheral is a quad's far corner|
//!
//! A closed ring omits its repeated first peripheral; the last face wraps
//! back to the run start.

mod codec;
mod patch;
mod record;
mod window;

pub use codec::{compression_ratio, decode, encode, parse, ParsedPatch, ParsedRun, Parsed};
pub use patch::{build_patches, Patch, PatchToken, Run, Step};
pub use record::{read_token_records, write_token_records, TokenRecord};
pub use window::{truncate_window, Window};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::QuantGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BptConfig {
    pub levels: u32,
    pub blocks_per_axis: u32,
    pub offsets_per_axis: u32,
}

impl Default for BptConfig {
    fn default() -> Self {
        BptConfig {
            levels: 1024,
            blocks_per_axis: 16,
            offsets_per_axis: 64,
        }
    }
}

/// Classified token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    PatchStart { closed: bool },
    RunBreak { closed: bool },
    Quad,
    Block(u32),
    Offset(u32),
}

impl BptConfig {
    /// Config with `blocks_per_axis` blocks; `levels` must be divisible by it.
    pub fn new(levels: u32, blocks_per_axis: u32) -> Result<Self> {
        if blocks_per_axis == 0 || !levels.is_multiple_of(blocks_per_axis) {
            return Err(Error::Domain(format!(
                "{levels} levels do not split into {blocks_per_axis} blocks"
            )));
        }
        let cfg = BptConfig {
            levels,
            blocks_per_axis,
            offsets_per_axis: levels / blocks_per_axis,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Domain("levels must be >= 2".into()));
        }
        if self.blocks_per_axis.checked_mul(self.offsets_per_axis) != Some(self.levels) {
            return Err(Error::Domain(format!(
                "blocks ({}) x offsets ({}) != levels ({})",
                self.blocks_per_axis, self.offsets_per_axis, self.levels
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> QuantGrid {
        QuantGrid {
            levels: self.levels,
            ..QuantGrid::default()
        }
    }

    pub fn block_count(&self) -> u32 {
        self.blocks_per_axis.pow(3)
    }

    pub fn offset_count(&self) -> u32 {
        self.offsets_per_axis.pow(3)
    }

    fn controls_base(&self) -> u32 {
        1 + self.block_count() + self.offset_count()
    }

    pub fn vocab_size(&self) -> u32 {
        self.controls_base() + 4
    }

    pub fn patch_start_token(&self, closed: bool) -> u32 {
        if closed {
            self.controls_base()
        } else {
            0
        }
    }

    pub fn run_break_token(&self, closed: bool) -> u32 {
        self.controls_base() + if closed { 2 } else { 1 }
    }

    pub fn quad_token(&self) -> u32 {
        self.controls_base() + 3
    }

    pub fn block_token(&self, block: u32) -> u32 {
        1 + block
    }

    pub fn offset_token(&self, offset: u32) -> u32 {
        1 + self.block_count() + offset
    }

    pub fn classify(&self, token: u32) -> Option<TokenKind> {
        let nb = self.block_count();
        let base = self.controls_base();
        Some(match token {
            0 => TokenKind::PatchStart { closed: false },
            t if t <= nb => TokenKind::Block(t - 1),
            t if t < base => TokenKind::Offset(t - 1 - nb),
            t if t == base => TokenKind::PatchStart { closed: true },
            t if t == base + 1 => TokenKind::RunBreak { closed: false },
            t if t == base + 2 => TokenKind::RunBreak { closed: true },
            t if t == base + 3 => TokenKind::Quad,
            _ => return None,
        })
    }

    /// Splits quantized bins into a row-major `(block, offset)` id pair.
    pub fn block_index(&self, bins: [u32; 3]) -> Result<(u32, u32)> {
        if let Some(b) = bins.iter().find(|&&b| b >= self.levels) {
            return Err(Error::Domain(format!("bin {b} outside [0, {})", self.levels)));
        }
        let (nb, no) = (self.blocks_per_axis, self.offsets_per_axis);
        let b = bins.map(|v| v / no);
        let o = bins.map(|v| v % no);
        Ok((
            (b[0] * nb + b[1]) * nb + b[2],
            (o[0] * no + o[1]) * no + o[2],
        ))
    }

    pub fn block_unindex(&self, block: u32, offset: u32) -> Result<[u32; 3]> {
        if block >= self.block_count() || offset >= self.offset_count() {
            return Err(Error::Domain(format!(
                "ids ({block}, {offset}) outside ({}, {})",
                self.block_count(),
                self.offset_count()
            )));
        }
        let (nb, no) = (self.blocks_per_axis, self.offsets_per_axis);
        let b = [block / (nb * nb), (block / nb) % nb, block % nb];
        let o = [offset / (no * no), (offset / no) % no, offset % no];
        Ok([0, 1, 2].map(|k| b[k] * no + o[k]))
    }
}

/// Encoded mesh: tokens plus their patch and face segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    /// Half-open token ranges, one per patch.
    pub patch_spans: Vec<[usize; 2]>,
    /// Half-open token ranges, one per face in decode order.
    pub face_spans: Vec<[usize; 2]>,
    pub vocab_size: u32,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.face_spans.len()
    }

    /// Index of the patch holding token `pos`.
    pub fn patch_of_token(&self, pos: usize) -> Option<usize> {
        let i = self.patch_spans.partition_point(|s| s[1] <= pos);
        (i < self.patch_spans.len() && self.patch_spans[i][0] <= pos).then_some(i)
    }
}
