use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Uniform quantization grid over `[lo, hi]` with `levels` bins per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantGrid {
    pub levels: u32,
    pub lo: f64,
    pub hi: f64,
}

impl Default for QuantGrid {
    fn default() -> Self {
        QuantGrid {
            levels: 1024,
            lo: -1.0,
            hi: 1.0,
        }
    }
}

impl QuantGrid {
    pub fn new(levels: u32) -> Result<Self> {
        let g = QuantGrid {
            levels,
            ..Default::default()
        };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Domain(format!("levels must be >= 2, got {}", self.levels)));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Domain("grid needs finite lo < hi".into()));
        }
        Ok(())
    }

    fn steps(&self) -> f64 {
        f64::from(self.levels - 1)
    }

    /// Clamps `c` into the grid range, then rounds half-up to the nearest bin.
    pub fn quantize(&self, c: f64) -> u32 {
        let c = if c.is_nan() { self.lo } else { c.clamp(self.lo, self.hi) };
        let t = (c - self.lo) / (self.hi - self.lo) * self.steps();
        ((t + 0.5).floor() as u32).min(self.levels - 1)
    }

    pub fn dequantize(&self, bin: u32) -> Result<f64> {
        if bin >= self.levels {
            return Err(Error::Domain(format!(
                "bin {bin} outside [0, {}]",
                self.levels - 1
            )));
        }
        Ok(self.dequantize_unchecked(bin))
    }

    pub(crate) fn dequantize_unchecked(&self, bin: u32) -> f64 {
        if bin == self.levels - 1 {
            return self.hi;
        }
        self.lo + f64::from(bin) / self.steps() * (self.hi - self.lo)
    }

    pub fn quantize_point(&self, p: Vec3) -> [u32; 3] {
        [self.quantize(p[0]), self.quantize(p[1]), self.quantize(p[2])]
    }

    pub fn dequantize_point(&self, b: [u32; 3]) -> Result<Vec3> {
        Ok([self.dequantize(b[0])?, self.dequantize(b[1])?, self.dequantize(b[2])?])
    }

    /// Worst-case round-trip error for an in-range coordinate.
    pub fn half_bin(&self) -> f64 {
        (self.hi - self.lo) / (2.0 * self.steps())
    }
}

/// Lexicographic `(y, z, x)` ordering key with a total order on floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YzxKey(pub [f64; 3]);

impl Eq for YzxKey {}

impl PartialOrd for YzxKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for YzxKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0[0]
            .total_cmp(&other.0[0])
            .then(self.0[1].total_cmp(&other.0[1]))
            .then(self.0[2].total_cmp(&other.0[2]))
    }
}

pub fn sort_key_yzx(v: Vec3) -> YzxKey {
    YzxKey([v[1], v[2], v[0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_endpoints_and_midpoint() {
        let g = QuantGrid::default();
        assert_eq!(g.quantize(-1.0), 0);
        assert_eq!(g.quantize(1.0), 1023);
        // 511.5 rounds up
        assert_eq!(g.quantize(0.0), 512);
        assert_eq!(g.quantize(-7.0), 0);
        assert_eq!(g.quantize(3.0), 1023);
    }

    #[test]
    fn dequantize_endpoints() {
        let g = QuantGrid::default();
        assert_eq!(g.dequantize(0).unwrap(), -1.0);
        assert_eq!(g.dequantize(1023).unwrap(), 1.0);
        assert!(matches!(g.dequantize(1024), Err(Error::Domain(_))));
        let c = 0.3333;
        assert!((g.dequantize(g.quantize(c)).unwrap() - c).abs() <= 1.0 / 1023.0);
    }

    #[test]
    fn invalid_grid() {
        assert!(QuantGrid::new(1).is_err());
        let g = QuantGrid {
            levels: 8,
            lo: 1.0,
            hi: 1.0,
        };
        assert!(g.check().is_err());
    }

    #[test]
    fn yzx_sorting() {
        let mut pts = vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        pts.sort_by_key(|p| sort_key_yzx(*p));
        assert_eq!(pts, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(sort_key_yzx([0.0, -1.0, 5.0]) < sort_key_yzx([0.0, 0.0, 0.0]));

        // stable for equal keys
        let mut tagged = [([0.0, 0.0, 0.0], 'a'), ([0.0, 0.0, 0.0], 'b'), ([-1.0, 0.0, 0.0], 'c')];
        tagged.sort_by_key(|(p, _)| sort_key_yzx(*p));
        let order: String = tagged.iter().map(|(_, t)| *t).collect();
        assert_eq!(order, "cab");
    }

    proptest! {
        #[test]
        fn roundtrip_within_half_bin(c in -1.0f64..=1.0, levels in 2u32..4096) {
            let g = QuantGrid::new(levels).unwrap();
            let b = g.quantize(c);
            prop_assert!(b < levels);
            let back = g.dequantize(b).unwrap();
            prop_assert!((back - c).abs() <= g.half_bin() * (1.0 + 1e-12));
        }

        #[test]
        fn bins_are_fixed_points(b in 0u32..1024) {
            let g = QuantGrid::default();
            prop_assert_eq!(g.quantize(g.dequantize(b).unwrap()), b);
        }
    }
}
