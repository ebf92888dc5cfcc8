use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::PointCloud;

pub const DEFAULT_VOXEL_RESOLUTION: usize = 8;

/// Fixed-length summary of a conditioning point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionEmbedding {
    pub values: Vec<f64>,
}

impl ConditionEmbedding {
    pub fn zeros(len: usize) -> Self {
        ConditionEmbedding { values: vec![0.0; len] }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite condition value".into()));
        }
        Ok(ConditionEmbedding { values })
    }

    /// Occupied voxels of `[-1, 1]³` at `resolution` cells per axis, hashed into
    /// `buckets` counters and normalized to sum to 1.
    pub fn from_cloud(cloud: &PointCloud, buckets: usize, resolution: usize) -> Result<Self> {
        if buckets == 0 || resolution == 0 {
            return Err(Error::Domain("buckets and resolution must be positive".into()));
        }
        let cell = |x: f64| -> Result<u64> {
            if !x.is_finite() {
                return Err(Error::Domain("non-finite point coordinate".into()));
            }
            let c = ((x + 1.0) * 0.5 * resolution as f64).floor();
            Ok(c.clamp(0.0, (resolution - 1) as f64) as u64)
        };
        let mut voxels = Vec::with_capacity(cloud.len());
        for p in &cloud.points {
            let (x, y, z) = (cell(p[0])?, cell(p[1])?, cell(p[2])?);
            voxels.push((x * resolution as u64 + y) * resolution as u64 + z);
        }
        voxels.sort_unstable();
        voxels.dedup();
        let mut values = vec![0.0; buckets];
        for &v in &voxels {
            values[(splitmix64(v) % buckets as u64) as usize] += 1.0;
        }
        if !voxels.is_empty() {
            let n = voxels.len() as f64;
            values.iter_mut().for_each(|x| *x /= n);
        }
        Ok(ConditionEmbedding { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.to_vec())
    }

    #[test]
    fn fixed_length_and_normalized() {
        let c = cloud(&[[0.0, 0.0, 0.0], [0.9, -0.9, 0.1], [0.91, -0.91, 0.11]]);
        let e = ConditionEmbedding::from_cloud(&c, 16, 8).unwrap();
        assert_eq!(e.len(), 16);
        // two distinct voxels
        assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(e.values.iter().all(|&v| v == 0.0 || v == 0.5 || v == 1.0));
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = cloud(&[[0.1, 0.2, 0.3], [-0.5, 0.5, 0.0], [1.0, 1.0, 1.0]]);
        let b = cloud(&[[1.0, 1.0, 1.0], [0.1, 0.2, 0.3], [-0.5, 0.5, 0.0]]);
        let ea = ConditionEmbedding::from_cloud(&a, 32, 8).unwrap();
        assert_eq!(ea, ConditionEmbedding::from_cloud(&a, 32, 8).unwrap());
        assert_eq!(ea, ConditionEmbedding::from_cloud(&b, 32, 8).unwrap());
    }

    #[test]
    fn empty_cloud_is_zero() {
        let e = ConditionEmbedding::from_cloud(&cloud(&[]), 4, 8).unwrap();
        assert_eq!(e, ConditionEmbedding::zeros(4));
        assert!(ConditionEmbedding::from_cloud(&cloud(&[[f64::NAN, 0.0, 0.0]]), 4, 8).is_err());
    }
}
