//! Deterministic fixtures shared by the pipeline benchmarks.

use std::f64::consts::TAU;

use meshtopo::mesh::canonicalize;
use meshtopo::{BptConfig, Mesh};

/// `n × n` height field in quads, canonical under the default codec grid.
pub fn wavy_quad_grid(n: usize) -> Mesh {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let (x, z) = (i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5);
            v.push([x, 0.2 * (4.0 * x).sin() * (3.0 * z).cos(), z]);
        }
    }
    let mut f = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * (n + 1) + i;
            f.push(vec![a, a + 1, a + n + 2, a + n + 1]);
        }
    }
    canonicalize(&Mesh::new(v, f), &BptConfig::default().grid()).expect("grid fixture is valid")
}

/// Open triangulated tube; `around` vertices per ring.
pub fn tube(around: usize, rings: usize) -> Mesh {
    let mut v = Vec::with_capacity(around * rings);
    for r in 0..rings {
        for k in 0..around {
            let a = TAU * k as f64 / around as f64;
            v.push([0.5 * a.cos(), r as f64 / rings as f64, 0.5 * a.sin()]);
        }
    }
    let mut f = Vec::new();
    for r in 0..rings - 1 {
        for k in 0..around {
            let (a, b) = (r * around + k, r * around + (k + 1) % around);
            f.push(vec![a, b, b + around]);
            f.push(vec![a, b + around, a + around]);
        }
    }
    Mesh::new(v, f)
}

/// Vertex path along the tube's first generator.
pub fn tube_seam(around: usize, rings: usize) -> Vec<usize> {
    (0..rings).map(|r| r * around).collect()
}
