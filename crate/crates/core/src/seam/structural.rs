use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{build_edge_topology, lerp, norm, sub, Mesh, Vec3};

pub const VERTEX_POINTS: usize = 30_720;
pub const EDGE_POINTS: usize = 30_720;

/// Points taken only from mesh vertices and along mesh edges.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSamples {
    pub vertex_points: Vec<Vec3>,
    pub edge_points: Vec<Vec3>,
}

impl StructuralSamples {
    pub fn len(&self) -> usize {
        self.vertex_points.len() + self.edge_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `total` picks over `n` items: each item `total / n` times, the remainder
/// on distinct random items. More items than picks gives a random subset.
fn vertex_picks(n: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(total);
    for _ in 0..total / n {
        out.extend(0..n);
    }
    let mut extra = sample(rng, n, total % n).into_vec();
    extra.sort_unstable();
    out.extend(extra);
    out
}

/// Per-edge point counts proportional to length, each at least 1 when the
/// budget allows, summing to exactly `total`.
pub fn allocate_edge_points(lengths: &[f64], total: usize) -> Vec<usize> {
    let n = lengths.len();
    if n == 0 {
        return Vec::new();
    }
    let sum: f64 = lengths.iter().sum();
    let quota: Vec<f64> = if sum > 0.0 {
        lengths.iter().map(|l| total as f64 * l / sum).collect()
    } else {
        vec![total as f64 / n as f64; n]
    };
    let floor = usize::from(n <= total);
    let mut k: Vec<usize> = quota.iter().map(|q| (q.round() as usize).max(floor)).collect();
    let assigned: usize = k.iter().sum();
    // largest remainder first when adding, smallest first when removing
    let mut order: Vec<usize> = (0..n).collect();
    if assigned < total {
        order.sort_by(|&a, &b| (quota[b] - k[b] as f64).total_cmp(&(quota[a] - k[a] as f64)).then(a.cmp(&b)));
        for &i in order.iter().cycle().take(total - assigned) {
            k[i] += 1;
        }
    } else if assigned > total {
        let mut excess = assigned - total;
        while excess > 0 {
            order.sort_by(|&a, &b| (quota[a] - k[a] as f64).total_cmp(&(quota[b] - k[b] as f64)).then(a.cmp(&b)));
            let before = excess;
            for &i in &order {
                if excess == 0 {
                    break;
                }
                if k[i] > floor {
                    k[i] -= 1;
                    excess -= 1;
                }
            }
            assert!(excess < before, "edge allocation cannot shrink");
        }
    }
    k
}

/// `k` points at the midpoints of `k` equal parts of `a..b`.
pub fn edge_samples(a: Vec3, b: Vec3, k: usize) -> impl Iterator<Item = Vec3> {
    (0..k).map(move |j| lerp(a, b, (j as f64 + 0.5) / k as f64))
}

/// Structural point sample of `mesh`; only the vertex remainder is random.
pub fn sample_structural(mesh: &Mesh, seed: u64) -> Result<StructuralSamples> {
    let n = mesh.vertices.len();
    if n == 0 {
        return Err(Error::Domain("structural sampling of a mesh without vertices".into()));
    }
    mesh.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertex_points: Vec<Vec3> = vertex_picks(n, VERTEX_POINTS, &mut rng)
        .into_iter()
        .map(|i| mesh.vertices[i])
        .collect();

    let topo = build_edge_topology(mesh);
    let edge_points = if topo.edges.is_empty() {
        vertex_picks(n, EDGE_POINTS, &mut rng)
            .into_iter()
            .map(|i| mesh.vertices[i])
            .collect()
    } else {
        let lengths: Vec<f64> = topo
            .edges
            .iter()
            .map(|&[a, b]| norm(sub(mesh.vertices[b], mesh.vertices[a])))
            .collect();
        let counts = allocate_edge_points(&lengths, EDGE_POINTS);
        let mut pts = Vec::with_capacity(EDGE_POINTS);
        for (&[a, b], &k) in topo.edges.iter().zip(&counts) {
            pts.extend(edge_samples(mesh.vertices[a], mesh.vertices[b], k));
        }
        pts
    };
    Ok(StructuralSamples {
        vertex_points,
        edge_points,
    })
}
