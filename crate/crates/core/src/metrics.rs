//! Candidate quality metrics: boundary edge ratio, topology score and
//! Hausdorff distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::spatial::KdTree;
use crate::mesh::{build_edge_topology, sample_surface, Mesh, PointCloud, Vec3};

pub const DEFAULT_HD_SAMPLES: usize = 10_000;

/// Quality triple for one candidate mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub id: String,
    pub ber: f64,
    pub ts: f64,
    pub hd: f64,
    #[serde(skip)]
    pub diagnostics: EdgeDiagnostics,
}

impl QualityReport {
    pub fn new(id: impl Into<String>, ber: f64, ts: f64, hd: f64) -> Self {
        QualityReport {
            id: id.into(),
            ber,
            ts,
            hd,
            diagnostics: EdgeDiagnostics::default(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ber.is_finite() && self.ts.is_finite() && self.hd.is_finite()
    }
}

/// Edge census behind the boundary edge ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeDiagnostics {
    pub edges: usize,
    pub boundary_edges: usize,
    /// Edges with three or more incident faces; counted as non-boundary.
    pub nonmanifold_edges: usize,
}

pub fn edge_diagnostics(mesh: &Mesh) -> EdgeDiagnostics {
    let topo = build_edge_topology(mesh);
    EdgeDiagnostics {
        edges: topo.edge_count(),
        boundary_edges: topo.boundary_count(),
        nonmanifold_edges: topo.nonmanifold_count(),
    }
}

/// Fraction of edges with exactly one incident face.
pub fn boundary_edge_ratio(mesh: &Mesh) -> Result<f64> {
    mesh.validate()?;
    let d = edge_diagnostics(mesh);
    if d.edges == 0 {
        return Err(Error::Domain("boundary edge ratio of an edgeless mesh".into()));
    }
    Ok(d.boundary_edges as f64 / d.edges as f64)
}

/// The two terms of the topology score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyBreakdown {
    pub quad_ratio: f64,
    pub valence_regularity: f64,
    pub interior_vertices: usize,
}

impl TopologyBreakdown {
    pub fn score(&self) -> f64 {
        0.5 * self.quad_ratio + 0.5 * self.valence_regularity
    }
}

/// Quad ratio and regular-valence fraction over interior vertices.
///
/// An interior vertex touches faces and only edges shared by exactly two
/// faces. Its target valence is 4 if any incident face is a quad, else 6.
/// With no interior vertices the regularity term is 1.
pub fn topology_breakdown(mesh: &Mesh) -> Result<TopologyBreakdown> {
    mesh.validate()?;
    if mesh.faces.is_empty() {
        return Err(Error::Domain("topology score of a faceless mesh".into()));
    }
    let topo = build_edge_topology(mesh);
    let n = mesh.vertices.len();
    let mut irregular_edge = vec![false; n];
    for (e, &c) in topo.edges.iter().zip(&topo.incidence) {
        if c != 2 {
            irregular_edge[e[0]] = true;
            irregular_edge[e[1]] = true;
        }
    }
    let mut touches_quad = vec![false; n];
    for f in mesh.faces.iter().filter(|f| f.len() == 4) {
        for &v in f {
            touches_quad[v] = true;
        }
    }
    let mut interior = 0usize;
    let mut regular = 0usize;
    for v in 0..n {
        if topo.vertex_degree[v] == 0 || irregular_edge[v] {
            continue;
        }
        interior += 1;
        let target = if touches_quad[v] { 4 } else { 6 };
        if topo.vertex_degree[v] == target {
            regular += 1;
        }
    }
    Ok(TopologyBreakdown {
        quad_ratio: mesh.quad_count() as f64 / mesh.faces.len() as f64,
        valence_regularity: if interior == 0 {
            1.0
        } else {
            regular as f64 / interior as f64
        },
        interior_vertices: interior,
    })
}

pub fn topology_score(mesh: &Mesh) -> Result<f64> {
    Ok(topology_breakdown(mesh)?.score())
}

/// Largest nearest-neighbour distance from any point of `from` into `to`.
pub fn directed_hausdorff(from: &[Vec3], to: &KdTree) -> f64 {
    from.par_iter()
        .map(|&p| to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2))
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// Symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff_points(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("hausdorff distance needs two non-empty point sets".into()));
    }
    let ta = KdTree::new(a);
    let tb = KdTree::new(b);
    Ok(directed_hausdorff(a, &tb).max(directed_hausdorff(b, &ta)))
}

/// Hausdorff distance between `samples` surface samples of the mesh and the cloud.
pub fn hausdorff_distance(mesh: &Mesh, cloud: &PointCloud, samples: usize, seed: u64) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::Domain("reference cloud is empty".into()));
    }
    let a = sample_surface(mesh, samples, seed)?;
    hausdorff_points(&a.points, &cloud.points)
}

/// Computes all three metrics for one candidate.
pub fn evaluate(
    id: impl Into<String>,
    mesh: &Mesh,
    cloud: &PointCloud,
    samples: usize,
    seed: u64,
) -> Result<QualityReport> {
    let ber = boundary_edge_ratio(mesh).map_err(|e| Error::metric("ber", e))?;
    let ts = topology_score(mesh).map_err(|e| Error::metric("ts", e))?;
    let hd = hausdorff_distance(mesh, cloud, samples, seed).map_err(|e| Error::metric("hd", e))?;
    Ok(QualityReport {
        id: id.into(),
        ber,
        ts,
        hd,
        diagnostics: edge_diagnostics(mesh),
    })
}

/// Evaluates candidates in parallel; output order follows input order.
pub fn evaluate_batch(
    candidates: &[(String, Mesh)],
    cloud: &PointCloud,
    samples: usize,
    seed: u64,
) -> Vec<Result<QualityReport>> {
    candidates
        .par_iter()
        .map(|(id, m)| evaluate(id.clone(), m, cloud, samples, seed))
        .collect()
}
