//! Mesh and point-cloud data model.

mod canon;
mod obj;
mod quant;
mod sample;
pub mod spatial;
pub(crate) mod topology;
mod xyz;

pub use canon::{canonicalize, canonicalize_with_report, is_canonical, Canonicalized};
pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use quant::{sort_key_yzx, QuantGrid, YzxKey};
pub use sample::sample_surface;
pub use topology::{build_edge_topology, EdgeTopology};
pub use xyz::{load_xyz, parse_xyz, save_xyz};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    add(a, scale(sub(b, a), t))
}

/// Area of the triangle `abc`.
pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm(cross(sub(b, a), sub(c, a)))
}

/// Indexed polygonal mesh with triangle and quad faces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Vec<usize>>,
    pub name: String,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Self {
        Mesh {
            vertices,
            faces,
            name: String::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Checks index range and face arity.
    pub fn validate(&self) -> Result<()> {
        for (fi, face) in self.faces.iter().enumerate() {
            if face.len() != 3 && face.len() != 4 {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} has {} vertices",
                    face.len()
                )));
            }
            for (k, &v) in face.iter().enumerate() {
                if v >= self.vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex {v} of {}",
                        self.vertices.len()
                    )));
                }
                if face[..k].contains(&v) {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} repeats vertex {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn quad_count(&self) -> usize {
        self.faces.iter().filter(|f| f.len() == 4).count()
    }

    /// Faces counted as triangles, a quad counting as two.
    pub fn triangle_equivalent_count(&self) -> usize {
        self.faces.iter().map(|f| f.len() - 2).sum()
    }

    /// Splits quads along their 0-2 diagonal.
    pub fn triangulate(&self) -> Mesh {
        Mesh {
            vertices: self.vertices.clone(),
            faces: triangulate_faces(&self.faces)
                .into_iter()
                .map(|t| t.to_vec())
                .collect(),
            name: self.name.clone(),
        }
    }

    /// Triangles of the 0-2 split, each tagged with its source face index.
    pub fn triangles(&self) -> Vec<([usize; 3], usize)> {
        let mut out = Vec::with_capacity(self.triangle_equivalent_count());
        for (fi, f) in self.faces.iter().enumerate() {
            out.push(([f[0], f[1], f[2]], fi));
            if f.len() == 4 {
                out.push(([f[0], f[2], f[3]], fi));
            }
        }
        out
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles()
            .iter()
            .map(|(t, _)| {
                triangle_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
            })
            .sum()
    }

    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        bounding_box(&self.vertices)
    }

    /// Uniformly scales and translates so the longest axis spans exactly [-1, 1].
    pub fn normalize_unit_cube(&self) -> Result<Mesh> {
        let (lo, hi) = self
            .bounding_box()
            .ok_or_else(|| Error::Precondition("normalize needs at least one vertex".into()))?;
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        if extent <= 0.0 {
            return Err(Error::DegenerateExtent);
        }
        let center = scale(add(lo, hi), 0.5);
        let s = 2.0 / extent;
        let vertices = self
            .vertices
            .iter()
            .map(|&v| {
                // clamping pins the extremes of the long axis against rounding drift
                scale(sub(v, center), s).map(|c| c.clamp(-1.0, 1.0))
            })
            .collect();
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            name: self.name.clone(),
        })
    }
}

pub(crate) fn triangulate_faces(faces: &[Vec<usize>]) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for f in faces {
        out.push([f[0], f[1], f[2]]);
        if f.len() == 4 {
            out.push([f[0], f[2], f[3]]);
        }
    }
    out
}

pub(crate) fn bounding_box(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

/// Unstructured point set in normalized space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl From<Vec<Vec3>> for PointCloud {
    fn from(points: Vec<Vec3>) -> Self {
        PointCloud { points }
    }
}
