use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{add, scale, sub, triangle_area, Mesh, PointCloud};
use crate::error::{Error, Result};

/// Area-weighted uniform samples on the surface; quads are split along 0-2.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud> {
    if mesh.faces.is_empty() {
        return Err(Error::Precondition("surface sampling needs at least one face".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("sample count must be >= 1".into()));
    }
    mesh.validate()?;
    let tris: Vec<[usize; 3]> = mesh.triangles().into_iter().map(|(t, _)| t).collect();
    let areas: Vec<f64> = tris
        .iter()
        .map(|t| triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]))
        .collect();
    let total: f64 = areas.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateArea);
    }
    let pick = WeightedIndex::new(&areas).map_err(|_| Error::DegenerateArea)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let t = tris[pick.sample(&mut rng)];
            let (a, b, c) = (mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
            let mut u: f64 = rng.gen();
            let mut v: f64 = rng.gen();
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            add(a, add(scale(sub(b, a), u), scale(sub(c, a), v)))
        })
        .collect();
    Ok(PointCloud { points })
}
