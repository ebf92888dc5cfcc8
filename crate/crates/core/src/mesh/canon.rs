use std::collections::HashMap;

use super::{Mesh, QuantGrid};
use crate::error::Result;

/// Result of [`canonicalize_with_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct Canonicalized {
    pub mesh: Mesh,
    /// Source indices of faces that collapsed below three distinct vertices.
    pub dropped_faces: Vec<usize>,
    /// Number of source vertices folded into an already-present bin.
    pub merged_vertices: usize,
}

/// Quantizes, merges, and orders a mesh into its canonical form.
///
/// Vertices are snapped to the grid, merged per bin and sorted by their
/// `(y, z, x)` bins. When the mesh has faces, vertices no face references are
/// discarded. Each face is rotated to start at its lowest index (winding kept)
/// and faces are sorted by index tuple.
pub fn canonicalize(mesh: &Mesh, grid: &QuantGrid) -> Result<Mesh> {
    Ok(canonicalize_with_report(mesh, grid)?.mesh)
}

pub fn canonicalize_with_report(mesh: &Mesh, grid: &QuantGrid) -> Result<Canonicalized> {
    mesh.validate()?;
    grid.check()?;

    let bins: Vec<[u32; 3]> = mesh.vertices.iter().map(|&v| grid.quantize_point(v)).collect();

    // first pass: merge bins and drop collapsed faces, indices in bin space
    let mut bin_ids: HashMap<[u32; 3], usize> = HashMap::new();
    let mut unique: Vec<[u32; 3]> = Vec::new();
    let vert_to_bin: Vec<usize> = bins
        .iter()
        .map(|b| {
            *bin_ids.entry(*b).or_insert_with(|| {
                unique.push(*b);
                unique.len() - 1
            })
        })
        .collect();
    let merged_vertices = bins.len() - unique.len();

    let mut dropped_faces = Vec::new();
    let mut faces_in_bins: Vec<Vec<usize>> = Vec::with_capacity(mesh.faces.len());
    for (fi, face) in mesh.faces.iter().enumerate() {
        let mut f: Vec<usize> = Vec::with_capacity(face.len());
        for &v in face {
            let b = vert_to_bin[v];
            if !f.contains(&b) {
                f.push(b);
            }
        }
        if f.len() < 3 {
            log::warn!("face {fi} collapsed to {} distinct vertices and was dropped", f.len());
            dropped_faces.push(fi);
        } else {
            faces_in_bins.push(f);
        }
    }

    let keep: Vec<bool> = if mesh.faces.is_empty() {
        vec![true; unique.len()]
    } else {
        let mut k = vec![false; unique.len()];
        for f in &faces_in_bins {
            for &b in f {
                k[b] = true;
            }
        }
        k
    };

    let mut order: Vec<usize> = (0..unique.len()).filter(|&b| keep[b]).collect();
    order.sort_by_key(|&b| {
        let [x, y, z] = unique[b];
        (y, z, x)
    });
    let mut new_index = vec![usize::MAX; unique.len()];
    for (ni, &b) in order.iter().enumerate() {
        new_index[b] = ni;
    }

    let vertices = order
        .iter()
        .map(|&b| {
            let [x, y, z] = unique[b];
            [
                grid.dequantize_unchecked(x),
                grid.dequantize_unchecked(y),
                grid.dequantize_unchecked(z),
            ]
        })
        .collect();

    let mut faces: Vec<Vec<usize>> = faces_in_bins
        .into_iter()
        .map(|f| {
            let mut f: Vec<usize> = f.into_iter().map(|b| new_index[b]).collect();
            rotate_to_min(&mut f);
            f
        })
        .collect();
    faces.sort();

    Ok(Canonicalized {
        mesh: Mesh {
            vertices,
            faces,
            name: mesh.name.clone(),
        },
        dropped_faces,
        merged_vertices,
    })
}

pub(crate) fn rotate_to_min(face: &mut [usize]) {
    if let Some((pos, _)) = face.iter().enumerate().min_by_key(|(_, &v)| v) {
        face.rotate_left(pos);
    }
}

/// True when `mesh` is already in the canonical form for `grid`.
pub fn is_canonical(mesh: &Mesh, grid: &QuantGrid) -> bool {
    match canonicalize(mesh, grid) {
        Ok(c) => c.vertices == mesh.vertices && c.faces == mesh.faces,
        Err(_) => false,
    }
}
