use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::sequence::SeamSequence;
use crate::error::{Error, Result};
use crate::mesh::spatial::KdTree;
use crate::mesh::topology::edge_key;
use crate::mesh::{build_edge_topology, dist2, Mesh};

/// Seam endpoints snapped to vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Snapped {
    pub pairs: Vec<(usize, usize)>,
    /// Segments whose endpoints landed on the same vertex.
    pub dropped: usize,
}

/// Maps every endpoint to its nearest vertex, ties to the lowest index.
pub fn snap_to_mesh(seq: &SeamSequence, mesh: &Mesh) -> Result<Snapped> {
    if mesh.vertices.is_empty() {
        return Err(Error::Domain("cannot snap to a mesh without vertices".into()));
    }
    let tree = KdTree::new(&mesh.vertices);
    let near = |p| tree.nearest(p).expect("non-empty tree").0;
    let mut out = Snapped::default();
    for (i, s) in seq.segments.iter().enumerate() {
        let (a, b) = (near(s.head), near(s.tail));
        if a == b {
            log::warn!("seam segment {i} collapses onto vertex {a}; dropped");
            out.dropped += 1;
        } else {
            out.pairs.push((a, b));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest edge path from `from` to `to` under Euclidean edge lengths, as a
/// vertex list. Equal-cost alternatives resolve to the smaller predecessor.
pub fn geodesic_connect(from: usize, to: usize, mesh: &Mesh) -> Result<Vec<usize>> {
    let n = mesh.vertices.len();
    for v in [from, to] {
        if v >= n {
            return Err(Error::Domain(format!("vertex {v} outside mesh of {n}")));
        }
    }
    let adj = build_edge_topology(mesh).adjacency();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Reverse((Dist(0.0), from)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == to {
            break;
        }
        for &v in &adj[u] {
            if done[v] {
                continue;
            }
            let nd = d + dist2(mesh.vertices[u], mesh.vertices[v]).sqrt();
            if nd < dist[v] || (nd == dist[v] && u < pred[v]) {
                dist[v] = nd;
                pred[v] = u;
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    if !done[to] {
        return Err(Error::NoPath { from, to });
    }
    let mut path = vec![to];
    while *path.last().expect("non-empty") != from {
        path.push(pred[*path.last().expect("non-empty")]);
    }
    path.reverse();
    Ok(path)
}

/// Snaps a seam sequence and connects each segment by a shortest edge path.
pub fn seam_paths(seq: &SeamSequence, mesh: &Mesh) -> Result<(Vec<Vec<usize>>, Snapped)> {
    let snapped = snap_to_mesh(seq, mesh)?;
    let paths = snapped
        .pairs
        .iter()
        .map(|&(a, b)| geodesic_connect(a, b, mesh))
        .collect::<Result<_>>()?;
    Ok((paths, snapped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CutReport {
    /// Distinct mesh edges named by the paths.
    pub path_edges: usize,
    /// Path edges with two faces that ended up on separate vertex copies.
    pub split_edges: usize,
    /// Vertices appended as copies.
    pub duplicated_vertices: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Splits the mesh along the given vertex paths.
///
/// Around every vertex, face corners stay together across edges that are not
/// cut; each extra corner group gets its own copy of the vertex.
pub fn cut_mesh(mesh: &Mesh, paths: &[Vec<usize>]) -> Result<(Mesh, CutReport)> {
    mesh.validate()?;
    let topo = build_edge_topology(mesh);
    let mut cut: HashSet<[usize; 2]> = HashSet::new();
    for path in paths {
        for w in path.windows(2) {
            if topo.find(w[0], w[1]).is_none() {
                return Err(Error::InvalidPath(w[0], w[1]));
            }
            cut.insert(edge_key(w[0], w[1]));
        }
    }

    // corner id = face_offset[f] + slot
    let mut offset = Vec::with_capacity(mesh.faces.len() + 1);
    offset.push(0);
    for f in &mesh.faces {
        offset.push(offset.last().expect("seeded") + f.len());
    }
    let corner_of = |f: usize, v: usize| offset[f] + mesh.faces[f].iter().position(|&x| x == v).expect("vertex in face");
    let mut parent: Vec<usize> = (0..offset[mesh.faces.len()]).collect();
    for (e, faces) in topo.edges.iter().zip(&topo.edge_faces) {
        if cut.contains(e) {
            continue;
        }
        for w in faces.windows(2) {
            for &v in e {
                let (a, b) = (find(&mut parent, corner_of(w[0], v)), find(&mut parent, corner_of(w[1], v)));
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut out = mesh.clone();
    let mut owner: Vec<Vec<(usize, usize)>> = vec![Vec::new(); mesh.vertices.len()];
    for (f, face) in mesh.faces.iter().enumerate() {
        for (slot, &v) in face.iter().enumerate() {
            let root = find(&mut parent, offset[f] + slot);
            let groups = &mut owner[v];
            let idx = match groups.iter().find(|(r, _)| *r == root) {
                Some(&(_, idx)) => idx,
                None => {
                    let idx = if groups.is_empty() {
                        v
                    } else {
                        out.vertices.push(mesh.vertices[v]);
                        out.vertices.len() - 1
                    };
                    groups.push((root, idx));
                    idx
                }
            };
            out.faces[f][slot] = idx;
        }
    }

    let split_edges = cut
        .iter()
        .filter(|e| {
            let i = topo.find(e[0], e[1]).expect("validated");
            topo.incidence[i] == 2 && {
                let [f, g] = [topo.edge_faces[i][0], topo.edge_faces[i][1]];
                let ends = |face: usize| {
                    let mut k: Vec<usize> = e.iter().map(|&v| out.faces[face][corner_of(face, v) - offset[face]]).collect();
                    k.sort_unstable();
                    k
                };
                ends(f) != ends(g)
            }
        })
        .count();
    let report = CutReport {
        path_edges: cut.len(),
        split_edges,
        duplicated_vertices: out.vertices.len() - mesh.vertices.len(),
    };
    Ok((out, report))
}
