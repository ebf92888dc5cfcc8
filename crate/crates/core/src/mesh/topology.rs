use std::collections::HashMap;

use super::Mesh;

/// Undirected edge table of a mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeTopology {
    /// Edges as `[low, high]` vertex pairs, sorted.
    pub edges: Vec<[usize; 2]>,
    /// Number of faces incident to each edge.
    pub incidence: Vec<usize>,
    /// Number of distinct edges touching each vertex.
    pub vertex_degree: Vec<usize>,
    /// Incident face indices per edge, ascending.
    pub edge_faces: Vec<Vec<usize>>,
    lookup: HashMap<[usize; 2], usize>,
}

impl EdgeTopology {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&edge_key(a, b)).copied()
    }

    pub fn boundary_count(&self) -> usize {
        self.incidence.iter().filter(|&&c| c == 1).count()
    }

    pub fn nonmanifold_count(&self) -> usize {
        self.incidence.iter().filter(|&&c| c >= 3).count()
    }

    /// Per-vertex flag: touches an edge with exactly one incident face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertex_degree.len()];
        for (e, &c) in self.edges.iter().zip(&self.incidence) {
            if c == 1 {
                b[e[0]] = true;
                b[e[1]] = true;
            }
        }
        b
    }

    /// Neighbour lists, ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_degree.len()];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Cyclic edges of a face.
pub(crate) fn face_edges(face: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..face.len()).map(move |i| (face[i], face[(i + 1) % face.len()]))
}

pub fn build_edge_topology(mesh: &Mesh) -> EdgeTopology {
    let mut faces_of: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (fi, face) in mesh.faces.iter().enumerate() {
        for (a, b) in face_edges(face) {
            faces_of.entry(edge_key(a, b)).or_default().push(fi);
        }
    }
    let mut entries: Vec<([usize; 2], Vec<usize>)> = faces_of.into_iter().collect();
    entries.sort_unstable_by_key(|(e, _)| *e);

    let mut vertex_degree = vec![0; mesh.vertices.len()];
    let mut edges = Vec::with_capacity(entries.len());
    let mut incidence = Vec::with_capacity(entries.len());
    let mut edge_faces = Vec::with_capacity(entries.len());
    let mut lookup = HashMap::with_capacity(entries.len());
    for (i, (e, fs)) in entries.into_iter().enumerate() {
        vertex_degree[e[0]] += 1;
        vertex_degree[e[1]] += 1;
        lookup.insert(e, i);
        edges.push(e);
        incidence.push(fs.len());
        edge_faces.push(fs);
    }
    EdgeTopology {
        edges,
        incidence,
        vertex_degree,
        edge_faces,
        lookup,
    }
}
