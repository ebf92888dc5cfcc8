use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::mesh::{Mesh, QuantGrid};

/// One face of a patch: the step from the previous peripheral to `end`,
/// optionally through a quad's far corner `mid`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub face: usize,
    pub mid: Option<usize>,
    pub end: usize,
}

/// Chain of faces sharing consecutive peripherals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub closed: bool,
    pub start: usize,
    pub steps: Vec<Step>,
}

impl Run {
    /// Peripheral vertices in emission order (a closed ring omits its repeat).
    pub fn peripherals(&self) -> Vec<usize> {
        let mut out = vec![self.start];
        for (i, s) in self.steps.iter().enumerate() {
            out.extend(s.mid);
            if !(self.closed && i + 1 == self.steps.len()) {
                out.push(s.end);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub center: usize,
    pub runs: Vec<Run>,
}

impl Patch {
    pub fn faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs.iter().flat_map(|r| r.steps.iter().map(|s| s.face))
    }

    pub fn face_count(&self) -> usize {
        self.runs.iter().map(|r| r.steps.len()).sum()
    }

    pub fn peripherals(&self) -> Vec<usize> {
        self.runs.iter().flat_map(|r| r.peripherals()).collect()
    }

    pub fn to_token(&self, mesh: &Mesh, grid: &QuantGrid) -> PatchToken {
        PatchToken {
            center: grid.quantize_point(mesh.vertices[self.center]),
            peripherals: self
                .peripherals()
                .into_iter()
                .map(|v| grid.quantize_point(mesh.vertices[v]))
                .collect(),
        }
    }
}

/// Quantized view of a patch: center then ordered peripherals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchToken {
    pub center: [u32; 3],
    pub peripherals: Vec<[u32; 3]>,
}

/// Greedy patch cover of a canonical mesh.
///
/// Repeatedly takes the vertex with the most uncovered incident faces (ties
/// to the lowest index) and groups those faces into one patch.
pub fn build_patches(mesh: &Mesh) -> Vec<Patch> {
    let n = mesh.vertices.len();
    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (fi, f) in mesh.faces.iter().enumerate() {
        for &v in f {
            vertex_faces[v].push(fi);
        }
    }
    let mut open: Vec<usize> = vertex_faces.iter().map(Vec::len).collect();
    let mut covered = vec![false; mesh.faces.len()];
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = open
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(v, &c)| (c, Reverse(v)))
        .collect();

    let mut patches = Vec::new();
    while let Some((count, Reverse(center))) = heap.pop() {
        if count != open[center] || count == 0 {
            continue;
        }
        let faces: Vec<usize> = vertex_faces[center]
            .iter()
            .copied()
            .filter(|&f| !covered[f])
            .collect();
        for &f in &faces {
            covered[f] = true;
            for &v in &mesh.faces[f] {
                open[v] -= 1;
                if v != center && open[v] > 0 {
                    heap.push((open[v], Reverse(v)));
                }
            }
        }
        patches.push(Patch {
            center,
            runs: chain_runs(mesh, center, &faces),
        });
    }
    patches
}

/// Orders a center's faces into runs of shared consecutive peripherals.
fn chain_runs(mesh: &Mesh, center: usize, faces: &[usize]) -> Vec<Run> {
    // (face, start, mid, end) with the face rotated so the center comes first
    let mut pending: Vec<(usize, usize, Option<usize>, usize)> = faces
        .iter()
        .map(|&fi| {
            let f = &mesh.faces[fi];
            let k = f.iter().position(|&v| v == center).expect("center in face");
            let at = |i: usize| f[(k + i) % f.len()];
            if f.len() == 4 {
                (fi, at(1), Some(at(2)), at(3))
            } else {
                (fi, at(1), None, at(2))
            }
        })
        .collect();

    let mut runs = Vec::new();
    while !pending.is_empty() {
        // prefer a chain head: a face whose start no other face ends at
        let head = pending
            .iter()
            .enumerate()
            .filter(|(_, p)| !pending.iter().any(|q| q.3 == p.1))
            .min_by_key(|(_, p)| (p.1, p.0))
            .or_else(|| pending.iter().enumerate().min_by_key(|(_, p)| (p.1, p.0)))
            .map(|(i, _)| i)
            .expect("pending is non-empty");
        let (face, start, mid, end) = pending.remove(head);
        let mut steps = vec![Step { face, mid, end }];
        let mut cur = end;
        let mut closed = false;
        loop {
            if cur == start {
                closed = true;
                break;
            }
            let next = pending
                .iter()
                .enumerate()
                .filter(|(_, p)| p.1 == cur)
                .min_by_key(|(_, p)| p.0)
                .map(|(i, _)| i);
            match next {
                Some(i) => {
                    let (face, _, mid, end) = pending.remove(i);
                    steps.push(Step { face, mid, end });
                    cur = end;
                }
                None => break,
            }
        }
        runs.push(Run {
            closed,
            start,
            steps,
        });
    }
    runs
}
