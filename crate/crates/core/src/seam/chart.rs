use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::topology::edge_key;
use crate::mesh::{build_edge_topology, cross, dist2, dot, norm, scale, sub, Mesh, Vec3};

pub type Uv = [f64; 2];

/// Edge-connected piece of a cut mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    /// Faces re-indexed over the chart's own vertices.
    pub mesh: Mesh,
    /// Source vertex of every chart vertex.
    pub vertex_map: Vec<usize>,
    /// Source face of every chart face.
    pub face_ids: Vec<usize>,
    pub euler: i64,
    pub boundary_loops: usize,
    /// One coordinate per chart vertex once flattened.
    pub uv: Option<Vec<Uv>>,
}

impl Chart {
    /// Wraps a whole mesh as one chart.
    pub fn from_mesh(mesh: Mesh) -> Chart {
        let (euler, boundary_loops) = topology_stats(&mesh);
        Chart {
            vertex_map: (0..mesh.vertices.len()).collect(),
            face_ids: (0..mesh.faces.len()).collect(),
            mesh,
            euler,
            boundary_loops,
            uv: None,
        }
    }

    pub fn is_disk(&self) -> bool {
        self.euler == 1 && self.boundary_loops == 1
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (a, b) = (find(parent, a), find(parent, b));
    parent[a.max(b)] = a.min(b);
}

/// `(V - E + F, boundary loop count)` over referenced vertices.
fn topology_stats(mesh: &Mesh) -> (i64, usize) {
    let topo = build_edge_topology(mesh);
    let used = topo.vertex_degree.iter().filter(|&&d| d > 0).count();
    let euler = used as i64 - topo.edge_count() as i64 + mesh.faces.len() as i64;
    let mut parent: Vec<usize> = (0..mesh.vertices.len()).collect();
    let mut on_boundary = vec![false; mesh.vertices.len()];
    for (e, &c) in topo.edges.iter().zip(&topo.incidence) {
        if c == 1 {
            on_boundary[e[0]] = true;
            on_boundary[e[1]] = true;
            union(&mut parent, e[0], e[1]);
        }
    }
    let loops = (0..mesh.vertices.len())
        .filter(|&v| on_boundary[v] && find(&mut parent, v) == v)
        .count();
    (euler, loops)
}

/// Face components joined across shared edges, ordered by lowest face index.
pub fn extract_charts(mesh: &Mesh) -> Result<Vec<Chart>> {
    mesh.validate()?;
    let topo = build_edge_topology(mesh);
    let mut parent: Vec<usize> = (0..mesh.faces.len()).collect();
    for faces in &topo.edge_faces {
        for w in faces.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in 0..mesh.faces.len() {
        let r = find(&mut parent, f);
        groups.entry(r).or_default().push(f);
    }
    Ok(groups
        .into_values()
        .map(|face_ids| {
            let mut local: HashMap<usize, usize> = HashMap::new();
            let mut vertex_map = Vec::new();
            let faces = face_ids
                .iter()
                .map(|&f| {
                    mesh.faces[f]
                        .iter()
                        .map(|&v| {
                            *local.entry(v).or_insert_with(|| {
                                vertex_map.push(v);
                                vertex_map.len() - 1
                            })
                        })
                        .collect()
                })
                .collect();
            let sub_mesh = Mesh::new(vertex_map.iter().map(|&v| mesh.vertices[v]).collect(), faces);
            let (euler, boundary_loops) = topology_stats(&sub_mesh);
            Chart {
                mesh: sub_mesh,
                vertex_map,
                face_ids,
                euler,
                boundary_loops,
                uv: None,
            }
        })
        .collect())
}

fn signed_area(a: Uv, b: Uv, c: Uv) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Isometric projection when every vertex lies on one plane and the
/// projected triangles keep their orientation.
fn planar_projection(mesh: &Mesh, tris: &[[usize; 3]]) -> Option<Vec<Uv>> {
    let p = &mesh.vertices;
    let mut n = [0.0; 3];
    for t in tris {
        let c = cross(sub(p[t[1]], p[t[0]]), sub(p[t[2]], p[t[0]]));
        n = [n[0] + c[0], n[1] + c[1], n[2] + c[2]];
    }
    let len = norm(n);
    if len == 0.0 {
        return None;
    }
    let n = scale(n, 1.0 / len);
    let (lo, hi) = mesh.bounding_box()?;
    let diag = dist2(lo, hi).sqrt();
    let origin = p[0];
    if p.iter().any(|&q| dot(n, sub(q, origin)).abs() > 1e-9 * diag) {
        return None;
    }
    // any unit vector orthogonal to n
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross(helper, n);
    let e1 = scale(e1, 1.0 / norm(e1));
    let e2 = cross(n, e1);
    let uv: Vec<Uv> = p.iter().map(|&q| [dot(e1, sub(q, origin)), dot(e2, sub(q, origin))]).collect();
    tris.iter()
        .all(|t| signed_area(uv[t[0]], uv[t[1]], uv[t[2]]) > 0.0)
        .then_some(uv)
}

/// The single boundary loop, walked along face orientation from its lowest vertex.
fn boundary_loop(mesh: &Mesh, tris: &[[usize; 3]]) -> Result<Vec<usize>> {
    let mut directed: HashMap<[usize; 2], usize> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            *directed.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if directed[&edge_key(a, b)] == 1 && next.insert(a, b).is_some() {
                return Err(Error::Topology(format!("boundary vertex {a} is pinched")));
            }
        }
    }
    let start = *next.keys().next().ok_or_else(|| Error::Topology("chart has no boundary".into()))?;
    let mut lp = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if lp.len() > next.len() {
            return Err(Error::Topology("boundary does not close".into()));
        }
        lp.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::Topology(format!("boundary breaks at vertex {cur}")))?;
    }
    if lp.len() != next.len() || mesh.vertices.len() < lp.len() {
        return Err(Error::Topology("boundary is not a single simple loop".into()));
    }
    Ok(lp)
}

/// Sparse rows of `(column, value)`.
struct Sparse {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stabilized bi-conjugate gradients; `None` when it stalls or runs out of iterations.
fn bicgstab(a: &Sparse, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let bnorm = dotv(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Some(x);
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..(10 * n + 100) {
        let rho_next = dotv(&r0, &r);
        if rho_next == 0.0 || omega == 0.0 {
            return None;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = a.mul(&p);
        let rv = dotv(&r0, &v);
        if rv == 0.0 {
            return None;
        }
        alpha = rho / rv;
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if dotv(&s, &s).sqrt() <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Some(x);
        }
        let t = a.mul(&s);
        let tt = dotv(&t, &t);
        if tt == 0.0 {
            return None;
        }
        omega = dotv(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if dotv(&r, &r).sqrt() <= tol * bnorm {
            return Some(x);
        }
    }
    None
}

/// Circle-boundary embedding with mean-value weights.
fn tutte(mesh: &Mesh, tris: &[[usize; 3]]) -> Result<Vec<Uv>> {
    let p = &mesh.vertices;
    let lp = boundary_loop(mesh, tris)?;
    let n = p.len();
    let mut uv = vec![[0.0; 2]; n];
    let mut fixed = vec![false; n];
    let perimeter: f64 = (0..lp.len())
        .map(|i| dist2(p[lp[i]], p[lp[(i + 1) % lp.len()]]).sqrt())
        .sum();
    if perimeter <= 0.0 {
        return Err(Error::Numeric("chart boundary has zero length".into()));
    }
    let mut s = 0.0;
    for i in 0..lp.len() {
        let th = TAU * s / perimeter;
        uv[lp[i]] = [th.cos(), th.sin()];
        fixed[lp[i]] = true;
        s += dist2(p[lp[i]], p[lp[(i + 1) % lp.len()]]).sqrt();
    }

    let interior: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
    if interior.is_empty() {
        return Ok(uv);
    }
    let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for t in tris {
        for k in 0..3 {
            let (i, j, l) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            if fixed[i] {
                continue;
            }
            let (a, b) = (sub(p[j], p[i]), sub(p[l], p[i]));
            let (la, lb) = (norm(a), norm(b));
            if la == 0.0 || lb == 0.0 {
                return Err(Error::Numeric(format!("zero-length edge at vertex {i}")));
            }
            let angle = (dot(a, b) / (la * lb)).clamp(-1.0, 1.0).acos();
            let h = (angle / 2.0).tan();
            *weights[i].entry(j).or_default() += h / la;
            *weights[i].entry(l).or_default() += h / lb;
        }
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &v) in interior.iter().enumerate() {
        slot[v] = k;
    }
    let mut rows = Vec::with_capacity(interior.len());
    let mut rhs = [vec![0.0; interior.len()], vec![0.0; interior.len()]];
    for (k, &i) in interior.iter().enumerate() {
        let total: f64 = weights[i].values().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numeric(format!("vertex {i} has no usable weights")));
        }
        let mut row = vec![(k, 1.0)];
        for (&j, &w) in &weights[i] {
            let lam = w / total;
            if fixed[j] {
                rhs[0][k] += lam * uv[j][0];
                rhs[1][k] += lam * uv[j][1];
            } else {
                row.push((slot[j], -lam));
            }
        }
        rows.push(row);
    }
    let a = Sparse { rows };
    for (axis, b) in rhs.iter().enumerate() {
        let x = bicgstab(&a, b, 1e-12).ok_or_else(|| Error::Numeric("flattening solve did not converge".into()))?;
        for (k, &v) in interior.iter().enumerate() {
            uv[v][axis] = x[k];
        }
    }
    Ok(uv)
}

/// Flattens a disk chart: planar charts are projected isometrically,
/// others get a circle-boundary mean-value embedding.
pub fn flatten_chart(chart: &Chart) -> Result<Chart> {
    if !chart.is_disk() {
        return Err(Error::Topology(format!(
            "chart is not a disk: euler characteristic {}, {} boundary loops",
            chart.euler, chart.boundary_loops
        )));
    }
    let tris: Vec<[usize; 3]> = chart.mesh.triangles().into_iter().map(|(t, _)| t).collect();
    let uv = match planar_projection(&chart.mesh, &tris) {
        Some(uv) => uv,
        None => tutte(&chart.mesh, &tris)?,
    };
    if let Some(i) = tris
        .iter()
        .position(|t| signed_area(uv[t[0]], uv[t[1]], uv[t[2]]).abs() <= 1e-15)
    {
        return Err(Error::Numeric(format!("flattened triangle {i} is degenerate")));
    }
    Ok(Chart {
        uv: Some(uv),
        ..chart.clone()
    })
}

/// Extracts and flattens every chart, in chart order.
pub fn flatten_all(mesh: &Mesh) -> Result<Vec<Chart>> {
    extract_charts(mesh)?.par_iter().map(flatten_chart).collect()
}

/// Per-triangle conformal energies of a flattened chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub per_face: Vec<f64>,
    pub mean: f64,
    /// Triangles whose map is singular; their energy is infinite.
    pub degenerate: Vec<usize>,
}

/// `σ1/σ2 + σ2/σ1 - 2` of the linear map taking triangle `p` onto `q`.
pub fn triangle_energy(p: [Vec3; 3], q: [Uv; 3]) -> f64 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let l = norm(e1);
    if l == 0.0 {
        return f64::INFINITY;
    }
    let x = scale(e1, 1.0 / l);
    let dx = dot(e2, x);
    let dy = norm(sub(e2, scale(x, dx)));
    if dy <= 1e-300 {
        return f64::INFINITY;
    }
    let u1 = [q[1][0] - q[0][0], q[1][1] - q[0][1]];
    let u2 = [q[2][0] - q[0][0], q[2][1] - q[0][1]];
    // J = [u1 u2] · [[l, dx], [0, dy]]⁻¹
    let (a, c) = (u1[0] / l, u1[1] / l);
    let (b, d) = ((u2[0] - a * dx) / dy, (u2[1] - c * dx) / dy);
    let (e, f, g, h) = ((a + d) / 2.0, (a - d) / 2.0, (c + b) / 2.0, (c - b) / 2.0);
    let qq = e.hypot(h);
    let rr = f.hypot(g);
    let (s1, s2) = (qq + rr, (qq - rr).abs());
    if s2 <= 1e-15 * s1 || s1 == 0.0 {
        return f64::INFINITY;
    }
    s1 / s2 + s2 / s1 - 2.0
}

pub fn face_distortion(chart: &Chart) -> Result<Distortion> {
    let uv = chart
        .uv
        .as_ref()
        .ok_or_else(|| Error::Precondition("chart has no UV coordinates".into()))?;
    if uv.len() != chart.mesh.vertices.len() {
        return Err(Error::Consistency("one UV per chart vertex required".into()));
    }
    let p = &chart.mesh.vertices;
    let per_face: Vec<f64> = chart
        .mesh
        .triangles()
        .iter()
        .map(|(t, _)| triangle_energy([p[t[0]], p[t[1]], p[t[2]]], [uv[t[0]], uv[t[1]], uv[t[2]]]))
        .collect();
    if per_face.is_empty() {
        return Err(Error::Precondition("chart has no faces".into()));
    }
    let degenerate = (0..per_face.len()).filter(|&i| per_face[i].is_infinite()).collect();
    let mean = per_face.iter().sum::<f64>() / per_face.len() as f64;
    Ok(Distortion {
        per_face,
        mean,
        degenerate,
    })
}

/// OBJ with one `vt` per vertex; charts are laid side by side in UV space.
pub fn write_uv_obj(charts: &[Chart]) -> Result<String> {
    let mut out = String::new();
    let mut base = 0usize;
    let mut shift = 0.0;
    let mut faces = String::new();
    for (ci, c) in charts.iter().enumerate() {
        let uv = c
            .uv
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("chart {ci} is not flattened")))?;
        let lo = uv.iter().map(|t| t[0]).fold(f64::INFINITY, f64::min);
        let hi = uv.iter().map(|t| t[0]).fold(f64::NEG_INFINITY, f64::max);
        for (v, t) in c.mesh.vertices.iter().zip(uv) {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2]).expect("string write");
            writeln!(out, "vt {} {}", t[0] - lo + shift, t[1]).expect("string write");
        }
        for f in &c.mesh.faces {
            faces.push('f');
            for &i in f {
                write!(faces, " {0}/{0}", base + i + 1).expect("string write");
            }
            faces.push('\n');
        }
        base += c.mesh.vertices.len();
        shift += (hi - lo) * 1.1 + 1e-3;
    }
    out.push_str(&faces);
    Ok(out)
}

fn resolve(raw: &str, count: usize, line: usize) -> Result<usize> {
    let i: i64 = raw.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad index {raw:?}"),
    })?;
    let idx = if i < 0 { count as i64 + i } else { i - 1 };
    if idx < 0 || idx as usize >= count {
        return Err(Error::Index { line, index: i, count });
    }
    Ok(idx as usize)
}

/// Reads an OBJ with texture coordinates on every face corner. Each distinct
/// `(v, vt)` pair becomes one chart vertex.
pub fn parse_uv_obj(text: &str) -> Result<Chart> {
    let mut pos: Vec<Vec3> = Vec::new();
    let mut tex: Vec<Uv> = Vec::new();
    let mut corner_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut uv = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        let mut it = body.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let nums = |it: std::str::SplitWhitespace<'_>, want: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = it
                .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Parse { line, msg: "bad number".into() })?;
            if v.len() < want {
                return Err(Error::Parse { line, msg: format!("expected {want} numbers") });
            }
            Ok(v)
        };
        match tag {
            "v" => {
                let v = nums(it, 3)?;
                pos.push([v[0], v[1], v[2]]);
            }
            "vt" => {
                let v = nums(it, 2)?;
                tex.push([v[0], v[1]]);
            }
            "f" => {
                let mut face = Vec::new();
                for c in it {
                    let mut parts = c.split('/');
                    let vi = resolve(parts.next().unwrap_or(""), pos.len(), line)?;
                    let ti = match parts.next() {
                        Some(t) if !t.is_empty() => resolve(t, tex.len(), line)?,
                        _ => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("corner {c:?} has no texture index"),
                            })
                        }
                    };
                    let id = *corner_ids.entry((vi, ti)).or_insert_with(|| {
                        vertices.push(pos[vi]);
                        uv.push(tex[ti]);
                        vertices.len() - 1
                    });
                    face.push(id);
                }
                if face.len() != 3 && face.len() != 4 {
                    return Err(Error::UnsupportedFace { line, arity: face.len() });
                }
                faces.push(face);
            }
            "vn" | "o" | "g" | "s" | "usemtl" | "mtllib" => {}
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unsupported record {other:?}"),
                })
            }
        }
    }
    let mesh = Mesh::new(vertices, faces);
    mesh.validate()?;
    let mut chart = Chart::from_mesh(mesh);
    chart.uv = Some(uv);
    Ok(chart)
}
