use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use meshtopo::mesh::triangle_area;
use meshtopo::seam::{
    cut_mesh, extract_charts, face_distortion, flatten_all, order_seams, parse_uv_obj, seam_paths, write_uv_obj,
};
use meshtopo::Mesh;

/// Open triangulated cylinder, `around` vertices per ring, `rings` rings.
fn cylinder(around: usize, rings: usize) -> Mesh {
    let mut v = Vec::new();
    for r in 0..rings {
        for k in 0..around {
            let a = TAU * k as f64 / around as f64;
            v.push([0.5 * a.cos(), r as f64 * 0.4 - 0.6, 0.5 * a.sin()]);
        }
    }
    let mut f = Vec::new();
    for r in 0..rings - 1 {
        for k in 0..around {
            let (a, b) = (r * around + k, r * around + (k + 1) % around);
            let (c, d) = (a + around, b + around);
            f.push(vec![a, b, d]);
            f.push(vec![a, d, c]);
        }
    }
    Mesh::new(v, f)
}

/// Independent census: (V - E + F, boundary loops), counting only used vertices.
fn census(m: &Mesh) -> (i64, usize) {
    let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut used = BTreeSet::new();
    for f in &m.faces {
        for i in 0..f.len() {
            let (a, b) = (f[i], f[(i + 1) % f.len()]);
            used.insert(a);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let chi = used.len() as i64 - edges.len() as i64 + m.faces.len() as i64;
    // walk boundary components through vertex adjacency
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&(a, b), &c) in &edges {
        if c == 1 {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut seen = BTreeSet::new();
    let mut loops = 0;
    for &s in adj.keys() {
        if seen.insert(s) {
            loops += 1;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &adj[&x] {
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
    }
    (chi, loops)
}

fn area(m: &Mesh) -> f64 {
    m.triangles()
        .iter()
        .map(|(t, _)| triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]))
        .sum()
}

#[test]
fn fixture_is_an_annulus() {
    assert_eq!(census(&cylinder(12, 5)), (0, 2));
}

#[test]
fn generator_cut_gives_one_disk() {
    let (around, rings) = (12, 5);
    let m = cylinder(around, rings);
    let path: Vec<usize> = (0..rings).map(|r| r * around).collect();
    let (cut, report) = cut_mesh(&m, &[path]).unwrap();

    assert_eq!(census(&cut), (1, 1));
    assert_eq!(cut.faces.len(), m.faces.len());
    assert!((area(&cut) - area(&m)).abs() < 1e-9);
    assert_eq!(report.duplicated_vertices, rings);

    let charts = extract_charts(&cut).unwrap();
    assert_eq!(charts.len(), 1);
    assert_eq!((charts[0].euler, charts[0].boundary_loops), (1, 1));
}

#[test]
fn seam_segments_drive_the_same_cut() {
    let (around, rings) = (12, 5);
    let m = cylinder(around, rings);
    let segs: Vec<_> = (0..rings - 1)
        .map(|r| (m.vertices[r * around], m.vertices[(r + 1) * around]))
        .collect();
    let seq = order_seams(&segs).unwrap();
    let (paths, snapped) = seam_paths(&seq, &m).unwrap();
    assert_eq!(snapped.dropped, 0);
    let (cut, _) = cut_mesh(&m, &paths).unwrap();
    assert_eq!(census(&cut), (1, 1));

    let charts = flatten_all(&cut).unwrap();
    let uv = charts[0].uv.as_ref().unwrap();
    for (t, _) in charts[0].mesh.triangles() {
        let (a, b, c) = (uv[t[0]], uv[t[1]], uv[t[2]]);
        assert!((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) > 0.0);
    }
    let d = face_distortion(&charts[0]).unwrap();
    assert!(d.mean.is_finite() && d.degenerate.is_empty());

    // the written UV OBJ reads back to the same energies
    let back = parse_uv_obj(&write_uv_obj(&charts).unwrap()).unwrap();
    let e = face_distortion(&back).unwrap();
    assert!((e.mean - d.mean).abs() < 1e-9);
}

#[test]
fn uncut_cylinder_refuses_to_flatten() {
    assert!(flatten_all(&cylinder(8, 3)).is_err());
}
