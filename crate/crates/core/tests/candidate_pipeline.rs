use meshtopo::bpt::encode;
use meshtopo::mesh::{canonicalize, parse_obj, parse_xyz, sample_surface, write_obj};
use meshtopo::metrics::{evaluate, evaluate_batch};
use meshtopo::preference::{build_triplets, mask_phi, read_triplets, write_triplets, Candidate, CandidateSet};
use meshtopo::{BptConfig, MaskConfig, Mesh};

/// Closed quad cube, optionally missing its top face.
fn cube(open_top: bool) -> Mesh {
    let v = (0..8)
        .map(|i| [(i & 1) as f64 - 0.5, ((i >> 1) & 1) as f64 - 0.5, ((i >> 2) & 1) as f64 - 0.5])
        .collect();
    let mut f = vec![
        vec![0, 2, 3, 1],
        vec![4, 5, 7, 6],
        vec![0, 1, 5, 4],
        vec![2, 6, 7, 3],
        vec![0, 4, 6, 2],
        vec![1, 3, 7, 5],
    ];
    if open_top {
        f.remove(3);
    }
    Mesh::new(v, f)
}

#[test]
fn obj_text_roundtrip_keeps_quads() {
    let m = cube(false);
    let back = parse_obj(&write_obj(&m)).unwrap();
    assert_eq!(back.vertices, m.vertices);
    assert_eq!(back.faces, m.faces);
    assert_eq!(back.quad_count(), 6);
}

#[test]
fn closed_cube_beats_open_cube() {
    let cfg = BptConfig::default();
    let reference = sample_surface(&cube(false), 2000, 1).unwrap();
    let cloud = parse_xyz(
        &reference
            .points
            .iter()
            .map(|p| format!("{} {} {}\n", p[0], p[1], p[2]))
            .collect::<String>(),
    )
    .unwrap();

    let closed = canonicalize(&cube(false), &cfg.grid()).unwrap();
    let open = canonicalize(&cube(true), &cfg.grid()).unwrap();
    let a = evaluate("closed", &closed, &cloud, 2000, 2).unwrap();
    let b = evaluate("open", &open, &cloud, 2000, 2).unwrap();
    assert_eq!(a.ber, 0.0);
    assert!(b.ber > 0.0);

    // batch evaluation keeps input order and matches the single calls
    let batch = evaluate_batch(&[("closed".into(), closed.clone()), ("open".into(), open.clone())], &cloud, 2000, 2);
    assert_eq!(batch[0].as_ref().unwrap(), &a);
    assert_eq!(batch[1].as_ref().unwrap(), &b);

    let mask = MaskConfig::default();
    let set = CandidateSet {
        condition_id: "cube".into(),
        candidates: vec![
            Candidate { id: "closed".into(), tokens: encode(&closed, &cfg).unwrap(), report: a.clone() },
            Candidate { id: "open".into(), tokens: encode(&open, &cfg).unwrap(), report: b.clone() },
        ],
    };
    let triplets = build_triplets(&set, &cfg, &mask).unwrap();
    let dominates = a.ber < b.ber && a.ts > b.ts && a.hd < b.hd;
    assert_eq!(triplets.len(), usize::from(dominates));
    for t in &triplets {
        assert_eq!(t.winner.mask, mask_phi(&set.candidates[0].tokens, &closed, &mask, &cfg).unwrap());
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    write_triplets(&path, &triplets).unwrap();
    let back = read_triplets(&path).unwrap();
    assert_eq!(back.len(), triplets.len());
    for (x, y) in back.iter().zip(&triplets) {
        assert_eq!((&x.winner.tokens, &x.winner.mask), (&y.winner.tokens, &y.winner.mask));
    }
}

#[test]
fn square_cube_faces_are_high_quality() {
    let cfg = BptConfig::default();
    let m = canonicalize(&cube(false), &cfg.grid()).unwrap();
    let seq = encode(&m, &cfg).unwrap();
    let phi = mask_phi(&seq, &m, &MaskConfig::default(), &cfg).unwrap();
    assert_eq!(phi.len(), seq.len());
    assert_eq!(phi.ones(), seq.len());
}
