use meshtopo::bpt::{decode, encode, truncate_window};
use meshtopo::mesh::canonicalize;
use meshtopo::{BptConfig, Mesh};
use proptest::prelude::*;

/// Random soups of triangles and quads over a small vertex pool.
fn arb_soup() -> impl Strategy<Value = Mesh> {
    (4usize..40).prop_flat_map(|n| {
        let verts = prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), n);
        let faces = prop::collection::vec(
            prop::sample::subsequence((0..n).collect::<Vec<_>>(), 3..=4).prop_shuffle(),
            1..30,
        );
        (verts, faces).prop_map(|(v, f)| Mesh::new(v, f))
    })
}

/// Mixed tri/quad grid with jittered heights; `tri_mask` picks which cells split.
fn arb_grid() -> impl Strategy<Value = Mesh> {
    (2usize..7, 2usize..7).prop_flat_map(|(w, h)| {
        let heights = prop::collection::vec(-0.3f64..0.3, (w + 1) * (h + 1));
        let split = prop::collection::vec(any::<bool>(), w * h);
        (Just((w, h)), heights, split).prop_map(|((w, h), z, split)| {
            let mut v = Vec::new();
            for j in 0..=h {
                for i in 0..=w {
                    v.push([i as f64 / w as f64 - 0.5, z[j * (w + 1) + i], j as f64 / h as f64 - 0.5]);
                }
            }
            let mut f = Vec::new();
            for j in 0..h {
                for i in 0..w {
                    let a = j * (w + 1) + i;
                    let (b, c, d) = (a + 1, a + w + 2, a + w + 1);
                    if split[j * w + i] {
                        f.push(vec![a, b, c]);
                        f.push(vec![a, c, d]);
                    } else {
                        f.push(vec![a, b, c, d]);
                    }
                }
            }
            Mesh::new(v, f)
        })
    })
}

fn roundtrip(m: &Mesh) -> Result<(), TestCaseError> {
    let cfg = BptConfig::default();
    let c = canonicalize(m, &cfg.grid()).unwrap();
    let seq = encode(&c, &cfg).unwrap();
    prop_assert_eq!(seq.face_spans.len(), c.faces.len());
    prop_assert!(seq.tokens.iter().all(|&t| t < cfg.vocab_size()));
    prop_assert_eq!(decode(&seq, &cfg).unwrap(), c);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn soups_roundtrip(m in arb_soup()) {
        roundtrip(&m)?;
    }

    #[test]
    fn grids_roundtrip(m in arb_grid()) {
        roundtrip(&m)?;
    }

    #[test]
    fn windows_decode(m in arb_grid(), max_faces in 1usize..8, start in 0usize..64) {
        let cfg = BptConfig::default();
        let c = canonicalize(&m, &cfg.grid()).unwrap();
        let seq = encode(&c, &cfg).unwrap();
        let start = start % seq.face_spans.len();
        let w = truncate_window(&seq, max_faces, start, &cfg).unwrap();
        let part = decode(&w.seq, &cfg).unwrap();
        prop_assert_eq!(part.faces.len(), w.prefix_faces + w.target.len());
    }
}
