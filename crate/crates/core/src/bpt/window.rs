use std::ops::Range;

use super::codec::parse;
use super::{BptConfig, TokenKind, TokenSequence};
use crate::error::{Error, Result};

/// A training slice of a longer sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    /// Self-contained token sequence with re-based spans.
    pub seq: TokenSequence,
    /// Faces of the source (decode order) this window is responsible for.
    pub target: Range<usize>,
    /// Faces pulled in ahead of `target` by expanding to the patch start.
    pub prefix_faces: usize,
}

/// Slices the tokens for faces `[start_face, start_face + max_faces)`.
///
/// The slice begins at the control token of the patch holding `start_face`.
/// When the last face sits inside a closed ring, the following vertex pair is
/// kept and the ring's introducer is rewritten to its open form, so the
/// window decodes without the wrap-around face.
pub fn truncate_window(
    seq: &TokenSequence,
    max_faces: usize,
    start_face: usize,
    cfg: &BptConfig,
) -> Result<Window> {
    if max_faces == 0 {
        return Err(Error::Domain("max_faces must be >= 1".into()));
    }
    let parsed = parse(&seq.tokens, cfg)?;
    let n_faces = parsed.face_spans.len();
    if start_face >= n_faces {
        return Err(Error::Precondition(format!(
            "start face {start_face} beyond last face (count {n_faces})"
        )));
    }
    let end_face = (start_face + max_faces).min(n_faces);
    let (first_patch, _, _) = parsed.face_index[start_face];
    let begin = parsed.patch_spans[first_patch][0];

    let mut tokens: Vec<u32>;
    let (lp, lr, ls) = parsed.face_index[end_face - 1];
    let last_run = &parsed.patches[lp].runs[lr];
    let mut end = parsed.face_spans[end_face - 1][1];
    if last_run.closed && ls + 1 < last_run.steps.len() {
        end += 2;
        tokens = seq.tokens[begin..end].to_vec();
        let intro = last_run.intro - begin;
        tokens[intro] = match cfg.classify(tokens[intro]) {
            Some(TokenKind::PatchStart { .. }) => cfg.patch_start_token(false),
            Some(TokenKind::RunBreak { .. }) => cfg.run_break_token(false),
            _ => unreachable!("run intro is a control token"),
        };
    } else {
        tokens = seq.tokens[begin..end].to_vec();
    }

    let first_face_in_window = parsed
        .face_index
        .iter()
        .position(|&(p, _, _)| p == first_patch)
        .expect("patch has faces");
    let re = parse(&tokens, cfg)?;
    Ok(Window {
        seq: TokenSequence {
            tokens,
            patch_spans: re.patch_spans,
            face_spans: re.face_spans,
            vocab_size: seq.vocab_size,
        },
        target: start_face..end_face,
        prefix_faces: start_face - first_face_in_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpt::codec::decode_tokens;
    use crate::bpt::{decode, encode};
    use crate::mesh::{canonicalize, Mesh};

    fn strip(n: usize) -> Mesh {
        // zig-zag triangle strip with n faces
        let mut v = Vec::new();
        for i in 0..(n / 2 + 2) {
            v.push([i as f64 * 0.1 - 0.8, 0.0, 0.0]);
            v.push([i as f64 * 0.1 - 0.8, 0.2, 0.0]);
        }
        let mut f = Vec::new();
        for i in 0..n {
            let a = i;
            if i % 2 == 0 {
                f.push(vec![a, a + 2, a + 1]);
            } else {
                f.push(vec![a, a + 1, a + 2]);
            }
        }
        canonicalize(&Mesh::new(v, f), &BptConfig::default().grid()).unwrap()
    }

    fn closed_fan(k: usize) -> Mesh {
        let mut v = vec![[0.0, 0.0, 0.0]];
        for i in 0..k {
            let a = i as f64 * std::f64::consts::TAU / k as f64;
            v.push([0.5 * a.cos(), 0.1, 0.5 * a.sin()]);
        }
        let f = (0..k).map(|i| vec![0, 1 + i, 1 + (i + 1) % k]).collect();
        canonicalize(&Mesh::new(v, f), &BptConfig::default().grid()).unwrap()
    }

    #[test]
    fn full_window_is_identity() {
        let cfg = BptConfig::default();
        let seq = encode(&strip(10), &cfg).unwrap();
        let w = truncate_window(&seq, 100, 0, &cfg).unwrap();
        assert_eq!(w.seq, seq);
        assert_eq!(w.target, 0..10);
        assert_eq!(w.prefix_faces, 0);
    }

    #[test]
    fn middle_window_slices_encode_output() {
        let cfg = BptConfig::default();
        let m = strip(10);
        let seq = encode(&m, &cfg).unwrap();
        assert_eq!(seq.face_count(), 10);
        let w = truncate_window(&seq, 4, 3, &cfg).unwrap();
        // oracle: slice from the patch start of face 3 to the end of face 6
        let p = seq.patch_of_token(seq.face_spans[3][0]).unwrap();
        let from = seq.patch_spans[p][0];
        let to = seq.face_spans[6][1];
        assert_eq!(w.target, 3..7);
        let first_in_patch = seq.face_spans.iter().position(|s| s[0] >= from).unwrap();
        assert_eq!(w.prefix_faces, 3 - first_in_patch);
        let full = decode(&seq, &cfg).unwrap();
        let part = decode(&w.seq, &cfg).unwrap();
        assert_eq!(part.faces.len(), w.prefix_faces + 4);
        // every decoded window face is a face of the full mesh
        let key = |m: &Mesh, f: &Vec<usize>| {
            let mut k: Vec<[u32; 3]> = f.iter().map(|&i| cfg.grid().quantize_point(m.vertices[i])).collect();
            k.sort();
            k
        };
        let full_keys: Vec<_> = full.faces.iter().map(|f| key(&full, f)).collect();
        for f in &part.faces {
            assert!(full_keys.contains(&key(&part, f)));
        }
        if w.seq.tokens.len() == to - from {
            assert_eq!(w.seq.tokens, seq.tokens[from..to]);
        }
    }

    #[test]
    fn cut_closed_ring_decodes_without_wrap() {
        let cfg = BptConfig::default();
        let m = closed_fan(6);
        let seq = encode(&m, &cfg).unwrap();
        let w = truncate_window(&seq, 3, 0, &cfg).unwrap();
        assert_eq!(w.seq.tokens[0], cfg.patch_start_token(false));
        assert_eq!(w.seq.tokens[1..], seq.tokens[1..w.seq.len()]);
        let part = decode_tokens(&w.seq.tokens, &cfg).unwrap();
        assert_eq!(part.faces.len(), 3);
        // finishing the ring needs no rewrite
        let w = truncate_window(&seq, 6, 0, &cfg).unwrap();
        assert_eq!(w.seq, seq);
    }

    #[test]
    fn errors() {
        let cfg = BptConfig::default();
        let seq = encode(&strip(4), &cfg).unwrap();
        assert!(matches!(truncate_window(&seq, 0, 0, &cfg), Err(Error::Domain(_))));
        assert!(matches!(truncate_window(&seq, 2, 4, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn consecutive_windows_partition_faces() {
        let cfg = BptConfig::default();
        for (m, k) in [(strip(17), 4), (closed_fan(7), 2), (strip(9), 1)] {
            let seq = encode(&m, &cfg).unwrap();
            let mut seen = vec![0; seq.face_count()];
            let mut start = 0;
            while start < seq.face_count() {
                let w = truncate_window(&seq, k, start, &cfg).unwrap();
                assert_eq!(w.seq.face_count(), w.prefix_faces + w.target.len());
                decode(&w.seq, &cfg).unwrap();
                for f in w.target.clone() {
                    seen[f] += 1;
                }
                start = w.target.end;
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
