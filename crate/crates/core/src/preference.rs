//! Strict-dominance ranking, preference triplets and the per-patch quality mask.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bpt::{decode, parse, BptConfig, TokenSequence};
use crate::error::{Error, Result};
use crate::mesh::{canonicalize, dot, norm, sub, triangle_area, Mesh, Vec3};
use crate::metrics::QualityReport;

/// Strict three-way dominance: lower BER, higher TS and lower HD.
pub fn dominates(a: &QualityReport, b: &QualityReport) -> bool {
    a.ber < b.ber && a.ts > b.ts && a.hd < b.hd
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub tokens: TokenSequence,
    pub report: QualityReport,
}

/// Candidates generated for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub condition_id: String,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub const DEFAULT_SIZE: usize = 8;

    pub fn validate(&self) -> Result<()> {
        if self.candidates.len() < 2 {
            return Err(Error::Precondition(format!(
                "condition {} has {} candidates, need >= 2",
                self.condition_id,
                self.candidates.len()
            )));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if self.candidates[..i].iter().any(|d| d.id == c.id) {
                return Err(Error::Consistency(format!("duplicate candidate id {}", c.id)));
            }
            if !c.report.is_finite() {
                return Err(Error::Domain(format!("candidate {} has a non-finite report", c.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    pub tau_quad: f64,
    pub tau_topo: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            tau_quad: 0.8,
            tau_topo: 0.5,
        }
    }
}

impl MaskConfig {
    pub fn check(&self) -> Result<()> {
        for (name, t) in [("tau_quad", self.tau_quad), ("tau_topo", self.tau_topo)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Domain(format!("{name} = {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-token binary mask, constant within each patch.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaskVector {
    pub bits: Vec<u8>,
}

impl MaskVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }
}

/// One side of a triplet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scored {
    #[serde(skip)]
    pub id: String,
    pub tokens: Vec<u32>,
    pub mask: MaskVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceTriplet {
    #[serde(rename = "cond")]
    pub condition_id: String,
    #[serde(rename = "win")]
    pub winner: Scored,
    #[serde(rename = "lose")]
    pub loser: Scored,
}

/// Quality of one face in `[0, 1]`.
///
/// Quads score 1 when every corner angle is within 45° of a right angle and
/// 0.5 otherwise. Triangles score `4√3·area / Σ edge²`, which is 1 for an
/// equilateral triangle.
pub fn face_quality(corners: &[Vec3]) -> f64 {
    match corners.len() {
        4 => {
            let square = (0..4).all(|i| {
                let p = corners[i];
                let a = sub(corners[(i + 3) % 4], p);
                let b = sub(corners[(i + 1) % 4], p);
                let (na, nb) = (norm(a), norm(b));
                if na == 0.0 || nb == 0.0 {
                    return false;
                }
                let angle = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0).acos();
                (angle - std::f64::consts::FRAC_PI_2).abs() <= std::f64::consts::FRAC_PI_4
            });
            if square {
                1.0
            } else {
                0.5
            }
        }
        3 => {
            let (a, b, c) = (corners[0], corners[1], corners[2]);
            let sq: f64 = [sub(b, a), sub(c, b), sub(a, c)].iter().map(|e| dot(*e, *e)).sum();
            if sq == 0.0 {
                return 0.0;
            }
            (4.0 * 3f64.sqrt() * triangle_area(a, b, c) / sq).min(1.0)
        }
        _ => 0.0,
    }
}

/// Per-patch verdict behind a mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchQuality {
    pub quad_ratio: f64,
    pub mean_face_quality: f64,
    pub high_quality: bool,
}

fn patch_qualities(tokens: &TokenSequence, bpt: &BptConfig, cfg: &MaskConfig) -> Result<(Vec<PatchQuality>, Vec<[usize; 2]>)> {
    cfg.check()?;
    let parsed = parse(&tokens.tokens, bpt)?;
    let grid = bpt.grid();
    let mut out = Vec::with_capacity(parsed.patches.len());
    for patch in &parsed.patches {
        let faces = patch.faces();
        let quads = faces.iter().filter(|f| f.len() == 4).count();
        let quality: f64 = faces
            .iter()
            .map(|f| {
                let corners: Vec<Vec3> = f
                    .iter()
                    .map(|&b| grid.dequantize_point(b))
                    .collect::<Result<_>>()?;
                Ok(face_quality(&corners))
            })
            .sum::<Result<f64>>()?;
        let quad_ratio = quads as f64 / faces.len() as f64;
        let mean_face_quality = quality / faces.len() as f64;
        out.push(PatchQuality {
            quad_ratio,
            mean_face_quality,
            high_quality: quad_ratio >= cfg.tau_quad && mean_face_quality >= cfg.tau_topo,
        });
    }
    Ok((out, parsed.patch_spans))
}

/// Per-patch quality verdicts of an encoded mesh.
pub fn patch_report(tokens: &TokenSequence, bpt: &BptConfig, cfg: &MaskConfig) -> Result<Vec<PatchQuality>> {
    Ok(patch_qualities(tokens, bpt, cfg)?.0)
}

fn mask_from_tokens(tokens: &TokenSequence, bpt: &BptConfig, cfg: &MaskConfig) -> Result<MaskVector> {
    let (verdicts, spans) = patch_qualities(tokens, bpt, cfg)?;
    let mut bits = vec![0u8; tokens.tokens.len()];
    for (q, span) in verdicts.iter().zip(&spans) {
        if q.high_quality {
            bits[span[0]..span[1]].fill(1);
        }
    }
    Ok(MaskVector { bits })
}

/// Quality mask over the patches of `tokens`, which must encode `mesh`.
pub fn mask_phi(tokens: &TokenSequence, mesh: &Mesh, cfg: &MaskConfig, bpt: &BptConfig) -> Result<MaskVector> {
    let decoded = decode(tokens, bpt)?;
    let expected = canonicalize(mesh, &bpt.grid())?;
    if decoded.vertices != expected.vertices || decoded.faces != expected.faces {
        return Err(Error::Consistency("token sequence does not encode the given mesh".into()));
    }
    let parsed = parse(&tokens.tokens, bpt)?;
    if parsed.patch_spans != tokens.patch_spans {
        return Err(Error::Consistency("stored patch spans disagree with the token stream".into()));
    }
    mask_from_tokens(tokens, bpt, cfg)
}

/// One triplet per ordered dominating pair, sorted by `(winner, loser)` id.
pub fn build_triplets(set: &CandidateSet, bpt: &BptConfig, cfg: &MaskConfig) -> Result<Vec<PreferenceTriplet>> {
    set.validate()?;
    let pairs: Vec<(usize, usize)> = set
        .candidates
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            set.candidates
                .iter()
                .enumerate()
                .filter(move |&(j, b)| i != j && dominates(&a.report, &b.report))
                .map(move |(j, _)| (i, j))
        })
        .collect();
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let masks: Vec<MaskVector> = set
        .candidates
        .iter()
        .map(|c| mask_from_tokens(&c.tokens, bpt, cfg))
        .collect::<Result<_>>()?;
    let side = |i: usize| Scored {
        id: set.candidates[i].id.clone(),
        tokens: set.candidates[i].tokens.tokens.clone(),
        mask: masks[i].clone(),
    };
    let mut out: Vec<PreferenceTriplet> = pairs
        .into_iter()
        .map(|(i, j)| PreferenceTriplet {
            condition_id: set.condition_id.clone(),
            winner: side(i),
            loser: side(j),
        })
        .collect();
    out.sort_by(|a, b| (&a.winner.id, &a.loser.id).cmp(&(&b.winner.id, &b.loser.id)));
    Ok(out)
}

pub fn read_triplets(path: impl AsRef<Path>) -> Result<Vec<PreferenceTriplet>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let t: PreferenceTriplet = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if t.winner.mask.len() != t.winner.tokens.len() || t.loser.mask.len() != t.loser.tokens.len() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "mask length differs from token count".into(),
            });
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_triplets(path: impl AsRef<Path>, triplets: &[PreferenceTriplet]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for t in triplets {
        writeln!(file, "{}", serde_json::to_string(t)?).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpt::encode;
    use proptest::prelude::*;

    fn rep(id: &str, ber: f64, ts: f64, hd: f64) -> QualityReport {
        QualityReport::new(id, ber, ts, hd)
    }

    fn canon(m: Mesh) -> Mesh {
        canonicalize(&m, &BptConfig::default().grid()).unwrap()
    }

    /// Regular quad grid in the xz-plane plus, optionally, a far-away sliver
    /// triangle that forms its own patch.
    fn grid_mesh(with_sliver: bool) -> Mesh {
        let mut v = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                v.push([i as f64 * 0.2, 0.0, j as f64 * 0.2]);
            }
        }
        let mut f = Vec::new();
        for j in 0..2 {
            for i in 0..2 {
                let a = j * 3 + i;
                f.push(vec![a, a + 3, a + 4, a + 1]);
            }
        }
        if with_sliver {
            let b = v.len();
            v.extend([[0.9, 0.9, 0.9], [0.95, 0.9, 0.9], [0.9, 0.9, 0.6]]);
            f.push(vec![b, b + 1, b + 2]);
        }
        canon(Mesh::new(v, f))
    }

    fn tokens_for(m: &Mesh) -> TokenSequence {
        encode(m, &BptConfig::default()).unwrap()
    }

    #[test]
    fn dominance_examples() {
        let a = rep("a", 0.1, 0.9, 0.01);
        let b = rep("b", 0.2, 0.8, 0.02);
        assert!(dominates(&a, &b));
        assert!(!dominates(&b, &a));
        assert!(!dominates(&rep("a", 0.1, 0.9, 0.03), &b));
        assert!(!dominates(&a, &a));
    }

    #[test]
    fn face_quality_values() {
        let sq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(face_quality(&sq), 1.0);
        let skew = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 1.0, 0.0], [2.0, 1.0, 0.0]];
        assert_eq!(face_quality(&skew), 0.5);
        let eq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]];
        assert!((face_quality(&eq) - 1.0).abs() < 1e-12);
        let right = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        // 4√3 · 0.5 / 4
        assert!((face_quality(&right) - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_quad_patch_is_all_ones() {
        let m = grid_mesh(false);
        let t = tokens_for(&m);
        let mask = mask_phi(&t, &m, &MaskConfig::default(), &BptConfig::default()).unwrap();
        assert_eq!(mask.len(), t.len());
        assert_eq!(mask.ones(), t.len());
    }

    #[test]
    fn all_triangle_patch_is_zero() {
        let m = canon(Mesh::new(
            vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.25, 0.0, 0.43]],
            vec![vec![0, 1, 2]],
        ));
        let t = tokens_for(&m);
        let mask = mask_phi(&t, &m, &MaskConfig::default(), &BptConfig::default()).unwrap();
        assert_eq!(mask.ones(), 0);
    }

    #[test]
    fn mixed_mesh_per_patch_oracle() {
        let m = grid_mesh(true);
        let t = tokens_for(&m);
        let bpt = BptConfig::default();
        let cfg = MaskConfig::default();
        let mask = mask_phi(&t, &m, &cfg, &bpt).unwrap();
        // oracle: decode each patch span alone and test both conditions
        let mut saw = [false; 2];
        for span in &t.patch_spans {
            let part = decode(
                &TokenSequence { tokens: t.tokens[span[0]..span[1]].to_vec(), ..Default::default() },
                &bpt,
            )
            .unwrap();
            let quad_ratio = part.quad_count() as f64 / part.faces.len() as f64;
            let mean = part
                .faces
                .iter()
                .map(|f| face_quality(&f.iter().map(|&i| part.vertices[i]).collect::<Vec<_>>()))
                .sum::<f64>()
                / part.faces.len() as f64;
            let expect = u8::from(quad_ratio >= cfg.tau_quad && mean >= cfg.tau_topo);
            assert!(mask.bits[span[0]..span[1]].iter().all(|&b| b == expect));
            saw[usize::from(expect)] = true;
        }
        assert_eq!(saw, [true, true]);
    }

    #[test]
    fn mask_rejects_mismatched_mesh() {
        let m = grid_mesh(false);
        let other = grid_mesh(true);
        let t = tokens_for(&m);
        assert!(matches!(
            mask_phi(&t, &other, &MaskConfig::default(), &BptConfig::default()),
            Err(Error::Consistency(_))
        ));
    }

    fn set_from(reports: &[(f64, f64, f64)]) -> CandidateSet {
        let t = tokens_for(&grid_mesh(true));
        CandidateSet {
            condition_id: "c".into(),
            candidates: reports
                .iter()
                .enumerate()
                .map(|(i, &(b, s, h))| Candidate {
                    id: format!("m{i}"),
                    tokens: t.clone(),
                    report: rep(&format!("m{i}"), b, s, h),
                })
                .collect(),
        }
    }

    #[test]
    fn triplet_counts() {
        let bpt = BptConfig::default();
        let cfg = MaskConfig::default();
        let two = set_from(&[(0.1, 0.9, 0.1), (0.2, 0.8, 0.2)]);
        let t = build_triplets(&two, &bpt, &cfg).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].winner.id.as_str(), t[0].loser.id.as_str()), ("m0", "m1"));
        assert_eq!(t[0].winner.mask.len(), t[0].winner.tokens.len());

        let anti = set_from(&[(0.1, 0.5, 0.5), (0.5, 0.9, 0.5), (0.5, 0.5, 0.1)]);
        assert!(build_triplets(&anti, &bpt, &cfg).unwrap().is_empty());

        let chain: Vec<_> = (0..8).map(|i| (i as f64 * 0.1, 1.0 - i as f64 * 0.1, i as f64)).collect();
        let t = build_triplets(&set_from(&chain), &bpt, &cfg).unwrap();
        let brute = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).filter(|&(i, j)| i < j).count();
        assert_eq!(t.len(), brute);
        assert_eq!(t.len(), 28);

        assert!(build_triplets(&set_from(&[(0.1, 0.1, 0.1)]), &bpt, &cfg).is_err());
    }

    #[test]
    fn triplet_json_shape() {
        let set = set_from(&[(0.1, 0.9, 0.1), (0.2, 0.8, 0.2)]);
        let t = &build_triplets(&set, &BptConfig::default(), &MaskConfig::default()).unwrap()[0];
        let v = serde_json::to_value(t).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["cond", "lose", "win"]);
        let win: Vec<_> = v["win"].as_object().unwrap().keys().cloned().collect();
        assert_eq!(win, vec!["mask", "tokens"]);
        assert!(v["win"]["mask"].is_array());
    }

    fn arb_report() -> impl Strategy<Value = (f64, f64, f64)> {
        // coarse values so ties show up
        (0u8..5, 0u8..5, 0u8..5).prop_map(|(a, b, c)| (a as f64 / 4.0, b as f64 / 4.0, c as f64))
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_order(a in arb_report(), b in arb_report(), c in arb_report()) {
            let (a, b, c) = (rep("a", a.0, a.1, a.2), rep("b", b.0, b.1, b.2), rep("c", c.0, c.1, c.2));
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }

        #[test]
        fn triplets_match_pair_enumeration(reports in prop::collection::vec(arb_report(), 2..=8)) {
            let set = set_from(&reports);
            let got = build_triplets(&set, &BptConfig::default(), &MaskConfig::default()).unwrap();
            let mut brute = Vec::new();
            for (i, a) in reports.iter().enumerate() {
                for (j, b) in reports.iter().enumerate() {
                    if a.0 < b.0 && a.1 > b.1 && a.2 < b.2 {
                        brute.push((format!("m{i}"), format!("m{j}")));
                    }
                }
            }
            brute.sort();
            let got: Vec<_> = got.into_iter().map(|t| (t.winner.id, t.loser.id)).collect();
            prop_assert_eq!(got, brute);
        }

        #[test]
        fn raising_tau_quad_never_adds_ones(lo in 0.0f64..1.0, hi in 0.0f64..1.0, topo in 0.0f64..1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let m = grid_mesh(true);
            let t = tokens_for(&m);
            let bpt = BptConfig::default();
            let a = mask_phi(&t, &m, &MaskConfig { tau_quad: lo, tau_topo: topo }, &bpt).unwrap();
            let b = mask_phi(&t, &m, &MaskConfig { tau_quad: hi, tau_topo: topo }, &bpt).unwrap();
            for (x, y) in a.bits.iter().zip(&b.bits) {
                prop_assert!(y <= x);
            }
            for span in &t.patch_spans {
                let s = &a.bits[span[0]..span[1]];
                prop_assert!(s.iter().all(|&v| v == s[0]));
            }
        }
    }
}
