use std::collections::HashMap;

use super::patch::build_patches;
use super::{BptConfig, TokenKind, TokenSequence};
use crate::error::{Error, Result};
use crate::mesh::{canonicalize, is_canonical, Mesh};

/// Encodes a canonical mesh; see the module docs for the token layout.
pub fn encode(mesh: &Mesh, cfg: &BptConfig) -> Result<TokenSequence> {
    cfg.check()?;
    if !is_canonical(mesh, &cfg.grid()) {
        return Err(Error::Precondition(
            "encode expects a canonical mesh (see mesh::canonicalize)".into(),
        ));
    }
    let grid = cfg.grid();
    let pair = |v: usize, out: &mut Vec<u32>| -> Result<()> {
        let (b, o) = cfg.block_index(grid.quantize_point(mesh.vertices[v]))?;
        out.push(cfg.block_token(b));
        out.push(cfg.offset_token(o));
        Ok(())
    };

    let mut tokens = Vec::new();
    for patch in build_patches(mesh) {
        for (ri, run) in patch.runs.iter().enumerate() {
            if ri == 0 {
                tokens.push(cfg.patch_start_token(run.closed));
                pair(patch.center, &mut tokens)?;
            } else {
                tokens.push(cfg.run_break_token(run.closed));
            }
            pair(run.start, &mut tokens)?;
            for (si, step) in run.steps.iter().enumerate() {
                if let Some(m) = step.mid {
                    tokens.push(cfg.quad_token());
                    pair(m, &mut tokens)?;
                }
                if !(run.closed && si + 1 == run.steps.len()) {
                    pair(step.end, &mut tokens)?;
                }
            }
        }
    }
    let parsed = parse(&tokens, cfg)?;
    Ok(TokenSequence {
        tokens,
        patch_spans: parsed.patch_spans,
        face_spans: parsed.face_spans,
        vocab_size: cfg.vocab_size(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRun {
    pub closed: bool,
    /// Token index of the run's introducing control.
    pub intro: usize,
    pub start: [u32; 3],
    /// `(mid, end)` per face; a closed ring's last end is its start.
    pub steps: Vec<(Option<[u32; 3]>, [u32; 3])>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPatch {
    pub center: [u32; 3],
    pub runs: Vec<ParsedRun>,
}

impl ParsedPatch {
    /// Faces as quantized vertex lists, center first.
    pub fn faces(&self) -> Vec<Vec<[u32; 3]>> {
        let mut out = Vec::new();
        for run in &self.runs {
            let mut prev = run.start;
            for &(mid, end) in &run.steps {
                let mut f = vec![self.center, prev];
                f.extend(mid);
                f.push(end);
                out.push(f);
                prev = end;
            }
        }
        out
    }
}

/// Structural parse of a token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub patches: Vec<ParsedPatch>,
    pub patch_spans: Vec<[usize; 2]>,
    pub face_spans: Vec<[usize; 2]>,
    /// Per face in decode order: `(patch, run, step)`.
    pub face_index: Vec<(usize, usize, usize)>,
}

struct Cursor<'a> {
    tokens: &'a [u32],
    pos: usize,
    cfg: &'a BptConfig,
}

impl Cursor<'_> {
    fn peek(&self) -> Result<Option<TokenKind>> {
        match self.tokens.get(self.pos) {
            None => Ok(None),
            Some(&t) => self.cfg.classify(t).map(Some).ok_or(Error::Decode {
                index: self.pos,
                msg: format!("token {t} outside vocabulary of {}", self.cfg.vocab_size()),
            }),
        }
    }

    fn vertex(&mut self) -> Result<[u32; 3]> {
        let at = self.pos;
        let err = |index: usize, msg: &str| Error::Decode {
            index,
            msg: msg.to_string(),
        };
        let block = match self.peek()? {
            Some(TokenKind::Block(b)) => b,
            Some(_) => return Err(err(at, "expected block token")),
            None => return Err(err(at, "sequence ends before vertex")),
        };
        self.pos += 1;
        let offset = match self.peek()? {
            Some(TokenKind::Offset(o)) => o,
            Some(_) => return Err(err(at + 1, "expected offset token")),
            None => return Err(err(at + 1, "sequence ends mid vertex pair")),
        };
        self.pos += 1;
        self.cfg.block_unindex(block, offset)
    }
}

/// Parses tokens into patches, runs and face spans.
pub fn parse(tokens: &[u32], cfg: &BptConfig) -> Result<Parsed> {
    let mut cur = Cursor { tokens, pos: 0, cfg };
    let mut patches: Vec<ParsedPatch> = Vec::new();
    let mut patch_spans = Vec::new();
    let mut face_spans = Vec::new();
    let mut face_index = Vec::new();

    while let Some(kind) = cur.peek()? {
        let patch_begin = cur.pos;
        let TokenKind::PatchStart { closed } = kind else {
            return Err(Error::Decode {
                index: cur.pos,
                msg: "expected patch start".into(),
            });
        };
        cur.pos += 1;
        let center = cur.vertex()?;
        let mut runs = Vec::new();
        let mut next_closed = Some((closed, patch_begin));
        while let Some((closed, intro)) = next_closed.take() {
            let pi = patches.len();
            let ri = runs.len();
            let (run, spans) = parse_run(&mut cur, closed, intro)?;
            for (si, span) in spans.into_iter().enumerate() {
                face_spans.push(span);
                face_index.push((pi, ri, si));
            }
            runs.push(run);
            if let Some(TokenKind::RunBreak { closed }) = cur.peek()? {
                next_closed = Some((closed, cur.pos));
                cur.pos += 1;
            }
        }
        patch_spans.push([patch_begin, cur.pos]);
        patches.push(ParsedPatch { center, runs });
    }
    Ok(Parsed {
        patches,
        patch_spans,
        face_spans,
        face_index,
    })
}

fn parse_run(cur: &mut Cursor, closed: bool, intro: usize) -> Result<(ParsedRun, Vec<[usize; 2]>)> {
    let start = cur.vertex()?;
    // bounds: token index just past each peripheral; end_begins: where each end pair starts
    let mut steps: Vec<(Option<[u32; 3]>, [u32; 3])> = Vec::new();
    let mut bounds: Vec<usize> = vec![cur.pos];
    let mut end_begins: Vec<usize> = vec![intro];
    let mut pending_mid: Option<[u32; 3]> = None;
    loop {
        match cur.peek()? {
            Some(TokenKind::Quad) => {
                if pending_mid.is_some() {
                    return Err(Error::Decode {
                        index: cur.pos,
                        msg: "two quad markers in a row".into(),
                    });
                }
                cur.pos += 1;
                pending_mid = Some(cur.vertex()?);
            }
            Some(TokenKind::Block(_)) => {
                end_begins.push(cur.pos);
                let end = cur.vertex()?;
                steps.push((pending_mid.take(), end));
                bounds.push(cur.pos);
            }
            _ => break,
        }
    }
    let run_end = cur.pos;
    if closed {
        steps.push((pending_mid.take(), start));
        if steps.len() < 2 {
            return Err(Error::Decode {
                index: intro,
                msg: "closed ring needs at least 2 peripherals".into(),
            });
        }
    } else if pending_mid.is_some() {
        return Err(Error::Decode {
            index: run_end,
            msg: "quad corner without closing peripheral".into(),
        });
    } else if steps.is_empty() {
        return Err(Error::Decode {
            index: intro,
            msg: "patch run needs at least 2 peripherals".into(),
        });
    }

    // open runs key faces on their end vertex, closed rings on their start vertex
    let k = steps.len();
    let spans = if closed {
        (0..k)
            .map(|i| {
                let b = if i + 1 == k { run_end } else { end_begins[i + 1] };
                [end_begins[i], b]
            })
            .collect()
    } else {
        (0..k)
            .map(|i| [if i == 0 { intro } else { bounds[i] }, bounds[i + 1]])
            .collect()
    };
    Ok((
        ParsedRun {
            closed,
            intro,
            start,
            steps,
        },
        spans,
    ))
}

/// Rebuilds the canonical mesh a token sequence encodes.
pub fn decode(seq: &TokenSequence, cfg: &BptConfig) -> Result<Mesh> {
    decode_tokens(&seq.tokens, cfg)
}

pub(crate) fn decode_tokens(tokens: &[u32], cfg: &BptConfig) -> Result<Mesh> {
    cfg.check()?;
    let parsed = parse(tokens, cfg)?;
    let grid = cfg.grid();
    let mut ids: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (patch, span) in parsed.patches.iter().zip(&parsed.patch_spans) {
        for face in patch.faces() {
            let mut f = Vec::with_capacity(face.len());
            for bins in face {
                let id = *ids.entry(bins).or_insert_with(|| {
                    vertices.push(bins);
                    vertices.len() - 1
                });
                if f.contains(&id) {
                    return Err(Error::Decode {
                        index: span[0],
                        msg: "patch produces a face with a repeated vertex".into(),
                    });
                }
                f.push(id);
            }
            faces.push(f);
        }
    }
    let vertices = vertices
        .into_iter()
        .map(|b| grid.dequantize_point(b))
        .collect::<Result<Vec<_>>>()?;
    canonicalize(&Mesh::new(vertices, faces), &grid)
}

/// Triangle-equivalent coordinate count (9 per triangle) over token count.
pub fn compression_ratio(seq: &TokenSequence, mesh: &Mesh) -> Result<f64> {
    if seq.tokens.is_empty() {
        return Err(Error::Domain("compression ratio of an empty sequence".into()));
    }
    Ok((9 * mesh.triangle_equivalent_count()) as f64 / seq.tokens.len() as f64)
}
