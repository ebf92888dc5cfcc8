use std::path::Path;

use anyhow::{anyhow, Context};
use serde_json::json;

use meshtopo::mesh::{load_obj, save_obj, save_xyz};
use meshtopo::seam::{
    cut_mesh, decode_seam, encode_seam, extract_charts, face_distortion, flatten_all, order_seams, parse_seam_text,
    parse_uv_obj, read_seam_records, sample_structural, seam_paths, seam_ratio, write_seam_records, write_seam_text,
    write_uv_obj, SeamRecord,
};
use meshtopo::{PointCloud, QuantGrid, SeamSequence};

use crate::args::SeamCommand;
use crate::io::{emit, read_text, stem, write_text};
use crate::NumericFailure;

/// JSON has no infinity; a singular energy becomes `null`.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Seam from plain text, or from the first record of a token file.
fn load_seam(path: &Path, grid: &QuantGrid) -> anyhow::Result<SeamSequence> {
    let text = read_text(path)?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.starts_with('{')) {
        let rec = read_seam_records(path)?
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("{} holds no seam records", path.display()))?;
        Ok(decode_seam(&rec.tokens, grid)?)
    } else {
        Ok(order_seams(&parse_seam_text(&text)?)?)
    }
}

pub fn seam(cmd: &SeamCommand) -> anyhow::Result<()> {
    match cmd {
        SeamCommand::Encode { input, out, id, levels } => {
            let grid = QuantGrid::new(*levels)?;
            let seq = order_seams(&parse_seam_text(&read_text(input)?)?)?;
            let record = SeamRecord {
                id: id.clone().unwrap_or_else(|| stem(input)),
                tokens: encode_seam(&seq, &grid),
            };
            if let Some(out) = out {
                write_seam_records(out, std::slice::from_ref(&record))?;
            }
            emit(&json!({ "id": record.id, "segments": seq.len(), "tokens": record.tokens }))
        }
        SeamCommand::Decode { input, id, out, levels } => {
            let grid = QuantGrid::new(*levels)?;
            let records = read_seam_records(input)?;
            let record = match id {
                Some(id) => records.into_iter().find(|r| &r.id == id),
                None => records.into_iter().next(),
            }
            .ok_or_else(|| anyhow!("no matching seam record in {}", input.display()))?;
            let seq = decode_seam(&record.tokens, &grid).with_context(|| format!("record {}", record.id))?;
            write_text(out, &write_seam_text(&seq))?;
            emit(&json!({ "id": record.id, "segments": seq.len() }))
        }
        SeamCommand::Cut {
            mesh,
            seam,
            out,
            normalize,
            levels,
        } => {
            let grid = QuantGrid::new(*levels)?;
            let mut m = load_obj(mesh)?;
            if *normalize {
                m = m.normalize_unit_cube()?;
            }
            let seq = load_seam(seam, &grid)?;
            let ratio = seam_ratio(&seq, &m)?;
            if !ratio.is_valid() {
                log::warn!("seam ratio {:.3} is outside the usual band", ratio.ratio);
            }
            let (paths, snapped) = seam_paths(&seq, &m)?;
            let (cut, report) = cut_mesh(&m, &paths)?;
            save_obj(&cut, out)?;
            let charts: Vec<_> = extract_charts(&cut)?
                .iter()
                .map(|c| {
                    json!({
                        "faces": c.face_ids.len(),
                        "vertices": c.mesh.vertices.len(),
                        "euler": c.euler,
                        "boundary_loops": c.boundary_loops,
                        "disk": c.is_disk(),
                    })
                })
                .collect();
            emit(&json!({
                "segments": seq.len(),
                "dropped_segments": snapped.dropped,
                "ratio": ratio,
                "cut": report,
                "charts": charts,
            }))
        }
        SeamCommand::Flatten { mesh, out } => {
            let charts = flatten_all(&load_obj(mesh)?)?;
            write_text(out, &write_uv_obj(&charts)?)?;
            let summary = charts
                .iter()
                .map(|c| {
                    let d = face_distortion(c)?;
                    Ok(json!({
                        "faces": c.face_ids.len(),
                        "vertices": c.mesh.vertices.len(),
                        "mean_energy": finite(d.mean),
                    }))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            emit(&json!({ "charts": summary }))
        }
        SeamCommand::Distort { input, out } => {
            let chart = parse_uv_obj(&read_text(input)?)?;
            let d = face_distortion(&chart)?;
            if let Some(out) = out {
                let per_face: Vec<_> = d.per_face.iter().map(|&e| finite(e)).collect();
                let doc = json!({ "mean": finite(d.mean), "per_face": per_face, "degenerate": d.degenerate });
                write_text(out, &doc.to_string())?;
            }
            emit(&json!({
                "mean_energy": finite(d.mean),
                "faces": d.per_face.len(),
                "degenerate": d.degenerate,
            }))?;
            if d.degenerate.is_empty() {
                Ok(())
            } else {
                Err(NumericFailure(format!("{} triangles have a singular UV map", d.degenerate.len())).into())
            }
        }
        SeamCommand::Sample { mesh, out, seed } => {
            let s = sample_structural(&load_obj(mesh)?, *seed)?;
            let points = s.vertex_points.iter().chain(&s.edge_points).copied().collect();
            save_xyz(&PointCloud::new(points), out)?;
            emit(&json!({ "vertex_points": s.vertex_points.len(), "edge_points": s.edge_points.len() }))
        }
    }
}
