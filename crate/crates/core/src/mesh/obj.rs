use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

/// Reads a Wavefront OBJ file holding only `v` and `f` records.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mesh = parse_obj(&text)?;
    if let Some(stem) = path.file_stem() {
        mesh.name = stem.to_string_lossy().into_owned();
    }
    Ok(mesh)
}

pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    // (line, raw indices) resolved once all vertices are known
    let mut raw_faces: Vec<(usize, Vec<i64>)> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .map(|p| {
                        p.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad coordinate `{p}`"),
                        })
                    })
                    .collect::<Result<_>>()?;
                // a fourth (w) component is tolerated and ignored
                if coords.len() != 3 && coords.len() != 4 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("vertex needs 3 coordinates, got {}", coords.len()),
                    });
                }
                vertices.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let idx: Vec<i64> = parts
                    .map(|p| {
                        // `v/vt/vn` forms keep only the position index
                        let head = p.split('/').next().unwrap_or("");
                        head.parse::<i64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad face index `{p}`"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 && idx.len() != 4 {
                    return Err(Error::UnsupportedFace {
                        line: lineno,
                        arity: idx.len(),
                    });
                }
                raw_faces.push((lineno, idx));
            }
            Some(tag) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unsupported record `{tag}`"),
                })
            }
            None => {}
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (lineno, idx) in raw_faces {
        let mut face = Vec::with_capacity(idx.len());
        for raw in idx {
            // negative indices count back from the end
            let resolved = if raw > 0 {
                raw - 1
            } else if raw < 0 {
                n as i64 + raw
            } else {
                -1
            };
            if resolved < 0 || resolved >= n as i64 {
                return Err(Error::Index {
                    line: lineno,
                    index: raw,
                    count: n,
                });
            }
            face.push(resolved as usize);
        }
        faces.push(face);
    }

    let mesh = Mesh::new(vertices, faces);
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    if !mesh.name.is_empty() {
        let _ = writeln!(out, "# {}", mesh.name);
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        out.push('f');
        for &i in f {
            let _ = write!(out, " {}", i + 1);
        }
        out.push('\n');
    }
    out
}

pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_obj(mesh)).map_err(|e| Error::io(path, e))
}
