//! Plain-text mesh format.
//!
//! ```text
//! wgmesh 1
//! nv <vertex count>
//! <x> <y>
//! ne <element count>
//! <n_vertices> <i0> <i1> ...
//! ```
//!
//! Coordinates are written with 17 significant digits so a write/read round
//! trip reproduces every f64 bit-exactly. Blank lines and `#` comments are
//! ignored. Edge topology is derived, never stored.

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;
use std::io::Write;
use std::path::Path;

pub fn write_mesh(mesh: &PolygonalMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("wgmesh 1\n");
    out.push_str(&format!("nv {}\n", mesh.vertices.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("{:.16e} {:.16e}\n", v.x, v.y));
    }
    out.push_str(&format!("ne {}\n", mesh.elements.len()));
    for cycle in &mesh.elements {
        out.push_str(&format!("{}", cycle.len()));
        for &v in cycle {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<PolygonalMesh> {
    let text = std::fs::read_to_string(path)?;
    let mesh = parse_mesh(&text)?;
    let violations = mesh.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidMesh(violations));
    }
    Ok(mesh)
}

/// Parses the wgmesh text format. Exposed for in-memory fixtures.
pub fn parse_mesh(text: &str) -> Result<PolygonalMesh> {
    // token stream with line tracking
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for tok in line.split_whitespace() {
            tokens.push((i + 1, tok));
        }
    }
    let mut pos = 0usize;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        let t = tokens.get(pos).copied().ok_or_else(|| Error::MeshParse {
            line: tokens.last().map(|t| t.0).unwrap_or(1),
            message: format!("unexpected end of file, expected {what}"),
        })?;
        pos += 1;
        Ok(t)
    };

    let (line, magic) = next("header `wgmesh`")?;
    if magic != "wgmesh" {
        return Err(Error::MeshParse {
            line,
            message: format!("expected header `wgmesh`, found `{magic}`"),
        });
    }
    let (line, version) = next("format version")?;
    if version != "1" {
        return Err(Error::MeshParse {
            line,
            message: format!("unsupported version `{version}`"),
        });
    }

    let parse_count = |t: (usize, &str), what: &str| -> Result<usize> {
        t.1.parse().map_err(|_| Error::MeshParse {
            line: t.0,
            message: format!("invalid {what} `{}`", t.1),
        })
    };
    let parse_f64 = |t: (usize, &str)| -> Result<f64> {
        t.1.parse().map_err(|_| Error::MeshParse {
            line: t.0,
            message: format!("invalid coordinate `{}`", t.1),
        })
    };

    let (line, tag) = next("`nv`")?;
    if tag != "nv" {
        return Err(Error::MeshParse {
            line,
            message: format!("expected `nv`, found `{tag}`"),
        });
    }
    let nv = parse_count(next("vertex count")?, "vertex count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next("x coordinate")?)?;
        let y = parse_f64(next("y coordinate")?)?;
        vertices.push(Point::new(x, y));
    }

    let (line, tag) = next("`ne`")?;
    if tag != "ne" {
        return Err(Error::MeshParse {
            line,
            message: format!("expected `ne`, found `{tag}`"),
        });
    }
    let ne = parse_count(next("element count")?, "element count")?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let cnt_tok = next("element vertex count")?;
        let cnt = parse_count(cnt_tok, "element vertex count")?;
        if cnt < 3 {
            return Err(Error::MeshParse {
                line: cnt_tok.0,
                message: format!("element with {cnt} vertices"),
            });
        }
        let mut cycle = Vec::with_capacity(cnt);
        for _ in 0..cnt {
            let tok = next("vertex index")?;
            let idx = parse_count(tok, "vertex index")?;
            if idx >= nv {
                return Err(Error::MeshParse {
                    line: tok.0,
                    message: format!("vertex index {idx} out of range (nv = {nv})"),
                });
            }
            cycle.push(idx);
        }
        elements.push(cycle);
    }

    if pos != tokens.len() {
        let t = tokens[pos];
        return Err(Error::MeshParse {
            line: t.0,
            message: format!("trailing content `{}`", t.1),
        });
    }

    Ok(PolygonalMesh::from_raw(vertices, elements))
}
