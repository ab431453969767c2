use std::path::Path;
use std::str::FromStr;

use super::{Point3, TriangleMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

/// Reads a mesh, picking the format from the file extension.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| Error::Data(format!("unknown mesh extension: {}", path.display())))?;
    let bytes = std::fs::read(path)?;
    parse_mesh(&bytes, format)
}

/// Parses ASCII OFF or OBJ content. Polygons with more than three corners are
/// fan-triangulated around their first corner.
pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8 text: {e}"),
    })?;
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Obj => parse_obj(text)?,
    };
    TriangleMesh::new(vertices, faces)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| perr(line, format!("expected {what}, found {tok:?}")))
}

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn parse_off(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>)> {
    // (line number, tokens) with comments and blank lines stripped
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });

    let (hline, mut header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if header[0] != "OFF" {
        return Err(perr(hline, format!("expected OFF header, found {:?}", header[0])));
    }
    header.remove(0);
    let (cline, counts) = if header.is_empty() {
        lines.next().ok_or_else(|| perr(hline, "missing element counts"))?
    } else {
        (hline, header)
    };
    if counts.len() < 2 {
        return Err(perr(cline, "expected vertex and face counts"));
    }
    let nv: usize = num(counts[0], cline, "vertex count")?;
    let nf: usize = num(counts[1], cline, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines
            .next()
            .ok_or_else(|| perr(cline, format!("file ends before {nv} vertices")))?;
        if toks.len() < 3 {
            return Err(perr(ln, "vertex needs three coordinates"));
        }
        vertices.push([
            num(toks[0], ln, "coordinate")?,
            num(toks[1], ln, "coordinate")?,
            num(toks[2], ln, "coordinate")?,
        ]);
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, toks) = lines
            .next()
            .ok_or_else(|| perr(cline, format!("file ends before {nf} faces")))?;
        let k: usize = num(toks[0], ln, "polygon size")?;
        if k < 3 || toks.len() < k + 1 {
            return Err(perr(ln, format!("bad polygon of size {k}")));
        }
        let mut poly = Vec::with_capacity(k);
        for t in &toks[1..=k] {
            let i: usize = num(t, ln, "vertex index")?;
            if i >= nv {
                return Err(perr(ln, format!("vertex index {i} out of range for {nv} vertices")));
            }
            poly.push(i);
        }
        fan(&poly, &mut faces);
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(perr(ln, "vertex needs three coordinates"));
                }
                vertices.push([
                    num(c[0], ln, "coordinate")?,
                    num(c[1], ln, "coordinate")?,
                    num(c[2], ln, "coordinate")?,
                ]);
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    let idx: i64 = num(t.split('/').next().unwrap_or(""), ln, "vertex index")?;
                    let nv = vertices.len() as i64;
                    // 1-based, negative is relative to the end
                    let resolved = if idx > 0 { idx - 1 } else { nv + idx };
                    if idx == 0 || resolved < 0 || resolved >= nv {
                        return Err(perr(ln, format!("vertex index {idx} out of range for {nv} vertices")));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(perr(ln, "face needs at least three vertices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}
