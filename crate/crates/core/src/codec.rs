// SPDX-License-Identifier: Apache-2.0

//! File codecs: binary PGM (8 and 16 bit), binary PLY point clouds, raw
//! little-endian `f32` field dumps with a JSON sidecar, and JSON-lines.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{GuiderError, Result};
use crate::field::{Field, ScalarField};
use crate::scene_geometry::Vec3;

/// A decoded greyscale image with its declared maximum value.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub maxval: u16,
    pub pixels: Field<u16>,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| GuiderError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| GuiderError::io(path, e))
}

/// Header tokens of a netpbm file, skipping `#` comments. Returns the tokens
/// and the offset of the first raster byte.
fn netpbm_header(bytes: &[u8], count: usize, path: &Path) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(GuiderError::parse(path, 1, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    Ok((tokens, i + 1))
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Pgm> {
    let (tok, offset) = netpbm_header(bytes, 4, path)?;
    if tok[0] != "P5" {
        return Err(GuiderError::parse(path, 1, format!("expected P5 magic, found {:?}", tok[0])));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| GuiderError::parse(path, 1, format!("bad {what} {s:?}")))
    };
    let (w, h, maxval) = (num(&tok[1], "width")?, num(&tok[2], "height")?, num(&tok[3], "maxval")?);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(GuiderError::parse(path, 1, format!("unsupported geometry {w}x{h} maxval {maxval}")));
    }
    let wide = maxval > 255;
    let need = w * h * if wide { 2 } else { 1 };
    let raster = bytes.get(offset..offset + need).ok_or_else(|| {
        GuiderError::parse(path, 1, format!("raster has {} bytes, expected {need}", bytes.len().saturating_sub(offset)))
    })?;
    let data: Vec<u16> = if wide {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster.iter().map(|&b| b as u16).collect()
    };
    if data.iter().any(|&v| v as usize > maxval) {
        return Err(GuiderError::parse(path, 1, "sample exceeds maxval"));
    }
    Ok(Pgm {
        maxval: maxval as u16,
        pixels: Field::from_vec(w, h, data)?,
    })
}

pub fn encode_pgm(img: &Pgm) -> Vec<u8> {
    let (w, h) = (img.pixels.width(), img.pixels.height());
    let mut out = format!("P5\n{w} {h}\n{}\n", img.maxval).into_bytes();
    if img.maxval > 255 {
        for &v in img.pixels.iter() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&v| v as u8));
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    decode_pgm(&read_file(path)?, path)
}

pub fn write_pgm(path: &Path, img: &Pgm) -> Result<()> {
    write_file(path, &encode_pgm(img))
}

/// Quantize a scalar field to 16-bit samples `round(v / scale)`; NaN and
/// non-positive values map to 0.
pub fn quantize_u16(field: &ScalarField, scale: f64) -> Pgm {
    Pgm {
        maxval: u16::MAX,
        pixels: field.map(|&v| {
            if v.is_finite() && v > 0.0 {
                (v / scale).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            }
        }),
    }
}

/// Inverse of [`quantize_u16`]; 0 decodes to NaN when `zero_is_invalid`.
pub fn dequantize(img: &Pgm, scale: f64, zero_is_invalid: bool) -> ScalarField {
    img.pixels.map(|&v| if v == 0 && zero_is_invalid { f64::NAN } else { v as f64 * scale })
}

/// Binary little-endian PLY with `float x, y, z`.
pub fn write_ply(path: &Path, points: &[Vec3]) -> Result<()> {
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    )
    .into_bytes();
    for p in points {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    write_file(path, &out)
}

pub fn read_ply(path: &Path) -> Result<Vec<[f32; 3]>> {
    let bytes = read_file(path)?;
    let mut reader = BufReader::new(&bytes[..]);
    let mut line = String::new();
    let mut lineno = 0;
    let mut count = None;
    let mut props = Vec::new();
    let mut header_len = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| GuiderError::io(path, e))?;
        if n == 0 {
            return Err(GuiderError::parse(path, lineno, "missing end_header"));
        }
        header_len += n;
        lineno += 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["ply"] if lineno == 1 => {}
            _ if lineno == 1 => return Err(GuiderError::parse(path, 1, "missing ply magic")),
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", other, ..] => return Err(GuiderError::parse(path, lineno, format!("unsupported format {other}"))),
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| GuiderError::parse(path, lineno, "bad vertex count"))?)
            }
            ["property", "float", name] => props.push(name.to_string()),
            ["end_header"] => break,
            _ => return Err(GuiderError::parse(path, lineno, format!("unsupported header line {:?}", line.trim()))),
        }
    }
    if props != ["x", "y", "z"] {
        return Err(GuiderError::parse(path, lineno, "expected float x, y, z properties"));
    }
    let n = count.ok_or_else(|| GuiderError::parse(path, lineno, "missing vertex element"))?;
    let body = &bytes[header_len..];
    if body.len() != n * 12 {
        return Err(GuiderError::parse(path, lineno, format!("expected {} body bytes, found {}", n * 12, body.len())));
    }
    Ok(body
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes([c[k], c[k + 1], c[k + 2], c[k + 3]]);
            [f(0), f(4), f(8)]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub dtype: String,
    pub stage: String,
}

/// Dump a field as `<stem>.f32` plus `<stem>.json`.
pub fn write_raw_f32(dir: &Path, stem: &str, field: &ScalarField) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.len() * 4);
    for &v in field.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_file(&dir.join(format!("{stem}.f32")), &bytes)?;
    let side = RawSidecar {
        width: field.width(),
        height: field.height(),
        dtype: "f32le".into(),
        stage: stem.into(),
    };
    let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    write_file(&dir.join(format!("{stem}.json")), json.as_bytes())
}

/// Read a raw dump given either file of the pair.
pub fn read_raw_f32(path: &Path) -> Result<ScalarField> {
    let side_path = path.with_extension("json");
    let side_text = fs::read_to_string(&side_path).map_err(|e| GuiderError::io(&side_path, e))?;
    let side: RawSidecar = serde_json::from_str(&side_text)
        .map_err(|e| GuiderError::parse(&side_path, e.line(), e.to_string()))?;
    if side.dtype != "f32le" {
        return Err(GuiderError::parse(&side_path, 1, format!("unsupported dtype {}", side.dtype)));
    }
    let raw_path = path.with_extension("f32");
    let bytes = read_file(&raw_path)?;
    if bytes.len() != side.width * side.height * 4 {
        return Err(GuiderError::parse(&raw_path, 1, "size does not match sidecar"));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    ScalarField::from_vec(side.width, side.height, data)
}

/// Parse JSON-lines, reporting the 1-based line of the first bad record.
/// Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| GuiderError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GuiderError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GuiderError::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| GuiderError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| GuiderError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| GuiderError::io(path, e))?;
    }
    w.flush().map_err(|e| GuiderError::io(path, e))
}

/// Read a whole file as UTF-8.
pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| GuiderError::io(path, e))?;
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}
