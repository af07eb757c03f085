//! Reader/writer for a subset of NPY format version 1.0.
//!
//! Supported files are 2-D, C-contiguous, little-endian `<f8` or `<f4`.
//! Writing always emits `<f8`; `<f4` input is widened to f64 on load, so
//! a write→read round trip is bit-exact for any finite f64 matrix.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{GapError, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F8,
    F4,
}

fn fmt_err(path: &Path, reason: impl Into<String>) -> GapError {
    GapError::NpyFormat { path: path.to_path_buf(), reason: reason.into() }
}

fn io_err(path: &Path, source: std::io::Error) -> GapError {
    GapError::Io { path: path.to_path_buf(), source }
}

/// Serialize a matrix as NPY bytes (version 1.0, `<f8`, C order).
pub fn to_bytes(m: &Array2<f64>) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.nrows(),
        m.ncols()
    );
    // magic(6) + version(2) + header_len(2) + dict + padding + '\n',
    // padded so the data section starts on a 64-byte boundary.
    let unpadded = 10 + dict.len() + 1;
    let total = unpadded.div_ceil(64) * 64;
    let header_len = total - 10;
    let mut out = Vec::with_capacity(total + m.len() * 8);
    out.extend_from_slice(MAGIC);
    out.push(1);
    out.push(0);
    out.extend_from_slice(&u16::try_from(header_len).expect("header fits u16").to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(total - 1, b' ');
    out.push(b'\n');
    for row in m.outer_iter() {
        for v in row.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parse NPY bytes into a 2-D f64 matrix. `path` is only used in errors.
pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    if bytes.len() < 10 {
        return Err(fmt_err(path, "file shorter than npy preamble"));
    }
    if &bytes[..6] != MAGIC {
        return Err(fmt_err(path, "bad magic"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(fmt_err(path, format!("unsupported npy version {major}.{minor}")));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(fmt_err(path, "truncated header"));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| fmt_err(path, "header is not ASCII"))?;

    let (dtype, fortran, shape) = parse_header(header, path)?;
    if fortran {
        return Err(fmt_err(path, "fortran-order arrays are not supported"));
    }
    let (n, d) = match shape.as_slice() {
        [n, d] => (*n, *d),
        other => {
            return Err(fmt_err(path, format!("expected a 2-D array, got {}-D", other.len())))
        }
    };

    let item = match dtype {
        Dtype::F8 => 8,
        Dtype::F4 => 4,
    };
    let expected = n
        .checked_mul(d)
        .and_then(|e| e.checked_mul(item))
        .ok_or_else(|| fmt_err(path, "shape overflows"))?;
    let data = &bytes[data_start..];
    if data.len() != expected {
        return Err(fmt_err(
            path,
            format!("data section is {} bytes, expected {expected}", data.len()),
        ));
    }

    let flat: Vec<f64> = match dtype {
        Dtype::F8 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F4 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Array2::from_shape_vec((n, d), flat).map_err(|e| fmt_err(path, e.to_string()))
}

/// Extract descr / fortran_order / shape from the header dict literal.
fn parse_header(header: &str, path: &Path) -> Result<(Dtype, bool, Vec<usize>)> {
    let descr = dict_value(header, "descr")
        .ok_or_else(|| fmt_err(path, "header missing 'descr'"))?;
    let dtype = match descr.trim().trim_matches(|c| c == '\'' || c == '"') {
        "<f8" => Dtype::F8,
        "<f4" => Dtype::F4,
        other => return Err(fmt_err(path, format!("unsupported dtype '{other}'"))),
    };

    let fortran = dict_value(header, "fortran_order")
        .ok_or_else(|| fmt_err(path, "header missing 'fortran_order'"))?;
    let fortran = match fortran.trim() {
        "False" => false,
        "True" => true,
        other => return Err(fmt_err(path, format!("bad fortran_order value '{other}'"))),
    };

    let shape_src = dict_value(header, "shape")
        .ok_or_else(|| fmt_err(path, "header missing 'shape'"))?;
    let shape_src = shape_src.trim();
    if !shape_src.starts_with('(') || !shape_src.ends_with(')') {
        return Err(fmt_err(path, "shape is not a tuple"));
    }
    let inner = &shape_src[1..shape_src.len() - 1];
    let mut shape = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue; // trailing comma in 1-tuples
        }
        let v: usize =
            part.parse().map_err(|_| fmt_err(path, format!("bad shape entry '{part}'")))?;
        shape.push(v);
    }
    Ok((dtype, fortran, shape))
}

/// Value of `'key':` up to the next top-level `,` or the closing `}`.
/// Tuples nest one level, which is all the format uses.
fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("'{key}'");
    let start = header.find(&pat)? + pat.len();
    let rest = &header[start..];
    let colon = rest.find(':')?;
    let rest = &rest[colon + 1..];
    let mut depth = 0usize;
    for (i, c) in rest.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' if depth > 0 => depth -= 1,
            ',' | '}' if depth == 0 => return Some(&rest[..i]),
            _ => {}
        }
    }
    Some(rest)
}

pub fn read(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    from_bytes(&bytes, path)
}

pub fn write(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, to_bytes(m)).map_err(|e| io_err(path, e))
}
