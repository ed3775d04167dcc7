//! Matrix and label file formats.
//!
//! * CSV: comma separated, one matrix row per line, no header by default. An
//!   optional first line `# rows,cols` declares the shape and is checked.
//! * raw_f64: `b"LEMA"`, version `u32` LE, rows `u64` LE, cols `u64` LE, then
//!   `rows × cols` `f64` LE in row-major order.
//! * labels: one 1-based integer class index per line.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::Labels;
use crate::error::{Error, Result};
use crate::numerics::Mat;

pub(crate) const RAW_MAGIC: &[u8; 4] = b"LEMA";
pub(crate) const RAW_VERSION: u32 = 1;
const RAW_HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    RawF64,
}

impl MatrixFormat {
    /// `.bin`, `.raw` and `.f64` are raw_f64; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "raw" | "f64") => MatrixFormat::RawF64,
            _ => MatrixFormat::Csv,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "raw" | "raw_f64" => Ok(MatrixFormat::RawF64),
            other => Err(Error::InvalidArgument(format!("unknown matrix format '{other}'"))),
        }
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<Mat<f64>> {
    match format {
        MatrixFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            read_csv(&text, path)
        }
        MatrixFormat::RawF64 => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            read_raw_f64(&bytes, path)
        }
    }
}

pub fn save_matrix(path: &Path, m: &Mat<f64>, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Csv => write_csv(m).into_bytes(),
        MatrixFormat::RawF64 => write_raw_f64(m),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_shape_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let (r, c) = rest.split_once(',')?;
    Some((r.trim().parse().ok()?, c.trim().parse().ok()?))
}

/// Parses CSV text; `origin` is only used in error messages.
pub fn read_csv(text: &str, origin: &Path) -> Result<Mat<f64>> {
    let mut declared = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if rows.is_empty() && declared.is_none() {
                declared = Some(parse_shape_header(line).ok_or_else(|| {
                    Error::parse(origin, lineno, "header must read '# rows,cols'")
                })?);
            }
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(origin, lineno, format!("cannot parse '{}' as a number", field.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(origin, lineno, "non-finite entry"));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("ragged row: expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some((r, c)) = declared {
        // A header can declare an empty matrix with a known feature count.
        let shape_ok = (nrows == r && ncols == c) || (nrows == 0 && (r == 0 || c == 0));
        if !shape_ok {
            return Err(Error::parse(
                origin,
                1,
                format!("header declares {r}x{c}, data is {nrows}x{ncols}"),
            ));
        }
        if nrows == 0 {
            return Ok(Mat::zeros(r, c));
        }
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Formats with the shortest round-trip representation of each entry. Empty
/// matrices get a `# rows,cols` header so the shape survives.
pub fn write_csv(m: &Mat<f64>) -> String {
    let mut out = String::new();
    if m.nrows() == 0 || m.ncols() == 0 {
        out.push_str(&format!("# {},{}\n", m.nrows(), m.ncols()));
        return out;
    }
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_raw_f64(m: &Mat<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * m.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn read_raw_f64(bytes: &[u8], origin: &Path) -> Result<Mat<f64>> {
    let (m, used) = read_raw_prefix(bytes, origin)?;
    if used != bytes.len() {
        return Err(Error::parse(
            origin,
            0,
            format!("{} trailing bytes after matrix payload", bytes.len() - used),
        ));
    }
    Ok(m)
}

/// Reads one raw_f64 matrix from the front of `bytes`, returning it together
/// with the number of bytes consumed.
pub(crate) fn read_raw_prefix(bytes: &[u8], origin: &Path) -> Result<(Mat<f64>, usize)> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err(Error::parse(origin, 0, "missing LEMA magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != RAW_VERSION {
        return Err(Error::parse(origin, 0, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::parse(origin, 0, "shape overflows"))?;
    let end = count
        .checked_mul(8)
        .and_then(|b| b.checked_add(RAW_HEADER_LEN))
        .ok_or_else(|| Error::parse(origin, 0, "shape overflows"))?;
    if bytes.len() < end {
        return Err(Error::parse(
            origin,
            0,
            format!("payload truncated: header declares {rows}x{cols}"),
        ));
    }
    let payload = &bytes[RAW_HEADER_LEN..end];
    let mut m = Mat::zeros(rows, cols);
    for (k, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if v.is_nan() {
            return Err(Error::parse(origin, 0, format!("NaN entry at index {k}")));
        }
        m[(k / cols, k % cols)] = v;
    }
    Ok((m, end))
}

pub fn load_labels(path: &Path) -> Result<Labels> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let l: usize = line
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("'{line}' is not a class index")))?;
        if l == 0 {
            return Err(Error::parse(path, idx + 1, "class indices are 1-based"));
        }
        v.push(l);
    }
    Labels::new(v)
}

pub fn save_labels(path: &Path, labels: &Labels) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels.as_slice() {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
