//! File formats: binary PGM (P5) for label maps and grayscale renders, and
//! the SEGT container for probability/logit tensors.
//!
//! SEGT layout: magic bytes `SEGT`, three little-endian `u32` values
//! (height, width, channels), then `h*w*c` IEEE-754 `f32` little-endian
//! values in row-major, channel-outermost order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor};

pub const SEGT_MAGIC: &[u8; 4] = b"SEGT";

fn format_err(format: &'static str, detail: impl Into<String>) -> Error {
    Error::Format {
        format,
        detail: detail.into(),
    }
}

/// Read one header token, skipping whitespace and `#` comments.
fn read_pgm_token(reader: &mut impl Read) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    let mut in_comment = false;
    loop {
        if reader.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(format_err("PGM", "unexpected end of header"));
            }
            return Ok(token);
        }
        let ch = byte[0];
        if in_comment {
            if ch == b'\n' {
                in_comment = false;
            }
            continue;
        }
        match ch {
            b'#' => in_comment = true,
            b' ' | b'\t' | b'\r' | b'\n' => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            _ => token.push(ch as char),
        }
    }
}

fn parse_dim(token: &str, what: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| format_err("PGM", format!("invalid {what}: {token:?}")))
}

/// Read a binary (P5) 8-bit PGM. Returns `(height, width, bytes)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 2];
    reader.read_exact(&mut magic)?;
    if &magic != b"P5" {
        return Err(format_err(
            "PGM",
            format!("bad magic {:?}, expected \"P5\"", String::from_utf8_lossy(&magic)),
        ));
    }
    let width = parse_dim(&read_pgm_token(&mut reader)?, "width")?;
    let height = parse_dim(&read_pgm_token(&mut reader)?, "height")?;
    let maxval = parse_dim(&read_pgm_token(&mut reader)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format_err("PGM", format!("unsupported maxval {maxval}")));
    }
    let mut data = vec![0u8; height * width];
    reader.read_exact(&mut data)?;
    Ok((height, width, data))
}

/// Write a binary (P5) 8-bit PGM.
pub fn write_pgm(path: &Path, height: usize, width: usize, data: &[u8]) -> Result<()> {
    if data.len() != height * width {
        return Err(Error::shape(
            "write_pgm",
            format!("{}x{}", height, width),
            format!("{} bytes", data.len()),
        ));
    }
    let mut writer = BufWriter::new(File::create(path)?);
    write!(writer, "P5\n{} {}\n255\n", width, height)?;
    writer.write_all(data)?;
    writer.flush()?;
    Ok(())
}

/// Read a label map from PGM; pixel value is the class id, 255 is void.
/// With `class_count = None` the count is inferred as `max id + 1`
/// over non-void pixels (at least 1).
pub fn read_labels_pgm(path: &Path, class_count: Option<usize>) -> Result<LabelMap> {
    let (h, w, data) = read_pgm(path)?;
    let c = match class_count {
        Some(c) => c,
        None => data
            .iter()
            .filter(|&&v| v != crate::grid::VOID)
            .map(|&v| v as usize + 1)
            .max()
            .unwrap_or(1),
    };
    LabelMap::new(h, w, c, data)
}

pub fn write_labels_pgm(path: &Path, labels: &LabelMap) -> Result<()> {
    write_pgm(path, labels.height(), labels.width(), labels.ids())
}

/// Write a tensor as SEGT. Values are stored as `f32`.
pub fn write_segt(path: &Path, tensor: &Tensor) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_segt_to(&mut writer, tensor)?;
    writer.flush()?;
    Ok(())
}

pub fn write_segt_to(writer: &mut impl Write, tensor: &Tensor) -> Result<()> {
    writer.write_all(SEGT_MAGIC)?;
    writer.write_all(&(tensor.height() as u32).to_le_bytes())?;
    writer.write_all(&(tensor.width() as u32).to_le_bytes())?;
    writer.write_all(&(tensor.channels() as u32).to_le_bytes())?;
    for &v in tensor.as_slice() {
        writer.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_segt(path: &Path) -> Result<Tensor> {
    let mut reader = BufReader::new(File::open(path)?);
    read_segt_from(&mut reader)
}

pub fn read_segt_from(reader: &mut impl Read) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != SEGT_MAGIC {
        return Err(format_err(
            "SEGT",
            format!("bad magic {:?}, expected \"SEGT\"", String::from_utf8_lossy(&magic)),
        ));
    }
    let mut dims = [0u32; 3];
    for d in &mut dims {
        let mut buf = [0u8; 4];
        reader.read_exact(&mut buf)?;
        *d = u32::from_le_bytes(buf);
    }
    let (h, w, c) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let count = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(c))
        .ok_or_else(|| format_err("SEGT", "dimension overflow"))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 4];
    for _ in 0..count {
        reader.read_exact(&mut buf)?;
        data.push(f32::from_le_bytes(buf) as f64);
    }
    Tensor::from_vec(h, w, c, data)
}

/// Peek at the first bytes of a file to classify it as PGM or SEGT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Pgm,
    Segt,
    Unknown,
}

pub fn sniff_kind(path: &Path) -> Result<FileKind> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic)?;
    if n >= 4 && &magic == SEGT_MAGIC {
        Ok(FileKind::Segt)
    } else if n >= 2 && &magic[..2] == b"P5" {
        Ok(FileKind::Pgm)
    } else {
        Ok(FileKind::Unknown)
    }
}
