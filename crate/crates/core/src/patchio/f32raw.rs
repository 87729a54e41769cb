//! Lossless planar `f32` matrices: a text line `PF32 <width> <height>\n`
//! followed by `width*height` little-endian `f32` values, row-major.

use super::{Label, Patch, PatchError, Result};

pub const F32RAW_MAGIC: &str = "PF32";
const MAX_HEADER_LEN: usize = 64;

/// A dense row-major matrix as stored on disk. `height` rows of `width`
/// values; for patches the rows are image rows, for data matrices each row
/// is one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct F32Raw {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl F32Raw {
    pub fn from_patch(patch: &Patch) -> Self {
        F32Raw {
            width: patch.width(),
            height: patch.height(),
            data: patch.pixels().iter().map(|&p| p as f32).collect(),
        }
    }

    pub fn to_patch(&self, label: Label) -> Result<Patch> {
        Patch::new(self.width, self.height, self.data.iter().map(|&v| v as f64).collect(), label)
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.width..(r + 1) * self.width]
    }
}

pub fn read_f32raw(bytes: &[u8]) -> Result<F32Raw> {
    let (matrix, consumed) = read_f32raw_prefix(bytes)?;
    if consumed != bytes.len() {
        return Err(PatchError::Parse {
            offset: consumed,
            reason: format!("{} trailing bytes after matrix data", bytes.len() - consumed),
        });
    }
    Ok(matrix)
}

/// Reads one matrix from the front of `bytes`, returning it together with
/// the number of bytes consumed. Used for files holding several matrices.
pub fn read_f32raw_prefix(bytes: &[u8]) -> Result<(F32Raw, usize)> {
    let parse_err = |offset: usize, reason: String| PatchError::Parse { offset, reason };
    let newline = bytes
        .iter()
        .take(MAX_HEADER_LEN)
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err(0, "no header line terminator".into()))?;
    let header =
        std::str::from_utf8(&bytes[..newline]).map_err(|e| parse_err(e.valid_up_to(), "header is not UTF-8".into()))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(F32RAW_MAGIC) {
        return Err(parse_err(0, format!("missing {F32RAW_MAGIC} magic")));
    }
    let mut dim = |name: &str| -> Result<usize> {
        let text = fields.next().ok_or_else(|| parse_err(newline, format!("header ends before {name}")))?;
        let offset = text.as_ptr() as usize - header.as_ptr() as usize;
        match text.parse::<usize>() {
            Ok(v) if v > 0 && text.bytes().all(|b| b.is_ascii_digit()) => Ok(v),
            _ => Err(parse_err(offset, format!("invalid {name} {text:?}"))),
        }
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if fields.next().is_some() {
        return Err(parse_err(newline, "trailing header fields".into()));
    }
    let start = newline + 1;
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| parse_err(0, format!("{width}x{height} overflows")))?;
    let available = bytes.len() - start;
    if available < needed {
        return Err(parse_err(bytes.len(), format!("{width}x{height} needs {needed} data bytes, found {available}")));
    }
    let data =
        bytes[start..start + needed].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok((F32Raw { width, height, data }, start + needed))
}

pub fn write_f32raw(matrix: &F32Raw) -> Vec<u8> {
    let mut out = format!("{F32RAW_MAGIC} {} {}\n", matrix.width, matrix.height).into_bytes();
    out.reserve(matrix.data.len() * 4);
    for v in &matrix.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = F32Raw { width: 2, height: 1, data: vec![1.0, -0.5] };
        let bytes = write_f32raw(&m);
        assert_eq!(&bytes[..9], b"PF32 2 1\n");
        assert_eq!(&bytes[9..13], &1.0f32.to_le_bytes());
        assert_eq!(read_f32raw(&bytes).unwrap(), m);
    }

    #[test]
    fn rejects_wrong_lengths_and_headers() {
        assert!(read_f32raw(b"PF32 1 1\n\0\0\0").is_err());
        assert!(read_f32raw(b"PF32 1 1\n\0\0\0\0\0").is_err());
        assert!(read_f32raw(b"PF64 1 1\n\0\0\0\0").is_err());
        assert!(read_f32raw(b"PF32 0 1\n").is_err());
        assert!(read_f32raw(b"PF32 +1 1\n\0\0\0\0").is_err());
        assert!(read_f32raw(b"PF32 1 1 1\n\0\0\0\0").is_err());
    }

    #[test]
    fn patch_conversion_is_lossless_for_f32_values() {
        let p = Patch::new(2, 2, vec![0.0, 0.25, 0.5, 1.0], Label::Normal).unwrap();
        let back = F32Raw::from_patch(&p).to_patch(Label::Normal).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..8, h in 1usize..8, seed in any::<u32>()) {
            let data: Vec<f32> = (0..w * h).map(|i| (seed as f32) * 0.001 - i as f32).collect();
            let m = F32Raw { width: w, height: h, data };
            prop_assert_eq!(read_f32raw(&write_f32raw(&m)).unwrap(), m);
        }

        #[test]
        fn never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..48)) {
            let mut data = b"PF32 ".to_vec();
            data.extend(bytes);
            let _ = read_f32raw(&data);
        }
    }
}
