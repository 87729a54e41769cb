//! Binary PGM (P5) reader and writer.

use super::{quantize_u8, Label, Patch, PatchError, Result};

const MAGIC: &[u8; 2] = b"P5";
// Largest decimal header field we accept; keeps fuzzed headers from
// overflowing before the length check.
const MAX_FIELD_DIGITS: usize = 9;

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn err(&self, reason: impl Into<String>) -> PatchError {
        PatchError::Parse { offset: self.pos, reason: reason.into() }
    }

    /// Skips whitespace and `#` comments running to end of line.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn field(&mut self, name: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(self.pos) {
                None => self.err(format!("header ends before {name}")),
                Some(_) => self.err(format!("expected decimal {name}")),
            });
        }
        if self.pos - start > MAX_FIELD_DIGITS {
            self.pos = start;
            return Err(self.err(format!("{name} is too large")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        Ok(text.parse().expect("bounded digit run"))
    }
}

/// Decodes a binary PGM. Samples are scaled by `1/maxval` into `[0, 1]`;
/// 16-bit samples are big-endian as the format requires.
pub fn read_pgm(bytes: &[u8]) -> Result<Patch> {
    if bytes.len() < MAGIC.len() || &bytes[..2] != MAGIC {
        return Err(PatchError::Parse { offset: 0, reason: "missing P5 magic".into() });
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(cur.err("expected whitespace after magic"));
    }
    let width = cur.field("width")?;
    let height = cur.field("height")?;
    let maxval_offset = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.field("maxval")?;
    if width == 0 || height == 0 {
        return Err(PatchError::Parse { offset: 2, reason: format!("zero dimension {width}x{height}") });
    }
    let sample_bytes = match maxval {
        255 => 1,
        65535 => 2,
        other => {
            return Err(PatchError::Parse {
                offset: maxval_offset,
                reason: format!("unsupported maxval {other} (expected 255 or 65535)"),
            })
        }
    };
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(cur.err("expected single whitespace before raster")),
        None => return Err(cur.err("header ends before raster")),
    }
    let data_start = cur.pos;
    let count = width * height;
    let needed = count * sample_bytes;
    let available = bytes.len() - data_start;
    if available < needed {
        return Err(PatchError::Parse {
            offset: bytes.len(),
            reason: format!("truncated raster: {width}x{height} needs {needed} bytes, found {available}"),
        });
    }
    let raster = &bytes[data_start..data_start + needed];
    let scale = maxval as f64;
    let pixels = if sample_bytes == 1 {
        raster.iter().map(|&b| b as f64 / scale).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale).collect()
    };
    Patch::new(width, height, pixels, Label::Unlabeled)
}

/// Encodes as 8-bit binary PGM, rounding half away from zero.
pub fn write_pgm(patch: &Patch) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", patch.width(), patch.height()).into_bytes();
    out.extend(patch.pixels().iter().map(|&p| quantize_u8(p)));
    out
}
