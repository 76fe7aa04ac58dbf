//! Netpbm gray and color images: `P2`/`P5` (PGM) and `P3`/`P6` (PPM).

use std::path::Path;

use super::ImageGrid;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnmEncoding {
    Plain,
    Binary,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::ImageParse {
        offset,
        message: message.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if start >= self.bytes.len() {
                parse_err(start, format!("unexpected end of data while reading {what}"))
            } else {
                parse_err(start, format!("expected {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(start, format!("{what} is out of range")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(parse_err(0, "missing P magic"));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'3' => (3, false),
        b'5' => (1, true),
        b'6' => (3, true),
        other => {
            return Err(parse_err(1, format!("unsupported format P{}", other as char)));
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(2, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| parse_err(2, "image dimensions overflow"))?;
    let scale = 1.0 / maxval as f64;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(parse_err(cur.pos, "expected a single whitespace before binary data")),
        }
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let need = count * sample_bytes;
        let data = &bytes[cur.pos..];
        if data.len() < need {
            return Err(parse_err(
                bytes.len(),
                format!("truncated payload: need {need} bytes, found {}", data.len()),
            ));
        }
        for i in 0..count {
            let raw = if sample_bytes == 1 {
                data[i] as usize
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as usize
            };
            if raw > maxval {
                return Err(parse_err(cur.pos + i * sample_bytes, "sample exceeds maxval"));
            }
            pixels.push(raw as f64 * scale);
        }
    } else {
        for _ in 0..count {
            cur.skip_space_and_comments();
            let at = cur.pos;
            let raw = cur.number("sample")?;
            if raw > maxval {
                return Err(parse_err(at, "sample exceeds maxval"));
            }
            pixels.push(raw as f64 * scale);
        }
    }
    ImageGrid::new(width, height, channels, pixels)
}

/// Encodes with the given `maxval` (255 or 65535 recommended).
pub fn encode_pnm(img: &ImageGrid, encoding: PnmEncoding, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let magic = match (img.channels(), encoding) {
        (1, PnmEncoding::Plain) => "P2",
        (1, PnmEncoding::Binary) => "P5",
        (_, PnmEncoding::Plain) => "P3",
        (_, PnmEncoding::Binary) => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
    let quantize = |v: f64| (v * maxval as f64).round() as u16;
    match encoding {
        PnmEncoding::Binary => {
            for &v in img.pixels() {
                let q = quantize(v);
                if maxval < 256 {
                    out.push(q as u8);
                } else {
                    out.extend_from_slice(&q.to_be_bytes());
                }
            }
        }
        PnmEncoding::Plain => {
            let per_line = img.width() * img.channels();
            for (i, &v) in img.pixels().iter().enumerate() {
                out.extend_from_slice(quantize(v).to_string().as_bytes());
                out.push(if (i + 1) % per_line == 0 { b'\n' } else { b' ' });
            }
        }
    }
    out
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    decode_pnm(&std::fs::read(path)?)
}

/// Writes binary 16-bit PGM/PPM.
pub fn save_image(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pnm(img, PnmEncoding::Binary, 65535))?;
    Ok(())
}
