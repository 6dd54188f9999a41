//! Netpbm grayscale images, plain (`P2`) and raw (`P5`).

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use klt_mbi_core::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(msg: impl Into<String>) -> PgmError {
    PgmError::Parse(msg.into())
}

/// Decoded image with raw sample values in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| parse_err(format!("{what} out of range")))
    }
}

impl Pgm {
    pub fn parse(data: &[u8]) -> Result<Self, PgmError> {
        if data.len() < 2 || data[0] != b'P' || !(data[1] == b'2' || data[1] == b'5') {
            return Err(parse_err("missing P2/P5 magic number"));
        }
        let binary = data[1] == b'5';
        let mut cur = Cursor { data, pos: 2 };
        let width = cur.number("width")? as usize;
        let height = cur.number("height")? as usize;
        let maxval = cur.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(parse_err("image has zero width or height"));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(parse_err(format!("maxval {maxval} outside 1..=65535")));
        }
        let maxval = maxval as u16;
        let count = width
            .checked_mul(height)
            .ok_or_else(|| parse_err("image dimensions overflow"))?;

        let mut pixels = Vec::with_capacity(count);
        if binary {
            match data.get(cur.pos) {
                Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(parse_err("missing whitespace after maxval")),
            }
            let bytes = if maxval > 255 { 2 } else { 1 };
            let body = &data[cur.pos..];
            if body.len() < count * bytes {
                return Err(parse_err(format!(
                    "raster truncated: {} bytes for {count} pixels",
                    body.len()
                )));
            }
            for k in 0..count {
                let v = if bytes == 2 {
                    u16::from_be_bytes([body[2 * k], body[2 * k + 1]])
                } else {
                    body[k] as u16
                };
                pixels.push(v);
            }
        } else {
            for _ in 0..count {
                let v = cur.number("pixel value")?;
                if v > 65535 {
                    return Err(parse_err("pixel value out of range"));
                }
                pixels.push(v as u16);
            }
        }
        if let Some(&v) = pixels.iter().find(|&&v| v > maxval) {
            return Err(parse_err(format!("pixel value {v} exceeds maxval {maxval}")));
        }
        Ok(Pgm {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// Intensities scaled to `[0, 1]`, `height x width`.
    pub fn to_matrix(&self) -> Matrix {
        let scale = 1.0 / self.maxval as f64;
        Matrix::from_fn(self.height, self.width, |r, c| {
            self.pixels[r * self.width + c] as f64 * scale
        })
    }

    /// Quantizes a matrix of intensities, clamping to `[0, 1]` first.
    pub fn from_matrix(m: &Matrix, maxval: u16) -> Self {
        let (height, width) = m.shape();
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                let v = m[(r, c)];
                let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
                pixels.push((v * maxval as f64).round() as u16);
            }
        }
        Pgm {
            width,
            height,
            maxval,
            pixels,
        }
    }

    /// `P5` encoding; two bytes per sample when `maxval > 255`.
    pub fn to_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        for &v in &self.pixels {
            if self.maxval > 255 {
                out.extend_from_slice(&v.to_be_bytes());
            } else {
                out.push(v as u8);
            }
        }
        out
    }

    /// `P2` encoding, one image row per line.
    pub fn to_p2(&self) -> Vec<u8> {
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn write_p5(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(&self.to_p5())
    }
}

pub fn load_pgm(path: &Path) -> Result<Matrix, PgmError> {
    Ok(Pgm::parse(&fs::read(path)?)?.to_matrix())
}

/// Keeps the 1-based even columns 2, 4, 6, ...
pub fn subsample_even_columns(m: &Matrix) -> Result<Matrix, PgmError> {
    if m.ncols() < 2 {
        return Err(parse_err("need at least two columns to subsample"));
    }
    let keep: Vec<usize> = (1..m.ncols()).step_by(2).collect();
    Ok(m.select_columns(keep.iter()))
}
