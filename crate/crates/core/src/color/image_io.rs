//! 8-bit RGB images: binary PPM (P6) read/write, PNG read/write.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // Skip whitespace and comments.
            while pos < bytes.len() {
                if bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                } else if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Image("truncated PPM header".into()));
            }
            fields.push(
                std::str::from_utf8(&bytes[start..pos])
                    .map_err(|_| Error::Image("non-ASCII PPM header".into()))?
                    .to_owned(),
            );
        }
        if fields[0] != "P6" {
            return Err(Error::Image(format!(
                "unsupported PPM magic {:?}",
                fields[0]
            )));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Image(format!("bad PPM header field {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(Error::Image(format!(
                "only 8-bit PPM supported, maxval {maxval}"
            )));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let need = width * height * 3;
        let data = bytes
            .get(pos..pos + need)
            .ok_or_else(|| Error::Image("truncated PPM raster".into()))?;
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    /// Reads PPM or PNG, chosen by content.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = crate::error::read_file(path.as_ref())?;
        if bytes.starts_with(b"P6") {
            return Self::from_ppm(&bytes);
        }
        let img = image::load_from_memory(&bytes)
            .map_err(|e| Error::Image(format!("{}: {e}", path.as_ref().display())))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(w as usize, h as usize, pixels)
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .ok_or_else(|| Error::Image("pixel buffer size mismatch".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// PNG bytes when the path ends in `.png`, PPM otherwise.
    pub fn encode_for(&self, path: impl AsRef<Path>) -> Result<Vec<u8>> {
        let is_png = path
            .as_ref()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            self.to_png()
        } else {
            Ok(self.to_ppm())
        }
    }

    /// Writes PNG when the extension is `.png`, PPM otherwise.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.encode_for(path.as_ref())?;
        std::fs::write(path, bytes)?;
        Ok(())
    }
}

/// `v/255`.
pub fn normalize(c: u8) -> f64 {
    c as f64 / 255.0
}

/// `round(v·255)` clamped to `0..=255`.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}
