//! Raw RGB frames, four-color quantization, and binary PPM (P6) I/O.
//!
//! The camera feed is reduced to four colors ordered by decreasing
//! temperature: blue (hottest), green, red, black (no emission). Each
//! channel is thresholded against a high cutoff and overlaps are resolved
//! with hotter-color precedence, so every pixel ends up with exactly one
//! code.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One of the four quantized colors, ordered by the temperature band it
/// stands for (blue hottest, black coldest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorCode {
    Black,
    Red,
    Green,
    Blue,
}

impl ColorCode {
    /// RGB primary used when a quantized image is rendered back to raw RGB.
    pub fn primary(self) -> [u8; 3] {
        match self {
            ColorCode::Black => [0, 0, 0],
            ColorCode::Red => [255, 0, 0],
            ColorCode::Green => [0, 255, 0],
            ColorCode::Blue => [0, 0, 255],
        }
    }
}

/// Per-channel binarization cutoffs, each in `1..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelCutoffs {
    pub red: u8,
    pub green: u8,
    pub blue: u8,
}

impl Default for ChannelCutoffs {
    fn default() -> Self {
        ChannelCutoffs {
            red: 200,
            green: 200,
            blue: 200,
        }
    }
}

impl ChannelCutoffs {
    pub fn validate(&self) -> Result<()> {
        if self.red == 0 || self.green == 0 || self.blue == 0 {
            return Err(Error::invalid("channel cutoffs must be in 1..=255"));
        }
        Ok(())
    }
}

/// Row-major RGB frame. `width` and `height` are always nonzero and
/// `pixels.len() == width * height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    /// Builds a frame from raw row-major pixels, rejecting zero dimensions
    /// or a mismatched pixel count.
    pub fn from_raw(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be nonzero"));
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    /// All-black frame.
    pub fn black(width: u32, height: u32) -> Result<Self> {
        Self::from_raw(width, height, vec![[0, 0, 0]; (width * height) as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.pixels[(y * self.width + x) as usize] = rgb;
    }

    /// Writes the frame as a binary PPM (P6, maxval 255).
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        w.write_all(header.as_bytes())
            .and_then(|_| {
                for px in &self.pixels {
                    w.write_all(px)?;
                }
                w.flush()
            })
            .map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a binary PPM (P6, maxval 255). Header comments are skipped.
    pub fn read_ppm(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);

        let bad = |message: &str| Error::ImageFormat {
            path: path.to_path_buf(),
            message: message.to_string(),
        };

        let mut magic = [0u8; 2];
        reader
            .read_exact(&mut magic)
            .map_err(|e| Error::io(path, e))?;
        if &magic != b"P6" {
            return Err(bad("expected P6 magic"));
        }

        let mut fields = Vec::with_capacity(3);
        while fields.len() < 3 {
            let tok = read_header_token(&mut reader).map_err(|e| Error::io(path, e))?;
            match tok {
                Some(t) => fields.push(t),
                None => return Err(bad("truncated header")),
            }
        }
        let width: u32 = fields[0].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = fields[1].parse().map_err(|_| bad("bad height"))?;
        let maxval: u32 = fields[2].parse().map_err(|_| bad("bad maxval"))?;
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }

        let count = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| bad("dimensions overflow"))?;
        let mut body = vec![0u8; count * 3];
        reader
            .read_exact(&mut body)
            .map_err(|e| Error::io(path, e))?;
        let pixels = body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        RgbImage::from_raw(width, height, pixels)
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
/// Stops right after the token so the binary body is left untouched.
fn read_header_token<R: BufRead>(r: &mut R) -> std::io::Result<Option<String>> {
    let mut tok = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        let n = r.read(&mut byte)?;
        if n == 0 {
            return Ok(if tok.is_empty() { None } else { Some(tok) });
        }
        let c = byte[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(Some(tok));
            }
            continue;
        }
        tok.push(c);
    }
}

/// Four-color frame produced by [`quantize`]. Same dimensions as its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: u32,
    height: u32,
    codes: Vec<ColorCode>,
}

impl QuantizedImage {
    pub fn from_codes(width: u32, height: u32, codes: Vec<ColorCode>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be nonzero"));
        }
        if codes.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid("code count does not match dimensions"));
        }
        Ok(QuantizedImage {
            width,
            height,
            codes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn codes(&self) -> &[ColorCode] {
        &self.codes
    }

    pub fn get(&self, x: u32, y: u32) -> ColorCode {
        self.codes[(y * self.width + x) as usize]
    }

    /// Pixel count per code, in (black, red, green, blue) order.
    pub fn histogram(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for code in &self.codes {
            match code {
                ColorCode::Black => counts[0] += 1,
                ColorCode::Red => counts[1] += 1,
                ColorCode::Green => counts[2] += 1,
                ColorCode::Blue => counts[3] += 1,
            }
        }
        counts
    }

    /// Renders back to raw RGB using the four primaries. Round-trips
    /// bit-exactly through [`quantize`] with any cutoffs below 255.
    pub fn to_rgb(&self) -> RgbImage {
        let pixels = self.codes.iter().map(|c| c.primary()).collect();
        RgbImage::from_raw(self.width, self.height, pixels).expect("dimensions already validated")
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        self.to_rgb().write_ppm(path)
    }
}

/// Thresholds each channel against its cutoff and resolves overlaps with
/// hotter-color precedence (blue over green over red). Pixels where no
/// channel exceeds its cutoff come out black.
pub fn quantize(img: &RgbImage, cutoffs: ChannelCutoffs) -> Result<QuantizedImage> {
    cutoffs.validate()?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::invalid("image dimensions must be nonzero"));
    }
    let codes = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| {
            if b > cutoffs.blue {
                ColorCode::Blue
            } else if g > cutoffs.green {
                ColorCode::Green
            } else if r > cutoffs.red {
                ColorCode::Red
            } else {
                ColorCode::Black
            }
        })
        .collect();
    QuantizedImage::from_codes(img.width(), img.height(), codes)
}
