//! Netpbm image I/O: P2/P3 (ASCII) and P5/P6 (binary) with maxval up to
//! 65535; two-byte samples are big-endian per the format. Values are kept
//! as exact reals in [0, maxval] with no rescaling.

use anyhow::{bail, ensure, Context, Result};
use driftscale::ImageBuffer;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    AsciiGray,
    AsciiRgb,
    BinaryGray,
    BinaryRgb,
}

impl Format {
    fn channels(self) -> usize {
        match self {
            Format::AsciiGray | Format::BinaryGray => 1,
            Format::AsciiRgb | Format::BinaryRgb => 3,
        }
    }

    fn binary(self) -> bool {
        matches!(self, Format::BinaryGray | Format::BinaryRgb)
    }
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Skips whitespace and `#`-to-end-of-line comments.
    fn skip_filler(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && !matches!(self.bytes[self.pos], b'\n' | b'\r')
                {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_filler();
        ensure!(self.pos < self.bytes.len(), "unexpected end of file in header");
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token()?;
        let s = std::str::from_utf8(tok).ok().filter(|s| !s.is_empty());
        s.and_then(|s| s.parse::<u32>().ok())
            .with_context(|| format!("malformed {what} token {:?}", String::from_utf8_lossy(tok)))
    }

    /// Exactly one whitespace byte separates the maxval from binary payload.
    fn single_separator(&mut self) -> Result<()> {
        ensure!(
            self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace(),
            "missing whitespace between header and binary payload"
        );
        self.pos += 1;
        Ok(())
    }

    fn at_clean_end(&mut self) -> bool {
        self.skip_filler();
        self.pos == self.bytes.len()
    }
}

/// Decodes a PNM byte stream into an image.
pub fn parse_pnm(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut toks = Tokens::new(bytes);
    let magic = toks.token().context("missing magic number")?;
    let format = match magic {
        b"P2" => Format::AsciiGray,
        b"P3" => Format::AsciiRgb,
        b"P5" => Format::BinaryGray,
        b"P6" => Format::BinaryRgb,
        other => bail!(
            "unsupported magic {:?} (only P2/P3/P5/P6 are handled)",
            String::from_utf8_lossy(other)
        ),
    };

    let width = toks.number("width")? as usize;
    let height = toks.number("height")? as usize;
    let maxval = toks.number("maxval")?;
    ensure!(
        (1..=65535).contains(&maxval),
        "maxval {maxval} outside the supported range 1..=65535"
    );

    let channels = format.channels();
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .context("image dimensions overflow")?;
    let mut data = Vec::with_capacity(count);

    if format.binary() {
        toks.single_separator()?;
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        let payload = &bytes[toks.pos..];
        ensure!(
            payload.len() >= count * bytes_per,
            "truncated payload: expected {} bytes, found {}",
            count * bytes_per,
            payload.len()
        );
        ensure!(
            payload.len() == count * bytes_per,
            "trailing data after payload: {} extra bytes",
            payload.len() - count * bytes_per
        );
        if bytes_per == 1 {
            for &b in payload {
                ensure!(u32::from(b) <= maxval, "sample {b} exceeds maxval {maxval}");
                data.push(f64::from(b));
            }
        } else {
            for pair in payload.chunks_exact(2) {
                let v = u32::from(u16::from_be_bytes([pair[0], pair[1]]));
                ensure!(v <= maxval, "sample {v} exceeds maxval {maxval}");
                data.push(f64::from(v));
            }
        }
    } else {
        for _ in 0..count {
            let v = toks.number("sample")?;
            ensure!(v <= maxval, "sample {v} exceeds maxval {maxval}");
            data.push(f64::from(v));
        }
        ensure!(toks.at_clean_end(), "trailing data after samples");
    }

    ImageBuffer::new(width, height, channels, data).map_err(Into::into)
}

pub fn read_pnm(path: &Path) -> Result<ImageBuffer> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading image {}", path.display()))?;
    parse_pnm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Encodes as P5 (1 channel) or P6 (3 channels). Values are rounded to the
/// nearest integer and clamped to [0, maxval]; the second return value is
/// the fraction of samples that needed clamping.
pub fn encode_pnm(img: &ImageBuffer, maxval: u16) -> Result<(Vec<u8>, f64)> {
    ensure!(maxval >= 1, "maxval must be at least 1");
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => bail!("cannot encode {c}-channel image as PNM (need 1 or 3)"),
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();

    let top = f64::from(maxval);
    let mut clamped = 0usize;
    for &x in img.as_slice() {
        let rounded = x.round();
        if rounded < 0.0 || rounded > top {
            clamped += 1;
        }
        let v = rounded.clamp(0.0, top) as u16;
        if maxval > 255 {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    Ok((out, clamped as f64 / img.element_count() as f64))
}

/// Writes the image; returns the clamped-sample fraction (see
/// [`encode_pnm`]).
pub fn write_pnm(img: &ImageBuffer, path: &Path, maxval: u16) -> Result<f64> {
    let (bytes, clamped) = encode_pnm(img, maxval)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(clamped)
}
