//! Value-range transforms between file pixels and the processing domains.
//!
//! Noising works on standardized images ((x − μ)/σ over all samples) whose
//! steady state is unit white noise; frames in that range are rendered by
//! the affine display map [−4, 4] → [0, maxval] with clamping. Osmosis
//! needs strict positivity, so file pixels are offset by +1 (range
//! [1, maxval+1]) before processing and −1 on output. The synthetic
//! "noise:SEED" guidance pushes a standard-normal field through the display
//! map and the positive offset, giving values in [1, 256].

use anyhow::{ensure, Result};
use driftscale::{sample_standard_normal, ImageBuffer, RngStream};

pub const DISPLAY_LO: f64 = -4.0;
pub const DISPLAY_HI: f64 = 4.0;

/// (x − μ)/σ with μ, σ over all samples; rejects constant images.
pub fn standardize(img: &ImageBuffer) -> Result<(ImageBuffer, f64, f64)> {
    let mu = img.mean_all();
    let sigma = img.variance_all().sqrt();
    ensure!(
        sigma > 0.0,
        "constant image cannot be standardized (sigma = 0)"
    );
    let out = img.map(|x| (x - mu) / sigma)?;
    Ok((out, mu, sigma))
}

/// Affine map [−4, 4] → [0, maxval]; out-of-range values are left to the
/// PNM writer, which clamps and reports the fraction.
pub fn noise_to_display(img: &ImageBuffer, maxval: u16) -> Result<ImageBuffer> {
    let scale = f64::from(maxval) / (DISPLAY_HI - DISPLAY_LO);
    img.map(|x| (x - DISPLAY_LO) * scale).map_err(Into::into)
}

/// +1 grey-level offset guaranteeing strict positivity for osmosis.
pub fn offset_up(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.map(|x| x + 1.0).map_err(Into::into)
}

/// Inverse of [`offset_up`], applied before frames are written back.
pub fn offset_down(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.map(|x| x - 1.0).map_err(Into::into)
}

/// Positive noise guidance: standard normals clamped to the display range,
/// mapped to [0, 255], then offset into [1, 256].
pub fn noise_guidance(width: usize, height: usize, channels: usize, seed: u64) -> Result<ImageBuffer> {
    let mut rng = RngStream::new(seed);
    let g = sample_standard_normal(&mut rng, width, height, channels)?;
    let scale = 255.0 / (DISPLAY_HI - DISPLAY_LO);
    let v = g.map(|x| 1.0 + (x.clamp(DISPLAY_LO, DISPLAY_HI) - DISPLAY_LO) * scale)?;
    Ok(v)
}
