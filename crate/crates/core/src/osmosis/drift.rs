use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Drift vector field sampled on the staggered half-grid: `dx` lives on
/// vertical faces between horizontal pixel neighbours ((width−1)×height per
/// channel), `dy` on horizontal faces ((height−1) rows of width values per
/// channel). Units are 1/length.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    width: usize,
    height: usize,
    channels: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl DriftField {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        dx: Vec<f64>,
        dy: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height}x{channels}"
            )));
        }
        let nx = (width - 1) * height * channels;
        let ny = width * (height - 1) * channels;
        if dx.len() != nx || dy.len() != ny {
            return Err(Error::ShapeMismatch {
                expected: format!("dx {nx}, dy {ny}"),
                actual: format!("dx {}, dy {}", dx.len(), dy.len()),
            });
        }
        if let Some(index) = dx.iter().chain(dy.iter()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            channels,
            dx,
            dy,
        })
    }

    /// Zero drift: the assembled operator degenerates to the Neumann
    /// Laplacian (homogeneous diffusion).
    pub fn zero(width: usize, height: usize, channels: usize) -> Result<Self> {
        let dx = vec![0.0; width.saturating_sub(1) * height * channels];
        let dy = vec![0.0; width * height.saturating_sub(1) * channels];
        Self::new(width, height, channels, dx, dy)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Drift on the vertical face between pixels (x, y) and (x+1, y).
    pub fn dx_at(&self, x: usize, y: usize, c: usize) -> f64 {
        debug_assert!(x + 1 < self.width && y < self.height && c < self.channels);
        self.dx[(y * (self.width - 1) + x) * self.channels + c]
    }

    /// Drift on the horizontal face between pixels (x, y) and (x, y+1).
    pub fn dy_at(&self, x: usize, y: usize, c: usize) -> f64 {
        debug_assert!(x < self.width && y + 1 < self.height && c < self.channels);
        self.dy[(y * self.width + x) * self.channels + c]
    }

    /// Largest |d|·h/2 over all faces: the grid number that must stay ≤ 1
    /// for the assembled operator to keep nonnegative off-diagonals.
    pub fn max_grid_number(&self, h: f64) -> f64 {
        self.dx
            .iter()
            .chain(self.dy.iter())
            .fold(0.0f64, |acc, d| acc.max(d.abs()))
            * h
            / 2.0
    }
}

/// Canonical drift d = ∇v/v of a strictly positive guidance image,
/// discretised on faces as d_f = 2·(v_R − v_L)/(h·(v_R + v_L)).
///
/// This specific average makes the assembled operator annihilate v: the
/// face flux −(v_R − v_L)/h + d_f·(v_L + v_R)/2 cancels algebraically, so
/// A·v = 0 up to rounding. For positive v the grid number |d|·h/2 =
/// |v_R − v_L|/(v_R + v_L) < 1 automatically, so positivity of the implicit
/// scheme never constrains the guidance.
pub fn canonical_drift(v: &ImageBuffer, h: f64) -> Result<DriftField> {
    if !(h > 0.0) {
        return Err(Error::NonPositive {
            value: h,
            context: "grid spacing".into(),
        });
    }
    let min = v.min_value();
    if min <= 0.0 {
        return Err(Error::NonPositive {
            value: min,
            context: "guidance image for canonical drift".into(),
        });
    }
    let (w, ht, c) = (v.width(), v.height(), v.channels());
    let mut dx = Vec::with_capacity(w.saturating_sub(1) * ht * c);
    for y in 0..ht {
        for x in 0..w.saturating_sub(1) {
            for ch in 0..c {
                let l = v.get(x, y, ch);
                let r = v.get(x + 1, y, ch);
                dx.push(2.0 * (r - l) / (h * (r + l)));
            }
        }
    }
    let mut dy = Vec::with_capacity(w * ht.saturating_sub(1) * c);
    for y in 0..ht.saturating_sub(1) {
        for x in 0..w {
            for ch in 0..c {
                let t = v.get(x, y, ch);
                let b = v.get(x, y + 1, ch);
                dy.push(2.0 * (b - t) / (h * (b + t)));
            }
        }
    }
    DriftField::new(w, ht, c, dx, dy)
}
