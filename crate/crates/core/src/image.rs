use crate::error::{Error, Result};

/// Dense row-major image with interleaved channels.
///
/// The element for pixel `(x, y)` and channel `c` lives at index
/// `(y * width + x) * channels + c`. All stored values are finite; the
/// constructors enforce this so numerical kernels can skip the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Wraps an existing vector. Fails on zero dimensions, length mismatch,
    /// or non-finite entries.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height}x{channels}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| {
                Error::InvalidDimensions(format!("{width}x{height}x{channels} overflows usize"))
            })?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} elements"),
                actual: format!("{} elements", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// All-zero image.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0.0)
    }

    /// Constant image.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height}x{channels}"
            )));
        }
        let len = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| {
                Error::InvalidDimensions(format!("{width}x{height}x{channels} overflows usize"))
            })?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; len],
        })
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

    /// Number of pixels (`width * height`).
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Number of scalar elements (`width * height * channels`).
    pub fn element_count(&self) -> usize {
        self.data.len()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Flat index of pixel `(x, y)`, channel `c`. Debug-asserts bounds.
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the raw elements. Callers must keep values finite;
    /// downstream code is entitled to assume it.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New image of the same shape with `f` applied elementwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        Self::new(self.width, self.height, self.channels, data)
    }

    /// Elementwise `a*self + b*other`. Shapes must match.
    pub fn affine_combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch {
                expected: self.shape_string(),
                actual: other.shape_string(),
            });
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Self::new(self.width, self.height, self.channels, data)
    }

    /// Copies channel `c` out as a contiguous plane of `width*height` values.
    pub fn channel_plane(&self, c: usize) -> Vec<f64> {
        assert!(c < self.channels, "channel {c} out of range");
        self.data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect()
    }

    /// Rebuilds an interleaved image from per-channel planes.
    pub fn from_planes(width: usize, height: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let channels = planes.len();
        if channels == 0 {
            return Err(Error::InvalidDimensions("no channel planes".into()));
        }
        let pixels = width * height;
        if let Some(bad) = planes.iter().find(|p| p.len() != pixels) {
            return Err(Error::ShapeMismatch {
                expected: format!("{pixels} values per plane"),
                actual: format!("{} values", bad.len()),
            });
        }
        let mut data = vec![0.0; pixels * channels];
        for (c, plane) in planes.iter().enumerate() {
            for (j, &v) in plane.iter().enumerate() {
                data[j * channels + c] = v;
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Per-channel mean over all pixels.
    pub fn mean_value(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.channels];
        for px in self.data.chunks_exact(self.channels) {
            for (s, &v) in sums.iter_mut().zip(px) {
                *s += v;
            }
        }
        let n = self.pixel_count() as f64;
        for s in &mut sums {
            *s /= n;
        }
        sums
    }

    /// Mean over every element, all channels pooled.
    pub fn mean_all(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance over every element, all channels pooled.
    pub fn variance_all(&self) -> f64 {
        let mean = self.mean_all();
        self.data.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / self.data.len() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-channel mean of an image. Convenience wrapper around
/// [`ImageBuffer::mean_value`].
pub fn mean_value(img: &ImageBuffer) -> Vec<f64> {
    img.mean_value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_validates_shape_and_finiteness() {
        assert!(ImageBuffer::new(0, 3, 1, vec![]).is_err());
        assert!(ImageBuffer::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageBuffer::new(2, 1, 1, vec![0.0, f64::NAN]).is_err());
        assert!(ImageBuffer::new(2, 1, 1, vec![0.0, f64::INFINITY]).is_err());
        assert!(ImageBuffer::new(2, 1, 1, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn indexing_is_row_major_interleaved() {
        let img = ImageBuffer::new(
            2,
            2,
            3,
            (0..12).map(|i| i as f64).collect(),
        )
        .unwrap();
        // pixel (1, 0) starts at element 3, channel 2 is element 5
        assert_eq!(img.get(1, 0, 2), 5.0);
        // pixel (0, 1) starts at element 6
        assert_eq!(img.get(0, 1, 0), 6.0);
    }

    #[test]
    fn mean_value_is_per_channel() {
        let img = ImageBuffer::new(2, 1, 2, vec![1.0, 10.0, 3.0, 30.0]).unwrap();
        let means = img.mean_value();
        assert_eq!(means, vec![2.0, 20.0]);
        assert_eq!(mean_value(&img), means);
    }

    #[test]
    fn affine_combine_matches_hand_computation() {
        let a = ImageBuffer::new(2, 1, 1, vec![1.0, 2.0]).unwrap();
        let b = ImageBuffer::new(2, 1, 1, vec![10.0, 20.0]).unwrap();
        let c = a.affine_combine(2.0, &b, 0.5).unwrap();
        assert_eq!(c.as_slice(), &[7.0, 14.0]);
        let bad = ImageBuffer::new(1, 2, 1, vec![0.0, 0.0]).unwrap();
        assert!(a.affine_combine(1.0, &bad, 1.0).is_err());
    }

    #[test]
    fn planes_round_trip() {
        let img = ImageBuffer::new(2, 1, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(img.channel_plane(0), vec![1.0, 4.0]);
        assert_eq!(img.channel_plane(2), vec![3.0, 6.0]);
        let planes: Vec<Vec<f64>> = (0..3).map(|c| img.channel_plane(c)).collect();
        assert_eq!(ImageBuffer::from_planes(2, 1, &planes).unwrap(), img);
        assert!(ImageBuffer::from_planes(3, 1, &planes).is_err());
        assert!(ImageBuffer::from_planes(2, 1, &[]).is_err());
    }

    #[test]
    fn moments_match_closed_form() {
        let img = ImageBuffer::new(4, 1, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((img.mean_all() - 2.5).abs() < 1e-15);
        assert!((img.variance_all() - 1.25).abs() < 1e-15);
        assert_eq!(img.min_value(), 1.0);
        assert_eq!(img.max_value(), 4.0);
    }
}
