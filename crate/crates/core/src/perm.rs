use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::RngStream;

/// Bijection on `{0, …, n-1}` stored as a forward mapping: entry `j` holds
/// the target index `p(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Validates that `map` is a bijection on `{0, …, map.len()-1}`.
    pub fn from_mapping(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &t in &map {
            if t >= n {
                return Err(Error::NotABijection(format!(
                    "target {t} out of range for size {n}"
                )));
            }
            if seen[t] {
                return Err(Error::NotABijection(format!("target {t} repeated")));
            }
            seen[t] = true;
        }
        Ok(Self { map })
    }

    /// Uniformly random permutation via Fisher-Yates.
    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.next_index(i + 1);
            map.swap(i, j);
        }
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Target index of source index `j`.
    pub fn target(&self, j: usize) -> usize {
        self.map[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0usize; self.map.len()];
        for (j, &t) in self.map.iter().enumerate() {
            inv[t] = j;
        }
        Self { map: inv }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("permutation of size {}", self.len()),
                actual: format!("permutation of size {}", other.len()),
            });
        }
        let map = other.map.iter().map(|&t| self.map[t]).collect();
        Ok(Self { map })
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(j, &t)| j == t)
    }

    /// Scatters a slice: `out[p(j)] = src[j]`.
    fn scatter(&self, src: &[f64], out: &mut [f64]) {
        for (j, &t) in self.map.iter().enumerate() {
            out[t] = src[j];
        }
    }

    /// Whole-vector mode: permutes all `width*height*channels` elements.
    pub fn apply_elements(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        if self.len() != img.element_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("permutation of size {}", img.element_count()),
                actual: format!("permutation of size {}", self.len()),
            });
        }
        let mut out = vec![0.0; img.element_count()];
        self.scatter(img.as_slice(), &mut out);
        ImageBuffer::new(img.width(), img.height(), img.channels(), out)
    }

    /// Pixel mode: permutes pixel positions, moving all channels of a pixel
    /// together.
    pub fn apply_pixels(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        if self.len() != img.pixel_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("permutation of size {}", img.pixel_count()),
                actual: format!("permutation of size {}", self.len()),
            });
        }
        let c = img.channels();
        let src = img.as_slice();
        let mut out = vec![0.0; img.element_count()];
        for (j, &t) in self.map.iter().enumerate() {
            out[t * c..(t + 1) * c].copy_from_slice(&src[j * c..(j + 1) * c]);
        }
        ImageBuffer::new(img.width(), img.height(), img.channels(), out)
    }
}

/// Permutes an image, choosing the mode by size: a permutation over all
/// elements acts on the flat vector, one over `width*height` acts on pixel
/// positions uniformly across channels. (For single-channel images the two
/// coincide.) Errors when the size matches neither.
pub fn apply_permutation(img: &ImageBuffer, p: &Permutation) -> Result<ImageBuffer> {
    if p.len() == img.element_count() {
        p.apply_elements(img)
    } else if p.len() == img.pixel_count() {
        p.apply_pixels(img)
    } else {
        Err(Error::ShapeMismatch {
            expected: format!(
                "permutation of size {} (elements) or {} (pixels)",
                img.element_count(),
                img.pixel_count()
            ),
            actual: format!("permutation of size {}", p.len()),
        })
    }
}
