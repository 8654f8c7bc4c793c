use crate::error::Result;
use crate::image::ImageBuffer;
use crate::perm::{apply_permutation, Permutation};

/// SplitMix64 increment.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// SplitMix64 finaliser multipliers.
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;
/// Salt separating the integer draw counter space from the normal one.
const INT_STREAM_SALT: u64 = 0x5851_F42D_4C95_7F2D;

/// SplitMix64 finaliser: a bijective bit mix on u64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// Raw uniform word for counter value `k` of stream `seed`.
#[inline]
fn word_at(seed: u64, k: u64) -> u64 {
    mix64(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Top 53 bits mapped to (0, 1]; safe under `ln`.
#[inline]
fn unit_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Top 53 bits mapped to [0, 1).
#[inline]
fn unit_half_open(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Box-Muller radius and angle for the aligned draw pair starting at `base`
/// (`base` even). Draw `base` is `r cos θ`, draw `base+1` is `r sin θ`.
#[inline]
fn pair_radius_angle(seed: u64, base: u64) -> (f64, f64) {
    let u1 = unit_open(word_at(seed, base.wrapping_mul(2)));
    let u2 = unit_half_open(word_at(seed, base.wrapping_mul(2).wrapping_add(1)));
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r, theta)
}

/// Standard-normal draw at absolute position `p` of stream `seed`.
#[inline]
fn normal_at(seed: u64, p: u64) -> f64 {
    let (r, theta) = pair_radius_angle(seed, p & !1);
    if p & 1 == 0 {
        r * theta.cos()
    } else {
        r * theta.sin()
    }
}

/// Deterministic counter-based random stream.
///
/// Every draw is a pure function of `(seed, position)`, so streams can be
/// replayed, resumed mid-sequence, or split without shared state:
///
/// * Uniform words use the SplitMix64 finaliser on
///   `seed + (counter + 1) * GOLDEN_GAMMA` (all arithmetic mod 2^64).
/// * Normal draw `p` applies the Box-Muller transform to the uniform words
///   at counters `2*(p & !1)` and `2*(p & !1) + 1`; even positions take the
///   cosine branch, odd positions the sine branch. Sequential fills compute
///   each radius/angle once per pair.
/// * Integer draws run the same word generator on `seed ^ INT_STREAM_SALT`,
///   so mixing draw kinds never reuses a counter.
///
/// The stream is single-owner; concurrent consumers must use distinct seeds
/// or [`RngStream::split`] children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    position: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, position: 0 }
    }

    /// Resumes a stream at a known draw position.
    pub fn with_position(seed: u64, position: u64) -> Self {
        Self { seed, position }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Independent child stream; distinct indices give distinct seeds.
    pub fn split(&self, index: u64) -> Self {
        Self::new(mix64(self.seed ^ mix64(GOLDEN_GAMMA ^ index)))
    }

    /// One standard-normal variate.
    pub fn next_normal(&mut self) -> f64 {
        let z = normal_at(self.seed, self.position);
        self.position += 1;
        z
    }

    /// Fills `out` with i.i.d. standard normals, equivalent to calling
    /// [`Self::next_normal`] `out.len()` times.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut p = self.position;
        // Unaligned leading draw: odd position takes the sine branch.
        let rest = if p & 1 == 1 && !out.is_empty() {
            out[0] = normal_at(self.seed, p);
            p += 1;
            &mut out[1..]
        } else {
            out
        };
        let mut chunks = rest.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (r, theta) = pair_radius_angle(self.seed, p);
            let (s, c) = theta.sin_cos();
            pair[0] = r * c;
            pair[1] = r * s;
            p += 2;
        }
        if let Some(last) = chunks.into_remainder().first_mut() {
            *last = normal_at(self.seed, p);
            p += 1;
        }
        self.position = p;
    }

    /// One uniform 64-bit word from the integer counter space.
    pub fn next_u64(&mut self) -> u64 {
        let w = word_at(self.seed ^ INT_STREAM_SALT, self.position);
        self.position += 1;
        w
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    pub fn next_uniform(&mut self) -> f64 {
        unit_half_open(self.next_u64())
    }

    /// Uniform index in `[0, bound)` by widening multiply. The modulo bias is
    /// below `bound / 2^64`, negligible for the bounds used here.
    pub fn next_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

/// Buffer of i.i.d. N(0,1) draws; advances `rng` by one position per element.
pub fn sample_standard_normal(
    rng: &mut RngStream,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<ImageBuffer> {
    // Validate the shape before consuming draws.
    let mut img = ImageBuffer::zeros(width, height, channels)?;
    rng.fill_standard_normal(img.as_mut_slice());
    Ok(img)
}

/// Anything that can produce standard-normal noise images. Lets callers swap
/// the raw stream for wrapped variants (e.g. permuted noise) without changing
/// trajectory code.
pub trait NoiseSource {
    fn sample(&mut self, width: usize, height: usize, channels: usize) -> Result<ImageBuffer>;

    /// Generating seed when the source has a single well-defined one.
    fn seed_hint(&self) -> Option<u64> {
        None
    }
}

impl NoiseSource for RngStream {
    fn sample(&mut self, width: usize, height: usize, channels: usize) -> Result<ImageBuffer> {
        sample_standard_normal(self, width, height, channels)
    }

    fn seed_hint(&self) -> Option<u64> {
        Some(self.seed)
    }
}

/// Noise source that permutes every sample of an inner source. Because a
/// permutation of an i.i.d. buffer is distributed identically, this realises
/// the "same chain, reordered noise" coupling used by the permutation
/// invariance property.
#[derive(Debug, Clone)]
pub struct PermutedNoise<S> {
    inner: S,
    perm: Permutation,
}

impl<S: NoiseSource> PermutedNoise<S> {
    pub fn new(inner: S, perm: Permutation) -> Self {
        Self { inner, perm }
    }
}

impl<S: NoiseSource> NoiseSource for PermutedNoise<S> {
    fn sample(&mut self, width: usize, height: usize, channels: usize) -> Result<ImageBuffer> {
        let raw = self.inner.sample(width, height, channels)?;
        apply_permutation(&raw, &self.perm)
    }

    fn seed_hint(&self) -> Option<u64> {
        self.inner.seed_hint()
    }
}
