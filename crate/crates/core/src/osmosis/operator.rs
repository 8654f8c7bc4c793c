use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::linalg::SparseMatrixCSR;
use crate::osmosis::drift::DriftField;

/// Discrete osmosis evolution operator ∂_t u = A·u, one sparse matrix per
/// channel over the width·height pixel grid.
///
/// A is the finite-volume form of Δu − div(d·u) with reflecting boundaries:
/// only interior faces carry flux, so no mass crosses the boundary. Each
/// face contributes the flux −(u_R − u_L)/h + d_f·(u_L + u_R)/2 with equal
/// and opposite signs to its two cells, which makes every column of A sum
/// to zero (discrete conservation) and keeps off-diagonals nonnegative
/// whenever the grid numbers |d_f|·h/2 stay ≤ 1.
#[derive(Debug, Clone)]
pub struct OsmosisOperator {
    width: usize,
    height: usize,
    channels: usize,
    h: f64,
    per_channel: Vec<SparseMatrixCSR>,
}

impl OsmosisOperator {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid_spacing(&self) -> f64 {
        self.h
    }

    /// The evolution matrix A of one channel.
    pub fn matrix(&self, channel: usize) -> &SparseMatrixCSR {
        &self.per_channel[channel]
    }

    /// System matrix M = I − τ·A of the implicit step for one channel.
    pub fn implicit_matrix(&self, channel: usize, tau: f64) -> Result<SparseMatrixCSR> {
        if !(tau > 0.0) {
            return Err(Error::NonPositive {
                value: tau,
                context: "implicit step size".into(),
            });
        }
        let a = &self.per_channel[channel];
        let n = a.rows();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + n);
        for j in 0..n {
            triplets.push((j, j, 1.0));
        }
        for (r, c, v) in a.entries() {
            triplets.push((r, c, -tau * v));
        }
        SparseMatrixCSR::from_triplets(n, n, &triplets)
    }

    /// A·u across all channels, mainly for steady-state residual checks.
    pub fn apply(&self, u: &ImageBuffer) -> Result<ImageBuffer> {
        if u.width() != self.width || u.height() != self.height || u.channels() != self.channels
        {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}x{}", self.width, self.height, self.channels),
                actual: u.shape_string(),
            });
        }
        let mut planes = Vec::with_capacity(self.channels);
        for c in 0..self.channels {
            let plane = u.channel_plane(c);
            let mut out = vec![0.0; plane.len()];
            self.per_channel[c].matvec_into(&plane, &mut out);
            planes.push(out);
        }
        // A·u can be exactly zero everywhere; ImageBuffer permits that.
        ImageBuffer::from_planes(self.width, self.height, &planes)
    }
}

/// Assembles the conservative drift-diffusion operator from a drift field.
/// Grid spacing `h` must be positive; the drift field fixes the image shape.
pub fn assemble_operator(d: &DriftField, h: f64) -> Result<OsmosisOperator> {
    if !(h > 0.0) {
        return Err(Error::NonPositive {
            value: h,
            context: "grid spacing".into(),
        });
    }
    let (w, ht, ch) = (d.width(), d.height(), d.channels());
    let n = w * ht;
    let diff = 1.0 / (h * h);
    let mut per_channel = Vec::with_capacity(ch);
    for c in 0..ch {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(4 * 2 * n + n);
        // Every diagonal is populated so 1x1 images still yield A = [0].
        for j in 0..n {
            triplets.push((j, j, 0.0));
        }
        for y in 0..ht {
            for x in 0..w.saturating_sub(1) {
                let l = y * w + x;
                let r = l + 1;
                let drift = d.dx_at(x, y, c) / (2.0 * h);
                triplets.push((l, r, diff - drift));
                triplets.push((l, l, -diff - drift));
                triplets.push((r, l, diff + drift));
                triplets.push((r, r, -diff + drift));
            }
        }
        for y in 0..ht.saturating_sub(1) {
            for x in 0..w {
                let t = y * w + x;
                let b = t + w;
                let drift = d.dy_at(x, y, c) / (2.0 * h);
                triplets.push((t, b, diff - drift));
                triplets.push((t, t, -diff - drift));
                triplets.push((b, t, diff + drift));
                triplets.push((b, b, -diff + drift));
            }
        }
        per_channel.push(SparseMatrixCSR::from_triplets(n, n, &triplets)?);
    }
    Ok(OsmosisOperator {
        width: w,
        height: ht,
        channels: ch,
        h,
        per_channel,
    })
}
