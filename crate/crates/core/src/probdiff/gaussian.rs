use crate::error::{Error, Result};
use crate::probdiff::schedule::{ln_2pi_e, NoiseSchedule};

/// Covariance of a multivariate Gaussian in one of three shapes, kept
/// structured so the common scaled-identity case stays exact and cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    /// value · I
    ScalarIdentity { dim: usize, value: f64 },
    /// diag(entries)
    Diagonal(Vec<f64>),
    /// Dense symmetric matrix, row-major dim×dim.
    Full { dim: usize, data: Vec<f64> },
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::ScalarIdentity { dim, .. } => *dim,
            Covariance::Diagonal(d) => d.len(),
            Covariance::Full { dim, .. } => *dim,
        }
    }
}

/// Mean and covariance of a Gaussian distribution on R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: Vec<f64>,
    covariance: Covariance,
}

impl GaussianStats {
    /// Validates dimensions, finiteness, nonnegative diagonal, and symmetry
    /// of a full covariance. Positive definiteness is checked where it is
    /// needed (entropy), since the Cholesky factorisation decides it anyway.
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidDimensions("empty mean vector".into()));
        }
        if let Some(index) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if covariance.dim() != mean.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("covariance of dim {}", mean.len()),
                actual: format!("covariance of dim {}", covariance.dim()),
            });
        }
        match &covariance {
            Covariance::ScalarIdentity { value, .. } => {
                if !value.is_finite() {
                    return Err(Error::NonFinite { index: 0 });
                }
                if *value < 0.0 {
                    return Err(Error::InvalidCovariance(format!(
                        "negative identity scale {value}"
                    )));
                }
            }
            Covariance::Diagonal(d) => {
                if let Some(index) = d.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
                if let Some(v) = d.iter().find(|&&v| v < 0.0) {
                    return Err(Error::InvalidCovariance(format!(
                        "negative diagonal entry {v}"
                    )));
                }
            }
            Covariance::Full { dim, data } => {
                if data.len() != dim * dim {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{} entries", dim * dim),
                        actual: format!("{} entries", data.len()),
                    });
                }
                if let Some(index) = data.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
                for r in 0..*dim {
                    if data[r * dim + r] < 0.0 {
                        return Err(Error::InvalidCovariance(format!(
                            "negative diagonal entry at {r}"
                        )));
                    }
                    for c in (r + 1)..*dim {
                        let a = data[r * dim + c];
                        let b = data[c * dim + r];
                        let scale = a.abs().max(b.abs()).max(1.0);
                        if (a - b).abs() > 1e-12 * scale {
                            return Err(Error::InvalidCovariance(format!(
                                "asymmetric at ({r},{c}): {a} vs {b}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { mean, covariance })
    }

    /// Standard normal N(0, I) on R^n.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(
            vec![0.0; n],
            Covariance::ScalarIdentity { dim: n, value: 1.0 },
        )
    }

    /// N(mean, scale·I).
    pub fn isotropic(mean: Vec<f64>, scale: f64) -> Result<Self> {
        let dim = mean.len();
        Self::new(mean, Covariance::ScalarIdentity { dim, value: scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Covariance entry (r, c) regardless of storage shape.
    pub fn covariance_entry(&self, r: usize, c: usize) -> f64 {
        match &self.covariance {
            Covariance::ScalarIdentity { value, .. } => {
                if r == c {
                    *value
                } else {
                    0.0
                }
            }
            Covariance::Diagonal(d) => {
                if r == c {
                    d[r]
                } else {
                    0.0
                }
            }
            Covariance::Full { dim, data } => data[r * dim + c],
        }
    }
}

/// Marginal law of the chain at step i for a Gaussian initial law:
/// mean scales by √(ᾱ_i) and the covariance contracts toward the identity,
/// cov_i = ᾱ_i·cov_0 + (1−ᾱ_i)·I, with ᾱ_i = ∏_{j≤i}(1−β_j).
pub fn gaussian_marginal(
    stats0: &GaussianStats,
    schedule: &NoiseSchedule,
    i: usize,
) -> Result<GaussianStats> {
    let alpha = schedule.alpha_bar(i)?;
    let root = alpha.sqrt();
    let mean = stats0.mean().iter().map(|&m| root * m).collect();
    let covariance = match stats0.covariance() {
        Covariance::ScalarIdentity { dim, value } => Covariance::ScalarIdentity {
            dim: *dim,
            value: alpha * value + (1.0 - alpha),
        },
        Covariance::Diagonal(d) => {
            Covariance::Diagonal(d.iter().map(|&v| alpha * v + (1.0 - alpha)).collect())
        }
        Covariance::Full { dim, data } => {
            let mut out = data.iter().map(|&v| alpha * v).collect::<Vec<f64>>();
            for r in 0..*dim {
                out[r * dim + r] += 1.0 - alpha;
            }
            Covariance::Full {
                dim: *dim,
                data: out,
            }
        }
    };
    GaussianStats::new(mean, covariance)
}

/// Cholesky factor of a symmetric matrix; `None` when not positive definite.
fn cholesky(dim: usize, data: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..=r {
            let mut sum = data[r * dim + c];
            for k in 0..c {
                sum -= l[r * dim + k] * l[c * dim + k];
            }
            if r == c {
                if sum <= 0.0 {
                    return None;
                }
                l[r * dim + r] = sum.sqrt();
            } else {
                l[r * dim + c] = sum / l[c * dim + c];
            }
        }
    }
    Some(l)
}

/// Differential entropy of a Gaussian in nats:
/// (n/2)·ln(2πe) + ½·ln det(covariance). Requires positive definiteness.
pub fn differential_entropy_gaussian(stats: &GaussianStats) -> Result<f64> {
    let n = stats.dim();
    let half_ln_det = match stats.covariance() {
        Covariance::ScalarIdentity { value, .. } => {
            if *value <= 0.0 {
                return Err(Error::SingularCovariance);
            }
            0.5 * n as f64 * value.ln()
        }
        Covariance::Diagonal(d) => {
            if d.iter().any(|&v| v <= 0.0) {
                return Err(Error::SingularCovariance);
            }
            0.5 * d.iter().map(|v| v.ln()).sum::<f64>()
        }
        Covariance::Full { dim, data } => {
            let l = cholesky(*dim, data).ok_or(Error::SingularCovariance)?;
            // ln det = 2·Σ ln L_rr
            (0..*dim).map(|r| l[r * dim + r].ln()).sum::<f64>()
        }
    };
    Ok(n as f64 / 2.0 * ln_2pi_e() + half_ln_det)
}
