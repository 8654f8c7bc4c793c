use crate::error::{Error, Result};

/// ln(2πe), the entropy constant of a unit Gaussian (times 2/n).
pub fn ln_2pi_e() -> f64 {
    (std::f64::consts::TAU * std::f64::consts::E).ln()
}

/// Per-step noise levels β_i of the forward chain.
///
/// Steps are 1-indexed: `beta(1)` is the first transition, matching the
/// convention that `alpha_bar(i) = ∏_{j=1..i} (1-β_j)` with the empty
/// product `alpha_bar(0) = 1`. The cumulative products are precomputed once.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Requires every β strictly inside (0, 1).
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        for &b in &betas {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::BetaOutOfRange(b));
            }
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        let mut prod = 1.0;
        alpha_bars.push(prod);
        for &b in &betas {
            prod *= 1.0 - b;
            alpha_bars.push(prod);
        }
        Ok(Self { betas, alpha_bars })
    }

    pub fn constant(beta: f64, len: usize) -> Result<Self> {
        Self::new(vec![beta; len])
    }

    /// Number of steps m; valid step indices are 1..=m.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// β_i for 1-indexed step i.
    pub fn beta(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.betas.len() {
            return Err(Error::StepOutOfRange {
                step: i,
                len: self.betas.len(),
            });
        }
        Ok(self.betas[i - 1])
    }

    /// ∏_{j=1..i} (1-β_j); `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, i: usize) -> Result<f64> {
        self.alpha_bars
            .get(i)
            .copied()
            .ok_or(Error::StepOutOfRange {
                step: i,
                len: self.betas.len(),
            })
    }

    /// Sub-schedule covering steps start+1 ..= end of this one (0-based
    /// half-open range over the beta list, like a slice).
    pub fn sub_schedule(&self, start: usize, end: usize) -> Result<NoiseSchedule> {
        if start > end || end > self.betas.len() {
            return Err(Error::StepOutOfRange {
                step: end,
                len: self.betas.len(),
            });
        }
        NoiseSchedule::new(self.betas[start..end].to_vec())
    }
}

/// Admissibility verdict for one step of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAdmissibility {
    pub beta: f64,
    pub admissible: bool,
    /// Signed distance to the nearest interval bound: positive inside the
    /// admissible interval, negative outside.
    pub margin: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Admissible β interval for an n-element image: the roots of
/// β² − β + (2πe)^(−n) = 0, i.e. ½ ∓ √(¼ − (2πe)^(−n)).
pub fn admissible_beta_interval(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidDimensions("pixel count n must be >= 1".into()));
    }
    // (2πe)^(−n) via exp to stay accurate for large n.
    let c = (-(n as f64) * ln_2pi_e()).exp();
    let disc = (0.25 - c).sqrt();
    Ok((0.5 - disc, 0.5 + disc))
}

/// Checks every step of a schedule against the entropy-monotonicity
/// condition β² − β + (2πe)^(−n) ≤ 0.
pub fn validate_schedule(schedule: &NoiseSchedule, n: usize) -> Result<Vec<StepAdmissibility>> {
    let (lower, upper) = admissible_beta_interval(n)?;
    Ok(schedule
        .betas()
        .iter()
        .map(|&beta| {
            let margin = (beta - lower).min(upper - beta);
            StepAdmissibility {
                beta,
                admissible: margin >= 0.0,
                margin,
                lower,
                upper,
            }
        })
        .collect())
}

/// Guaranteed entropy gain of one step under the proof's additive
/// decomposition: H(G) + ln√((1−β)β) with H(G) = (n/2)·ln(2πe). Zero exactly
/// on the admissible-interval boundary, negative outside.
pub fn entropy_increment(beta: f64, n: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    if n == 0 {
        return Err(Error::InvalidDimensions("pixel count n must be >= 1".into()));
    }
    Ok(n as f64 / 2.0 * ln_2pi_e() + 0.5 * ((1.0 - beta) * beta).ln())
}

/// Entropy of the 0→i transition kernel, (n/2)·ln(2πe·(1 − ∏_{j≤i}(1−β_j))).
///
/// At i = 0 the kernel is a point mass and the differential entropy is the
/// degenerate value −∞, returned explicitly as `f64::NEG_INFINITY`.
pub fn conditional_entropy(schedule: &NoiseSchedule, i: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimensions("pixel count n must be >= 1".into()));
    }
    if i == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let variance = 1.0 - schedule.alpha_bar(i)?;
    Ok(n as f64 / 2.0 * (std::f64::consts::TAU * std::f64::consts::E * variance).ln())
}
