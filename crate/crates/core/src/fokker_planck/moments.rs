use crate::error::{Error, Result};
use std::fmt;

/// Drift m1(u, t) and diffusion m2(u, t) of the density evolution
/// ∂_t p = ½·∂_uu(m2·p) + ∂_u(m1·p); m2 must be strictly positive wherever
/// the solver evaluates it.
pub struct MomentFields {
    m1: Box<dyn Fn(f64, f64) -> f64>,
    m2: Box<dyn Fn(f64, f64) -> f64>,
}

impl MomentFields {
    pub fn new(
        m1: impl Fn(f64, f64) -> f64 + 'static,
        m2: impl Fn(f64, f64) -> f64 + 'static,
    ) -> Self {
        Self {
            m1: Box::new(m1),
            m2: Box::new(m2),
        }
    }

    /// Moments of the continuum noising limit for a time-dependent rate:
    /// m1 = β(t)·u/2, m2 = β(t). One discrete chain step corresponds to one
    /// unit of time, so a constant-β chain maps to a constant rate.
    pub fn from_beta_rate(rate: impl Fn(f64) -> f64 + Clone + 'static) -> Self {
        let r = rate.clone();
        Self::new(move |u, t| 0.5 * r(t) * u, move |_, t| rate(t))
    }

    pub fn from_constant_beta(beta: f64) -> Result<Self> {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::NonPositive {
                value: beta,
                context: "constant beta rate".into(),
            });
        }
        Ok(Self::from_beta_rate(move |_| beta))
    }

    pub fn m1(&self, u: f64, t: f64) -> f64 {
        (self.m1)(u, t)
    }

    pub fn m2(&self, u: f64, t: f64) -> f64 {
        (self.m2)(u, t)
    }
}

impl fmt::Debug for MomentFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MomentFields { m1, m2 }")
    }
}

/// Point evaluation of the noising moments: (β(t)·u/2, β(t)); the drift
/// pushes the density toward the origin (the equation carries the drift as
/// +∂_u(m1·p), so the underlying sample paths drift with velocity −m1).
pub fn moments_from_schedule(
    beta_rate: &dyn Fn(f64) -> f64,
    u: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let rate = beta_rate(t);
    if rate <= 0.0 || !rate.is_finite() {
        return Err(Error::NonPositive {
            value: rate,
            context: format!("beta rate at t = {t}"),
        });
    }
    Ok((0.5 * rate * u, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn moment_values_match_the_rate() {
        let rate = |_: f64| 0.02;
        assert_eq!(moments_from_schedule(&rate, 0.0, 3.0).unwrap().0, 0.0);
        let (m1, m2) = moments_from_schedule(&rate, 1.0, 0.0).unwrap();
        assert!((m1 - 0.01).abs() < 1e-15);
        assert!((m2 - 0.02).abs() < 1e-15);

        let ramp = |t: f64| 0.01 * (1.0 + t);
        let (m1, m2) = moments_from_schedule(&ramp, 2.0, 3.0).unwrap();
        assert!((m1 - 0.04).abs() < 1e-15);
        assert!((m2 - 0.04).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_rates_are_rejected() {
        let zero = |_: f64| 0.0;
        assert!(moments_from_schedule(&zero, 1.0, 0.0).is_err());
        assert!(MomentFields::from_constant_beta(-0.1).is_err());
        assert!(MomentFields::from_constant_beta(f64::NAN).is_err());
    }

    /// One noising step u' = √(1−β)·u + √β·ξ has conditional mean shift
    /// (√(1−β)−1)·u ≈ −(β/2)·u and conditional variance β; the moment
    /// fields must reproduce both at leading order in β.
    #[test]
    fn one_step_monte_carlo_agrees_with_the_moments() {
        let beta = 0.02f64;
        let u = 1.0;
        let mom = MomentFields::from_constant_beta(beta).unwrap();

        let mut rng = RngStream::new(61);
        let n = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let du = ((1.0 - beta).sqrt() - 1.0) * u + beta.sqrt() * rng.next_normal();
            sum += du;
            sum_sq += du * du;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;

        // Sample drift is −m1 under the +∂_u(m1 p) placement.
        assert!(
            (mean + mom.m1(u, 0.0)).abs() < 1.5e-3,
            "conditional mean {mean}"
        );
        assert!(
            (var - mom.m2(u, 0.0)).abs() < 3e-4,
            "conditional variance {var}"
        );
    }

    /// ½(m2·φ)'' + (m1·φ)' = 0 for the standard normal φ: with analytic
    /// derivatives the two terms cancel exactly, making N(0,1) stationary.
    #[test]
    fn standard_normal_is_stationary_for_beta_moments() {
        let mom = MomentFields::from_constant_beta(0.02).unwrap();
        for k in 0..=80 {
            let u = -4.0 + 0.1 * k as f64;
            let phi = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            // (m2 φ)'' = m2 (u² − 1) φ; (m1 φ)' = (β/2)(φ + u φ') = (β/2)(1 − u²) φ.
            let diff_term = 0.5 * mom.m2(u, 0.0) * (u * u - 1.0) * phi;
            let drift_term = 0.5 * 0.02 * (1.0 - u * u) * phi;
            assert!((diff_term + drift_term).abs() < 1e-18);
        }
    }
}
