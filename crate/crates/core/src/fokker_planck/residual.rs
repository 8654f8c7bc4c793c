use crate::error::{Error, Result};
use crate::fokker_planck::moments::MomentFields;

/// Closed-form transition kernel of the constant-rate noising limit:
/// starting from y at time τ, the state at time t > τ is
/// N(e^{−β(t−τ)/2}·y, 1 − e^{−β(t−τ)}).
#[derive(Debug, Clone, Copy)]
pub struct GaussianKernel {
    beta: f64,
}

impl GaussianKernel {
    pub fn new(beta: f64) -> Result<Self> {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::NonPositive {
                value: beta,
                context: "kernel beta rate".into(),
            });
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// e^{−β(t−τ)/2}, the factor multiplying the start point in the mean.
    pub fn mean_factor(&self, tau: f64, t: f64) -> f64 {
        (-0.5 * self.beta * (t - tau)).exp()
    }

    /// 1 − e^{−β(t−τ)}, the kernel variance.
    pub fn variance(&self, tau: f64, t: f64) -> f64 {
        -(-self.beta * (t - tau)).exp_m1()
    }

    /// Kernel density at x for a path started at y; requires t > τ (the
    /// variance degenerates otherwise and the result is NaN).
    pub fn evaluate(&self, tau: f64, y: f64, t: f64, x: f64) -> f64 {
        let v = self.variance(tau, t);
        if v <= 0.0 {
            return f64::NAN;
        }
        let z = x - self.mean_factor(tau, t) * y;
        (-0.5 * z * z / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }
}

/// Max and L2 norms of a pointwise residual over the interior of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub max: f64,
    pub l2: f64,
}

fn norms(residuals: &[f64], h: f64) -> ResidualNorms {
    let max = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    let l2 = (h * residuals.iter().map(|r| r * r).sum::<f64>()).sqrt();
    ResidualNorms { max, l2 }
}

fn check_window(lo: f64, hi: f64, m: usize, tau: f64, t: f64) -> Result<f64> {
    if m < 3 || hi <= lo || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidDimensions(format!(
            "residual grid [{lo}, {hi}] with {m} cells is unusable"
        )));
    }
    let h = (hi - lo) / m as f64;
    if !(t - tau).is_finite() || t - tau <= 2.0 * h {
        return Err(Error::InvalidDimensions(format!(
            "time window t - tau = {} too small for stencil steps of {h}",
            t - tau
        )));
    }
    Ok(h)
}

/// Centered-difference residuals of the backward equation
/// ∂_τ f = m1·∂_y f − ½·m2·∂_yy f over interior cell centers; the step of
/// the τ derivative is tied to h so both refine together.
fn backward_residuals_of(
    f: &dyn Fn(f64, f64) -> f64,
    mom: &MomentFields,
    lo: f64,
    h: f64,
    m: usize,
    tau: f64,
) -> Vec<f64> {
    let dtau = h;
    (1..m - 1)
        .map(|j| {
            let y = lo + (j as f64 + 0.5) * h;
            let d_tau = (f(tau + dtau, y) - f(tau - dtau, y)) / (2.0 * dtau);
            let (fp, f0, fm) = (f(tau, y + h), f(tau, y), f(tau, y - h));
            let d_y = (fp - fm) / (2.0 * h);
            let d_yy = (fp - 2.0 * f0 + fm) / (h * h);
            d_tau - mom.m1(y, tau) * d_y + 0.5 * mom.m2(y, tau) * d_yy
        })
        .collect()
}

/// Finite-difference residual of the backward equation on the closed-form
/// kernel, as a function of the start point y for a fixed endpoint (t, x).
///
/// The diffusion term enters with the opposite sign to the forward
/// equation: the kernel solves ∂_τ p = m1·∂_y p − ½·m2·∂_yy p in the start
/// variables, which the vanishing residual verifies directly.
pub fn fp_backward_residual(
    kernel: &GaussianKernel,
    mom: &MomentFields,
    lo: f64,
    hi: f64,
    m: usize,
    x: f64,
    tau: f64,
    t: f64,
) -> Result<ResidualNorms> {
    let h = check_window(lo, hi, m, tau, t)?;
    let f = |s: f64, y: f64| kernel.evaluate(s, y, t, x);
    Ok(norms(&backward_residuals_of(&f, mom, lo, h, m, tau), h))
}

/// Finite-difference residual of the forward equation
/// ∂_t f = ½·∂_xx(m2·f) + ∂_x(m1·f) on the closed-form kernel, as a
/// function of the endpoint x for a fixed start (τ, y).
pub fn fp_forward_residual(
    kernel: &GaussianKernel,
    mom: &MomentFields,
    lo: f64,
    hi: f64,
    m: usize,
    y: f64,
    tau: f64,
    t: f64,
) -> Result<ResidualNorms> {
    let h = check_window(lo, hi, m, tau, t)?;
    let dt = h;
    let residuals: Vec<f64> = (1..m - 1)
        .map(|j| {
            let x = lo + (j as f64 + 0.5) * h;
            let d_t =
                (kernel.evaluate(tau, y, t + dt, x) - kernel.evaluate(tau, y, t - dt, x))
                    / (2.0 * dt);
            let flux = |xx: f64| {
                let g = kernel.evaluate(tau, y, t, xx);
                (mom.m1(xx, t) * g, mom.m2(xx, t) * g)
            };
            let (a1p, a2p) = flux(x + h);
            let (_, a2o) = flux(x);
            let (a1m, a2m) = flux(x - h);
            let d_x_m1 = (a1p - a1m) / (2.0 * h);
            let d_xx_m2 = (a2p - 2.0 * a2o + a2m) / (h * h);
            d_t - d_x_m1 - 0.5 * d_xx_m2
        })
        .collect();
    Ok(norms(&residuals, h))
}
