use crate::error::{Error, Result};
use crate::fokker_planck::grid::DensityGrid;
use crate::fokker_planck::moments::MomentFields;

/// Mass allowed in the two outermost cells before the domain is declared
/// too small for the solution.
const BOUNDARY_MASS_LIMIT: f64 = 1e-6;
/// Slack on the normalisation check of the initial density.
const MASS_TOLERANCE: f64 = 1e-8;

/// Explicit conservative evolution of ∂_t p = ½·∂_uu(m2·p) + ∂_u(m1·p) with
/// zero-flux boundaries.
///
/// Each step writes the update as a nonnegative combination of the three
/// neighbouring cells, so positivity is preserved outright; the combination
/// is algebraically the flux form, so mass is conserved up to rounding
/// (well below 1e-10 per unit time). Nonnegative coefficients require the
/// documented bounds, checked every step:
///   dt ≤ h² / (2·max m2)   and   |m1|·h ≤ m2 at every face.
/// Violations raise [`Error::Stability`] and [`Error::CoarseGrid`]; mass
/// accumulating in the outermost cells beyond 1e-6 raises
/// [`Error::DomainTooSmall`].
pub fn fp_forward_solve(
    p0: &DensityGrid,
    mom: &MomentFields,
    t_end: f64,
    dt: f64,
) -> Result<DensityGrid> {
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::NonPositive {
            value: t_end,
            context: "solve horizon t_end".into(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::NonPositive {
            value: dt,
            context: "time step dt".into(),
        });
    }
    let mass = p0.total_mass();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NotNormalised { mass });
    }

    let m = p0.cells();
    let h = p0.h();
    let centers: Vec<f64> = (0..m).map(|j| p0.cell_center(j)).collect();
    let faces: Vec<f64> = (0..m - 1).map(|f| p0.lo() + (f as f64 + 1.0) * h).collect();

    let mut grid = p0.clone();
    let mut next = vec![0.0f64; m];
    let mut m2 = vec![0.0f64; m];
    let mut m1f = vec![0.0f64; m - 1];

    let mut t = 0.0f64;
    while t < t_end - 1e-12 * t_end.max(1.0) {
        let step = dt.min(t_end - t);

        for j in 0..m {
            m2[j] = mom.m2(centers[j], t);
            if m2[j] <= 0.0 || !m2[j].is_finite() {
                return Err(Error::NonPositive {
                    value: m2[j],
                    context: format!("m2 at u = {}, t = {t}", centers[j]),
                });
            }
        }
        for f in 0..m - 1 {
            m1f[f] = mom.m1(faces[f], t);
            let peclet = m1f[f].abs() * h / m2[f].min(m2[f + 1]);
            if peclet > 1.0 {
                return Err(Error::CoarseGrid { peclet });
            }
        }
        let max_m2 = m2.iter().cloned().fold(0.0, f64::max);
        let max_dt = h * h / (2.0 * max_m2);
        if step > max_dt {
            return Err(Error::Stability { dt: step, max_dt });
        }

        // Gather form: coefficients of p_{j−1}, p_j, p_{j+1} are all ≥ 0
        // under the bounds above, so each new value is a nonnegative sum.
        let r = step / (h * h);
        let q = step / (2.0 * h);
        let p = grid.values();
        for j in 0..m {
            let mut v = 0.0;
            let mut diag = 0.0;
            if j + 1 < m {
                v += p[j + 1] * (0.5 * r * m2[j + 1] + q * m1f[j]);
                diag += 0.5 * r * m2[j] - q * m1f[j];
            }
            if j > 0 {
                v += p[j - 1] * (0.5 * r * m2[j - 1] - q * m1f[j - 1]);
                diag += 0.5 * r * m2[j] + q * m1f[j - 1];
            }
            // 1 − diag ≥ 0 under the step bounds (clamped so rounding at the
            // exact bound cannot tip it), so every term is a product of
            // nonnegatives and the result cannot round below 0.
            next[j] = v + p[j] * (1.0 - diag).max(0.0);
        }
        grid.values_mut().copy_from_slice(&next);

        let boundary_mass = h * (grid.values()[0] + grid.values()[m - 1]);
        if boundary_mass > BOUNDARY_MASS_LIMIT {
            return Err(Error::DomainTooSmall { boundary_mass });
        }
        t += step;
    }
    Ok(grid)
}
