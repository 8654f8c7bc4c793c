use crate::error::{Error, Result};

/// Probability density sampled at the centers of m uniform cells on [lo, hi].
///
/// Values carry units of 1/length; after [`DensityGrid::normalise`] the total
/// mass h·Σ values is 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    /// Validates bounds and nonnegative finite cell values; does not
    /// normalise.
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::InvalidDimensions(format!(
                "density domain [{lo}, {hi}] is not a finite interval"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidDimensions(format!(
                "density grid needs at least 2 cells, got {}",
                values.len()
            )));
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if v < 0.0 {
                return Err(Error::NonPositive {
                    value: v,
                    context: format!("density value in cell {index}"),
                });
            }
        }
        Ok(Self { lo, hi, values })
    }

    /// Normalised discrete Gaussian with the given mean and standard
    /// deviation, sampled at cell centers.
    pub fn gaussian(lo: f64, hi: f64, m: usize, mean: f64, std: f64) -> Result<Self> {
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::NonPositive {
                value: std,
                context: "gaussian density standard deviation".into(),
            });
        }
        let mut grid = Self::new(lo, hi, vec![0.0; m])?;
        for j in 0..m {
            let z = (grid.cell_center(j) - mean) / std;
            grid.values[j] = (-0.5 * z * z).exp();
        }
        grid.normalise()?;
        Ok(grid)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Cell width (hi − lo)/m.
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.values.len() as f64
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.h()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.h() * self.values.iter().sum::<f64>()
    }

    /// Rescales so the total mass is exactly 1; errors if the current mass
    /// is not strictly positive.
    pub fn normalise(&mut self) -> Result<()> {
        let mass = self.total_mass();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::NonPositive {
                value: mass,
                context: "density mass before normalisation".into(),
            });
        }
        for v in &mut self.values {
            *v /= mass;
        }
        Ok(())
    }

    pub fn same_domain(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.values.len() == other.values.len()
    }

    /// L1 distance h·Σ|a_j − b_j| between densities on the same grid.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_domain(other) {
            return Err(Error::ShapeMismatch {
                expected: format!("[{}, {}] / {} cells", self.lo, self.hi, self.values.len()),
                actual: format!(
                    "[{}, {}] / {} cells",
                    other.lo,
                    other.hi,
                    other.values.len()
                ),
            });
        }
        Ok(self.h()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| (a - b).abs())
                .sum::<f64>())
    }

    /// First moment h·Σ c_j·p_j.
    pub fn mean(&self) -> f64 {
        self.h()
            * self
                .values
                .iter()
                .enumerate()
                .map(|(j, &p)| self.cell_center(j) * p)
                .sum::<f64>()
    }

    /// Central second moment about [`DensityGrid::mean`].
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.h()
            * self
                .values
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let d = self.cell_center(j) - mu;
                    d * d * p
                })
                .sum::<f64>()
    }
}

/// Normalised histogram of the samples on the given grid; the second return
/// value counts samples outside [lo, hi], which are excluded from the mass.
/// The right domain edge is inclusive so boundary samples are not dropped.
pub fn histogram_density(
    samples: &[f64],
    lo: f64,
    hi: f64,
    m: usize,
) -> Result<(DensityGrid, usize)> {
    if samples.len() < 1000 {
        return Err(Error::TooFewSamples {
            needed: 1000,
            got: samples.len(),
        });
    }
    let mut grid = DensityGrid::new(lo, hi, vec![0.0; m])?;
    let h = grid.h();
    let mut outside = 0usize;
    let mut inside = 0usize;
    for (index, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if x < lo || x > hi {
            outside += 1;
            continue;
        }
        let j = (((x - lo) / h) as usize).min(m - 1);
        grid.values[j] += 1.0;
        inside += 1;
    }
    if inside == 0 {
        return Err(Error::NonPositive {
            value: 0.0,
            context: "no samples fell inside the histogram domain".into(),
        });
    }
    let scale = 1.0 / (inside as f64 * h);
    for v in &mut grid.values {
        *v *= scale;
    }
    Ok((grid, outside))
}
