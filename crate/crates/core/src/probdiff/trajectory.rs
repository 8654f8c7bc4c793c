use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::probdiff::forward::forward_step;
use crate::probdiff::schedule::NoiseSchedule;
use crate::rng::NoiseSource;

/// One realised trajectory of the forward chain: the recorded frames
/// (step 0 is always present and equals the supplied initial image), the
/// schedule that produced it, and the generating seed when known.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    steps: Vec<(usize, ImageBuffer)>,
    schedule: NoiseSchedule,
    seed: Option<u64>,
}

impl TrajectoryRecord {
    /// Recorded (step index, frame) pairs, strictly increasing from 0.
    pub fn steps(&self) -> &[(usize, ImageBuffer)] {
        &self.steps
    }

    pub fn frame_at(&self, step: usize) -> Option<&ImageBuffer> {
        self.steps
            .iter()
            .find(|(i, _)| *i == step)
            .map(|(_, img)| img)
    }

    pub fn last_frame(&self) -> &ImageBuffer {
        &self.steps.last().expect("record is never empty").1
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    /// Seed of the generating stream; `None` for composite noise sources
    /// that do not expose one.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Runs the forward chain from `u0`, recording the requested step indices.
///
/// Step 0 (the untouched initial image) is always recorded, whether or not
/// it is requested. The chain is advanced only as far as the largest
/// requested index; one noise image (element count draws) is consumed per
/// step, so frame contents are a pure function of the source's seed.
pub fn run_trajectory<S: NoiseSource>(
    u0: &ImageBuffer,
    schedule: &NoiseSchedule,
    record_steps: &[usize],
    noise: &mut S,
) -> Result<TrajectoryRecord> {
    if record_steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedRecordSteps);
    }
    if let Some(&last) = record_steps.last() {
        if last > schedule.len() {
            return Err(Error::StepOutOfRange {
                step: last,
                len: schedule.len(),
            });
        }
    }

    let mut steps = Vec::with_capacity(record_steps.len() + 1);
    steps.push((0, u0.clone()));
    let max_step = record_steps.last().copied().unwrap_or(0);

    let mut u = u0.clone();
    for i in 1..=max_step {
        let g = noise.sample(u0.width(), u0.height(), u0.channels())?;
        u = forward_step(&u, schedule.beta(i)?, &g)?;
        if record_steps.binary_search(&i).is_ok() {
            steps.push((i, u.clone()));
        }
    }

    Ok(TrajectoryRecord {
        steps,
        schedule: schedule.clone(),
        seed: noise.seed_hint(),
    })
}

/// Moment diagnostics of a sample of equally-shaped images against the
/// N(0, I) steady state.
#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub sample_count: usize,
    /// Per-element sample mean.
    pub mean: Vec<f64>,
    /// Per-element population variance; `None` (undefined) for one sample.
    pub variance: Option<Vec<f64>>,
    /// Mean |correlation| over distinct element pairs; `None` for one sample.
    pub mean_abs_offdiag_correlation: Option<f64>,
    /// Deviation summaries against the steady state (0, 1, 0).
    pub max_abs_mean: f64,
    pub max_abs_variance_deviation: Option<f64>,
}

/// Sample mean/variance/cross-moment summary of `samples`.
///
/// Uses population normalisation (1/N). A single sample yields a defined
/// mean but variance and correlation are flagged as undefined rather than
/// reported as zero.
pub fn steady_state_diagnostics(samples: &[ImageBuffer]) -> Result<SteadyStateReport> {
    let first = samples.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    if let Some(bad) = samples.iter().find(|s| !s.same_shape(first)) {
        return Err(Error::ShapeMismatch {
            expected: first.shape_string(),
            actual: bad.shape_string(),
        });
    }
    let n = first.element_count();
    let count = samples.len();
    let nf = count as f64;

    let mut mean = vec![0.0; n];
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s.as_slice()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let max_abs_mean = mean.iter().fold(0.0f64, |acc, m| acc.max(m.abs()));

    if count < 2 {
        return Ok(SteadyStateReport {
            sample_count: count,
            mean,
            variance: None,
            mean_abs_offdiag_correlation: None,
            max_abs_mean,
            max_abs_variance_deviation: None,
        });
    }

    let mut variance = vec![0.0; n];
    // Upper-triangle cross moments E[x_p x_q] accumulated in a flat buffer.
    let pairs = n * (n - 1) / 2;
    let mut cross = vec![0.0; pairs];
    for s in samples {
        let x = s.as_slice();
        for (p, &xp) in x.iter().enumerate() {
            variance[p] += (xp - mean[p]) * (xp - mean[p]);
            let row_base = pair_base(p, n);
            let cross_row = &mut cross[row_base..row_base + (n - 1 - p)];
            for (slot, &xq) in cross_row.iter_mut().zip(&x[p + 1..]) {
                *slot += xp * xq;
            }
        }
    }
    for v in &mut variance {
        *v /= nf;
    }

    let mut corr_sum = 0.0;
    let mut corr_count = 0usize;
    for p in 0..n {
        let row_base = pair_base(p, n);
        for q in (p + 1)..n {
            let cov = cross[row_base + q - p - 1] / nf - mean[p] * mean[q];
            let denom = (variance[p] * variance[q]).sqrt();
            if denom > 0.0 {
                corr_sum += (cov / denom).abs();
                corr_count += 1;
            }
        }
    }
    let mean_abs_corr = if corr_count > 0 {
        Some(corr_sum / corr_count as f64)
    } else {
        None
    };
    let max_var_dev = variance
        .iter()
        .fold(0.0f64, |acc, v| acc.max((v - 1.0).abs()));

    Ok(SteadyStateReport {
        sample_count: count,
        mean,
        variance: Some(variance),
        mean_abs_offdiag_correlation: mean_abs_corr,
        max_abs_mean,
        max_abs_variance_deviation: Some(max_var_dev),
    })
}

/// Start of row p in the packed upper-triangle pair buffer.
fn pair_base(p: usize, n: usize) -> usize {
    // Σ_{r<p} (n-1-r) = p·(n-1) − p(p−1)/2
    p * (n - 1) - p * (p.saturating_sub(1)) / 2
}
