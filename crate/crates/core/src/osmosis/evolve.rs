use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::linalg::{bicgstab, SolveReport, SolveStatus, SparseMatrixCSR};
use crate::osmosis::drift::DriftField;
use crate::osmosis::operator::{assemble_operator, OsmosisOperator};

/// Neumaier compensated sum, so functional evaluations do not drown small
/// per-step differences in accumulation noise.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

fn positive_min(img: &ImageBuffer, context: &str) -> Result<()> {
    let min = img.min_value();
    if min <= 0.0 {
        return Err(Error::NonPositive {
            value: min,
            context: context.into(),
        });
    }
    Ok(())
}

fn solve_channel(
    m: &SparseMatrixCSR,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let (x, report) = bicgstab(m, b, x0, tol, max_iter)?;
    if report.status != SolveStatus::Converged {
        return Err(Error::SolverFailed {
            status: report.status,
            residual: report.final_relative_residual,
            iterations: report.iterations,
        });
    }
    Ok(x)
}

/// One implicit osmosis step: solves (I − τ·A)·u_next = u per channel.
///
/// Zero column sums of A make the column sums of the system matrix exactly
/// one, so the mean grey value is conserved up to the solver residual; the
/// M-matrix structure (positive diagonal, nonpositive off-diagonals under
/// the |d|·h/2 ≤ 1 grid bound) preserves positivity for any τ > 0.
pub fn implicit_step(
    u: &ImageBuffer,
    op: &OsmosisOperator,
    tau: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ImageBuffer> {
    positive_min(u, "implicit osmosis step input")?;
    let mut planes = Vec::with_capacity(op.channels());
    for c in 0..op.channels() {
        let m = op.implicit_matrix(c, tau)?;
        let b = u.channel_plane(c);
        planes.push(solve_channel(&m, &b, &b, tol, max_iter)?);
    }
    ImageBuffer::from_planes(u.width(), u.height(), &planes)
}

/// Outcome of an osmosis evolution run.
#[derive(Debug, Clone)]
pub struct EvolveResult {
    /// Recorded (step, frame) pairs; step 0 is always present.
    pub frames: Vec<(usize, ImageBuffer)>,
    /// Largest per-step relative change of any channel mean, a direct
    /// numerical audit of the conservation property.
    pub max_relative_mean_drift: f64,
    /// Total BiCGSTAB iterations across all steps and channels.
    pub total_solver_iterations: usize,
}

/// Repeated implicit stepping from `f` under a fixed drift field; frames are
/// recorded at the requested step counts (step 0, the initial image, always).
/// Channels evolve independently. The system matrices are assembled once and
/// every solve warm-starts from the previous state.
pub fn evolve(
    f: &ImageBuffer,
    d: &DriftField,
    h: f64,
    tau: f64,
    record_steps: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<EvolveResult> {
    evolve_observed(f, d, h, tau, record_steps, tol, max_iter, |_, _, _| Ok(()))
}

/// [`evolve`] with a per-step observer called after every step (including
/// step 0) with the current state and the per-channel solve reports (empty
/// at step 0); lets callers track functionals and solver behaviour along
/// the full trajectory without recording every frame.
#[allow(clippy::too_many_arguments)]
pub fn evolve_observed<F>(
    f: &ImageBuffer,
    d: &DriftField,
    h: f64,
    tau: f64,
    record_steps: &[usize],
    tol: f64,
    max_iter: usize,
    mut observer: F,
) -> Result<EvolveResult>
where
    F: FnMut(usize, &ImageBuffer, &[SolveReport]) -> Result<()>,
{
    if f.width() != d.width() || f.height() != d.height() || f.channels() != d.channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}x{}", d.width(), d.height(), d.channels()),
            actual: f.shape_string(),
        });
    }
    positive_min(f, "osmosis evolution input")?;
    if record_steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedRecordSteps);
    }

    let op = assemble_operator(d, h)?;
    let channels = op.channels();
    let matrices: Vec<SparseMatrixCSR> = (0..channels)
        .map(|c| op.implicit_matrix(c, tau))
        .collect::<Result<_>>()?;

    let mut planes: Vec<Vec<f64>> = (0..channels).map(|c| f.channel_plane(c)).collect();
    let mut means: Vec<f64> = f.mean_value();

    let mut frames = Vec::with_capacity(record_steps.len() + 1);
    frames.push((0, f.clone()));
    observer(0, &frames[0].1, &[])?;

    let max_step = record_steps.last().copied().unwrap_or(0);
    let mut max_drift = 0.0f64;
    let mut total_iterations = 0usize;
    let mut reports = Vec::with_capacity(channels);

    for step in 1..=max_step {
        reports.clear();
        for (c, m) in matrices.iter().enumerate() {
            let b = std::mem::take(&mut planes[c]);
            let (x, report) = bicgstab(m, &b, &b, tol, max_iter)?;
            if report.status != SolveStatus::Converged {
                return Err(Error::SolverFailed {
                    status: report.status,
                    residual: report.final_relative_residual,
                    iterations: report.iterations,
                });
            }
            total_iterations += report.iterations;
            reports.push(report);

            let new_mean = compensated_sum(x.iter().copied()) / x.len() as f64;
            let drift = (new_mean - means[c]).abs() / means[c].abs().max(f64::MIN_POSITIVE);
            max_drift = max_drift.max(drift);
            means[c] = new_mean;
            planes[c] = x;
        }

        let frame = ImageBuffer::from_planes(f.width(), f.height(), &planes)?;
        observer(step, &frame, &reports)?;
        if record_steps.binary_search(&step).is_ok() {
            frames.push((step, frame));
        }
    }

    Ok(EvolveResult {
        frames,
        max_relative_mean_drift: max_drift,
        total_solver_iterations: total_iterations,
    })
}

/// The steady state selected by conservation: w = (μ_f/μ_v)·v per channel,
/// the multiple of the guidance with the initial image's mean grey value.
pub fn theoretical_steady_state(f: &ImageBuffer, v: &ImageBuffer) -> Result<ImageBuffer> {
    if !f.same_shape(v) {
        return Err(Error::ShapeMismatch {
            expected: f.shape_string(),
            actual: v.shape_string(),
        });
    }
    positive_min(v, "steady-state guidance")?;
    let mu_f = f.mean_value();
    let mu_v = v.mean_value();
    let channels = f.channels();
    let scale: Vec<f64> = mu_f.iter().zip(&mu_v).map(|(&a, &b)| a / b).collect();
    let mut data = Vec::with_capacity(v.element_count());
    for px in v.as_slice().chunks_exact(channels) {
        for (c, &val) in px.iter().enumerate() {
            data.push(scale[c] * val);
        }
    }
    ImageBuffer::new(f.width(), f.height(), channels, data)
}

/// Relative entropy of u with respect to w: −h²·Σ u_j·ln(u_j/w_j), the
/// Lyapunov functional that grows along osmosis trajectories toward the
/// steady state. Compensated summation keeps the evaluation noise near one
/// ulp of the result so per-step monotonicity is resolvable.
pub fn relative_entropy(u: &ImageBuffer, w: &ImageBuffer, h: f64) -> Result<f64> {
    if !u.same_shape(w) {
        return Err(Error::ShapeMismatch {
            expected: u.shape_string(),
            actual: w.shape_string(),
        });
    }
    positive_min(u, "relative entropy first argument")?;
    positive_min(w, "relative entropy second argument")?;
    let sum = compensated_sum(
        u.as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(&uj, &wj)| uj * (uj / wj).ln()),
    );
    Ok(-h * h * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osmosis::drift::canonical_drift;
    use crate::rng::RngStream;

    fn random_positive_image(w: usize, h: usize, c: usize, seed: u64) -> ImageBuffer {
        let mut rng = RngStream::new(seed);
        let data: Vec<f64> = (0..w * h * c)
            .map(|_| 1.0 + 255.0 * rng.next_uniform())
            .collect();
        ImageBuffer::new(w, h, c, data).unwrap()
    }

    /// Smooth positive test image: offset cosine bump.
    fn smooth_image(w: usize, h: usize) -> ImageBuffer {
        use std::f64::consts::PI;
        let data: Vec<f64> = (0..w * h)
            .map(|j| {
                let (x, y) = ((j % w) as f64 / w as f64, (j / w) as f64 / h as f64);
                10.0 + 4.0 * (PI * x).cos() * (PI * y).cos()
            })
            .collect();
        ImageBuffer::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn constant_image_is_fixed_under_zero_drift() {
        let u = ImageBuffer::filled(5, 4, 1, 9.0).unwrap();
        let d = DriftField::zero(5, 4, 1).unwrap();
        let op = assemble_operator(&d, 1.0).unwrap();
        let next = implicit_step(&u, &op, 1.0, 1e-12, 100).unwrap();
        for (&a, &b) in u.as_slice().iter().zip(next.as_slice()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn guidance_is_a_fixed_point_under_canonical_drift() {
        let v = random_positive_image(7, 6, 1, 10);
        let d = canonical_drift(&v, 1.0).unwrap();
        let op = assemble_operator(&d, 1.0).unwrap();
        let next = implicit_step(&v, &op, 1.0, 1e-12, 500).unwrap();
        let max_rel = v
            .as_slice()
            .iter()
            .zip(next.as_slice())
            .map(|(&a, &b)| (a - b).abs() / a)
            .fold(0.0f64, f64::max);
        assert!(max_rel < 1e-10, "fixed point violated: {max_rel}");
    }

    #[test]
    fn implicit_step_preserves_mean_and_positivity() {
        let u = random_positive_image(9, 8, 2, 33);
        let mut rng = RngStream::new(34);
        let dx: Vec<f64> = (0..8 * 8 * 2).map(|_| 1.9 * (2.0 * rng.next_uniform() - 1.0)).collect();
        let dy: Vec<f64> = (0..9 * 7 * 2).map(|_| 1.9 * (2.0 * rng.next_uniform() - 1.0)).collect();
        let d = DriftField::new(9, 8, 2, dx, dy).unwrap();
        let op = assemble_operator(&d, 1.0).unwrap();
        let next = implicit_step(&u, &op, 2.5, 1e-12, 1000).unwrap();

        assert!(next.min_value() > 0.0, "positivity violated");
        for (a, b) in u.mean_value().iter().zip(next.mean_value()) {
            assert!((a - b).abs() / a < 1e-10, "mean drift {a} -> {b}");
        }
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        let d = DriftField::zero(2, 2, 1).unwrap();
        let op = assemble_operator(&d, 1.0).unwrap();
        let u = ImageBuffer::new(2, 2, 1, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(implicit_step(&u, &op, 1.0, 1e-9, 100).is_err());
    }

    #[test]
    fn evolve_records_requested_frames_and_converges_to_steady_state() {
        let f = random_positive_image(16, 16, 1, 55);
        let v = smooth_image(16, 16);
        let d = canonical_drift(&v, 1.0).unwrap();
        let steps = [0usize, 1, 8, 64, 512, 1500];
        let result = evolve(&f, &d, 1.0, 1.0, &steps, 1e-12, 2000).unwrap();

        let indices: Vec<usize> = result.frames.iter().map(|(i, _)| *i).collect();
        assert_eq!(indices, steps.to_vec());
        assert_eq!(result.frames[0].1, f);
        assert!(result.max_relative_mean_drift < 1e-10);

        let w = theoretical_steady_state(&f, &v).unwrap();
        let last = &result.frames.last().unwrap().1;
        let range = f.max_value() - f.min_value();
        let dev = last
            .as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(dev / range < 1e-3, "steady-state gap {}", dev / range);
    }

    #[test]
    fn zero_drift_evolution_matches_explicit_fine_step_reference() {
        // Independent reference: explicit Euler on the raw 5-point stencil
        // with tiny steps, far below the implicit step sizes under test.
        fn explicit_heat(u0: &ImageBuffer, t_end: f64, dt: f64) -> Vec<f64> {
            let (w, h) = (u0.width(), u0.height());
            let mut u = u0.as_slice().to_vec();
            let mut next = u.clone();
            let steps = (t_end / dt).round() as usize;
            for _ in 0..steps {
                for y in 0..h {
                    for x in 0..w {
                        let j = y * w + x;
                        let mut acc = 0.0;
                        if x > 0 {
                            acc += u[j - 1] - u[j];
                        }
                        if x + 1 < w {
                            acc += u[j + 1] - u[j];
                        }
                        if y > 0 {
                            acc += u[j - w] - u[j];
                        }
                        if y + 1 < h {
                            acc += u[j + w] - u[j];
                        }
                        next[j] = u[j] + dt * acc;
                    }
                }
                std::mem::swap(&mut u, &mut next);
            }
            u
        }

        let f = smooth_image(12, 12);
        let d = DriftField::zero(12, 12, 1).unwrap();
        let t_end = 0.8;
        let reference = explicit_heat(&f, t_end, 1e-4);

        // Implicit evolution at two step sizes; error should shrink ~O(τ).
        let mut errors = Vec::new();
        for &tau in &[0.4, 0.2, 0.1] {
            let steps = (t_end / tau).round() as usize;
            let result = evolve(&f, &d, 1.0, tau, &[steps], 1e-13, 2000).unwrap();
            let last = &result.frames.last().unwrap().1;
            let err = last
                .as_slice()
                .iter()
                .zip(&reference)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        let order1 = (errors[0] / errors[1]).log2();
        let order2 = (errors[1] / errors[2]).log2();
        assert!(
            order1 > 0.9 && order2 > 0.9,
            "observed orders {order1:.2}, {order2:.2} (errors {errors:?})"
        );
    }

    #[test]
    fn theoretical_steady_state_scales_the_guidance() {
        let v = random_positive_image(6, 6, 1, 70);
        let w = theoretical_steady_state(&v, &v).unwrap();
        for (&a, &b) in v.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }

        let f = ImageBuffer::filled(6, 6, 1, 128.0).unwrap();
        let mut v64 = random_positive_image(6, 6, 1, 71);
        let mu = v64.mean_all();
        v64 = v64.map(|x| x * 64.0 / mu).unwrap();
        let w = theoretical_steady_state(&f, &v64).unwrap();
        for (&a, &b) in v64.as_slice().iter().zip(w.as_slice()) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn relative_entropy_vanishes_iff_proportional_with_equal_means() {
        let v = random_positive_image(5, 5, 1, 90);
        assert!(relative_entropy(&v, &v, 1.0).unwrap().abs() < 1e-12);

        // u = c·w with c = 1 after mean matching.
        let w = v.map(|x| 1.0 * x).unwrap();
        assert!(relative_entropy(&v, &w, 1.0).unwrap().abs() < 1e-12);

        // Against a genuinely different field the functional is negative
        // (Gibbs' inequality with matched masses gives L < 0 away from w).
        let f = ImageBuffer::filled(5, 5, 1, v.mean_all()).unwrap();
        let l = relative_entropy(&v, &f, 1.0).unwrap();
        assert!(l < 0.0, "L = {l}");
    }

    #[test]
    fn relative_entropy_increases_along_trajectories() {
        let f = random_positive_image(12, 12, 1, 91);
        let v = smooth_image(12, 12);
        let d = canonical_drift(&v, 1.0).unwrap();
        let w = theoretical_steady_state(&f, &v).unwrap();

        let mut l_values = Vec::new();
        evolve_observed(&f, &d, 1.0, 1.0, &[300], 1e-13, 2000, |step, frame, reports| {
            assert_eq!(reports.is_empty(), step == 0);
            l_values.push(relative_entropy(frame, &w, 1.0)?);
            Ok(())
        })
        .unwrap();

        assert_eq!(l_values.len(), 301);
        let scale = l_values
            .iter()
            .fold(1.0f64, |acc, l| acc.max(l.abs()));
        for (t, pair) in l_values.windows(2).enumerate() {
            assert!(
                pair[1] >= pair[0] - 1e-12 * scale,
                "L decreased at step {t}: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        // The sequence should strictly grow early on, not just stagnate.
        assert!(l_values[10] > l_values[0]);
    }

    // Osmosis is a spatial operator: permuting pixels does not commute with
    // it, unlike the probabilistic chain where propagation happens per pixel.
    #[test]
    fn permutation_covariance_fails_for_osmosis() {
        use crate::perm::{apply_permutation, Permutation};
        let f = random_positive_image(6, 6, 1, 92);
        let v = smooth_image(6, 6);
        let d = canonical_drift(&v, 1.0).unwrap();
        let op = assemble_operator(&d, 1.0).unwrap();

        let mut rng = RngStream::new(93);
        let p = Permutation::random(36, &mut rng);

        let stepped = implicit_step(&f, &op, 1.0, 1e-12, 500).unwrap();
        let permuted_then_stepped =
            implicit_step(&apply_permutation(&f, &p).unwrap(), &op, 1.0, 1e-12, 500).unwrap();
        let stepped_then_permuted = apply_permutation(&stepped, &p).unwrap();

        let max_diff = permuted_then_stepped
            .as_slice()
            .iter()
            .zip(stepped_then_permuted.as_slice())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_diff > 1e-3,
            "osmosis unexpectedly commuted with a random permutation"
        );
    }
}
