use crate::error::{Error, Result};
use crate::fokker_planck::grid::{histogram_density, DensityGrid};
use crate::fokker_planck::moments::MomentFields;
use crate::fokker_planck::solver::fp_forward_solve;
use crate::probdiff::NoiseSchedule;
use crate::rng::RngStream;

/// Monte-Carlo consistency check between the scalar noising chain and its
/// density evolution: runs `n_samples` chains u ← √(1−β)·u + √β·ξ from u0,
/// and at each recorded step compares their histogram with the PDE solution
/// started from a narrow Gaussian (std 2h) standing in for δ(u − u0). One
/// chain step corresponds to one unit of PDE time.
///
/// Returns (step, L1 distance) pairs. Requires a constant-β schedule so the
/// continuum moments are time-independent.
#[allow(clippy::too_many_arguments)]
pub fn chain_vs_pde_compare(
    u0: f64,
    schedule: &NoiseSchedule,
    n_samples: usize,
    lo: f64,
    hi: f64,
    m: usize,
    record_steps: &[usize],
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples {
            needed: 10_000,
            got: n_samples,
        });
    }
    let beta = schedule.beta(1)?;
    if schedule.betas().iter().any(|&b| b != beta) {
        return Err(Error::NonConstantSchedule);
    }
    if record_steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedRecordSteps);
    }
    let max_step = record_steps.last().copied().unwrap_or(0);
    if max_step > schedule.len() {
        return Err(Error::StepOutOfRange {
            step: max_step,
            len: schedule.len(),
        });
    }

    let h = (hi - lo) / m as f64;
    let mut pde = DensityGrid::gaussian(lo, hi, m, u0, 2.0 * h)?;
    let mom = MomentFields::from_constant_beta(beta)?;
    // Half the positivity bound, snapped so unit intervals divide evenly.
    let dt = {
        let bound = 0.5 * h * h / (2.0 * beta);
        1.0 / (1.0 / bound.min(1.0)).ceil()
    };

    let mut states = vec![u0; n_samples];
    let mut rng = RngStream::new(seed);
    let scale = (1.0 - beta).sqrt();
    let spread = beta.sqrt();

    let mut distances = Vec::with_capacity(record_steps.len());
    let mut pde_time = 0usize;
    let mut step = 0usize;
    for &target in record_steps {
        while step < target {
            for u in &mut states {
                *u = scale * *u + spread * rng.next_normal();
            }
            step += 1;
        }
        if target > pde_time {
            pde = fp_forward_solve(&pde, &mom, (target - pde_time) as f64, dt)?;
            pde_time = target;
        }
        let (hist, _outside) = histogram_density(&states, lo, hi, m)?;
        distances.push((target, hist.l1_distance(&pde)?));
    }
    Ok(distances)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_pde_stay_close_along_the_run() {
        let schedule = NoiseSchedule::constant(0.02, 60).unwrap();
        let distances =
            chain_vs_pde_compare(1.0, &schedule, 20_000, -6.0, 6.0, 160, &[10, 50], 17).unwrap();
        assert_eq!(distances.len(), 2);
        for &(step, l1) in &distances {
            assert!(l1 < 0.1, "step {step}: L1 = {l1}");
        }
    }

    #[test]
    fn step_zero_reports_pure_discretisation_error() {
        let schedule = NoiseSchedule::constant(0.02, 10).unwrap();
        let (lo, hi, m) = (-6.0, 6.0, 160);
        let distances =
            chain_vs_pde_compare(1.0, &schedule, 10_000, lo, hi, m, &[0], 5).unwrap();

        // Same distance computed directly: spike histogram vs narrow start.
        let h = (hi - lo) / m as f64;
        let p0 = DensityGrid::gaussian(lo, hi, m, 1.0, 2.0 * h).unwrap();
        let (hist, _) = histogram_density(&vec![1.0; 10_000], lo, hi, m).unwrap();
        let expected = hist.l1_distance(&p0).unwrap();
        assert_eq!(distances[0], (0, expected));
    }

    #[test]
    fn symmetric_start_yields_unskewed_samples() {
        let schedule = NoiseSchedule::constant(0.02, 50).unwrap();
        let n = 20_000;
        // Re-run the chain here to inspect the samples themselves.
        let mut rng = RngStream::new(99);
        let mut states = vec![0.0f64; n];
        let (scale, spread) = ((1.0f64 - 0.02).sqrt(), 0.02f64.sqrt());
        for _ in 0..schedule.len() {
            for u in &mut states {
                *u = scale * *u + spread * rng.next_normal();
            }
        }
        let mean = states.iter().sum::<f64>() / n as f64;
        let var = states.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / n as f64;
        let skew = states
            .iter()
            .map(|u| {
                let z = (u - mean) / var.sqrt();
                z * z * z
            })
            .sum::<f64>()
            / n as f64;
        let stderr = (6.0 / n as f64).sqrt();
        assert!(skew.abs() < 3.0 * stderr, "skewness {skew}");
    }

    #[test]
    fn preconditions_are_enforced() {
        let varying = NoiseSchedule::new(vec![0.01, 0.02]).unwrap();
        assert!(matches!(
            chain_vs_pde_compare(0.0, &varying, 10_000, -6.0, 6.0, 100, &[1], 1),
            Err(Error::NonConstantSchedule)
        ));
        let constant = NoiseSchedule::constant(0.02, 10).unwrap();
        assert!(matches!(
            chain_vs_pde_compare(0.0, &constant, 100, -6.0, 6.0, 100, &[1], 1),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            chain_vs_pde_compare(0.0, &constant, 10_000, -6.0, 6.0, 100, &[11], 1),
            Err(Error::StepOutOfRange { .. })
        ));
        assert!(matches!(
            chain_vs_pde_compare(0.0, &constant, 10_000, -6.0, 6.0, 100, &[3, 2], 1),
            Err(Error::UnsortedRecordSteps)
        ));
    }
}
