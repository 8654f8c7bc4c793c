use anyhow::{bail, Context, Result};
use clap::Args;
use driftscale::fokker_planck::chain_vs_pde_compare;
use driftscale::probdiff::{validate_schedule, NoiseSchedule};
use std::path::PathBuf;

use crate::commands::check_record_list;
use crate::metrics::{num, MetricLog};

/// Compare Monte-Carlo forward-chain histograms against the drift-diffusion
/// PDE solution and log the L1 distances.
#[derive(Debug, Args)]
pub struct FpCompareArgs {
    /// Constant per-step noise level.
    #[arg(long, default_value_t = 0.02)]
    pub beta: f64,

    /// Deterministic scalar start value of every trajectory.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub u0: f64,

    /// Monte-Carlo trajectory count (at least 10000).
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    /// Comparison grid as "lo,hi,cells".
    #[arg(long, default_value = "-6,6,300", allow_hyphen_values = true)]
    pub grid: String,

    /// Chain steps at which to compare (sorted, comma separated).
    #[arg(long, value_delimiter = ',', default_value = "10,50,250")]
    pub times: Vec<usize>,

    /// Noise stream seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("--grid must be \"lo,hi,cells\", got {text:?}");
    }
    let lo: f64 = parts[0].trim().parse().context("grid lo")?;
    let hi: f64 = parts[1].trim().parse().context("grid hi")?;
    let m: usize = parts[2].trim().parse().context("grid cells")?;
    Ok((lo, hi, m))
}

pub fn run(args: &FpCompareArgs) -> Result<()> {
    check_record_list(&args.times)?;
    let (lo, hi, m) = parse_grid(&args.grid)?;
    let steps = *args.times.last().unwrap();

    let schedule = NoiseSchedule::constant(args.beta, steps)?;
    let distances = chain_vs_pde_compare(
        args.u0,
        &schedule,
        args.samples,
        lo,
        hi,
        m,
        &args.times,
        args.seed,
    )?;

    // The scalar chain is the n = 1 case, so admissibility is judged there.
    let check = validate_schedule(&NoiseSchedule::constant(args.beta, 1)?, 1)?[0];

    let mut log = MetricLog::new(&["step", "l1_distance", "beta_admissible_n1", "margin_n1"]);
    for (step, l1) in &distances {
        log.push_row(vec![
            step.to_string(),
            num(*l1),
            check.admissible.to_string(),
            num(check.margin),
        ])?;
    }

    match &args.out {
        Some(path) => {
            log.write(path)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("fp-compare: {} rows -> {}", distances.len(), path.display());
        }
        None => print!("{}", log.to_csv()),
    }
    Ok(())
}
