use anyhow::{Context, Result};
use clap::Args;
use driftscale::probdiff::{conditional_entropy, entropy_increment, validate_schedule, NoiseSchedule};
use driftscale::RngStream;
use std::path::PathBuf;

use crate::commands::{check_record_list, ensure_outdir, frame_name, sidecar_name, write_sidecar};
use crate::metrics::{num, MetricLog};
use crate::pnm::{read_pnm, write_pnm};
use crate::transforms::{noise_to_display, standardize, DISPLAY_HI, DISPLAY_LO};

/// Run the forward noising chain on an image and write recorded frames
/// plus an entropy log.
#[derive(Debug, Args)]
pub struct ProbdiffArgs {
    /// Input image (PGM/PPM, ASCII or binary).
    pub input: PathBuf,

    /// Per-step noise level, constant across the schedule.
    #[arg(long, default_value_t = 0.02)]
    pub beta: f64,

    /// Schedule length. Defaults to the last recorded step.
    #[arg(long)]
    pub steps: Option<usize>,

    /// Step indices to write out (sorted, comma separated; 0 is the input).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1,2,4,8,32,128,512,2048,8192"
    )]
    pub record: Vec<usize>,

    /// Noise stream seed. Identical seeds reproduce frames byte for byte.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory, created if missing.
    #[arg(long)]
    pub outdir: PathBuf,
}

pub fn run(args: &ProbdiffArgs) -> Result<()> {
    check_record_list(&args.record)?;
    let steps = args.steps.unwrap_or_else(|| *args.record.last().unwrap());
    let record: Vec<usize> = args
        .record
        .iter()
        .copied()
        .filter(|&s| s > 0 && s <= steps)
        .collect();

    let raw = read_pnm(&args.input)?;
    let (u0, mean, std) = standardize(&raw)?;
    let n = u0.width() * u0.height() * u0.channels();

    let schedule = NoiseSchedule::constant(args.beta, steps)?;
    let mut noise = RngStream::new(args.seed);
    let trajectory = driftscale::probdiff::run_trajectory(&u0, &schedule, &record, &mut noise)?;

    ensure_outdir(&args.outdir)?;
    for (step, frame) in trajectory.steps() {
        let display = noise_to_display(frame, 255)?;
        let path = args.outdir.join(frame_name(*step, frame.channels()));
        let clamped = write_pnm(&display, &path, 255)?;
        write_sidecar(
            &args.outdir.join(sidecar_name(*step)),
            &[
                ("step", step.to_string()),
                ("seed", args.seed.to_string()),
                ("beta", num(args.beta)),
                (
                    "display_transform",
                    format!("affine [{DISPLAY_LO}, {DISPLAY_HI}] -> [0, 255], clamped"),
                ),
                ("standardization_mean", num(mean)),
                ("standardization_std", num(std)),
                ("clamped_fraction", num(clamped)),
            ],
        )?;
    }

    let mut log = MetricLog::new(&[
        "step",
        "beta",
        "alpha_bar",
        "conditional_entropy",
        "entropy_increment",
        "admissible",
        "margin",
    ]);
    let checks = validate_schedule(&schedule, n)?;
    for i in 1..=steps {
        let check = &checks[i - 1];
        log.push_row(vec![
            i.to_string(),
            num(check.beta),
            num(schedule.alpha_bar(i)?),
            num(conditional_entropy(&schedule, i, n)?),
            num(entropy_increment(check.beta, n)?),
            check.admissible.to_string(),
            num(check.margin),
        ])?;
    }
    let csv_path = args.outdir.join("entropy.csv");
    log.write(&csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;

    println!(
        "probdiff: {} frames, {} schedule rows -> {}",
        trajectory.steps().len(),
        steps,
        args.outdir.display()
    );
    Ok(())
}
