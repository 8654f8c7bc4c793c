use anyhow::{ensure, Context, Result};
use clap::Args;
use driftscale::osmosis::{canonical_drift, evolve_observed, relative_entropy, theoretical_steady_state};
use driftscale::ImageBuffer;
use std::path::PathBuf;

use crate::commands::{check_record_list, ensure_outdir, frame_name, sidecar_name, write_sidecar};
use crate::metrics::{num, MetricLog};
use crate::pnm::{read_pnm, write_pnm};
use crate::transforms::{noise_guidance, offset_down, offset_up};

const SOLVE_TOL: f64 = 1e-9;
const SOLVE_MAX_ITER: usize = 10_000;

/// Run the osmosis drift-diffusion filter towards the guidance image and
/// write recorded frames plus a per-step metric log.
#[derive(Debug, Args)]
pub struct OsmosisArgs {
    /// Initial image (PGM/PPM, ASCII or binary).
    pub input: PathBuf,

    /// Guidance image path, or "noise:SEED" for a positive standard-normal
    /// sample (affine map of clamped N(0,1) draws into [1, 256]).
    #[arg(long)]
    pub guidance: String,

    /// Implicit time step size.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,

    /// Step indices to write out (sorted, comma separated; 0 is the input).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1,2,4,8,32,128,512,2048,8192"
    )]
    pub record: Vec<usize>,

    /// Output directory, created if missing.
    #[arg(long)]
    pub outdir: PathBuf,
}

fn load_guidance(spec: &str, like: &ImageBuffer) -> Result<(ImageBuffer, String)> {
    if let Some(seed_text) = spec.strip_prefix("noise:") {
        let seed: u64 = seed_text
            .parse()
            .with_context(|| format!("guidance seed {seed_text:?} is not a u64"))?;
        let v = noise_guidance(like.width(), like.height(), like.channels(), seed)?;
        return Ok((v, format!("noise:{seed} (clamped N(0,1) mapped to [1, 256])")));
    }
    let v = offset_up(&read_pnm(PathBuf::from(spec).as_path())?)?;
    ensure!(
        v.same_shape(like),
        "guidance shape {}x{}x{} does not match input {}x{}x{}",
        v.width(),
        v.height(),
        v.channels(),
        like.width(),
        like.height(),
        like.channels()
    );
    Ok((v, format!("{spec} (offset +1)")))
}

pub fn run(args: &OsmosisArgs) -> Result<()> {
    check_record_list(&args.record)?;
    ensure!(args.tau > 0.0, "--tau must be positive");

    let f = offset_up(&read_pnm(&args.input)?)?;
    let (v, guidance_desc) = load_guidance(&args.guidance, &f)?;
    let d = canonical_drift(&v, 1.0)?;
    let w = theoretical_steady_state(&f, &v)?;

    ensure_outdir(&args.outdir)?;

    // The observer runs under the core error type, so raw rows are collected
    // here and moved into the log afterwards.
    let mut rows: Vec<Vec<String>> = Vec::new();
    let result = evolve_observed(
        &f,
        &d,
        1.0,
        args.tau,
        &args.record,
        SOLVE_TOL,
        SOLVE_MAX_ITER,
        |step, frame, reports| {
            let iterations: usize = reports.iter().map(|r| r.iterations).sum();
            let residual = reports
                .iter()
                .map(|r| r.final_relative_residual)
                .fold(0.0f64, f64::max);
            rows.push(vec![
                step.to_string(),
                num(frame.mean_all()),
                num(relative_entropy(frame, &w, 1.0)?),
                iterations.to_string(),
                num(residual),
            ]);
            Ok(())
        },
    )?;

    let mut log = MetricLog::new(&[
        "step",
        "mean_value",
        "relative_entropy",
        "solver_iterations",
        "max_relative_residual",
    ]);
    for row in rows {
        log.push_row(row)?;
    }

    for (step, frame) in &result.frames {
        let display = offset_down(frame)?;
        let path = args.outdir.join(frame_name(*step, frame.channels()));
        let clamped = write_pnm(&display, &path, 255)?;
        write_sidecar(
            &args.outdir.join(sidecar_name(*step)),
            &[
                ("step", step.to_string()),
                ("tau", num(args.tau)),
                ("guidance", guidance_desc.clone()),
                (
                    "value_transform",
                    "input offset +1 into [1, 256] before filtering, -1 on output".into(),
                ),
                ("clamped_fraction", num(clamped)),
            ],
        )?;
    }

    let csv_path = args.outdir.join("osmosis.csv");
    log.write(&csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;

    println!(
        "osmosis: {} frames, max relative mean drift {:.3e}, {} solver iterations -> {}",
        result.frames.len(),
        result.max_relative_mean_drift,
        result.total_solver_iterations,
        args.outdir.display()
    );
    Ok(())
}
