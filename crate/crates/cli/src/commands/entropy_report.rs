use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args};
use driftscale::probdiff::{conditional_entropy, entropy_increment, validate_schedule, NoiseSchedule};
use std::path::PathBuf;

use crate::metrics::{num, MetricLog};

/// Evaluate the closed-form entropy Lyapunov sequences of a noise schedule.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["schedule", "beta"])))]
pub struct EntropyReportArgs {
    /// Schedule file, one β per line (blank lines skipped).
    #[arg(long)]
    pub schedule: Option<PathBuf>,

    /// Constant β shorthand; needs --steps.
    #[arg(long, requires = "steps")]
    pub beta: Option<f64>,

    /// Schedule length for the constant-β form.
    #[arg(long)]
    pub steps: Option<usize>,

    /// Image element count n (pixels × channels) the entropies refer to.
    #[arg(long)]
    pub n: usize,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_schedule(args: &EntropyReportArgs) -> Result<NoiseSchedule> {
    if let Some(path) = &args.schedule {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut betas = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let beta: f64 = line
                .parse()
                .with_context(|| format!("{}:{}: bad β {line:?}", path.display(), lineno + 1))?;
            betas.push(beta);
        }
        if betas.is_empty() {
            bail!("{}: no β values found", path.display());
        }
        return Ok(NoiseSchedule::new(betas)?);
    }
    let beta = args.beta.unwrap();
    let steps = args.steps.unwrap();
    Ok(NoiseSchedule::constant(beta, steps)?)
}

pub fn run(args: &EntropyReportArgs) -> Result<()> {
    let schedule = load_schedule(args)?;
    let checks = validate_schedule(&schedule, args.n)?;

    let mut log = MetricLog::new(&[
        "step",
        "beta",
        "alpha_bar",
        "conditional_entropy",
        "entropy_increment",
        "admissible",
        "margin",
    ]);
    for (idx, check) in checks.iter().enumerate() {
        let i = idx + 1;
        log.push_row(vec![
            i.to_string(),
            num(check.beta),
            num(schedule.alpha_bar(i)?),
            num(conditional_entropy(&schedule, i, args.n)?),
            num(entropy_increment(check.beta, args.n)?),
            check.admissible.to_string(),
            num(check.margin),
        ])?;
    }

    match &args.out {
        Some(path) => {
            log.write(path)
                .with_context(|| format!("writing {}", path.display()))?;
            println!(
                "entropy-report: {} rows -> {}",
                schedule.len(),
                path.display()
            );
        }
        None => print!("{}", log.to_csv()),
    }
    Ok(())
}
