pub mod entropy_report;
pub mod fp_compare;
pub mod osmosis;
pub mod probdiff;

use anyhow::{ensure, Context, Result};
use std::path::Path;

/// Frame file name for a recorded step: frame_00042.pgm / .ppm.
pub fn frame_name(step: usize, channels: usize) -> String {
    let ext = if channels == 3 { "ppm" } else { "pgm" };
    format!("frame_{step:05}.{ext}")
}

/// Sidecar metadata path for a frame.
pub fn sidecar_name(step: usize) -> String {
    format!("frame_{step:05}.txt")
}

pub fn ensure_outdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn check_record_list(record: &[usize]) -> Result<()> {
    ensure!(!record.is_empty(), "--record needs at least one step");
    ensure!(
        record.windows(2).all(|w| w[0] < w[1]),
        "--record list must be sorted strictly increasing"
    );
    Ok(())
}

/// Writes a sidecar of `key: value` lines.
pub fn write_sidecar(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    for (key, value) in entries {
        text.push_str(key);
        text.push_str(": ");
        text.push_str(value);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
