use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::probdiff::schedule::NoiseSchedule;

/// One forward transition: √(1−β)·u_prev + √β·noise.
pub fn forward_step(u_prev: &ImageBuffer, beta: f64, noise: &ImageBuffer) -> Result<ImageBuffer> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    u_prev.affine_combine((1.0 - beta).sqrt(), noise, beta.sqrt())
}

/// Direct 0→i transition: √(ᾱ_i)·u0 + √(1−ᾱ_i)·noise, distributionally equal
/// to composing i forward steps. i = 0 returns u0 exactly.
pub fn jump_to_step(
    u0: &ImageBuffer,
    schedule: &NoiseSchedule,
    i: usize,
    noise: &ImageBuffer,
) -> Result<ImageBuffer> {
    let alpha = schedule.alpha_bar(i)?;
    if i == 0 {
        if !u0.same_shape(noise) {
            return Err(Error::ShapeMismatch {
                expected: u0.shape_string(),
                actual: noise.shape_string(),
            });
        }
        return Ok(u0.clone());
    }
    u0.affine_combine(alpha.sqrt(), noise, (1.0 - alpha).sqrt())
}
