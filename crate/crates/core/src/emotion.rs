//! PAD dynamics: arousal rises with aggregated reflex deviations, calm
//! trainee input erodes elevated dominance and pulls the whole state back
//! toward the character's personality.

use crate::error::{Error, Result};
use crate::types::{clamp_pad, PadState, Personality};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionConfig {
    /// Fraction of the gap to the personality closed per fully calm tick.
    pub decay_rate: f64,
    pub arousal_gain: f64,
    pub dominance_gain: f64,
    /// Mean absolute deviation (meters) that saturates arousal excitation.
    pub deviation_scale: f64,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        Self {
            decay_rate: 0.3,
            arousal_gain: 0.3,
            dominance_gain: 0.4,
            deviation_scale: 4.0,
        }
    }
}

impl EmotionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.decay_rate) {
            return Err(Error::domain("decay_rate", self.decay_rate, "[0, 1]"));
        }
        if !self.arousal_gain.is_finite() || self.arousal_gain < 0.0 {
            return Err(Error::domain("arousal_gain", self.arousal_gain, "[0, inf)"));
        }
        if !self.dominance_gain.is_finite() || self.dominance_gain < 0.0 {
            return Err(Error::domain(
                "dominance_gain",
                self.dominance_gain,
                "[0, inf)",
            ));
        }
        if !self.deviation_scale.is_finite() || self.deviation_scale <= 0.0 {
            return Err(Error::domain(
                "deviation_scale",
                self.deviation_scale,
                "(0, inf)",
            ));
        }
        Ok(())
    }
}

/// Moves each component a fraction `rate` of the way to the personality.
pub fn decay_toward(pad: &PadState, personality: &Personality, rate: f64) -> Result<PadState> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::domain("rate", rate, "[0, 1]"));
    }
    let target = personality.pad_default.components();
    let mut out = pad.components();
    for (c, d) in out.iter_mut().zip(target) {
        // (1 - r) c + r d hits both endpoints exactly.
        *c = (1.0 - rate) * *c + rate * d;
    }
    clamp_pad(PadState::from_components(out))
}

/// One emotion update from this tick's node deviations and the trainee's
/// calmness.
pub fn aggregate_deviations(
    pad: &PadState,
    deviations: &[f64],
    calmness: f64,
    cfg: &EmotionConfig,
    personality: &Personality,
) -> Result<PadState> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&calmness) {
        return Err(Error::domain("calmness", calmness, "[0, 1]"));
    }
    if let Some(bad) = deviations.iter().find(|d| !d.is_finite()) {
        return Err(Error::domain("deviation", *bad, "a finite number"));
    }

    let drive = if deviations.is_empty() {
        0.0
    } else {
        let mean = deviations.iter().map(|d| d.abs()).sum::<f64>() / deviations.len() as f64;
        (mean / cfg.deviation_scale).clamp(0.0, 1.0)
    };

    let mut next = *pad;
    next.arousal = (next.arousal + cfg.arousal_gain * drive * (1.0 - calmness)).clamp(-1.0, 1.0);

    let excess = (next.dominance - personality.pad_default.dominance).max(0.0);
    next.dominance = (next.dominance - cfg.dominance_gain * calmness * excess).clamp(-1.0, 1.0);

    decay_toward(&next, personality, cfg.decay_rate * calmness)
}
