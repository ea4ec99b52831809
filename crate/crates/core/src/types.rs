//! Domain values shared by every stage of the reflex pipeline.
//!
//! All quantities are `f64`. Signs follow the character's point of view:
//! a negative torso pitch leans toward the trainee, a positive one away.

use crate::error::{Error, Result};

/// Channel name of the torso-pitch reflex, used both as node id and as
/// motor command channel.
pub const TORSO_PITCH: &str = "torso_pitch";

/// Pleasure, arousal and dominance, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PadState {
    pub pleasure: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl PadState {
    pub const NEUTRAL: PadState = PadState {
        pleasure: 0.0,
        arousal: 0.0,
        dominance: 0.0,
    };

    /// Builds a state, rejecting non-finite or out-of-range components.
    pub fn new(pleasure: f64, arousal: f64, dominance: f64) -> Result<Self> {
        let pad = Self {
            pleasure,
            arousal,
            dominance,
        };
        pad.validate()?;
        Ok(pad)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in self.named() {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(Error::domain(field, value, "[-1, 1]"));
            }
        }
        Ok(())
    }

    pub fn components(&self) -> [f64; 3] {
        [self.pleasure, self.arousal, self.dominance]
    }

    pub fn from_components([pleasure, arousal, dominance]: [f64; 3]) -> Self {
        Self {
            pleasure,
            arousal,
            dominance,
        }
    }

    pub(crate) fn named(&self) -> [(&'static str, f64); 3] {
        [
            ("pleasure", self.pleasure),
            ("arousal", self.arousal),
            ("dominance", self.dominance),
        ]
    }

    /// Component-wise sum, saturated back into range.
    pub fn offset(&self, delta: &PadState) -> Result<PadState> {
        clamp_pad(PadState {
            pleasure: self.pleasure + delta.pleasure,
            arousal: self.arousal + delta.arousal,
            dominance: self.dominance + delta.dominance,
        })
    }
}

/// Saturates every component into `[-1, 1]`.
pub fn clamp_pad(p: PadState) -> Result<PadState> {
    for (field, value) in p.named() {
        if !value.is_finite() {
            return Err(Error::domain(field, value, "a finite number"));
        }
    }
    Ok(PadState {
        pleasure: p.pleasure.clamp(-1.0, 1.0),
        arousal: p.arousal.clamp(-1.0, 1.0),
        dominance: p.dominance.clamp(-1.0, 1.0),
    })
}

/// The resting emotional state a character decays back to.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Personality {
    pub pad_default: PadState,
}

impl Personality {
    pub fn new(pad_default: PadState) -> Result<Self> {
        pad_default.validate()?;
        Ok(Self { pad_default })
    }
}

/// Torso orientation. Roll and yaw are carried for completeness and stay 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Posture {
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
}

impl Posture {
    pub fn pitched(pitch: f64) -> Self {
        Self {
            pitch,
            ..Self::default()
        }
    }
}

/// What the reflex nodes see during one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSnapshot {
    /// Meters between the character and the trainee.
    pub distance: f64,
    /// 1 is fully calm.
    pub trainee_calmness: f64,
    /// Meters per tick, positive when the trainee moves away.
    pub trainee_displacement: f64,
    /// Forward locomotion is obstructed (e.g. standing at a counter).
    pub blocked: bool,
}

impl SensorSnapshot {
    pub fn at_distance(distance: f64) -> Self {
        Self {
            distance,
            trainee_calmness: 0.0,
            trainee_displacement: 0.0,
            blocked: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() || self.distance < 0.0 {
            return Err(Error::domain("distance", self.distance, "[0, inf)"));
        }
        if !(0.0..=1.0).contains(&self.trainee_calmness) {
            return Err(Error::domain(
                "trainee_calmness",
                self.trainee_calmness,
                "[0, 1]",
            ));
        }
        if !self.trainee_displacement.is_finite() {
            return Err(Error::domain(
                "trainee_displacement",
                self.trainee_displacement,
                "a finite number",
            ));
        }
        Ok(())
    }
}

/// Social-distance parameters of the torso-pitch reflex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsoReflexParams {
    /// Personal preferred social distance in meters.
    pub sd_default: f64,
    /// Cultural distance offset in meters.
    pub cultural_distance: f64,
}

impl Default for TorsoReflexParams {
    fn default() -> Self {
        Self {
            sd_default: 1.0,
            cultural_distance: 0.0,
        }
    }
}

impl TorsoReflexParams {
    pub fn new(sd_default: f64, cultural_distance: f64) -> Result<Self> {
        let params = Self {
            sd_default,
            cultural_distance,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sd_default.is_finite() || self.sd_default <= 0.0 {
            return Err(Error::domain("sd_default", self.sd_default, "(0, inf)"));
        }
        if !self.cultural_distance.is_finite() || self.cultural_distance < 0.0 {
            return Err(Error::domain(
                "cultural_distance",
                self.cultural_distance,
                "[0, inf)",
            ));
        }
        Ok(())
    }
}

/// A command for one actuator channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorCommand {
    pub channel: &'static str,
    pub value: f64,
}

impl MotorCommand {
    pub fn torso_pitch(value: f64) -> Self {
        Self {
            channel: TORSO_PITCH,
            value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pad(p: f64, a: f64, d: f64) -> PadState {
        PadState::from_components([p, a, d])
    }

    #[test]
    fn clamp_keeps_in_range_values() {
        assert_eq!(clamp_pad(pad(0.5, -0.2, 0.0)).unwrap(), pad(0.5, -0.2, 0.0));
        assert_eq!(clamp_pad(pad(-1.0, 1.0, 1.0)).unwrap(), pad(-1.0, 1.0, 1.0));
    }

    #[test]
    fn clamp_saturates() {
        assert_eq!(clamp_pad(pad(2.0, -3.0, 1.0)).unwrap(), pad(1.0, -1.0, 1.0));
    }

    #[test]
    fn clamp_rejects_non_finite() {
        let err = clamp_pad(pad(f64::NAN, 0.0, 0.0)).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                field: "pleasure",
                ..
            }
        ));
        assert!(clamp_pad(pad(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(PadState::new(0.0, 0.0, 1.5).is_err());
        assert!(TorsoReflexParams::new(0.0, 0.2).is_err());
        assert!(TorsoReflexParams::new(1.0, -0.1).is_err());
        assert!(TorsoReflexParams::new(1.0, 0.2).is_ok());
        assert!(SensorSnapshot::at_distance(-1.0).validate().is_err());
        let mut s = SensorSnapshot::at_distance(1.0);
        s.trainee_calmness = 1.2;
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(p in -5.0..5.0f64, a in -5.0..5.0f64, d in -5.0..5.0f64) {
            let once = clamp_pad(pad(p, a, d)).unwrap();
            prop_assert_eq!(clamp_pad(once).unwrap(), once);
            prop_assert!(once.validate().is_ok());
        }

        #[test]
        fn clamp_is_monotone(x in -5.0..5.0f64, y in -5.0..5.0f64) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let a = clamp_pad(pad(lo, lo, lo)).unwrap();
            let b = clamp_pad(pad(hi, hi, hi)).unwrap();
            for (l, h) in a.components().iter().zip(b.components()) {
                prop_assert!(*l <= h);
            }
        }
    }
}
