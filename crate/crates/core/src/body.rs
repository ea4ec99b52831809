//! Body integrity: a torso pitch beyond what the character can hold while
//! standing turns into walking, unless an obstacle blocks the legs, in which
//! case the torso leans further over it.

use crate::error::{Error, Result};
use crate::types::{MotorCommand, TORSO_PITCH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyConfig {
    /// Largest lean magnitude held while standing freely.
    pub lean_max: f64,
    /// Largest lean magnitude when blocked, e.g. leaning over a counter.
    pub lean_over_max: f64,
    /// Meters per tick of walking per unit of pitch beyond `lean_max`.
    pub walk_gain: f64,
    /// Distance floor in meters.
    pub min_distance: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            lean_max: 0.01,
            lean_over_max: 2.5,
            walk_gain: 0.6,
            min_distance: 1.0,
        }
    }
}

impl BodyConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lean_max.is_finite() || self.lean_max <= 0.0 {
            return Err(Error::domain("lean_max", self.lean_max, "(0, inf)"));
        }
        if !self.lean_over_max.is_finite() || self.lean_over_max < self.lean_max {
            return Err(Error::domain(
                "lean_over_max",
                self.lean_over_max,
                "[lean_max, inf)",
            ));
        }
        if !self.walk_gain.is_finite() || self.walk_gain < 0.0 {
            return Err(Error::domain("walk_gain", self.walk_gain, "[0, inf)"));
        }
        if !self.min_distance.is_finite() || self.min_distance < 0.0 {
            return Err(Error::domain("min_distance", self.min_distance, "[0, inf)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    /// Achieved torso pitch, same sign convention as the command.
    pub lean: f64,
    /// Meters per tick; positive approaches the trainee, negative retreats.
    pub forward_velocity: f64,
}

pub fn resolve_body(command: &MotorCommand, blocked: bool, cfg: &BodyConfig) -> Result<BodyState> {
    if command.channel != TORSO_PITCH {
        return Err(Error::Config(format!(
            "body cannot resolve channel '{}'",
            command.channel
        )));
    }
    let c = command.value;
    if !c.is_finite() {
        return Err(Error::domain("torso_pitch", c, "a finite number"));
    }
    if blocked && c < 0.0 {
        return Ok(BodyState {
            lean: -c.abs().min(cfg.lean_over_max),
            forward_velocity: 0.0,
        });
    }
    let lean = c.signum() * c.abs().min(cfg.lean_max);
    let excess = (c.abs() - cfg.lean_max).max(0.0);
    // Forward pitch (negative) walks toward the trainee.
    let forward_velocity = -c.signum() * cfg.walk_gain * excess;
    Ok(BodyState {
        lean: if c == 0.0 { 0.0 } else { lean },
        forward_velocity: if excess == 0.0 { 0.0 } else { forward_velocity },
    })
}

/// Next distance after the character walks and the trainee moves.
pub fn integrate_distance(
    distance: f64,
    body: &BodyState,
    trainee_displacement: f64,
    cfg: &BodyConfig,
) -> f64 {
    (distance - body.forward_velocity + trainee_displacement).max(cfg.min_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(lean_max: f64, lean_over_max: f64, walk_gain: f64, min_distance: f64) -> BodyConfig {
        BodyConfig {
            lean_max,
            lean_over_max,
            walk_gain,
            min_distance,
        }
    }

    #[test]
    fn equilibrium_is_still() {
        let out = resolve_body(
            &MotorCommand::torso_pitch(0.0),
            false,
            &BodyConfig::default(),
        )
        .unwrap();
        assert_eq!(out, BodyState::default());
    }

    #[test]
    fn blocked_forward_leans_over() {
        let out = resolve_body(
            &MotorCommand::torso_pitch(-1.3),
            true,
            &cfg(0.5, 2.0, 0.6, 1.0),
        )
        .unwrap();
        assert_eq!(out.lean, -1.3);
        assert_eq!(out.forward_velocity, 0.0);
        let capped = resolve_body(
            &MotorCommand::torso_pitch(-3.0),
            true,
            &cfg(0.5, 2.0, 0.6, 1.0),
        )
        .unwrap();
        assert_eq!(capped.lean, -2.0);
    }

    #[test]
    fn excess_pitch_walks() {
        let out = resolve_body(
            &MotorCommand::torso_pitch(-3.8),
            false,
            &cfg(0.5, 2.5, 0.6, 1.0),
        )
        .unwrap();
        assert_eq!(out.lean, -0.5);
        // 0.6 * (3.8 - 0.5)
        assert!((out.forward_velocity - 1.98).abs() < 1e-12);
    }

    #[test]
    fn backward_pitch_retreats_even_when_blocked() {
        let c = cfg(0.5, 2.5, 0.6, 1.0);
        let free = resolve_body(&MotorCommand::torso_pitch(1.5), false, &c).unwrap();
        let blocked = resolve_body(&MotorCommand::torso_pitch(1.5), true, &c).unwrap();
        assert_eq!(free, blocked);
        assert_eq!(free.lean, 0.5);
        assert!((free.forward_velocity - -0.6).abs() < 1e-12);
    }

    #[test]
    fn wrong_channel() {
        let cmd = MotorCommand {
            channel: "gaze",
            value: 1.0,
        };
        assert!(matches!(
            resolve_body(&cmd, false, &BodyConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn distance_integration() {
        let c = cfg(0.5, 2.5, 0.6, 1.0);
        let still = BodyState::default();
        assert_eq!(integrate_distance(2.0, &still, 0.5, &c), 2.5);
        assert_eq!(integrate_distance(4.0, &still, 0.0, &c), 4.0);
        let walking = BodyState {
            lean: -0.5,
            forward_velocity: 1.98,
        };
        assert_eq!(integrate_distance(1.2, &walking, 0.0, &c), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(BodyConfig::default().validate().is_ok());
        assert!(cfg(0.0, 1.0, 0.6, 1.0).validate().is_err());
        assert!(cfg(0.5, 0.4, 0.6, 1.0).validate().is_err());
        assert!(cfg(0.5, 1.0, -0.1, 1.0).validate().is_err());
        assert!(cfg(0.5, 1.0, 0.6, -1.0).validate().is_err());
    }

    fn any_cfg() -> impl Strategy<Value = BodyConfig> {
        (0.01..2.0f64, 0.0..3.0f64, 0.0..2.0f64, 0.0..2.0f64)
            .prop_map(|(lm, extra, wg, md)| cfg(lm, lm + extra, wg, md))
    }

    proptest! {
        #[test]
        fn state_respects_limits(c in -20.0..20.0f64, blocked: bool, cfg in any_cfg()) {
            let out = resolve_body(&MotorCommand::torso_pitch(c), blocked, &cfg).unwrap();
            prop_assert!(out.lean.abs() <= cfg.lean_over_max);
            if !blocked {
                prop_assert!(out.lean.abs() <= cfg.lean_max);
            }
            if blocked {
                prop_assert!(out.forward_velocity <= 0.0);
            }
        }

        #[test]
        fn velocity_vanishes_at_threshold(cfg in any_cfg(), eps in 0.0..1e-6f64) {
            let out = resolve_body(&MotorCommand::torso_pitch(-(cfg.lean_max + eps)), false, &cfg).unwrap();
            prop_assert!(out.forward_velocity.abs() <= cfg.walk_gain * eps + 1e-12);
        }

        #[test]
        fn distance_floor(d in 0.0..10.0f64, v in -5.0..5.0f64, m in -5.0..5.0f64, cfg in any_cfg()) {
            let body = BodyState { lean: 0.0, forward_velocity: v };
            prop_assert!(integrate_distance(d, &body, m, &cfg) >= cfg.min_distance);
        }
    }
}
