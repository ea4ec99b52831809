//! Reflex nodes: small sensory-motor controllers that turn a deviation from
//! their baseline straight into a motor command.
//!
//! The torso-pitch node keeps the character at its preferred social
//! distance:
//!
//! ```text
//! pitch     = inertia * (sd_target - distance)
//! sd_target = (1 - dominance) * sd_default + cultural_distance
//! inertia   = (arousal + 1) / 2
//! ```
//!
//! Emotion enters through the PAD state handed to the node; cognition
//! enters through a [`NodeBias`] that is applied before the equations run.

use crate::error::{Error, Result};
use crate::types::{MotorCommand, PadState, SensorSnapshot, TorsoReflexParams, TORSO_PITCH};

/// Social-distance inertia factor in `[0, 1]`, derived from arousal.
pub fn compute_inertia(arousal: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&arousal) {
        return Err(Error::domain("arousal", arousal, "[-1, 1]"));
    }
    Ok((arousal + 1.0) / 2.0)
}

/// Preferred social distance in meters. Higher dominance means closer.
pub fn compute_sd_target(dominance: f64, params: &TorsoReflexParams) -> Result<f64> {
    if !(-1.0..=1.0).contains(&dominance) {
        return Err(Error::domain("dominance", dominance, "[-1, 1]"));
    }
    params.validate()?;
    Ok((1.0 - dominance) * params.sd_default + params.cultural_distance)
}

/// Intermediate quantities of one torso-pitch evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsoTerms {
    pub sd_target: f64,
    pub inertia: f64,
}

impl TorsoTerms {
    pub fn compute(pad: &PadState, params: &TorsoReflexParams) -> Result<Self> {
        Ok(Self {
            sd_target: compute_sd_target(pad.dominance, params)?,
            inertia: compute_inertia(pad.arousal)?,
        })
    }

    pub fn deviation(&self, distance: f64) -> f64 {
        self.sd_target - distance
    }

    pub fn pitch(&self, distance: f64) -> f64 {
        self.inertia * self.deviation(distance)
    }
}

pub fn torso_pitch_command(
    snapshot: &SensorSnapshot,
    pad: &PadState,
    params: &TorsoReflexParams,
) -> Result<MotorCommand> {
    snapshot.validate()?;
    pad.validate()?;
    let terms = TorsoTerms::compute(pad, params)?;
    Ok(MotorCommand::torso_pitch(terms.pitch(snapshot.distance)))
}

/// Cognitive modulation of a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeBias {
    pub sd_default_override: Option<f64>,
    /// Added to the node's view of PAD, then clamped.
    pub pad_offset: Option<PadState>,
    /// Multiplies the node's command.
    pub gain: f64,
}

impl Default for NodeBias {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl NodeBias {
    pub const NEUTRAL: NodeBias = NodeBias {
        sd_default_override: None,
        pad_offset: None,
        gain: 1.0,
    };

    pub fn with_gain(gain: f64) -> Self {
        Self {
            gain,
            ..Self::NEUTRAL
        }
    }

    pub fn is_neutral(&self) -> bool {
        *self == Self::NEUTRAL
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain.is_finite() || self.gain < 0.0 {
            return Err(Error::domain("gain", self.gain, "[0, inf)"));
        }
        if let Some(sd) = self.sd_default_override {
            if !sd.is_finite() || sd <= 0.0 {
                return Err(Error::domain("sd_default", sd, "(0, inf)"));
            }
        }
        if let Some(offset) = &self.pad_offset {
            offset.validate()?;
        }
        Ok(())
    }

    /// Parameters and PAD as the biased node sees them.
    pub fn effective(
        &self,
        params: &TorsoReflexParams,
        pad: &PadState,
    ) -> Result<(TorsoReflexParams, PadState)> {
        let mut params = *params;
        if let Some(sd) = self.sd_default_override {
            params.sd_default = sd;
        }
        let pad = match &self.pad_offset {
            Some(offset) => pad.offset(offset)?,
            None => *pad,
        };
        Ok((params, pad))
    }
}

/// Result of evaluating one node for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeOutput {
    pub command: MotorCommand,
    /// Signed drive error before inertia scaling (sd_target - distance for
    /// the torso node).
    pub deviation: f64,
    pub terms: TorsoTerms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflexNodeState {
    pub node_id: String,
    pub params: TorsoReflexParams,
    pub last_deviation: f64,
    pub last_command: MotorCommand,
    pub bias: NodeBias,
}

impl ReflexNodeState {
    pub fn torso(params: TorsoReflexParams) -> Self {
        Self::new(TORSO_PITCH, params)
    }

    pub fn new(node_id: impl Into<String>, params: TorsoReflexParams) -> Self {
        Self {
            node_id: node_id.into(),
            params,
            last_deviation: 0.0,
            last_command: MotorCommand::torso_pitch(0.0),
            bias: NodeBias::NEUTRAL,
        }
    }

    /// Computes this node's output without touching its state.
    pub fn output(&self, snapshot: &SensorSnapshot, pad: &PadState) -> Result<NodeOutput> {
        match self.node_id.as_str() {
            TORSO_PITCH => {
                snapshot.validate()?;
                pad.validate()?;
                let (params, pad) = self.bias.effective(&self.params, pad)?;
                let terms = TorsoTerms::compute(&pad, &params)?;
                let value = self.bias.gain * terms.pitch(snapshot.distance);
                Ok(NodeOutput {
                    command: MotorCommand::torso_pitch(value),
                    deviation: terms.deviation(snapshot.distance),
                    terms,
                })
            }
            other => Err(Error::Config(format!("unknown reflex node kind '{other}'"))),
        }
    }
}

/// Evaluates a node and returns it with the new command and deviation
/// recorded. Identical inputs always give identical results.
pub fn evaluate_node(
    node: &ReflexNodeState,
    snapshot: &SensorSnapshot,
    pad: &PadState,
) -> Result<(ReflexNodeState, NodeOutput)> {
    let out = node.output(snapshot, pad)?;
    let mut next = node.clone();
    next.last_command = out.command;
    next.last_deviation = out.deviation;
    Ok((next, out))
}

/// Replaces the node's bias. Biases never accumulate.
pub fn apply_bias(node: &ReflexNodeState, bias: NodeBias) -> Result<ReflexNodeState> {
    bias.validate()?;
    Ok(ReflexNodeState {
        bias,
        ..node.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn params(sd: f64, cd: f64) -> TorsoReflexParams {
        TorsoReflexParams::new(sd, cd).unwrap()
    }

    fn pad(p: f64, a: f64, d: f64) -> PadState {
        PadState::new(p, a, d).unwrap()
    }

    fn command(d: f64, pad: PadState, p: TorsoReflexParams) -> f64 {
        torso_pitch_command(&SensorSnapshot::at_distance(d), &pad, &p)
            .unwrap()
            .value
    }

    #[test]
    fn inertia_values() {
        assert_eq!(compute_inertia(1.0).unwrap(), 1.0);
        assert_eq!(compute_inertia(0.0).unwrap(), 0.5);
        assert_eq!(compute_inertia(-1.0).unwrap(), 0.0);
        assert!(compute_inertia(1.01).is_err());
        assert!(compute_inertia(f64::NAN).is_err());
    }

    #[test]
    fn sd_target_values() {
        assert!((compute_sd_target(1.0, &params(1.0, 0.2)).unwrap() - 0.2).abs() < TOL);
        assert!((compute_sd_target(-0.5, &params(1.0, 0.2)).unwrap() - 1.7).abs() < TOL);
        assert_eq!(compute_sd_target(0.0, &params(1.0, 0.0)).unwrap(), 1.0);
        assert!(compute_sd_target(-1.5, &params(1.0, 0.0)).is_err());
        let bad = TorsoReflexParams {
            sd_default: -1.0,
            cultural_distance: 0.0,
        };
        assert!(compute_sd_target(0.0, &bad).is_err());
    }

    #[test]
    fn torso_command_reproduces_worked_scenario() {
        let aroused = pad(-1.0, 1.0, 1.0);
        let calm = pad(0.0, 0.0, -0.5);
        let p = params(1.0, 0.2);
        assert!((command(4.0, aroused, p) - -3.8).abs() < TOL);
        assert!((command(2.5, aroused, p) - -2.3).abs() < TOL);
        assert!((command(1.7, calm, p) - 0.0).abs() < TOL);
        let cmd = torso_pitch_command(&SensorSnapshot::at_distance(4.0), &aroused, &p).unwrap();
        assert_eq!(cmd.channel, TORSO_PITCH);
    }

    #[test]
    fn evaluate_records_command_and_deviation() {
        let node = ReflexNodeState::torso(params(1.0, 0.2));
        let (next, out) = evaluate_node(
            &node,
            &SensorSnapshot::at_distance(4.0),
            &pad(-1.0, 1.0, 1.0),
        )
        .unwrap();
        assert!((out.command.value - -3.8).abs() < TOL);
        assert!((out.deviation - -3.8).abs() < TOL);
        assert_eq!(next.last_command, out.command);
        assert_eq!(next.last_deviation, out.deviation);
    }

    #[test]
    fn zero_gain_silences_node() {
        let node = apply_bias(
            &ReflexNodeState::torso(params(1.0, 0.2)),
            NodeBias::with_gain(0.0),
        )
        .unwrap();
        for d in [0.0, 1.0, 7.5] {
            let (_, out) =
                evaluate_node(&node, &SensorSnapshot::at_distance(d), &pad(0.0, 1.0, 1.0)).unwrap();
            assert_eq!(out.command.value, 0.0);
        }
    }

    #[test]
    fn sd_default_override_replaces_parameter() {
        let bias = NodeBias {
            sd_default_override: Some(2.0),
            ..NodeBias::NEUTRAL
        };
        let node = apply_bias(&ReflexNodeState::torso(params(1.0, 0.2)), bias).unwrap();
        let (_, out) = evaluate_node(
            &node,
            &SensorSnapshot::at_distance(2.2),
            &pad(-1.0, 1.0, 1.0),
        )
        .unwrap();
        // 1 * ((1 - 1) * 2 + 0.2 - 2.2)
        assert!((out.command.value - -2.0).abs() < TOL);
    }

    #[test]
    fn neutral_bias_is_identity() {
        let node = ReflexNodeState::torso(params(1.0, 0.2));
        let biased = apply_bias(&node, NodeBias::default()).unwrap();
        assert_eq!(biased, node);
        let snap = SensorSnapshot::at_distance(3.0);
        let p = pad(0.1, 0.4, 0.3);
        assert_eq!(
            node.output(&snap, &p).unwrap(),
            biased.output(&snap, &p).unwrap()
        );
    }

    #[test]
    fn half_gain_halves_command() {
        let node = ReflexNodeState::torso(params(1.0, 0.2));
        let half = apply_bias(&node, NodeBias::with_gain(0.5)).unwrap();
        let snap = SensorSnapshot::at_distance(3.3);
        let p = pad(0.0, 0.6, 0.2);
        let full = node.output(&snap, &p).unwrap().command.value;
        assert_eq!(half.output(&snap, &p).unwrap().command.value, 0.5 * full);
    }

    #[test]
    fn pad_offset_shifts_dominance() {
        let bias = NodeBias {
            pad_offset: Some(pad(0.0, 0.0, -0.5)),
            ..NodeBias::NEUTRAL
        };
        let node = apply_bias(&ReflexNodeState::torso(params(1.0, 0.2)), bias).unwrap();
        let out = node
            .output(&SensorSnapshot::at_distance(1.0), &pad(-1.0, 1.0, 1.0))
            .unwrap();
        // effective dominance 0.5: (1 - 0.5) * 1 + 0.2
        assert!((out.terms.sd_target - 0.7).abs() < TOL);
    }

    #[test]
    fn biases_replace_rather_than_stack() {
        let node = ReflexNodeState::torso(params(1.0, 0.2));
        let once = apply_bias(&node, NodeBias::with_gain(0.5)).unwrap();
        let twice = apply_bias(&once, NodeBias::with_gain(0.5)).unwrap();
        assert_eq!(twice.bias.gain, 0.5);
    }

    #[test]
    fn invalid_bias_is_rejected() {
        let node = ReflexNodeState::torso(params(1.0, 0.2));
        assert!(apply_bias(&node, NodeBias::with_gain(-0.1)).is_err());
        let bad_sd = NodeBias {
            sd_default_override: Some(0.0),
            ..NodeBias::NEUTRAL
        };
        assert!(apply_bias(&node, bad_sd).is_err());
    }

    #[test]
    fn unknown_node_kind_is_a_config_error() {
        let node = ReflexNodeState::new("gaze", params(1.0, 0.2));
        let err = node
            .output(&SensorSnapshot::at_distance(1.0), &PadState::NEUTRAL)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    fn unit() -> impl Strategy<Value = f64> {
        -1.0..=1.0f64
    }

    proptest! {
        #[test]
        fn equilibrium_gives_zero_pitch(a in unit(), d in unit(), sd in 0.1..5.0f64, cd in 0.0..2.0f64) {
            let p = params(sd, cd);
            let mood = pad(0.0, a, d);
            let target = compute_sd_target(d, &p).unwrap();
            prop_assert!(command(target, mood, p).abs() <= 1e-12);
        }

        #[test]
        fn pitch_decreases_with_distance(a in -0.99..=1.0f64, d in unit(), x in 0.0..10.0f64, step in 0.01..5.0f64) {
            let p = params(1.0, 0.2);
            let mood = pad(0.0, a, d);
            prop_assert!(command(x + step, mood, p) < command(x, mood, p));
        }

        #[test]
        fn zero_arousal_freezes(d in unit(), x in 0.0..20.0f64) {
            prop_assert_eq!(command(x, pad(0.0, -1.0, d), params(1.0, 0.2)), 0.0);
        }

        #[test]
        fn gain_is_linear(g in 0.0..10.0f64, a in unit(), x in 0.0..10.0f64) {
            let node = ReflexNodeState::torso(params(1.0, 0.2));
            let scaled = apply_bias(&node, NodeBias::with_gain(g)).unwrap();
            let snap = SensorSnapshot::at_distance(x);
            let mood = pad(0.0, a, 0.3);
            let base = node.output(&snap, &mood).unwrap().command.value;
            prop_assert_eq!(scaled.output(&snap, &mood).unwrap().command.value, g * base);
        }

        #[test]
        fn higher_dominance_means_closer_target(lo in unit(), hi in unit(), sd in 0.1..5.0f64) {
            prop_assume!(lo < hi);
            let p = params(sd, 0.2);
            prop_assert!(compute_sd_target(hi, &p).unwrap() < compute_sd_target(lo, &p).unwrap());
        }
    }
}
