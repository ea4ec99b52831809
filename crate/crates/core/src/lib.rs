//! Virtual reflexes: concurrent sensory-motor loops that drive a virtual
//! character's body directly, modulated by a PAD emotion state and by
//! cognitive biases.
//!
//! The crate ships one fully specified reflex, torso pitch, which keeps the
//! character at its preferred social distance from a trainee, together with
//! the surrounding machinery: emotion dynamics, a rule-based cognitive layer,
//! a body-integrity model, a deterministic tick engine with replay and
//! closed-loop modes, a scenario file format and a live session protocol.

pub mod body;
pub mod cognition;
pub mod emotion;
pub mod engine;
pub mod error;
pub mod reflex;
pub mod scenario;
pub mod session;
pub mod trace;
pub mod types;

pub use body::{integrate_distance, resolve_body, BodyConfig, BodyState};
pub use cognition::{plan_step, CognitiveRule, Condition, PhaseMatch};
pub use emotion::{aggregate_deviations, decay_toward, EmotionConfig};
pub use engine::{run, tick, Engine, EngineConfig, LiveInput, TickInput, WorldState};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use reflex::{
    apply_bias, compute_inertia, compute_sd_target, evaluate_node, torso_pitch_command, NodeBias,
    NodeOutput, ReflexNodeState, TorsoTerms,
};
pub use scenario::{
    parse_scenario, serialize_scenario, EventAction, EventKind, Mode, Scenario, TimedEvent,
};
pub use trace::{compare_csv, Mismatch, Trace, TraceRow};
pub use types::{
    clamp_pad, MotorCommand, PadState, Personality, Posture, SensorSnapshot, TorsoReflexParams,
    TORSO_PITCH,
};
