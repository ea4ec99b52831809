//! Deterministic tick scheduler.
//!
//! Each tick runs the same fixed pipeline:
//!
//! 1. apply this tick's inputs and build an immutable [`SensorSnapshot`]
//! 2. cognition plans biases from the *previous* tick's node deviations
//! 3. biases are applied to the nodes
//! 4. every node is evaluated against the snapshot and current PAD
//! 5. the body resolves the torso command into lean and walking
//! 6. distance is integrated (closed loop only)
//! 7. emotion aggregates this tick's deviations (closed loop only)
//! 8. a [`TraceRow`] is emitted
//!
//! In replay mode distance and PAD come from scripted events, so steps 5-7
//! never feed back and the trace is the bare reflex arithmetic.

use std::collections::BTreeMap;

use crate::body::{integrate_distance, resolve_body, BodyConfig, BodyState};
use crate::cognition::{plan_step, CognitiveRule};
use crate::emotion::{aggregate_deviations, EmotionConfig};
use crate::error::{Error, Result};
use crate::reflex::{apply_bias, evaluate_node, NodeOutput, ReflexNodeState};
use crate::scenario::{EventAction, Mode, Scenario, TimedEvent, DEFAULT_PHASE};
use crate::trace::{Trace, TraceRow};
use crate::types::{PadState, Personality, SensorSnapshot, TORSO_PITCH};

/// Configuration that stays fixed for the lifetime of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub emotion: EmotionConfig,
    pub body: BodyConfig,
    pub rules: Vec<CognitiveRule>,
}

impl EngineConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            emotion: s.emotion,
            body: s.body,
            rules: s.rules.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    pub pad: PadState,
    pub personality: Personality,
    /// Evaluated and merged in this order every tick.
    pub nodes: Vec<ReflexNodeState>,
    pub body: BodyState,
    pub distance: f64,
    pub phase: String,
    pub mode: Mode,
    pub calmness: f64,
    /// Scripted obstruction flag.
    pub blocked: bool,
    /// Trainee position on the approach axis; the character starts at 0.
    pub trainee_position: f64,
}

impl WorldState {
    pub fn initial(s: &Scenario) -> Self {
        let distance = match s.mode {
            Mode::ClosedLoop => s.vc.initial_distance,
            Mode::Replay => 0.0,
        };
        Self {
            tick: 0,
            pad: s.vc.initial_pad,
            personality: s.vc.personality,
            nodes: vec![ReflexNodeState::torso(s.vc.torso)],
            body: BodyState::default(),
            distance,
            phase: DEFAULT_PHASE.to_string(),
            mode: s.mode,
            calmness: 0.0,
            blocked: false,
            trainee_position: distance,
        }
    }
}

/// Everything fed into one tick from outside the world state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickInput {
    pub distance: Option<f64>,
    pub pad: Option<PadState>,
    pub trainee_move: f64,
    pub calmness: Option<f64>,
    pub blocked: Option<bool>,
    pub phase: Option<String>,
}

impl TickInput {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a TimedEvent>) -> Self {
        let mut input = Self::default();
        for ev in events {
            match &ev.action {
                EventAction::SetDistance(d) => input.distance = Some(*d),
                EventAction::SetPad(p) => input.pad = Some(*p),
                EventAction::TraineeMove(m) => input.trainee_move = *m,
                EventAction::SetCalmness(c) => input.calmness = Some(*c),
                EventAction::SetBlocked(b) => input.blocked = Some(*b),
                EventAction::SetPhase(p) => input.phase = Some(p.clone()),
            }
        }
        input
    }
}

fn scenario_err(tick: u64, e: Error) -> Error {
    match e {
        e @ Error::Scenario { .. } => e,
        other => Error::Scenario {
            tick,
            message: other.to_string(),
        },
    }
}

/// Advances the world by one tick. Pure: the input world is untouched.
pub fn tick(
    world: &WorldState,
    cfg: &EngineConfig,
    input: &TickInput,
) -> Result<(WorldState, TraceRow)> {
    let t = world.tick;
    step(world, cfg, input).map_err(|e| scenario_err(t, e))
}

fn step(
    world: &WorldState,
    cfg: &EngineConfig,
    input: &TickInput,
) -> Result<(WorldState, TraceRow)> {
    let mut w = world.clone();
    let closed = w.mode == Mode::ClosedLoop;

    if let Some(c) = input.calmness {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::domain("calmness", c, "[0, 1]"));
        }
        w.calmness = c;
    }
    if let Some(b) = input.blocked {
        w.blocked = b;
    }
    if let Some(p) = &input.phase {
        w.phase = p.clone();
    }
    if closed {
        if input.distance.is_some() || input.pad.is_some() {
            return Err(Error::Scenario {
                tick: w.tick,
                message: "scripted distance or PAD is only allowed in replay mode".into(),
            });
        }
    } else {
        w.distance = input.distance.ok_or_else(|| Error::Scenario {
            tick: w.tick,
            message: "replay tick has no scripted distance".into(),
        })?;
        w.trainee_position = w.distance;
        if let Some(p) = input.pad {
            p.validate()?;
            w.pad = p;
        }
    }

    // Closed loop: standing at the distance floor means the legs are stopped.
    let blocked = w.blocked || (closed && w.distance <= cfg.body.min_distance);
    let snapshot = SensorSnapshot {
        distance: w.distance,
        trainee_calmness: w.calmness,
        trainee_displacement: input.trainee_move,
        blocked,
    };
    snapshot.validate()?;

    let previous: BTreeMap<String, f64> = w
        .nodes
        .iter()
        .map(|n| (n.node_id.clone(), n.last_deviation))
        .collect();
    let biases = plan_step(&cfg.rules, w.tick, &previous, &w.pad, &w.phase);

    let mut outputs: Vec<NodeOutput> = Vec::with_capacity(w.nodes.len());
    for node in &mut w.nodes {
        let bias = biases.get(&node.node_id).copied().unwrap_or_default();
        let biased = apply_bias(node, bias)?;
        let (next, out) = evaluate_node(&biased, &snapshot, &w.pad)?;
        *node = next;
        outputs.push(out);
    }
    let torso = w
        .nodes
        .iter()
        .position(|n| n.node_id == TORSO_PITCH)
        .map(|i| outputs[i])
        .ok_or_else(|| Error::Config("no torso_pitch node".into()))?;

    let body = resolve_body(&torso.command, blocked, &cfg.body)?;
    let pad_used = w.pad;
    let distance_used = w.distance;

    if closed {
        w.distance = integrate_distance(w.distance, &body, input.trainee_move, &cfg.body);
        w.trainee_position += input.trainee_move;
        let deviations: Vec<f64> = outputs.iter().map(|o| o.deviation).collect();
        w.pad = aggregate_deviations(
            &w.pad,
            &deviations,
            w.calmness,
            &cfg.emotion,
            &w.personality,
        )?;
    }
    w.body = body;

    let row = TraceRow {
        tick: w.tick,
        distance: distance_used,
        pleasure: pad_used.pleasure,
        arousal: pad_used.arousal,
        dominance: pad_used.dominance,
        sd_target: torso.terms.sd_target,
        c_sd: torso.terms.inertia,
        torso_pitch_command: torso.command.value,
        deviation: torso.deviation,
        lean: body.lean,
        forward_velocity: body.forward_velocity,
        blocked,
        phase: w.phase.clone(),
    };
    w.tick += 1;
    Ok((w, row))
}

/// Live trainee input for one tick; absent fields keep scripted values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiveInput {
    pub trainee_move: Option<f64>,
    pub calmness: Option<f64>,
}

/// A scenario bound to a running world.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    initial: WorldState,
    world: WorldState,
    events: BTreeMap<u64, Vec<TimedEvent>>,
    duration: u64,
}

impl Engine {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut events: BTreeMap<u64, Vec<TimedEvent>> = BTreeMap::new();
        for ev in &scenario.events {
            events.entry(ev.tick).or_default().push(ev.clone());
        }
        let initial = WorldState::initial(scenario);
        Ok(Self {
            cfg: EngineConfig::from_scenario(scenario),
            world: initial.clone(),
            initial,
            events,
            duration: scenario.duration,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn is_finished(&self) -> bool {
        self.world.tick >= self.duration
    }

    pub fn reset(&mut self) {
        self.world = self.initial.clone();
    }

    /// Scripted input for the current tick.
    pub fn scripted_input(&self) -> TickInput {
        match self.events.get(&self.world.tick) {
            Some(evs) => TickInput::from_events(evs),
            None => TickInput::default(),
        }
    }

    pub fn step(&mut self, live: Option<LiveInput>) -> Result<TraceRow> {
        let mut input = self.scripted_input();
        if let Some(live) = live {
            if let Some(m) = live.trainee_move {
                input.trainee_move = m;
            }
            if let Some(c) = live.calmness {
                input.calmness = Some(c);
            }
        }
        let (next, row) = tick(&self.world, &self.cfg, &input)?;
        self.world = next;
        Ok(row)
    }
}

/// Runs a scenario for its full duration.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    let mut engine = Engine::new(scenario)?;
    let mut rows = Vec::with_capacity(scenario.duration as usize);
    while !engine.is_finished() {
        rows.push(engine.step(None)?);
    }
    Ok(Trace { rows })
}
