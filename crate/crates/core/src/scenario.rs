//! Scenario files: a line-oriented keyword format with indented blocks.
//!
//! ```text
//! # comments run to end of line
//! scenario counter_confrontation
//! mode replay
//! duration 7
//!
//! vc:
//!   personality 0 0 -0.5
//!   initial_pad -1 1 1
//!   sd_default 1
//!   cultural_distance 0.2
//! events:
//!   at 0 set_distance 4
//! rules:
//!   when phase=calm_down tick>=5 set torso_pitch gain=0.5
//! ```
//!
//! Parsing either yields a fully validated [`Scenario`] or a [`ParseError`]
//! pointing at the offending line; there are no partial results.
//! [`serialize_scenario`] writes the canonical form, omitting defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::body::BodyConfig;
use crate::cognition::{CognitiveRule, Condition, PhaseMatch};
use crate::emotion::EmotionConfig;
use crate::error::{Error, ParseError, Result};
use crate::reflex::NodeBias;
use crate::types::{PadState, Personality, TorsoReflexParams, TORSO_PITCH};

pub const DEFAULT_PHASE: &str = "start";
pub const DEFAULT_INITIAL_DISTANCE: f64 = 4.0;

/// Node ids a scenario may refer to.
pub const KNOWN_NODES: [&str; 1] = [TORSO_PITCH];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Distances and PAD are scripted; body and emotion do not feed back.
    Replay,
    ClosedLoop,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Replay => "replay",
            Mode::ClosedLoop => "closed_loop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    SetDistance,
    SetPad,
    TraineeMove,
    SetCalmness,
    SetBlocked,
    SetPhase,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::SetDistance,
        EventKind::SetPad,
        EventKind::TraineeMove,
        EventKind::SetCalmness,
        EventKind::SetBlocked,
        EventKind::SetPhase,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::SetDistance => "set_distance",
            EventKind::SetPad => "set_pad",
            EventKind::TraineeMove => "trainee_move",
            EventKind::SetCalmness => "set_calmness",
            EventKind::SetBlocked => "set_blocked",
            EventKind::SetPhase => "set_phase",
        }
    }

    pub fn replay_only(&self) -> bool {
        matches!(self, EventKind::SetDistance | EventKind::SetPad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventAction {
    SetDistance(f64),
    SetPad(PadState),
    /// Trainee displacement for this tick, positive away from the character.
    TraineeMove(f64),
    SetCalmness(f64),
    SetBlocked(bool),
    SetPhase(String),
}

impl EventAction {
    pub fn kind(&self) -> EventKind {
        match self {
            EventAction::SetDistance(_) => EventKind::SetDistance,
            EventAction::SetPad(_) => EventKind::SetPad,
            EventAction::TraineeMove(_) => EventKind::TraineeMove,
            EventAction::SetCalmness(_) => EventKind::SetCalmness,
            EventAction::SetBlocked(_) => EventKind::SetBlocked,
            EventAction::SetPhase(_) => EventKind::SetPhase,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub tick: u64,
    pub action: EventAction,
}

impl TimedEvent {
    pub fn new(tick: u64, action: EventAction) -> Self {
        Self { tick, action }
    }

    pub fn kind(&self) -> EventKind {
        self.action.kind()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcConfig {
    pub personality: Personality,
    pub initial_pad: PadState,
    pub torso: TorsoReflexParams,
    /// Starting distance to the trainee in closed-loop mode.
    pub initial_distance: f64,
}

impl Default for VcConfig {
    fn default() -> Self {
        Self {
            personality: Personality::default(),
            initial_pad: PadState::NEUTRAL,
            torso: TorsoReflexParams::default(),
            initial_distance: DEFAULT_INITIAL_DISTANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub duration: u64,
    pub vc: VcConfig,
    pub emotion: EmotionConfig,
    pub body: BodyConfig,
    pub events: Vec<TimedEvent>,
    pub rules: Vec<CognitiveRule>,
}

/// Where a validation problem lives, so the parser can map it to a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    Key(&'static str),
    Event(usize),
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub item: Item,
    pub message: String,
}

impl Scenario {
    pub fn new(name: impl Into<String>, mode: Mode, duration: u64) -> Self {
        Self {
            name: name.into(),
            mode,
            duration,
            vc: VcConfig::default(),
            emotion: EmotionConfig::default(),
            body: BodyConfig::default(),
            events: Vec::new(),
            rules: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Config(v.message)),
        }
    }

    /// Every problem with this scenario, in no particular order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |item: Item, r: Result<()>| {
            if let Err(e) = r {
                let message = match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                };
                out.push(Violation { item, message });
            }
        };

        check(Item::Key("scenario"), check_name(&self.name));
        check(
            Item::Key("vc.personality"),
            self.vc.personality.pad_default.validate(),
        );
        check(Item::Key("vc.initial_pad"), self.vc.initial_pad.validate());
        let torso = self.vc.torso;
        check(
            Item::Key("vc.sd_default"),
            TorsoReflexParams::new(torso.sd_default, 0.0).map(drop),
        );
        check(
            Item::Key("vc.cultural_distance"),
            TorsoReflexParams::new(1.0, torso.cultural_distance).map(drop),
        );
        check(
            Item::Key("vc.initial_distance"),
            non_negative("initial_distance", self.vc.initial_distance),
        );

        let e = self.emotion;
        let base = EmotionConfig::default();
        check(
            Item::Key("emotion.decay_rate"),
            EmotionConfig {
                decay_rate: e.decay_rate,
                ..base
            }
            .validate(),
        );
        check(
            Item::Key("emotion.arousal_gain"),
            EmotionConfig {
                arousal_gain: e.arousal_gain,
                ..base
            }
            .validate(),
        );
        check(
            Item::Key("emotion.dominance_gain"),
            EmotionConfig {
                dominance_gain: e.dominance_gain,
                ..base
            }
            .validate(),
        );
        check(
            Item::Key("emotion.deviation_scale"),
            EmotionConfig {
                deviation_scale: e.deviation_scale,
                ..base
            }
            .validate(),
        );

        let b = self.body;
        if !b.lean_max.is_finite() || b.lean_max <= 0.0 {
            check(
                Item::Key("body.lean_max"),
                Err(Error::domain("lean_max", b.lean_max, "(0, inf)")),
            );
        } else if !b.lean_over_max.is_finite() || b.lean_over_max < b.lean_max {
            check(
                Item::Key("body.lean_over_max"),
                Err(Error::domain(
                    "lean_over_max",
                    b.lean_over_max,
                    "[lean_max, inf)",
                )),
            );
        }
        check(
            Item::Key("body.walk_gain"),
            non_negative("walk_gain", b.walk_gain),
        );
        check(
            Item::Key("body.min_distance"),
            non_negative("min_distance", b.min_distance),
        );

        let mut seen = BTreeSet::new();
        for (i, ev) in self.events.iter().enumerate() {
            check(Item::Event(i), self.check_event(ev));
            if !seen.insert((ev.tick, ev.kind())) {
                check(
                    Item::Event(i),
                    Err(Error::Config(format!(
                        "duplicate {} event at tick {}",
                        ev.kind().as_str(),
                        ev.tick
                    ))),
                );
            }
        }

        for (i, rule) in self.rules.iter().enumerate() {
            check(Item::Rule(i), check_rule(rule));
        }
        out
    }

    fn check_event(&self, ev: &TimedEvent) -> Result<()> {
        if ev.tick >= self.duration {
            return Err(Error::Config(format!(
                "event at tick {} is past the scenario duration {}",
                ev.tick, self.duration
            )));
        }
        if ev.kind().replay_only() && self.mode != Mode::Replay {
            return Err(Error::Config(format!(
                "{} is only allowed in replay mode",
                ev.kind().as_str()
            )));
        }
        match &ev.action {
            EventAction::SetDistance(d) => non_negative("distance", *d),
            EventAction::SetPad(p) => p.validate(),
            EventAction::TraineeMove(m) => finite("trainee_move", *m),
            EventAction::SetCalmness(c) => {
                if (0.0..=1.0).contains(c) {
                    Ok(())
                } else {
                    Err(Error::domain("calmness", *c, "[0, 1]"))
                }
            }
            EventAction::SetBlocked(_) => Ok(()),
            EventAction::SetPhase(p) => check_ident("phase", p),
        }
    }

    /// Sorts events by tick, then kind. Rule order is significant and kept.
    pub fn canonicalize(&mut self) {
        self.events.sort_by_key(|e| (e.tick, e.kind()));
    }

    /// Events grouped by tick.
    pub fn events_by_tick(&self) -> BTreeMap<u64, Vec<&TimedEvent>> {
        let mut map: BTreeMap<u64, Vec<&TimedEvent>> = BTreeMap::new();
        for ev in &self.events {
            map.entry(ev.tick).or_default().push(ev);
        }
        map
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(field, v, "a finite number"))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(field, v, "[0, inf)"))
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.trim() != name || name.contains(['#', '\n', '\r']) {
        return Err(Error::Config(format!("invalid scenario name {name:?}")));
    }
    Ok(())
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn check_ident(what: &str, s: &str) -> Result<()> {
    if is_ident(s) {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid {what} identifier {s:?}")))
    }
}

fn check_rule(rule: &CognitiveRule) -> Result<()> {
    if !KNOWN_NODES.contains(&rule.target_node.as_str()) {
        return Err(Error::Config(format!(
            "rule targets unknown node '{}'",
            rule.target_node
        )));
    }
    if let PhaseMatch::Is(p) = &rule.condition.phase {
        check_ident("phase", p)?;
    }
    let c = &rule.condition;
    for (field, v) in [
        ("arousal", c.min_arousal),
        ("arousal", c.max_arousal),
        ("dominance", c.min_dominance),
        ("dominance", c.max_dominance),
        ("deviation", c.min_abs_deviation),
    ] {
        if let Some(v) = v {
            finite(field, v)?;
        }
    }
    rule.bias.validate()
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    col: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((c, b)) = start.take() {
                out.push(Token {
                    col: c + 1,
                    text: &line[b..byte],
                });
            }
        } else if start.is_none() {
            start = Some((col, byte));
        }
    }
    if let Some((c, b)) = start {
        out.push(Token {
            col: c + 1,
            text: &line[b..],
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Vc,
    Emotion,
    Body,
    Events,
    Rules,
}

impl Block {
    fn name(&self) -> &'static str {
        match self {
            Block::Vc => "vc",
            Block::Emotion => "emotion",
            Block::Body => "body",
            Block::Events => "events",
            Block::Rules => "rules",
        }
    }
}

struct Parser {
    line: usize,
    line_len: usize,
    key_lines: BTreeMap<&'static str, (usize, usize)>,
    event_lines: Vec<(usize, usize)>,
    rule_lines: Vec<(usize, usize)>,
    blocks_seen: BTreeSet<&'static str>,
    name: Option<String>,
    mode: Option<Mode>,
    duration: Option<u64>,
    scenario: Scenario,
}

type PResult<T> = std::result::Result<T, ParseError>;

impl Parser {
    fn syntax(&self, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError::syntax(self.line, col, msg)
    }

    fn end_col(&self) -> usize {
        self.line_len + 1
    }

    fn expect<'a>(&self, toks: &[Token<'a>], i: usize, what: &str) -> PResult<Token<'a>> {
        toks.get(i)
            .copied()
            .ok_or_else(|| self.syntax(self.end_col(), format!("expected {what}")))
    }

    fn number(&self, tok: Token<'_>, what: &str) -> PResult<f64> {
        match tok.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.syntax(
                tok.col,
                format!("expected {what} (a number), found '{}'", tok.text),
            )),
        }
    }

    fn tick(&self, tok: Token<'_>) -> PResult<u64> {
        tok.text.parse::<u64>().map_err(|_| {
            self.syntax(
                tok.col,
                format!("expected a non-negative integer, found '{}'", tok.text),
            )
        })
    }

    fn no_more(&self, toks: &[Token<'_>], n: usize) -> PResult<()> {
        match toks.get(n) {
            Some(t) => Err(self.syntax(t.col, format!("unexpected token '{}'", t.text))),
            None => Ok(()),
        }
    }

    fn scalar(&self, toks: &[Token<'_>], what: &str) -> PResult<f64> {
        let v = self.number(self.expect(toks, 1, what)?, what)?;
        self.no_more(toks, 2)?;
        Ok(v)
    }

    fn triple(&self, toks: &[Token<'_>], from: usize) -> PResult<PadState> {
        let mut v = [0.0; 3];
        for (k, name) in ["pleasure", "arousal", "dominance"].iter().enumerate() {
            v[k] = self.number(self.expect(toks, from + k, name)?, name)?;
        }
        Ok(PadState::from_components(v))
    }

    fn claim(&mut self, key: &'static str, col: usize) -> PResult<()> {
        if let Some((line, _)) = self.key_lines.insert(key, (self.line, col)) {
            return Err(ParseError::semantic(
                self.line,
                col,
                format!("'{key}' already set on line {line}"),
            ));
        }
        Ok(())
    }

    fn top_level(&mut self, toks: &[Token<'_>], raw: &str) -> PResult<Option<Block>> {
        let head = toks[0];
        let block = match head.text {
            "vc:" => Some(Block::Vc),
            "emotion:" => Some(Block::Emotion),
            "body:" => Some(Block::Body),
            "events:" => Some(Block::Events),
            "rules:" => Some(Block::Rules),
            _ => None,
        };
        if let Some(b) = block {
            self.no_more(toks, 1)?;
            if !self.blocks_seen.insert(b.name()) {
                return Err(ParseError::semantic(
                    self.line,
                    head.col,
                    format!("block '{}' appears twice", b.name()),
                ));
            }
            return Ok(Some(b));
        }
        match head.text {
            "scenario" => {
                self.claim("scenario", head.col)?;
                let name_tok = self.expect(toks, 1, "a scenario name")?;
                let byte = raw
                    .char_indices()
                    .nth(name_tok.col - 1)
                    .map(|(b, _)| b)
                    .unwrap_or(raw.len());
                self.name = Some(raw[byte..].trim().to_string());
            }
            "mode" => {
                self.claim("mode", head.col)?;
                let t = self.expect(toks, 1, "'replay' or 'closed_loop'")?;
                self.mode = Some(match t.text {
                    "replay" => Mode::Replay,
                    "closed_loop" => Mode::ClosedLoop,
                    other => {
                        return Err(self.syntax(
                            t.col,
                            format!("expected 'replay' or 'closed_loop', found '{other}'"),
                        ))
                    }
                });
                self.no_more(toks, 2)?;
            }
            "duration" => {
                self.claim("duration", head.col)?;
                let t = self.expect(toks, 1, "a tick count")?;
                self.duration = Some(self.tick(t)?);
                self.no_more(toks, 2)?;
            }
            other if other.ends_with(':') => {
                return Err(self.syntax(head.col, format!("unknown block '{other}'")));
            }
            other => {
                return Err(self.syntax(head.col, format!("unknown directive '{other}'")));
            }
        }
        Ok(None)
    }

    fn block_line(&mut self, block: Block, toks: &[Token<'_>]) -> PResult<()> {
        let head = toks[0];
        let col = toks.get(1).map(|t| t.col).unwrap_or(head.col);
        match (block, head.text) {
            (Block::Vc, "personality") => {
                self.claim("vc.personality", col)?;
                let p = self.triple(toks, 1)?;
                self.no_more(toks, 4)?;
                self.scenario.vc.personality = Personality { pad_default: p };
            }
            (Block::Vc, "initial_pad") => {
                self.claim("vc.initial_pad", col)?;
                self.scenario.vc.initial_pad = self.triple(toks, 1)?;
                self.no_more(toks, 4)?;
            }
            (Block::Vc, "sd_default") => {
                self.claim("vc.sd_default", col)?;
                self.scenario.vc.torso.sd_default = self.scalar(toks, "sd_default")?;
            }
            (Block::Vc, "cultural_distance") => {
                self.claim("vc.cultural_distance", col)?;
                self.scenario.vc.torso.cultural_distance =
                    self.scalar(toks, "cultural_distance")?;
            }
            (Block::Vc, "initial_distance") => {
                self.claim("vc.initial_distance", col)?;
                self.scenario.vc.initial_distance = self.scalar(toks, "initial_distance")?;
            }
            (Block::Emotion, "decay_rate") => {
                self.claim("emotion.decay_rate", col)?;
                self.scenario.emotion.decay_rate = self.scalar(toks, "decay_rate")?;
            }
            (Block::Emotion, "arousal_gain") => {
                self.claim("emotion.arousal_gain", col)?;
                self.scenario.emotion.arousal_gain = self.scalar(toks, "arousal_gain")?;
            }
            (Block::Emotion, "dominance_gain") => {
                self.claim("emotion.dominance_gain", col)?;
                self.scenario.emotion.dominance_gain = self.scalar(toks, "dominance_gain")?;
            }
            (Block::Emotion, "deviation_scale") => {
                self.claim("emotion.deviation_scale", col)?;
                self.scenario.emotion.deviation_scale = self.scalar(toks, "deviation_scale")?;
            }
            (Block::Body, "lean_max") => {
                self.claim("body.lean_max", col)?;
                self.scenario.body.lean_max = self.scalar(toks, "lean_max")?;
            }
            (Block::Body, "lean_over_max") => {
                self.claim("body.lean_over_max", col)?;
                self.scenario.body.lean_over_max = self.scalar(toks, "lean_over_max")?;
            }
            (Block::Body, "walk_gain") => {
                self.claim("body.walk_gain", col)?;
                self.scenario.body.walk_gain = self.scalar(toks, "walk_gain")?;
            }
            (Block::Body, "min_distance") => {
                self.claim("body.min_distance", col)?;
                self.scenario.body.min_distance = self.scalar(toks, "min_distance")?;
            }
            (Block::Events, "at") => {
                let ev = self.event(toks)?;
                self.event_lines.push((self.line, toks[1].col));
                self.scenario.events.push(ev);
            }
            (Block::Rules, "when") => {
                let idx = self.scenario.rules.len();
                let rule = self.rule(toks, idx)?;
                self.rule_lines.push((self.line, head.col));
                self.scenario.rules.push(rule);
            }
            (Block::Events, other) => {
                return Err(self.syntax(head.col, format!("expected 'at', found '{other}'")));
            }
            (Block::Rules, other) => {
                return Err(self.syntax(head.col, format!("expected 'when', found '{other}'")));
            }
            (b, other) => {
                return Err(self.syntax(
                    head.col,
                    format!("unknown key '{other}' in block '{}'", b.name()),
                ));
            }
        }
        Ok(())
    }

    fn event(&self, toks: &[Token<'_>]) -> PResult<TimedEvent> {
        let tick = self.tick(self.expect(toks, 1, "a tick")?)?;
        let kind_tok = self.expect(toks, 2, "an event kind")?;
        let (action, used) = match kind_tok.text {
            "set_distance" => (
                EventAction::SetDistance(
                    self.number(self.expect(toks, 3, "a distance")?, "distance")?,
                ),
                4,
            ),
            "set_pad" => (EventAction::SetPad(self.triple(toks, 3)?), 6),
            "trainee_move" => (
                EventAction::TraineeMove(
                    self.number(self.expect(toks, 3, "a displacement")?, "displacement")?,
                ),
                4,
            ),
            "set_calmness" => (
                EventAction::SetCalmness(
                    self.number(self.expect(toks, 3, "a calmness")?, "calmness")?,
                ),
                4,
            ),
            "set_blocked" => {
                let t = self.expect(toks, 3, "'true' or 'false'")?;
                let v = match t.text {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(self.syntax(
                            t.col,
                            format!("expected 'true' or 'false', found '{other}'"),
                        ))
                    }
                };
                (EventAction::SetBlocked(v), 4)
            }
            "set_phase" => {
                let t = self.expect(toks, 3, "a phase identifier")?;
                if !is_ident(t.text) {
                    return Err(
                        self.syntax(t.col, format!("invalid phase identifier '{}'", t.text))
                    );
                }
                (EventAction::SetPhase(t.text.to_string()), 4)
            }
            other => {
                let kinds: Vec<_> = EventKind::ALL.iter().map(|k| k.as_str()).collect();
                return Err(self.syntax(
                    kind_tok.col,
                    format!(
                        "unknown event kind '{other}', expected one of {}",
                        kinds.join(", ")
                    ),
                ));
            }
        };
        self.no_more(toks, used)?;
        Ok(TimedEvent { tick, action })
    }

    fn rule(&self, toks: &[Token<'_>], index: usize) -> PResult<CognitiveRule> {
        let mut condition = Condition::always();
        let first = self.expect(toks, 1, "'phase=<id>'")?;
        let Some(phase) = first.text.strip_prefix("phase=") else {
            return Err(self.syntax(
                first.col,
                format!("expected 'phase=<id>', found '{}'", first.text),
            ));
        };
        condition.phase = match phase {
            "*" => PhaseMatch::Any,
            p if is_ident(p) => PhaseMatch::Is(p.to_string()),
            p => return Err(self.syntax(first.col + 6, format!("invalid phase identifier '{p}'"))),
        };

        let mut i = 2;
        loop {
            let t = self.expect(toks, i, "a condition or 'set'")?;
            if t.text == "set" {
                break;
            }
            let (slot, rest) = if let Some(v) = t.text.strip_prefix("tick>=") {
                if condition.min_tick.is_some() {
                    return Err(self.syntax(t.col, "duplicate 'tick>=' clause"));
                }
                condition.min_tick = Some(self.tick(Token {
                    col: t.col + 6,
                    text: v,
                })?);
                i += 1;
                continue;
            } else if let Some(v) = t.text.strip_prefix("arousal>=") {
                (&mut condition.min_arousal, (v, 9))
            } else if let Some(v) = t.text.strip_prefix("arousal<=") {
                (&mut condition.max_arousal, (v, 9))
            } else if let Some(v) = t.text.strip_prefix("dominance>=") {
                (&mut condition.min_dominance, (v, 11))
            } else if let Some(v) = t.text.strip_prefix("dominance<=") {
                (&mut condition.max_dominance, (v, 11))
            } else if let Some(v) = t.text.strip_prefix("deviation>=") {
                (&mut condition.min_abs_deviation, (v, 11))
            } else {
                return Err(self.syntax(
                    t.col,
                    format!("expected a condition or 'set', found '{}'", t.text),
                ));
            };
            if slot.is_some() {
                return Err(self.syntax(t.col, format!("duplicate clause '{}'", t.text)));
            }
            let (v, skip) = rest;
            *slot = Some(self.number(
                Token {
                    col: t.col + skip,
                    text: v,
                },
                "threshold",
            )?);
            i += 1;
        }

        let node = self.expect(toks, i + 1, "a node id")?;
        let mut bias = NodeBias::NEUTRAL;
        let mut assigned = BTreeSet::new();
        let mut j = i + 2;
        while let Some(t) = toks.get(j).copied() {
            let Some((key, value)) = t.text.split_once('=') else {
                return Err(self.syntax(t.col, format!("expected 'key=value', found '{}'", t.text)));
            };
            if !assigned.insert(key) {
                return Err(self.syntax(t.col, format!("'{key}' assigned twice")));
            }
            let vtok = Token {
                col: t.col + key.len() + 1,
                text: value,
            };
            match key {
                "gain" => bias.gain = self.number(vtok, "gain")?,
                "sd_default" => bias.sd_default_override = Some(self.number(vtok, "sd_default")?),
                "pad_offset" => {
                    let p = self.number(vtok, "pleasure")?;
                    let a = self.number(self.expect(toks, j + 1, "arousal")?, "arousal")?;
                    let d = self.number(self.expect(toks, j + 2, "dominance")?, "dominance")?;
                    bias.pad_offset = Some(PadState::from_components([p, a, d]));
                    j += 2;
                }
                other => {
                    return Err(self.syntax(
                        t.col,
                        format!("unknown bias '{other}', expected gain, sd_default or pad_offset"),
                    ))
                }
            }
            j += 1;
        }
        if assigned.is_empty() {
            return Err(self.syntax(self.end_col(), "expected at least one bias assignment"));
        }
        Ok(CognitiveRule {
            rule_id: format!("r{}", index + 1),
            condition,
            bias,
            target_node: node.text.to_string(),
        })
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> std::result::Result<Scenario, ParseError> {
    let mut p = Parser {
        line: 0,
        line_len: 0,
        key_lines: BTreeMap::new(),
        event_lines: Vec::new(),
        rule_lines: Vec::new(),
        blocks_seen: BTreeSet::new(),
        name: None,
        mode: None,
        duration: None,
        scenario: Scenario::new("", Mode::Replay, 0),
    };
    let mut block: Option<Block> = None;
    let mut last_line = 1;

    for (idx, raw) in text.lines().enumerate() {
        p.line = idx + 1;
        last_line = p.line;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let content = content.trim_end();
        p.line_len = content.chars().count();
        let toks = tokenize(content);
        if toks.is_empty() {
            continue;
        }
        let indented = content.starts_with(char::is_whitespace);
        if indented {
            let Some(b) = block else {
                return Err(p.syntax(toks[0].col, "indented line outside of a block"));
            };
            p.block_line(b, &toks)?;
        } else {
            block = p.top_level(&toks, content)?;
        }
    }

    for (key, what) in [
        ("scenario", "a 'scenario <name>' line"),
        ("mode", "a 'mode' line"),
        ("duration", "a 'duration' line"),
    ] {
        if !p.key_lines.contains_key(key) {
            return Err(ParseError::syntax(last_line, 1, format!("missing {what}")));
        }
    }

    let mut scenario = p.scenario;
    scenario.name = p.name.unwrap_or_default();
    scenario.mode = p.mode.unwrap_or(Mode::Replay);
    scenario.duration = p.duration.unwrap_or(0);

    let locate = |item: Item| -> (usize, usize) {
        match item {
            Item::Key(k) => p.key_lines.get(k).copied().unwrap_or((last_line, 1)),
            Item::Event(i) => p.event_lines[i],
            Item::Rule(i) => p.rule_lines[i],
        }
    };
    let worst = scenario
        .violations()
        .into_iter()
        .map(|v| (locate(v.item), v.message))
        .min_by_key(|((line, col), _)| (*line, *col));
    if let Some(((line, col), message)) = worst {
        return Err(ParseError::semantic(line, col, message));
    }

    scenario.canonicalize();
    Ok(scenario)
}

/// Canonical text for a scenario: events sorted, default values omitted.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", s.name);
    let _ = writeln!(out, "mode {}", s.mode.as_str());
    let _ = writeln!(out, "duration {}", s.duration);

    let defaults = VcConfig::default();
    let mut vc = Vec::new();
    if s.vc.personality != defaults.personality {
        vc.push(format!(
            "personality {}",
            triple(&s.vc.personality.pad_default)
        ));
    }
    if s.vc.initial_pad != defaults.initial_pad {
        vc.push(format!("initial_pad {}", triple(&s.vc.initial_pad)));
    }
    scalar_line(
        &mut vc,
        "sd_default",
        s.vc.torso.sd_default,
        defaults.torso.sd_default,
    );
    scalar_line(
        &mut vc,
        "cultural_distance",
        s.vc.torso.cultural_distance,
        defaults.torso.cultural_distance,
    );
    scalar_line(
        &mut vc,
        "initial_distance",
        s.vc.initial_distance,
        defaults.initial_distance,
    );
    block(&mut out, "vc", &vc);

    let e = EmotionConfig::default();
    let mut em = Vec::new();
    scalar_line(&mut em, "decay_rate", s.emotion.decay_rate, e.decay_rate);
    scalar_line(
        &mut em,
        "arousal_gain",
        s.emotion.arousal_gain,
        e.arousal_gain,
    );
    scalar_line(
        &mut em,
        "dominance_gain",
        s.emotion.dominance_gain,
        e.dominance_gain,
    );
    scalar_line(
        &mut em,
        "deviation_scale",
        s.emotion.deviation_scale,
        e.deviation_scale,
    );
    block(&mut out, "emotion", &em);

    let b = BodyConfig::default();
    let mut body = Vec::new();
    scalar_line(&mut body, "lean_max", s.body.lean_max, b.lean_max);
    scalar_line(
        &mut body,
        "lean_over_max",
        s.body.lean_over_max,
        b.lean_over_max,
    );
    scalar_line(&mut body, "walk_gain", s.body.walk_gain, b.walk_gain);
    scalar_line(
        &mut body,
        "min_distance",
        s.body.min_distance,
        b.min_distance,
    );
    block(&mut out, "body", &body);

    let mut events: Vec<&TimedEvent> = s.events.iter().collect();
    events.sort_by_key(|e| (e.tick, e.kind()));
    let events: Vec<String> = events
        .into_iter()
        .map(|ev| {
            let args = match &ev.action {
                EventAction::SetDistance(v)
                | EventAction::TraineeMove(v)
                | EventAction::SetCalmness(v) => v.to_string(),
                EventAction::SetPad(p) => triple(p),
                EventAction::SetBlocked(b) => b.to_string(),
                EventAction::SetPhase(p) => p.clone(),
            };
            format!("at {} {} {}", ev.tick, ev.kind().as_str(), args)
        })
        .collect();
    block(&mut out, "events", &events);

    let rules: Vec<String> = s.rules.iter().map(rule_line).collect();
    block(&mut out, "rules", &rules);
    out
}

fn rule_line(rule: &CognitiveRule) -> String {
    let c = &rule.condition;
    let mut line = String::from("when phase=");
    match &c.phase {
        PhaseMatch::Any => line.push('*'),
        PhaseMatch::Is(p) => line.push_str(p),
    }
    if let Some(t) = c.min_tick {
        let _ = write!(line, " tick>={t}");
    }
    for (op, v) in [
        ("arousal>=", c.min_arousal),
        ("arousal<=", c.max_arousal),
        ("dominance>=", c.min_dominance),
        ("dominance<=", c.max_dominance),
        ("deviation>=", c.min_abs_deviation),
    ] {
        if let Some(v) = v {
            let _ = write!(line, " {op}{v}");
        }
    }
    let _ = write!(line, " set {}", rule.target_node);
    let b = &rule.bias;
    let mut any = false;
    if b.gain != 1.0 {
        let _ = write!(line, " gain={}", b.gain);
        any = true;
    }
    if let Some(sd) = b.sd_default_override {
        let _ = write!(line, " sd_default={sd}");
        any = true;
    }
    if let Some(p) = &b.pad_offset {
        let _ = write!(line, " pad_offset={}", triple(p));
        any = true;
    }
    if !any {
        line.push_str(" gain=1");
    }
    line
}

fn triple(p: &PadState) -> String {
    format!("{} {} {}", p.pleasure, p.arousal, p.dominance)
}

fn scalar_line(lines: &mut Vec<String>, key: &str, value: f64, default: f64) {
    if value != default {
        lines.push(format!("{key} {value}"));
    }
}

fn block(out: &mut String, name: &str, lines: &[String]) {
    if lines.is_empty() {
        return;
    }
    let _ = writeln!(out, "\n{name}:");
    for l in lines {
        let _ = writeln!(out, "  {l}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ParseErrorKind;

    fn err(text: &str) -> ParseError {
        parse_scenario(text).unwrap_err()
    }

    #[test]
    fn minimal_file() {
        let s = parse_scenario("scenario empty\nmode closed_loop\nduration 0\n").unwrap();
        assert_eq!(s.name, "empty");
        assert_eq!(s.mode, Mode::ClosedLoop);
        assert_eq!(s.duration, 0);
        assert!(s.events.is_empty());
        assert_eq!(s.vc, VcConfig::default());
    }

    #[test]
    fn names_keep_inner_spaces() {
        let s = parse_scenario("scenario front desk  # lobby\nmode replay\nduration 0").unwrap();
        assert_eq!(s.name, "front desk");
    }

    #[test]
    fn out_of_range_dominance_names_field() {
        let e = err("scenario x\nmode replay\nduration 1\nvc:\n  initial_pad 0 0 1.5\n");
        assert_eq!(e.line, 5);
        assert_eq!(e.kind, ParseErrorKind::Semantic);
        assert!(e.message.contains("dominance"), "{}", e.message);
        assert!(e.message.contains("[-1, 1]"), "{}", e.message);
    }

    #[test]
    fn replay_events_rejected_in_closed_loop() {
        let e = err("scenario x\nduration 2\nevents:\n  at 0 set_distance 2\nmode closed_loop\n");
        assert_eq!(e.line, 4);
        assert!(e.message.contains("replay"));
    }

    #[test]
    fn duplicate_event() {
        let e = err("scenario x\nmode replay\nduration 3\nevents:\n  at 1 set_phase a\n  at 1 set_phase b\n");
        assert_eq!(e.line, 6);
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert_eq!(err("scenario x\nmode replay\nspeed 3\n").line, 3);
        assert_eq!(
            err("scenario x\nmode replay\nduration 1\nbody:\n  mass 80\n").line,
            5
        );
        assert_eq!(
            err("scenario x\nmode replay\nduration 1\nweather:\n").line,
            4
        );
    }

    #[test]
    fn error_columns() {
        let e = err("scenario x\nmode replay\nduration 1\nbody:\n  lean_max abc\n");
        assert_eq!((e.line, e.column), (5, 12));
        assert_eq!(e.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn events_are_sorted() {
        let text = "scenario x\nmode replay\nduration 5\nevents:\n  at 3 set_distance 1\n  at 0 set_distance 4\n  at 0 set_phase go\n";
        let s = parse_scenario(text).unwrap();
        let ticks: Vec<_> = s.events.iter().map(|e| e.tick).collect();
        assert_eq!(ticks, [0, 0, 3]);
        let out = serialize_scenario(&s);
        let first = out.find("at 0 set_distance").unwrap();
        let last = out.find("at 3 set_distance").unwrap();
        assert!(first < last);
    }

    #[test]
    fn programmatic_unsorted_events_serialize_sorted() {
        let mut s = Scenario::new("x", Mode::ClosedLoop, 5);
        s.events
            .push(TimedEvent::new(4, EventAction::TraineeMove(0.5)));
        s.events
            .push(TimedEvent::new(1, EventAction::SetCalmness(1.0)));
        let text = serialize_scenario(&s);
        assert!(text.find("at 1").unwrap() < text.find("at 4").unwrap());
        let mut sorted = s.clone();
        sorted.canonicalize();
        assert_eq!(parse_scenario(&text).unwrap(), sorted);
    }

    #[test]
    fn defaults_are_omitted_and_restored() {
        let mut s = Scenario::new("x", Mode::ClosedLoop, 3);
        s.vc.torso.cultural_distance = 0.2;
        let text = serialize_scenario(&s);
        assert!(!text.contains("emotion:"));
        assert!(!text.contains("body:"));
        assert!(!text.contains("sd_default"));
        assert!(text.contains("cultural_distance 0.2"));
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back.vc, s.vc);
        assert_eq!(back.emotion, s.emotion);
        assert_eq!(back.body, s.body);
        assert_eq!(back, s);
    }

    #[test]
    fn rules_parse_and_round_trip() {
        let text = "scenario x\nmode closed_loop\nduration 10\nrules:\n  when phase=calm_down tick>=5 arousal>=0.2 set torso_pitch gain=0.5 pad_offset=0 0 -0.5\n  when phase=* set torso_pitch sd_default=2\n  when phase=a set torso_pitch gain=1\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.rules.len(), 3);
        let r = &s.rules[0];
        assert_eq!(r.rule_id, "r1");
        assert_eq!(r.condition.min_tick, Some(5));
        assert_eq!(r.condition.min_arousal, Some(0.2));
        assert_eq!(r.bias.gain, 0.5);
        assert_eq!(
            r.bias.pad_offset,
            Some(PadState::from_components([0.0, 0.0, -0.5]))
        );
        assert_eq!(s.rules[1].condition.phase, PhaseMatch::Any);
        assert_eq!(s.rules[1].bias.sd_default_override, Some(2.0));
        assert!(s.rules[2].bias.is_neutral());
        assert_eq!(parse_scenario(&serialize_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn rule_errors() {
        let base = "scenario x\nmode closed_loop\nduration 10\nrules:\n";
        assert_eq!(
            err(&format!("{base}  when phase=a set gaze gain=1\n")).line,
            5
        );
        assert_eq!(
            err(&format!("{base}  when phase=a set torso_pitch\n")).line,
            5
        );
        assert_eq!(
            err(&format!("{base}  when tick>=1 set torso_pitch gain=1\n")).line,
            5
        );
        assert_eq!(
            err(&format!("{base}  when phase=a set torso_pitch gain=-1\n")).line,
            5
        );
        assert_eq!(
            err(&format!("{base}  when phase=a set torso_pitch volume=3\n")).line,
            5
        );
    }

    #[test]
    fn missing_required_directive() {
        let e = err("scenario x\nduration 1\n");
        assert!(e.message.contains("mode"));
    }

    #[test]
    fn validate_reports_problems() {
        let mut s = Scenario::new("x", Mode::ClosedLoop, 1);
        assert!(s.validate().is_ok());
        s.body.lean_over_max = 0.0;
        assert!(s.validate().is_err());
    }
}
