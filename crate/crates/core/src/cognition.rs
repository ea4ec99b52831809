//! Declarative cognitive layer. Rules read the previous tick's node
//! deviations, the PAD state, the tick index and the scenario phase, and
//! their only output is a bias per reflex node.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::reflex::NodeBias;
use crate::types::PadState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseMatch {
    Any,
    Is(String),
}

impl PhaseMatch {
    fn matches(&self, phase: &str) -> bool {
        match self {
            PhaseMatch::Any => true,
            PhaseMatch::Is(p) => p == phase,
        }
    }
}

/// Conjunction of clauses; absent clauses always hold.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub phase: PhaseMatch,
    pub min_tick: Option<u64>,
    pub min_arousal: Option<f64>,
    pub max_arousal: Option<f64>,
    pub min_dominance: Option<f64>,
    pub max_dominance: Option<f64>,
    /// Lower bound on the target node's absolute deviation.
    pub min_abs_deviation: Option<f64>,
}

impl Condition {
    pub fn phase(phase: impl Into<String>) -> Self {
        Self {
            phase: PhaseMatch::Is(phase.into()),
            ..Self::always()
        }
    }

    pub fn always() -> Self {
        Self {
            phase: PhaseMatch::Any,
            min_tick: None,
            min_arousal: None,
            max_arousal: None,
            min_dominance: None,
            max_dominance: None,
            min_abs_deviation: None,
        }
    }

    pub fn holds(&self, tick: u64, deviation: f64, pad: &PadState, phase: &str) -> bool {
        self.phase.matches(phase)
            && self.min_tick.is_none_or(|t| tick >= t)
            && self.min_arousal.is_none_or(|a| pad.arousal >= a)
            && self.max_arousal.is_none_or(|a| pad.arousal <= a)
            && self.min_dominance.is_none_or(|d| pad.dominance >= d)
            && self.max_dominance.is_none_or(|d| pad.dominance <= d)
            && self.min_abs_deviation.is_none_or(|d| deviation.abs() >= d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CognitiveRule {
    pub rule_id: String,
    pub condition: Condition,
    pub bias: NodeBias,
    pub target_node: String,
}

/// Load-time check that every rule targets a known node with a valid bias.
pub fn validate_rules<'a>(
    rules: &[CognitiveRule],
    node_ids: impl IntoIterator<Item = &'a str> + Clone,
) -> Result<()> {
    for rule in rules {
        if !node_ids
            .clone()
            .into_iter()
            .any(|id| id == rule.target_node)
        {
            return Err(Error::Config(format!(
                "rule {} targets unknown node '{}'",
                rule.rule_id, rule.target_node
            )));
        }
        rule.bias.validate()?;
    }
    Ok(())
}

/// Biases for every node in `deviations`. Rules are scanned in order and
/// the last matching rule for a node wins; unmatched nodes get the neutral
/// bias.
pub fn plan_step(
    rules: &[CognitiveRule],
    tick: u64,
    deviations: &BTreeMap<String, f64>,
    pad: &PadState,
    phase: &str,
) -> BTreeMap<String, NodeBias> {
    let mut biases: BTreeMap<String, NodeBias> = deviations
        .keys()
        .map(|id| (id.clone(), NodeBias::NEUTRAL))
        .collect();
    for rule in rules {
        let Some(&deviation) = deviations.get(&rule.target_node) else {
            continue;
        };
        if rule.condition.holds(tick, deviation, pad, phase) {
            biases.insert(rule.target_node.clone(), rule.bias);
        }
    }
    biases
}
