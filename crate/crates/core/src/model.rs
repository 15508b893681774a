//! The inspectable model document: everything the agent has learned so far.

use serde::{Deserialize, Serialize};

use crate::agent::AgentPhase;
use crate::belief::BeliefSnapshot;
use crate::induction::{Automaton, ConstantRule, GuardSymbol, Level1Model, PeculiarityRule, Transition};
use crate::rules::{Counterexample, Formula, FormulaVerdict, WinningSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomatonView {
    pub name: String,
    pub n_states: u8,
    pub relevant: Vec<GuardSymbol>,
    pub transitions: Vec<Transition>,
    pub rules: Vec<PeculiarityRule>,
    /// Meaning of each state, e.g. `col 1` or `over`.
    pub state_labels: Vec<String>,
}

impl AutomatonView {
    pub fn new(name: &str, a: &Automaton, state_labels: Vec<String>) -> Self {
        AutomatonView {
            name: name.to_string(),
            n_states: a.n_states,
            relevant: a.relevant.clone(),
            transitions: a.transitions().collect(),
            rules: a.rules.clone(),
            state_labels,
        }
    }

    pub fn from_level1(m: &Level1Model) -> Vec<AutomatonView> {
        let game_labels = (0..m.game_over.n_states)
            .map(|s| if s == m.over_state { "over" } else { "playing" }.to_string())
            .collect();
        vec![
            AutomatonView::new("column", &m.column, m.column_of.iter().map(|c| format!("col {c}")).collect()),
            AutomatonView::new("row", &m.row, m.row_of.iter().map(|r| format!("row {r}")).collect()),
            AutomatonView::new("game_over", &m.game_over, game_labels),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaReport {
    pub name: String,
    pub text: String,
    pub holds: bool,
    pub checked: u64,
    pub insufficient: usize,
    pub counterexample: Option<Counterexample>,
}

impl FormulaReport {
    pub fn new(f: &Formula, v: &FormulaVerdict) -> Self {
        FormulaReport {
            name: f.name.clone(),
            text: f.to_string(),
            holds: v.holds(),
            checked: v.checked,
            insufficient: v.insufficient.len(),
            counterexample: v.counterexample,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub phase: AgentPhase,
    pub steps: u64,
    pub automata: Vec<AutomatonView>,
    pub constant_rules: Vec<ConstantRule>,
    pub formulas: Vec<FormulaReport>,
    pub winning_sets: Vec<WinningSet>,
    pub undecided_sets: usize,
    pub completed_sets: usize,
    pub belief: Option<BeliefSnapshot>,
}

impl ModelDocument {
    pub fn empty() -> Self {
        ModelDocument {
            phase: AgentPhase::Explore,
            steps: 0,
            automata: Vec::new(),
            constant_rules: Vec::new(),
            formulas: Vec::new(),
            winning_sets: Vec::new(),
            undecided_sets: 0,
            completed_sets: 0,
            belief: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}
