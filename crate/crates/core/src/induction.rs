//! First-level automata induction.
//!
//! The hypothesis class is every deterministic machine with at most three
//! states whose transitions are driven by at most three guard symbols (an
//! action that took effect, or a lamp that was on after the step). Symbols
//! outside the relevant set are self-loops. A candidate survives when some
//! (state, action) pair predicts the bad-move lamp perfectly although the
//! action alone does not; that prediction is the machine's peculiarity.
//!
//! A step whose bad-move lamp flashed never applies its action transition:
//! the world did not change, so neither does the model of it.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::StepRecord;
use crate::world::{Cell, Eye, Lamp, LampView, Move};

pub const MAX_STATES: u8 = 3;
pub const MAX_RELEVANT: usize = 3;
/// Minimum occurrences before a rule is trusted.
pub const MIN_SUPPORT: u32 = 20;
/// The initial state of every canonical automaton.
pub const INITIAL: u8 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GuardSymbol {
    Action(Move),
    LampEvent(Lamp),
}

impl GuardSymbol {
    /// All 13 symbols in canonical order: actions 0..=7, then the victory,
    /// loss, bad-move, cross and o lamps.
    pub const ALL: [GuardSymbol; 13] = [
        GuardSymbol::Action(Move::Left),
        GuardSymbol::Action(Move::Right),
        GuardSymbol::Action(Move::Up),
        GuardSymbol::Action(Move::Down),
        GuardSymbol::Action(Move::PutCross),
        GuardSymbol::Action(Move::NewGame),
        GuardSymbol::Action(Move::Unused6),
        GuardSymbol::Action(Move::Unused7),
        GuardSymbol::LampEvent(Lamp::Victory),
        GuardSymbol::LampEvent(Lamp::Loss),
        GuardSymbol::LampEvent(Lamp::BadMove),
        GuardSymbol::LampEvent(Lamp::Cross),
        GuardSymbol::LampEvent(Lamp::O),
    ];

    pub fn index(self) -> usize {
        match self {
            GuardSymbol::Action(m) => m.code() as usize,
            GuardSymbol::LampEvent(Lamp::Victory) => 8,
            GuardSymbol::LampEvent(Lamp::Loss) => 9,
            GuardSymbol::LampEvent(Lamp::BadMove) => 10,
            GuardSymbol::LampEvent(Lamp::Cross) => 11,
            GuardSymbol::LampEvent(Lamp::O) => 12,
        }
    }

    pub fn fires(self, mv: Move, lamps: &LampView) -> bool {
        match self {
            GuardSymbol::Action(a) => a == mv && !lamps.bad_move,
            GuardSymbol::LampEvent(l) => lamps.get(l),
        }
    }
}

impl fmt::Display for GuardSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardSymbol::Action(m) => write!(f, "{m}"),
            GuardSymbol::LampEvent(l) => write!(f, "lamp:{}", l.name()),
        }
    }
}

fn fired_mask(mv: Move, lamps: &LampView) -> u16 {
    GuardSymbol::ALL
        .iter()
        .enumerate()
        .filter(|(_, s)| s.fires(mv, lamps))
        .fold(0u16, |m, (i, _)| m | (1 << i))
}

/// A lamp reading a rule predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LampAtom {
    pub lamp: Lamp,
    pub on: bool,
}

impl LampAtom {
    pub fn bad_move(on: bool) -> Self {
        LampAtom { lamp: Lamp::BadMove, on }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeculiarityRule {
    pub state: u8,
    pub action: Move,
    pub prediction: LampAtom,
    pub support: u32,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: u8,
    pub symbol: GuardSymbol,
    pub to: u8,
}

#[derive(Debug, Error, PartialEq)]
pub enum InductionError {
    #[error("automaton table malformed: {0}")]
    Malformed(String),
    #[error("insufficient exploration: missing {}", .missing.join(", "))]
    InsufficientExploration { missing: Vec<String> },
}

/// A small deterministic machine. State 0 is initial; `delta` is total over
/// `relevant` and stored row-major (`delta[state * k + i]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Automaton {
    pub n_states: u8,
    pub relevant: Vec<GuardSymbol>,
    delta: Vec<u8>,
    #[serde(default)]
    pub rules: Vec<PeculiarityRule>,
}

impl Automaton {
    /// Builds a machine from a transition table, renumbering states into
    /// canonical order. Unreachable states are dropped.
    pub fn new(n_states: u8, relevant: Vec<GuardSymbol>, delta: Vec<u8>) -> Result<Automaton, InductionError> {
        if n_states == 0 || n_states > MAX_STATES {
            return Err(InductionError::Malformed(format!("{n_states} states")));
        }
        if relevant.len() > MAX_RELEVANT {
            return Err(InductionError::Malformed(format!("{} relevant symbols", relevant.len())));
        }
        if delta.len() != n_states as usize * relevant.len() || delta.iter().any(|&t| t >= n_states) {
            return Err(InductionError::Malformed("transition table is not total".into()));
        }
        let mut sorted = relevant.clone();
        sorted.sort_by_key(|s| s.index());
        sorted.dedup();
        if sorted != relevant {
            return Err(InductionError::Malformed("relevant symbols must be sorted and distinct".into()));
        }
        Ok(canonicalize(n_states, relevant, &delta))
    }

    pub fn initial(&self) -> u8 {
        INITIAL
    }

    pub fn delta(&self) -> &[u8] {
        &self.delta
    }

    pub fn target(&self, state: u8, symbol: usize) -> u8 {
        self.delta[state as usize * self.relevant.len() + symbol]
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..self.n_states).flat_map(move |from| {
            self.relevant
                .iter()
                .enumerate()
                .map(move |(i, &symbol)| Transition { from, symbol, to: self.target(from, i) })
        })
    }

    /// Successor after one observed step. The action transition (if any)
    /// is applied first, then lamp events in symbol order.
    pub fn next(&self, state: u8, mv: Move, lamps: &LampView) -> u8 {
        self.relevant
            .iter()
            .enumerate()
            .filter(|(_, s)| s.fires(mv, lamps))
            .fold(state, |s, (i, _)| self.target(s, i))
    }

    /// Tie-break key: self-loops sort first, then targets by id.
    pub fn encoding(&self) -> Vec<u8> {
        let k = self.relevant.len();
        let mut enc = vec![self.n_states, k as u8];
        enc.extend(self.relevant.iter().map(|s| s.index() as u8));
        enc.extend(self.delta.iter().enumerate().map(|(j, &t)| if t as usize == j / k.max(1) { 0 } else { t + 1 }));
        enc
    }

    pub fn is_canonical(&self) -> bool {
        is_canonical(self.n_states as usize, self.relevant.len(), &self.delta)
    }

    /// Relevant symbols whose transitions are self-loops everywhere.
    fn has_inert_symbol(&self) -> bool {
        let k = self.relevant.len();
        (0..k).any(|i| (0..self.n_states).all(|s| self.target(s, i) == s))
            || (k > 0 && self.n_states == 1)
    }

    /// Rules whose state and action match.
    pub fn rule(&self, state: u8, action: Move) -> Option<&PeculiarityRule> {
        self.rules.iter().find(|r| r.state == state && r.action == action)
    }

    pub fn relevant_actions(&self) -> impl Iterator<Item = Move> + '_ {
        self.relevant.iter().filter_map(|s| match s {
            GuardSymbol::Action(m) => Some(*m),
            _ => None,
        })
    }

    /// The column tracker: left/middle/right, moved by Left and Right.
    pub fn ground_truth_column() -> Automaton {
        let relevant = vec![GuardSymbol::Action(Move::Left), GuardSymbol::Action(Move::Right)];
        Automaton::new(3, relevant, vec![0, 1, 0, 2, 1, 2]).expect("valid table")
    }

    /// The row tracker: top/middle/bottom, moved by Up and Down.
    pub fn ground_truth_row() -> Automaton {
        let relevant = vec![GuardSymbol::Action(Move::Up), GuardSymbol::Action(Move::Down)];
        Automaton::new(3, relevant, vec![0, 1, 0, 2, 1, 2]).expect("valid table")
    }

    /// Playing (0) / over (1): a victory or loss flash ends the set, a
    /// successful new game starts the next one.
    pub fn ground_truth_game_over() -> Automaton {
        let relevant = vec![
            GuardSymbol::Action(Move::NewGame),
            GuardSymbol::LampEvent(Lamp::Victory),
            GuardSymbol::LampEvent(Lamp::Loss),
        ];
        Automaton::new(2, relevant, vec![0, 1, 1, 0, 1, 1]).expect("valid table")
    }
}

fn bfs_order(n: usize, k: usize, delta: &[u8]) -> (Vec<usize>, usize) {
    let mut order = vec![usize::MAX; n];
    let mut visit = vec![0usize; n];
    order[0] = 0;
    visit[0] = 0;
    let (mut head, mut found) = (0, 1);
    while head < found {
        let s = visit[head];
        for i in 0..k {
            let t = delta[s * k + i] as usize;
            if order[t] == usize::MAX {
                order[t] = found;
                visit[found] = t;
                found += 1;
            }
        }
        head += 1;
    }
    (order, found)
}

fn is_canonical(n: usize, k: usize, delta: &[u8]) -> bool {
    let (order, found) = bfs_order(n, k, delta);
    found == n && order.iter().enumerate().all(|(i, &o)| i == o)
}

fn canonicalize(n: u8, relevant: Vec<GuardSymbol>, delta: &[u8]) -> Automaton {
    let k = relevant.len();
    let (order, found) = bfs_order(n as usize, k, delta);
    let mut out = vec![0u8; found * k];
    for s in 0..n as usize {
        if order[s] == usize::MAX {
            continue;
        }
        for i in 0..k {
            out[order[s] * k + i] = order[delta[s * k + i] as usize] as u8;
        }
    }
    Automaton { n_states: found as u8, relevant, delta: out, rules: Vec::new() }
}

/// State before each step plus the final state (length = records + 1).
pub fn run_automaton(a: &Automaton, records: &[StepRecord]) -> Vec<u8> {
    let mut states = Vec::with_capacity(records.len() + 1);
    let mut s = INITIAL;
    states.push(s);
    for r in records {
        s = a.next(s, r.mv, &r.lamps);
        states.push(s);
    }
    states
}

/// Every relevant set of size `0..=max_relevant` in canonical order.
pub fn relevant_sets(max_relevant: usize) -> Vec<Vec<GuardSymbol>> {
    let mut out = Vec::new();
    fn rec(start: usize, k: usize, cur: &mut Vec<GuardSymbol>, out: &mut Vec<Vec<GuardSymbol>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..GuardSymbol::ALL.len() {
            cur.push(GuardSymbol::ALL[i]);
            rec(i + 1, k, cur, out);
            cur.pop();
        }
    }
    for k in 0..=max_relevant.min(MAX_RELEVANT) {
        rec(0, k, &mut Vec::new(), &mut out);
    }
    out
}

/// All canonical machines with exactly `n_states` states over `relevant`.
pub fn enumerate_for(relevant: &[GuardSymbol], n_states: u8) -> Vec<Automaton> {
    let (n, k) = (n_states as usize, relevant.len());
    let cells = n * k;
    let total = n.pow(cells as u32);
    let mut out = Vec::new();
    let mut delta = vec![0u8; cells];
    for code in 0..total {
        let mut c = code;
        for d in delta.iter_mut().rev() {
            *d = (c % n) as u8;
            c /= n;
        }
        if is_canonical(n, k, &delta) {
            out.push(Automaton { n_states, relevant: relevant.to_vec(), delta: delta.clone(), rules: Vec::new() });
        }
    }
    out
}

/// The whole hypothesis class, each canonical machine exactly once.
pub fn enumerate_candidates(max_states: u8, max_relevant: usize) -> impl Iterator<Item = Automaton> {
    let max_states = max_states.clamp(1, MAX_STATES);
    relevant_sets(max_relevant)
        .into_iter()
        .flat_map(move |rel| (1..=max_states).flat_map(move |n| enumerate_for(&rel, n)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InductionConfig {
    pub min_support: u32,
    /// Share of the trace used to propose rules; the rest must confirm them.
    pub train_fraction: f64,
    pub max_states: u8,
    pub max_relevant: usize,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig { min_support: MIN_SUPPORT, train_fraction: 0.75, max_states: MAX_STATES, max_relevant: MAX_RELEVANT }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rejection {
    InsufficientSupport { steps: usize, needed: usize },
    /// A relevant action's bad-move outcome is not a function of the state.
    Inconsistent { state: u8, action: Move },
    /// A state is never entered in the confirmation segment.
    NotRecurrent { state: u8 },
    NoPeculiarity,
}

/// Outcome counts per (state, action): `[ok, bad]`.
type Counts = [[[u32; 2]; 8]; 3];

/// Per-trace data shared by all candidates.
pub struct MiningContext {
    actions: Vec<u8>,
    bad: Vec<u8>,
    fired: Vec<u16>,
    split: usize,
    /// Overall `[ok, bad]` per action on the training segment.
    global: [[u32; 2]; 8],
    config: InductionConfig,
}

impl MiningContext {
    pub fn new(records: &[StepRecord], config: InductionConfig) -> Self {
        let actions: Vec<u8> = records.iter().map(|r| r.mv.code()).collect();
        let bad: Vec<u8> = records.iter().map(|r| r.lamps.bad_move as u8).collect();
        let fired = records.iter().map(|r| fired_mask(r.mv, &r.lamps)).collect();
        let split = ((records.len() as f64) * config.train_fraction).round() as usize;
        let mut global = [[0u32; 2]; 8];
        for t in 0..split {
            global[actions[t] as usize][bad[t] as usize] += 1;
        }
        MiningContext { actions, bad, fired, split, global, config }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// True if the action's bad-move outcome varies over the training data.
    fn action_is_ambiguous(&self, a: usize) -> bool {
        self.global[a][0] > 0 && self.global[a][1] > 0
    }

    fn symbol_fires(&self, symbol: GuardSymbol) -> bool {
        let bit = 1u16 << symbol.index();
        self.fired[..self.split].iter().any(|&m| m & bit != 0)
    }

    fn masks(&self, relevant: &[GuardSymbol]) -> Vec<u8> {
        self.fired
            .iter()
            .map(|&m| {
                relevant
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, s)| if m & (1 << s.index()) != 0 { acc | (1 << i) } else { acc })
            })
            .collect()
    }
}

fn step_table(a: &Automaton) -> [[u8; 8]; 3] {
    let mut table = [[0u8; 8]; 3];
    let k = a.relevant.len();
    for s in 0..a.n_states {
        for mask in 0..(1usize << k) {
            table[s as usize][mask] = (0..k).filter(|i| mask & (1 << i) != 0).fold(s, |st, i| a.target(st, i));
        }
    }
    table
}

fn count(ctx: &MiningContext, a: &Automaton, masks: &[u8]) -> Result<(Counts, Counts), Rejection> {
    let table = step_table(a);
    let relevant_actions = a.relevant_actions().fold(0u8, |m, mv| m | (1 << mv.code()));
    let mut train: Counts = [[[0; 2]; 8]; 3];
    let mut held: Counts = [[[0; 2]; 8]; 3];
    let mut s = 0usize;
    for t in 0..ctx.len() {
        let (act, bad) = (ctx.actions[t] as usize, ctx.bad[t] as usize);
        if relevant_actions & (1 << act) != 0 && train[s][act][1 - bad] + held[s][act][1 - bad] > 0 {
            return Err(Rejection::Inconsistent { state: s as u8, action: Move::ALL[act] });
        }
        if t < ctx.split {
            train[s][act][bad] += 1;
        } else {
            held[s][act][bad] += 1;
        }
        s = table[s][masks[t] as usize] as usize;
    }
    Ok((train, held))
}

fn mine_with(ctx: &MiningContext, candidate: &Automaton, masks: &[u8]) -> Result<Automaton, Rejection> {
    let needed = ctx.config.min_support as usize;
    if ctx.split < needed {
        return Err(Rejection::InsufficientSupport { steps: ctx.len(), needed });
    }
    let (train, held) = count(ctx, candidate, masks)?;
    for s in 0..candidate.n_states {
        if held[s as usize].iter().all(|c| c[0] + c[1] == 0) {
            return Err(Rejection::NotRecurrent { state: s });
        }
    }
    let mut rules = Vec::new();
    for s in 0..candidate.n_states as usize {
        for a in 0..8 {
            if !ctx.action_is_ambiguous(a) {
                continue;
            }
            let [ok, bad] = train[s][a];
            let [hok, hbad] = held[s][a];
            let (on, support, violations) = match (ok, bad) {
                (0, n) if n >= ctx.config.min_support => (true, n + hbad, hok),
                (n, 0) if n >= ctx.config.min_support => (false, n + hok, hbad),
                _ => continue,
            };
            if violations > 0 {
                continue;
            }
            rules.push(PeculiarityRule {
                state: s as u8,
                action: Move::ALL[a],
                prediction: LampAtom::bad_move(on),
                support,
                confidence: 1.0,
            });
        }
    }
    let own: Vec<Move> = candidate.relevant_actions().collect();
    if !rules.iter().any(|r| own.contains(&r.action)) {
        return Err(Rejection::NoPeculiarity);
    }
    let mut accepted = candidate.clone();
    accepted.rules = rules;
    Ok(accepted)
}

/// Scores one candidate on a trace: global consistency over its relevant
/// actions, recurrence of every state in the confirmation segment, and at
/// least one confidence-1 rule the action alone would not give.
pub fn mine(records: &[StepRecord], candidate: &Automaton, config: InductionConfig) -> Result<Automaton, Rejection> {
    let ctx = MiningContext::new(records, config);
    let masks = ctx.masks(&candidate.relevant);
    mine_with(&ctx, candidate, &masks)
}

/// State sequence renamed by first appearance: equal keys mean the two
/// machines partition the trace identically.
fn behaviour_key(a: &Automaton, records: &[StepRecord]) -> Vec<u8> {
    let mut names = [u8::MAX; 3];
    let mut next = 0u8;
    run_automaton(a, records)
        .into_iter()
        .map(|s| {
            if names[s as usize] == u8::MAX {
                names[s as usize] = next;
                next += 1;
            }
            names[s as usize]
        })
        .collect()
}

fn size_key(a: &Automaton) -> (u8, usize, Vec<u8>) {
    (a.n_states, a.relevant.len(), a.encoding())
}

/// Keeps one machine per behaviour (the smallest), then drops any machine
/// that merely refines a smaller survivor: every one of its states sits
/// inside one state of the smaller machine, which already carries the same
/// predictions.
pub fn minimal_accepted(mut accepted: Vec<Automaton>, records: &[StepRecord]) -> Vec<Automaton> {
    accepted.sort_by_key(size_key);
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut kept: Vec<(Automaton, Vec<u8>)> = Vec::new();
    for a in accepted {
        let key = behaviour_key(&a, records);
        if seen.insert(key) {
            let states = run_automaton(&a, records);
            kept.push((a, states));
        }
    }
    let refines = |(big, big_states): &(Automaton, Vec<u8>), (small, small_states): &(Automaton, Vec<u8>)| {
        if (small.n_states, small.relevant.len()) >= (big.n_states, big.relevant.len())
            || small.n_states > big.n_states
            || small.relevant.len() > big.relevant.len()
        {
            return false;
        }
        let mut image = [u8::MAX; 3];
        for (&b, &s) in big_states.iter().zip(small_states) {
            let slot = &mut image[b as usize];
            if *slot == u8::MAX {
                *slot = s;
            } else if *slot != s {
                return false;
            }
        }
        big.rules.iter().all(|r| {
            let target = image[r.state as usize];
            small.rules.iter().any(|q| q.state == target && q.action == r.action && q.prediction == r.prediction)
        })
    };
    kept.iter()
        .filter(|a| !kept.iter().any(|b| refines(a, b)))
        .map(|(a, _)| a.clone())
        .collect()
}

/// What the agent remembers it saw before acting: the cell lamps of the
/// previous step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seen {
    Any,
    Cross,
    O,
    Empty,
}

impl Seen {
    pub fn matches(self, cell: Cell) -> bool {
        match self {
            Seen::Any => true,
            Seen::Cross => cell == Cell::Cross,
            Seen::O => cell == Cell::O,
            Seen::Empty => cell == Cell::Empty,
        }
    }
}

/// A single-state automaton's rule, optionally conditioned on what is seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRule {
    pub seen: Seen,
    pub action: Move,
    pub prediction: LampAtom,
    pub support: u32,
    pub confidence: f64,
}

/// Cell seen before step `t` (the start view shows an empty cell).
pub fn seen_before(records: &[StepRecord], t: usize) -> Cell {
    if t == 0 {
        LampView::OFF.seen_cell()
    } else {
        records[t - 1].lamps.seen_cell()
    }
}

pub fn mine_constant_rules(records: &[StepRecord], config: InductionConfig) -> Vec<ConstantRule> {
    let split = ((records.len() as f64) * config.train_fraction).round() as usize;
    let conditions = [Seen::Any, Seen::Cross, Seen::O, Seen::Empty];
    // [condition][action][segment][ok/bad]
    let mut counts = [[[[0u32; 2]; 2]; 8]; 4];
    for (t, r) in records.iter().enumerate() {
        let cell = seen_before(records, t);
        let seg = usize::from(t >= split);
        for (ci, c) in conditions.iter().enumerate() {
            if c.matches(cell) {
                counts[ci][r.mv.code() as usize][seg][r.lamps.bad_move as usize] += 1;
            }
        }
    }
    let mut rules: Vec<ConstantRule> = Vec::new();
    for (ci, &seen) in conditions.iter().enumerate() {
        for a in 0..8 {
            let [train, held] = counts[ci][a];
            for on in [true, false] {
                let (hit, miss) = (train[on as usize], train[!on as usize]);
                if miss > 0 || hit < config.min_support || held[!on as usize] > 0 {
                    continue;
                }
                let implied = rules.iter().any(|r| r.seen == Seen::Any && r.action.code() as usize == a);
                if seen != Seen::Any && implied {
                    continue;
                }
                rules.push(ConstantRule {
                    seen,
                    action: Move::ALL[a],
                    prediction: LampAtom::bad_move(on),
                    support: hit + held[on as usize],
                    confidence: 1.0,
                });
            }
        }
    }
    rules
}

/// The three named first-level machines plus the constant rules, with the
/// meaning of each state recovered from its rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level1Model {
    pub column: Automaton,
    pub row: Automaton,
    pub game_over: Automaton,
    /// Column (1..=3) of each column-automaton state.
    pub column_of: Vec<u8>,
    /// Row (1..=3) of each row-automaton state.
    pub row_of: Vec<u8>,
    pub over_state: u8,
    pub constant_rules: Vec<ConstantRule>,
    /// Other accepted machines, kept for inspection.
    #[serde(default)]
    pub extras: Vec<Automaton>,
}

impl Level1Model {
    /// The true model of World 2, without mined rule statistics.
    pub fn ground_truth() -> Level1Model {
        Level1Model {
            column: Automaton::ground_truth_column(),
            row: Automaton::ground_truth_row(),
            game_over: Automaton::ground_truth_game_over(),
            column_of: vec![1, 2, 3],
            row_of: vec![1, 2, 3],
            over_state: 1,
            constant_rules: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub fn automata(&self) -> [(&'static str, &Automaton); 3] {
        [("column", &self.column), ("row", &self.row), ("game_over", &self.game_over)]
    }

    pub fn tracker(&self) -> Level1Tracker {
        Level1Tracker { column: INITIAL, row: INITIAL, game: INITIAL }
    }

    /// True if a learned rule says `mv` will flash bad move now.
    pub fn predicts_bad(&self, at: &Level1Tracker, seen: Cell, mv: Move) -> bool {
        let by_automaton = [(&self.column, at.column), (&self.row, at.row), (&self.game_over, at.game)]
            .into_iter()
            .any(|(a, s)| a.rule(s, mv).is_some_and(|r| r.prediction.on));
        by_automaton
            || self
                .constant_rules
                .iter()
                .any(|r| r.action == mv && r.prediction.on && r.seen.matches(seen))
    }
}

/// Current states of the three first-level machines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Level1Tracker {
    pub column: u8,
    pub row: u8,
    pub game: u8,
}

impl Level1Tracker {
    pub fn advance(&mut self, model: &Level1Model, mv: Move, lamps: &LampView) {
        self.column = model.column.next(self.column, mv, lamps);
        self.row = model.row.next(self.row, mv, lamps);
        self.game = model.game_over.next(self.game, mv, lamps);
    }

    pub fn eye(&self, model: &Level1Model) -> Eye {
        Eye { col: model.column_of[self.column as usize], row: model.row_of[self.row as usize] }
    }

    pub fn is_over(&self, model: &Level1Model) -> bool {
        self.game == model.over_state
    }
}

/// Searches the class for all accepted machines, minimal first.
pub fn search(records: &[StepRecord], config: InductionConfig) -> Vec<Automaton> {
    let ctx = MiningContext::new(records, config);
    if ctx.split < config.min_support as usize {
        return Vec::new();
    }
    let sets: Vec<Vec<GuardSymbol>> = relevant_sets(config.max_relevant)
        .into_iter()
        .filter(|rel| rel.iter().any(|s| matches!(s, GuardSymbol::Action(_))))
        .filter(|rel| rel.iter().all(|&s| ctx.symbol_fires(s)))
        .collect();
    let accepted: Vec<Automaton> = sets
        .par_iter()
        .flat_map_iter(|rel| {
            let masks = ctx.masks(rel);
            let ctx = &ctx;
            (2..=config.max_states.min(MAX_STATES))
                .flat_map(move |n| enumerate_for(rel, n))
                .filter(|a| !a.has_inert_symbol())
                .filter_map(move |a| mine_with(ctx, &a, &masks).ok())
                .collect::<Vec<_>>()
        })
        .collect();
    minimal_accepted(accepted, records)
}

fn bad_rule_state(a: &Automaton, action: Move) -> Option<u8> {
    a.rules.iter().find(|r| r.action == action && r.prediction.on).map(|r| r.state)
}

/// A three-state tracker whose `low` move is bad in one state and `high`
/// move in another; returns its state → position labelling.
fn axis_labels(a: &Automaton, low: Move, high: Move) -> Option<Vec<u8>> {
    if a.n_states != 3 {
        return None;
    }
    let acts: Vec<Move> = a.relevant_actions().collect();
    if !acts.contains(&low) || !acts.contains(&high) {
        return None;
    }
    let first = bad_rule_state(a, low)?;
    let last = bad_rule_state(a, high)?;
    if first == last {
        return None;
    }
    let mut labels = vec![2u8; 3];
    labels[first as usize] = 1;
    labels[last as usize] = 3;
    Some(labels)
}

fn game_over_state(a: &Automaton) -> Option<u8> {
    if a.n_states != 2 || !a.relevant.contains(&GuardSymbol::Action(Move::NewGame)) {
        return None;
    }
    let lamp_driven = a.relevant.iter().any(|s| {
        matches!(s, GuardSymbol::LampEvent(Lamp::Victory) | GuardSymbol::LampEvent(Lamp::Loss))
    });
    if !lamp_driven {
        return None;
    }
    let playing = bad_rule_state(a, Move::NewGame)?;
    let over = bad_rule_state(a, Move::PutCross)?;
    (playing != over).then_some(over)
}

/// Finds the column, row and game-over machines plus the constant rules.
pub fn induce_level1(records: &[StepRecord], config: InductionConfig) -> Result<Level1Model, InductionError> {
    let accepted = search(records, config);
    let column = accepted.iter().find_map(|a| axis_labels(a, Move::Left, Move::Right).map(|l| (a.clone(), l)));
    let row = accepted.iter().find_map(|a| axis_labels(a, Move::Up, Move::Down).map(|l| (a.clone(), l)));
    let game = accepted.iter().find_map(|a| game_over_state(a).map(|s| (a.clone(), s)));
    let mut missing = Vec::new();
    if column.is_none() {
        missing.push("column automaton (left/right boundary rules)".to_string());
    }
    if row.is_none() {
        missing.push("row automaton (up/down boundary rules)".to_string());
    }
    if game.is_none() {
        missing.push("game-over automaton (victory/loss lamp transitions)".to_string());
    }
    match (column, row, game) {
        (Some((column, column_of)), Some((row, row_of)), Some((game_over, over_state))) => {
            let extras = accepted
                .into_iter()
                .filter(|a| *a != column && *a != row && *a != game_over)
                .collect();
            Ok(Level1Model {
                column,
                row,
                game_over,
                column_of,
                row_of,
                over_state,
                constant_rules: mine_constant_rules(records, config),
                extras,
            })
        }
        _ => Err(InductionError::InsufficientExploration { missing }),
    }
}
