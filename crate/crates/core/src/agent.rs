//! The step device: explore, learn, track the hidden board, then play.
//!
//! The agent only ever sees its own moves and the lamps that follow them.
//! It explores at random until the first-level machines can be induced,
//! then keeps playing random sets while it resolves final boards, checks the
//! trace formulas and learns the winning sets, and finally plays by
//! expectimax over its belief.

use std::collections::{HashSet, VecDeque};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{belief_init, belief_step, known_cells, BeliefError, BeliefSnapshot, BeliefState, CellKnowledge, Level1Reading};
use crate::induction::{induce_level1, mine_constant_rules, ConstantRule, InductionConfig, InductionError, Level1Model, Level1Tracker};
use crate::model::{AutomatonView, FormulaReport, ModelDocument};
use crate::planner::{nearest, plan, MacroAction, Opponent};
use crate::rules::{discover_winning_sets, eval_formula, standard_formula_suite, CellHistory, Discovery, WinningLines};
use crate::trace::{StepRecord, Trace, WorldId};
use crate::world::{self, Board, Cell, Eye, LampView, Move, Outcome, Side};
use crate::ExactSearch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentPhase {
    Explore,
    ConsolidateModel,
    Exploit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// Random steps before the first induction attempt (B1).
    pub explore: u64,
    /// Steps allowed in ConsolidateModel before exploiting anyway.
    pub consolidate_max: u64,
    /// Sets to play in Exploit before `lifecycle` returns.
    pub exploit_sets: u64,
    /// Completed, resolved sets needed before trusting the winning sets.
    pub min_sets: usize,
    /// Consecutive sets that must leave the winning sets unchanged.
    pub stable_sets: usize,
    /// How often Explore re-mines the constant rules.
    pub rule_refresh: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            explore: 20_000,
            consolidate_max: 200_000,
            exploit_sets: 1_000,
            min_sets: 100,
            stable_sets: 50,
            rule_refresh: 1_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub window_start: u64,
    pub window_end: u64,
    pub victories: u64,
    pub losses: u64,
    pub draws: u64,
    pub bad_moves: u64,
}

impl ScoreCard {
    pub const CSV_HEADER: &'static str = "window_start,window_end,victories,losses,draws,bad_moves";

    pub fn sets(&self) -> u64 {
        self.victories + self.losses + self.draws
    }

    /// `victories - losses - bad_moves`.
    pub fn merit(&self) -> i64 {
        self.victories as i64 - self.losses as i64 - self.bad_moves as i64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.window_start, self.window_end, self.victories, self.losses, self.draws, self.bad_moves
        )
    }

    pub fn add(&mut self, other: &ScoreCard) {
        self.victories += other.victories;
        self.losses += other.losses;
        self.draws += other.draws;
        self.bad_moves += other.bad_moves;
    }
}

pub fn scorecards_csv(cards: &[ScoreCard]) -> String {
    let mut out = String::from(ScoreCard::CSV_HEADER);
    out.push('\n');
    for c in cards {
        out.push_str(&c.csv_row());
        out.push('\n');
    }
    out
}

/// Counts flashes of records whose index lies in `window`. A victory and
/// loss flash in the same step is one draw.
pub fn score(records: &[StepRecord], window: Range<u64>) -> ScoreCard {
    let mut card = ScoreCard { window_start: window.start, window_end: window.end, ..ScoreCard::default() };
    for r in records.iter().filter(|r| window.contains(&r.t)) {
        match r.lamps.outcome() {
            Outcome::Victory => card.victories += 1,
            Outcome::Loss => card.losses += 1,
            Outcome::Draw => card.draws += 1,
            Outcome::None => {}
        }
        card.bad_moves += u64::from(r.lamps.bad_move);
    }
    card
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("induction failed after {steps} steps: {source}")]
    Induction { steps: u64, source: InductionError },
    #[error("gave up after {steps} steps in {phase:?}")]
    StepLimit { steps: u64, phase: AgentPhase },
}

pub struct Agent {
    budgets: Budgets,
    config: InductionConfig,
    rng: ChaCha8Rng,
    phase: AgentPhase,
    history: Vec<StepRecord>,
    last_move: Option<Move>,
    seen: Cell,
    constant_rules: Vec<ConstantRule>,
    explore_limit: u64,
    extended: bool,
    failure: Option<AgentError>,
    level1: Option<Level1Model>,
    tracker: Option<Level1Tracker>,
    belief: Option<BeliefState>,
    /// Per-moment cell knowledge since the belief was first built.
    knowledge: Vec<[CellKnowledge; 9]>,
    knowledge_records: Vec<StepRecord>,
    ended: Option<Outcome>,
    completed: Vec<(Board, Outcome)>,
    /// Known marks of positions seen mid-set, unknown cells left empty.
    running: HashSet<Board>,
    discovery: Discovery,
    stable: usize,
    consolidate_start: u64,
    converged: bool,
    formulas: Vec<FormulaReport>,
    search: Option<ExactSearch>,
    pending: VecDeque<Move>,
    exploit_sets: u64,
    contradictions: u64,
    phase_starts: Vec<(AgentPhase, u64)>,
}

impl Agent {
    pub fn new(seed: u64, budgets: Budgets) -> Self {
        Agent {
            budgets,
            config: InductionConfig::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            phase: AgentPhase::Explore,
            history: Vec::new(),
            last_move: None,
            seen: Cell::Empty,
            constant_rules: Vec::new(),
            explore_limit: budgets.explore,
            extended: false,
            failure: None,
            level1: None,
            tracker: None,
            belief: None,
            knowledge: Vec::new(),
            knowledge_records: Vec::new(),
            ended: None,
            completed: Vec::new(),
            running: HashSet::new(),
            discovery: Discovery::default(),
            stable: 0,
            consolidate_start: 0,
            converged: false,
            formulas: Vec::new(),
            search: None,
            pending: VecDeque::new(),
            exploit_sets: 0,
            contradictions: 0,
            phase_starts: vec![(AgentPhase::Explore, 0)],
        }
    }

    pub fn phase(&self) -> AgentPhase {
        self.phase
    }

    pub fn steps(&self) -> u64 {
        self.history.len() as u64
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn failure(&self) -> Option<&AgentError> {
        self.failure.as_ref()
    }

    pub fn level1(&self) -> Option<&Level1Model> {
        self.level1.as_ref()
    }

    pub fn belief(&self) -> Option<&BeliefState> {
        self.belief.as_ref()
    }

    pub fn winning_lines(&self) -> Option<&WinningLines> {
        self.search.as_ref().map(|s| s.lines())
    }

    pub fn discovery(&self) -> &Discovery {
        &self.discovery
    }

    pub fn constant_rules(&self) -> &[ConstantRule] {
        &self.constant_rules
    }

    pub fn exploit_sets(&self) -> u64 {
        self.exploit_sets
    }

    pub fn contradictions(&self) -> u64 {
        self.contradictions
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Step index at which each phase was entered, in order.
    pub fn phase_starts(&self) -> &[(AgentPhase, u64)] {
        &self.phase_starts
    }

    /// Takes the lamps produced by the previous move and returns the next
    /// move. The first call receives the initial view.
    pub fn act(&mut self, observation: LampView) -> Move {
        if let Some(mv) = self.last_move.take() {
            self.observe(mv, observation);
        }
        self.seen = observation.seen_cell();
        let mv = self.choose();
        self.last_move = Some(mv);
        mv
    }

    fn enter(&mut self, phase: AgentPhase) {
        self.phase = phase;
        self.phase_starts.push((phase, self.steps()));
    }

    fn observe(&mut self, mv: Move, lamps: LampView) {
        let record = StepRecord { t: self.steps(), mv, lamps };
        self.history.push(record);
        if self.phase == AgentPhase::Explore {
            if self.steps().is_multiple_of(self.budgets.rule_refresh) {
                self.constant_rules = mine_constant_rules(&self.history, self.config);
            }
            if self.failure.is_none() && self.steps() >= self.explore_limit {
                self.try_induce();
            }
            return;
        }
        self.track(record);
        match self.phase {
            AgentPhase::ConsolidateModel => self.check_convergence(),
            AgentPhase::Exploit => {
                if lamps.outcome() != Outcome::None {
                    self.exploit_sets += 1;
                }
            }
            AgentPhase::Explore => {}
        }
    }

    fn try_induce(&mut self) {
        match induce_level1(&self.history, self.config) {
            Ok(model) => self.install(model),
            Err(_) if !self.extended => {
                self.extended = true;
                self.explore_limit += self.budgets.explore;
            }
            Err(source) => self.failure = Some(AgentError::Induction { steps: self.steps(), source }),
        }
    }

    /// Adopts a first-level model and rebuilds the belief from the whole
    /// history seen so far.
    fn install(&mut self, model: Level1Model) {
        self.constant_rules = model.constant_rules.clone();
        self.tracker = Some(model.tracker());
        self.level1 = Some(model);
        self.belief = Some(belief_init(Eye::START));
        self.knowledge = vec![known_cells(self.belief.as_ref().expect("just set"))];
        let history = std::mem::take(&mut self.history);
        for r in &history {
            self.track(*r);
        }
        self.history = history;
        self.consolidate_start = self.steps();
        self.enter(AgentPhase::ConsolidateModel);
        self.check_convergence();
    }

    /// Advances the first-level machines and the belief by one record.
    fn track(&mut self, r: StepRecord) {
        let model = self.level1.as_ref().expect("tracking needs a model");
        let tracker = self.tracker.as_mut().expect("tracking needs a model");
        tracker.advance(model, r.mv, &r.lamps);
        let reading = Level1Reading { eye: tracker.eye(model), over: tracker.is_over(model) };
        let lines = self.search.as_ref().map(|s| s.lines());
        let stepped = match &self.belief {
            Some(b) => Some(belief_step(b, r.mv, &r.lamps, reading, lines)),
            None if r.mv == Move::NewGame && !r.lamps.bad_move => Some(Ok(belief_init(reading.eye))),
            None => None,
        };
        self.belief = match stepped {
            Some(Ok(b)) => Some(b),
            Some(Err(BeliefError::ModelContradiction { .. })) => {
                self.contradictions += 1;
                self.pending.clear();
                if self.phase == AgentPhase::Exploit {
                    self.stable = 0;
                    self.consolidate_start = self.steps();
                    self.enter(AgentPhase::ConsolidateModel);
                }
                None
            }
            None => None,
        };
        self.knowledge.push(match &self.belief {
            Some(b) => known_cells(b),
            None => [CellKnowledge::Unknown; 9],
        });
        self.knowledge_records.push(r);

        if !r.lamps.bad_move && r.mv == Move::NewGame {
            self.ended = None;
        }
        if r.lamps.outcome() != Outcome::None {
            self.ended = Some(r.lamps.outcome());
        }
        if let Some(b) = &self.belief {
            if !b.over && r.lamps.outcome() == Outcome::None {
                let known = known_cells(b);
                let marks = Board(known.map(|k| match k {
                    CellKnowledge::Cross => Cell::Cross,
                    CellKnowledge::O => Cell::O,
                    _ => Cell::Empty,
                }));
                if marks.count(Cell::Cross) >= 3 || marks.count(Cell::O) >= 3 {
                    self.running.insert(marks);
                }
            }
        }
        if let (Some(outcome), Some(b)) = (self.ended, &self.belief) {
            if b.is_resolved() {
                self.completed.push((b.candidates()[0], outcome));
                self.ended = None;
                let before = std::mem::take(&mut self.discovery.accepted);
                let mut evidence = self.completed.clone();
                let mut running: Vec<Board> = self.running.iter().copied().collect();
                running.sort_unstable();
                evidence.extend(running.into_iter().map(|b| (b, Outcome::None)));
                self.discovery = discover_winning_sets(&evidence);
                if self.discovery.accepted == before {
                    self.stable += 1;
                } else {
                    self.stable = 0;
                }
            }
        }
    }

    fn check_convergence(&mut self) {
        let enough = self.completed.len() >= self.budgets.min_sets
            && self.stable >= self.budgets.stable_sets
            && self.discovery.unexplained == 0
            && self.discovery.undecided.is_empty();
        let out_of_time = self.steps() - self.consolidate_start >= self.budgets.consolidate_max;
        if !(enough || out_of_time) {
            return;
        }
        self.converged = enough;
        let history = CellHistory { boards: self.knowledge.clone(), records: self.knowledge_records.clone() };
        self.formulas = standard_formula_suite()
            .iter()
            .map(|f| FormulaReport::new(f, &eval_formula(f, &history)))
            .collect();
        let lines = WinningLines::from_sets(&self.discovery.accepted);
        self.search = Some(ExactSearch::new(lines, Side::Cross, Opponent::Random));
        self.pending.clear();
        self.enter(AgentPhase::Exploit);
    }

    fn predicted_bad(&self, mv: Move) -> bool {
        match (&self.level1, &self.tracker) {
            (Some(model), Some(at)) => model.predicts_bad(at, self.seen, mv),
            _ => self
                .constant_rules
                .iter()
                .any(|r| r.action == mv && r.prediction.on && r.seen.matches(self.seen)),
        }
    }

    fn random_move(&mut self, pool: &[Move]) -> Move {
        let allowed: Vec<Move> = pool.iter().copied().filter(|&m| !self.predicted_bad(m)).collect();
        match allowed.choose(&mut self.rng) {
            Some(&m) => m,
            None => pool[self.rng.gen_range(0..pool.len())],
        }
    }

    fn choose(&mut self) -> Move {
        if self.phase == AgentPhase::Explore || self.failure.is_some() {
            return self.random_move(&Move::ALL);
        }
        if let Some(mv) = self.pending.pop_front() {
            return mv;
        }
        let Some(b) = self.belief.clone() else {
            // Lost track of the board: play on blindly until the set ends.
            let over = self.tracker.zip(self.level1.as_ref()).is_some_and(|(t, m)| t.is_over(m));
            if over {
                return Move::NewGame;
            }
            return self.random_move(&[Move::Left, Move::Right, Move::Up, Move::Down, Move::PutCross]);
        };
        let step = match (self.phase, self.search.as_mut()) {
            (AgentPhase::Exploit, Some(search)) => plan(&b, search),
            _ => self.consolidate_macro(&b),
        };
        self.pending.extend(step.expansion);
        match self.pending.pop_front() {
            Some(mv) => mv,
            // Observing the cell under the eye: any harmless look will do.
            None => self.random_move(&[Move::Left, Move::Right, Move::Up, Move::Down]),
        }
    }

    /// Random marking that still resolves each final board before moving on.
    fn consolidate_macro(&mut self, b: &BeliefState) -> MacroAction {
        let known = known_cells(b);
        let unknown = (0..9u8).filter(|&i| known[i as usize] == CellKnowledge::Unknown);
        if b.over {
            if self.ended.is_some() && !b.is_resolved() {
                if let Some(cell) = nearest(b.eye, unknown) {
                    return MacroAction::observe(b.eye, cell);
                }
            }
            return MacroAction::new_game();
        }
        let free: Vec<u8> = (0..9u8).filter(|&i| known[i as usize] == CellKnowledge::Empty).collect();
        match free.choose(&mut self.rng) {
            Some(&cell) => MacroAction::mark(b.eye, cell),
            None => MacroAction::observe(b.eye, nearest(b.eye, unknown).unwrap_or(b.eye.cell())),
        }
    }

    pub fn model(&self) -> ModelDocument {
        let mut doc = ModelDocument::empty();
        doc.phase = self.phase;
        doc.steps = self.steps();
        doc.constant_rules = self.constant_rules.clone();
        if let Some(m) = &self.level1 {
            doc.automata = AutomatonView::from_level1(m);
        }
        doc.formulas = self.formulas.clone();
        doc.winning_sets = self.discovery.accepted.clone();
        doc.undecided_sets = self.discovery.undecided.len();
        doc.completed_sets = self.completed.len();
        doc.belief = self.belief.as_ref().map(BeliefSnapshot::from);
        doc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCard {
    pub phase: AgentPhase,
    pub card: ScoreCard,
}

#[derive(Clone, Debug)]
pub struct LifecycleReport {
    pub model: ModelDocument,
    /// One card per 1000 steps.
    pub timeline: Vec<ScoreCard>,
    pub phases: Vec<PhaseCard>,
    pub trace: Trace,
    pub converged: bool,
    pub contradictions: u64,
}

impl LifecycleReport {
    /// Totals over every Exploit stretch.
    pub fn exploit(&self) -> ScoreCard {
        let mut total = ScoreCard::default();
        for p in self.phases.iter().filter(|p| p.phase == AgentPhase::Exploit) {
            total.add(&p.card);
        }
        total
    }
}

pub const TIMELINE_WINDOW: u64 = 1_000;

/// Timeline windows of `width` steps covering the trace.
pub fn timeline(records: &[StepRecord], width: u64) -> Vec<ScoreCard> {
    let n = records.len() as u64;
    (0..n.div_ceil(width)).map(|k| score(records, k * width..((k + 1) * width).min(n))).collect()
}

/// When a run ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    /// After this many sets played in Exploit.
    ExploitSets(u64),
    /// After this many steps, whatever the phase.
    Steps(u64),
}

/// Runs a fresh agent against World 2 until it has played
/// `budgets.exploit_sets` sets in Exploit.
pub fn lifecycle(seed: u64, budgets: Budgets) -> Result<LifecycleReport, AgentError> {
    run_agent(WorldId::Two, seed, budgets, Stop::ExploitSets(budgets.exploit_sets))
}

/// Runs a fresh agent on a world seeded with `seed` until `stop`.
pub fn run_agent(world_id: WorldId, seed: u64, budgets: Budgets, stop: Stop) -> Result<LifecycleReport, AgentError> {
    let mut state = world::initial_state(seed);
    let mut agent = Agent::new(seed ^ 0x5EED_A9E7, budgets);
    let mut trace = Trace::new(world_id, seed);
    let mut lamps = world::initial_view(&state);
    let limit = match stop {
        Stop::ExploitSets(n) => 2 * budgets.explore + 2 * budgets.consolidate_max + 200 * n,
        Stop::Steps(n) => n,
    };
    loop {
        if let Some(e) = agent.failure.take() {
            return Err(e);
        }
        let done = match stop {
            Stop::ExploitSets(n) => agent.exploit_sets() >= n,
            Stop::Steps(n) => trace.len() as u64 >= n,
        };
        if done {
            break;
        }
        if trace.len() as u64 >= limit {
            return Err(AgentError::StepLimit { steps: agent.steps(), phase: agent.phase() });
        }
        let mv = agent.act(lamps);
        let (next, seen) = world::step(&state, mv);
        state = next;
        lamps = seen;
        trace.push(mv, lamps);
    }
    // Deliver the last observation so the agent's history matches the trace.
    if let Some(last) = agent.last_move.take() {
        agent.observe(last, lamps);
    }
    let records = trace.records();
    let starts = agent.phase_starts();
    let phases = starts
        .iter()
        .enumerate()
        .map(|(i, &(phase, from))| {
            let to = starts.get(i + 1).map_or(records.len() as u64, |&(_, s)| s);
            PhaseCard { phase, card: score(records, from..to) }
        })
        .collect();
    Ok(LifecycleReport {
        model: agent.model(),
        timeline: timeline(records, TIMELINE_WINDOW),
        phases,
        converged: agent.converged(),
        contradictions: agent.contradictions(),
        trace,
    })
}
