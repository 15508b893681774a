//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::time::Instant;

use common::{board_of, cells, cross_heavy_run, geometric_lines, oracle_value, play_sets, random_run, Q};
use lampworld::agent::{lifecycle, Budgets};
use lampworld::belief::{belief_init, belief_step, Level1Reading, MAX_CANDIDATES};
use lampworld::induction::{induce_level1, InductionConfig, Level1Model, Seen};
use lampworld::planner::{expectimax, minimax};
use lampworld::rules::{discover_winning_sets, eval_formula, standard_formula_suite, CellHistory, WinningLines};
use lampworld::trace::{replay, Recorder, Trace, Verdict, WorldId};
use lampworld::world::{self, Board, Cell, Eye, Move, Outcome, Phase, Side, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INVARIANT_STEPS: usize = 100_000;
const INVARIANT_SEEDS: u64 = 10;
const REPLAY_TRACES: u64 = 100;
const REPLAY_LEN: usize = 2_000;
const INDUCTION_SEED: u64 = 7;
const INDUCTION_STEPS: usize = 20_000;
const HELD_OUT_STEPS: usize = 5_000;
const BELIEF_STEPS: usize = 10_000;
const BELIEF_SEEDS: u64 = 5;
const FORMULA_SETS: usize = 100;
const DISCOVERY_SETS: usize = 500;
const DISCOVERY_SEEDS: [u64; 3] = [1, 2, 3];
const PLANNER_MAX_EMPTY: usize = 4;
const LIFECYCLE_SEED: u64 = 7;
const EXPLORE_BUDGET: u64 = 20_000;
const EXPLOIT_SETS: u64 = 1_000;
const VICTORY_TOLERANCE: f64 = 0.02;

type Criterion = fn() -> Result<String, String>;

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn report(&mut self, name: &str, started: Instant, result: Result<String, String>) {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {name}: {detail} ({secs:.1}s)");
            }
        }
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulator_invariants() -> Result<String, String> {
    let mut violations = Vec::new();
    let mut bad_steps = 0u64;
    let mut resets = 0u64;
    for seed in 0..INVARIANT_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let mut s = world::initial_state(seed);
        for t in 0..INVARIANT_STEPS {
            let mv = Move::ALL[rng.gen_range(0..8)];
            let (next, lamps) = world::step(&s, mv);
            if lamps.bad_move {
                bad_steps += 1;
                if next != s {
                    violations.push(format!("seed {seed} t {t}: bad move changed the state"));
                }
            }
            if lamps.cross && lamps.o {
                violations.push(format!("seed {seed} t {t}: cross and o both lit"));
            }
            if mv == Move::NewGame && !lamps.bad_move {
                resets += 1;
                if next.board != Board::empty() {
                    violations.push(format!("seed {seed} t {t}: new game left marks"));
                }
            }
            let diff = next.board.count(Cell::Cross) as i64 - next.board.count(Cell::O) as i64;
            if !(0..=1).contains(&diff) {
                violations.push(format!("seed {seed} t {t}: cross minus o is {diff}"));
            }
            s = next;
        }
    }
    check(
        violations.is_empty() && resets > 0,
        format!(
            "{} steps, {bad_steps} bad, {resets} resets, {} violations{}",
            INVARIANT_STEPS as u64 * INVARIANT_SEEDS,
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

fn replay_determinism() -> Result<String, String> {
    let mut divergent = Vec::new();
    for seed in 0..REPLAY_TRACES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let mut rec = Recorder::new(WorldId::Two, seed);
        for _ in 0..REPLAY_LEN {
            rec.step(Move::ALL[rng.gen_range(0..8)]);
        }
        let text = rec.trace().to_jsonl();
        let loaded = Trace::from_jsonl(&text).map_err(|e| e.to_string())?;
        if replay(&loaded) != Verdict::Consistent {
            divergent.push(seed);
        }
    }
    check(divergent.is_empty(), format!("{REPLAY_TRACES} traces of {REPLAY_LEN} steps, divergent seeds {divergent:?}"))
}

fn level1_induction() -> Result<String, String> {
    let run = random_run(INDUCTION_SEED, INDUCTION_STEPS + HELD_OUT_STEPS);
    let records = run.records();
    let model = induce_level1(&records[..INDUCTION_STEPS], InductionConfig::default()).map_err(|e| e.to_string())?;
    let mut at = model.tracker();
    let mut mismatches = 0usize;
    for (t, r) in records.iter().enumerate() {
        at.advance(&model, r.mv, &r.lamps);
        let truth = &run.states[t + 1];
        let held_out = t >= INDUCTION_STEPS;
        if held_out && (at.eye(&model) != truth.eye || at.is_over(&model) != (truth.phase == Phase::Over)) {
            mismatches += 1;
        }
    }
    let mut missing = Vec::new();
    let bad_rule = |seen: Seen, action: Move| {
        model.constant_rules.iter().any(|r| r.seen == seen && r.action == action && r.prediction.on)
    };
    for (seen, action) in [(Seen::Any, Move::Unused6), (Seen::Any, Move::Unused7), (Seen::Cross, Move::PutCross), (Seen::O, Move::PutCross)] {
        if !bad_rule(seen, action) {
            missing.push(format!("{seen:?}/{action}"));
        }
    }
    let state_with = |labels: &[u8], want: u8| labels.iter().position(|&l| l == want).map(|s| s as u8);
    let automaton_rules = [
        (&model.column, state_with(&model.column_of, 1), Move::Left),
        (&model.column, state_with(&model.column_of, 3), Move::Right),
        (&model.row, state_with(&model.row_of, 1), Move::Up),
        (&model.row, state_with(&model.row_of, 3), Move::Down),
        (&model.game_over, Some(model.over_state), Move::PutCross),
        (&model.game_over, Some(1 - model.over_state), Move::NewGame),
    ];
    for (a, state, action) in automaton_rules {
        let found = state.and_then(|s| a.rule(s, action)).is_some_and(|r| r.prediction.on);
        if !found {
            missing.push(format!("{action} in state {state:?}"));
        }
    }
    let shape = (model.column.n_states, model.row.n_states, model.game_over.n_states);
    check(
        mismatches == 0 && missing.is_empty() && shape == (3, 3, 2),
        format!(
            "states {shape:?}, {mismatches} held-out mismatches over {HELD_OUT_STEPS} steps, {} constant rules, missing bad-move rules {missing:?}",
            model.constant_rules.len()
        ),
    )
}

fn belief_soundness() -> Result<String, String> {
    let model = Level1Model::ground_truth();
    let lines = WinningLines::geometric();
    let mut max_candidates = 0usize;
    let mut misses = 0usize;
    let mut contradictions = 0usize;
    for seed in 0..BELIEF_SEEDS {
        let run = cross_heavy_run(seed + 500, BELIEF_STEPS, 0.4);
        let mut at = model.tracker();
        let mut b = belief_init(Eye::START);
        for (t, r) in run.records().iter().enumerate() {
            at.advance(&model, r.mv, &r.lamps);
            let reading = Level1Reading { eye: at.eye(&model), over: at.is_over(&model) };
            match belief_step(&b, r.mv, &r.lamps, reading, Some(&lines)) {
                Ok(next) => b = next,
                Err(_) => {
                    contradictions += 1;
                    b = belief_init(reading.eye);
                    continue;
                }
            }
            max_candidates = max_candidates.max(b.len());
            if !b.contains(&run.states[t + 1].board) {
                misses += 1;
            }
        }
    }
    check(
        misses == 0 && contradictions == 0 && max_candidates <= MAX_CANDIDATES,
        format!(
            "{BELIEF_SEEDS} runs of {BELIEF_STEPS} steps, truth missing {misses} times, {contradictions} contradictions, max candidates {max_candidates} (bound {MAX_CANDIDATES})"
        ),
    )
}

fn history(run: &common::Run) -> CellHistory {
    CellHistory::from_boards(run.states[0].board, &run.boards_after(), run.records())
}

fn formula_suite() -> Result<String, String> {
    let suite = standard_formula_suite();
    let standard = play_sets(11, FORMULA_SETS, Variant::Standard);
    let h = history(&standard);
    let mut problems = Vec::new();
    for f in &suite {
        let v = eval_formula(f, &h);
        if !v.holds() || !v.insufficient.is_empty() || v.checked != h.moments() {
            problems.push(format!("{} fails on the standard world", f.name));
        }
    }
    let targets: [(Variant, &[&str]); 3] = [
        (Variant::TwoO, &["one_o_per_moment"]),
        (Variant::SpontaneousO, &["o_answers_cross"]),
        (Variant::NonPersistent, &["o_persists", "cross_persists"]),
    ];
    for (variant, names) in targets {
        let run = play_sets(12, FORMULA_SETS, variant);
        let h = history(&run);
        let boards: Vec<Board> = std::iter::once(run.states[0].board).chain(run.boards_after()).collect();
        for name in names {
            let f = suite.iter().find(|f| f.name == *name).unwrap();
            match eval_formula(f, &h).counterexample {
                None => problems.push(format!("{variant:?} does not falsify {name}")),
                Some(cx) => {
                    let (before, after) = (boards[cx.t as usize - 1], boards[cx.t as usize]);
                    let r = &run.records()[cx.t as usize - 1];
                    let concrete = match *name {
                        "one_o_per_moment" => {
                            cx.a != cx.b
                                && [cx.a, cx.b].iter().all(|&c| before.get(c) != Cell::O && after.get(c) == Cell::O)
                        }
                        "o_answers_cross" => {
                            before.get(cx.a) != Cell::O
                                && after.get(cx.a) == Cell::O
                                && (r.mv != Move::PutCross || r.lamps.bad_move)
                        }
                        "o_persists" => before.get(cx.a) == Cell::O && after.get(cx.a) != Cell::O && r.mv != Move::NewGame,
                        _ => before.get(cx.a) == Cell::Cross && after.get(cx.a) != Cell::Cross && r.mv != Move::NewGame,
                    };
                    if !concrete {
                        problems.push(format!("{variant:?}/{name} counterexample {cx:?} does not hold on the true boards"));
                    }
                }
            }
        }
    }
    check(problems.is_empty(), format!("{} formulas on {FORMULA_SETS} sets, 3 mutant worlds; problems {problems:?}", suite.len()))
}

fn winning_set_discovery() -> Result<String, String> {
    let truth = geometric_lines();
    let mut details = Vec::new();
    let mut ok = true;
    for seed in DISCOVERY_SEEDS {
        let run = play_sets(seed + 100, DISCOVERY_SETS, Variant::Standard);
        let mut evidence: Vec<(Board, Outcome)> = Vec::new();
        for (r, s) in run.records().iter().zip(&run.states[1..]) {
            if r.mv != Move::PutCross || r.lamps.bad_move {
                continue;
            }
            // a finished set shows its final board with the flashed outcome;
            // any other cross shows a position nobody has won yet
            evidence.push((s.board, r.lamps.outcome()));
        }
        let d = discover_winning_sets(&evidence);
        let side_lines = |side: Side| {
            let mut v: Vec<[u8; 3]> = d.accepted.iter().filter(|w| w.side == side).map(|w| w.cells).collect();
            v.sort_unstable();
            v
        };
        let exact = side_lines(Side::Cross) == truth && side_lines(Side::O) == truth && d.unexplained == 0;
        ok &= exact;
        details.push(format!(
            "seed {seed}: {}x/{}o accepted, {} undecided",
            side_lines(Side::Cross).len(),
            side_lines(Side::O).len(),
            d.undecided.len()
        ));
    }
    check(ok, format!("{DISCOVERY_SETS} sets each; {}", details.join("; ")))
}

fn planner_exactness() -> Result<String, String> {
    let lines = WinningLines::geometric();
    let mut tested = 0usize;
    let mut mismatches = Vec::new();
    let mut below = 0usize;
    for c in common::all_boards() {
        let empty = c.iter().filter(|&&v| v == 0).count();
        let (x, o) = (c.iter().filter(|&&v| v == 1).count(), c.iter().filter(|&&v| v == 2).count());
        if empty > PLANNER_MAX_EMPTY || empty == 0 || common::has_line(&c, 1) || common::has_line(&c, 2) {
            continue;
        }
        let (side, me) = match x as i64 - o as i64 {
            0 => (Side::Cross, 1),
            1 => (Side::O, 2),
            _ => continue,
        };
        let b = board_of(&c);
        let e: (Q, Option<u8>) = expectimax(&b, side, &lines);
        let m: (Q, Option<u8>) = minimax(&b, side, &lines);
        tested += 1;
        if e != oracle_value(&c, me, true) || m != oracle_value(&c, me, false) {
            mismatches.push(b.to_text());
        }
        if e.0 < m.0 {
            below += 1;
        }
    }
    let empty_minimax: (Q, Option<u8>) = minimax(&Board::empty(), Side::Cross, &lines);
    let round_trip = cells(&Board::empty()) == [0; 9];
    check(
        mismatches.is_empty() && below == 0 && empty_minimax.0 == Q::from_integer(0) && tested > 0 && round_trip,
        format!(
            "{tested} positions, {} mismatches{}, expectimax below minimax {below} times, minimax(empty) = {}",
            mismatches.len(),
            mismatches.first().map(|b| format!(" (first {b})")).unwrap_or_default(),
            empty_minimax.0
        ),
    )
}

fn end_to_end() -> Result<String, String> {
    let (target, _) = oracle_value(&[0; 9], 1, true);
    let (planner_value, _): (Q, Option<u8>) = expectimax(&Board::empty(), Side::Cross, &WinningLines::geometric());
    if planner_value != target {
        return Err(format!("planner empty-board value {planner_value} differs from oracle {target}"));
    }
    let target = *target.numer() as f64 / *target.denom() as f64;
    let budgets = Budgets { explore: EXPLORE_BUDGET, exploit_sets: EXPLOIT_SETS, ..Budgets::default() };
    let report = lifecycle(LIFECYCLE_SEED, budgets).map_err(|e| e.to_string())?;
    let card = report.exploit();
    let rate = card.victories as f64 / card.sets().max(1) as f64;
    check(
        card.bad_moves == 0
            && card.losses == 0
            && card.sets() >= EXPLOIT_SETS
            && (rate - target).abs() <= VICTORY_TOLERANCE,
        format!(
            "{} exploit sets: {} victories, {} losses, {} draws, {} bad moves; victory rate {rate:.4} vs oracle {target:.4} (tolerance {VICTORY_TOLERANCE})",
            card.sets(),
            card.victories,
            card.losses,
            card.draws,
            card.bad_moves
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("simulator invariants", simulator_invariants),
        ("replay determinism", replay_determinism),
        ("level-1 induction", level1_induction),
        ("belief soundness", belief_soundness),
        ("formula suite", formula_suite),
        ("winning-set discovery", winning_set_discovery),
        ("planner exactness", planner_exactness),
        ("end-to-end", end_to_end),
    ];
    let mut verdicts = Verdicts { failed: 0 };
    for (name, run) in criteria {
        let started = Instant::now();
        verdicts.report(name, started, run());
    }
    if verdicts.failed > 0 {
        std::process::exit(1);
    }
}
