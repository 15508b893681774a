#![allow(dead_code)]

use lampworld::planner::navigate;
use lampworld::trace::{StepRecord, Trace, WorldId};
use lampworld::world::{self, Board, Cell, Eye, Move, Phase, Variant, WorldState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A simulated run: `states[0]` is the start, `states[i + 1]` follows
/// `records[i]`.
pub struct Run {
    pub trace: Trace,
    pub states: Vec<WorldState>,
}

impl Run {
    fn new(seed: u64) -> Self {
        Run { trace: Trace::new(WorldId::Two, seed), states: vec![world::initial_state(seed)] }
    }

    pub fn records(&self) -> &[StepRecord] {
        self.trace.records()
    }

    pub fn state(&self) -> &WorldState {
        self.states.last().unwrap()
    }

    pub fn boards_after(&self) -> Vec<Board> {
        self.states[1..].iter().map(|s| s.board).collect()
    }

    fn step(&mut self, mv: Move, variant: Variant) -> StepRecord {
        let (next, lamps) = world::step_variant(self.state(), mv, variant);
        self.states.push(next);
        self.trace.push(mv, lamps)
    }
}

fn policy_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xC0FFEE)
}

/// Uniformly random moves over all eight codes.
pub fn random_run(seed: u64, steps: usize) -> Run {
    let mut rng = policy_rng(seed);
    let mut run = Run::new(seed);
    for _ in 0..steps {
        run.step(Move::ALL[rng.gen_range(0..8)], Variant::Standard);
    }
    run
}

/// Random moves with `put_share` of them forced to PutCross, which fills
/// boards faster than uniform play.
pub fn cross_heavy_run(seed: u64, steps: usize, put_share: f64) -> Run {
    let mut rng = policy_rng(seed);
    let mut run = Run::new(seed);
    for _ in 0..steps {
        let mv = if rng.gen_bool(put_share) { Move::PutCross } else { Move::ALL[rng.gen_range(0..8)] };
        run.step(mv, Variant::Standard);
    }
    run
}

/// Legal play: walk to a random empty cell and cross it, start a new game
/// when a set ends. Stops after `sets` finished sets.
pub fn play_sets(seed: u64, sets: usize, variant: Variant) -> Run {
    let mut rng = policy_rng(seed);
    let mut run = Run::new(seed);
    let mut done = 0;
    while done < sets {
        if run.state().phase == Phase::Over {
            run.step(Move::NewGame, variant);
            done += 1;
            continue;
        }
        let empty: Vec<u8> = run.state().board.empty_cells().collect();
        let target = empty[rng.gen_range(0..empty.len())];
        for mv in navigate(run.state().eye, Eye::from_cell(target)) {
            run.step(mv, variant);
            if run.state().phase == Phase::Over {
                break;
            }
        }
        if run.state().phase == Phase::Playing && run.state().board.get(target) == Cell::Empty {
            run.step(Move::PutCross, variant);
        }
    }
    run
}

/// Plain-array board: 0 empty, 1 cross, 2 o.
pub fn cells(b: &Board) -> [u8; 9] {
    let mut out = [0u8; 9];
    for (i, c) in out.iter_mut().enumerate() {
        *c = match b.get(i as u8) {
            Cell::Empty => 0,
            Cell::Cross => 1,
            Cell::O => 2,
        };
    }
    out
}

pub fn board_of(c: &[u8; 9]) -> Board {
    let mut b = Board::empty();
    for (i, &v) in c.iter().enumerate() {
        b.set(i as u8, [Cell::Empty, Cell::Cross, Cell::O][v as usize]);
    }
    b
}

/// Every assignment of three marks to nine cells.
pub fn all_boards() -> impl Iterator<Item = [u8; 9]> {
    (0..3u32.pow(9)).map(|mut n| {
        let mut c = [0u8; 9];
        for v in c.iter_mut() {
            *v = (n % 3) as u8;
            n /= 3;
        }
        c
    })
}

/// Rows, columns and diagonals written out by coordinates.
pub fn geometric_lines() -> Vec<[u8; 3]> {
    let id = |col: u8, row: u8| row * 3 + col;
    let mut out = Vec::new();
    for k in 0..3 {
        out.push([id(0, k), id(1, k), id(2, k)]);
        out.push([id(k, 0), id(k, 1), id(k, 2)]);
    }
    out.push([id(0, 0), id(1, 1), id(2, 2)]);
    out.push([id(2, 0), id(1, 1), id(0, 2)]);
    out.iter_mut().for_each(|l| l.sort_unstable());
    out.sort_unstable();
    out
}

pub fn has_line(c: &[u8; 9], mark: u8) -> bool {
    geometric_lines().iter().any(|l| l.iter().all(|&i| c[i as usize] == mark))
}

pub type Q = num_rational::Ratio<i64>;

/// Plain recursive game value with `me` to move: +1 win, -1 loss, 0 draw.
/// Ties go to the smallest cell.
pub fn oracle_value(c: &[u8; 9], me: u8, random_reply: bool) -> (Q, Option<u8>) {
    let mut best: Option<(Q, u8)> = None;
    for i in 0..9u8 {
        if c[i as usize] != 0 {
            continue;
        }
        let mut next = *c;
        next[i as usize] = me;
        let v = oracle_after_me(&next, me, random_reply);
        match best {
            Some((bv, _)) if bv >= v => {}
            _ => best = Some((v, i)),
        }
    }
    match best {
        Some((v, i)) => (v, Some(i)),
        None => (Q::from_integer(0), None),
    }
}

fn oracle_after_me(c: &[u8; 9], me: u8, random_reply: bool) -> Q {
    let them = 3 - me;
    if has_line(c, me) {
        return Q::from_integer(1);
    }
    let free: Vec<usize> = (0..9).filter(|&i| c[i] == 0).collect();
    if free.is_empty() {
        return Q::from_integer(0);
    }
    let values: Vec<Q> = free
        .iter()
        .map(|&i| {
            let mut next = *c;
            next[i] = them;
            if has_line(&next, them) {
                Q::from_integer(-1)
            } else if next.iter().all(|&v| v != 0) {
                Q::from_integer(0)
            } else {
                oracle_value(&next, me, random_reply).0
            }
        })
        .collect();
    if random_reply {
        values.iter().copied().sum::<Q>() / Q::from_integer(values.len() as i64)
    } else {
        values.into_iter().min().unwrap()
    }
}
