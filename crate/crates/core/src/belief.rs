//! Second-level board tracking.
//!
//! Each cell behaves like a small nondeterministic automaton (empty, cross,
//! O) whose transitions are conditioned on the first-level machines: a
//! successful put-cross while the eye is on the cell makes it a cross, Tom's
//! reply turns some empty cell into an O, and a new game empties them all.
//! Instead of nine independent cell automata the tracker keeps the exact
//! set of boards consistent with everything seen since the last new game,
//! which keeps the "exactly one O per reply" correlation intact. The
//! per-cell view is [`known_cells`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::WinningLines;
use crate::world::{Board, Cell, Eye, LampView, Move, Outcome, Side};

/// Upper bound on candidates within one set: at most four unobserved
/// replies with at most 8, 7, 6 and 5 choices.
pub const MAX_CANDIDATES: usize = 8 * 7 * 6 * 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKnowledge {
    Empty,
    Cross,
    O,
    Unknown,
}

impl CellKnowledge {
    pub fn of(cell: Cell) -> Self {
        match cell {
            Cell::Empty => CellKnowledge::Empty,
            Cell::Cross => CellKnowledge::Cross,
            Cell::O => CellKnowledge::O,
        }
    }

    pub fn of_board(board: &Board) -> [CellKnowledge; 9] {
        board.0.map(CellKnowledge::of)
    }

    /// Whether the cell holds `mark`, if known.
    pub fn is(self, mark: Cell) -> Option<bool> {
        match self {
            CellKnowledge::Unknown => None,
            k => Some(k == CellKnowledge::of(mark)),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            CellKnowledge::Empty => '.',
            CellKnowledge::Cross => 'X',
            CellKnowledge::O => 'O',
            CellKnowledge::Unknown => '?',
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BeliefError {
    #[error("model contradiction: no board explains {mv} -> {lamps}")]
    ModelContradiction { mv: Move, lamps: LampView },
}

/// First-level reading after a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Level1Reading {
    pub eye: Eye,
    pub over: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefState {
    candidates: Vec<Board>,
    pub eye: Eye,
    pub over: bool,
}

/// Fresh belief at the start of a set: one empty board.
pub fn belief_init(eye: Eye) -> BeliefState {
    BeliefState { candidates: vec![Board::empty()], eye, over: false }
}

impl BeliefState {
    pub fn candidates(&self) -> &[Board] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn is_resolved(&self) -> bool {
        self.candidates.len() == 1
    }

    pub fn contains(&self, board: &Board) -> bool {
        self.candidates.binary_search(board).is_ok()
    }
}

fn outcome_fits(board: &Board, outcome: Outcome, lines: &WinningLines) -> bool {
    let x = lines.wins(board, Side::Cross);
    let o = lines.wins(board, Side::O);
    match outcome {
        Outcome::Victory => x && !o,
        Outcome::Loss => o && !x,
        Outcome::Draw => !x && !o && board.is_full(),
        Outcome::None => !x && !o && !board.is_full(),
    }
}

/// Successors of one board after the agent's cross at `at`, given the
/// announced outcome. Tom replies unless the cross itself ended the set.
fn after_cross(board: &Board, at: u8, outcome: Outcome, out: &mut Vec<Board>) {
    if board.get(at) != Cell::Empty {
        return;
    }
    let crossed = board.with(at, Cell::Cross);
    let tom_moves = matches!(outcome, Outcome::None | Outcome::Loss | Outcome::Draw);
    let no_reply = matches!(outcome, Outcome::Victory | Outcome::Draw);
    if no_reply && (outcome != Outcome::Draw || crossed.is_full()) {
        out.push(crossed);
    }
    if tom_moves {
        for e in crossed.empty_cells() {
            let replied = crossed.with(e, Cell::O);
            if outcome != Outcome::Draw || replied.is_full() {
                out.push(replied);
            }
        }
    }
}

/// Advances the belief by one observed step.
///
/// `lines`, once known, also prunes boards whose final position does not
/// explain the announced outcome.
pub fn belief_step(
    b: &BeliefState,
    mv: Move,
    lamps: &LampView,
    l1: Level1Reading,
    lines: Option<&WinningLines>,
) -> Result<BeliefState, BeliefError> {
    let outcome = lamps.outcome();
    let mut next: Vec<Board> = if lamps.bad_move {
        b.candidates.clone()
    } else {
        match mv {
            Move::NewGame => vec![Board::empty()],
            Move::PutCross => {
                let at = b.eye.cell();
                let mut out = Vec::with_capacity(b.candidates.len() * 8);
                for c in &b.candidates {
                    after_cross(c, at, outcome, &mut out);
                }
                if let Some(lines) = lines {
                    out.retain(|c| outcome_fits(c, outcome, lines));
                }
                out.sort_unstable();
                out.dedup();
                out
            }
            _ => b.candidates.clone(),
        }
    };
    let seen = lamps.seen_cell();
    let at = l1.eye.cell();
    next.retain(|c| c.get(at) == seen);
    if next.is_empty() {
        return Err(BeliefError::ModelContradiction { mv, lamps: *lamps });
    }
    Ok(BeliefState { candidates: next, eye: l1.eye, over: l1.over })
}

/// Per-cell projection: a cell is labelled iff every candidate agrees.
pub fn known_cells(b: &BeliefState) -> [CellKnowledge; 9] {
    let first = b.candidates[0];
    let mut out = CellKnowledge::of_board(&first);
    for c in &b.candidates[1..] {
        for i in 0..9 {
            if out[i] != CellKnowledge::Unknown && c.0[i] != first.0[i] {
                out[i] = CellKnowledge::Unknown;
            }
        }
    }
    out
}

/// Compact summary for inspection views.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub candidates: usize,
    /// Rows top to bottom, `.` empty, `X`, `O`, `?` unknown.
    pub known_cells: String,
    pub eye: Eye,
    pub over: bool,
}

impl From<&BeliefState> for BeliefSnapshot {
    fn from(b: &BeliefState) -> Self {
        BeliefSnapshot {
            candidates: b.len(),
            known_cells: known_cells(b).iter().map(|k| k.symbol()).collect(),
            eye: b.eye,
            over: b.over,
        }
    }
}
