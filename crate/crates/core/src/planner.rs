//! Game-tree search over the learned model, lifted to eye-navigation
//! macros and belief states.
//!
//! The agent maximizes; the opponent either replies uniformly at random
//! (expectimax, the default since Tom is random) or adversarially
//! (minimax). Terminal values are +1 for a win, -1 for a loss and 0 for a
//! draw. Equal values break toward the smallest cell id. The tree is small
//! enough to search exactly, so there is no depth limit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::belief::{known_cells, BeliefState, CellKnowledge};
use crate::rules::WinningLines;
use crate::scalar::Scalar;
use crate::world::{Board, Cell, Eye, Move, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opponent {
    /// Uniformly random replies.
    Random,
    /// Replies minimizing the agent's value.
    Adversarial,
}

/// Memoized exact search for one side, opponent model and line set.
#[derive(Clone, Debug)]
pub struct Search<S> {
    lines: WinningLines,
    agent: Side,
    opponent: Opponent,
    memo: HashMap<Board, (S, Option<u8>)>,
}

impl<S: Scalar> Search<S> {
    pub fn new(lines: WinningLines, agent: Side, opponent: Opponent) -> Self {
        Search { lines, agent, opponent, memo: HashMap::new() }
    }

    pub fn lines(&self) -> &WinningLines {
        &self.lines
    }

    pub fn opponent(&self) -> Opponent {
        self.opponent
    }

    /// Value of `board` with the agent to move, and the move achieving it
    /// (`None` on a full board).
    pub fn best(&mut self, board: &Board) -> (S, Option<u8>) {
        if let Some(hit) = self.memo.get(board) {
            return hit.clone();
        }
        let mut best: Option<(S, u8)> = None;
        for cell in board.empty_cells() {
            let v = self.after_agent(&board.with(cell, self.agent.mark()));
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, cell));
            }
        }
        let result = match best {
            Some((v, c)) => (v, Some(c)),
            None => (S::zero(), None),
        };
        self.memo.insert(*board, result.clone());
        result
    }

    fn after_agent(&mut self, board: &Board) -> S {
        if self.lines.wins(board, self.agent) {
            return S::one();
        }
        if board.is_full() {
            return S::zero();
        }
        let replies: Vec<S> = board
            .empty_cells()
            .map(|e| self.after_opponent(&board.with(e, self.agent.other().mark())))
            .collect();
        match self.opponent {
            Opponent::Random => S::mean(replies),
            Opponent::Adversarial => replies
                .into_iter()
                .reduce(|a, b| if b < a { b } else { a })
                .expect("non-full board has a reply"),
        }
    }

    fn after_opponent(&mut self, board: &Board) -> S {
        if self.lines.wins(board, self.agent.other()) {
            return -S::one();
        }
        if board.is_full() {
            return S::zero();
        }
        self.best(board).0
    }
}

/// Expectimax against a uniformly random opponent.
pub fn expectimax<S: Scalar>(board: &Board, side: Side, lines: &WinningLines) -> (S, Option<u8>) {
    Search::new(lines.clone(), side, Opponent::Random).best(board)
}

/// Minimax against an adversarial opponent.
pub fn minimax<S: Scalar>(board: &Board, side: Side, lines: &WinningLines) -> (S, Option<u8>) {
    Search::new(lines.clone(), side, Opponent::Adversarial).best(board)
}

/// Shortest eye path: column moves first, then row moves.
pub fn navigate(from: Eye, to: Eye) -> Vec<Move> {
    let horizontal = if to.col > from.col { Move::Right } else { Move::Left };
    let vertical = if to.row > from.row { Move::Down } else { Move::Up };
    let mut path = vec![horizontal; from.col.abs_diff(to.col) as usize];
    path.extend(std::iter::repeat_n(vertical, from.row.abs_diff(to.row) as usize));
    path
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "cell", rename_all = "snake_case")]
pub enum MacroKind {
    ObserveCell(u8),
    MarkCell(u8),
    NewGame,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroAction {
    pub kind: MacroKind,
    pub expansion: Vec<Move>,
}

impl MacroAction {
    pub fn observe(eye: Eye, cell: u8) -> Self {
        MacroAction { kind: MacroKind::ObserveCell(cell), expansion: navigate(eye, Eye::from_cell(cell)) }
    }

    pub fn mark(eye: Eye, cell: u8) -> Self {
        let mut expansion = navigate(eye, Eye::from_cell(cell));
        expansion.push(Move::PutCross);
        MacroAction { kind: MacroKind::MarkCell(cell), expansion }
    }

    pub fn new_game() -> Self {
        MacroAction { kind: MacroKind::NewGame, expansion: vec![Move::NewGame] }
    }
}

/// Nearest cell (Manhattan, then smallest id) among `cells`.
pub fn nearest(eye: Eye, cells: impl IntoIterator<Item = u8>) -> Option<u8> {
    cells.into_iter().min_by_key(|&c| (eye.distance(Eye::from_cell(c)), c))
}

/// Picks the next macro for a belief. A finished set is restarted. If every
/// candidate board agrees on the best cell it is marked; otherwise the
/// nearest unknown cell that separates candidates with different best
/// cells is looked at first.
pub fn plan<S: Scalar>(b: &BeliefState, search: &mut Search<S>) -> MacroAction {
    if b.over {
        return MacroAction::new_game();
    }
    let choices: Vec<Option<u8>> = b.candidates().iter().map(|c| search.best(c).1).collect();
    if let Some(&Some(cell)) = choices.first() {
        if choices.iter().all(|&c| c == Some(cell)) {
            return MacroAction::mark(b.eye, cell);
        }
    }
    let known = known_cells(b);
    let unknown = (0..9u8).filter(|&i| known[i as usize] == CellKnowledge::Unknown);
    let relevant = unknown.filter(|&i| {
        let boards = b.candidates();
        boards.iter().zip(&choices).any(|(x, cx)| {
            boards
                .iter()
                .zip(&choices)
                .any(|(y, cy)| cx != cy && x.get(i) != y.get(i))
        })
    });
    match nearest(b.eye, relevant) {
        Some(cell) => MacroAction::observe(b.eye, cell),
        // Candidates disagree only where no unknown cell tells them apart,
        // which cannot happen for distinct boards; mark a cell every
        // candidate has free as a fallback.
        None => {
            let free = (0..9u8).filter(|&i| known[i as usize] == CellKnowledge::Empty);
            let cell = nearest(b.eye, free).unwrap_or(b.eye.cell());
            MacroAction::mark(b.eye, cell)
        }
    }
}

/// True if `board` is a legal position with `side` to move under the
/// standard turn order (cross first).
pub fn side_to_move(board: &Board) -> Option<Side> {
    let x = board.count(Cell::Cross);
    let o = board.count(Cell::O);
    match x.checked_sub(o) {
        Some(0) => Some(Side::Cross),
        Some(1) => Some(Side::O),
        _ => None,
    }
}
