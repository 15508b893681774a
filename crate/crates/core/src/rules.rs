//! First-order trace formulas and winning-set discovery.
//!
//! Formulas are universally quantified over moments `T >= 1` and over cell
//! variables. Moment 0 is the board before the first step; moment `T` is the
//! board after record `T - 1`, and `playedMove`/`lampOn` at `T` read that
//! record. Cells may be unresolved: an atom over an unknown cell is neither
//! true nor false, and a moment whose verdict depends on one is reported as
//! insufficiently observed instead of being ground.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::belief::CellKnowledge;
use crate::trace::StepRecord;
use crate::world::{Board, Cell, Lamp, LampView, Move, Outcome, Side, LINES};

/// Cell variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellVar {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Moment {
    T,
    PrevT,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    IsO(CellVar, Moment),
    IsCross(CellVar, Moment),
    /// `isO(A,T) & not isO(A,prev(T))`
    AppearO(CellVar),
    AppearCross(CellVar),
    PlayedMove(Move, Moment),
    /// True if any of the lamps was on.
    LampOn(Vec<Lamp>, Moment),
    SameCell(CellVar, CellVar),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }
}

/// `forall T >= 1, forall vars: premises -> conclusions`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    pub name: String,
    pub vars: Vec<CellVar>,
    pub premises: Vec<Literal>,
    pub conclusions: Vec<Literal>,
}

fn moment_str(m: Moment) -> &'static str {
    match m {
        Moment::T => "T",
        Moment::PrevT => "prev(T)",
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::IsO(c, m) => write!(f, "isO({c:?}, {})", moment_str(*m)),
            Atom::IsCross(c, m) => write!(f, "isCross({c:?}, {})", moment_str(*m)),
            Atom::AppearO(c) => write!(f, "appear(O, {c:?}, T)"),
            Atom::AppearCross(c) => write!(f, "appear(X, {c:?}, T)"),
            Atom::PlayedMove(mv, m) => write!(f, "played({mv}, {})", moment_str(*m)),
            Atom::LampOn(ls, m) => {
                let names: Vec<&str> = ls.iter().map(|l| l.name()).collect();
                write!(f, "lampOn({}, {})", names.join("|"), moment_str(*m))
            }
            Atom::SameCell(a, b) => write!(f, "{a:?} = {b:?}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = |l: &Literal| if l.positive { l.atom.to_string() } else { format!("not {}", l.atom) };
        let vars: Vec<String> = self.vars.iter().map(|v| format!("{v:?}")).collect();
        let prem: Vec<String> = self.premises.iter().map(lit).collect();
        let conc: Vec<String> = self.conclusions.iter().map(lit).collect();
        write!(f, "forall T forall {} ({} -> {})", vars.join(","), prem.join(" & "), conc.join(" & "))
    }
}

/// Board knowledge at every moment plus the records between them.
#[derive(Clone, Debug, PartialEq)]
pub struct CellHistory {
    /// `boards[0]` is moment 0; `boards.len() == records.len() + 1`.
    pub boards: Vec<[CellKnowledge; 9]>,
    pub records: Vec<StepRecord>,
}

impl CellHistory {
    /// Fully resolved history from ground-truth boards.
    pub fn from_boards(initial: Board, after_each: &[Board], records: &[StepRecord]) -> Self {
        let mut boards = Vec::with_capacity(after_each.len() + 1);
        boards.push(CellKnowledge::of_board(&initial));
        boards.extend(after_each.iter().map(CellKnowledge::of_board));
        CellHistory { boards, records: records.to_vec() }
    }

    pub fn moments(&self) -> u64 {
        self.records.len() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub t: u64,
    pub a: u8,
    pub b: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaVerdict {
    pub counterexample: Option<Counterexample>,
    /// Moments fully decided.
    pub checked: u64,
    /// Moments left undecided by unresolved cells.
    pub insufficient: Vec<u64>,
}

impl FormulaVerdict {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct Ground<'a> {
    h: &'a CellHistory,
    t: usize,
    a: u8,
    b: u8,
}

impl Ground<'_> {
    fn cell(&self, v: CellVar) -> usize {
        match v {
            CellVar::A => self.a as usize,
            CellVar::B => self.b as usize,
        }
    }

    fn at(&self, m: Moment) -> usize {
        match m {
            Moment::T => self.t,
            Moment::PrevT => self.t - 1,
        }
    }

    fn is(&self, v: CellVar, m: Moment, mark: Cell) -> Option<bool> {
        self.h.boards[self.at(m)][self.cell(v)].is(mark)
    }

    fn record(&self, m: Moment) -> Option<&StepRecord> {
        self.at(m).checked_sub(1).map(|i| &self.h.records[i])
    }

    fn appear(&self, v: CellVar, mark: Cell) -> Option<bool> {
        and3(self.is(v, Moment::T, mark), self.is(v, Moment::PrevT, mark).map(|x| !x))
    }

    fn atom(&self, atom: &Atom) -> Option<bool> {
        match atom {
            Atom::IsO(v, m) => self.is(*v, *m, Cell::O),
            Atom::IsCross(v, m) => self.is(*v, *m, Cell::Cross),
            Atom::AppearO(v) => self.appear(*v, Cell::O),
            Atom::AppearCross(v) => self.appear(*v, Cell::Cross),
            Atom::PlayedMove(mv, m) => Some(self.record(*m).is_some_and(|r| r.mv == *mv)),
            Atom::LampOn(lamps, m) => {
                let view = self.record(*m).map_or(LampView::OFF, |r| r.lamps);
                Some(lamps.iter().any(|&l| view.get(l)))
            }
            Atom::SameCell(x, y) => Some(self.cell(*x) == self.cell(*y)),
        }
    }

    fn literal(&self, l: &Literal) -> Option<bool> {
        self.atom(&l.atom).map(|v| v == l.positive)
    }

    fn all(&self, lits: &[Literal]) -> Option<bool> {
        lits.iter().fold(Some(true), |acc, l| and3(acc, self.literal(l)))
    }
}

/// Kleene conjunction.
fn and3(x: Option<bool>, y: Option<bool>) -> Option<bool> {
    match (x, y) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

/// Grounds `f` over every moment `T >= 1` and every cell assignment.
pub fn eval_formula(f: &Formula, history: &CellHistory) -> FormulaVerdict {
    let mut verdict = FormulaVerdict { counterexample: None, checked: 0, insufficient: Vec::new() };
    let uses_b = f.vars.contains(&CellVar::B);
    let uses_a = f.vars.contains(&CellVar::A) || uses_b;
    for t in 1..history.boards.len() {
        let mut undecided = false;
        'cells: for a in 0..if uses_a { 9 } else { 1 } {
            for b in 0..if uses_b { 9 } else { 1 } {
                let g = Ground { h: history, t, a, b };
                let value = match (g.all(&f.premises), g.all(&f.conclusions)) {
                    (Some(false), _) | (_, Some(true)) => Some(true),
                    (Some(true), Some(false)) => Some(false),
                    _ => None,
                };
                match value {
                    Some(true) => {}
                    Some(false) => {
                        verdict.counterexample = Some(Counterexample { t: t as u64, a, b });
                        break 'cells;
                    }
                    None => undecided = true,
                }
            }
        }
        if verdict.counterexample.is_some() {
            break;
        }
        if undecided {
            verdict.insufficient.push(t as u64);
        } else {
            verdict.checked += 1;
        }
    }
    verdict
}

/// The uniqueness formula and the persistence/causation regularities of
/// marks.
pub fn standard_formula_suite() -> Vec<Formula> {
    use Atom::*;
    use CellVar::{A, B};
    use Moment::{PrevT, T};
    vec![
        Formula {
            name: "one_o_per_moment".into(),
            vars: vec![A, B],
            premises: vec![Literal::pos(AppearO(A)), Literal::pos(AppearO(B))],
            conclusions: vec![Literal::pos(SameCell(A, B))],
        },
        Formula {
            name: "o_answers_cross".into(),
            vars: vec![A],
            premises: vec![Literal::pos(AppearO(A))],
            conclusions: vec![Literal::pos(PlayedMove(Move::PutCross, T)), Literal::neg(LampOn(vec![Lamp::BadMove], T))],
        },
        Formula {
            name: "o_persists".into(),
            vars: vec![A],
            premises: vec![Literal::pos(IsO(A, PrevT)), Literal::neg(PlayedMove(Move::NewGame, T))],
            conclusions: vec![Literal::pos(IsO(A, T))],
        },
        Formula {
            name: "cross_persists".into(),
            vars: vec![A],
            premises: vec![Literal::pos(IsCross(A, PrevT)), Literal::neg(PlayedMove(Move::NewGame, T))],
            conclusions: vec![Literal::pos(IsCross(A, T))],
        },
        Formula {
            name: "cross_needs_put_cross".into(),
            vars: vec![A],
            premises: vec![Literal::pos(AppearCross(A))],
            conclusions: vec![Literal::pos(PlayedMove(Move::PutCross, T)), Literal::neg(LampOn(vec![Lamp::BadMove], T))],
        },
    ]
}

/// A 3-cell subset whose monochromatic occupation ends a set in favour of
/// `side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WinningSet {
    pub cells: [u8; 3],
    pub side: Side,
}

/// Lines per side, in the form the planner and belief filter consume.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WinningLines {
    pub cross: Vec<[u8; 3]>,
    pub o: Vec<[u8; 3]>,
}

impl WinningLines {
    /// The real rows, columns and diagonals for both sides.
    pub fn geometric() -> Self {
        WinningLines { cross: LINES.to_vec(), o: LINES.to_vec() }
    }

    pub fn from_sets(sets: &[WinningSet]) -> Self {
        let pick = |side| sets.iter().filter(|s| s.side == side).map(|s| s.cells).collect();
        WinningLines { cross: pick(Side::Cross), o: pick(Side::O) }
    }

    pub fn for_side(&self, side: Side) -> &[[u8; 3]] {
        match side {
            Side::Cross => &self.cross,
            Side::O => &self.o,
        }
    }

    pub fn wins(&self, board: &Board, side: Side) -> bool {
        board.has_line_in(side, self.for_side(side))
    }

    /// The lamp outcome these lines predict for a set that just ended.
    pub fn predict(&self, board: &Board) -> Outcome {
        match (self.wins(board, Side::Cross), self.wins(board, Side::O)) {
            (true, false) => Outcome::Victory,
            (false, true) => Outcome::Loss,
            (false, false) if board.is_full() => Outcome::Draw,
            (false, false) => Outcome::None,
            (true, true) => Outcome::Draw,
        }
    }
}

/// All C(9,3) = 84 three-cell subsets in lexicographic order.
pub fn triples() -> Vec<[u8; 3]> {
    let mut out = Vec::with_capacity(84);
    for a in 0..9 {
        for b in a + 1..9 {
            for c in b + 1..9 {
                out.push([a, b, c]);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Discovery {
    pub accepted: Vec<WinningSet>,
    /// Subsets never seen monochromatic at a set's end.
    pub undecided: Vec<WinningSet>,
    /// Consistent subsets dropped because every win they appear in is
    /// already explained by another consistent subset.
    #[serde(default)]
    pub shadowed: Vec<WinningSet>,
    /// Completed sets won by a side that no accepted subset explains.
    pub unexplained: usize,
}

fn favours(outcome: Outcome, side: Side) -> bool {
    matches!((outcome, side), (Outcome::Victory, Side::Cross) | (Outcome::Loss, Side::O))
}

/// Accepts a subset for a side iff it was seen monochromatic at some set
/// end and every such set was won by that side. Entries with
/// `Outcome::None` are positions seen while a set was still running; they
/// refute every subset they show monochromatic. Of the consistent subsets,
/// those never needed to explain a win on their own are set aside.
pub fn discover_winning_sets(completed: &[(Board, Outcome)]) -> Discovery {
    let mut out = Discovery::default();
    for side in [Side::Cross, Side::O] {
        let mark = side.mark();
        let mut consistent_sets = Vec::new();
        for cells in triples() {
            let set = WinningSet { cells, side };
            let mut exercised = false;
            let mut consistent = true;
            for (board, outcome) in completed {
                if cells.iter().all(|&c| board.get(c) == mark) {
                    exercised = true;
                    if !favours(*outcome, side) {
                        consistent = false;
                        break;
                    }
                }
            }
            match (exercised, consistent) {
                (true, true) => consistent_sets.push(cells),
                (false, _) => out.undecided.push(set),
                _ => {}
            }
        }
        // Keep a subset only if some win is explained by it alone.
        let mono = |b: &Board, cells: &[u8; 3]| cells.iter().all(|&c| b.get(c) == mark);
        for cells in &consistent_sets {
            let sole = completed.iter().any(|(b, o)| {
                favours(*o, side) && mono(b, cells) && consistent_sets.iter().all(|other| other == cells || !mono(b, other))
            });
            let set = WinningSet { cells: *cells, side };
            if sole {
                out.accepted.push(set);
            } else {
                out.shadowed.push(set);
            }
        }
    }
    let lines = WinningLines::from_sets(&out.accepted);
    out.unexplained = completed
        .iter()
        .filter(|(b, o)| [Side::Cross, Side::O].iter().any(|&s| favours(*o, s) && !lines.wins(b, s)))
        .count();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(boards: &[&str], moves: &[Move]) -> CellHistory {
        let boards: Vec<Board> = boards.iter().map(|b| Board::from_text(b).unwrap()).collect();
        let records: Vec<StepRecord> = moves
            .iter()
            .enumerate()
            .map(|(t, &mv)| StepRecord { t: t as u64, mv, lamps: LampView::OFF })
            .collect();
        CellHistory::from_boards(boards[0], &boards[1..], &records)
    }

    #[test]
    fn uniqueness_holds_with_one_o() {
        let h = hist(&[".........", "X...O....", "X...O...."], &[Move::PutCross, Move::Right]);
        let v = eval_formula(&standard_formula_suite()[0], &h);
        assert!(v.holds());
        assert_eq!(v.checked, 2);
    }

    #[test]
    fn uniqueness_fails_with_two_os() {
        let h = hist(&[".........", "X...O...O"], &[Move::PutCross]);
        let v = eval_formula(&standard_formula_suite()[0], &h);
        assert_eq!(v.counterexample, Some(Counterexample { t: 1, a: 4, b: 8 }));
    }

    #[test]
    fn no_o_holds_vacuously() {
        let h = hist(&[".........", ".........", "........."], &[Move::Right, Move::Down]);
        for f in standard_formula_suite() {
            assert!(eval_formula(&f, &h).holds(), "{}", f.name);
        }
    }

    #[test]
    fn unknown_cells_are_reported() {
        let mut h = hist(&[".........", "X...O...."], &[Move::PutCross]);
        h.boards[1][4] = CellKnowledge::Unknown;
        h.boards[1][5] = CellKnowledge::Unknown;
        let v = eval_formula(&standard_formula_suite()[0], &h);
        assert!(v.holds());
        assert_eq!(v.insufficient, vec![1]);
    }

    #[test]
    fn spontaneous_o_breaks_causation() {
        let h = hist(&[".........", "....O...."], &[Move::Right]);
        let suite = standard_formula_suite();
        assert!(eval_formula(&suite[0], &h).holds());
        assert!(!eval_formula(&suite[1], &h).holds());
    }

    #[test]
    fn erased_marks_break_persistence() {
        let h = hist(&["X...O....", "X........", "........."], &[Move::Right, Move::Down]);
        let suite = standard_formula_suite();
        assert_eq!(eval_formula(&suite[2], &h).counterexample.map(|c| c.t), Some(1));
        assert_eq!(eval_formula(&suite[3], &h).counterexample.map(|c| c.t), Some(2));
        let reset = hist(&["XXXOO....", "........."], &[Move::NewGame]);
        assert!(eval_formula(&suite[2], &reset).holds());
    }

    #[test]
    fn triples_count() {
        let t = triples();
        assert_eq!(t.len(), 84);
        assert!(LINES.iter().all(|l| t.contains(l)));
    }

    #[test]
    fn discovery_rejects_counterexamples() {
        let sets = vec![
            (Board::from_text("XXXOO....").unwrap(), Outcome::Victory),
            (Board::from_text("XX.OOOX..").unwrap(), Outcome::Loss),
            (Board::from_text("XX.XO.OOX").unwrap(), Outcome::None),
        ];
        let d = discover_winning_sets(&sets);
        let cross = WinningSet { cells: [0, 1, 2], side: Side::Cross };
        assert!(d.accepted.contains(&cross));
        // X owns 0, 1 and 3 in the third set, which nobody won
        let mixed = WinningSet { cells: [0, 1, 3], side: Side::Cross };
        assert!(!d.accepted.contains(&mixed));
        assert!(!d.undecided.contains(&mixed));
        assert_eq!(d.unexplained, 0);
    }

    #[test]
    fn subsets_riding_along_with_a_line_are_shadowed() {
        // O at 1, 7, 8 only ever occurs next to the real 6-7-8 line.
        let sets = vec![
            (Board::from_text("XOX.X.OOO").unwrap(), Outcome::Loss),
            (Board::from_text("X.XXX.OOO").unwrap(), Outcome::Loss),
        ];
        let d = discover_winning_sets(&sets);
        let line = WinningSet { cells: [6, 7, 8], side: Side::O };
        let rider = WinningSet { cells: [1, 7, 8], side: Side::O };
        assert!(d.accepted.contains(&line));
        assert!(d.shadowed.contains(&rider));
        assert!(!d.accepted.contains(&rider));
        assert_eq!(d.unexplained, 0);
    }
}
