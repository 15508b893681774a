//! The hidden-state Tick-Tack-Toe world.
//!
//! A world is a state set with a start state, a transition function
//! ([`step`]) and an observation function ([`view`]). In World 2 the agent
//! only sees the five lamps; World 1 is the same game with the full state
//! exposed through [`world1_view`].
//!
//! Every illegal command flashes the bad-move lamp and leaves the state
//! untouched, RNG included. Tom, the built-in opponent, answers each
//! successful cross with one O placed uniformly at random over the empty
//! cells, drawn from the state's own ChaCha8 stream (`gen_range(0..k)` over
//! the empty cells listed in ascending id order).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The eight rows, columns and diagonals, as cell ids.
pub const LINES: [[u8; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Cell {
    #[default]
    Empty,
    Cross,
    O,
}

/// The two marks a player can own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Cross,
    O,
}

impl Side {
    pub fn mark(self) -> Cell {
        match self {
            Side::Cross => Cell::Cross,
            Side::O => Cell::O,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Cross => Side::O,
            Side::O => Side::Cross,
        }
    }
}

/// Nine cells, id = (row - 1) * 3 + (col - 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Board(pub [Cell; 9]);

impl Board {
    pub fn empty() -> Self {
        Board([Cell::Empty; 9])
    }

    pub fn get(&self, id: u8) -> Cell {
        self.0[id as usize]
    }

    pub fn set(&mut self, id: u8, cell: Cell) {
        self.0[id as usize] = cell;
    }

    pub fn with(mut self, id: u8, cell: Cell) -> Self {
        self.set(id, cell);
        self
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.0.iter().filter(|&&c| c == cell).count()
    }

    pub fn empty_cells(&self) -> impl Iterator<Item = u8> + '_ {
        (0..9u8).filter(move |&i| self.get(i) == Cell::Empty)
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&c| c != Cell::Empty)
    }

    /// True if `side` owns all three cells of one of `lines`.
    pub fn has_line_in(&self, side: Side, lines: &[[u8; 3]]) -> bool {
        let m = side.mark();
        lines.iter().any(|l| l.iter().all(|&i| self.get(i) == m))
    }

    pub fn has_line(&self, side: Side) -> bool {
        self.has_line_in(side, &LINES)
    }

    /// Compact text form, row by row: `.` empty, `X` cross, `O` nought.
    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .map(|c| match c {
                Cell::Empty => '.',
                Cell::Cross => 'X',
                Cell::O => 'O',
            })
            .collect()
    }

    pub fn from_text(s: &str) -> Option<Board> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.len() != 9 {
            return None;
        }
        let mut b = Board::empty();
        for (i, ch) in chars.into_iter().enumerate() {
            b.0[i] = match ch {
                '.' | '-' | '_' => Cell::Empty,
                'X' | 'x' => Cell::Cross,
                'O' | 'o' => Cell::O,
                _ => return None,
            };
        }
        Some(b)
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.to_text();
        write!(f, "{}/{}/{}", &t[0..3], &t[3..6], &t[6..9])
    }
}

/// The 1-cell window the agent looks through. Columns and rows run 1..=3;
/// row 1 is the top row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Eye {
    pub col: u8,
    pub row: u8,
}

impl Eye {
    pub const START: Eye = Eye { col: 1, row: 1 };

    pub fn new(col: u8, row: u8) -> Option<Eye> {
        ((1..=3).contains(&col) && (1..=3).contains(&row)).then_some(Eye { col, row })
    }

    pub fn from_cell(id: u8) -> Eye {
        debug_assert!(id < 9);
        Eye { col: id % 3 + 1, row: id / 3 + 1 }
    }

    pub fn cell(self) -> u8 {
        (self.row - 1) * 3 + (self.col - 1)
    }

    pub fn distance(self, other: Eye) -> u8 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

/// The eight commands selectable with the three checkboxes
/// (code = b0 + 2*b1 + 4*b2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Move {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
    PutCross = 4,
    NewGame = 5,
    Unused6 = 6,
    Unused7 = 7,
}

impl Move {
    pub const ALL: [Move; 8] = [
        Move::Left,
        Move::Right,
        Move::Up,
        Move::Down,
        Move::PutCross,
        Move::NewGame,
        Move::Unused6,
        Move::Unused7,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Move> {
        Move::ALL.get(code as usize).copied()
    }

    pub fn from_checkboxes(b0: bool, b1: bool, b2: bool) -> Move {
        Move::ALL[b0 as usize + 2 * b1 as usize + 4 * b2 as usize]
    }

    pub fn is_navigation(self) -> bool {
        matches!(self, Move::Left | Move::Right | Move::Up | Move::Down)
    }

    pub fn name(self) -> &'static str {
        match self {
            Move::Left => "left",
            Move::Right => "right",
            Move::Up => "up",
            Move::Down => "down",
            Move::PutCross => "put_cross",
            Move::NewGame => "new_game",
            Move::Unused6 => "unused6",
            Move::Unused7 => "unused7",
        }
    }
}

impl From<Move> for u8 {
    fn from(m: Move) -> u8 {
        m.code()
    }
}

impl TryFrom<u8> for Move {
    type Error = String;

    fn try_from(code: u8) -> Result<Move, String> {
        Move::from_code(code).ok_or_else(|| format!("move code {code} out of range 0..=7"))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The five lamps, in panel order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lamp {
    Cross,
    O,
    Victory,
    Loss,
    BadMove,
}

impl Lamp {
    pub const ALL: [Lamp; 5] = [Lamp::Cross, Lamp::O, Lamp::Victory, Lamp::Loss, Lamp::BadMove];

    pub fn name(self) -> &'static str {
        match self {
            Lamp::Cross => "cross",
            Lamp::O => "o",
            Lamp::Victory => "victory",
            Lamp::Loss => "loss",
            Lamp::BadMove => "bad_move",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LampView {
    pub cross: bool,
    pub o: bool,
    pub victory: bool,
    pub loss: bool,
    pub bad_move: bool,
}

impl LampView {
    pub const OFF: LampView = LampView { cross: false, o: false, victory: false, loss: false, bad_move: false };

    pub fn get(&self, lamp: Lamp) -> bool {
        match lamp {
            Lamp::Cross => self.cross,
            Lamp::O => self.o,
            Lamp::Victory => self.victory,
            Lamp::Loss => self.loss,
            Lamp::BadMove => self.bad_move,
        }
    }

    pub fn to_bits(self) -> [u8; 5] {
        [self.cross, self.o, self.victory, self.loss, self.bad_move].map(u8::from)
    }

    pub fn from_bits(bits: [u8; 5]) -> Option<LampView> {
        if bits.iter().any(|&b| b > 1) {
            return None;
        }
        let [cross, o, victory, loss, bad_move] = bits.map(|b| b == 1);
        Some(LampView { cross, o, victory, loss, bad_move })
    }

    /// What the two yellow lamps say about the cell under the eye.
    pub fn seen_cell(&self) -> Cell {
        match (self.cross, self.o) {
            (true, _) => Cell::Cross,
            (false, true) => Cell::O,
            _ => Cell::Empty,
        }
    }

    /// The set outcome announced by this step, if any.
    pub fn outcome(&self) -> Outcome {
        match (self.victory, self.loss) {
            (true, true) => Outcome::Draw,
            (true, false) => Outcome::Victory,
            (false, true) => Outcome::Loss,
            (false, false) => Outcome::None,
        }
    }
}

impl fmt::Display for LampView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let on = |b: bool, c: char| if b { c } else { '.' };
        write!(
            f,
            "[{}{}|{}{}|{}]",
            on(self.cross, 'X'),
            on(self.o, 'O'),
            on(self.victory, 'V'),
            on(self.loss, 'L'),
            on(self.bad_move, '!')
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Playing,
    Over,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    None,
    Victory,
    Loss,
    Draw,
}

/// One-step flash events produced by a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct StepEvents {
    pub victory: bool,
    pub loss: bool,
    pub bad_move: bool,
}

impl StepEvents {
    pub const NONE: StepEvents = StepEvents { victory: false, loss: false, bad_move: false };
    pub const BAD: StepEvents = StepEvents { victory: false, loss: false, bad_move: true };

    fn finished(outcome: Outcome) -> StepEvents {
        StepEvents {
            victory: matches!(outcome, Outcome::Victory | Outcome::Draw),
            loss: matches!(outcome, Outcome::Loss | Outcome::Draw),
            bad_move: false,
        }
    }
}

/// Fault-injected rule variants. They break one regularity of the real
/// world each and exist so the trace formulas can be shown to catch the
/// violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    Standard,
    /// Tom answers with two O's whenever two cells are free.
    TwoO,
    /// A successful eye move sometimes drops an O on a random empty cell.
    SpontaneousO,
    /// A successful eye move sometimes erases a random mark.
    NonPersistent,
}

/// Full hidden state of the world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldState {
    pub board: Board,
    pub eye: Eye,
    pub phase: Phase,
    pub last_outcome: Outcome,
    pub rng: ChaCha8Rng,
}

/// Everything of a state except the RNG stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicState {
    pub board: Board,
    pub eye: Eye,
    pub phase: Phase,
}

impl WorldState {
    pub fn public(&self) -> PublicState {
        PublicState { board: self.board, eye: self.eye, phase: self.phase }
    }

    fn finish(&mut self, outcome: Outcome) -> StepEvents {
        self.phase = Phase::Over;
        self.last_outcome = outcome;
        StepEvents::finished(outcome)
    }

    /// Tom's reply plus the end-of-set check that follows it.
    fn tom_reply(&mut self, variant: Variant) -> StepEvents {
        let replies = if variant == Variant::TwoO { 2 } else { 1 };
        for _ in 0..replies {
            if !self.place_random_o() {
                break;
            }
        }
        self.settle()
    }

    fn place_random_o(&mut self) -> bool {
        let empty: Vec<u8> = self.board.empty_cells().collect();
        if empty.is_empty() {
            return false;
        }
        let pick = empty[self.rng.gen_range(0..empty.len())];
        self.board.set(pick, Cell::O);
        true
    }

    fn settle(&mut self) -> StepEvents {
        if self.board.has_line(Side::Cross) {
            self.finish(Outcome::Victory)
        } else if self.board.has_line(Side::O) {
            self.finish(Outcome::Loss)
        } else if self.board.is_full() {
            self.finish(Outcome::Draw)
        } else {
            StepEvents::NONE
        }
    }

    fn mutate_after_navigation(&mut self, variant: Variant) -> StepEvents {
        if self.phase != Phase::Playing {
            return StepEvents::NONE;
        }
        match variant {
            Variant::SpontaneousO => {
                if self.rng.gen_range(0..4) == 0 && self.place_random_o() {
                    return self.settle();
                }
            }
            Variant::NonPersistent => {
                if self.rng.gen_range(0..4) == 0 {
                    let marked: Vec<u8> = (0..9).filter(|&i| self.board.get(i) != Cell::Empty).collect();
                    if !marked.is_empty() {
                        let pick = marked[self.rng.gen_range(0..marked.len())];
                        self.board.set(pick, Cell::Empty);
                    }
                }
            }
            Variant::Standard | Variant::TwoO => {}
        }
        StepEvents::NONE
    }
}

pub fn initial_state(seed: u64) -> WorldState {
    WorldState {
        board: Board::empty(),
        eye: Eye::START,
        phase: Phase::Playing,
        last_outcome: Outcome::None,
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

/// Lamps for `s` given the events of the step that produced it.
pub fn view(s: &WorldState, events: StepEvents) -> LampView {
    let cell = s.board.get(s.eye.cell());
    LampView {
        cross: cell == Cell::Cross,
        o: cell == Cell::O,
        victory: events.victory,
        loss: events.loss,
        bad_move: events.bad_move,
    }
}

/// Lamps right after `initial_state`: nothing under the eye, no events.
pub fn initial_view(s: &WorldState) -> LampView {
    view(s, StepEvents::NONE)
}

/// Full-state observation of World 1. Injective on reachable states.
pub fn world1_view(s: &WorldState) -> PublicState {
    s.public()
}

pub fn step(s: &WorldState, d: Move) -> (WorldState, LampView) {
    step_variant(s, d, Variant::Standard)
}

pub fn step_variant(s: &WorldState, d: Move, variant: Variant) -> (WorldState, LampView) {
    let bad = || (s.clone(), view(s, StepEvents::BAD));
    let mut next = s.clone();
    let events = match d {
        Move::Left | Move::Right | Move::Up | Move::Down => {
            let (col, row) = (s.eye.col, s.eye.row);
            let target = match d {
                Move::Left => col.checked_sub(1).and_then(|c| Eye::new(c, row)),
                Move::Right => Eye::new(col + 1, row),
                Move::Up => row.checked_sub(1).and_then(|r| Eye::new(col, r)),
                _ => Eye::new(col, row + 1),
            };
            match target {
                Some(eye) => next.eye = eye,
                None => return bad(),
            }
            next.mutate_after_navigation(variant)
        }
        Move::PutCross => {
            let at = s.eye.cell();
            if s.phase == Phase::Over || s.board.get(at) != Cell::Empty {
                return bad();
            }
            next.board.set(at, Cell::Cross);
            if next.board.has_line(Side::Cross) {
                next.finish(Outcome::Victory)
            } else if next.board.is_full() {
                next.finish(Outcome::Draw)
            } else {
                next.tom_reply(variant)
            }
        }
        Move::NewGame => {
            if s.phase == Phase::Playing {
                return bad();
            }
            next.board = Board::empty();
            next.phase = Phase::Playing;
            next.last_outcome = Outcome::None;
            StepEvents::NONE
        }
        Move::Unused6 | Move::Unused7 => return bad(),
    };
    let lamps = view(&next, events);
    (next, lamps)
}
