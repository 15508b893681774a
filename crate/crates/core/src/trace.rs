//! Step traces: recording, the JSON-lines file format, and replay.
//!
//! File layout: a header line `{"world":2,"seed":42}` followed by one line
//! per step, `{"t":0,"move":1,"lamps":[0,0,0,0,1]}`. Lamps are stored as the
//! agent saw them after the step, in panel order (cross, o, victory, loss,
//! bad move).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{self, LampView, Move, WorldState};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("record index {got} does not follow trace length {expected}")]
    IndexMismatch { expected: u64, got: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("prev(0) is undefined")]
    NoPredecessor,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum WorldId {
    One = 1,
    Two = 2,
}

impl From<WorldId> for u8 {
    fn from(w: WorldId) -> u8 {
        w as u8
    }
}

impl TryFrom<u8> for WorldId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(WorldId::One),
            2 => Ok(WorldId::Two),
            _ => Err(format!("unknown world {v}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub t: u64,
    pub mv: Move,
    pub lamps: LampView,
}

/// Wire form of a [`StepRecord`]; also the push-channel message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRecord {
    pub t: u64,
    #[serde(rename = "move")]
    pub mv: u8,
    pub lamps: [u8; 5],
}

impl From<&StepRecord> for WireRecord {
    fn from(r: &StepRecord) -> Self {
        WireRecord { t: r.t, mv: r.mv.code(), lamps: r.lamps.to_bits() }
    }
}

impl TryFrom<WireRecord> for StepRecord {
    type Error = String;

    fn try_from(w: WireRecord) -> Result<Self, String> {
        let mv = Move::from_code(w.mv).ok_or_else(|| format!("move {} out of range 0..=7", w.mv))?;
        let lamps = LampView::from_bits(w.lamps).ok_or("lamp values must be 0 or 1")?;
        Ok(StepRecord { t: w.t, mv, lamps })
    }
}

impl StepRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&WireRecord::from(self)).expect("record serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    world: WorldId,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub world: WorldId,
    pub seed: u64,
    records: Vec<StepRecord>,
}

impl Trace {
    pub fn new(world: WorldId, seed: u64) -> Self {
        Trace { world, seed, records: Vec::new() }
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, record: StepRecord) -> Result<(), TraceError> {
        let expected = self.records.len() as u64;
        if record.t != expected {
            return Err(TraceError::IndexMismatch { expected, got: record.t });
        }
        self.records.push(record);
        Ok(())
    }

    /// Appends `(mv, lamps)` at the next index.
    pub fn push(&mut self, mv: Move, lamps: LampView) -> StepRecord {
        let r = StepRecord { t: self.records.len() as u64, mv, lamps };
        self.records.push(r);
        r
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::with_capacity(48 * (self.records.len() + 1));
        let header = Header { world: self.world, seed: self.seed };
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
        for r in &self.records {
            writeln!(out, "{}", r.to_json()).expect("write to string");
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError::Parse { line: 1, msg: "missing header".into() })?;
        let header: Header =
            serde_json::from_str(first).map_err(|e| TraceError::Parse { line: 1, msg: e.to_string() })?;
        let mut trace = Trace::new(header.world, header.seed);
        for (i, line) in lines {
            let line_no = i + 1;
            let wire: WireRecord =
                serde_json::from_str(line).map_err(|e| TraceError::Parse { line: line_no, msg: e.to_string() })?;
            let record = StepRecord::try_from(wire).map_err(|msg| TraceError::Parse { line: line_no, msg })?;
            trace.append(record).map_err(|e| TraceError::Parse { line: line_no, msg: e.to_string() })?;
        }
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
        Trace::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

/// Predecessor of moment `t`.
pub fn prev(t: u64) -> Result<u64, TraceError> {
    t.checked_sub(1).ok_or(TraceError::NoPredecessor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Divergent { t: u64 },
}

/// Re-runs the trace's moves from its seed and compares lamps.
pub fn replay(trace: &Trace) -> Verdict {
    let mut state = world::initial_state(trace.seed);
    for r in trace.records() {
        let (next, lamps) = world::step(&state, r.mv);
        if lamps != r.lamps {
            return Verdict::Divergent { t: r.t };
        }
        state = next;
    }
    Verdict::Consistent
}

/// A live world that logs every step it takes.
#[derive(Clone, Debug)]
pub struct Recorder {
    state: WorldState,
    trace: Trace,
}

impl Recorder {
    pub fn new(world: WorldId, seed: u64) -> Self {
        Recorder { state: world::initial_state(seed), trace: Trace::new(world, seed) }
    }

    pub fn step(&mut self, mv: Move) -> StepRecord {
        let (next, lamps) = world::step(&self.state, mv);
        self.state = next;
        self.trace.push(mv, lamps)
    }

    /// Hidden state. Only oracles and World 1 observers should look.
    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}
