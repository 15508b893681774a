//! `lampworld` subcommands: run, record, replay, eval and serve.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lampworld::agent::{run_agent, scorecards_csv, AgentError, Budgets, LifecycleReport, ScoreCard, Stop};
use lampworld::trace::{replay, Recorder, Trace, TraceError, Verdict, WorldId};
use lampworld::world::{LampView, Move};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "lampworld", version, about = "Hidden-board tick-tack-toe world and its learning agent")]
pub struct Cli {
    /// TOML file with defaults; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for model, scorecard and trace files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the agent's lifecycle and write its model and scorecards.
    Run(RunArgs),
    /// Record a trace, typed by hand or with random moves.
    Record(RecordArgs),
    /// Check that a trace replays from its seed.
    Replay { file: PathBuf },
    /// Run several seeded lifecycles and aggregate their Exploit scorecards.
    Eval(EvalArgs),
    /// Start the HTTP session service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AgentKind {
    Auto,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 2)]
    pub world: u8,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop after this many steps; without it the run stops after the
    /// configured number of Exploit sets.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, value_enum, default_value_t = AgentKind::Auto)]
    pub agent: AgentKind,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long, default_value_t = 2)]
    pub world: u8,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Read moves from the terminal.
    #[arg(long, conflicts_with = "random")]
    pub interactive: bool,
    /// Play this many uniformly random moves instead.
    #[arg(long)]
    pub random: Option<u64>,
    /// Trace file; defaults to `trace.jsonl` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Exploit sets per seed.
    #[arg(long)]
    pub games: Option<u64>,
    /// Number of seeds, starting at `--seed`.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Defaults read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub games: Option<u64>,
    pub seeds: Option<u64>,
    pub port: Option<u16>,
    pub out_dir: Option<PathBuf>,
    pub explore: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("trace diverges at step {t}")]
    Divergent { t: u64 },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("seed {seed}: {source}")]
    Seed { seed: u64, source: AgentError },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Divergent { .. } => 3,
            CliError::Agent(_) | CliError::Seed { .. } => 4,
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn world_id(w: u8) -> Result<WorldId, CliError> {
    WorldId::try_from(w).map_err(CliError::Usage)
}

/// Runs `cli`, writing human-readable output to `out` and reading
/// interactive input from `input`.
pub fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    let out_dir = cli.out_dir.clone().or(config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut budgets = Budgets::default();
    if let Some(b) = config.explore {
        budgets.explore = b;
    }
    match cli.command {
        Command::Run(args) => {
            let seed = args.seed.or(config.seed).unwrap_or(0);
            let stop = match args.steps.or(config.steps) {
                Some(n) => Stop::Steps(n),
                None => Stop::ExploitSets(budgets.exploit_sets),
            };
            let report = run_agent(world_id(args.world)?, seed, budgets, stop)?;
            write_report(&out_dir, &report)?;
            writeln!(out, "steps {} phase {:?} converged {}", report.trace.len(), report.model.phase, report.converged)?;
            for p in &report.phases {
                writeln!(out, "{:?}: {}", p.phase, p.card.csv_row())?;
            }
            Ok(())
        }
        Command::Record(args) => {
            let seed = args.seed.or(config.seed).unwrap_or(0);
            let mut rec = Recorder::new(world_id(args.world)?, seed);
            match (args.interactive, args.random) {
                (true, _) => record_interactive(&mut rec, input, out)?,
                (false, Some(n)) => record_random(&mut rec, seed, n),
                (false, None) => return Err(CliError::Usage("record needs --interactive or --random N".into())),
            }
            let path = args.out.unwrap_or_else(|| out_dir.join("trace.jsonl"));
            rec.trace().save(&path)?;
            writeln!(out, "wrote {} steps to {}", rec.trace().len(), path.display())?;
            Ok(())
        }
        Command::Replay { file } => {
            let trace = Trace::load(&file)?;
            match replay(&trace) {
                Verdict::Consistent => {
                    writeln!(out, "consistent: {} steps", trace.len())?;
                    Ok(())
                }
                Verdict::Divergent { t } => Err(CliError::Divergent { t }),
            }
        }
        Command::Eval(args) => {
            let first = args.seed.or(config.seed).unwrap_or(0);
            let seeds = args.seeds.or(config.seeds).unwrap_or(1);
            budgets.exploit_sets = args.games.or(config.games).unwrap_or(budgets.exploit_sets);
            let cards = eval(first, seeds, budgets)?;
            let mut total = ScoreCard::default();
            for (seed, card) in &cards {
                writeln!(out, "seed {seed}: {}", card.csv_row())?;
                total.add(card);
            }
            writeln!(
                out,
                "total exploit: victories {} losses {} draws {} bad_moves {}",
                total.victories, total.losses, total.draws, total.bad_moves
            )?;
            std::fs::create_dir_all(&out_dir)?;
            let rows: Vec<ScoreCard> = cards.iter().map(|(_, c)| *c).collect();
            std::fs::write(out_dir.join("eval.csv"), scorecards_csv(&rows))?;
            Ok(())
        }
        Command::Serve { port } => {
            let port = port.or(config.port).unwrap_or(8080);
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            writeln!(out, "listening on http://{addr}")?;
            out.flush()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(lampworld_service::serve(addr))?;
            Ok(())
        }
    }
}

/// Exploit scorecards per seed, in seed order.
pub fn eval(first: u64, seeds: u64, budgets: Budgets) -> Result<Vec<(u64, ScoreCard)>, CliError> {
    (first..first + seeds)
        .into_par_iter()
        .map(|seed| {
            let report = run_agent(WorldId::Two, seed, budgets, Stop::ExploitSets(budgets.exploit_sets))
                .map_err(|source| CliError::Seed { seed, source })?;
            let mut card = report.exploit();
            card.window_start = seed;
            card.window_end = seed + 1;
            Ok((seed, card))
        })
        .collect()
}

pub fn write_report(dir: &Path, report: &LifecycleReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("model.json"), report.model.to_json())?;
    std::fs::write(dir.join("scorecard.csv"), scorecards_csv(&report.timeline))?;
    report.trace.save(dir.join("trace.jsonl"))?;
    Ok(())
}

fn record_random(rec: &mut Recorder, seed: u64, n: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        rec.step(Move::ALL[rng.gen_range(0..8)]);
    }
}

/// One line of lamps, as on the panel.
pub fn panel(t: u64, lamps: &LampView) -> String {
    let lamp = |on: bool, name: &str| format!("[{}] {name}", if on { '*' } else { ' ' });
    format!(
        "step {t:>5}  {}  {}  {}  {}  {}",
        lamp(lamps.cross, "cross"),
        lamp(lamps.o, "o"),
        lamp(lamps.victory, "victory"),
        lamp(lamps.loss, "loss"),
        lamp(lamps.bad_move, "bad move")
    )
}

/// Accepts three checkbox bits (`b0b1b2`), a code 0..=7, or a move name.
pub fn parse_move(s: &str) -> Option<Move> {
    let s = s.trim().to_ascii_lowercase();
    if s.len() == 3 && s.chars().all(|c| c == '0' || c == '1') {
        let b: Vec<bool> = s.chars().map(|c| c == '1').collect();
        return Some(Move::from_checkboxes(b[0], b[1], b[2]));
    }
    if let Ok(code) = s.parse::<u8>() {
        return Move::from_code(code);
    }
    match s.as_str() {
        "l" | "left" => Some(Move::Left),
        "r" | "right" => Some(Move::Right),
        "u" | "up" => Some(Move::Up),
        "d" | "down" => Some(Move::Down),
        "x" | "put" | "put_cross" => Some(Move::PutCross),
        "n" | "new" | "new_game" => Some(Move::NewGame),
        _ => None,
    }
}

fn record_interactive(rec: &mut Recorder, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "moves: 0-7, checkbox bits like 001, or left/right/up/down/x/new; q quits")?;
    let mut line = String::new();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 || line.trim() == "q" {
            return Ok(());
        }
        match parse_move(&line) {
            Some(mv) => {
                let r = rec.step(mv);
                writeln!(out, "{}", panel(r.t, &r.lamps))?;
            }
            None => writeln!(out, "unknown move {:?}", line.trim())?,
        }
    }
}
