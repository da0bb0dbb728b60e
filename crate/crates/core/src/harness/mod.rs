//! Competition-style benchmark runs: configurations, execution under time
//! limits, persistence and rankings.

mod config;
mod exec;
mod run;
mod score;
mod select;
mod store;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use config::{load_configs, parse_configs, validate as validate_configs, ConfigError, RunConfig, Solver, MAX_CONFIGS_PER_GROUP, MAX_PARALLEL_CORES};
pub use exec::{run_command, CommandOutcome};
pub use run::{run_builtin, run_one, run_suite, SolverOutput, SuiteOptions};
pub use score::{
    quality_score, render_ranking, result_quality, score_solved, update_reference, ConfigRanking, Ranking,
    ReferenceUpdate,
};
pub use select::{eligible_for_synthesis, load_library, select_benchmarks, LibraryError};
pub use store::{load_results, render_results_csv, ResultStore, StoreError};

pub const DEFAULT_TIMEOUT_S: u64 = 3600;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    pub path: PathBuf,
    pub class: String,
    /// AND gates of the best known solution.
    pub reference_size: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Realizability,
    Synthesis,
}

/// Sequential runs are charged CPU time, parallel runs wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "seq")]
    Sequential,
    #[serde(rename = "par")]
    Parallel,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seq" | "sequential" => Ok(Mode::Sequential),
            "par" | "parallel" => Ok(Mode::Parallel),
            _ => Err(format!("unknown mode {s:?}, expected seq or par")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Realizable,
    Unrealizable,
    Unknown,
    Timeout,
    Error,
}

impl Answer {
    pub fn is_definite(self) -> bool {
        matches!(self, Answer::Realizable | Answer::Unrealizable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verified {
    Pending,
    Confirmed,
    Refuted,
    McTimeout,
    /// Realizability answers and unrealizable synthesis answers carry no
    /// circuit to check.
    NotRequired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: String,
    pub tool: String,
    pub track: Track,
    pub mode: Mode,
    pub instance: String,
    pub class: String,
    pub answer: Answer,
    /// CPU seconds in sequential mode, wall seconds in parallel mode.
    pub time_s: f64,
    pub solution_size: Option<u64>,
    pub verified: Verified,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunResult {
    /// Definite answer, and for realizable synthesis answers a confirmed
    /// solution.
    pub fn is_solved(&self) -> bool {
        match (self.track, self.answer) {
            (_, a) if !a.is_definite() => false,
            (Track::Synthesis, Answer::Realizable) => self.verified == Verified::Confirmed,
            _ => self.verified != Verified::Refuted,
        }
    }
}
