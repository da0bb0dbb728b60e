use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{Mode, Track, DEFAULT_TIMEOUT_S};

pub const MAX_CONFIGS_PER_GROUP: usize = 3;
pub const MAX_PARALLEL_CORES: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solver {
    /// The in-process BDD solver.
    Builtin { early_exit: bool },
    /// A shell command with `{input}` and optionally `{output}` placeholders.
    Command { template: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub name: String,
    pub tool: String,
    pub track: Track,
    pub mode: Mode,
    pub timeout_s: u64,
    pub verify_timeout_s: u64,
    pub cores: u32,
    pub solver: Solver,
    pub emit_invariant: bool,
}

impl RunConfig {
    pub fn builtin(name: &str, track: Track, mode: Mode) -> Self {
        RunConfig {
            name: name.into(),
            tool: "aigsynt".into(),
            track,
            mode,
            timeout_s: DEFAULT_TIMEOUT_S,
            verify_timeout_s: DEFAULT_TIMEOUT_S,
            cores: 1,
            solver: Solver::Builtin { early_exit: track == Track::Realizability },
            emit_invariant: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad configuration file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("configuration {0:?}: {1}")]
    Invalid(String, String),
    #[error("tool {tool:?} has more than {MAX_CONFIGS_PER_GROUP} configurations for {track:?} in {mode:?} mode")]
    TooMany { tool: String, track: Track, mode: Mode },
    #[error("duplicate configuration name {0:?}")]
    Duplicate(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    tool: Option<String>,
    track: Track,
    mode: Mode,
    timeout_s: Option<u64>,
    verify_timeout_s: Option<u64>,
    cores: Option<u32>,
    builtin: Option<String>,
    command: Option<String>,
    #[serde(default)]
    emit_invariant: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    config: Vec<Entry>,
}

fn convert(e: Entry) -> Result<RunConfig, ConfigError> {
    let bad = |msg: &str| ConfigError::Invalid(e.name.clone(), msg.to_string());
    let solver = match (&e.builtin, &e.command) {
        (Some(v), None) => match v.as_str() {
            "bdd" => Solver::Builtin { early_exit: false },
            "bdd-early" => Solver::Builtin { early_exit: true },
            _ => return Err(bad("builtin must be \"bdd\" or \"bdd-early\"")),
        },
        (None, Some(t)) if t.contains("{input}") => Solver::Command { template: t.clone() },
        (None, Some(_)) => return Err(bad("command must contain {input}")),
        _ => return Err(bad("exactly one of builtin and command is required")),
    };
    let cores = e.cores.unwrap_or(1);
    match e.mode {
        Mode::Sequential if cores != 1 => return Err(bad("sequential configurations use one core")),
        Mode::Parallel if cores == 0 || cores > MAX_PARALLEL_CORES => {
            return Err(bad("parallel configurations use 1 to 4 cores"))
        }
        _ => {}
    }
    let timeout_s = e.timeout_s.unwrap_or(DEFAULT_TIMEOUT_S);
    if timeout_s == 0 {
        return Err(bad("timeout_s must be positive"));
    }
    let tool = e.tool.clone().unwrap_or_else(|| match solver {
        Solver::Builtin { .. } => "aigsynt".into(),
        Solver::Command { .. } => e.name.clone(),
    });
    Ok(RunConfig {
        name: e.name,
        tool,
        track: e.track,
        mode: e.mode,
        timeout_s,
        verify_timeout_s: e.verify_timeout_s.unwrap_or(DEFAULT_TIMEOUT_S),
        cores,
        solver,
        emit_invariant: e.emit_invariant,
    })
}

/// Parses `[[config]]` tables and enforces the per-tool limits.
pub fn parse_configs(text: &str) -> Result<Vec<RunConfig>, ConfigError> {
    let file: File = toml::from_str(text)?;
    let configs = file.config.into_iter().map(convert).collect::<Result<Vec<_>, _>>()?;
    validate(&configs)?;
    Ok(configs)
}

pub fn load_configs(path: &Path) -> Result<Vec<RunConfig>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_configs(&text)
}

pub fn validate(configs: &[RunConfig]) -> Result<(), ConfigError> {
    let mut groups: BTreeMap<(&str, Track, Mode), usize> = BTreeMap::new();
    let mut names = std::collections::BTreeSet::new();
    for c in configs {
        if !names.insert(c.name.as_str()) {
            return Err(ConfigError::Duplicate(c.name.clone()));
        }
        if c.name.is_empty() || c.name.contains(['/', '\\']) || c.name.starts_with('.') {
            return Err(ConfigError::Invalid(c.name.clone(), "name must be a plain file name".into()));
        }
        let n = groups.entry((&c.tool, c.track, c.mode)).or_default();
        *n += 1;
        if *n > MAX_CONFIGS_PER_GROUP {
            return Err(ConfigError::TooMany { tool: c.tool.clone(), track: c.track, mode: c.mode });
        }
    }
    Ok(())
}
