use std::collections::VecDeque;
use std::path::Path;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::aiger::{self, classify_inputs, AigerCircuit, InputPartition};
use crate::game::{build_game, GameError, SolveOptions};
use crate::limits::{Clock, Deadline, LimitExceeded, Limits, DEFAULT_NODE_BUDGET};
use crate::synth::{emit_invariant, encode_solution, extract_strategy, solution_size, SynthError};
use crate::verify::{verify_solution, Verdict};

use super::exec::run_command;
use super::store::{ResultStore, StoreError};
use super::{Answer, BenchmarkInstance, Mode, RunConfig, RunResult, Solver, Track, Verified};

/// Stack size for solver and verifier threads; BDD recursion depth grows
/// with the number of variables.
pub(crate) const WORKER_STACK: usize = 512 << 20;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Concurrent jobs.
    pub jobs: usize,
    pub node_budget: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { jobs: 1, node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// What a solver produced before verification.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub answer: Answer,
    pub time_s: f64,
    pub solution: Option<AigerCircuit>,
    pub size: Option<u64>,
    pub message: Option<String>,
}

impl SolverOutput {
    fn failed(answer: Answer, time_s: f64, message: String) -> Self {
        SolverOutput { answer, time_s, solution: None, size: None, message: Some(message) }
    }
}

/// Solves `spec` in-process. Sequential mode charges the calling thread's
/// CPU time. The reported size excludes invariant logic.
pub fn run_builtin(
    spec: &AigerCircuit,
    track: Track,
    mode: Mode,
    timeout: Duration,
    early_exit: bool,
    emit_inv: bool,
    node_budget: usize,
) -> SolverOutput {
    let clock = match mode {
        Mode::Sequential => Clock::ThreadCpu,
        Mode::Parallel => Clock::Wall,
    };
    let deadline = Deadline::after(clock, timeout);
    let limits = Limits { node_budget, deadline };
    let limit_answer = |e: LimitExceeded| match e {
        LimitExceeded::Time => (Answer::Timeout, e.to_string()),
        LimitExceeded::Nodes => (Answer::Unknown, e.to_string()),
    };
    let elapsed = || deadline.elapsed().as_secs_f64();
    let p = classify_inputs(spec);
    let mut g = match build_game(spec, &p, limits) {
        Ok(g) => g,
        Err(GameError::Limit(e)) => {
            let (a, m) = limit_answer(e);
            return SolverOutput::failed(a, elapsed(), m);
        }
        Err(e) => return SolverOutput::failed(Answer::Error, elapsed(), e.to_string()),
    };
    let early_exit = early_exit && track == Track::Realizability;
    let r = match g.solve(SolveOptions { early_exit, ..Default::default() }) {
        Ok(r) => r,
        Err(e) => {
            let (a, m) = limit_answer(e);
            return SolverOutput::failed(a, elapsed(), m);
        }
    };
    if !r.realizable || track == Track::Realizability {
        let answer = if r.realizable { Answer::Realizable } else { Answer::Unrealizable };
        return SolverOutput { answer, time_s: elapsed(), solution: None, size: None, message: None };
    }
    let built = extract_strategy(&mut g, r.winning_region).and_then(|s| {
        let sol = encode_solution(spec, &g, &s)?;
        let size = solution_size(&sol) as u64;
        let sol = if emit_inv { emit_invariant(&g, &s, &sol)? } else { sol };
        Ok((sol, size))
    });
    match built {
        Ok((sol, size)) => SolverOutput {
            answer: Answer::Realizable,
            time_s: elapsed(),
            solution: Some(sol),
            size: Some(size),
            message: None,
        },
        Err(SynthError::Limit(e)) => {
            let (a, m) = limit_answer(e);
            SolverOutput::failed(a, elapsed(), m)
        }
        Err(e) => SolverOutput::failed(Answer::Error, elapsed(), e.to_string()),
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn command_attempt(template: &str, cfg: &RunConfig, input: &Path) -> SolverOutput {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return SolverOutput::failed(Answer::Error, 0.0, e.to_string()),
    };
    let out_path = dir.path().join("solution.aag");
    let cmd = template
        .replace("{input}", &shell_quote(&input.display().to_string()))
        .replace("{output}", &shell_quote(&out_path.display().to_string()));
    let o = match run_command(&cmd, cfg.mode, Duration::from_secs(cfg.timeout_s)) {
        Ok(o) => o,
        Err(e) => return SolverOutput::failed(Answer::Error, 0.0, e.to_string()),
    };
    let time_s = o.charged(cfg.mode);
    if o.timed_out {
        return SolverOutput::failed(Answer::Timeout, time_s, "time limit reached".into());
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    let (first, rest) = stdout.split_once('\n').unwrap_or((&stdout, ""));
    let answer = match (o.exit_code, first.trim()) {
        (Some(10), _) | (Some(0), "REALIZABLE") => Answer::Realizable,
        (Some(20), _) | (Some(0), "UNREALIZABLE") => Answer::Unrealizable,
        (Some(0), _) => Answer::Unknown,
        (code, _) => {
            let tail = String::from_utf8_lossy(&o.stderr).lines().last().unwrap_or("").to_string();
            return SolverOutput::failed(Answer::Error, time_s, format!("exit status {code:?}: {tail}"));
        }
    };
    if answer != Answer::Realizable || cfg.track == Track::Realizability {
        return SolverOutput { answer, time_s, solution: None, size: None, message: None };
    }
    let text = if template.contains("{output}") {
        std::fs::read(&out_path).map_err(|e| e.to_string())
    } else {
        Ok(rest.as_bytes().to_vec())
    };
    match text.and_then(|t| aiger::parse(&t).map_err(|e| e.to_string())) {
        Ok(sol) => {
            let size = Some(solution_size(&sol) as u64);
            SolverOutput { answer, time_s, solution: Some(sol), size, message: None }
        }
        Err(e) => SolverOutput { answer, time_s, solution: None, size: None, message: Some(format!("bad solution: {e}")) },
    }
}

/// Runs one configuration on one instance, verifying synthesized solutions.
pub fn run_one(cfg: &RunConfig, inst: &BenchmarkInstance, node_budget: usize) -> RunResult {
    let mut result = RunResult {
        config: cfg.name.clone(),
        tool: cfg.tool.clone(),
        track: cfg.track,
        mode: cfg.mode,
        instance: inst.id.clone(),
        class: inst.class.clone(),
        answer: Answer::Error,
        time_s: 0.0,
        solution_size: None,
        verified: Verified::NotRequired,
        message: None,
    };
    let spec = match std::fs::read(&inst.path).map_err(|e| e.to_string()).and_then(|b| {
        aiger::parse(&b).map_err(|e| e.to_string())
    }) {
        Ok(c) => c,
        Err(e) => {
            result.message = Some(format!("{}: {e}", inst.path.display()));
            return result;
        }
    };
    let attempt = match &cfg.solver {
        Solver::Builtin { early_exit } => run_builtin(
            &spec,
            cfg.track,
            cfg.mode,
            Duration::from_secs(cfg.timeout_s),
            *early_exit,
            cfg.emit_invariant,
            node_budget,
        ),
        Solver::Command { template } => command_attempt(template, cfg, &inst.path),
    };
    result.answer = attempt.answer;
    result.time_s = attempt.time_s;
    result.solution_size = attempt.size;
    result.message = attempt.message;
    if cfg.track == Track::Synthesis && attempt.answer == Answer::Realizable {
        result.verified = match attempt.solution {
            None => Verified::Refuted,
            Some(sol) => {
                let p: InputPartition = classify_inputs(&spec);
                let deadline = Deadline::after(Clock::Wall, Duration::from_secs(cfg.verify_timeout_s));
                match verify_solution(&spec, &p, &sol, deadline, node_budget) {
                    Verdict::Confirmed => Verified::Confirmed,
                    Verdict::McTimeout => Verified::McTimeout,
                    Verdict::Refuted(why) => {
                        result.message = Some(why);
                        Verified::Refuted
                    }
                }
            }
        };
    }
    result
}

/// Runs every configuration on every instance with `opts.jobs` workers.
/// Results are persisted by a single writer as they arrive and returned in
/// configuration-major, instance-minor order.
pub fn run_suite(
    configs: &[RunConfig],
    instances: &[BenchmarkInstance],
    opts: &SuiteOptions,
    mut store: Option<&mut ResultStore>,
) -> Result<Vec<RunResult>, StoreError> {
    let jobs: VecDeque<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..instances.len()).map(move |i| (c, i))).collect();
    let total = jobs.len();
    let queue = Arc::new(Mutex::new(jobs));
    let (tx, rx) = mpsc::channel::<(usize, RunResult)>();
    let configs = Arc::new(configs.to_vec());
    let instances = Arc::new(instances.to_vec());
    let mut handles = Vec::new();
    for w in 0..opts.jobs.max(1).min(total.max(1)) {
        let (queue, tx, configs, instances) = (queue.clone(), tx.clone(), configs.clone(), instances.clone());
        let budget = opts.node_budget;
        let n_inst = instances.len();
        let h = std::thread::Builder::new()
            .name(format!("worker-{w}"))
            .stack_size(WORKER_STACK)
            .spawn(move || loop {
                let Some((c, i)) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                let cfg = &configs[c];
                let inst = &instances[i];
                log::info!("running {} on {}", cfg.name, inst.id);
                let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_one(cfg, inst, budget)))
                    .unwrap_or_else(|_| RunResult {
                        config: cfg.name.clone(),
                        tool: cfg.tool.clone(),
                        track: cfg.track,
                        mode: cfg.mode,
                        instance: inst.id.clone(),
                        class: inst.class.clone(),
                        answer: Answer::Error,
                        time_s: 0.0,
                        solution_size: None,
                        verified: Verified::NotRequired,
                        message: Some("solver panicked".into()),
                    });
                if tx.send((c * n_inst + i, r)).is_err() {
                    break;
                }
            })
            .expect("spawn worker");
        handles.push(h);
    }
    drop(tx);
    let mut slots: Vec<Option<RunResult>> = vec![None; total];
    let mut failure = None;
    for (k, r) in rx {
        if let Some(s) = store.as_deref_mut() {
            if let Err(e) = s.persist(&r) {
                failure.get_or_insert(e);
            }
        }
        slots[k] = Some(r);
    }
    for h in handles {
        let _ = h.join();
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(slots.into_iter().map(|r| r.expect("every job reports")).collect())
}
