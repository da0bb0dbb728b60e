use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use aigsynt::aiger::{self, classify_inputs, write_ascii, AigerCircuit};
use aigsynt::game::{build_game, SolveOptions};
use aigsynt::harness::{
    load_configs, load_library, load_results, render_ranking, result_quality, run_suite, score_solved,
    select_benchmarks, update_reference, Mode, ResultStore, SuiteOptions,
};
use aigsynt::limits::{Clock, Deadline, LimitExceeded, Limits, DEFAULT_NODE_BUDGET};
use aigsynt::synth::{emit_invariant, encode_solution, extract_strategy, INVARIANT_SYMBOL};
use aigsynt::verify::{self, check_invariant, model_check, InvariantCheck, McResult};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

const EXIT_REALIZABLE: u8 = 10;
const EXIT_UNREALIZABLE: u8 = 20;
const STACK: usize = 512 << 20;

#[derive(Parser)]
#[command(name = "aigsynt", version, about = "Safety synthesis for AIGER monitor circuits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SolveArgs {
    /// Specification in aag or aig format.
    file: PathBuf,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 3600)]
    timeout: u64,
    /// seq charges CPU time, par wall time.
    #[arg(long, default_value = "seq")]
    mode: Mode,
    /// Write the winning region as a Graphviz file.
    #[arg(long)]
    dump_bdd: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide realizability. Exit status 10 realizable, 20 unrealizable, 0 unknown.
    Solve(SolveArgs),
    /// Synthesize a controller circuit and print it after the verdict line.
    Synth {
        #[command(flatten)]
        args: SolveArgs,
        /// Add an output named "invariant" certifying the solution.
        #[arg(long)]
        emit_invariant: bool,
        /// Write the solution here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a solution against its specification. Exit status 0 safe, 1 unsafe, 2 timeout.
    Verify {
        spec: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = verify::DEFAULT_VERIFY_TIMEOUT.as_secs())]
        timeout: u64,
    },
    /// Run configurations over a benchmark suite.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Rank the results stored in a run directory.
    Score {
        #[arg(long)]
        results: PathBuf,
    },
    /// Normalize a circuit and write it in ascii or binary form.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Write the binary aig profile.
        #[arg(long)]
        binary: bool,
    },
    /// Select the same number of benchmarks from every class.
    Select {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn node_budget() -> Result<usize> {
    match std::env::var("AIGSYNT_NODE_BUDGET") {
        Ok(v) => v.trim().parse().with_context(|| format!("AIGSYNT_NODE_BUDGET={v:?} is not a number")),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn read_circuit(path: &Path) -> Result<AigerCircuit> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    aiger::parse(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

fn limits(timeout: u64, mode: Mode) -> Result<Limits> {
    let clock = match mode {
        Mode::Sequential => Clock::ThreadCpu,
        Mode::Parallel => Clock::Wall,
    };
    Ok(Limits { node_budget: node_budget()?, deadline: Deadline::after(clock, Duration::from_secs(timeout)) })
}

enum Outcome {
    Realizable(Option<AigerCircuit>),
    Unrealizable,
    Unknown(LimitExceeded),
}

fn synthesize(args: &SolveArgs, synth: bool, emit_inv: bool) -> Result<Outcome> {
    let spec = read_circuit(&args.file)?;
    let p = classify_inputs(&spec);
    log::info!("{} uncontrollable, {} controllable inputs", p.uncontrollable.len(), p.controllable.len());
    let mut g = match build_game(&spec, &p, limits(args.timeout, args.mode)?) {
        Ok(g) => g,
        Err(aigsynt::game::GameError::Limit(e)) => return Ok(Outcome::Unknown(e)),
        Err(e) => return Err(e.into()),
    };
    let r = match g.solve(SolveOptions { early_exit: !synth, ..Default::default() }) {
        Ok(r) => r,
        Err(e) => return Ok(Outcome::Unknown(e)),
    };
    log::info!("{} iterations, {} peak nodes", r.iterations, r.stats.peak_nodes);
    if let Some(path) = &args.dump_bdd {
        std::fs::write(path, g.to_dot(r.winning_region))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if !r.realizable {
        return Ok(Outcome::Unrealizable);
    }
    if !synth {
        return Ok(Outcome::Realizable(None));
    }
    let built = extract_strategy(&mut g, r.winning_region).and_then(|s| {
        let sol = encode_solution(&spec, &g, &s)?;
        if emit_inv {
            emit_invariant(&g, &s, &sol)
        } else {
            Ok(sol)
        }
    });
    match built {
        Ok(sol) => Ok(Outcome::Realizable(Some(sol))),
        Err(aigsynt::synth::SynthError::Limit(e)) => Ok(Outcome::Unknown(e)),
        Err(e) => Err(e.into()),
    }
}

fn solve_cmd(args: SolveArgs, synth: bool, emit_inv: bool, output: Option<PathBuf>) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match synthesize(&args, synth, emit_inv)? {
        Outcome::Realizable(sol) => {
            writeln!(out, "REALIZABLE")?;
            if let Some(sol) = sol {
                let text = write_ascii(&sol);
                match output {
                    Some(path) => std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?,
                    None => out.write_all(text.as_bytes())?,
                }
            }
            Ok(ExitCode::from(EXIT_REALIZABLE))
        }
        Outcome::Unrealizable => {
            writeln!(out, "UNREALIZABLE")?;
            Ok(ExitCode::from(EXIT_UNREALIZABLE))
        }
        Outcome::Unknown(e) => {
            writeln!(out, "UNKNOWN")?;
            eprintln!("{e}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn verify_cmd(spec: &Path, solution: &Path, timeout: u64) -> Result<ExitCode> {
    let spec = read_circuit(spec)?;
    let sol = read_circuit(solution)?;
    let p = classify_inputs(&spec);
    let combined = match verify::combine(&spec, &p, &sol) {
        Ok(c) => c,
        Err(e) => {
            println!("REJECT");
            eprintln!("{e}");
            return Ok(ExitCode::from(1));
        }
    };
    let limits = Limits {
        node_budget: node_budget()?,
        deadline: Deadline::after(Clock::Wall, Duration::from_secs(timeout)),
    };
    if let Some(k) = combined.output_named(INVARIANT_SYMBOL).filter(|&k| k > 0) {
        match check_invariant(&combined, k, limits) {
            Ok(InvariantCheck::Accept) => {
                println!("SAFE");
                eprintln!("invariant accepted");
                return Ok(ExitCode::SUCCESS);
            }
            Ok(InvariantCheck::Reject { condition, counterexample }) => eprintln!(
                "invariant rejected ({condition:?}) at latches {} inputs {}; model checking",
                bits(&counterexample.latches),
                bits(&counterexample.inputs)
            ),
            Err(verify::VerifyError::Limit(LimitExceeded::Time)) => {
                println!("TIMEOUT");
                return Ok(ExitCode::from(2));
            }
            Err(e) => eprintln!("invariant check failed: {e}; model checking"),
        }
    }
    match model_check(&combined, limits)? {
        McResult::Safe { iterations } => {
            println!("SAFE");
            eprintln!("fixpoint after {iterations} iterations");
            Ok(ExitCode::SUCCESS)
        }
        McResult::Unsafe { trace } => {
            println!("UNSAFE");
            for step in &trace {
                println!("{}", bits(step));
            }
            Ok(ExitCode::from(1))
        }
        McResult::Timeout => {
            println!("TIMEOUT");
            Ok(ExitCode::from(2))
        }
    }
}

fn run_cmd(suite: &Path, configs: &Path, out: &Path, jobs: usize) -> Result<ExitCode> {
    let library = load_library(suite)?;
    let configs = load_configs(configs)?;
    let mut store = ResultStore::create(out)?;
    std::fs::write(out.join("library.json"), serde_json_pretty(&library)?)?;
    let opts = SuiteOptions { jobs, node_budget: node_budget()? };
    let results = run_suite(&configs, &library, &opts, Some(&mut store))?;
    let (quality, _) = result_quality(&results, &library);
    store.write_csv(&results, &quality)?;
    let ranking = score_solved(&results, &library);
    let text = render_ranking(&ranking);
    std::fs::write(out.join("ranking.csv"), &text)?;
    let updated = update_reference(&results, &library);
    std::fs::write(out.join("references.json"), serde_json_pretty(&updated.library)?)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn serde_json_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn score_cmd(dir: &Path) -> Result<ExitCode> {
    let results = load_results(dir)?;
    let library = load_library(&dir.join("library.json"))?;
    let ranking = score_solved(&results, &library);
    print!("{}", render_ranking(&ranking));
    for id in &ranking.provisional {
        eprintln!("{id}: no reference solution, scored against the best size of this run");
    }
    Ok(ExitCode::SUCCESS)
}

fn convert_cmd(input: &Path, output: &Path, binary: bool) -> Result<ExitCode> {
    let c = aiger::normalize(&read_circuit(input)?)?;
    let bytes = if binary { aiger::write_binary(&c)? } else { write_ascii(&c).into_bytes() };
    std::fs::write(output, bytes).with_context(|| format!("cannot write {}", output.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn select_cmd(suite: &Path, per_class: usize, seed: u64) -> Result<ExitCode> {
    let library = load_library(suite)?;
    for inst in select_benchmarks(&library, per_class, seed)? {
        println!("{}", inst.id);
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Solve(args) => solve_cmd(args, false, false, None),
        Cmd::Synth { args, emit_invariant, output } => solve_cmd(args, true, emit_invariant, output),
        Cmd::Verify { spec, solution, timeout } => verify_cmd(&spec, &solution, timeout),
        Cmd::Run { suite, configs, out, jobs } => {
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            run_cmd(&suite, &configs, &out, jobs)
        }
        Cmd::Score { results } => score_cmd(&results),
        Cmd::Convert { input, output, binary } => convert_cmd(&input, &output, binary),
        Cmd::Select { suite, per_class, seed } => select_cmd(&suite, per_class, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    // solver recursion is bounded by the variable count, not the default stack
    let worker = std::thread::Builder::new().stack_size(STACK).spawn(move || dispatch(cli));
    let result = match worker {
        Ok(h) => h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("internal error"))),
        Err(e) => Err(e.into()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
