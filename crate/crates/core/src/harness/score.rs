use std::collections::{BTreeMap, BTreeSet};

use super::{Answer, BenchmarkInstance, Mode, RunResult, Track, Verified};

/// Quality points of a solution with `size` AND gates against a reference of
/// `reference` gates: 2 at the reference, one point per factor of ten,
/// clamped to `[0, 3]`.
pub fn quality_score(size: u64, reference: u64) -> f64 {
    let q = 2.0 - ((size as f64 + 1.0) / (reference as f64 + 1.0)).log10();
    q.clamp(0.0, 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRanking {
    pub config: String,
    pub tool: String,
    pub track: Track,
    pub mode: Mode,
    pub instances: usize,
    pub solved: usize,
    pub unique: usize,
    pub mc_timeout: usize,
    pub quality_total: f64,
    pub quality_avg: f64,
    pub new_references: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Sorted by configuration name.
    pub configs: Vec<ConfigRanking>,
    /// Instances without a library reference, scored against the best size
    /// of this run.
    pub provisional: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceUpdate {
    pub library: Vec<BenchmarkInstance>,
    /// New reference solutions per configuration; ties credit every
    /// configuration reaching the new best size.
    pub credited: BTreeMap<String, usize>,
    pub changed: BTreeSet<String>,
}

fn confirmed_size(r: &RunResult) -> Option<u64> {
    match (r.track, r.answer, r.verified) {
        (Track::Synthesis, Answer::Realizable, Verified::Confirmed) => r.solution_size,
        _ => None,
    }
}

fn best_sizes(results: &[RunResult]) -> BTreeMap<&str, u64> {
    let mut best: BTreeMap<&str, u64> = BTreeMap::new();
    for r in results {
        if let Some(s) = confirmed_size(r) {
            let e = best.entry(r.instance.as_str()).or_insert(s);
            *e = (*e).min(s);
        }
    }
    best
}

/// Replaces each reference by the smallest confirmed solution when that is
/// smaller, or when there was none. References never drop below one gate.
pub fn update_reference(results: &[RunResult], library: &[BenchmarkInstance]) -> ReferenceUpdate {
    let best = best_sizes(results);
    let mut credited: BTreeMap<String, usize> = BTreeMap::new();
    let mut changed = BTreeSet::new();
    let mut library = library.to_vec();
    for inst in &mut library {
        let Some(&b) = best.get(inst.id.as_str()) else {
            continue;
        };
        let new = b.max(1);
        if inst.reference_size.is_some_and(|r| r <= new) {
            continue;
        }
        inst.reference_size = Some(new);
        changed.insert(inst.id.clone());
        let winners: BTreeSet<&str> = results
            .iter()
            .filter(|r| r.instance == inst.id && confirmed_size(r) == Some(b))
            .map(|r| r.config.as_str())
            .collect();
        for w in winners {
            *credited.entry(w.to_string()).or_default() += 1;
        }
    }
    ReferenceUpdate { library, credited, changed }
}

/// Quality of each result in order; `None` for results without a confirmed
/// solution. Also returns the instances scored provisionally.
pub fn result_quality(results: &[RunResult], library: &[BenchmarkInstance]) -> (Vec<Option<f64>>, BTreeSet<String>) {
    let refs: BTreeMap<&str, Option<u64>> = library.iter().map(|i| (i.id.as_str(), i.reference_size)).collect();
    let best = best_sizes(results);
    let mut provisional = BTreeSet::new();
    let q = results
        .iter()
        .map(|r| {
            let size = confirmed_size(r)?;
            let reference = match refs.get(r.instance.as_str()).copied().flatten() {
                Some(x) => x,
                None => {
                    provisional.insert(r.instance.clone());
                    best[r.instance.as_str()].max(1)
                }
            };
            Some(quality_score(size, reference))
        })
        .collect();
    (q, provisional)
}

/// Per-configuration solved, unique, model-checking timeouts, quality and
/// new-reference counts. An instance is unique to a configuration if no
/// other configuration of the same track, in either mode, solved it.
pub fn score_solved(results: &[RunResult], library: &[BenchmarkInstance]) -> Ranking {
    let mut solvers: BTreeMap<(Track, &str), BTreeSet<&str>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.is_solved()) {
        solvers.entry((r.track, r.instance.as_str())).or_default().insert(r.config.as_str());
    }
    let (quality, provisional) = result_quality(results, library);
    let credited = update_reference(results, library).credited;
    let mut by_config: BTreeMap<&str, ConfigRanking> = BTreeMap::new();
    for (r, q) in results.iter().zip(&quality) {
        let e = by_config.entry(r.config.as_str()).or_insert_with(|| ConfigRanking {
            config: r.config.clone(),
            tool: r.tool.clone(),
            track: r.track,
            mode: r.mode,
            instances: 0,
            solved: 0,
            unique: 0,
            mc_timeout: 0,
            quality_total: 0.0,
            quality_avg: 0.0,
            new_references: credited.get(&r.config).copied().unwrap_or(0),
        });
        e.instances += 1;
        if r.verified == Verified::McTimeout {
            e.mc_timeout += 1;
        }
        if r.is_solved() {
            e.solved += 1;
            if solvers[&(r.track, r.instance.as_str())].len() == 1 {
                e.unique += 1;
            }
        }
        if let Some(q) = q {
            e.quality_total += q;
        }
    }
    for e in by_config.values_mut() {
        let with_solution = results.iter().zip(&quality).filter(|(r, q)| r.config == e.config && q.is_some()).count();
        if with_solution > 0 {
            e.quality_avg = e.quality_total / with_solution as f64;
        }
    }
    Ranking { configs: by_config.into_values().collect(), provisional }
}

fn token<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

/// Fixed-precision CSV rendering of a ranking.
pub fn render_ranking(r: &Ranking) -> String {
    let mut out =
        String::from("config,tool,track,mode,instances,solved,unique,mc_timeout,quality_total,quality_avg,new_references\n");
    for c in &r.configs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.3},{:.3},{}\n",
            c.config,
            c.tool,
            token(&c.track),
            token(&c.mode),
            c.instances,
            c.solved,
            c.unique,
            c.mc_timeout,
            c.quality_total,
            c.quality_avg,
            c.new_references
        ));
    }
    out
}
