use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{BenchmarkInstance, RunResult, Track};

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("benchmark library is empty")]
    Empty,
    #[error("per_class must be at least 1")]
    PerClass,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("duplicate instance id {0:?}")]
    Duplicate(String),
}

/// Takes every instance of classes with at most `per_class` members and a
/// seeded uniform sample of `per_class` from larger ones. The result is
/// sorted by class, then id.
pub fn select_benchmarks(
    library: &[BenchmarkInstance],
    per_class: usize,
    seed: u64,
) -> Result<Vec<BenchmarkInstance>, LibraryError> {
    if library.is_empty() {
        return Err(LibraryError::Empty);
    }
    if per_class == 0 {
        return Err(LibraryError::PerClass);
    }
    let mut classes: BTreeMap<&str, Vec<&BenchmarkInstance>> = BTreeMap::new();
    for inst in library {
        classes.entry(inst.class.as_str()).or_default().push(inst);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for members in classes.values_mut() {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        if members.len() <= per_class {
            out.extend(members.iter().map(|&i| i.clone()));
        } else {
            let mut picked = rand::seq::index::sample(&mut rng, members.len(), per_class).into_vec();
            picked.sort_unstable();
            out.extend(picked.into_iter().map(|k| members[k].clone()));
        }
    }
    Ok(out)
}

/// Instances solved by at least one realizability configuration, sorted.
pub fn eligible_for_synthesis(results: &[RunResult]) -> Vec<String> {
    results
        .iter()
        .filter(|r| r.track == Track::Realizability && r.is_solved())
        .map(|r| r.instance.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Deserialize)]
struct ReferenceRow {
    instance: String,
    reference_size: u64,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LibraryError + '_ {
    move |source| LibraryError::Io { path: path.to_path_buf(), source }
}

/// Loads a library. `source` is either a JSON array of instances or a suite
/// directory laid out as `<class>/<name>.aag` (or `.aig`), with an optional
/// `references.csv` of `instance,reference_size` rows keyed by
/// `<class>/<name>`.
pub fn load_library(source: &Path) -> Result<Vec<BenchmarkInstance>, LibraryError> {
    if source.is_file() {
        let text = fs::read_to_string(source).map_err(io(source))?;
        let lib: Vec<BenchmarkInstance> = serde_json::from_str(&text)
            .map_err(|e| LibraryError::Format { path: source.to_path_buf(), message: e.to_string() })?;
        check_ids(&lib)?;
        return Ok(lib);
    }
    let mut lib = Vec::new();
    let mut classes: Vec<PathBuf> =
        fs::read_dir(source).map_err(io(source))?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    classes.sort();
    for dir in classes {
        let class = dir.file_name().unwrap().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "aag" || e == "aig"))
            .collect();
        files.sort();
        for path in files {
            let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
            lib.push(BenchmarkInstance { id: format!("{class}/{stem}"), path, class: class.clone(), reference_size: None });
        }
    }
    let refs = source.join("references.csv");
    if refs.is_file() {
        let mut rd = csv::Reader::from_path(&refs)
            .map_err(|e| LibraryError::Format { path: refs.clone(), message: e.to_string() })?;
        let mut map = BTreeMap::new();
        for row in rd.deserialize::<ReferenceRow>() {
            let row = row.map_err(|e| LibraryError::Format { path: refs.clone(), message: e.to_string() })?;
            if row.reference_size == 0 {
                return Err(LibraryError::Format { path: refs.clone(), message: "reference_size must be positive".into() });
            }
            map.insert(row.instance, row.reference_size);
        }
        for inst in &mut lib {
            inst.reference_size = map.get(&inst.id).copied();
        }
    }
    check_ids(&lib)?;
    Ok(lib)
}

fn check_ids(lib: &[BenchmarkInstance]) -> Result<(), LibraryError> {
    let mut seen = BTreeSet::new();
    for i in lib {
        if !seen.insert(i.id.as_str()) {
            return Err(LibraryError::Duplicate(i.id.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Answer, Mode, Verified};

    fn library(sizes: &[(&str, usize)]) -> Vec<BenchmarkInstance> {
        sizes
            .iter()
            .flat_map(|&(class, n)| {
                (0..n).map(move |k| BenchmarkInstance {
                    id: format!("{class}/{k:03}"),
                    path: PathBuf::from(format!("{class}/{k:03}.aag")),
                    class: class.to_string(),
                    reference_size: None,
                })
            })
            .collect()
    }

    #[test]
    fn small_classes_are_taken_whole() {
        let lib = library(&[("a", 3), ("b", 10)]);
        let s = select_benchmarks(&lib, 5, 1).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.iter().filter(|i| i.class == "a").count(), 3);
        assert_eq!(s, select_benchmarks(&lib, 5, 1).unwrap());
        let other: Vec<_> = (2..20).map(|seed| select_benchmarks(&lib, 5, seed).unwrap()).collect();
        assert!(other.iter().any(|o| *o != s));
    }

    #[test]
    fn selection_errors() {
        assert!(matches!(select_benchmarks(&[], 5, 1), Err(LibraryError::Empty)));
        assert!(matches!(select_benchmarks(&library(&[("a", 1)]), 0, 1), Err(LibraryError::PerClass)));
    }

    #[test]
    fn eligibility_is_a_union() {
        let r = |config: &str, instance: &str, answer, track| RunResult {
            config: config.into(),
            tool: "t".into(),
            track,
            mode: Mode::Sequential,
            instance: instance.into(),
            class: "k".into(),
            answer,
            time_s: 0.0,
            solution_size: None,
            verified: Verified::NotRequired,
            message: None,
        };
        let results = vec![
            r("A", "1", Answer::Realizable, Track::Realizability),
            r("B", "2", Answer::Unrealizable, Track::Realizability),
            r("A", "2", Answer::Timeout, Track::Realizability),
            r("A", "3", Answer::Unknown, Track::Realizability),
            r("S", "4", Answer::Unrealizable, Track::Synthesis),
        ];
        assert_eq!(eligible_for_synthesis(&results), vec!["1".to_string(), "2".to_string()]);
        assert!(eligible_for_synthesis(&[]).is_empty());
    }

    #[test]
    fn loads_suite_directory() {
        let dir = tempfile::tempdir().unwrap();
        for (class, name) in [("x", "p"), ("x", "q"), ("y", "r")] {
            fs::create_dir_all(dir.path().join(class)).unwrap();
            fs::write(dir.path().join(class).join(format!("{name}.aag")), "aag 0 0 0 1 0\n0\n").unwrap();
        }
        fs::write(dir.path().join("x/notes.txt"), "ignored").unwrap();
        fs::write(dir.path().join("references.csv"), "instance,reference_size\nx/q,12\n").unwrap();
        let lib = load_library(dir.path()).unwrap();
        let ids: Vec<_> = lib.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["x/p", "x/q", "y/r"]);
        assert_eq!(lib[1].reference_size, Some(12));
        assert_eq!(lib[0].reference_size, None);
        let json = dir.path().join("library.json");
        fs::write(&json, serde_json::to_string(&lib).unwrap()).unwrap();
        assert_eq!(load_library(&json).unwrap(), lib);
    }
}
