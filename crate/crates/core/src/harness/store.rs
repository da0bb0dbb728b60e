use std::fs;
use std::path::{Path, PathBuf};

use super::RunResult;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Instance ids may contain the class directory; flatten them into one
/// file name.
fn file_stem(id: &str) -> String {
    id.replace(['/', '\\'], "__")
}

/// Append-only store of run records below `<root>/results/`.
#[derive(Debug)]
pub struct ResultStore {
    root: PathBuf,
}

impl ResultStore {
    pub fn create(root: &Path) -> Result<Self, StoreError> {
        let dir = root.join("results");
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        Ok(ResultStore { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `results/<config>/<instance>.json`, replacing an earlier record
    /// of the same pair atomically.
    pub fn persist(&mut self, r: &RunResult) -> Result<(), StoreError> {
        let dir = self.root.join("results").join(&r.config);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = dir.join(format!("{}.json", file_stem(&r.instance)));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(r).map_err(|source| StoreError::Json { path: path.clone(), source })?;
        fs::write(&tmp, text + "\n").map_err(io(&tmp))?;
        fs::rename(&tmp, &path).map_err(io(&path))?;
        Ok(())
    }

    /// Writes `results.csv` for a finished suite.
    pub fn write_csv(&self, results: &[RunResult], quality: &[Option<f64>]) -> Result<(), StoreError> {
        let path = self.root.join("results.csv");
        fs::write(&path, render_results_csv(results, quality)?).map_err(io(&path))
    }
}

/// Every persisted record below `<root>/results/`, sorted by configuration
/// and instance.
pub fn load_results(root: &Path) -> Result<Vec<RunResult>, StoreError> {
    let dir = root.join("results");
    let mut out = Vec::new();
    for cfg in fs::read_dir(&dir).map_err(io(&dir))? {
        let cfg = cfg.map_err(io(&dir))?.path();
        if !cfg.is_dir() {
            continue;
        }
        for f in fs::read_dir(&cfg).map_err(io(&cfg))? {
            let f = f.map_err(io(&cfg))?.path();
            if f.extension().is_some_and(|e| e == "json") {
                let text = fs::read_to_string(&f).map_err(io(&f))?;
                let r: RunResult =
                    serde_json::from_str(&text).map_err(|source| StoreError::Json { path: f.clone(), source })?;
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| (&a.config, &a.instance).cmp(&(&b.config, &b.instance)));
    Ok(out)
}

fn token<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

/// `config,instance,class,answer,time_s,size,verified,quality`, one row per
/// result in the given order.
pub fn render_results_csv(results: &[RunResult], quality: &[Option<f64>]) -> Result<String, StoreError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "instance", "class", "answer", "time_s", "size", "verified", "quality"])?;
    for (k, r) in results.iter().enumerate() {
        w.write_record([
            r.config.clone(),
            r.instance.clone(),
            r.class.clone(),
            token(&r.answer),
            format!("{:.2}", r.time_s),
            r.solution_size.map(|s| s.to_string()).unwrap_or_default(),
            token(&r.verified),
            quality.get(k).copied().flatten().map(|q| format!("{q:.3}")).unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
