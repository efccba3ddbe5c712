use std::fs;
use std::path::Path;

use super::RunRecord;
use crate::error::{Error, Result};
use crate::strategies::trace::{from_jsonl, to_jsonl};

pub const TRACES_DIR: &str = "traces";

/// Writes one `<strategy>-<victim>.jsonl` file per run under
/// `dir/traces`, replacing any earlier traces there.
pub fn write_traces(dir: &Path, runs: &[RunRecord]) -> Result<()> {
    let traces = dir.join(TRACES_DIR);
    if traces.exists() {
        for entry in fs::read_dir(&traces).map_err(|e| Error::file(&traces, e))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                fs::remove_file(&path).map_err(|e| Error::file(&path, e))?;
            }
        }
    }
    fs::create_dir_all(&traces).map_err(|e| Error::file(&traces, e))?;
    for r in runs {
        let path = traces.join(format!("{}-{}.jsonl", r.header.strategy, r.header.victim));
        fs::write(&path, to_jsonl(&r.header, &r.trace)).map_err(|e| Error::file(&path, e))?;
    }
    Ok(())
}

/// Reads every `.jsonl` trace in `dir`, or in `dir/traces` when it exists.
pub fn load_traces(dir: &Path) -> Result<Vec<RunRecord>> {
    let nested = dir.join(TRACES_DIR);
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut paths: Vec<_> = fs::read_dir(&dir)
        .map_err(|e| Error::file(&dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Experiment(format!("no traces in {}", dir.display())));
    }
    let mut runs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        let (header, trace) =
            from_jsonl(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        runs.push(RunRecord { header, trace });
    }
    Ok(runs)
}
