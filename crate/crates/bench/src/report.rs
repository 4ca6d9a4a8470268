use std::path::Path;

use crate::{BenchError, BenchResult};

fn sorted(results: &[BenchResult]) -> Vec<BenchResult> {
    let mut rows = results.to_vec();
    rows.sort_by(|a, b| (a.mode, a.n_objects).cmp(&(b.mode, b.n_objects)));
    rows
}

/// Writes `mode,n_objects,iterations,mean_us,std_us,min_us,max_us`, one row per
/// (mode, N) sorted by mode then N, and prints the same table to stdout.
pub fn emit_report(results: &[BenchResult], path: impl AsRef<Path>) -> Result<(), BenchError> {
    if results.is_empty() {
        return Err(BenchError::Empty);
    }
    let rows = sorted(results);
    let mut w = csv::Writer::from_path(path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    print!("{}", render_table(&rows));
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<BenchResult>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<BenchResult>, _>>()?)
}

pub fn render_table(results: &[BenchResult]) -> String {
    let mut out = format!(
        "{:<8} {:>6} {:>6} {:>12} {:>12} {:>12} {:>12}\n",
        "mode", "n", "iters", "mean_us", "std_us", "min_us", "max_us"
    );
    for r in sorted(results) {
        out += &format!(
            "{:<8} {:>6} {:>6} {:>12.1} {:>12.1} {:>12.1} {:>12.1}\n",
            r.mode.to_string(),
            r.n_objects,
            r.iterations,
            r.mean_us,
            r.std_us,
            r.min_us,
            r.max_us
        );
    }
    out
}
