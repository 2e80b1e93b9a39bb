use std::path::{Path, PathBuf};

use super::io::write_atomic;
use super::results::{ResultsTable, SCOPE_ALL};
use super::RESULTS_CSV;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ReportSummary {
    pub text: String,
    pub files: Vec<PathBuf>,
}

struct Series {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Series {
    fn read(path: &Path) -> Result<Series> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let row = rec
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Dataset(format!("{}: non-numeric cell", path.display())))?;
            rows.push(row);
        }
        Ok(Series { header, rows })
    }

    fn column(&self, name: &str, path: &Path) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Dataset(format!("{}: no `{name}` column", path.display())))
    }

    /// Copies the named columns verbatim from `text`.
    fn project(text: &str, cols: &[usize]) -> String {
        text.lines()
            .map(|l| {
                let cells: Vec<&str> = l.split(',').collect();
                cols.iter().map(|&c| cells[c]).collect::<Vec<_>>().join(",") + "\n"
            })
            .collect()
    }
}

/// Reads the artifacts of a completed run under `results_dir` and writes an
/// aligned summary table plus figure-data CSVs to `results_dir/report`.
pub fn report(results_dir: &Path) -> Result<ReportSummary> {
    let results = results_dir.join(RESULTS_CSV);
    if !results.is_file() {
        return Err(Error::MissingArtifacts(vec![results]));
    }
    let table = ResultsTable::read_csv(&results)?;
    let tasks: Vec<String> = table.tasks().into_iter().map(String::from).collect();
    let needed = |t: &str| ["policy.csv", "diagnostics.csv"].map(|f| results_dir.join(t).join(f));
    let missing: Vec<PathBuf> = tasks
        .iter()
        .flat_map(|t| needed(t))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() || tasks.is_empty() {
        return Err(Error::MissingArtifacts(if missing.is_empty() { vec![results] } else { missing }));
    }

    let out = results_dir.join("report");
    let mut files = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let p = out.join(name);
        write_atomic(&p, body)?;
        files.push(p);
        Ok(())
    };

    let mut text = table.to_text();
    text.push('\n');
    for task in &tasks {
        let [policy_path, diag_path] = needed(task);
        let policy_text = std::fs::read_to_string(&policy_path).map_err(|e| Error::io(&policy_path, e))?;
        let policy = Series::read(&policy_path)?;
        let diag_text = std::fs::read_to_string(&diag_path).map_err(|e| Error::io(&diag_path, e))?;
        let diag = Series::read(&diag_path)?;

        let h = policy.column("entropy", &policy_path)?;
        let e = diag.column("entropy", &diag_path)?;
        for v in policy.rows.iter().map(|r| r[h]).chain(diag.rows.iter().map(|r| r[e])) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Score(format!("{task}: entropy {v} outside [0, 1]")));
            }
        }

        let t = policy.column("t", &policy_path)?;
        let probs: Vec<usize> = (0..policy.header.len()).filter(|&c| policy.header[c].starts_with('p')).collect();
        emit(
            format!("fig_policy_{task}.csv"),
            Series::project(&policy_text, &[&[t][..], &probs].concat()),
        )?;
        emit(format!("fig_entropy_{task}.csv"), Series::project(&policy_text, &[t, h]))?;
        let cols = ["t", "entropy", "diversity"]
            .map(|c| diag.column(c, &diag_path))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        emit(format!("fig_diagnostics_{task}.csv"), Series::project(&diag_text, &cols))?;
        let cols = ["t", "best_score", "best_so_far", "mean_score"]
            .map(|c| diag.column(c, &diag_path))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        emit(format!("fig_convergence_{task}.csv"), Series::project(&diag_text, &cols))?;

        let first = policy.rows.first().map_or(f64::NAN, |r| r[h]);
        let last = policy.rows.last().map_or(f64::NAN, |r| r[h]);
        let d = diag.column("diversity", &diag_path)?;
        let min_div = diag.rows.iter().map(|r| r[d]).fold(f64::INFINITY, f64::min);
        text += &format!(
            "{task}: entropy {first:.3} -> {last:.3} over {} generations; min diversity {min_div:.3}\n",
            diag.rows.len()
        );
    }

    let mut comparison = String::from("task,scope,method,features,rmse_val,total_score\n");
    for r in table.headline().filter(|r| r.scope == SCOPE_ALL) {
        comparison += &format!("{},{},{},\"{}\",{},{}\n", r.task, r.scope, r.method, r.features, r.rmse_val, r.total_score);
    }
    for r in table.headline().filter(|r| r.scope != SCOPE_ALL) {
        comparison += &format!("{},{},{},\"{}\",{},{}\n", r.task, r.scope, r.method, r.features, r.rmse_val, r.total_score);
    }
    emit("fig_comparison.csv".into(), comparison)?;
    emit("summary.txt".into(), text.clone())?;
    Ok(ReportSummary { text, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_lists_missing() {
        let dir = tempfile::tempdir().unwrap();
        match report(dir.path()) {
            Err(Error::MissingArtifacts(p)) => assert_eq!(p, vec![dir.path().join(RESULTS_CSV)]),
            other => panic!("{other:?}"),
        }
    }
}
