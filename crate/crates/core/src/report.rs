//! Run summaries and their table, CSV and JSON-lines renderings.
//!
//! CSV and JSON lines hold one row per run and print every number with six
//! significant digits. Wall-clock times are left out unless asked for, so
//! repeated runs with the same seed produce byte-identical output.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::outer::{Algorithm, Solution};

/// One solve inside a report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    /// Seed of the generated instance, when there is one.
    pub instance_seed: Option<u64>,
    /// `Converged`, `MaxOuter`, `LineSearchFailed`, `InnerFailed` or `Error`.
    pub status: String,
    pub f_star: f64,
    pub outer_iters: usize,
    pub total_solves: usize,
    pub psi_norm: f64,
    /// Whether `f_star` matched the known optimum; `None` when there is none.
    pub hit: Option<bool>,
    pub time_s: f64,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn from_solution(run: usize, sol: &Solution, target: Option<(f64, f64)>, time_s: f64) -> Self {
        RunSummary {
            run,
            instance_seed: None,
            status: sol.status.to_string(),
            f_star: sol.f_star,
            outer_iters: sol.outer_iters,
            total_solves: sol.total_subproblem_solves,
            psi_norm: sol.psi_norm,
            hit: target.map(|(f, tol)| sol.converged() && (sol.f_star - f).abs() <= tol),
            time_s,
            error: sol.failure.as_ref().map(|e| e.to_string()),
        }
    }

    pub fn from_error(run: usize, err: &Error, time_s: f64) -> Self {
        RunSummary {
            run,
            instance_seed: None,
            status: "Error".into(),
            f_star: f64::NAN,
            outer_iters: 0,
            total_solves: 0,
            psi_norm: f64::NAN,
            hit: None,
            time_s,
            error: Some(err.to_string()),
        }
    }

    pub fn converged(&self) -> bool {
        self.status == "Converged"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub problem_id: String,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub success_count: usize,
    /// Runs that reached the known optimum, when one is known.
    pub hit_count: Option<usize>,
    /// Means over converged runs (NaN when none converged).
    pub mean_outer: f64,
    pub mean_total: f64,
    pub mean_time_s: f64,
    /// `(n, N)` for generated-instance grids.
    pub cell: Option<(usize, usize)>,
    pub per_run: Vec<RunSummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

impl RunReport {
    pub fn new(problem_id: impl Into<String>, algorithm: Algorithm, cell: Option<(usize, usize)>, per_run: Vec<RunSummary>) -> Self {
        let ok = || per_run.iter().filter(|r| r.converged());
        let hit_count = per_run
            .iter()
            .any(|r| r.hit.is_some())
            .then(|| per_run.iter().filter(|r| r.hit == Some(true)).count());
        RunReport {
            problem_id: problem_id.into(),
            algorithm,
            runs: per_run.len(),
            success_count: ok().count(),
            hit_count,
            mean_outer: mean(ok().map(|r| r.outer_iters as f64)),
            mean_total: mean(ok().map(|r| r.total_solves as f64)),
            mean_time_s: mean(ok().map(|r| r.time_s)),
            cell,
            per_run,
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.success_count as f64 / self.runs as f64
        }
    }

    /// Median outer iterations over converged runs.
    pub fn median_outer(&self) -> Option<f64> {
        let mut v: Vec<usize> = self.per_run.iter().filter(|r| r.converged()).map(|r| r.outer_iters).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable();
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m] as f64
        } else {
            (v[m - 1] + v[m]) as f64 / 2.0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStyle {
    Table,
    Csv,
    JsonLines,
}

impl FromStr for ReportStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "table" => Ok(ReportStyle::Table),
            "csv" => Ok(ReportStyle::Csv),
            "json-lines" | "jsonl" => Ok(ReportStyle::JsonLines),
            other => Err(Error::InvalidConfig(format!("unknown report style `{other}`"))),
        }
    }
}

/// Six significant digits, printed in the shortest form that reads back
/// to the rounded value.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    if rounded != 0.0 && (rounded.abs() < 1e-4 || rounded.abs() >= 1e15) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn sig6_json(v: f64) -> Value {
    if v.is_finite() {
        json!(format!("{v:.5e}").parse::<f64>().unwrap_or(v))
    } else {
        Value::Null
    }
}

pub fn format_report(reports: &[RunReport], style: ReportStyle, timing: bool) -> String {
    match style {
        ReportStyle::Table => table(reports, timing),
        ReportStyle::Csv => csv(reports, timing),
        ReportStyle::JsonLines => json_lines(reports, timing),
    }
}

fn cell_fields(r: &RunReport) -> (String, String) {
    match r.cell {
        Some((n, nn)) => (n.to_string(), nn.to_string()),
        None => (String::new(), String::new()),
    }
}

fn csv(reports: &[RunReport], timing: bool) -> String {
    let mut out = String::from("problem,algorithm,n,N,run,instance_seed,status,f_star,outer,total,psi_norm,hit");
    if timing {
        out.push_str(",time_s");
    }
    out.push('\n');
    for r in reports {
        let (n, nn) = cell_fields(r);
        for run in &r.per_run {
            let _ = write!(
                out,
                "{},{},{n},{nn},{},{},{},{},{},{},{},{}",
                r.problem_id,
                r.algorithm,
                run.run,
                run.instance_seed.map(|s| s.to_string()).unwrap_or_default(),
                run.status,
                sig6(run.f_star),
                run.outer_iters,
                run.total_solves,
                sig6(run.psi_norm),
                run.hit.map(|h| h.to_string()).unwrap_or_default(),
            );
            if timing {
                let _ = write!(out, ",{}", sig6(run.time_s));
            }
            out.push('\n');
        }
    }
    out
}

fn json_lines(reports: &[RunReport], timing: bool) -> String {
    let mut out = String::new();
    for r in reports {
        for run in &r.per_run {
            let mut m = Map::new();
            m.insert("problem".into(), json!(r.problem_id));
            m.insert("algorithm".into(), json!(r.algorithm.to_string()));
            if let Some((n, nn)) = r.cell {
                m.insert("n".into(), json!(n));
                m.insert("N".into(), json!(nn));
            }
            m.insert("run".into(), json!(run.run));
            if let Some(s) = run.instance_seed {
                m.insert("instance_seed".into(), json!(s));
            }
            m.insert("status".into(), json!(run.status));
            m.insert("f_star".into(), sig6_json(run.f_star));
            m.insert("outer".into(), json!(run.outer_iters));
            m.insert("total".into(), json!(run.total_solves));
            m.insert("psi_norm".into(), sig6_json(run.psi_norm));
            if let Some(h) = run.hit {
                m.insert("hit".into(), json!(h));
            }
            if let Some(e) = &run.error {
                m.insert("error".into(), json!(e));
            }
            if timing {
                m.insert("time_s".into(), sig6_json(run.time_s));
            }
            out.push_str(&Value::Object(m).to_string());
            out.push('\n');
        }
    }
    out
}

fn mean2(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.2}")
    }
}

fn table(reports: &[RunReport], timing: bool) -> String {
    let grid = !reports.is_empty() && reports.iter().all(|r| r.cell.is_some());
    let mut header: Vec<&str> = if grid {
        vec!["n", "N", "algorithm", "runs", "success", "out", "total", "median_out"]
    } else {
        vec!["problem", "algorithm", "runs", "success", "hit", "out", "total"]
    };
    if timing {
        header.push("time(s)");
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for r in reports.iter().filter(|r| r.runs > 0) {
        let mut row = if grid {
            let (n, nn) = cell_fields(r);
            vec![
                n,
                nn,
                r.algorithm.to_string(),
                r.runs.to_string(),
                r.success_count.to_string(),
                mean2(r.mean_outer),
                mean2(r.mean_total),
                r.median_outer().map(|m| format!("{m:.1}")).unwrap_or_else(|| "-".into()),
            ]
        } else {
            vec![
                r.problem_id.clone(),
                r.algorithm.to_string(),
                r.runs.to_string(),
                r.success_count.to_string(),
                r.hit_count.map(|h| h.to_string()).unwrap_or_else(|| "-".into()),
                mean2(r.mean_outer),
                mean2(r.mean_total),
            ]
        };
        if timing {
            row.push(format!("{:.4}", r.mean_time_s));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(header.clone(), &mut out);
    for r in &rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(status: &str, outer: usize) -> RunSummary {
        RunSummary {
            run: 0,
            instance_seed: None,
            status: status.into(),
            f_star: 0.595801293,
            outer_iters: outer,
            total_solves: outer + 1,
            psi_norm: 4.98912e-7,
            hit: Some(true),
            time_s: 0.0123,
            error: None,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = RunReport::new("paper1", Algorithm::Newton, None, vec![]);
        let t = format_report(&[r], ReportStyle::Table, false);
        assert_eq!(t.lines().count(), 1);
        assert!(t.starts_with("problem"));
    }

    #[test]
    fn one_converged_row() {
        let r = RunReport::new("paper1", Algorithm::ModifiedNewton, None, vec![run("Converged", 7)]);
        assert_eq!(r.success_count, 1);
        assert_eq!(r.hit_count, Some(1));
        let csv = format_report(std::slice::from_ref(&r), ReportStyle::Csv, false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "paper1,MN,,,0,,Converged,0.595801,7,8,4.98912e-7,true");
        let table = format_report(std::slice::from_ref(&r), ReportStyle::Table, false);
        assert_eq!(table.lines().count(), 2);
        let jl = format_report(&[r], ReportStyle::JsonLines, true);
        let v: Value = serde_json::from_str(jl.trim()).unwrap();
        assert_eq!(v["status"], "Converged");
        assert_eq!(v["f_star"], 0.595801);
        assert_eq!(v["time_s"], 0.0123);
    }

    #[test]
    fn grid_layout() {
        let reports: Vec<RunReport> = [(10, 5), (10, 10), (50, 5)]
            .into_iter()
            .map(|c| RunReport::new("paper3", Algorithm::Newton, Some(c), vec![run("Converged", 5), run("MaxOuter", 100)]))
            .collect();
        let t = format_report(&reports, ReportStyle::Table, true);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].trim_start().starts_with("n"));
        assert!(lines[0].ends_with("time(s)"));
        assert_eq!(reports[0].success_count, 1);
        assert_eq!(reports[0].mean_outer, 5.0);
    }

    #[test]
    fn sig6_examples() {
        assert_eq!(sig6(0.5958012927), "0.595801");
        assert_eq!(sig6(154.2867634), "154.287");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(f64::NAN), "NaN");
    }
}
