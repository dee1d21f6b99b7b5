//! Cross-run summary of greedy-evaluation results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::curves::median;
use crate::discover::RunSource;
use crate::error::Result;
use crate::report::EvalReport;

/// One seed's evaluation mean, tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub env: String,
    pub mode: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub env: String,
    pub mode: String,
    pub runs: usize,
    /// Mean over seeds of each seed's greedy mean return.
    pub mean: f64,
    /// Median over seeds of each seed's greedy mean return.
    pub median: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub env: String,
    pub abq_max_mean: f64,
    pub bdq_branch_mean: f64,
    /// `(abq − bdq) / |bdq| · 100`, absent when the bdq mean is zero.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<Row>,
    pub improvements: Vec<Improvement>,
    pub absent: Vec<PathBuf>,
}

pub fn improvement_percent(abq: f64, bdq: f64) -> Option<f64> {
    (bdq != 0.0).then(|| (abq - bdq) / bdq.abs() * 100.0)
}

fn mode_rank(mode: &str) -> (usize, &str) {
    let r = match mode {
        "abq_max_mean" => 0,
        "bdq_branch_mean" => 1,
        "none" => 2,
        _ => 3,
    };
    (r, mode)
}

pub fn summarize(entries: &[Entry], absent: Vec<PathBuf>) -> Comparison {
    let mut groups: BTreeMap<&str, Vec<(&str, Vec<f64>)>> = BTreeMap::new();
    for e in entries {
        let modes = groups.entry(&e.env).or_default();
        match modes.iter_mut().find(|(m, _)| *m == e.mode) {
            Some((_, v)) => v.push(e.mean),
            None => modes.push((&e.mode, vec![e.mean])),
        }
    }

    let mut rows = Vec::new();
    let mut improvements = Vec::new();
    for (env, mut modes) in groups {
        modes.sort_by(|a, b| mode_rank(a.0).cmp(&mode_rank(b.0)));
        let first = rows.len();
        for (mode, means) in &modes {
            rows.push(Row {
                env: env.to_owned(),
                mode: (*mode).to_owned(),
                runs: means.len(),
                mean: means.iter().sum::<f64>() / means.len() as f64,
                median: median(means).expect("non-empty group"),
                best: false,
            });
        }
        let env_rows = &mut rows[first..];
        let top = env_rows.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max);
        for r in env_rows.iter_mut() {
            r.best = r.mean == top;
        }
        let find = |m: &str| env_rows.iter().find(|r| r.mode == m).map(|r| r.mean);
        if let (Some(a), Some(b)) = (find("abq_max_mean"), find("bdq_branch_mean")) {
            improvements.push(Improvement {
                env: env.to_owned(),
                abq_max_mean: a,
                bdq_branch_mean: b,
                percent: improvement_percent(a, b),
            });
        }
    }
    Comparison {
        rows,
        improvements,
        absent,
    }
}

/// Reads each source's eval.json; sources without one are reported as absent.
pub fn compare_runs(sources: &[RunSource]) -> Result<Comparison> {
    let mut entries = Vec::new();
    let mut absent = Vec::new();
    for s in sources {
        if !s.eval_json.is_file() {
            absent.push(s.eval_json.clone());
            continue;
        }
        let report = EvalReport::load(&s.eval_json)?;
        entries.push(Entry {
            env: s.env.clone(),
            mode: s.mode.clone(),
            mean: report.mean,
        });
    }
    Ok(summarize(&entries, absent))
}

impl Comparison {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    /// Plain-text table; `*` marks the best mean per environment.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<16} {:>5} {:>14} {:>14}",
            "env", "mode", "runs", "mean", "median"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:<16} {:>5} {:>14.3} {:>14.3}{}",
                r.env,
                r.mode,
                r.runs,
                r.mean,
                r.median,
                if r.best { " *" } else { "" }
            );
        }
        for i in &self.improvements {
            match i.percent {
                Some(p) => {
                    let _ = writeln!(out, "{}: abq_max_mean vs bdq_branch_mean {:+.2}%", i.env, p);
                }
                None => {
                    let _ = writeln!(out, "{}: abq_max_mean vs bdq_branch_mean undefined (bdq mean is 0)", i.env);
                }
            }
        }
        for a in &self.absent {
            let _ = writeln!(out, "absent: {}", a.display());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(env: &str, mode: &str, mean: f64) -> Entry {
        Entry {
            env: env.into(),
            mode: mode.into(),
            mean,
        }
    }

    #[test]
    fn single_run_is_best() {
        let c = summarize(&[e("pendulum", "none", -200.0)], vec![]);
        assert_eq!(c.rows.len(), 1);
        assert!(c.rows[0].best);
        assert!(c.improvements.is_empty());
    }

    #[test]
    fn hundred_vs_fifty_is_plus_hundred() {
        let c = summarize(&[e("r", "bdq_branch_mean", 50.0), e("r", "abq_max_mean", 100.0)], vec![]);
        assert_eq!(c.improvements[0].percent, Some(100.0));
        assert_eq!(c.rows[0].mode, "abq_max_mean");
        assert!(c.rows[0].best && !c.rows[1].best);
    }

    #[test]
    fn negative_returns_use_magnitude() {
        assert_eq!(improvement_percent(-100.0, -200.0), Some(50.0));
        assert_eq!(improvement_percent(1.0, 0.0), None);
    }

    #[test]
    fn seeds_aggregate_and_absent_is_listed() {
        let c = summarize(
            &[e("p", "none", 1.0), e("p", "none", 2.0), e("p", "none", 6.0)],
            vec![PathBuf::from("x/eval.json")],
        );
        assert_eq!(c.rows[0].runs, 3);
        assert_eq!(c.rows[0].mean, 3.0);
        assert_eq!(c.rows[0].median, 2.0);
        assert!(c.to_table().contains("absent: x/eval.json"));
    }
}
