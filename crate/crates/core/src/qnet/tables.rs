//! Advantage/Q tables and the baseline module that turns per-branch
//! advantages into tuned Q values.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// How the advantage baseline `B` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMode {
    /// `B = max_i mean_j A(i, j)`, one scalar shared by every branch.
    AbqMaxMean,
    /// `B_i = mean_j A(i, j)`, subtracted per branch.
    BdqBranchMean,
    /// `B = 0`; plain `V + A`.
    None,
}

impl BaselineMode {
    pub const ALL: [BaselineMode; 3] = [
        BaselineMode::AbqMaxMean,
        BaselineMode::BdqBranchMean,
        BaselineMode::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMode::AbqMaxMean => "abq_max_mean",
            BaselineMode::BdqBranchMean => "bdq_branch_mean",
            BaselineMode::None => "none",
        }
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMode {
    type Err = Error;

    /// Accepts the canonical names and the short CLI forms `abq`, `bdq`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abq_max_mean" | "abq" => Ok(BaselineMode::AbqMaxMean),
            "bdq_branch_mean" | "bdq" => Ok(BaselineMode::BdqBranchMean),
            "none" => Ok(BaselineMode::None),
            other => Err(Error::Config(format!("unknown baseline mode `{other}`"))),
        }
    }
}

/// Per-branch sub-action advantages, `n × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageTable(pub(crate) Matrix);

/// Tuned values `Q(i, j) = V + A(i, j) − B`, `n × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable(Matrix);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateValue(pub f64);

#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    Scalar(f64),
    PerBranch(Vec<f64>),
}

/// One sub-action index per branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub indices: Vec<usize>,
}

impl JointAction {
    pub fn new(indices: Vec<usize>) -> Self {
        JointAction { indices }
    }

    /// Checks length `branches` and every index `< sub_actions`.
    pub fn validate(&self, branches: usize, sub_actions: usize) -> Result<()> {
        if self.indices.len() != branches {
            return Err(Error::dim("joint action", branches, self.indices.len()));
        }
        if let Some((i, &j)) = self.indices.iter().enumerate().find(|(_, &j)| j >= sub_actions) {
            return Err(Error::Validation(format!(
                "sub-action index {j} in branch {i} outside [0, {sub_actions})"
            )));
        }
        Ok(())
    }
}

impl AdvantageTable {
    pub fn new(values: Matrix) -> Result<Self> {
        if let Some(k) = values.first_non_finite() {
            return Err(Error::Numeric {
                context: "advantage table".into(),
                index: Some(k),
            });
        }
        Ok(AdvantageTable(values))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn branches(&self) -> usize {
        self.0.rows()
    }

    pub fn sub_actions(&self) -> usize {
        self.0.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, branch: usize, sub_action: usize) -> f64 {
        self.0.get(branch, sub_action)
    }

    pub fn branch_means(&self) -> Vec<f64> {
        let n = self.sub_actions() as f64;
        (0..self.branches())
            .map(|i| self.0.row(i).iter().sum::<f64>() / n)
            .collect()
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        m.map_inplace(|v| v + c);
        AdvantageTable(m)
    }
}

impl QTable {
    pub fn branches(&self) -> usize {
        self.0.rows()
    }

    pub fn sub_actions(&self) -> usize {
        self.0.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, branch: usize, sub_action: usize) -> f64 {
        self.0.get(branch, sub_action)
    }
}

/// Branch with the largest mean and that mean; ties resolve to the lowest
/// branch index. `row` is one flattened `branches × sub_actions` table.
pub(crate) fn max_mean_branch(row: &[f64], sub_actions: usize) -> (usize, f64) {
    let inv = 1.0 / sub_actions as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for (i, chunk) in row.chunks_exact(sub_actions).enumerate() {
        let mean = chunk.iter().sum::<f64>() * inv;
        if mean > best.1 {
            best = (i, mean);
        }
    }
    best
}

pub(crate) fn branch_mean(chunk: &[f64]) -> f64 {
    chunk.iter().sum::<f64>() / chunk.len() as f64
}

/// Index of the largest entry; lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

pub fn baseline(table: &AdvantageTable, mode: BaselineMode) -> Result<Baseline> {
    if table.branches() == 0 || table.sub_actions() == 0 {
        return Err(Error::dim("advantage table", 1, 0));
    }
    Ok(match mode {
        BaselineMode::AbqMaxMean => {
            Baseline::Scalar(max_mean_branch(table.values().as_slice(), table.sub_actions()).1)
        }
        BaselineMode::BdqBranchMean => Baseline::PerBranch(table.branch_means()),
        BaselineMode::None => Baseline::Scalar(0.0),
    })
}

pub fn compose_q(
    value: StateValue,
    table: &AdvantageTable,
    baseline: &Baseline,
    mode: BaselineMode,
) -> Result<QTable> {
    let n = table.branches();
    let mut q = table.values().clone();
    match (mode, baseline) {
        (BaselineMode::AbqMaxMean | BaselineMode::None, Baseline::Scalar(b)) => {
            q.map_inplace(|a| value.0 + a - b);
        }
        (BaselineMode::BdqBranchMean, Baseline::PerBranch(bs)) => {
            if bs.len() != n {
                return Err(Error::Protocol(format!(
                    "per-branch baseline has {} entries for {n} branches",
                    bs.len()
                )));
            }
            for (i, b) in bs.iter().enumerate() {
                for a in q.row_mut(i) {
                    *a = value.0 + *a - b;
                }
            }
        }
        (mode, b) => {
            return Err(Error::Protocol(format!(
                "baseline {b:?} was not produced by mode {mode}"
            )))
        }
    }
    Ok(QTable(q))
}

/// Per-branch argmax of `q`; ties go to the lowest sub-action index.
pub fn greedy_action(q: &QTable) -> JointAction {
    JointAction::new((0..q.branches()).map(|i| argmax(q.values().row(i))).collect())
}
