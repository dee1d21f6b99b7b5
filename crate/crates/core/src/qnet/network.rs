//! The four-part branching dueling network: shared trunk, state-value head,
//! one advantage head per action dimension, and the baseline module.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tables::{
    argmax, baseline, branch_mean, compose_q, max_mean_branch, AdvantageTable, Baseline,
    BaselineMode, JointAction, QTable, StateValue,
};
use crate::error::{Error, Result};
use crate::nn::{Activation, Matrix, Mlp, MlpGrads, ParamSet};

/// Hidden widths: trunk `state → trunk_hidden → features`, each head
/// `features → head_hidden → out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetWidths {
    pub trunk_hidden: usize,
    pub features: usize,
    pub head_hidden: usize,
}

impl Default for NetWidths {
    fn default() -> Self {
        NetWidths {
            trunk_hidden: 256,
            features: 128,
            head_hidden: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchingNet {
    trunk: Mlp,
    value_head: Mlp,
    branch_heads: Vec<Mlp>,
    sub_actions: usize,
}

/// Gradients laid out like [`BranchingNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingGrads {
    pub trunk: MlpGrads,
    pub value_head: MlpGrads,
    pub branch_heads: Vec<MlpGrads>,
}

/// Intermediate activations of one [`BranchingNet::evaluate`] call.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    trunk: Vec<Matrix>,
    value: Vec<Matrix>,
    branches: Vec<Vec<Matrix>>,
}

/// Batched network output. Row `b` of `advantages` is the flattened
/// `branches × sub_actions` table for state `b`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    values: Vec<f64>,
    advantages: Matrix,
    branches: usize,
    sub_actions: usize,
    cache: ForwardCache,
}

/// Seeded network construction. Structure: trunk `state_dim → 256 → 128`,
/// value head `128 → 64 → 1`, `branches` heads `128 → 64 → sub_actions`
/// with the default widths.
pub fn init_network(
    state_dim: usize,
    branches: usize,
    sub_actions: usize,
    widths: NetWidths,
    seed: u64,
) -> Result<BranchingNet> {
    check_dims(state_dim, branches, sub_actions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relu = Activation::Relu;
    let trunk = Mlp::init(
        &[state_dim, widths.trunk_hidden, widths.features],
        relu,
        relu,
        &mut rng,
    )?;
    let value_head = Mlp::init(
        &[widths.features, widths.head_hidden, 1],
        relu,
        Activation::Identity,
        &mut rng,
    )?;
    let branch_heads = (0..branches)
        .map(|_| {
            Mlp::init(
                &[widths.features, widths.head_hidden, sub_actions],
                relu,
                Activation::Identity,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    BranchingNet::from_parts(trunk, value_head, branch_heads)
}

fn check_dims(state_dim: usize, branches: usize, sub_actions: usize) -> Result<()> {
    if state_dim == 0 || branches == 0 || sub_actions == 0 {
        return Err(Error::Config(format!(
            "state_dim, branches and sub_actions must be positive (got {state_dim}, {branches}, {sub_actions})"
        )));
    }
    Ok(())
}

impl BranchingNet {
    /// Same structure as [`init_network`], every parameter zero.
    pub fn zeros(state_dim: usize, branches: usize, sub_actions: usize, widths: NetWidths) -> Result<Self> {
        check_dims(state_dim, branches, sub_actions)?;
        let relu = Activation::Relu;
        let id = Activation::Identity;
        BranchingNet::from_parts(
            Mlp::zeros(&[state_dim, widths.trunk_hidden, widths.features], relu, relu)?,
            Mlp::zeros(&[widths.features, widths.head_hidden, 1], relu, id)?,
            (0..branches)
                .map(|_| Mlp::zeros(&[widths.features, widths.head_hidden, sub_actions], relu, id))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn from_parts(trunk: Mlp, value_head: Mlp, branch_heads: Vec<Mlp>) -> Result<Self> {
        let features = trunk.output_width();
        if branch_heads.is_empty() {
            return Err(Error::Config("a branching network needs at least one branch".into()));
        }
        if value_head.input_width() != features {
            return Err(Error::dim("value head input", features, value_head.input_width()));
        }
        if value_head.output_width() != 1 {
            return Err(Error::dim("value head output", 1, value_head.output_width()));
        }
        let sub_actions = branch_heads[0].output_width();
        for (i, head) in branch_heads.iter().enumerate() {
            if head.input_width() != features {
                return Err(Error::dim(format!("branch {i} input"), features, head.input_width()));
            }
            if head.output_width() != sub_actions {
                return Err(Error::dim(format!("branch {i} output"), sub_actions, head.output_width()));
            }
        }
        Ok(BranchingNet {
            trunk,
            value_head,
            branch_heads,
            sub_actions,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.trunk.input_width()
    }

    pub fn branches(&self) -> usize {
        self.branch_heads.len()
    }

    pub fn sub_actions(&self) -> usize {
        self.sub_actions
    }

    pub fn widths(&self) -> NetWidths {
        NetWidths {
            trunk_hidden: self.trunk.layers()[0].output_width(),
            features: self.trunk.output_width(),
            head_hidden: self.value_head.layers()[0].output_width(),
        }
    }

    pub fn trunk(&self) -> &Mlp {
        &self.trunk
    }

    pub fn value_head(&self) -> &Mlp {
        &self.value_head
    }

    pub fn branch_heads(&self) -> &[Mlp] {
        &self.branch_heads
    }

    /// One shared trunk pass feeding the value head and every branch head.
    pub fn evaluate(&self, states: &Matrix) -> Result<Evaluation> {
        if states.cols() != self.state_dim() {
            return Err(Error::dim("state batch", self.state_dim(), states.cols()));
        }
        let trunk = self.trunk.forward(states)?;
        let features = trunk.last().expect("trunk output");
        let value = self.value_head.forward(features)?;
        let branches = self
            .branch_heads
            .iter()
            .map(|h| h.forward(features))
            .collect::<Result<Vec<_>>>()?;

        let batch = states.rows();
        let (n, m) = (self.branches(), self.sub_actions);
        let mut advantages = Matrix::zeros(batch, n * m);
        for (i, acts) in branches.iter().enumerate() {
            let out = acts.last().expect("head output");
            for b in 0..batch {
                advantages.row_mut(b)[i * m..(i + 1) * m].copy_from_slice(out.row(b));
            }
        }
        let values = value.last().expect("value output").as_slice().to_vec();
        Ok(Evaluation {
            values,
            advantages,
            branches: n,
            sub_actions: m,
            cache: ForwardCache {
                trunk,
                value,
                branches,
            },
        })
    }

    /// Backpropagates `∂L/∂V` (one per state) and `∂L/∂A` (same layout as
    /// [`Evaluation::advantages`]) through heads and trunk.
    pub fn backward(&self, eval: &Evaluation, d_values: &[f64], d_advantages: &Matrix) -> Result<BranchingGrads> {
        let batch = eval.batch_size();
        let (n, m) = (self.branches(), self.sub_actions);
        if eval.branches != n || eval.sub_actions != m || eval.cache.branches.len() != n {
            return Err(Error::Protocol("evaluation was produced by a different network shape".into()));
        }
        if d_values.len() != batch {
            return Err(Error::dim("value gradient", batch, d_values.len()));
        }
        if d_advantages.rows() != batch || d_advantages.cols() != n * m {
            return Err(Error::dim("advantage gradient", n * m, d_advantages.cols()));
        }

        let dv = Matrix::from_vec(batch, 1, d_values.to_vec())?;
        let (value_head, mut d_features) = self.value_head.backward_with_input_grad(&eval.cache.value, &dv)?;
        let mut branch_heads = Vec::with_capacity(n);
        let mut d_out = Matrix::zeros(batch, m);
        for (i, head) in self.branch_heads.iter().enumerate() {
            for b in 0..batch {
                d_out.row_mut(b).copy_from_slice(&d_advantages.row(b)[i * m..(i + 1) * m]);
            }
            let (g, df) = head.backward_with_input_grad(&eval.cache.branches[i], &d_out)?;
            for (acc, x) in d_features.as_mut_slice().iter_mut().zip(df.as_slice()) {
                *acc += x;
            }
            branch_heads.push(g);
        }
        let trunk = self.trunk.backward(&eval.cache.trunk, &d_features)?;
        Ok(BranchingGrads {
            trunk,
            value_head,
            branch_heads,
        })
    }

    /// Greedy joint action for a single state.
    pub fn greedy(&self, state: &[f64], mode: BaselineMode) -> Result<JointAction> {
        let eval = self.evaluate(&Matrix::from_vec(1, state.len(), state.to_vec())?)?;
        Ok(super::greedy_action(&eval.q_table(0, mode)?))
    }
}

impl Evaluation {
    pub fn batch_size(&self) -> usize {
        self.values.len()
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn sub_actions(&self) -> usize {
        self.sub_actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn advantages(&self) -> &Matrix {
        &self.advantages
    }

    pub fn state_value(&self, b: usize) -> StateValue {
        StateValue(self.values[b])
    }

    pub fn advantage_table(&self, b: usize) -> AdvantageTable {
        let m = Matrix::from_vec(self.branches, self.sub_actions, self.advantages.row(b).to_vec())
            .expect("row holds branches × sub_actions entries");
        AdvantageTable(m)
    }

    /// Tuned Q table for state `b` under `mode`.
    pub fn q_table(&self, b: usize, mode: BaselineMode) -> Result<QTable> {
        let table = self.advantage_table(b);
        let base = baseline(&table, mode)?;
        compose_q(self.state_value(b), &table, &base, mode)
    }

    /// Advantage entries the branch heads produced per state.
    pub fn sub_action_evaluations(&self) -> usize {
        let total: usize = self
            .cache
            .branches
            .iter()
            .map(|acts| acts.last().map_or(0, |m| m.as_slice().len()))
            .sum();
        total / self.batch_size().max(1)
    }

    pub fn cache(&self) -> &ForwardCache {
        &self.cache
    }

    /// `max_j Q_i(b, j)` for every branch of state `b`, written into `out`.
    pub(crate) fn branch_max_q(&self, b: usize, mode: BaselineMode, out: &mut [f64]) {
        let m = self.sub_actions;
        let row = self.advantages.row(b);
        let v = self.values[b];
        let shared = match mode {
            BaselineMode::AbqMaxMean => max_mean_branch(row, m).1,
            _ => 0.0,
        };
        for (i, chunk) in row.chunks_exact(m).enumerate() {
            let base = match mode {
                BaselineMode::BdqBranchMean => branch_mean(chunk),
                _ => shared,
            };
            out[i] = v + chunk[argmax(chunk)] - base;
        }
    }

    /// `Q_i(b, a_i)` for the chosen sub-actions, written into `out`.
    pub(crate) fn chosen_q(&self, b: usize, action: &[usize], mode: BaselineMode, out: &mut [f64]) -> Baseline {
        let m = self.sub_actions;
        let row = self.advantages.row(b);
        let v = self.values[b];
        match mode {
            BaselineMode::AbqMaxMean | BaselineMode::None => {
                let base = if mode == BaselineMode::AbqMaxMean {
                    max_mean_branch(row, m).1
                } else {
                    0.0
                };
                for (i, chunk) in row.chunks_exact(m).enumerate() {
                    out[i] = v + chunk[action[i]] - base;
                }
                Baseline::Scalar(base)
            }
            BaselineMode::BdqBranchMean => {
                let means: Vec<f64> = row.chunks_exact(m).map(branch_mean).collect();
                for (i, chunk) in row.chunks_exact(m).enumerate() {
                    out[i] = v + chunk[action[i]] - means[i];
                }
                Baseline::PerBranch(means)
            }
        }
    }
}

impl ParamSet for BranchingNet {
    fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.trunk.slices();
        s.extend(self.value_head.slices());
        for h in &self.branch_heads {
            s.extend(h.slices());
        }
        s
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.trunk.slices_mut();
        s.extend(self.value_head.slices_mut());
        for h in &mut self.branch_heads {
            s.extend(h.slices_mut());
        }
        s
    }
}

impl ParamSet for BranchingGrads {
    fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.trunk.slices();
        s.extend(self.value_head.slices());
        for h in &self.branch_heads {
            s.extend(h.slices());
        }
        s
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.trunk.slices_mut();
        s.extend(self.value_head.slices_mut());
        for h in &mut self.branch_heads {
            s.extend(h.slices_mut());
        }
        s
    }
}
