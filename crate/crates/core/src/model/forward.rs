//! The forward pass, recorded on a tape so it can be differentiated.

use std::collections::BTreeMap;

use super::params::{ModelParams, ParamKey};
use crate::error::{Error, Result};
use crate::grad::{hyper, Tape, Var};
use crate::graph::SessionGraph;
use crate::manifold::MAX_NORM;

/// LeakyReLU slope used by every attention nonlinearity.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Lazily binds parameters to tape leaves, one leaf per tensor.
pub struct Binder<'p> {
    params: &'p ModelParams,
    bound: BTreeMap<ParamKey, Var>,
    projected: BTreeMap<usize, Var>,
}

impl<'p> Binder<'p> {
    pub fn new(params: &'p ModelParams) -> Self {
        Self::with_leaves(params, BTreeMap::new())
    }

    /// Starts from pre-bound leaves, e.g. ones created by a gradient checker.
    pub fn with_leaves(params: &'p ModelParams, bound: BTreeMap<ParamKey, Var>) -> Self {
        Self {
            params,
            bound,
            projected: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> &'p ModelParams {
        self.params
    }

    pub fn var(&mut self, t: &mut Tape, key: ParamKey) -> Var {
        *self
            .bound
            .entry(key)
            .or_insert_with(|| t.leaf(self.params.tensor(key).to_vec()))
    }

    pub fn bound(&self) -> &BTreeMap<ParamKey, Var> {
        &self.bound
    }

    /// `h¹` of the item at vocabulary index `index`, memoized per binder.
    pub fn projected_item(&mut self, t: &mut Tape, index: usize) -> Var {
        if let Some(v) = self.projected.get(&index) {
            return *v;
        }
        let raw = self.var(t, ParamKey::Item(index));
        let out = hyperbolic_projection(t, self, raw);
        self.projected.insert(index, out);
        out
    }
}

fn check_interval(t_norm: f64) -> Result<()> {
    if (0.0..=MAX_NORM).contains(&t_norm) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "normalized interval {t_norm} outside [0, 1 - eps]"
        )))
    }
}

/// `m = exp_0(h⁰)`, then `h¹ = W1 ⊗ m`.
pub fn hyperbolic_projection(t: &mut Tape, b: &mut Binder, raw: Var) -> Var {
    let p = b.params();
    let (rows, cols) = (p.w1.rows, p.w1.cols);
    let m = hyper::exp0(t, raw);
    let w1 = b.var(t, ParamKey::W1);
    hyper::matvec(t, w1, rows, cols, m)
}

/// `h_{t'} = w_t ⊗ t'`, treating `t'` as a point of the one-dimensional ball.
pub fn time_embedding(t: &mut Tape, b: &mut Binder, t_norm: f64) -> Result<Var> {
    check_interval(t_norm)?;
    let dim = b.params().dim;
    let wt = b.var(t, ParamKey::WT);
    let x = t.constant(vec![t_norm]);
    Ok(hyper::matvec(t, wt, dim, 1, x))
}

/// Softmax of `sign · d(h_i, h_j)` over `N_i`. Returns the neighbour list
/// alongside a vector node of weights in the same order.
pub fn attention_coefficients(
    t: &mut Tape,
    b: &Binder,
    states: &[Var],
    g: &SessionGraph,
    i: usize,
) -> Result<(Vec<(usize, f64)>, Var)> {
    let cfg = b.params().config;
    let neigh = g.neighbors(i, cfg.direction)?;
    let sign = cfg.attention_sign.value();
    let scores: Vec<Var> = neigh
        .iter()
        .map(|&(j, _)| {
            let d = hyper::distance(t, states[i], states[j]);
            t.mul_const(d, sign)
        })
        .collect();
    let logits = t.stack(&scores);
    Ok((neigh, softmax(t, logits)))
}

fn softmax(t: &mut Tape, logits: Var) -> Var {
    let max = t.value(logits).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted = t.add_const(logits, -max);
    let e = t.exp(shifted);
    let total = t.sum(e);
    let inv = t.recip(total);
    t.scale(e, inv)
}

/// One time-aware hyperbolic self-attention layer over all nodes.
pub fn self_attention_layer(
    t: &mut Tape,
    b: &mut Binder,
    states: &[Var],
    g: &SessionGraph,
) -> Result<Vec<Var>> {
    let mut out = Vec::with_capacity(states.len());
    for i in 0..states.len() {
        let (neigh, alpha) = attention_coefficients(t, b, states, g, i)?;
        let mut acc: Option<Var> = None;
        for (k, &(j, interval)) in neigh.iter().enumerate() {
            let ht = time_embedding(t, b, interval)?;
            let joint = hyper::mobius_add(t, states[j], ht);
            let a = t.index(alpha, k);
            let weighted = hyper::scalar_mul(t, a, joint);
            let tangent = hyper::log0(t, weighted);
            acc = Some(match acc {
                Some(s) => t.add(s, tangent),
                None => tangent,
            });
        }
        let sum = acc.expect("neighbourhood always contains the node itself");
        let act = t.leaky_relu(sum, LEAKY_SLOPE);
        out.push(hyper::exp0(t, act));
    }
    Ok(out)
}

/// `β_pq = xᵀ ⊗ σ((W2 ⊗ h_p) ⊕ (W3 ⊗ h_q) ⊕ c)` for every node `q`, as a
/// vector node of signed scalars in `(−1, 1)`.
pub fn soft_attention_weights(
    t: &mut Tape,
    b: &mut Binder,
    states: &[Var],
    g: &SessionGraph,
) -> Var {
    let d = b.params().dim;
    let w2 = b.var(t, ParamKey::W2);
    let w3 = b.var(t, ParamKey::W3);
    let c = b.var(t, ParamKey::CBias);
    let x = b.var(t, ParamKey::XAtt);
    let last = hyper::matvec(t, w2, d, d, states[g.last_index]);
    let betas: Vec<Var> = states
        .iter()
        .map(|&hq| {
            let wq = hyper::matvec(t, w3, d, d, hq);
            let inner = hyper::mobius_add(t, last, wq);
            let inner = hyper::mobius_add(t, inner, c);
            let act = tangent_activation(t, inner);
            let beta = hyper::matvec(t, x, 1, d, act);
            t.index(beta, 0)
        })
        .collect();
    t.stack(&betas)
}

/// `exp_0(LeakyReLU(log_0(p)))`.
fn tangent_activation(t: &mut Tape, p: Var) -> Var {
    let v = hyper::log0(t, p);
    let v = t.leaky_relu(v, LEAKY_SLOPE);
    hyper::exp0(t, v)
}

/// Session readout `h_s` keyed on the last item. The β weights are used as
/// is, without normalization.
pub fn soft_attention_session(
    t: &mut Tape,
    b: &mut Binder,
    states: &[Var],
    g: &SessionGraph,
) -> Var {
    let betas = soft_attention_weights(t, b, states, g);
    let mut acc: Option<Var> = None;
    for (q, &hq) in states.iter().enumerate() {
        let beta = t.index(betas, q);
        let weighted = hyper::scalar_mul(t, beta, hq);
        let tangent = hyper::log0(t, weighted);
        acc = Some(match acc {
            Some(s) => t.add(s, tangent),
            None => tangent,
        });
    }
    let sum = acc.expect("session graph has at least one node");
    let act = t.leaky_relu(sum, LEAKY_SLOPE);
    hyper::exp0(t, act)
}

/// `ĥ_s = exp_0(σ(log_0(h_s) ∗ (1 + log_0(h_{t'}))))`.
pub fn project_session_future(t: &mut Tape, h_s: Var, h_t: Var) -> Var {
    let base = hyper::log0(t, h_s);
    let tv = hyper::log0(t, h_t);
    let factor = t.add_const(tv, 1.0);
    let prod = t.mul(base, factor);
    let act = t.leaky_relu(prod, LEAKY_SLOPE);
    hyper::exp0(t, act)
}

/// `ĥ_v = exp_0(tanh(log_0((W4 ⊗ ĥ_s) ⊕ (W5 ⊗ h_last) ⊕ h_{t'})))`.
pub fn project_item_future(
    t: &mut Tape,
    b: &mut Binder,
    h_s_future: Var,
    h_last: Var,
    h_t: Var,
) -> Var {
    let d = b.params().dim;
    let w4 = b.var(t, ParamKey::W4);
    let w5 = b.var(t, ParamKey::W5);
    let a = hyper::matvec(t, w4, d, d, h_s_future);
    let l = hyper::matvec(t, w5, d, d, h_last);
    let s = hyper::mobius_add(t, a, l);
    let s = hyper::mobius_add(t, s, h_t);
    let v = hyper::log0(t, s);
    let v = t.tanh(v);
    hyper::exp0(t, v)
}

/// Nodes produced by a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Final-layer node embeddings, indexed like the graph's nodes.
    pub states: Vec<Var>,
    pub h_s: Var,
    pub h_t: Var,
    pub h_s_future: Var,
    /// Final-layer embedding of the graph's last item.
    pub h_last: Var,
    pub h_v_future: Var,
}

/// Runs projection, the attention layers, the readout, and both heads for a
/// query `t_norm` past the graph's last event.
pub fn forward(
    t: &mut Tape,
    b: &mut Binder,
    g: &SessionGraph,
    t_norm: f64,
) -> Result<ForwardOutput> {
    check_interval(t_norm)?;
    let p = b.params();
    let mut states = g
        .nodes
        .iter()
        .map(|&item| Ok(b.projected_item(t, p.item_index(item)?)))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..p.config.layers {
        states = self_attention_layer(t, b, &states, g)?;
    }
    let h_s = soft_attention_session(t, b, &states, g);
    let h_t = time_embedding(t, b, t_norm)?;
    let h_s_future = project_session_future(t, h_s, h_t);
    let h_last = states[g.last_index];
    let h_v_future = project_item_future(t, b, h_s_future, h_last, h_t);
    Ok(ForwardOutput {
        states,
        h_s,
        h_t,
        h_s_future,
        h_last,
        h_v_future,
    })
}
