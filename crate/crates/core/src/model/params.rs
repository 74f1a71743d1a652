use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::graph::{Direction, ItemId};
use crate::manifold::{self, BallPoint, Matrix, TangentVector};

/// Sign applied to distances inside the attention softmax.
///
/// `Positive` is the literal `exp(+d)` form, which favours farther neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AttentionSign {
    #[default]
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl AttentionSign {
    pub fn value(self) -> f64 {
        match self {
            AttentionSign::Positive => 1.0,
            AttentionSign::Negative => -1.0,
        }
    }
}

impl std::str::FromStr for AttentionSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(AttentionSign::Positive),
            "-1" | "-" => Ok(AttentionSign::Negative),
            other => Err(Error::InvalidArgument(format!(
                "attention sign must be +1 or -1, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for AttentionSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttentionSign::Positive => "+1",
            AttentionSign::Negative => "-1",
        })
    }
}

/// Architecture switches that shape the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub attention_sign: AttentionSign,
    pub direction: Direction,
    pub lambda_s: f64,
    pub lambda_v: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            attention_sign: AttentionSign::Positive,
            direction: Direction::In,
            lambda_s: 0.1,
            lambda_v: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.layers) {
            return Err(Error::InvalidArgument(format!(
                "layers must be in 1..=3, got {}",
                self.layers
            )));
        }
        if !(self.lambda_s >= 0.0 && self.lambda_v >= 0.0) {
            return Err(Error::InvalidArgument(
                "lambda_s and lambda_v must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Identifies one learnable tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    /// Feature row of the item at this vocabulary index.
    Item(usize),
    W1,
    W2,
    W3,
    W4,
    W5,
    XAtt,
    CBias,
    WT,
}

impl ParamKey {
    /// Parameters constrained to the ball.
    pub fn is_ball(self) -> bool {
        matches!(self, ParamKey::Item(_) | ParamKey::CBias)
    }

    pub fn name(self) -> String {
        match self {
            ParamKey::Item(i) => format!("item[{i}]"),
            ParamKey::W1 => "W1".into(),
            ParamKey::W2 => "W2".into(),
            ParamKey::W3 => "W3".into(),
            ParamKey::W4 => "W4".into(),
            ParamKey::W5 => "W5".into(),
            ParamKey::XAtt => "x_att".into(),
            ParamKey::CBias => "c_bias".into(),
            ParamKey::WT => "w_t".into(),
        }
    }

    /// Every non-item parameter.
    pub const DENSE: [ParamKey; 8] = [
        ParamKey::W1,
        ParamKey::W2,
        ParamKey::W3,
        ParamKey::W4,
        ParamKey::W5,
        ParamKey::XAtt,
        ParamKey::CBias,
        ParamKey::WT,
    ];
}

/// The full learnable state of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub dim: usize,
    pub feature_dim: usize,
    pub vocab: Vocabulary,
    /// Raw item features `h⁰`, one per vocabulary index.
    pub item_table: Vec<BallPoint>,
    /// `dim × feature_dim`
    pub w1: Matrix,
    pub w2: Matrix,
    pub w3: Matrix,
    pub w4: Matrix,
    pub w5: Matrix,
    pub x_att: Vec<f64>,
    pub c_bias: BallPoint,
    pub w_t: Vec<f64>,
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix {
        rows,
        cols,
        data: (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect(),
    }
}

impl ModelParams {
    /// Random initialization.
    ///
    /// With `categories`, each item starts from the one-hot vector of its
    /// category (items without one get a random vector); otherwise all
    /// features are drawn from `U[-init_scale, init_scale]^dim`.
    pub fn init(
        vocab: Vocabulary,
        dim: usize,
        categories: Option<&[Option<usize>]>,
        init_scale: f64,
        config: ModelConfig,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if vocab.is_empty() {
            return Err(Error::InvalidArgument("empty item vocabulary".into()));
        }
        if !(init_scale >= 0.0 && init_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "init scale must be finite and nonnegative, got {init_scale}"
            )));
        }
        let n_cat = categories
            .map(|c| c.iter().flatten().map(|k| k + 1).max().unwrap_or(0))
            .unwrap_or(0);
        let feature_dim = if n_cat > 0 { n_cat } else { dim };
        let item_table = (0..vocab.len())
            .map(|i| {
                let raw = match categories.and_then(|c| c.get(i).copied().flatten()) {
                    Some(k) if n_cat > 0 => {
                        let mut v = vec![0.0; feature_dim];
                        v[k] = 1.0;
                        v
                    }
                    _ => (0..feature_dim).map(|_| rng.gen_range(-init_scale..=init_scale)).collect(),
                };
                manifold::project_to_ball(raw)
            })
            .collect::<Result<Vec<_>>>()?;
        let w1 = glorot(rng, dim, feature_dim);
        let w2 = glorot(rng, dim, dim);
        let w3 = glorot(rng, dim, dim);
        let w4 = glorot(rng, dim, dim);
        let w5 = glorot(rng, dim, dim);
        let x_att = glorot(rng, 1, dim).data;
        let w_t = glorot(rng, dim, 1).data;
        Ok(Self {
            config,
            dim,
            feature_dim,
            vocab,
            item_table,
            w1,
            w2,
            w3,
            w4,
            w5,
            x_att,
            c_bias: BallPoint::origin(dim),
            w_t,
        })
    }

    pub fn num_items(&self) -> usize {
        self.item_table.len()
    }

    pub fn item_index(&self, item: ItemId) -> Result<usize> {
        self.vocab.index(item).ok_or(Error::UnknownItem(item))
    }

    pub fn tensor(&self, key: ParamKey) -> &[f64] {
        match key {
            ParamKey::Item(i) => self.item_table[i].coords(),
            ParamKey::W1 => &self.w1.data,
            ParamKey::W2 => &self.w2.data,
            ParamKey::W3 => &self.w3.data,
            ParamKey::W4 => &self.w4.data,
            ParamKey::W5 => &self.w5.data,
            ParamKey::XAtt => &self.x_att,
            ParamKey::CBias => self.c_bias.coords(),
            ParamKey::WT => &self.w_t,
        }
    }

    /// Replaces a tensor; ball-constrained tensors are projected onto the ball.
    pub fn set_tensor(&mut self, key: ParamKey, values: Vec<f64>) -> Result<()> {
        if values.len() != self.tensor(key).len() {
            return Err(Error::InvalidArgument(format!(
                "{} expects {} values, got {}",
                key.name(),
                self.tensor(key).len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("parameter update"));
        }
        match key {
            ParamKey::Item(i) => self.item_table[i] = manifold::project_to_ball(values)?,
            ParamKey::CBias => self.c_bias = manifold::project_to_ball(values)?,
            ParamKey::W1 => self.w1.data = values,
            ParamKey::W2 => self.w2.data = values,
            ParamKey::W3 => self.w3.data = values,
            ParamKey::W4 => self.w4.data = values,
            ParamKey::W5 => self.w5.data = values,
            ParamKey::XAtt => self.x_att = values,
            ParamKey::WT => self.w_t = values,
        }
        Ok(())
    }

    /// Projected embedding `h¹ = W1 ⊗ exp_0(h⁰)` of one item.
    pub fn project_item(&self, index: usize) -> BallPoint {
        let raw = TangentVector::new(self.item_table[index].coords().to_vec())
            .expect("ball points are finite");
        let m = manifold::exp_map(&BallPoint::origin(self.feature_dim), &raw);
        manifold::mobius_matvec(&self.w1, &m)
    }

    /// `h¹` for every item in vocabulary order.
    pub fn projected_table(&self) -> Vec<BallPoint> {
        use rayon::prelude::*;
        (0..self.num_items())
            .into_par_iter()
            .map(|i| self.project_item(i))
            .collect()
    }
}

/// Sparse gradient keyed by parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub tensors: BTreeMap<ParamKey, Vec<f64>>,
}

impl Gradients {
    pub fn accumulate(&mut self, key: ParamKey, g: &[f64]) {
        match self.tensors.get_mut(&key) {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => {
                self.tensors.insert(key, g.to_vec());
            }
        }
    }

    pub fn merge(&mut self, other: &Gradients) {
        for (k, g) in &other.tensors {
            self.accumulate(*k, g);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.tensors
            .values_mut()
            .flat_map(|g| g.iter_mut())
            .for_each(|v| *v *= s);
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .values()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().flatten().all(|v| v.is_finite())
    }

    pub fn get(&self, key: ParamKey) -> Option<&[f64]> {
        self.tensors.get(&key).map(Vec::as_slice)
    }
}
