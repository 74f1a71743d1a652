//! Evolutionary loss, projected gradient descent, and the training loop.

mod checkpoint;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::grad::{hyper, Tape, Var};
use crate::graph::{Direction, IntervalNormalizer, ItemId, SessionGraph, SessionRecord};
use crate::manifold::{self, BallPoint, TangentVector};
use crate::model::{self, AttentionSign, Binder, Gradients, ModelConfig, ModelParams};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

/// How ball-constrained parameters are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Retraction {
    /// Euclidean step followed by projection onto the ball.
    #[default]
    Project,
    /// Riemannian step `exp_θ(−lr · g / λ_θ²)`.
    Exp,
}

impl std::str::FromStr for Retraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "project" => Ok(Retraction::Project),
            "exp" => Ok(Retraction::Exp),
            other => Err(Error::InvalidArgument(format!("unknown retraction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda_s: f64,
    pub lambda_v: f64,
    pub seed: u64,
    pub attention_sign: AttentionSign,
    pub layers: usize,
    pub direction: Direction,
    pub tau: f64,
    pub cap: f64,
    /// Margin of the optional one-negative hinge term; `None` trains on the
    /// pure distance loss.
    pub margin: Option<f64>,
    pub retraction: Retraction,
    /// Emit one example per prefix of length ≥ 2 instead of one per session.
    pub augment_prefixes: bool,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Half-width of the uniform item-feature initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 60,
            learning_rate: 0.01,
            epochs: 10,
            batch_size: 64,
            lambda_s: 0.1,
            lambda_v: 0.1,
            seed: 0,
            attention_sign: AttentionSign::Positive,
            layers: 1,
            direction: Direction::In,
            tau: 60.0,
            cap: 86_400.0,
            margin: None,
            retraction: Retraction::Project,
            augment_prefixes: false,
            clip_norm: 5.0,
            init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and nonnegative");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init scale must be finite and nonnegative");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip norm must be positive");
        }
        if let Some(m) = self.margin {
            if !(m > 0.0 && m.is_finite()) {
                return bad("margin must be positive");
            }
        }
        self.model_config().validate()?;
        self.normalizer().map(|_| ())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            attention_sign: self.attention_sign,
            direction: self.direction,
            lambda_s: self.lambda_s,
            lambda_v: self.lambda_v,
        }
    }

    pub fn normalizer(&self) -> Result<IntervalNormalizer> {
        IntervalNormalizer::new(self.tau, self.cap)
    }
}

/// A session prefix, the item that followed it, and the normalized gap
/// between the prefix's last click and that item.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub graph: SessionGraph,
    pub target_item: ItemId,
    pub target_interval: f64,
}

impl TrainingExample {
    /// Uses `events[..cut]` as the prefix and `events[cut]` as the target.
    pub fn from_session(
        record: &SessionRecord,
        cut: usize,
        norm: &IntervalNormalizer,
    ) -> Result<Self> {
        if cut == 0 || cut >= record.events.len() {
            return Err(Error::InvalidArgument(format!(
                "cut {cut} invalid for a session of length {}",
                record.events.len()
            )));
        }
        let graph = SessionGraph::from_events(&record.events[..cut], norm)?;
        let target = record.events[cut];
        let target_interval = norm.normalize(target.timestamp - record.events[cut - 1].timestamp)?;
        Ok(Self {
            graph,
            target_item: target.item,
            target_interval,
        })
    }
}

/// One example per session of length ≥ 2 (the full prefix), or one per
/// prefix when `augment` is set.
pub fn make_examples(
    sessions: &[SessionRecord],
    norm: &IntervalNormalizer,
    augment: bool,
) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for s in sessions.iter().filter(|s| s.len() >= 2) {
        let n = s.len();
        let cuts = if augment { 1..n } else { n - 1..n };
        for cut in cuts {
            out.push(TrainingExample::from_session(s, cut, norm)?);
        }
    }
    Ok(out)
}

/// Individual loss terms, as tape nodes.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub item: Var,
    pub session: Var,
    pub consistency: Var,
    pub total: Var,
    /// The predicted next-item embedding `ĥ_v`.
    pub prediction: Var,
}

/// Evolutionary loss
/// `d(ĥ_v, h_{v_n}) + λ_s·d(ĥ_s, h_s) + λ_v·d(h_{v_n}, h_{v_{n−1}})`.
pub fn compute_loss(
    t: &mut Tape,
    b: &mut Binder,
    example: &TrainingExample,
) -> Result<LossTerms> {
    let params = b.params();
    let target = params.item_index(example.target_item)?;
    let out = model::forward(t, b, &example.graph, example.target_interval)?;
    let h_target = b.projected_item(t, target);
    let item = hyper::distance(t, out.h_v_future, h_target);
    let session = hyper::distance(t, out.h_s_future, out.h_s);
    let consistency = hyper::distance(t, h_target, out.h_last);
    let ws = t.mul_const(session, params.config.lambda_s);
    let wv = t.mul_const(consistency, params.config.lambda_v);
    let total = t.add(item, ws);
    let total = t.add(total, wv);
    Ok(LossTerms {
        item,
        session,
        consistency,
        total,
        prediction: out.h_v_future,
    })
}

/// Loss of one example and its gradient. With `negative`, adds the hinge
/// `max(0, margin − d(ĥ_v, h_neg))`.
pub fn loss_and_gradients(
    params: &ModelParams,
    example: &TrainingExample,
    negative: Option<(usize, f64)>,
) -> Result<(f64, Gradients)> {
    let mut t = Tape::new();
    let mut b = Binder::new(params);
    let terms = compute_loss(&mut t, &mut b, example)?;
    let mut total = terms.total;
    if let Some((neg, margin)) = negative {
        let h_neg = b.projected_item(&mut t, neg);
        let d = hyper::distance(&mut t, terms.prediction, h_neg);
        let gap = t.neg(d);
        let gap = t.add_const(gap, margin);
        let hinge = t.leaky_relu(gap, 0.0);
        total = t.add(total, hinge);
    }
    let loss = t.scalar(total);
    let adj = t.backward(total)?;
    let mut grads = Gradients::default();
    for (key, var) in b.bound() {
        grads.accumulate(*key, adj.wrt(*var));
    }
    Ok((loss, grads))
}

/// One clipped gradient step. Ball-constrained tensors stay inside the ball.
pub fn optimizer_step(
    params: &mut ModelParams,
    grads: &Gradients,
    lr: f64,
    retraction: Retraction,
    clip_norm: f64,
) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    let norm = grads.norm();
    let scale = if norm > clip_norm { clip_norm / norm } else { 1.0 };
    for (key, g) in &grads.tensors {
        let cur = params.tensor(*key);
        let next = match (retraction, key.is_ball()) {
            (Retraction::Exp, true) => {
                let point = BallPoint::new(cur.to_vec())?;
                let conf = 1.0 - manifold::norm_sq(cur);
                let factor = -lr * scale * conf * conf / 4.0;
                let step = TangentVector::new(g.iter().map(|v| v * factor).collect())?;
                manifold::exp_map(&point, &step).into_coords()
            }
            _ => cur
                .iter()
                .zip(g)
                .map(|(p, gi)| p - lr * scale * gi)
                .collect(),
        };
        params.set_tensor(*key, next)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Mean pairwise distance among the monitored item embeddings.
    pub mean_item_distance: f64,
    pub skipped_batches: usize,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub params: ModelParams,
    pub trace: Vec<EpochStats>,
}

/// Below this mean pairwise distance the item table is considered collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-3;

/// Mean pairwise distance among the projected embeddings of `items`.
pub fn mean_pairwise_distance(params: &ModelParams, items: &[usize]) -> f64 {
    let emb: Vec<BallPoint> = items.iter().map(|i| params.project_item(*i)).collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..emb.len() {
        for j in i + 1..emb.len() {
            sum += manifold::distance(&emb[i], &emb[j]);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Mini-batch training with a seeded shuffle.
///
/// Per-example gradients within a batch are computed in parallel and summed
/// in batch order, so identical seeds give bitwise-identical runs.
pub fn fit(
    examples: &[TrainingExample],
    config: &TrainConfig,
    mut params: ModelParams,
    rng: &mut ChaCha8Rng,
) -> Result<FitOutput> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let n_items = params.num_items();
    let mut monitored: Vec<usize> = (0..n_items).collect();
    monitored.shuffle(rng);
    monitored.truncate(100);
    monitored.sort_unstable();

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut skipped = 0;
        for batch in order.chunks(config.batch_size) {
            let negatives: Vec<Option<(usize, f64)>> = batch
                .iter()
                .map(|&i| {
                    config.margin.map(|m| {
                        let target = params.item_index(examples[i].target_item).unwrap_or(0);
                        let mut neg = rng.gen_range(0..n_items.max(2) - 1);
                        if neg >= target {
                            neg += 1;
                        }
                        (neg.min(n_items - 1), m)
                    })
                })
                .collect();
            let results: Vec<(f64, Gradients)> = batch
                .par_iter()
                .zip(negatives.par_iter())
                .map(|(&i, neg)| loss_and_gradients(&params, &examples[i], *neg))
                .collect::<Result<_>>()?;
            let mut grads = Gradients::default();
            for (loss, g) in &results {
                loss_sum += loss;
                grads.merge(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            if let Err(e) = optimizer_step(
                &mut params,
                &grads,
                config.learning_rate,
                config.retraction,
                config.clip_norm,
            ) {
                log::warn!("epoch {epoch}: skipped batch {batch:?}: {e}");
                skipped += 1;
            }
        }
        let mean_item_distance = mean_pairwise_distance(&params, &monitored);
        if n_items > 1 && mean_item_distance < COLLAPSE_THRESHOLD {
            log::warn!(
                "epoch {epoch}: item embeddings collapsing (mean pairwise distance {mean_item_distance:.2e})"
            );
        }
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / examples.len() as f64,
            mean_item_distance,
            skipped_batches: skipped,
        };
        log::info!(
            "epoch {:>4}  loss {:.6}  item spread {:.4}",
            stats.epoch,
            stats.mean_loss,
            stats.mean_item_distance
        );
        trace.push(stats);
    }
    Ok(FitOutput { params, trace })
}

/// Initializes parameters from the split and the seed, then trains on the
/// split's training sessions.
pub fn train_split(split: &DatasetSplit, config: &TrainConfig) -> Result<FitOutput> {
    config.validate()?;
    let norm = config.normalizer()?;
    let examples = make_examples(&split.train, &norm, config.augment_prefixes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let categories = split.category_vector();
    let params = ModelParams::init(
        split.vocab.clone(),
        config.dim,
        categories.as_deref(),
        config.init_scale,
        config.model_config(),
        &mut rng,
    )?;
    fit(&examples, config, params, &mut rng)
}
