//! The time-aware hyperbolic graph attention network.

mod forward;
mod params;
mod score;

pub use forward::{
    attention_coefficients, forward, hyperbolic_projection, project_item_future,
    project_session_future, self_attention_layer, soft_attention_session,
    soft_attention_weights, time_embedding, Binder, ForwardOutput, LEAKY_SLOPE,
};
pub use params::{AttentionSign, Gradients, ModelConfig, ModelParams, ParamKey};
pub use score::{score_items, RankedList};

use crate::error::Result;
use crate::grad::Tape;
use crate::graph::{ItemId, SessionGraph};
use crate::manifold::BallPoint;

/// `(item id, h¹)` for every catalogue item, the table recommendations are
/// ranked against.
pub fn embedding_table(params: &ModelParams) -> Vec<(ItemId, BallPoint)> {
    params
        .vocab
        .items()
        .iter()
        .copied()
        .zip(params.projected_table())
        .collect()
}

/// Predicted next-item embedding `ĥ_v` for a session queried `t_norm` after
/// its last event.
pub fn predict(params: &ModelParams, graph: &SessionGraph, t_norm: f64) -> Result<BallPoint> {
    let mut tape = Tape::new();
    let mut binder = Binder::new(params);
    let out = forward(&mut tape, &mut binder, graph, t_norm)?;
    BallPoint::new(tape.value(out.h_v_future).to_vec())
}

/// Nearest `k` items to the predicted next-item embedding.
pub fn recommend(
    params: &ModelParams,
    table: &[(ItemId, BallPoint)],
    graph: &SessionGraph,
    t_norm: f64,
    k: usize,
) -> Result<RankedList> {
    let query = predict(params, graph, t_norm)?;
    score_items(&query, table, k)
}
