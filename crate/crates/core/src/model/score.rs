use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ItemId;
use crate::manifold::{self, BallPoint};

/// Top-k items ordered by ascending distance, ties by ascending item id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<(ItemId, f64)>,
}

impl RankedList {
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// 1-based rank of `item`, if present.
    pub fn rank_of(&self, item: ItemId) -> Option<usize> {
        self.entries.iter().position(|(i, _)| *i == item).map(|p| p + 1)
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }
}

fn by_distance_then_id(a: &(ItemId, f64), b: &(ItemId, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Ranks every `(item, embedding)` pair by distance to `query` and keeps the
/// nearest `k`.
pub fn score_items(
    query: &BallPoint,
    table: &[(ItemId, BallPoint)],
    k: usize,
) -> Result<RankedList> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("empty item table".into()));
    }
    if k == 0 || k > table.len() {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            table.len()
        )));
    }
    let mut all: Vec<(ItemId, f64)> = table
        .iter()
        .map(|(id, emb)| (*id, manifold::distance(query, emb)))
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_id);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_id);
    Ok(RankedList { entries: all })
}
