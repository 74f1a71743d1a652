//! Directed session graphs with per-edge time intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::MAX_NORM;

pub type ItemId = u64;

/// One click: an item and its timestamp in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub item: ItemId,
    pub timestamp: i64,
}

impl Event {
    pub fn new(item: ItemId, timestamp: i64) -> Self {
        Self { item, timestamp }
    }
}

/// A browsing session ordered by timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub events: Vec<Event>,
}

impl SessionRecord {
    /// Builds a record, rejecting empty sessions and decreasing timestamps.
    pub fn new(session_id: impl Into<String>, events: Vec<Event>) -> Result<Self> {
        let session_id = session_id.into();
        validate_events(&events)?;
        Ok(Self { session_id, events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_timestamp(&self) -> i64 {
        self.events.last().map_or(0, |e| e.timestamp)
    }
}

fn validate_events(events: &[Event]) -> Result<()> {
    if events.is_empty() {
        return Err(Error::Graph("session has no events".into()));
    }
    if events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::Graph("timestamps decrease within session".into()));
    }
    Ok(())
}

/// Maps raw second intervals into `[0, 1 − ε]` by log compression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalNormalizer {
    pub tau: f64,
    pub cap: f64,
}

impl Default for IntervalNormalizer {
    fn default() -> Self {
        Self {
            tau: 60.0,
            cap: 86_400.0,
        }
    }
}

impl IntervalNormalizer {
    pub fn new(tau: f64, cap: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "interval normalizer needs positive tau and cap, got {tau}, {cap}"
            )));
        }
        Ok(Self { tau, cap })
    }

    /// `min(log(1 + Δ/τ) / log(1 + cap/τ), 1 − ε)`.
    pub fn normalize(&self, delta_seconds: i64) -> Result<f64> {
        if delta_seconds < 0 {
            return Err(Error::InvalidArgument(format!(
                "negative interval {delta_seconds}"
            )));
        }
        let x = (delta_seconds as f64 / self.tau).ln_1p() / (self.cap / self.tau).ln_1p();
        Ok(x.min(MAX_NORM))
    }
}

/// Which edges feed a node's aggregation neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Predecessors (sources of in-edges).
    #[default]
    In,
    /// Successors (targets of out-edges).
    Out,
    Both,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            "both" => Ok(Direction::Both),
            other => Err(Error::InvalidArgument(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    /// Normalized interval in `[0, 1 − ε]`.
    pub interval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionGraph {
    /// Unique items in first-appearance order.
    pub nodes: Vec<ItemId>,
    pub edges: Vec<Edge>,
    pub last_index: usize,
    pub last_timestamp: i64,
}

/// Builds the graph of a full session. Sessions need at least two events.
pub fn build_session_graph(
    record: &SessionRecord,
    norm: &IntervalNormalizer,
) -> Result<SessionGraph> {
    if record.events.len() < 2 {
        return Err(Error::Graph(format!(
            "session {:?} has {} event(s), need at least 2",
            record.session_id,
            record.events.len()
        )));
    }
    SessionGraph::from_events(&record.events, norm)
}

impl SessionGraph {
    /// Builds a graph from any nonempty ordered event list. A single event
    /// yields one node and no edges; model inputs built from session prefixes
    /// rely on this.
    pub fn from_events(events: &[Event], norm: &IntervalNormalizer) -> Result<Self> {
        validate_events(events)?;
        let mut nodes: Vec<ItemId> = Vec::new();
        let index_of = |nodes: &mut Vec<ItemId>, item: ItemId| match nodes
            .iter()
            .position(|n| *n == item)
        {
            Some(i) => i,
            None => {
                nodes.push(item);
                nodes.len() - 1
            }
        };

        // (src, dst, raw seconds); the closest interval wins for repeated pairs.
        let mut raw: Vec<(usize, usize, i64)> = Vec::new();
        let mut prev = index_of(&mut nodes, events[0].item);
        for w in events.windows(2) {
            let cur = index_of(&mut nodes, w[1].item);
            let delta = w[1].timestamp - w[0].timestamp;
            match raw.iter_mut().find(|(s, d, _)| *s == prev && *d == cur) {
                Some(e) => e.2 = e.2.min(delta),
                None => raw.push((prev, cur, delta)),
            }
            prev = cur;
        }
        let edges = raw
            .into_iter()
            .map(|(src, dst, delta)| {
                Ok(Edge {
                    src,
                    dst,
                    interval: norm.normalize(delta)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let last = events[events.len() - 1];
        Ok(Self {
            last_index: prev,
            last_timestamp: last.timestamp,
            nodes,
            edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn last_item(&self) -> ItemId {
        self.nodes[self.last_index]
    }

    /// Aggregation neighborhood of node `i` in ascending node order,
    /// including `i` itself.
    ///
    /// The self entry carries interval 0 unless an explicit self-loop exists,
    /// in which case the loop's interval is used. A node reachable through
    /// both directions under [`Direction::Both`] keeps the smaller interval.
    pub fn neighbors(&self, i: usize, direction: Direction) -> Result<Vec<(usize, f64)>> {
        if i >= self.nodes.len() {
            return Err(Error::Graph(format!(
                "node index {i} out of range for {} nodes",
                self.nodes.len()
            )));
        }
        let mut best: Vec<Option<f64>> = vec![None; self.nodes.len()];
        best[i] = Some(0.0);
        let mut self_loop = None;
        for e in &self.edges {
            let other = match direction {
                Direction::In if e.dst == i => Some(e.src),
                Direction::Out if e.src == i => Some(e.dst),
                Direction::Both if e.dst == i => Some(e.src),
                Direction::Both if e.src == i => Some(e.dst),
                _ => None,
            };
            let Some(j) = other else { continue };
            if j == i {
                self_loop = Some(e.interval);
                continue;
            }
            best[j] = Some(best[j].map_or(e.interval, |b| b.min(e.interval)));
        }
        if let Some(iv) = self_loop {
            best[i] = Some(iv);
        }
        Ok(best
            .into_iter()
            .enumerate()
            .filter_map(|(j, b)| b.map(|iv| (j, iv)))
            .collect())
    }

    /// Predecessors plus self.
    pub fn in_neighbors(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        self.neighbors(i, Direction::In)
    }
}
