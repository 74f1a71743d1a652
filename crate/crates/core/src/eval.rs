//! MRR@K, P@K, the time-aware test protocol, and a session-popularity baseline.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{IntervalNormalizer, ItemId, SessionGraph, SessionRecord};
use crate::model::{self, ModelParams};

pub use crate::model::RankedList;

/// A ranking produced for one test case, paired with the item that actually came next.
pub type RankedCase = (RankedList, ItemId);

fn rank_within(list: &RankedList, target: ItemId, k: usize) -> Option<usize> {
    list.rank_of(target).filter(|r| *r <= k)
}

fn check_cases(cases: &[RankedCase], k: usize) -> Result<()> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no ranked cases".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(())
}

/// Mean of `1/rank` over cases, counting targets outside the top `k` as 0.
pub fn mrr_at_k(cases: &[RankedCase], k: usize) -> Result<f64> {
    check_cases(cases, k)?;
    let total: f64 = cases
        .iter()
        .map(|(list, target)| rank_within(list, *target, k).map_or(0.0, |r| 1.0 / r as f64))
        .sum();
    Ok(total / cases.len() as f64)
}

/// Share of cases whose target is in the top `k`.
pub fn p_at_k(cases: &[RankedCase], k: usize) -> Result<f64> {
    check_cases(cases, k)?;
    let hits = cases
        .iter()
        .filter(|(list, target)| rank_within(list, *target, k).is_some())
        .count();
    Ok(hits as f64 / cases.len() as f64)
}

/// Expected MRR@K of a uniformly random ranking over `n_items` items.
pub fn expected_random_mrr(n_items: usize, k: usize) -> f64 {
    let top = k.min(n_items);
    (1..=top).map(|r| 1.0 / r as f64).sum::<f64>() / n_items as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mrr_at_k: f64,
    pub p_at_k: f64,
    pub k: usize,
    pub n_test: usize,
    /// Test sessions that could not be scored.
    pub skipped: usize,
    pub wall_time: f64,
}

impl EvalReport {
    /// Machine-readable form. Wall time is left out so identical runs
    /// produce identical bytes.
    pub fn to_csv(&self) -> String {
        format!(
            "k,n_test,skipped,mrr_at_k,p_at_k\n{},{},{},{},{}\n",
            self.k, self.n_test, self.skipped, self.mrr_at_k, self.p_at_k
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>10}", "metric", "value")?;
        writeln!(f, "{:<12} {:>10.4}", format!("MRR@{}", self.k), self.mrr_at_k)?;
        writeln!(f, "{:<12} {:>10.4}", format!("P@{}", self.k), self.p_at_k)?;
        writeln!(f, "{:<12} {:>10}", "test cases", self.n_test)?;
        writeln!(f, "{:<12} {:>10}", "skipped", self.skipped)?;
        write!(f, "{:<12} {:>9.2}s", "wall time", self.wall_time)
    }
}

/// Graph of all but the last event, the held-out item, and the normalized
/// gap between the penultimate and final clicks.
pub fn test_case(
    session: &SessionRecord,
    norm: &IntervalNormalizer,
) -> Result<(SessionGraph, ItemId, f64)> {
    let n = session.events.len();
    if n < 2 {
        return Err(Error::Graph(format!(
            "test session {:?} has fewer than 2 events",
            session.session_id
        )));
    }
    let graph = SessionGraph::from_events(&session.events[..n - 1], norm)?;
    let last = session.events[n - 1];
    let interval = norm.normalize(last.timestamp - session.events[n - 2].timestamp)?;
    Ok((graph, last.item, interval))
}

/// Rankings for every scorable test session plus the number skipped.
pub fn rank_test_sessions(
    params: &ModelParams,
    norm: &IntervalNormalizer,
    test: &[SessionRecord],
    k: usize,
) -> Result<(Vec<RankedCase>, usize)> {
    let table = model::embedding_table(params);
    let k = k.min(table.len());
    let results: Vec<Option<RankedCase>> = test
        .par_iter()
        .map(|s| {
            let (graph, target, interval) = test_case(s, norm).ok()?;
            if !params.vocab.contains(target) {
                return None;
            }
            model::recommend(params, &table, &graph, interval, k)
                .ok()
                .map(|list| (list, target))
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    Ok((results.into_iter().flatten().collect(), skipped))
}

/// Scores every test session and aggregates MRR@K and P@K.
pub fn evaluate(
    params: &ModelParams,
    norm: &IntervalNormalizer,
    test: &[SessionRecord],
    k: usize,
) -> Result<EvalReport> {
    let start = Instant::now();
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test split".into()));
    }
    let (cases, skipped) = rank_test_sessions(params, norm, test, k)?;
    if skipped > 0 {
        log::warn!("skipped {skipped} test sessions");
    }
    if cases.is_empty() {
        return Err(Error::Data("no scorable test sessions".into()));
    }
    Ok(EvalReport {
        mrr_at_k: mrr_at_k(&cases, k)?,
        p_at_k: p_at_k(&cases, k)?,
        k,
        n_test: cases.len(),
        skipped,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// S-POP rankings: items of the current prefix by in-session frequency,
/// then the remaining catalogue by training popularity. Ties fall back to
/// global popularity, then item id.
pub fn spop_rankings(
    train: &[SessionRecord],
    test: &[SessionRecord],
    k: usize,
) -> Vec<RankedCase> {
    let mut global: HashMap<ItemId, usize> = HashMap::new();
    for e in train.iter().flat_map(|s| &s.events) {
        *global.entry(e.item).or_default() += 1;
    }
    let mut by_pop: Vec<(ItemId, usize)> = global.iter().map(|(i, c)| (*i, *c)).collect();
    by_pop.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    test.iter()
        .filter(|s| s.len() >= 2)
        .map(|s| {
            let prefix = &s.events[..s.len() - 1];
            let mut local: HashMap<ItemId, usize> = HashMap::new();
            for e in prefix {
                *local.entry(e.item).or_default() += 1;
            }
            let mut head: Vec<(ItemId, usize)> = local.into_iter().collect();
            head.sort_by(|a, b| {
                b.1.cmp(&a.1)
                    .then_with(|| global.get(&b.0).cmp(&global.get(&a.0)))
                    .then(a.0.cmp(&b.0))
            });
            let mut entries: Vec<(ItemId, f64)> = head
                .iter()
                .enumerate()
                .map(|(r, (i, _))| (*i, r as f64))
                .collect();
            for (item, _) in &by_pop {
                if entries.len() >= k {
                    break;
                }
                if !head.iter().any(|(h, _)| h == item) {
                    entries.push((*item, entries.len() as f64));
                }
            }
            entries.truncate(k);
            (RankedList { entries }, s.events[s.len() - 1].item)
        })
        .collect()
}
