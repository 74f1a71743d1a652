use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetSplit, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::{Event, ItemId, SessionRecord};

/// Probability mass shared by an item's preferred successors.
const PREFERRED_MASS: f64 = 0.8;
const PREFERRED_PER_ITEM: usize = 3;
const MIN_LEN: usize = 3;
const MAX_LEN: usize = 10;
const BASE_TIMESTAMP: i64 = 1_600_000_000;
const SESSION_SPACING: i64 = 7_200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub n_items: usize,
    pub n_sessions: usize,
    pub seed: u64,
    /// Preferred transitions get short gaps, others long ones.
    pub interval_signal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Item ids run from 1 to `n_items`.
    pub sessions: Vec<SessionRecord>,
    /// `transitions[i][j]` is P(next = item j+1 | current = item i+1).
    pub transitions: Vec<Vec<f64>>,
    /// Preferred successor indices (0-based) of each item.
    pub preferred: Vec<Vec<usize>>,
}

impl SyntheticData {
    pub fn is_preferred(&self, from: ItemId, to: ItemId) -> bool {
        self.preferred[(from - 1) as usize].contains(&((to - 1) as usize))
    }
}

/// Samples sessions from a sparse first-order Markov chain.
///
/// Each item has three preferred successors sharing 0.8 of the transition
/// mass; the remaining 0.2 is spread uniformly over every other item.
/// Session lengths are uniform in `[3, 10]`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    if cfg.n_items < 5 {
        return Err(Error::InvalidArgument(format!(
            "synthetic data needs at least 5 items, got {}",
            cfg.n_items
        )));
    }
    if cfg.n_sessions == 0 {
        return Err(Error::InvalidArgument("synthetic data needs at least 1 session".into()));
    }
    let n = cfg.n_items;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let preferred: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut picks: Vec<usize> = sample(&mut rng, n - 1, PREFERRED_PER_ITEM)
                .into_iter()
                .map(|j| if j >= i { j + 1 } else { j })
                .collect();
            picks.sort_unstable();
            picks
        })
        .collect();
    let rest = (1.0 - PREFERRED_MASS) / (n - PREFERRED_PER_ITEM) as f64;
    let transitions: Vec<Vec<f64>> = preferred
        .iter()
        .map(|pref| {
            (0..n)
                .map(|j| {
                    if pref.contains(&j) {
                        PREFERRED_MASS / PREFERRED_PER_ITEM as f64
                    } else {
                        rest
                    }
                })
                .collect()
        })
        .collect();

    let mut sessions = Vec::with_capacity(cfg.n_sessions);
    for s in 0..cfg.n_sessions {
        let len = rng.gen_range(MIN_LEN..=MAX_LEN);
        let mut ts = BASE_TIMESTAMP + s as i64 * SESSION_SPACING;
        let mut cur = rng.gen_range(0..n);
        let mut events = vec![Event::new(cur as ItemId + 1, ts)];
        for _ in 1..len {
            let pref = &preferred[cur];
            let (next, is_pref) = if rng.gen_bool(PREFERRED_MASS) {
                (pref[rng.gen_range(0..pref.len())], true)
            } else {
                // uniform over the items outside the preferred set
                let mut k = rng.gen_range(0..n - pref.len());
                for p in pref {
                    if k >= *p {
                        k += 1;
                    }
                }
                (k, false)
            };
            let gap = match (cfg.interval_signal, is_pref) {
                (true, true) => rng.gen_range(10..=60),
                (true, false) => rng.gen_range(600..=3600),
                (false, _) => rng.gen_range(10..=3600),
            };
            ts += gap;
            events.push(Event::new(next as ItemId + 1, ts));
            cur = next;
        }
        sessions.push(SessionRecord {
            session_id: format!("syn{s}"),
            events,
        });
    }
    Ok(SyntheticData {
        sessions,
        transitions,
        preferred,
    })
}

/// Chronological split: the last `test_fraction` of sessions become the test
/// set. Test sessions with items unseen in training are dropped.
pub fn split_synthetic(sessions: &[SessionRecord], test_fraction: f64) -> Result<DatasetSplit> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    let n_test = (sessions.len() as f64 * test_fraction).round() as usize;
    let cut = sessions.len() - n_test;
    let train = sessions[..cut].to_vec();
    if train.is_empty() {
        return Err(Error::Data("synthetic split has no training sessions".into()));
    }
    let vocab = Vocabulary::from_sessions(&train);
    let test = sessions[cut..]
        .iter()
        .filter(|s| s.events.iter().all(|e| vocab.contains(e.item)))
        .cloned()
        .collect();
    Ok(DatasetSplit {
        train,
        test,
        vocab,
        categories: None,
    })
}
