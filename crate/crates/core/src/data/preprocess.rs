use std::collections::{BTreeMap, HashMap};

use super::{ClickEvent, DatasetSplit, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::{Event, ItemId, SessionRecord};

/// Keep only the most recent share of training sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub denominator: usize,
}

impl std::str::FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("fraction must look like 1/N, got {s:?}"));
        let (num, den) = s.split_once('/').ok_or_else(bad)?;
        if num.trim() != "1" {
            return Err(bad());
        }
        let denominator: usize = den.trim().parse().map_err(|_| bad())?;
        if denominator == 0 {
            return Err(bad());
        }
        Ok(Self { denominator })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub min_session_len: usize,
    pub min_item_freq: usize,
    /// Sessions ending within this many seconds of the latest timestamp form the test split.
    pub test_window: i64,
    pub fraction: Option<Fraction>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            min_session_len: 2,
            min_item_freq: 5,
            test_window: 86_400,
            fraction: None,
        }
    }
}

fn group_sessions(events: &[ClickEvent]) -> Vec<SessionRecord> {
    let mut by_id: BTreeMap<&str, Vec<Event>> = BTreeMap::new();
    for e in events {
        by_id
            .entry(e.session_id.as_str())
            .or_default()
            .push(Event::new(e.item_id, e.timestamp));
    }
    let mut sessions: Vec<SessionRecord> = by_id
        .into_iter()
        .map(|(id, mut evs)| {
            evs.sort_by_key(|e| e.timestamp);
            SessionRecord {
                session_id: id.to_string(),
                events: evs,
            }
        })
        .collect();
    sort_sessions(&mut sessions);
    sessions
}

fn sort_sessions(sessions: &mut [SessionRecord]) {
    sessions.sort_by(|a, b| {
        a.events[0]
            .timestamp
            .cmp(&b.events[0].timestamp)
            .then_with(|| a.session_id.cmp(&b.session_id))
    });
}

/// Removes rare items and short sessions until neither filter changes anything.
fn filter_to_fixed_point(mut sessions: Vec<SessionRecord>, cfg: &PreprocessConfig) -> Vec<SessionRecord> {
    loop {
        let before: usize = sessions.iter().map(SessionRecord::len).sum::<usize>() + sessions.len();
        let mut freq: HashMap<ItemId, usize> = HashMap::new();
        for e in sessions.iter().flat_map(|s| &s.events) {
            *freq.entry(e.item).or_default() += 1;
        }
        for s in &mut sessions {
            s.events.retain(|e| freq[&e.item] >= cfg.min_item_freq);
        }
        sessions.retain(|s| !s.events.is_empty() && s.len() >= cfg.min_session_len);
        let after: usize = sessions.iter().map(SessionRecord::len).sum::<usize>() + sessions.len();
        if after == before {
            return sessions;
        }
    }
}

fn split_by_time(
    sessions: Vec<SessionRecord>,
    window: i64,
) -> (Vec<SessionRecord>, Vec<SessionRecord>) {
    let max_ts = sessions.iter().map(|s| s.last_timestamp()).max().unwrap_or(0);
    let boundary = max_ts - window;
    sessions
        .into_iter()
        .partition(|s| s.last_timestamp() <= boundary)
}

/// Groups, filters, and splits a click log.
///
/// Rare-item and short-session filters, the time split, and the removal of
/// test sessions with items unseen in training are iterated together until
/// stable, so running this on its own output is a no-op.
pub fn preprocess(events: &[ClickEvent], cfg: &PreprocessConfig) -> Result<DatasetSplit> {
    if events.is_empty() {
        return Err(Error::Data("no click events to preprocess".into()));
    }
    let n_sessions_in = group_sessions(events).len();
    let mut sessions = group_sessions(events);
    let (train, test) = loop {
        let count = sessions.len();
        let clicks: usize = sessions.iter().map(SessionRecord::len).sum();
        let filtered = filter_to_fixed_point(sessions, cfg);
        let (train, test) = split_by_time(filtered, cfg.test_window);
        let vocab = Vocabulary::from_sessions(&train);
        let test: Vec<SessionRecord> = test
            .into_iter()
            .filter(|s| s.events.iter().all(|e| vocab.contains(e.item)))
            .collect();
        let kept = train.len() + test.len();
        let kept_clicks: usize = train.iter().chain(&test).map(SessionRecord::len).sum();
        if kept == count && kept_clicks == clicks {
            break (train, test);
        }
        sessions = train.into_iter().chain(test).collect();
        sort_sessions(&mut sessions);
    };

    let train = match cfg.fraction {
        Some(f) if f.denominator > 1 => {
            let mut by_recency = train;
            by_recency.sort_by(|a, b| {
                b.last_timestamp()
                    .cmp(&a.last_timestamp())
                    .then_with(|| a.session_id.cmp(&b.session_id))
            });
            let keep = by_recency.len().div_ceil(f.denominator);
            by_recency.truncate(keep);
            sort_sessions(&mut by_recency);
            by_recency
        }
        _ => train,
    };
    let vocab = Vocabulary::from_sessions(&train);
    let test: Vec<SessionRecord> = test
        .into_iter()
        .filter(|s| s.events.iter().all(|e| vocab.contains(e.item)))
        .collect();

    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(format!(
            "preprocessing left {} train and {} test sessions (from {} events in {} sessions; \
             min_session_len={}, min_item_freq={}, test_window={}s)",
            train.len(),
            test.len(),
            events.len(),
            n_sessions_in,
            cfg.min_session_len,
            cfg.min_item_freq,
            cfg.test_window
        )));
    }

    let categories = category_indices(events, &vocab);
    Ok(DatasetSplit {
        train,
        test,
        vocab,
        categories,
    })
}

/// Contiguous category indices (sorted by category label) for vocabulary items.
fn category_indices(events: &[ClickEvent], vocab: &Vocabulary) -> Option<BTreeMap<ItemId, usize>> {
    let mut item_cat: BTreeMap<ItemId, &str> = BTreeMap::new();
    for e in events {
        if let Some(c) = &e.category {
            if vocab.contains(e.item_id) {
                item_cat.entry(e.item_id).or_insert(c.as_str());
            }
        }
    }
    if item_cat.is_empty() {
        return None;
    }
    let mut labels: Vec<&str> = item_cat.values().copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let label_index: HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    Some(
        item_cat
            .into_iter()
            .map(|(item, c)| (item, label_index[c]))
            .collect(),
    )
}
