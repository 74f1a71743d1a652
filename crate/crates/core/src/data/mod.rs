//! Click-log ingestion, preprocessing, synthetic data, and split files.

mod io;
mod parse;
mod preprocess;
mod synth;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::graph::{ItemId, SessionRecord};

pub use io::{read_split, write_split, TEST_FILE, TRAIN_FILE, VOCAB_FILE};
pub use parse::{parse_categories, parse_clicklog, ClickEvent, ClickLog, LogFormat};
pub use preprocess::{preprocess, Fraction, PreprocessConfig};
pub use synth::{generate_synthetic, split_synthetic, SynthConfig, SyntheticData};

/// Contiguous item indices `0..n`, assigned in ascending item-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Vocabulary {
    items: Vec<ItemId>,
    index: HashMap<ItemId, usize>,
}

impl From<Vec<ItemId>> for Vocabulary {
    fn from(items: Vec<ItemId>) -> Self {
        Self::from_items(items)
    }
}

impl From<Vocabulary> for Vec<ItemId> {
    fn from(v: Vocabulary) -> Self {
        v.items
    }
}

impl Vocabulary {
    /// Deduplicates and sorts the given ids.
    pub fn from_items(items: impl IntoIterator<Item = ItemId>) -> Self {
        let mut items: Vec<ItemId> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        let index = items.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        Self { items, index }
    }

    pub fn from_sessions<'a>(sessions: impl IntoIterator<Item = &'a SessionRecord>) -> Self {
        Self::from_items(
            sessions
                .into_iter()
                .flat_map(|s| s.events.iter().map(|e| e.item)),
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn index(&self, item: ItemId) -> Option<usize> {
        self.index.get(&item).copied()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.index.contains_key(&item)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }
}

/// Train/test sessions plus the training vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<SessionRecord>,
    pub test: Vec<SessionRecord>,
    pub vocab: Vocabulary,
    /// Item id → contiguous category index.
    pub categories: Option<BTreeMap<ItemId, usize>>,
}

impl DatasetSplit {
    /// Category index per vocabulary position, for feature initialization.
    pub fn category_vector(&self) -> Option<Vec<Option<usize>>> {
        self.categories.as_ref().map(|cats| {
            self.vocab
                .items()
                .iter()
                .map(|item| cats.get(item).copied())
                .collect()
        })
    }

    pub fn num_clicks(&self) -> usize {
        self.train.iter().chain(&self.test).map(|s| s.len()).sum()
    }
}
