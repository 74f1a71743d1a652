use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{DatasetSplit, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::{Event, ItemId, SessionRecord};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const VOCAB_FILE: &str = "vocab.csv";

fn write_sessions(path: &Path, sessions: &[SessionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let wrap = |e| Error::csv(path, e);
    w.write_record(["session_id", "item_id", "timestamp"]).map_err(wrap)?;
    for s in sessions {
        for e in &s.events {
            w.write_record([
                s.session_id.as_str(),
                &e.item.to_string(),
                &e.timestamp.to_string(),
            ])
            .map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_sessions(path: &Path) -> Result<Vec<SessionRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut sessions: Vec<SessionRecord> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = || Error::Data(format!("{}: bad row {}", path.display(), line + 2));
        let sid = rec.get(0).ok_or_else(bad)?;
        let item: ItemId = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let ts: i64 = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        match sessions.last_mut() {
            Some(s) if s.session_id == sid => s.events.push(Event::new(item, ts)),
            _ => sessions.push(SessionRecord {
                session_id: sid.to_string(),
                events: vec![Event::new(item, ts)],
            }),
        }
    }
    sessions
        .into_iter()
        .map(|s| SessionRecord::new(s.session_id, s.events))
        .collect()
}

/// Writes `train.csv`, `test.csv`, and `vocab.csv` into `dir`.
pub fn write_split(dir: &Path, split: &DatasetSplit) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_sessions(&dir.join(TRAIN_FILE), &split.train)?;
    write_sessions(&dir.join(TEST_FILE), &split.test)?;

    let path = dir.join(VOCAB_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    let wrap = |e| Error::csv(&path, e);
    match &split.categories {
        Some(cats) => {
            w.write_record(["item_id", "index", "category_index"]).map_err(wrap)?;
            for (i, item) in split.vocab.items().iter().enumerate() {
                let cat = cats.get(item).map(ToString::to_string).unwrap_or_default();
                w.write_record([item.to_string(), i.to_string(), cat]).map_err(wrap)?;
            }
        }
        None => {
            w.write_record(["item_id", "index"]).map_err(wrap)?;
            for (i, item) in split.vocab.items().iter().enumerate() {
                w.write_record([item.to_string(), i.to_string()]).map_err(wrap)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Reads a split written by [`write_split`].
pub fn read_split(dir: &Path) -> Result<DatasetSplit> {
    let train = read_sessions(&dir.join(TRAIN_FILE))?;
    let test = read_sessions(&dir.join(TEST_FILE))?;

    let path = dir.join(VOCAB_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    let has_cat = r
        .headers()
        .map_err(|e| Error::csv(&path, e))?
        .iter()
        .any(|h| h == "category_index");
    let mut items = Vec::new();
    let mut cats = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(&path, e))?;
        let bad = || Error::Data(format!("{}: bad row {}", path.display(), line + 2));
        let item: ItemId = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let index: usize = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if index != items.len() {
            return Err(Error::Data(format!(
                "{}: vocabulary indices must be contiguous from 0",
                path.display()
            )));
        }
        items.push(item);
        if let Some(c) = rec.get(2).filter(|c| !c.is_empty()) {
            cats.insert(item, c.parse().map_err(|_| bad())?);
        }
    }
    let vocab = Vocabulary::from_items(items.iter().copied());
    if vocab.items() != items.as_slice() {
        return Err(Error::Data(format!(
            "{}: vocabulary must list unique item ids in ascending order",
            path.display()
        )));
    }
    Ok(DatasetSplit {
        train,
        test,
        vocab,
        categories: has_cat.then_some(cats),
    })
}
