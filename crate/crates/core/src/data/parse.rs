use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ItemId;

/// Input layouts understood by [`parse_clicklog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    /// `session_id,timestamp,item_id,category` without a header, ISO-8601 timestamps.
    Yoochoose,
    /// `sessionId;userId;itemId;timeframe;eventdate` with a header.
    Diginetica,
    /// Header-named CSV: `session_id,item_id,timestamp[,category]`.
    Generic,
}

impl LogFormat {
    /// Default width of the trailing test window, in seconds.
    pub fn default_test_window(self) -> i64 {
        match self {
            LogFormat::Diginetica => 7 * 86_400,
            LogFormat::Yoochoose | LogFormat::Generic => 86_400,
        }
    }
}

impl std::str::FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yoochoose" => Ok(LogFormat::Yoochoose),
            "diginetica" => Ok(LogFormat::Diginetica),
            "generic" => Ok(LogFormat::Generic),
            other => Err(Error::InvalidArgument(format!("unknown log format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickEvent {
    pub session_id: String,
    pub item_id: ItemId,
    /// Epoch seconds.
    pub timestamp: i64,
    pub category: Option<String>,
}

/// Parsed events plus the number of rows that were skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickLog {
    pub events: Vec<ClickEvent>,
    pub malformed: usize,
}

fn parse_yoochoose(rec: &csv::StringRecord) -> Option<ClickEvent> {
    if rec.len() < 3 {
        return None;
    }
    let session_id = rec.get(0)?.trim();
    let timestamp = DateTime::parse_from_rfc3339(rec.get(1)?.trim())
        .ok()?
        .timestamp();
    let item_id = rec.get(2)?.trim().parse().ok()?;
    event(session_id, item_id, timestamp, None)
}

fn parse_diginetica(rec: &csv::StringRecord) -> Option<ClickEvent> {
    if rec.len() < 5 {
        return None;
    }
    let session_id = rec.get(0)?.trim();
    let item_id = rec.get(2)?.trim().parse().ok()?;
    let timeframe_ms: i64 = rec.get(3)?.trim().parse().ok()?;
    let day = NaiveDate::parse_from_str(rec.get(4)?.trim(), "%Y-%m-%d").ok()?;
    let midnight = day.and_hms_opt(0, 0, 0)?.and_utc().timestamp();
    event(session_id, item_id, midnight + timeframe_ms / 1000, None)
}

fn event(
    session_id: &str,
    item_id: ItemId,
    timestamp: i64,
    category: Option<String>,
) -> Option<ClickEvent> {
    if session_id.is_empty() || timestamp <= 0 {
        return None;
    }
    Some(ClickEvent {
        session_id: session_id.to_string(),
        item_id,
        timestamp,
        category,
    })
}

struct GenericColumns {
    session: usize,
    item: usize,
    timestamp: usize,
    category: Option<usize>,
}

impl GenericColumns {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::Data(format!("generic log is missing column {name:?}")))
        };
        Ok(Self {
            session: need("session_id")?,
            item: need("item_id")?,
            timestamp: need("timestamp")?,
            category: find("category"),
        })
    }

    fn parse(&self, rec: &csv::StringRecord) -> Option<ClickEvent> {
        let session_id = rec.get(self.session)?.trim();
        let item_id = rec.get(self.item)?.trim().parse().ok()?;
        let timestamp = rec.get(self.timestamp)?.trim().parse().ok()?;
        let category = match self.category {
            Some(c) => rec
                .get(c)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string),
            None => None,
        };
        event(session_id, item_id, timestamp, category)
    }
}

/// Reads a click log, skipping and counting malformed rows.
///
/// Fails when the file cannot be read or when more than half of its rows are
/// malformed. An empty file yields an empty log.
pub fn parse_clicklog(path: &Path, format: LogFormat) -> Result<ClickLog> {
    let (delimiter, has_headers) = match format {
        LogFormat::Yoochoose => (b',', false),
        LogFormat::Diginetica => (b';', true),
        LogFormat::Generic => (b',', true),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_headers)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;

    let generic = match format {
        LogFormat::Generic => {
            let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
            if headers.is_empty() {
                log::warn!("{}: empty click log", path.display());
                return Ok(ClickLog {
                    events: Vec::new(),
                    malformed: 0,
                });
            }
            Some(GenericColumns::from_headers(&headers)?)
        }
        _ => None,
    };

    let mut events = Vec::new();
    let mut malformed = 0usize;
    for rec in reader.records() {
        let parsed = match rec {
            Ok(rec) => match (&generic, format) {
                (Some(cols), _) => cols.parse(&rec),
                (None, LogFormat::Yoochoose) => parse_yoochoose(&rec),
                (None, _) => parse_diginetica(&rec),
            },
            Err(e) if e.is_io_error() => return Err(Error::csv(path, e)),
            Err(_) => None,
        };
        match parsed {
            Some(ev) => events.push(ev),
            None => malformed += 1,
        }
    }

    let total = events.len() + malformed;
    if total == 0 {
        log::warn!("{}: empty click log", path.display());
    } else if malformed > 0 {
        log::warn!("{}: skipped {malformed} of {total} malformed rows", path.display());
    }
    if malformed * 2 > total {
        return Err(Error::Data(format!(
            "{}: {malformed} of {total} rows are malformed",
            path.display()
        )));
    }
    Ok(ClickLog { events, malformed })
}

/// Reads a Diginetica-style `itemId;categoryId` table.
pub fn parse_categories(path: &Path) -> Result<HashMap<ItemId, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut out = HashMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if let (Some(item), Some(cat)) = (rec.get(0), rec.get(1)) {
            if let Ok(item) = item.trim().parse() {
                out.insert(item, cat.trim().to_string());
            }
        }
    }
    Ok(out)
}
