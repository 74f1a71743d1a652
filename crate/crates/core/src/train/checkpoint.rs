use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochStats, TrainConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const CHECKPOINT_FORMAT: &str = "tahgat-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters with the configuration and seed that produced them.
///
/// Stored as JSON; floats round-trip exactly, so a reloaded checkpoint
/// reproduces evaluation results bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    pub params: ModelParams,
    pub trace: Vec<EpochStats>,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, params: ModelParams, trace: Vec<EpochStats>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config,
            params,
            trace,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "{}: not a checkpoint (format {:?})",
                path.display(),
                ck.format
            )));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: unsupported version {}",
                path.display(),
                ck.version
            )));
        }
        Ok(ck)
    }
}
