//! Training and end-to-end scenarios shared by the tests and the
//! acceptance runner.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use tahgat::data::{generate_synthetic, split_synthetic, DatasetSplit, SynthConfig, Vocabulary};
use tahgat::eval;
use tahgat::train::{train_split, Checkpoint, TrainConfig};

#[derive(Debug, Clone)]
pub struct OverfitOutcome {
    pub hit_rate: f64,
    pub decreasing_pairs: usize,
    pub total_pairs: usize,
    pub first_loss: f64,
    pub last_loss: f64,
    pub elapsed: Duration,
}

/// Ten sessions over 30 items, d = 16, 200 full-batch epochs.
pub fn overfit() -> OverfitOutcome {
    let start = Instant::now();
    let data = generate_synthetic(&SynthConfig {
        n_items: 30,
        n_sessions: 10,
        seed: 1,
        interval_signal: true,
    })
    .unwrap();
    let split = DatasetSplit {
        vocab: Vocabulary::from_sessions(&data.sessions),
        train: data.sessions,
        test: Vec::new(),
        categories: None,
    };
    let config = TrainConfig {
        dim: 16,
        learning_rate: 0.01,
        epochs: 200,
        batch_size: 10,
        init_scale: 0.1,
        ..TrainConfig::default()
    };
    let fit = train_split(&split, &config).unwrap();
    let norm = config.normalizer().unwrap();
    let (cases, _) = eval::rank_test_sessions(&fit.params, &norm, &split.train, 1).unwrap();
    let losses: Vec<f64> = fit.trace.iter().map(|s| s.mean_loss).collect();
    OverfitOutcome {
        hit_rate: eval::p_at_k(&cases, 1).unwrap(),
        decreasing_pairs: losses.windows(2).filter(|w| w[1] < w[0]).count(),
        total_pairs: losses.len() - 1,
        first_loss: losses[0],
        last_loss: *losses.last().unwrap(),
        elapsed: start.elapsed(),
    }
}

#[derive(Debug, Clone)]
pub struct SignalOutcome {
    pub model_mrr: f64,
    pub model_p: f64,
    pub spop_mrr: f64,
    pub chance_mrr: f64,
    pub min_item_spread: f64,
    pub elapsed: Duration,
}

impl SignalOutcome {
    /// Required margin over the stronger of chance and S-POP.
    pub fn threshold(&self) -> f64 {
        1.2 * self.chance_mrr.max(self.spop_mrr)
    }

    pub fn passed(&self) -> bool {
        self.model_mrr > self.threshold()
    }
}

pub const SIGNAL_K: usize = 5;

pub fn signal_split() -> DatasetSplit {
    let data = generate_synthetic(&SynthConfig {
        n_items: 100,
        n_sessions: 2_000,
        seed: 11,
        interval_signal: true,
    })
    .unwrap();
    split_synthetic(&data.sessions, 0.2).unwrap()
}

/// Trains on the 80 % chronological prefix and scores MRR@5 on the rest.
pub fn signal_recovery(config: &TrainConfig) -> SignalOutcome {
    let start = Instant::now();
    let split = signal_split();
    let fit = train_split(&split, config).unwrap();
    let norm = config.normalizer().unwrap();
    let report = eval::evaluate(&fit.params, &norm, &split.test, SIGNAL_K).unwrap();
    let spop = eval::spop_rankings(&split.train, &split.test, SIGNAL_K);
    SignalOutcome {
        model_mrr: report.mrr_at_k,
        model_p: report.p_at_k,
        spop_mrr: eval::mrr_at_k(&spop, SIGNAL_K).unwrap(),
        chance_mrr: eval::expected_random_mrr(split.vocab.len(), SIGNAL_K),
        min_item_spread: fit
            .trace
            .iter()
            .map(|s| s.mean_item_distance)
            .fold(f64::INFINITY, f64::min),
        elapsed: start.elapsed(),
    }
}

/// The faithful configuration: pure distance loss, default hyperparameters,
/// with item features initialized on a wider interval.
pub fn signal_config() -> TrainConfig {
    TrainConfig {
        init_scale: 0.1,
        ..TrainConfig::default()
    }
}

/// The same run with the optional one-negative hinge enabled.
pub fn signal_config_with_margin() -> TrainConfig {
    TrainConfig {
        dim: 16,
        learning_rate: 0.05,
        epochs: 20,
        margin: Some(1.0),
        augment_prefixes: true,
        init_scale: 0.1,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct DeterminismOutcome {
    pub reports_identical: bool,
    pub checkpoints_identical: bool,
    pub round_trip_exact: bool,
    pub report: String,
}

fn tahgat(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_tahgat"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "tahgat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Two CLI `train` + `evaluate` runs on the same inputs, then a checkpoint
/// reload evaluated in process.
pub fn determinism(dir: &Path) -> DeterminismOutcome {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    tahgat(&["synth", "--items", "40", "--sessions", "300", "--seed", "5", "--interval-signal", "--outdir", &p("data")]);
    for run in ["a", "b"] {
        let ck = p(&format!("{run}.json"));
        tahgat(&[
            "train", "--data", &p("data"), "--checkpoint", &ck, "--dim", "8", "--epochs", "3",
            "--batch", "16", "--seed", "9",
        ]);
        tahgat(&[
            "evaluate", "--checkpoint", &ck, "--data", &p("data"), "--k", "10", "--report",
            &p(&format!("{run}.csv")),
        ]);
    }
    let read = |name: &str| fs::read(dir.join(name)).unwrap();
    let report = String::from_utf8(read("a.csv")).unwrap();

    let ck = Checkpoint::load(&dir.join("a.json")).unwrap();
    let split = tahgat::data::read_split(&dir.join("data")).unwrap();
    let norm = ck.config.normalizer().unwrap();
    let reloaded = eval::evaluate(&ck.params, &norm, &split.test, 10).unwrap();
    let retrained = train_split(&split, &ck.config).unwrap();
    let in_memory = eval::evaluate(&retrained.params, &norm, &split.test, 10).unwrap();
    DeterminismOutcome {
        reports_identical: read("a.csv") == read("b.csv"),
        checkpoints_identical: read("a.json") == read("b.json"),
        round_trip_exact: reloaded.to_csv() == report
            && in_memory.to_csv() == report
            && retrained.params == ck.params,
        report,
    }
}
