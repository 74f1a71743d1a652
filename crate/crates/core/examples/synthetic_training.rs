//! Trains on a synthetic Markov-chain catalogue with a planted interval
//! cue and compares MRR@5 with chance and the S-POP baseline.
//!
//! Run with `cargo run --release --example synthetic_training`.

use tahgat::data::{generate_synthetic, split_synthetic, SynthConfig};
use tahgat::eval;
use tahgat::train::{train_split, TrainConfig};

const K: usize = 5;

fn main() -> tahgat::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        n_items: 100,
        n_sessions: 2_000,
        seed: 11,
        interval_signal: true,
    })?;
    let split = split_synthetic(&data.sessions, 0.2)?;
    println!(
        "{} items, {} train sessions, {} test sessions",
        split.vocab.len(),
        split.train.len(),
        split.test.len()
    );

    let config = TrainConfig {
        init_scale: 0.1,
        ..TrainConfig::default()
    };
    let fit = train_split(&split, &config)?;
    println!("\n{:>6} {:>12} {:>12}", "epoch", "loss", "item spread");
    for s in &fit.trace {
        println!("{:>6} {:>12.6} {:>12.4}", s.epoch, s.mean_loss, s.mean_item_distance);
    }

    let norm = config.normalizer()?;
    let report = eval::evaluate(&fit.params, &norm, &split.test, K)?;
    let spop = eval::spop_rankings(&split.train, &split.test, K);
    println!("\n{report}\n");
    println!("{:<12} {:>10.4}", "S-POP MRR@5", eval::mrr_at_k(&spop, K)?);
    println!("{:<12} {:>10.4}", "chance", eval::expected_random_mrr(split.vocab.len(), K));
    Ok(())
}
