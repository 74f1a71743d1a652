//! Trains a small model, saves a checkpoint, reloads it, and ranks items
//! for a live session queried at two different times.
//!
//! Run with `cargo run --release --example recommend_session`.

use tahgat::data::{generate_synthetic, split_synthetic, SynthConfig};
use tahgat::graph::{Event, SessionGraph};
use tahgat::model;
use tahgat::train::{train_split, Checkpoint, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SynthConfig {
        n_items: 40,
        n_sessions: 600,
        seed: 5,
        interval_signal: true,
    })?;
    let split = split_synthetic(&data.sessions, 0.2)?;
    let config = TrainConfig {
        dim: 16,
        epochs: 5,
        init_scale: 0.1,
        ..TrainConfig::default()
    };
    let fit = train_split(&split, &config)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.json");
    Checkpoint::new(config, fit.params, fit.trace).save(&path)?;
    let ck = Checkpoint::load(&path)?;

    let norm = ck.config.normalizer()?;
    let clicks = [Event::new(3, 10_000), Event::new(17, 10_030), Event::new(3, 10_075)];
    let graph = SessionGraph::from_events(&clicks, &norm)?;
    let table = model::embedding_table(&ck.params);
    let preferred: Vec<u64> = data.preferred[2].iter().map(|j| *j as u64 + 1).collect();
    println!("planted successors of item 3: {preferred:?}");

    for wait in [20, 3_000] {
        let t = norm.normalize(wait)?;
        let list = model::recommend(&ck.params, &table, &graph, t, 5)?;
        println!("\nqueried {wait}s after the last click");
        println!("{:>4} {:>6} {:>10}", "rank", "item", "distance");
        for (r, (item, d)) in list.entries.iter().enumerate() {
            println!("{:>4} {:>6} {:>10.4}", r + 1, item, d);
        }
    }
    Ok(())
}
