//! MRR@K and P@K on a small hand-built set of rankings.
//!
//! Run with `cargo run --example evaluation_metrics`.

use tahgat::eval::{expected_random_mrr, mrr_at_k, p_at_k, RankedCase, RankedList};

fn main() -> tahgat::Result<()> {
    let top20 = RankedList {
        entries: (1..=20).map(|i| (i, 0.1 * i as f64)).collect(),
    };
    // targets land at ranks 1, 4, outside the list, 2, and not at all
    let cases: Vec<RankedCase> = [1, 4, 21, 2, 99].iter().map(|t| (top20.clone(), *t)).collect();

    println!("{:>4} {:>8} {:>8}", "K", "MRR@K", "P@K");
    for k in [1, 2, 3, 5, 10, 20] {
        println!("{k:>4} {:>8.4} {:>8.4}", mrr_at_k(&cases, k)?, p_at_k(&cases, k)?);
    }

    println!("\nuniformly random ranking over 100 items:");
    for k in [5, 20] {
        println!("  expected MRR@{k} = {:.4}, P@{k} = {:.2}", expected_random_mrr(100, k), k as f64 / 100.0);
    }
    Ok(())
}
