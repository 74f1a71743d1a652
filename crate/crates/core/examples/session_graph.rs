//! Turns a click sequence into a session graph with normalized time
//! intervals on its edges.
//!
//! Run with `cargo run --example session_graph`.

use tahgat::graph::{Direction, Event, IntervalNormalizer, SessionGraph};

fn main() -> tahgat::Result<()> {
    // item 10 is revisited, so it becomes a single node with two edges
    let clicks = [
        Event::new(10, 1_000),
        Event::new(20, 1_040),
        Event::new(10, 1_100),
        Event::new(30, 1_130),
        Event::new(40, 4_730),
    ];
    let norm = IntervalNormalizer::default();
    let g = SessionGraph::from_events(&clicks, &norm)?;

    println!("nodes (first appearance order): {:?}", g.nodes);
    println!("last item: {} at t = {}", g.last_item(), g.last_timestamp);
    println!();
    println!("{:>6} {:>6} {:>10}", "from", "to", "interval");
    for e in &g.edges {
        println!("{:>6} {:>6} {:>10.4}", g.nodes[e.src], g.nodes[e.dst], e.interval);
    }

    println!();
    for (i, item) in g.nodes.iter().enumerate() {
        let incoming: Vec<String> = g
            .neighbors(i, Direction::In)?
            .iter()
            .map(|(j, t)| format!("{}@{t:.3}", g.nodes[*j]))
            .collect();
        println!("neighborhood of {item}: {}", incoming.join(", "));
    }

    println!();
    for secs in [0, 30, 60, 600, 3_600, 86_400, 1_000_000] {
        println!("{secs:>8}s -> {:.4}", norm.normalize(secs)?);
    }
    Ok(())
}
