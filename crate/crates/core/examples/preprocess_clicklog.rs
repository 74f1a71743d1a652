//! Parses a small generic click log, filters rare items and short
//! sessions, and splits by time.
//!
//! Run with `cargo run --example preprocess_clicklog`.

use tahgat::data::{parse_clicklog, preprocess, LogFormat, PreprocessConfig};

const LOG: &str = "\
session_id,item_id,timestamp
s1,1,100
s1,2,110
s1,3,120
s2,2,200
s2,3,230
s3,1,300
s3,9,310
s4,4,400
s5,1,500
s5,2,520
s5,1,540
s6,3,2000
s6,2,2030
s7,2,2100
s7,5,2110
s8,1,2500
s8,3,not-a-time
s8,3,2600
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("clicks.csv");
    std::fs::write(&path, LOG)?;

    let log = parse_clicklog(&path, LogFormat::Generic)?;
    println!("{} events, {} malformed rows skipped", log.events.len(), log.malformed);

    let cfg = PreprocessConfig {
        min_session_len: 2,
        min_item_freq: 2,
        test_window: 1_000,
        fraction: None,
    };
    let split = preprocess(&log.events, &cfg)?;
    println!("vocabulary: {:?}", split.vocab.items());
    for (name, sessions) in [("train", &split.train), ("test", &split.test)] {
        for s in sessions.iter() {
            let items: Vec<String> = s.events.iter().map(|e| format!("{}@{}", e.item, e.timestamp)).collect();
            println!("{name:<6} {:<4} {}", s.session_id, items.join(" "));
        }
    }
    Ok(())
}
