//! Checks reverse-mode gradients against central differences, first on a
//! manifold composite and then on the full training loss.
//!
//! Run with `cargo run --release --example gradient_check`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tahgat::data::Vocabulary;
use tahgat::grad::{check_gradients, hyper, NamedTensor};
use tahgat::graph::{Event, IntervalNormalizer, SessionRecord};
use tahgat::model::{Binder, ModelConfig, ModelParams, ParamKey};
use tahgat::train::{compute_loss, TrainingExample};

fn main() -> tahgat::Result<()> {
    let report = check_gradients(
        |t, p| {
            let s = hyper::mobius_add(t, p[0], p[1]);
            hyper::distance(t, s, p[1])
        },
        &[
            NamedTensor::new("p", vec![0.2, -0.4, 0.1]),
            NamedTensor::new("q", vec![-0.3, 0.1, 0.5]),
        ],
        1e-6,
    )?;
    println!("d(p (+) q, q)\n{report}\n");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = Vocabulary::from_items([1, 2, 3]);
    let params = ModelParams::init(vocab, 4, None, 0.4, ModelConfig::default(), &mut rng)?;
    let session = SessionRecord::new(
        "demo",
        vec![Event::new(1, 0), Event::new(2, 30), Event::new(1, 90), Event::new(3, 150)],
    )?;
    let example = TrainingExample::from_session(&session, 3, &IntervalNormalizer::default())?;

    let keys: Vec<ParamKey> = ParamKey::DENSE
        .into_iter()
        .chain((0..params.num_items()).map(ParamKey::Item))
        .collect();
    let tensors: Vec<NamedTensor> = keys
        .iter()
        .map(|k| NamedTensor::new(k.name(), params.tensor(*k).to_vec()))
        .collect();
    let report = check_gradients(
        |t, leaves| {
            let mut b = Binder::with_leaves(&params, keys.iter().copied().zip(leaves.iter().copied()).collect());
            compute_loss(t, &mut b, &example).expect("valid example").total
        },
        &tensors,
        1e-6,
    )?;
    println!("full loss on a 3-item session\n{report}");
    println!("max relative error {:.2e}", report.max_error());
    Ok(())
}
