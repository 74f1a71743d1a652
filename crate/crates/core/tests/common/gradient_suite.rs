//! Finite-difference checks over manifold primitives, model layers, and
//! the full loss, at random interior points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tahgat::data::Vocabulary;
use tahgat::grad::{check_gradients, check_gradients_noise_aware, hyper, GradReport, NamedTensor, Tape, Var};
use tahgat::graph::{Event, IntervalNormalizer, SessionGraph};
use tahgat::manifold::BallPoint;
use tahgat::model::{self, AttentionSign, Binder, ModelConfig, ModelParams, ParamKey};
use tahgat::train::{compute_loss, TrainingExample};

use super::{random_on_sphere, random_point};

pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GradCase {
    pub name: String,
    pub points: usize,
    pub worst: f64,
    pub failures: usize,
}

impl GradCase {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.worst < TOLERANCE
    }
}

/// Fixed pseudo-random weights that turn a vector output into a scalar.
fn contract(t: &mut Tape, v: Var, salt: usize) -> Var {
    let n = t.dim(v);
    let w: Vec<f64> = (0..n).map(|k| ((k + 3 * salt) as f64 * 1.37 + 0.41).sin()).collect();
    let w = t.constant(w);
    t.dot(v, w)
}

fn contract_all(t: &mut Tape, vs: &[Var]) -> Var {
    let parts: Vec<Var> = vs.iter().enumerate().map(|(i, v)| contract(t, *v, i)).collect();
    let stacked = t.stack(&parts);
    t.sum(stacked)
}

fn check<F: Fn(&mut Tape, &[Var]) -> Var>(f: F, tensors: &[NamedTensor]) -> GradReport {
    check_with(f, tensors, false)
}

fn check_with<F: Fn(&mut Tape, &[Var]) -> Var>(f: F, tensors: &[NamedTensor], noise_aware: bool) -> GradReport {
    if noise_aware {
        check_gradients_noise_aware(f, tensors, STEP, TOLERANCE).expect("valid step")
    } else {
        check_gradients(f, tensors, STEP).expect("valid step")
    }
}

fn model_check<F>(params: &ModelParams, keys: &[ParamKey], extra: &[NamedTensor], f: F) -> GradReport
where
    F: Fn(&mut Tape, &mut Binder, &[Var]) -> Var,
{
    model_check_with(params, keys, extra, false, f)
}

fn model_check_with<F>(
    params: &ModelParams,
    keys: &[ParamKey],
    extra: &[NamedTensor],
    noise_aware: bool,
    f: F,
) -> GradReport
where
    F: Fn(&mut Tape, &mut Binder, &[Var]) -> Var,
{
    let mut tensors: Vec<NamedTensor> = keys
        .iter()
        .map(|k| NamedTensor::new(k.name(), params.tensor(*k).to_vec()))
        .collect();
    tensors.extend(extra.iter().cloned());
    check_with(
        |t, leaves| {
            let bound = keys.iter().copied().zip(leaves.iter().copied()).collect();
            let mut b = Binder::with_leaves(params, bound);
            f(t, &mut b, &leaves[keys.len()..])
        },
        &tensors,
        noise_aware,
    )
}

fn random_params(rng: &mut ChaCha8Rng, config: ModelConfig) -> ModelParams {
    let vocab = Vocabulary::from_items([1, 2, 3, 4, 5]);
    let mut p = ModelParams::init(vocab, 4, None, 0.4, config, rng).unwrap();
    p.c_bias = BallPoint::new(random_point(rng, 4, 0.3)).unwrap();
    p
}

fn random_graph(rng: &mut ChaCha8Rng) -> SessionGraph {
    let mut ts = 1_000;
    let events: Vec<Event> = (0..5)
        .map(|_| {
            ts += rng.gen_range(0..3_000);
            Event::new(rng.gen_range(1..=5), ts)
        })
        .collect();
    SessionGraph::from_events(&events, &IntervalNormalizer::default()).unwrap()
}

fn node_keys(params: &ModelParams, g: &SessionGraph) -> Vec<ParamKey> {
    g.nodes
        .iter()
        .map(|id| ParamKey::Item(params.item_index(*id).unwrap()))
        .collect()
}

fn states(t: &mut Tape, b: &mut Binder, g: &SessionGraph) -> Vec<Var> {
    let p = b.params();
    g.nodes
        .iter()
        .map(|id| b.projected_item(t, p.item_index(*id).unwrap()))
        .collect()
}

fn tensor(name: &str, v: Vec<f64>) -> NamedTensor {
    NamedTensor::new(name, v)
}

/// Every case evaluated at `points` random points; reports keep the worst.
pub fn run(points: usize, seed: u64) -> Vec<GradCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<GradCase> = Vec::new();
    let mut record = |name: &str, r: GradReport| {
        let case = match cases.iter_mut().find(|c| c.name == name) {
            Some(c) => c,
            None => {
                cases.push(GradCase {
                    name: name.to_string(),
                    points: 0,
                    worst: 0.0,
                    failures: 0,
                });
                cases.last_mut().unwrap()
            }
        };
        case.points += 1;
        case.failures += r.failures;
        case.worst = case.worst.max(r.max_error());
    };

    for _ in 0..points {
        let a = random_point(&mut rng, 3, 0.8);
        let b = random_point(&mut rng, 3, 0.8);
        let v = random_point(&mut rng, 3, 0.8);
        let m: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.5..=1.5)).collect();
        let a4 = random_point(&mut rng, 4, 0.8);
        let alpha = rng.gen_range(-2.0..=2.0);
        let radius = rng.gen_range(1.1..=3.0);
        let outside = random_on_sphere(&mut rng, 3, radius);

        record(
            "mobius_add",
            check(|t, p| {
                let y = hyper::mobius_add(t, p[0], p[1]);
                contract(t, y, 0)
            }, &[tensor("a", a.clone()), tensor("b", b.clone())]),
        );
        record(
            "scalar_mul",
            check(|t, p| {
                let y = hyper::scalar_mul(t, p[0], p[1]);
                contract(t, y, 0)
            }, &[tensor("alpha", vec![alpha]), tensor("b", b.clone())]),
        );
        record(
            "matvec",
            check(|t, p| {
                let y = hyper::matvec(t, p[0], 3, 4, p[1]);
                contract(t, y, 0)
            }, &[tensor("M", m.clone()), tensor("a", a4.clone())]),
        );
        record(
            "exp_map",
            check(|t, p| {
                let y = hyper::exp_map(t, p[0], p[1]);
                contract(t, y, 0)
            }, &[tensor("x", a.clone()), tensor("v", v.clone())]),
        );
        record(
            "log_map",
            check(|t, p| {
                let y = hyper::log_map(t, p[0], p[1]);
                contract(t, y, 0)
            }, &[tensor("x", a.clone()), tensor("y", b.clone())]),
        );
        record(
            "exp0",
            check(|t, p| {
                let y = hyper::exp0(t, p[0]);
                contract(t, y, 0)
            }, &[tensor("v", v.clone())]),
        );
        record(
            "log0",
            check(|t, p| {
                let y = hyper::log0(t, p[0]);
                contract(t, y, 0)
            }, &[tensor("y", b.clone())]),
        );
        record(
            "distance",
            check(|t, p| hyper::distance(t, p[0], p[1]), &[tensor("p", a.clone()), tensor("q", b.clone())]),
        );
        record(
            "clip",
            check(|t, p| {
                let y = hyper::clip(t, p[0]);
                contract(t, y, 0)
            }, &[tensor("v", outside.clone())]),
        );

        let sign = if rng.gen_bool(0.5) { AttentionSign::Positive } else { AttentionSign::Negative };
        let config = ModelConfig {
            attention_sign: sign,
            ..ModelConfig::default()
        };
        let params = random_params(&mut rng, config);
        let g = random_graph(&mut rng);
        let items = node_keys(&params, &g);
        let t_norm = rng.gen_range(0.05..0.9);

        let mut keys = vec![ParamKey::W1, ParamKey::Item(0)];
        record(
            "hyperbolic_projection",
            model_check(&params, &keys, &[], |t, b, _| {
                let raw = b.var(t, ParamKey::Item(0));
                let y = model::hyperbolic_projection(t, b, raw);
                contract(t, y, 0)
            }),
        );
        record(
            "time_embedding",
            model_check(&params, &[ParamKey::WT], &[], |t, b, _| {
                let y = model::time_embedding(t, b, t_norm).unwrap();
                contract(t, y, 0)
            }),
        );
        keys = vec![ParamKey::W1];
        keys.extend(items.iter().copied());
        record(
            "attention_coefficients",
            model_check(&params, &keys, &[], |t, b, _| {
                let s = states(t, b, &g);
                let mut outs = Vec::new();
                for i in 0..s.len() {
                    outs.push(model::attention_coefficients(t, b, &s, &g, i).unwrap().1);
                }
                contract_all(t, &outs)
            }),
        );
        keys.push(ParamKey::WT);
        record(
            "self_attention_layer",
            model_check(&params, &keys, &[], |t, b, _| {
                let s = states(t, b, &g);
                let out = model::self_attention_layer(t, b, &s, &g).unwrap();
                contract_all(t, &out)
            }),
        );
        let mut keys = vec![ParamKey::W1, ParamKey::W2, ParamKey::W3, ParamKey::XAtt, ParamKey::CBias];
        keys.extend(items.iter().copied());
        record(
            "soft_attention_session",
            model_check(&params, &keys, &[], |t, b, _| {
                let s = states(t, b, &g);
                let y = model::soft_attention_session(t, b, &s, &g);
                contract(t, y, 0)
            }),
        );
        let h_s = random_point(&mut rng, 4, 0.8);
        let h_last = random_point(&mut rng, 4, 0.8);
        record(
            "project_session_future",
            model_check(&params, &[ParamKey::WT], &[tensor("h_s", h_s.clone())], |t, b, x| {
                let ht = model::time_embedding(t, b, t_norm).unwrap();
                let y = model::project_session_future(t, x[0], ht);
                contract(t, y, 0)
            }),
        );
        record(
            "project_item_future",
            model_check(
                &params,
                &[ParamKey::W4, ParamKey::W5, ParamKey::WT],
                &[tensor("h_s_future", h_s.clone()), tensor("h_last", h_last.clone())],
                |t, b, x| {
                    let ht = model::time_embedding(t, b, t_norm).unwrap();
                    let y = model::project_item_future(t, b, x[0], x[1], ht);
                    contract(t, y, 0)
                },
            ),
        );

        let target = rng.gen_range(1..=5u64);
        let example = TrainingExample {
            graph: g.clone(),
            target_item: target,
            target_interval: t_norm,
        };
        let mut keys: Vec<ParamKey> = ParamKey::DENSE.to_vec();
        keys.extend((0..params.num_items()).map(ParamKey::Item));
        record(
            "full loss",
            model_check(&params, &keys, &[], |t, b, _| compute_loss(t, b, &example).unwrap().total),
        );
        let deep = ModelParams {
            config: ModelConfig {
                layers: 2,
                ..config
            },
            ..params.clone()
        };
        record(
            "full loss (two layers)",
            // deeper stacks put some gradients below the rounding floor of f
            model_check_with(&deep, &keys, &[], true, |t, b, _| compute_loss(t, b, &example).unwrap().total),
        );
    }
    cases
}
