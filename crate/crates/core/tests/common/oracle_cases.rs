//! Hand-set instances comparing model components with [`super::oracle`].

use tahgat::data::Vocabulary;
use tahgat::grad::{Tape, Var};
use tahgat::graph::{build_session_graph, Direction, Event, IntervalNormalizer, SessionGraph, SessionRecord};
use tahgat::manifold::{BallPoint, Matrix};
use tahgat::model::{self, AttentionSign, Binder, ModelConfig, ModelParams};

use super::max_abs_diff;
use super::oracle::{self as o, Mat};

pub const ITEMS: [u64; 5] = [10, 20, 30, 40, 50];

fn rows(m: &Matrix) -> Mat {
    (0..m.rows).map(|i| m.row(i).to_vec()).collect()
}

pub fn hand_params(sign: AttentionSign) -> ModelParams {
    let bp = |v: [f64; 3]| BallPoint::new(v.to_vec()).unwrap();
    let mat = |r: [[f64; 3]; 3]| Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>());
    ModelParams {
        config: ModelConfig {
            layers: 1,
            attention_sign: sign,
            direction: Direction::In,
            lambda_s: 0.1,
            lambda_v: 0.1,
        },
        dim: 3,
        feature_dim: 3,
        vocab: Vocabulary::from_items(ITEMS),
        item_table: vec![
            bp([0.30, -0.10, 0.20]),
            bp([-0.25, 0.40, 0.05]),
            bp([0.10, 0.15, -0.35]),
            bp([-0.05, -0.30, -0.20]),
            bp([0.45, 0.20, 0.10]),
        ],
        w1: mat([[0.9, -0.2, 0.1], [0.3, 1.1, -0.4], [-0.1, 0.2, 0.8]]),
        w2: mat([[0.7, 0.1, -0.3], [-0.2, 0.6, 0.4], [0.5, -0.1, 0.9]]),
        w3: mat([[0.4, -0.6, 0.2], [0.3, 0.8, -0.1], [-0.7, 0.2, 0.5]]),
        w4: mat([[1.0, 0.2, -0.1], [-0.3, 0.7, 0.2], [0.1, -0.4, 0.9]]),
        w5: mat([[0.6, -0.1, 0.3], [0.2, 0.9, -0.2], [-0.3, 0.1, 0.7]]),
        x_att: vec![0.8, -0.5, 1.2],
        c_bias: bp([0.05, -0.02, 0.1]),
        w_t: vec![0.6, 0.3, -0.4],
    }
}

pub const TAU: f64 = 60.0;
pub const CAP: f64 = 86_400.0;

/// Items 10, 20, 10, 30, 40: nodes [10, 20, 30, 40] with edges
/// 10→20 (40 s), 20→10 (60 s), 10→30 (30 s), 30→40 (270 s).
pub fn hand_graph() -> (SessionGraph, Vec<Vec<(usize, f64)>>) {
    let events = vec![
        Event::new(10, 0),
        Event::new(20, 40),
        Event::new(10, 100),
        Event::new(30, 130),
        Event::new(40, 400),
    ];
    let norm = IntervalNormalizer::new(TAU, CAP).unwrap();
    let g = build_session_graph(&SessionRecord::new("hand", events).unwrap(), &norm).unwrap();
    let t = |d: f64| o::normalize_interval(d, TAU, CAP);
    let neighbors = vec![
        vec![(0, 0.0), (1, t(60.0))],
        vec![(1, 0.0), (0, t(40.0))],
        vec![(2, 0.0), (0, t(30.0))],
        vec![(3, 0.0), (2, t(270.0))],
    ];
    (g, neighbors)
}

pub fn hand_states() -> Vec<Vec<f64>> {
    vec![
        vec![0.20, 0.10, -0.30],
        vec![-0.40, 0.25, 0.10],
        vec![0.05, -0.35, 0.30],
        vec![0.30, 0.30, 0.15],
    ]
}

fn constants(t: &mut Tape, h: &[Vec<f64>]) -> Vec<Var> {
    h.iter().map(|v| t.constant(v.clone())).collect()
}

/// Largest deviation of each component from its oracle.
pub fn deviations() -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    let (g, neighbors) = hand_graph();
    let h = hand_states();

    // neighbourhoods and their intervals
    let mut worst: f64 = 0.0;
    for (i, expect) in neighbors.iter().enumerate() {
        let mut got = g.neighbors(i, Direction::In).unwrap();
        let mut want = expect.clone();
        got.sort_by_key(|p| p.0);
        want.sort_by_key(|p| p.0);
        assert_eq!(got.len(), want.len(), "neighbourhood size of node {i}");
        for (a, b) in got.iter().zip(&want) {
            assert_eq!(a.0, b.0);
            worst = worst.max((a.1 - b.1).abs());
        }
    }
    out.push(("session graph intervals", worst));

    for (name, sign) in [
        ("self_attention_layer (+1)", AttentionSign::Positive),
        ("self_attention_layer (-1)", AttentionSign::Negative),
    ] {
        let params = hand_params(sign);
        let mut t = Tape::new();
        let mut b = Binder::new(&params);
        let states = constants(&mut t, &h);
        let got = model::self_attention_layer(&mut t, &mut b, &states, &g).unwrap();
        let want = o::layer(&h, &neighbors, &params.w_t, sign.value());
        let worst = got
            .iter()
            .zip(&want)
            .map(|(v, w)| max_abs_diff(t.value(*v), w))
            .fold(0.0, f64::max);
        out.push((name, worst));
    }

    let params = hand_params(AttentionSign::Positive);
    {
        let mut t = Tape::new();
        let b = Binder::new(&params);
        let states = constants(&mut t, &h);
        let mut worst: f64 = 0.0;
        for i in 0..h.len() {
            let (neigh, w) = model::attention_coefficients(&mut t, &b, &states, &g, i).unwrap();
            let want = o::attention_weights(&h, i, &neigh, 1.0);
            worst = worst.max(max_abs_diff(t.value(w), &want));
        }
        out.push(("attention_coefficients", worst));
    }

    {
        let mut t = Tape::new();
        let mut b = Binder::new(&params);
        let states = constants(&mut t, &h);
        let got = model::soft_attention_session(&mut t, &mut b, &states, &g);
        let want = o::soft_attention(&h, g.last_index, &rows(&params.w2), &rows(&params.w3), params.c_bias.coords(), &params.x_att);
        out.push(("soft_attention_session", max_abs_diff(t.value(got), &want)));
    }

    let h_s = vec![0.15, -0.40, 0.25];
    let h_last = h[3].clone();
    for t_norm in [0.0, 0.5] {
        let mut t = Tape::new();
        let mut b = Binder::new(&params);
        let hs = t.constant(h_s.clone());
        let hl = t.constant(h_last.clone());
        let ht = model::time_embedding(&mut t, &mut b, t_norm).unwrap();
        let sf = model::project_session_future(&mut t, hs, ht);
        let vf = model::project_item_future(&mut t, &mut b, sf, hl, ht);
        let ht_o = o::time_vector(&params.w_t, t_norm);
        let sf_o = o::session_future(&h_s, &ht_o);
        let vf_o = o::item_future(&rows(&params.w4), &rows(&params.w5), &sf_o, &h_last, &ht_o);
        let name_s = if t_norm == 0.0 { "project_session_future (t'=0)" } else { "project_session_future (t'=0.5)" };
        let name_v = if t_norm == 0.0 { "project_item_future (t'=0)" } else { "project_item_future (t'=0.5)" };
        out.push(("time_embedding", max_abs_diff(t.value(ht), &ht_o)));
        out.push((name_s, max_abs_diff(t.value(sf), &sf_o)));
        out.push((name_v, max_abs_diff(t.value(vf), &vf_o)));
    }

    // Two items equidistant from the query exercise the id tie-break.
    let table: Vec<(u64, Vec<f64>)> = vec![
        (7, vec![0.3, 0.0, 0.0]),
        (3, vec![-0.3, 0.0, 0.0]),
        (5, vec![0.1, 0.5, -0.2]),
        (1, vec![0.0, -0.6, 0.1]),
        (9, vec![0.05, 0.02, 0.01]),
    ];
    let query = vec![0.0, 0.0, 0.0];
    let lib_table: Vec<(u64, BallPoint)> = table
        .iter()
        .map(|(i, v)| (*i, BallPoint::new(v.clone()).unwrap()))
        .collect();
    let got = model::score_items(&BallPoint::new(query.clone()).unwrap(), &lib_table, 3).unwrap();
    let want = o::brute_force_rank(&query, &table, 3);
    let ids_match = got.items().eq(want.iter().map(|p| p.0));
    let dist = got
        .entries
        .iter()
        .zip(&want)
        .map(|(a, b)| (a.1 - b.1).abs())
        .fold(0.0, f64::max);
    out.push(("score_items", if ids_match { dist } else { f64::INFINITY }));

    // Whole forward pass from raw features.
    {
        let mut t = Tape::new();
        let mut b = Binder::new(&params);
        let t_norm = o::normalize_interval(45.0, TAU, CAP);
        let fw = model::forward(&mut t, &mut b, &g, t_norm).unwrap();
        let w1 = rows(&params.w1);
        let h1: Vec<Vec<f64>> = g
            .nodes
            .iter()
            .map(|id| {
                let idx = ITEMS.iter().position(|x| x == id).unwrap();
                o::matvec(&w1, &o::exp0(params.item_table[idx].coords()))
            })
            .collect();
        let h2 = o::layer(&h1, &neighbors, &params.w_t, 1.0);
        let hs = o::soft_attention(&h2, g.last_index, &rows(&params.w2), &rows(&params.w3), params.c_bias.coords(), &params.x_att);
        let ht = o::time_vector(&params.w_t, t_norm);
        let sf = o::session_future(&hs, &ht);
        let vf = o::item_future(&rows(&params.w4), &rows(&params.w5), &sf, &h2[g.last_index], &ht);
        out.push(("forward (one layer)", max_abs_diff(t.value(fw.h_v_future), &vf)));
    }
    out
}
