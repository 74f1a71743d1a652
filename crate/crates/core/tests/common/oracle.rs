//! Reference evaluations written directly from the formulas.
//!
//! Nothing here calls into the library's arithmetic: vectors are plain
//! slices, matrices are lists of rows, and distance uses the
//! `2·artanh‖(−p) ⊕ q‖` form rather than the arcosh form.

pub type Mat = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn mobius_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab = dot(a, b);
    let a2 = dot(a, a);
    let b2 = dot(b, b);
    let den = 1.0 + 2.0 * ab + a2 * b2;
    (0..a.len())
        .map(|i| ((1.0 + 2.0 * ab + b2) * a[i] + (1.0 - a2) * b[i]) / den)
        .collect()
}

pub fn scalar_mul(r: f64, x: &[f64]) -> Vec<f64> {
    let n = norm(x);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    scale(x, (r * n.atanh()).tanh() / n)
}

pub fn matvec(m: &Mat, x: &[f64]) -> Vec<f64> {
    let mx: Vec<f64> = m.iter().map(|row| dot(row, x)).collect();
    let (nx, nmx) = (norm(x), norm(&mx));
    if nx == 0.0 || nmx == 0.0 {
        return vec![0.0; m.len()];
    }
    scale(&mx, ((nmx / nx) * nx.atanh()).tanh() / nmx)
}

pub fn exp0(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        return v.to_vec();
    }
    scale(v, n.tanh() / n)
}

pub fn log0(y: &[f64]) -> Vec<f64> {
    let n = norm(y);
    if n == 0.0 {
        return y.to_vec();
    }
    scale(y, n.atanh() / n)
}

pub fn distance(p: &[f64], q: &[f64]) -> f64 {
    let neg: Vec<f64> = p.iter().map(|x| -x).collect();
    2.0 * norm(&mobius_add(&neg, q)).atanh()
}

pub fn leaky(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.2 * x }).collect()
}

/// `w_t ⊗ t'` with a one-dimensional input.
pub fn time_vector(w_t: &[f64], t: f64) -> Vec<f64> {
    if t == 0.0 {
        return vec![0.0; w_t.len()];
    }
    let nw = norm(w_t);
    scale(w_t, (nw * t.atanh()).tanh() / nw)
}

pub fn normalize_interval(delta: f64, tau: f64, cap: f64) -> f64 {
    ((1.0 + delta / tau).ln() / (1.0 + cap / tau).ln()).min(1.0 - 1e-5)
}

/// One attention layer. `neighbors[i]` lists `(j, normalized interval j→i)`.
pub fn layer(h: &[Vec<f64>], neighbors: &[Vec<(usize, f64)>], w_t: &[f64], sign: f64) -> Vec<Vec<f64>> {
    (0..h.len())
        .map(|i| {
            let logits: Vec<f64> = neighbors[i]
                .iter()
                .map(|&(j, _)| sign * distance(&h[i], &h[j]))
                .collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let mut acc = vec![0.0; h[i].len()];
            for (k, &(j, t)) in neighbors[i].iter().enumerate() {
                let alpha = logits[k].exp() / z;
                let joint = mobius_add(&h[j], &time_vector(w_t, t));
                let tangent = log0(&scalar_mul(alpha, &joint));
                for (a, x) in acc.iter_mut().zip(tangent) {
                    *a += x;
                }
            }
            exp0(&leaky(&acc))
        })
        .collect()
}

/// Softmax attention weights of node `i`, in neighbor order.
pub fn attention_weights(h: &[Vec<f64>], i: usize, neighbors: &[(usize, f64)], sign: f64) -> Vec<f64> {
    let e: Vec<f64> = neighbors
        .iter()
        .map(|&(j, _)| (sign * distance(&h[i], &h[j])).exp())
        .collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

pub fn soft_attention(h: &[Vec<f64>], last: usize, w2: &Mat, w3: &Mat, c: &[f64], x: &[f64]) -> Vec<f64> {
    let hp = matvec(w2, &h[last]);
    let mut acc = vec![0.0; h[0].len()];
    for hq in h {
        let inner = mobius_add(&mobius_add(&hp, &matvec(w3, hq)), c);
        let activated = exp0(&leaky(&log0(&inner)));
        let beta = matvec(&vec![x.to_vec()], &activated)[0];
        let tangent = log0(&scalar_mul(beta, hq));
        for (a, t) in acc.iter_mut().zip(tangent) {
            *a += t;
        }
    }
    exp0(&leaky(&acc))
}

pub fn session_future(h_s: &[f64], h_t: &[f64]) -> Vec<f64> {
    let s = log0(h_s);
    let t = log0(h_t);
    let prod: Vec<f64> = s.iter().zip(&t).map(|(a, b)| a * (1.0 + b)).collect();
    exp0(&leaky(&prod))
}

pub fn item_future(w4: &Mat, w5: &Mat, h_s_future: &[f64], h_last: &[f64], h_t: &[f64]) -> Vec<f64> {
    let sum = mobius_add(&mobius_add(&matvec(w4, h_s_future), &matvec(w5, h_last)), h_t);
    let v: Vec<f64> = log0(&sum).iter().map(|x| x.tanh()).collect();
    exp0(&v)
}

/// Every item sorted by distance then id, truncated to `k`.
pub fn brute_force_rank(query: &[f64], table: &[(u64, Vec<f64>)], k: usize) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = table.iter().map(|(id, e)| (*id, distance(query, e))).collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}
