//! Seeded random checks of the Poincaré-ball identities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tahgat::manifold::{self, BallPoint, Matrix, TangentVector, MAX_NORM};

use super::{max_abs_diff, random_on_sphere, random_point};

#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub tolerance: f64,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tracker {
    outcome: PropertyOutcome,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            outcome: PropertyOutcome {
                name,
                tolerance,
                cases: 0,
                failures: 0,
                worst: 0.0,
            },
        }
    }

    fn record(&mut self, err: f64) {
        let o = &mut self.outcome;
        o.cases += 1;
        if !(err <= o.tolerance) {
            o.failures += 1;
        }
        o.worst = if err.is_nan() { f64::NAN } else { o.worst.max(err) };
    }
}

fn point(rng: &mut ChaCha8Rng, dim: usize, max_norm: f64) -> BallPoint {
    BallPoint::new(random_point(rng, dim, max_norm)).unwrap()
}

/// Runs every property on `n` instances drawn from `seed`.
pub fn run(n: usize, seed: u64) -> Vec<PropertyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut identity = Tracker::new("right identity a+0 = a", 1e-9);
    let mut inverse = Tracker::new("inverse (-a)+a = 0", 1e-9);
    let mut cancel = Tracker::new("left cancellation", 1e-8);
    let mut round_trip = Tracker::new("log_x(exp_x(v)) = v", 1e-7);
    let mut symmetry = Tracker::new("distance symmetry", 1e-12);
    let mut artanh = Tracker::new("distance = 2 artanh|(-p)+q|", 1e-8);
    let mut triangle = Tracker::new("triangle inequality", 1e-8);
    let mut scalar = Tracker::new("n (x) b = b+...+b", 1e-8);
    let mut matvec = Tracker::new("2I (x) a = 2 (x) a", 1e-9);
    let mut boundary = Tracker::new("finite on the 1-1e-5 shell", 0.0);

    for _ in 0..n {
        let dim = rng.gen_range(2..=8);
        let a = point(&mut rng, dim, 0.9);
        let b = point(&mut rng, dim, 0.9);
        let zero = BallPoint::origin(dim);

        identity.record(max_abs_diff(manifold::mobius_add(&a, &zero).coords(), a.coords()));
        inverse.record(manifold::mobius_add(&a.negate(), &a).norm());
        let ab = manifold::mobius_add(&a, &b);
        cancel.record(max_abs_diff(manifold::mobius_add(&a.negate(), &ab).coords(), b.coords()));

        let x = point(&mut rng, dim, 0.8);
        let v = TangentVector::new(random_point(&mut rng, dim, 2.0)).unwrap();
        let y = manifold::exp_map(&x, &v);
        round_trip.record(max_abs_diff(manifold::log_map(&x, &y).coords(), v.coords()));

        let p = point(&mut rng, dim, 0.9);
        let q = point(&mut rng, dim, 0.9);
        let r = point(&mut rng, dim, 0.9);
        let d_pq = manifold::distance(&p, &q);
        symmetry.record((d_pq - manifold::distance(&q, &p)).abs());
        let gyro = 2.0 * manifold::mobius_add(&p.negate(), &q).norm().atanh();
        artanh.record((d_pq - gyro).abs());
        let excess = manifold::distance(&p, &r) - d_pq - manifold::distance(&q, &r);
        triangle.record(excess.max(0.0));

        let mut sum = b.clone();
        for k in 1..=3 {
            if k > 1 {
                sum = manifold::mobius_add(&sum, &b);
            }
            let mul = manifold::mobius_scalar_mul(k as f64, &b);
            scalar.record(max_abs_diff(mul.coords(), sum.coords()));
        }

        let mut two = Matrix::identity(dim);
        two.data.iter_mut().for_each(|x| *x *= 2.0);
        let via_matrix = manifold::mobius_matvec(&two, &a);
        matvec.record(max_abs_diff(via_matrix.coords(), manifold::mobius_scalar_mul(2.0, &a).coords()));

        let e1 = BallPoint::new(random_on_sphere(&mut rng, dim, MAX_NORM)).unwrap();
        let e2 = BallPoint::new(random_on_sphere(&mut rng, dim, MAX_NORM)).unwrap();
        let m = Matrix {
            rows: dim,
            cols: dim,
            data: (0..dim * dim).map(|_| rng.gen_range(-2.0..=2.0)).collect(),
        };
        let tv = TangentVector::new(random_point(&mut rng, dim, 5.0)).unwrap();
        let mut values = Vec::new();
        values.extend_from_slice(manifold::mobius_add(&e1, &e2).coords());
        values.extend_from_slice(manifold::mobius_add(&e1, &e1.negate()).coords());
        values.extend_from_slice(manifold::mobius_scalar_mul(3.0, &e1).coords());
        values.extend_from_slice(manifold::mobius_matvec(&m, &e1).coords());
        values.extend_from_slice(manifold::exp_map(&e1, &tv).coords());
        values.extend_from_slice(manifold::log_map(&e1, &e2).coords());
        values.extend_from_slice(manifold::log_map(&zero, &e1).coords());
        values.push(manifold::distance(&e1, &e2));
        values.push(manifold::distance(&e1, &zero));
        let finite = values.iter().all(|x| x.is_finite());
        let norms_ok = [
            manifold::mobius_add(&e1, &e2),
            manifold::mobius_scalar_mul(3.0, &e1),
            manifold::mobius_matvec(&m, &e1),
            manifold::exp_map(&e1, &tv),
        ]
        .iter()
        .all(|p| p.norm() <= MAX_NORM + 1e-15);
        boundary.record(if finite && norms_ok { 0.0 } else { 1.0 });
    }

    [identity, inverse, cancel, round_trip, symmetry, artanh, triangle, scalar, matvec, boundary]
        .into_iter()
        .map(|t| t.outcome)
        .collect()
}
