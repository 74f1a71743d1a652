//! Möbius arithmetic, exponential and logarithmic maps, and geodesic
//! distance on the unit Poincaré ball.
//!
//! Run with `cargo run --example manifold_basics`.

use tahgat::manifold::{self, BallPoint, Matrix, TangentVector, MAX_NORM};

fn show(label: &str, p: &[f64]) {
    let coords: Vec<String> = p.iter().map(|x| format!("{x:+.4}")).collect();
    println!("{label:<28} [{}]", coords.join(", "));
}

fn main() -> tahgat::Result<()> {
    let a = BallPoint::new(vec![0.3, -0.2])?;
    let b = BallPoint::new(vec![-0.1, 0.6])?;
    let origin = BallPoint::origin(2);

    show("a", a.coords());
    show("b", b.coords());
    show("a (+) b", manifold::mobius_add(&a, &b).coords());
    show("b (+) a (not commutative)", manifold::mobius_add(&b, &a).coords());
    show("(-a) (+) (a (+) b) = b", manifold::mobius_add(&a.negate(), &manifold::mobius_add(&a, &b)).coords());
    show("3 (x) a", manifold::mobius_scalar_mul(3.0, &a).coords());

    let rot = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
    show("rotation (x) a", manifold::mobius_matvec(&rot, &a).coords());

    let v = TangentVector::new(vec![1.5, 0.5])?;
    let y = manifold::exp_map(&a, &v);
    show("exp_a(v)", y.coords());
    show("log_a(exp_a(v)) = v", manifold::log_map(&a, &y).coords());

    println!();
    println!("d(a, b)            = {:.6}", manifold::distance(&a, &b));
    println!("d(0, a)            = {:.6}", manifold::distance(&origin, &a));
    println!("2 artanh |a|       = {:.6}", 2.0 * a.norm().atanh());

    // distances blow up near the boundary, so points are kept inside a shell
    println!();
    for r in [0.5, 0.9, 0.99, 0.999, 2.0] {
        let p = manifold::project_to_ball(vec![r, 0.0])?;
        println!("radius {r:<6} -> norm {:.6}, d(0, p) = {:.3}", p.norm(), manifold::distance(&origin, &p));
    }
    println!("largest allowed norm: {MAX_NORM}");
    Ok(())
}
