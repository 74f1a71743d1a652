use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// A named flat parameter tensor fed to [`check_gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub values: Vec<f64>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    pub name: String,
    pub max_rel_error: f64,
}

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub params: Vec<ParamError>,
    /// Evaluations that produced a non-finite value or failed to differentiate.
    pub failures: usize,
}

impl GradReport {
    pub fn max_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.failures == 0 && self.max_error() < tol
    }
}

impl std::fmt::Display for GradReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.params {
            writeln!(f, "{:<16} {:.3e}", p.name, p.max_rel_error)?;
        }
        write!(f, "failures: {}", self.failures)
    }
}

/// Compares reverse-mode gradients of `f` with central differences.
///
/// `f` receives one leaf per tensor, in order, and must return a scalar node.
/// The relative error of each coordinate uses the denominator
/// `max(|analytic|, |numeric|, 1e-8)`.
pub fn check_gradients<F>(f: F, params: &[NamedTensor], h: f64) -> Result<GradReport>
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    check_inner(f, params, h, None)
}

/// Rounding error assumed for one evaluation of `f`, in ulps of `|f|`.
pub const ROUNDING_ULPS: f64 = 16.0;

/// Like [`check_gradients`], but coordinates whose gradient is so small that
/// rounding in `f` alone could exceed `tol` are judged against that noise
/// level instead: the denominator also includes `ROUNDING_ULPS·ε·|f| / (h·tol)`.
pub fn check_gradients_noise_aware<F>(
    f: F,
    params: &[NamedTensor],
    h: f64,
    tol: f64,
) -> Result<GradReport>
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    check_inner(f, params, h, Some(tol))
}

fn check_inner<F>(f: F, params: &[NamedTensor], h: f64, noise_tolerance: Option<f64>) -> Result<GradReport>
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let eval = |values: &[Vec<f64>]| -> f64 {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let out = f(&mut tape, &leaves);
        let v = tape.value(out);
        if v.len() == 1 {
            v[0]
        } else {
            f64::NAN
        }
    };

    let mut failures = 0;
    let mut tape = Tape::new();
    let leaves: Vec<Var> = params.iter().map(|p| tape.leaf(p.values.clone())).collect();
    let root = f(&mut tape, &leaves);
    let adjoints = match tape.backward(root) {
        Ok(a) => Some(a),
        Err(_) => {
            failures += 1;
            None
        }
    };

    let mut values: Vec<Vec<f64>> = params.iter().map(|p| p.values.clone()).collect();
    let mut report = Vec::with_capacity(params.len());
    for (pi, p) in params.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for k in 0..p.values.len() {
            let orig = values[pi][k];
            values[pi][k] = orig + h;
            let plus = eval(&values);
            values[pi][k] = orig - h;
            let minus = eval(&values);
            values[pi][k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = adjoints.as_ref().map_or(f64::NAN, |a| a.wrt(leaves[pi])[k]);
            if !numeric.is_finite() || !analytic.is_finite() {
                failures += 1;
                worst = f64::INFINITY;
                continue;
            }
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let denom = match noise_tolerance {
                Some(tol) => denom.max(ROUNDING_ULPS * f64::EPSILON * plus.abs().max(minus.abs()) / (h * tol)),
                None => denom,
            };
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        report.push(ParamError {
            name: p.name.clone(),
            max_rel_error: worst,
        });
    }
    Ok(GradReport {
        params: report,
        failures,
    })
}
