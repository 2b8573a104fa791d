//! Containment certificates for compositions `φ = p_k ∘ … ∘ p_1`.
//!
//! A composition is checked on `[a*, right]`, where `a*` is the first grid
//! point at which `|φ(x) − 1| ≤ δ`. Besides the grid itself, every stage
//! contributes the points where its derivative vanishes along the chain,
//! i.e. the roots of `x ↦ p_k′(φ_{k−1}(x))`, so the extrema of `φ` are
//! evaluated exactly rather than sampled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{sign_change_roots, uniform_grid, Composition, OddPolynomial};
use crate::schedule::Schedule;

/// Default number of grid points.
pub const DEFAULT_GRID: usize = 10_000;

/// Allowed excursion outside `[1−δ, 1+δ]`.
pub const CONTAINMENT_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub delta: f64,
    pub right: f64,
    pub grid: usize,
    /// Smallest grid point with `|φ(x) − 1| ≤ δ`; absent if none qualifies.
    pub a_star: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
    /// Largest distance of `φ([a*, right])` outside `[1−δ, 1+δ]`.
    pub max_violation: f64,
    pub contained: bool,
    pub derivative_at_zero: f64,
    pub matmuls: usize,
}

/// Checks that `φ([a*, right]) ⊆ [1−δ, 1+δ]` up to [`CONTAINMENT_SLACK`].
pub fn verify_composition(c: &Composition, delta: f64, right: f64, grid: usize) -> Result<VerifyReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    if !(right > 0.0 && right.is_finite()) || grid < 2 {
        return Err(Error::InvalidArgument("right boundary must be positive and grid >= 2".into()));
    }
    let mut report = VerifyReport {
        delta,
        right,
        grid,
        a_star: None,
        min_value: f64::NAN,
        max_value: f64::NAN,
        max_violation: f64::INFINITY,
        contained: false,
        derivative_at_zero: c.derivative_at_zero(),
        matmuls: c.matmul_cost(),
    };
    let xs: Vec<f64> = uniform_grid(0.0, right, grid).collect();
    let Some(start) = xs.iter().position(|&x| x > 0.0 && (c.eval(x) - 1.0).abs() <= delta) else {
        return Ok(report);
    };
    let a_star = xs[start];
    let mut points: Vec<f64> = xs[start..].to_vec();
    if a_star < right {
        for k in 0..c.len() {
            let inner = Composition::new(c.polys()[..k].to_vec()).ok();
            let stage = &c.polys()[k];
            let slope = |x: f64| stage.eval_derivative(inner.as_ref().map_or(x, |i| i.eval(x)));
            points.extend(sign_change_roots(slope, a_star, right, grid));
        }
    }
    let (lo, hi) = points
        .iter()
        .map(|&x| c.eval(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let violation = (hi - (1.0 + delta)).max((1.0 - delta) - lo).max(0.0);
    report.a_star = Some(a_star);
    report.min_value = lo;
    report.max_value = hi;
    report.max_violation = violation;
    report.contained = violation <= CONTAINMENT_SLACK;
    Ok(report)
}

/// Coefficient lists accepted by the verifier, with optional metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub name: Option<String>,
    pub composition: Composition,
    pub delta: Option<f64>,
    /// Right end of the domain the list was designed for.
    pub right: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientFile {
    Schedule(Schedule),
    Annotated {
        #[serde(default)]
        name: Option<String>,
        coeffs: Vec<Vec<f64>>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        right: Option<f64>,
    },
    Bare(Vec<Vec<f64>>),
    Polynomials(Vec<OddPolynomial>),
}

/// Parses a schedule, `{"coeffs": [[...]], "delta"?, "right"?, "name"?}`,
/// a bare array of coefficient arrays, or an array of `{"coeffs": [...]}`.
pub fn parse_coefficient_file(text: &str) -> Result<CoefficientSet> {
    let file: CoefficientFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("not a schedule or coefficient list: {e}")))?;
    let lists = |rows: Vec<Vec<f64>>| -> Result<Composition> {
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        Composition::from_coefficients(&refs)
    };
    Ok(match file {
        CoefficientFile::Schedule(s) => {
            CoefficientSet { name: None, composition: s.composition(), delta: s.delta(), right: None }
        }
        CoefficientFile::Annotated { name, coeffs, delta, right } => {
            CoefficientSet { name, composition: lists(coeffs)?, delta, right }
        }
        CoefficientFile::Bare(rows) => {
            CoefficientSet { name: None, composition: lists(rows)?, delta: None, right: None }
        }
        CoefficientFile::Polynomials(polys) => {
            CoefficientSet { name: None, composition: Composition::new(polys)?, delta: None, right: None }
        }
    })
}
