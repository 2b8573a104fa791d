//! Best uniform odd approximation of the constant 1 on `[a, b]`.
//!
//! Degree 3 has a closed form; higher degrees are found with a Remez exchange
//! that keeps the interval endpoints in the reference set and replaces the
//! interior points with the extrema of the current iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::OddPolynomial;

/// Largest term count accepted by [`remez`] (degree 15).
pub const MAX_REMEZ_TERMS: usize = 8;

/// Condition estimate above which the alternance system is rejected.
pub const CONDITION_LIMIT: f64 = 1e15;

/// Optimal odd polynomial on an interval together with its certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawResult", into = "RawResult")]
pub struct MinimaxResult {
    pub poly: OddPolynomial,
    /// Sup-norm deviation `max_{[a,b]} |p − 1|`.
    pub epsilon: f64,
    /// Points where `p − 1` reaches `∓ε`, starting at `a` and ending at `b`.
    pub alternance: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawResult {
    a: f64,
    alternance: Vec<f64>,
    b: f64,
    coeffs: OddPolynomialCoeffs,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct OddPolynomialCoeffs(Vec<f64>);

impl From<RawResult> for MinimaxResult {
    fn from(raw: RawResult) -> Self {
        MinimaxResult {
            poly: OddPolynomial::new(raw.coeffs.0).unwrap_or_else(|_| OddPolynomial::newton_schulz()),
            epsilon: raw.epsilon,
            alternance: raw.alternance,
            a: raw.a,
            b: raw.b,
        }
    }
}

impl From<MinimaxResult> for RawResult {
    fn from(r: MinimaxResult) -> Self {
        RawResult {
            a: r.a,
            alternance: r.alternance,
            b: r.b,
            coeffs: OddPolynomialCoeffs(r.poly.coeffs().to_vec()),
            epsilon: r.epsilon,
        }
    }
}

fn check_closed_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a <= 0.0 || a > b {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok(())
}

/// Shared denominator `2((a²+ab+b²)/3)^{3/2} + ab(a+b)` of the cubic formulas.
fn cubic_denominator(a: f64, b: f64) -> f64 {
    let s = (a * a + a * b + b * b) / 3.0;
    2.0 * s * s.sqrt() + a * b * (a + b)
}

/// `ε(2, a, b)`, the error of the best odd cubic on `[a, b]`.
///
/// The usual ratio `(2s^{3/2} − ab(a+b)) / (2s^{3/2} + ab(a+b))` cancels badly
/// as `a → b`. Multiplying through by the conjugate gives the equivalent
/// `(a−b)²(2(a−b)² + 9ab)² / (27 D²)`, which keeps full relative accuracy.
pub fn epsilon_cubic(a: f64, b: f64) -> Result<f64> {
    check_closed_interval(a, b)?;
    let d = cubic_denominator(a, b);
    let w = (b - a) * (b - a);
    let t = 2.0 * w + 9.0 * a * b;
    Ok(w * t * t / (27.0 * d * d))
}

/// `ε(2, 1−h, 1+h)` evaluated directly in the half-width `h ∈ [0, 1)`.
///
/// Chains of the form `a = 1−ε, b = 1+ε` lose `ε` entirely once it drops
/// below the spacing of doubles near 1; this form does not.
pub fn epsilon_cubic_centered(h: f64) -> f64 {
    let h2 = h * h;
    let t = 9.0 - h2;
    let g = (1.0 + h2 / 3.0).powf(1.5) + 1.0 - h2;
    h2 * t * t / (27.0 * g * g)
}

/// Closed-form best odd cubic on `[a, b]`. For `a = b` this is the limit
/// polynomial with `p(a) = 1` and `p′(a) = 0`.
pub fn best_cubic(a: f64, b: f64) -> Result<MinimaxResult> {
    check_closed_interval(a, b)?;
    let d = cubic_denominator(a, b);
    let u = a * a + a * b + b * b;
    let poly = OddPolynomial::new(vec![2.0 * u / d, -2.0 / d])?;
    let e = (u / 3.0).sqrt();
    Ok(MinimaxResult { poly, epsilon: epsilon_cubic(a, b)?, alternance: vec![a, e.clamp(a, b), b], a, b })
}

/// Best odd cubic on `[1−h, 1+h]`, computed from the half-width.
pub fn best_cubic_centered(h: f64) -> Result<MinimaxResult> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::InvalidArgument(format!("half-width {h} outside [0, 1)")));
    }
    let h2 = h * h;
    let d = 2.0 * (1.0 + h2 / 3.0).powf(1.5) + 2.0 * (1.0 - h2);
    let poly = OddPolynomial::new(vec![2.0 * (3.0 + h2) / d, -2.0 / d])?;
    let (a, b) = (1.0 - h, 1.0 + h);
    Ok(MinimaxResult {
        poly,
        epsilon: epsilon_cubic_centered(h),
        alternance: vec![a, (1.0 + h2 / 3.0).sqrt(), b],
        a,
        b,
    })
}

/// The odd polynomial with `d` terms satisfying `p(1) = 1` and
/// `p^{(j)}(1) = 0` for `j = 1, …, d−1`: the truncated expansion of
/// `x(1 − (1 − x²))^{−1/2}`. It is the limit of the best approximation on
/// `[1−h, 1+h]` as `h → 0`; for `d = 2` it is `3x/2 − x³/2`.
pub fn flat_unity_poly(d: usize) -> Result<OddPolynomial> {
    if d == 0 {
        return Err(Error::InvalidArgument("term count must be positive".into()));
    }
    // c_k = binom(2k, k) / 4^k
    let mut c = vec![1.0f64; d];
    for k in 1..d {
        c[k] = c[k - 1] * (2 * k - 1) as f64 / (2 * k) as f64;
    }
    let mut coeffs = vec![0.0; d];
    for (k, &ck) in c.iter().enumerate() {
        let mut binom = 1.0;
        for (j, coeff) in coeffs.iter_mut().enumerate().take(k + 1) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *coeff += sign * ck * binom;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    OddPolynomial::new(coeffs)
}

/// Solves `p(x_j) + (−1)^j ε = 1`, `j = 0..=n`, for the `n` coefficients of
/// `p` and the levelled error `ε`.
///
/// The points are rescaled so the largest is 1 before the solve, and the
/// coefficients are mapped back afterwards. Gaussian elimination with partial
/// pivoting; for `n ≥ 6` the solution gets two rounds of iterative refinement
/// with a compensated residual.
pub fn solve_alternance_system(points: &[f64], n: usize) -> Result<(OddPolynomial, f64)> {
    if n == 0 || points.len() != n + 1 {
        return Err(Error::InvalidArgument(format!("{} alternance points supplied for {} terms", points.len(), n)));
    }
    if points.iter().any(|x| !x.is_finite() || *x <= 0.0) || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidAlternance);
    }
    let scale = points[n];
    let size = n + 1;
    let mut matrix = vec![0.0; size * size];
    for (j, &x) in points.iter().enumerate() {
        let y = x / scale;
        let y2 = y * y;
        let mut power = y;
        let row = &mut matrix[j * size..(j + 1) * size];
        for entry in row.iter_mut().take(n) {
            *entry = power;
            power *= y2;
        }
        row[n] = if j % 2 == 0 { 1.0 } else { -1.0 };
    }
    let rhs = vec![1.0; size];
    let lu = Lu::factor(&matrix, size)?;
    let condition = lu.condition_estimate(&matrix);
    // Negated so that a NaN estimate is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let mut solution = lu.solve(&rhs);
    if n >= 6 {
        for _ in 0..2 {
            let residual: Vec<f64> = (0..size)
                .map(|i| {
                    let row = &matrix[i * size..(i + 1) * size];
                    rhs[i] - compensated_dot(row, &solution)
                })
                .collect();
            let correction = lu.solve(&residual);
            for (s, c) in solution.iter_mut().zip(&correction) {
                *s += c;
            }
        }
    }
    let epsilon = solution[n];
    let residual = (0..size)
        .map(|i| (rhs[i] - compensated_dot(&matrix[i * size..(i + 1) * size], &solution)).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 * (1.0 + epsilon.abs()) {
        return Err(Error::IllConditioned { condition });
    }
    let poly = OddPolynomial::new(solution[..n].to_vec())?.rescale_argument(1.0 / scale);
    Ok((poly, epsilon))
}

/// Controls for [`remez`].
#[derive(Clone, Copy, Debug)]
pub struct RemezOptions {
    /// Stop once `max|p − 1| / |ε| − 1` falls to this value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RemezOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100 }
    }
}

/// Best odd polynomial with `n` terms (degree `2n − 1`) on `[a, b]`, `a < b`.
///
/// The iteration works on `[a/b, 1]` and maps the result back, which is exact
/// by scale invariance of the problem. Besides the relative defect test it
/// also stops once the defect is within the rounding floor of evaluating `p`,
/// where further exchanges cannot make progress.
pub fn remez(a: f64, b: f64, n: usize, options: RemezOptions) -> Result<MinimaxResult> {
    if !(a.is_finite() && b.is_finite()) || a <= 0.0 || a >= b {
        return Err(Error::InvalidInterval { a, b });
    }
    if n == 0 || n > MAX_REMEZ_TERMS {
        return Err(Error::InvalidArgument(format!("remez supports 1..={MAX_REMEZ_TERMS} terms, got {n}")));
    }
    let left = a / b;
    let mut points = chebyshev_extrema(left, 1.0, n + 1);
    let mut best: Option<MinimaxResult> = None;
    let mut last_defect = f64::INFINITY;

    for _ in 0..options.max_iter.max(1) {
        let (q, level) = solve_alternance_system(&points, n)?;
        let mut candidates = Vec::with_capacity(n + 1);
        candidates.push(left);
        candidates.extend(q.critical_points(left, 1.0));
        candidates.push(1.0);
        let sup = candidates.iter().map(|&x| (q.eval(x) - 1.0).abs()).fold(0.0, f64::max);
        let next = if candidates.len() == n + 1 { candidates } else { select_alternating(&q, &candidates, n + 1)? };

        let level = level.abs();
        let defect = if level > 0.0 { sup / level - 1.0 } else { f64::INFINITY };
        let floor = 8.0 * f64::EPSILON * q.coeffs().iter().map(|c| c.abs()).sum::<f64>();
        last_defect = defect;

        let candidate = MinimaxResult {
            poly: q.rescale_argument(1.0 / b),
            epsilon: sup,
            alternance: next.iter().map(|x| x * b).collect(),
            a,
            b,
        };
        let candidate = pin_endpoints(candidate);
        if best.as_ref().is_none_or(|r| candidate.epsilon < r.epsilon) {
            best = Some(candidate.clone());
        }
        if defect <= options.tol || sup - level <= floor {
            return Ok(candidate);
        }
        points = next;
    }
    Err(Error::NotConverged {
        iterations: options.max_iter,
        defect: last_defect,
        best: Box::new(best.expect("at least one iteration ran")),
    })
}

/// Best odd polynomial with `terms` terms on `[a, b]`, choosing the solver:
/// closed forms for one and two terms, the flat limit polynomial for a
/// degenerate interval, Remez otherwise. If Remez cannot resolve a very narrow
/// interval the flat limit polynomial is used, with its measured deviation as
/// `epsilon`.
pub fn best_odd(a: f64, b: f64, terms: usize) -> Result<MinimaxResult> {
    check_closed_interval(a, b)?;
    match terms {
        0 => Err(Error::InvalidArgument("term count must be positive".into())),
        1 => {
            let poly = OddPolynomial::new(vec![2.0 / (a + b)])?;
            Ok(MinimaxResult { poly, epsilon: (b - a) / (a + b), alternance: vec![a, b], a, b })
        }
        2 => best_cubic(a, b),
        _ if a == b => Ok(MinimaxResult {
            poly: flat_unity_poly(terms)?.rescale_argument(1.0 / a),
            epsilon: 0.0,
            alternance: vec![a; terms + 1],
            a,
            b,
        }),
        _ => match remez(a, b, terms, RemezOptions::default()) {
            Ok(r) => Ok(r),
            Err(Error::IllConditioned { .. }) | Err(Error::NotConverged { .. }) if (b - a) <= 1e-3 * b => {
                let poly = flat_unity_poly(terms)?.rescale_argument(2.0 / (a + b));
                let epsilon = poly.max_deviation_from_one(a, b);
                Ok(MinimaxResult { poly, epsilon, alternance: vec![a, b], a, b })
            }
            Err(Error::NotConverged { best, .. }) => {
                log::warn!("remez on [{a}, {b}] with {terms} terms did not converge; using best iterate");
                Ok(*best)
            }
            Err(e) => Err(e),
        },
    }
}

fn pin_endpoints(mut r: MinimaxResult) -> MinimaxResult {
    if let Some(first) = r.alternance.first_mut() {
        *first = r.a;
    }
    if let Some(last) = r.alternance.last_mut() {
        *last = r.b;
    }
    r
}

/// `count` Chebyshev points of the second kind mapped onto `[a, b]`.
fn chebyshev_extrema(a: f64, b: f64, count: usize) -> Vec<f64> {
    let m = (count - 1) as f64;
    let mut pts: Vec<f64> =
        (0..count).map(|j| 0.5 * (a + b) - 0.5 * (b - a) * (std::f64::consts::PI * j as f64 / m).cos()).collect();
    pts[0] = a;
    pts[count - 1] = b;
    pts
}

/// Reduces a sorted candidate set to `count` points on which `q − 1`
/// alternates in sign, keeping the largest deviations.
fn select_alternating(q: &OddPolynomial, candidates: &[f64], count: usize) -> Result<Vec<f64>> {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for &x in candidates {
        let e = q.eval(x) - 1.0;
        match kept.last_mut() {
            Some(last) if (last.1 >= 0.0) == (e >= 0.0) => {
                if e.abs() > last.1.abs() {
                    *last = (x, e);
                }
            }
            _ => kept.push((x, e)),
        }
    }
    while kept.len() > count {
        if kept[0].1.abs() < kept[kept.len() - 1].1.abs() {
            kept.remove(0);
        } else {
            kept.pop();
        }
    }
    if kept.len() < count {
        return Err(Error::IllConditioned { condition: f64::INFINITY });
    }
    Ok(kept.into_iter().map(|(x, _)| x).collect())
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product accumulated in double-double precision.
fn compensated_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut err = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let (s, se) = two_sum(sum, p);
        sum = s;
        err += pe + se;
    }
    sum + err
}

/// Dense LU factorization with partial pivoting for the small alternance
/// systems (at most 9×9).
struct Lu {
    lu: Vec<f64>,
    perm: Vec<usize>,
    size: usize,
}

impl Lu {
    fn factor(matrix: &[f64], size: usize) -> Result<Self> {
        let mut lu = matrix.to_vec();
        let mut perm: Vec<usize> = (0..size).collect();
        for col in 0..size {
            let pivot = (col..size)
                .max_by(|&i, &j| lu[i * size + col].abs().total_cmp(&lu[j * size + col].abs()))
                .expect("non-empty range");
            if lu[pivot * size + col] == 0.0 {
                return Err(Error::IllConditioned { condition: f64::INFINITY });
            }
            if pivot != col {
                for k in 0..size {
                    lu.swap(col * size + k, pivot * size + k);
                }
                perm.swap(col, pivot);
            }
            let diag = lu[col * size + col];
            for row in col + 1..size {
                let factor = lu[row * size + col] / diag;
                lu[row * size + col] = factor;
                for k in col + 1..size {
                    lu[row * size + k] -= factor * lu[col * size + k];
                }
            }
        }
        Ok(Self { lu, perm, size })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.size;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// `‖A‖₁ · ‖A⁻¹‖₁` with the inverse formed column by column.
    fn condition_estimate(&self, matrix: &[f64]) -> f64 {
        let n = self.size;
        let norm1 = |m: &dyn Fn(usize, usize) -> f64| {
            (0..n).map(|j| (0..n).map(|i| m(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        let a_norm = norm1(&|i, j| matrix[i * n + j]);
        let mut inv = vec![0.0; n * n];
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit.iter_mut().for_each(|u| *u = 0.0);
            unit[j] = 1.0;
            let col = self.solve(&unit);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        a_norm * norm1(&|i, j| inv[i * n + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of the textbook ratio, kept independent of the
    /// conjugate form used by `epsilon_cubic`.
    fn epsilon_cubic_naive(a: f64, b: f64) -> f64 {
        let s = ((a * a + a * b + b * b) / 3.0).powf(1.5);
        let t = a * a * b + b * b * a;
        (2.0 * s - t) / (2.0 * s + t)
    }

    /// Brute-force minimax over a refined grid of `(α₁, α₃)`.
    fn brute_force_cubic(a: f64, b: f64) -> (f64, f64, f64) {
        let xs: Vec<f64> = crate::poly::uniform_grid(a, b, 2001).collect();
        let err = |c1: f64, c3: f64| xs.iter().map(|&x| (c1 * x + c3 * x * x * x - 1.0).abs()).fold(0.0, f64::max);
        let (mut c1, mut c3) = (2.0, -1.0);
        let mut span = 2.0;
        for _ in 0..40 {
            let mut best = (err(c1, c3), c1, c3);
            for i in -10..=10 {
                for j in -10..=10 {
                    let (u, v) = (c1 + span * i as f64 / 10.0, c3 + span * j as f64 / 10.0);
                    let e = err(u, v);
                    if e < best.0 {
                        best = (e, u, v);
                    }
                }
            }
            c1 = best.1;
            c3 = best.2;
            span *= 0.5;
        }
        (c1, c3, err(c1, c3))
    }

    #[test]
    fn epsilon_cubic_values() {
        assert_eq!(epsilon_cubic(1.0, 1.0).unwrap(), 0.0);
        let e = epsilon_cubic(0.5, 1.0).unwrap();
        assert!((e - 0.085952).abs() < 1e-5, "{e}");
        assert!((e - epsilon_cubic_naive(0.5, 1.0)).abs() < 1e-14);
        assert_eq!(epsilon_cubic(0.25, 0.5).unwrap(), e);
    }

    #[test]
    fn epsilon_cubic_forms_agree() {
        for &(a, b) in &[(0.01, 1.0), (0.3, 2.0), (0.9, 1.1), (1.0, 5.0)] {
            let fast = epsilon_cubic(a, b).unwrap();
            assert!((fast - epsilon_cubic_naive(a, b)).abs() < 1e-13);
        }
        for h in [0.5, 0.1, 1e-3] {
            let centered = epsilon_cubic_centered(h);
            let general = epsilon_cubic(1.0 - h, 1.0 + h).unwrap();
            assert!((centered - general).abs() <= 1e-12 * general);
        }
    }

    #[test]
    fn epsilon_cubic_rejects_bad_intervals() {
        assert!(epsilon_cubic(0.0, 1.0).is_err());
        assert!(epsilon_cubic(-1.0, 1.0).is_err());
        assert!(epsilon_cubic(2.0, 1.0).is_err());
        assert!(best_cubic(0.0, 1.0).is_err());
        assert!(best_cubic(1.5, 1.0).is_err());
    }

    #[test]
    fn best_cubic_degenerate_interval_is_newton_schulz() {
        let r = best_cubic(1.0, 1.0).unwrap();
        assert_eq!(r.poly.coeffs(), &[1.5, -0.5]);
        assert_eq!(r.epsilon, 0.0);
        let r = best_cubic(2.0, 2.0).unwrap();
        assert!((r.poly.eval(2.0) - 1.0).abs() < 1e-15);
        assert!(r.poly.eval_derivative(2.0).abs() < 1e-15);
    }

    #[test]
    fn best_cubic_against_brute_force() {
        let r = best_cubic(0.5, 1.0).unwrap();
        let (c1, c3, err) = brute_force_cubic(0.5, 1.0);
        assert!((r.poly.coeffs()[0] - c1).abs() < 1e-6, "{c1}");
        assert!((r.poly.coeffs()[1] - c3).abs() < 1e-6, "{c3}");
        assert!((r.epsilon - err).abs() < 1e-9);
        assert!((r.poly.coeffs()[0] - 2.13278).abs() < 1e-5);
        assert!((r.poly.coeffs()[1] + 1.21873).abs() < 1e-5);
        assert!((r.alternance[1] - (1.75f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((r.alternance[1] - 0.763763).abs() < 1e-6);
    }

    #[test]
    fn best_cubic_equioscillates() {
        let r = best_cubic(0.2, 1.7).unwrap();
        let signs = [-1.0, 1.0, -1.0];
        for (x, s) in r.alternance.iter().zip(signs) {
            assert!((r.poly.eval(*x) - 1.0 - s * r.epsilon).abs() < 1e-14);
        }
        assert!((r.poly.max_deviation_from_one(0.2, 1.7) - r.epsilon).abs() < 1e-14);
    }

    #[test]
    fn centered_cubic_matches_general() {
        let c = best_cubic_centered(0.3).unwrap();
        let g = best_cubic(0.7, 1.3).unwrap();
        for (u, v) in c.poly.coeffs().iter().zip(g.poly.coeffs()) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(best_cubic_centered(1.0).is_err());
    }

    #[test]
    fn flat_polynomials() {
        assert_eq!(flat_unity_poly(2).unwrap().coeffs(), &[1.5, -0.5]);
        assert_eq!(flat_unity_poly(3).unwrap().coeffs(), &[1.875, -1.25, 0.375]);
        for d in 1..8 {
            let p = flat_unity_poly(d).unwrap();
            assert!((p.eval(1.0) - 1.0).abs() < 1e-12);
            if d > 1 {
                assert!(p.eval_derivative(1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alternance_system_degree_one() {
        let (p, e) = solve_alternance_system(&[0.5, 1.0], 1).unwrap();
        assert!((p.coeffs()[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn alternance_system_fixed_point_at_cubic_optimum() {
        let exact = best_cubic(0.5, 1.0).unwrap();
        let (p, e) = solve_alternance_system(&exact.alternance, 2).unwrap();
        assert!((e - exact.epsilon).abs() < 1e-12);
        for (u, v) in p.coeffs().iter().zip(exact.poly.coeffs()) {
            assert!((u - v).abs() < 1e-8);
        }
        let (p, _) = solve_alternance_system(&[0.5, 0.763763, 1.0], 2).unwrap();
        for (u, v) in p.coeffs().iter().zip(exact.poly.coeffs()) {
            assert!((u - v).abs() < 1e-5);
        }
    }

    #[test]
    fn alternance_system_rejects_bad_points() {
        assert!(matches!(solve_alternance_system(&[0.5, 0.5, 1.0], 2), Err(Error::InvalidAlternance)));
        assert!(solve_alternance_system(&[0.0, 0.5, 1.0], 2).is_err());
        assert!(solve_alternance_system(&[0.5, 1.0], 2).is_err());
    }

    #[test]
    fn alternance_system_reports_ill_conditioning() {
        let pts: Vec<f64> = (0..9).map(|i| 1.0 + 1e-6 * i as f64).collect();
        assert!(matches!(solve_alternance_system(&pts, 8), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn remez_matches_closed_form() {
        let r = remez(0.5, 1.0, 2, RemezOptions::default()).unwrap();
        let c = best_cubic(0.5, 1.0).unwrap();
        for (u, v) in r.poly.coeffs().iter().zip(c.poly.coeffs()) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!((r.epsilon - c.epsilon).abs() < 1e-12);
    }

    #[test]
    fn remez_degree_one() {
        let r = remez(0.5, 1.0, 1, RemezOptions::default()).unwrap();
        assert!((r.poly.coeffs()[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((r.epsilon - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(r.alternance, vec![0.5, 1.0]);
    }

    #[test]
    fn remez_quintic_beats_cubic() {
        let r = remez(0.1, 1.0, 3, RemezOptions::default()).unwrap();
        assert!(r.epsilon < epsilon_cubic(0.1, 1.0).unwrap());
        assert_eq!(r.alternance.len(), 4);
    }

    #[test]
    fn remez_rejects_bad_input() {
        let o = RemezOptions::default();
        assert!(remez(1.0, 1.0, 3, o).is_err());
        assert!(remez(0.0, 1.0, 3, o).is_err());
        assert!(remez(0.5, 1.0, 0, o).is_err());
        assert!(remez(0.5, 1.0, 9, o).is_err());
    }

    #[test]
    fn remez_reports_best_iterate_on_iteration_cap() {
        let o = RemezOptions { tol: 1e-12, max_iter: 1 };
        match remez(0.01, 1.0, 5, o) {
            Err(Error::NotConverged { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.alternance.len(), 6);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn remez_serializes_with_expected_keys() {
        let r = best_cubic(0.5, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["coeffs", "epsilon", "alternance", "a", "b"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: MinimaxResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn best_odd_dispatch() {
        assert_eq!(best_odd(0.5, 1.0, 2).unwrap(), best_cubic(0.5, 1.0).unwrap());
        let r = best_odd(1.0, 1.0, 3).unwrap();
        assert_eq!(r.poly.coeffs(), &[1.875, -1.25, 0.375]);
        let narrow = best_odd(1.0 - 1e-9, 1.0 + 1e-9, 4).unwrap();
        assert!(narrow.epsilon < 1e-12);
    }
}
