//! Odd polynomials `α₁x + α₃x³ + … + α_{2d−1}x^{2d−1}` and their compositions.
//!
//! Only odd powers are stored, so oddness holds by construction. Evaluation is
//! a Horner scheme in `x²` followed by a single multiplication by `x`, which
//! makes `p(−x) = −p(x)` hold bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples used when scanning `p′` for sign changes.
pub const CRITICAL_SCAN_SAMPLES: usize = 4096;

/// An odd polynomial stored by its odd-power coefficients `[α₁, α₃, …]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial", into = "RawPolynomial")]
pub struct OddPolynomial {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPolynomial {
    coeffs: Vec<f64>,
}

impl TryFrom<RawPolynomial> for OddPolynomial {
    type Error = Error;

    fn try_from(raw: RawPolynomial) -> Result<Self> {
        OddPolynomial::new(raw.coeffs)
    }
}

impl From<OddPolynomial> for RawPolynomial {
    fn from(p: OddPolynomial) -> Self {
        RawPolynomial { coeffs: p.coeffs }
    }
}

impl OddPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidPolynomial("no coefficients".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial(format!("non-finite coefficient {c}")));
        }
        Ok(Self { coeffs })
    }

    /// The classical Newton-Schulz polynomial `3x/2 − x³/2`.
    pub fn newton_schulz() -> Self {
        Self { coeffs: vec![1.5, -0.5] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of stored terms `d`; the degree is `2d − 1`.
    pub fn term_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        2 * self.coeffs.len() - 1
    }

    /// Matrix multiplications needed to apply this polynomial to a matrix
    /// through its Gram matrix: one Gram product plus `d − 1` further products.
    pub fn matmul_cost(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x2 + c;
        }
        acc * x
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * x2 + (2 * k + 1) as f64 * c;
        }
        acc
    }

    /// `p′(0) = α₁`.
    pub fn derivative_at_zero(&self) -> f64 {
        self.coeffs[0]
    }

    /// Returns `x ↦ p(t·x)`, i.e. `α_{2k−1} ← α_{2k−1}·t^{2k−1}`.
    pub fn rescale_argument(&self, t: f64) -> Self {
        let t2 = t * t;
        let mut power = t;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let scaled = c * power;
                power *= t2;
                scaled
            })
            .collect();
        Self { coeffs }
    }

    /// Interior zeros of `p′` on `(a, b)`, located by a uniform sign-change
    /// scan and refined by bisection down to `1e−14·b`.
    pub fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        sign_change_roots(|x| self.eval_derivative(x), a, b, CRITICAL_SCAN_SAMPLES)
    }

    /// Minimum and maximum of `p` on `[a, b]`, taken over a uniform grid of
    /// `grid_size` points together with every interior critical point.
    pub fn range_on_interval(&self, a: f64, b: f64, grid_size: usize) -> Result<(f64, f64)> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || a >= b {
            return Err(Error::InvalidInterval { a, b });
        }
        if grid_size < 2 {
            return Err(Error::InvalidArgument("grid_size must be at least 2".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |y: f64| {
            lo = lo.min(y);
            hi = hi.max(y);
        };
        for x in uniform_grid(a, b, grid_size) {
            visit(self.eval(x));
        }
        for x in self.critical_points(a, b) {
            visit(self.eval(x));
        }
        Ok((lo, hi))
    }

    /// Largest deviation `max |p(x) − 1|` on `[a, b]`, evaluated at the
    /// endpoints and at the interior critical points (where the extrema lie).
    pub fn max_deviation_from_one(&self, a: f64, b: f64) -> f64 {
        let mut worst = (self.eval(a) - 1.0).abs().max((self.eval(b) - 1.0).abs());
        if a < b {
            for x in self.critical_points(a, b) {
                worst = worst.max((self.eval(x) - 1.0).abs());
            }
        }
        worst
    }
}

/// Polynomials applied innermost first: `φ = p_k ∘ … ∘ p_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<OddPolynomial>", into = "Vec<OddPolynomial>")]
pub struct Composition {
    polys: Vec<OddPolynomial>,
}

impl TryFrom<Vec<OddPolynomial>> for Composition {
    type Error = Error;

    fn try_from(polys: Vec<OddPolynomial>) -> Result<Self> {
        Composition::new(polys)
    }
}

impl From<Composition> for Vec<OddPolynomial> {
    fn from(c: Composition) -> Self {
        c.polys
    }
}

impl Composition {
    pub fn new(polys: Vec<OddPolynomial>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidPolynomial("empty composition".into()));
        }
        Ok(Self { polys })
    }

    /// Composition of `count` copies of `p`.
    pub fn repeated(p: OddPolynomial, count: usize) -> Result<Self> {
        Self::new(vec![p; count])
    }

    pub fn from_coefficients(lists: &[&[f64]]) -> Result<Self> {
        let polys = lists.iter().map(|c| OddPolynomial::new(c.to_vec())).collect::<Result<Vec<_>>>()?;
        Self::new(polys)
    }

    pub fn polys(&self) -> &[OddPolynomial] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.polys.iter().fold(x, |y, p| p.eval(y))
    }

    /// Chain rule at the origin: every stage maps 0 to 0, so `φ′(0) = Π α₁`.
    pub fn derivative_at_zero(&self) -> f64 {
        self.polys.iter().map(OddPolynomial::derivative_at_zero).product()
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        let mut y = x;
        let mut slope = 1.0;
        for p in &self.polys {
            slope *= p.eval_derivative(y);
            y = p.eval(y);
        }
        slope
    }

    pub fn matmul_cost(&self) -> usize {
        self.polys.iter().map(OddPolynomial::matmul_cost).sum()
    }
}

/// `count` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, count: usize) -> impl Iterator<Item = f64> {
    let last = count.saturating_sub(1).max(1);
    let step = (b - a) / last as f64;
    (0..count).map(move |i| if i == last { b } else { a + step * i as f64 })
}

/// Roots of `f` on `(a, b)` detected as sign changes on a uniform scan and
/// refined by bisection until the bracket is below `1e−14·max(|b|, 1e−300)`.
pub fn sign_change_roots<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let samples = samples.max(2);
    let width = 1e-14 * b.abs().max(1e-300);
    let mut prev_x = a;
    let mut prev_f = f(a);
    for x in uniform_grid(a, b, samples + 1).skip(1) {
        let fx = f(x);
        if prev_f == 0.0 && prev_x > a {
            roots.push(prev_x);
        } else if prev_f * fx < 0.0 {
            roots.push(bisect_sign_change(&f, prev_x, x, prev_f, width));
        }
        prev_x = x;
        prev_f = fx;
    }
    roots
}

fn bisect_sign_change<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64, width: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ns() -> OddPolynomial {
        OddPolynomial::newton_schulz()
    }

    #[test]
    fn newton_schulz_fixed_point() {
        assert_eq!(ns().eval(1.0), 1.0);
        assert_eq!(ns().eval(-1.0), -1.0);
        assert_eq!(ns().eval_derivative(1.0), 0.0);
        assert_eq!(ns().eval_derivative(0.0), 1.5);
    }

    #[test]
    fn cubic_optimum_value_at_left_endpoint() {
        let p = OddPolynomial::new(vec![2.13278, -1.21873]).unwrap();
        assert!((p.eval(0.5) - 0.91405).abs() < 1e-4);
    }

    #[test]
    fn derivative_at_zero_is_leading_coefficient() {
        assert_eq!(ns().derivative_at_zero(), 1.5);
        let muon = OddPolynomial::new(vec![3.4445, -4.7750, 2.0315]).unwrap();
        assert_eq!(muon.derivative_at_zero(), 3.4445);
        let p = OddPolynomial::new(vec![5.181702879894027, -5.177039351076183]).unwrap();
        assert_eq!(p.derivative_at_zero(), 5.181702879894027);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(OddPolynomial::new(vec![]).is_err());
        assert!(OddPolynomial::new(vec![1.0, f64::NAN]).is_err());
        assert!(OddPolynomial::new(vec![f64::INFINITY]).is_err());
        assert!(Composition::new(vec![]).is_err());
    }

    #[test]
    fn composition_fixed_point_and_order() {
        for k in 1..6 {
            let c = Composition::repeated(ns(), k).unwrap();
            assert_eq!(c.eval(1.0), 1.0);
        }
        let p = OddPolynomial::new(vec![2.0, -0.3]).unwrap();
        let q = OddPolynomial::new(vec![1.1, 0.2, -0.05]).unwrap();
        let c = Composition::new(vec![p.clone(), q.clone()]).unwrap();
        for x in [0.1, 0.7, 1.3] {
            assert_eq!(c.eval(x), q.eval(p.eval(x)));
        }
    }

    #[test]
    fn composition_derivative_products() {
        let muon = OddPolynomial::new(vec![3.4445, -4.7750, 2.0315]).unwrap();
        let c = Composition::repeated(muon, 5).unwrap();
        let expected = 3.4445f64.powi(5);
        assert!((c.derivative_at_zero() - expected).abs() < 1e-9);
        assert!((c.derivative_at_zero() - 484.8).abs() < 0.1);
        assert_eq!(c.matmul_cost(), 15);
        let single = Composition::new(vec![ns()]).unwrap();
        assert_eq!(single.derivative_at_zero(), 1.5);
    }

    #[test]
    fn range_of_newton_schulz() {
        let (lo, hi) = ns().range_on_interval(0.2, 1.4, 101).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - ns().eval(0.2)).abs() < 1e-15);
    }

    #[test]
    fn range_of_increasing_polynomial() {
        let p = ns();
        let (lo, hi) = p.range_on_interval(0.0, 0.8, 50).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, p.eval(0.8));
    }

    #[test]
    fn range_rejects_bad_interval() {
        assert!(ns().range_on_interval(1.0, 0.5, 10).is_err());
        assert!(ns().range_on_interval(-0.1, 0.5, 10).is_err());
        assert!(ns().range_on_interval(0.1, 0.5, 1).is_err());
    }

    #[test]
    fn json_shape() {
        let p = OddPolynomial::new(vec![1.5, -0.5]).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"coeffs":[1.5,-0.5]}"#);
        let c: Composition = serde_json::from_str(r#"[{"coeffs":[1.5,-0.5]},{"coeffs":[2.0]}]"#).unwrap();
        assert_eq!(c.len(), 2);
        assert!(serde_json::from_str::<OddPolynomial>(r#"{"coeffs":[]}"#).is_err());
        assert!(serde_json::from_str::<Composition>("[]").is_err());
    }

    fn poly_strategy() -> impl Strategy<Value = OddPolynomial> {
        prop::collection::vec(-5.0f64..5.0, 1..8).prop_map(|c| OddPolynomial::new(c).unwrap())
    }

    proptest! {
        #[test]
        fn oddness_is_bitwise(p in poly_strategy(), x in -3.0f64..3.0) {
            prop_assert_eq!(p.eval(-x).to_bits(), (-p.eval(x)).to_bits());
        }

        #[test]
        fn derivative_matches_central_difference(p in poly_strategy(), x in 0.0f64..2.0) {
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            let exact = p.eval_derivative(x);
            let scale: f64 = p.coeffs().iter().enumerate()
                .map(|(k, c)| (2 * k + 1) as f64 * c.abs() * 2f64.powi(2 * k as i32))
                .sum();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(scale));
        }

        #[test]
        fn json_round_trip(p in poly_strategy()) {
            let text = serde_json::to_string(&p).unwrap();
            let back: OddPolynomial = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn composition_slope_at_zero(polys in prop::collection::vec(
            prop::collection::vec(0.5f64..3.0, 1..4), 1..4)) {
            let c = Composition::new(polys.into_iter().map(|v| OddPolynomial::new(v).unwrap()).collect()).unwrap();
            let slope = c.derivative_at_zero();
            prop_assume!(slope < 1e6);
            let h = 1e-8;
            let fd = (c.eval(h) - c.eval(-h)) / (2.0 * h);
            prop_assert!((fd - slope).abs() <= 1e-4 * slope);
        }
    }
}
