//! Applying odd polynomials and schedules to dense matrices.

mod matrix;
mod svd;

use serde::{Deserialize, Serialize};

pub use matrix::{parallel_enabled, set_parallel, DenseMatrix, TILE};
pub use svd::{polar_factor, reference_svd, singular_values, Svd, ORACLE_CAP};

use crate::error::{Error, Result};
use crate::poly::OddPolynomial;
use crate::schedule::{cans_schedule_to_target, DeltaDesign, Schedule};

/// Frobenius error above which an iteration is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Default stage cap when a schedule is generated on the fly.
pub const DEFAULT_MAX_STAGES: usize = 60;

/// `Σ α_{2k−1} X (XᵀX)^{k−1}` with one Gram product and Horner in `G`.
pub fn apply_odd_poly(x: &DenseMatrix, p: &OddPolynomial) -> Result<DenseMatrix> {
    if p.term_count() == 1 {
        return finite(x.scale(p.coeffs()[0]), "polynomial application");
    }
    apply_odd_poly_with_gram(x, &x.gram(), p)
}

/// As [`apply_odd_poly`], with `gram = XᵀX` supplied by the caller.
pub fn apply_odd_poly_with_gram(x: &DenseMatrix, gram: &DenseMatrix, p: &OddPolynomial) -> Result<DenseMatrix> {
    if x.rows() < x.cols() {
        return Err(Error::Dimension(format!("need rows >= cols, got {}x{}", x.rows(), x.cols())));
    }
    if gram.shape() != (x.cols(), x.cols()) {
        return Err(Error::Dimension("Gram matrix does not match X".into()));
    }
    let c = p.coeffs();
    let d = c.len();
    if d == 1 {
        return finite(x.scale(c[0]), "polynomial application");
    }
    let mut h = gram.scale(c[d - 1]).add_identity(c[d - 2]);
    for &ck in c[..d - 2].iter().rev() {
        h = gram.matmul(&h)?.add_identity(ck);
    }
    finite(x.matmul(&h)?, "polynomial application")
}

fn finite(m: DenseMatrix, what: &'static str) -> Result<DenseMatrix> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// One row of a [`ConvergenceTrace`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub matmuls: usize,
    pub fro_err: f64,
    pub spec_err: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First record whose spectral error is at most `eps`.
    pub fn first_reaching(&self, eps: f64) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.spec_err.is_some_and(|e| e <= eps))
    }

    fn push(&mut self, iter: usize, matmuls: usize, fro_err: f64, spec_err: Option<f64>) -> bool {
        self.records.push(TraceRecord { iter, matmuls, fro_err, spec_err });
        if !fro_err.is_finite() || fro_err > DIVERGENCE_THRESHOLD {
            log::warn!("divergence at iteration {iter}: ||X^T X - I||_F = {fro_err:e}");
            self.diverged = true;
        }
        !self.diverged
    }
}

/// `‖XᵀX − I‖_F` and, if requested, `max |σ_i(X) − 1|` from the oracle SVD.
pub fn orthogonality_error(x: &DenseMatrix, use_oracle: bool) -> Result<(f64, Option<f64>)> {
    let fro = gram_error(&x.gram());
    let spec = if use_oracle { Some(spectral_error(x)?) } else { None };
    Ok((fro, spec))
}

fn gram_error(gram: &DenseMatrix) -> f64 {
    gram.add_identity(-1.0).frobenius_norm()
}

fn spectral_error(x: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(x)?.iter().fold(0.0, |m, s| m.max((s - 1.0).abs())))
}

/// Applies `3x/2 − x³/2` `iters` times, stopping early on divergence.
pub fn classical_newton_schulz(
    x: &DenseMatrix,
    iters: usize,
    use_oracle: bool,
) -> Result<(DenseMatrix, ConvergenceTrace)> {
    let ns = OddPolynomial::newton_schulz();
    let mut trace = ConvergenceTrace::default();
    let mut current = x.clone();
    let mut gram = current.gram();
    let spec = if use_oracle { Some(spectral_error(&current)?) } else { None };
    if !trace.push(0, 0, gram_error(&gram), spec) {
        return Ok((current, trace));
    }
    for k in 1..=iters {
        current = match apply_odd_poly_with_gram(&current, &gram, &ns) {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => {
                trace.push(k, 2 * k, f64::INFINITY, None);
                break;
            }
            Err(e) => return Err(e),
        };
        gram = current.gram();
        let spec = if use_oracle { Some(spectral_error(&current)?) } else { None };
        if !trace.push(k, 2 * k, gram_error(&gram), spec) {
            break;
        }
    }
    Ok((current, trace))
}

/// How a matrix is scaled before iterating.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    Frobenius,
    Gelfand(u32),
    SpectralExact,
}

impl std::str::FromStr for NormalizationMethod {
    type Err = Error;

    /// `frobenius`, `spectral`, `gelfand` (k = 2) or `gelfand:K`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(Self::Frobenius),
            "spectral" | "spectral_exact" | "spectral-exact" => Ok(Self::SpectralExact),
            "gelfand" => Ok(Self::Gelfand(2)),
            _ => {
                let k = s
                    .strip_prefix("gelfand:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::Parse(format!("unknown normalization '{s}'")))?;
                Ok(Self::Gelfand(k))
            }
        }
    }
}

impl std::fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Frobenius => write!(f, "frobenius"),
            Self::Gelfand(k) => write!(f, "gelfand:{k}"),
            Self::SpectralExact => write!(f, "spectral"),
        }
    }
}

struct Gelfand {
    estimate: f64,
    /// Gram matrix of `A / prescale`.
    gram: DenseMatrix,
    prescale: f64,
    matmuls: usize,
}

fn gelfand_parts(a: &DenseMatrix, k: u32) -> Result<Gelfand> {
    if k == 0 {
        return Err(Error::InvalidArgument("gelfand k must be at least 1".into()));
    }
    let prescale = a.frobenius_norm();
    if prescale == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let gram = a.scale(1.0 / prescale).gram();
    let mut power = gram.clone();
    for _ in 1..k {
        power = power.matmul(&gram)?;
    }
    let estimate = prescale * power.frobenius_norm().powf(1.0 / (2.0 * k as f64));
    Ok(Gelfand { estimate, gram, prescale, matmuls: k as usize })
}

/// `‖(AᵀA)^k‖_F^{1/(2k)}`, an upper bound on `σ₁(A)`.
pub fn gelfand_estimate(a: &DenseMatrix, k: u32) -> Result<f64> {
    Ok(gelfand_parts(a, k)?.estimate)
}

/// Returns `(A / scale, scale)`.
pub fn normalize(a: &DenseMatrix, method: NormalizationMethod) -> Result<(DenseMatrix, f64)> {
    let n = normalize_inner(a, method)?;
    Ok((n.matrix, n.scale))
}

struct Normalized {
    matrix: DenseMatrix,
    scale: f64,
    /// Gram matrix of `matrix`, when it came for free.
    gram: Option<DenseMatrix>,
    matmuls: usize,
}

fn normalize_inner(a: &DenseMatrix, method: NormalizationMethod) -> Result<Normalized> {
    let (scale, gram, matmuls) = match method {
        NormalizationMethod::Frobenius => (a.frobenius_norm(), None, 0),
        NormalizationMethod::SpectralExact => (singular_values(a)?[0], None, 0),
        NormalizationMethod::Gelfand(k) => {
            let g = gelfand_parts(a, k)?;
            let ratio = g.prescale / g.estimate;
            (g.estimate, Some(g.gram.scale(ratio * ratio)), g.matmuls)
        }
    };
    if scale == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(Normalized { matrix: a.scale(1.0 / scale), scale, gram, matmuls })
}

/// Options for [`orthogonalize`]. At least one of `a_hint`, `schedule`,
/// `delta_preprocess` must be present.
#[derive(Clone, Debug)]
pub struct OrthoConfig {
    /// Assumed lower bound of the normalized spectrum (upper bound 1).
    pub a_hint: Option<f64>,
    pub schedule: Option<Schedule>,
    pub delta_preprocess: Option<DeltaDesign>,
    pub normalization: NormalizationMethod,
    pub target_eps: f64,
    pub use_oracle: bool,
    pub max_stages: usize,
}

impl Default for OrthoConfig {
    fn default() -> Self {
        Self {
            a_hint: None,
            schedule: None,
            delta_preprocess: None,
            normalization: NormalizationMethod::Gelfand(2),
            target_eps: 1e-6,
            use_oracle: false,
            max_stages: DEFAULT_MAX_STAGES,
        }
    }
}

/// Normalizes `a`, optionally runs a δ-orthogonalization design, then a
/// CANS schedule (given, or generated down to `target_eps`).
pub fn orthogonalize(a: &DenseMatrix, config: &OrthoConfig) -> Result<(DenseMatrix, ConvergenceTrace)> {
    if config.a_hint.is_none() && config.schedule.is_none() && config.delta_preprocess.is_none() {
        return Err(Error::UnknownInterval);
    }
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!("need rows >= cols, got {}x{}", a.rows(), a.cols())));
    }
    let norm = normalize_inner(a, config.normalization)?;
    let mut x = norm.matrix;
    let mut matmuls = norm.matmuls;
    let mut reused_gram = norm.gram.is_some();
    let mut gram = norm.gram.unwrap_or_else(|| x.gram());
    let mut trace = ConvergenceTrace::default();
    let spec = |m: &DenseMatrix| -> Result<Option<f64>> {
        if config.use_oracle {
            spectral_error(m).map(Some)
        } else {
            Ok(None)
        }
    };
    if !trace.push(0, matmuls, gram_error(&gram), spec(&x)?) {
        return Ok((x, trace));
    }

    let mut stages: Vec<OddPolynomial> = Vec::new();
    if let Some(design) = &config.delta_preprocess {
        stages.extend(design.schedule.entries().iter().map(|e| e.poly.clone()));
    }
    let main = match (&config.schedule, &config.delta_preprocess, config.a_hint) {
        (Some(s), _, _) => s.clone(),
        (None, Some(design), _) => {
            let (lo, hi) = design.final_interval();
            cans_schedule_to_target(lo, hi, 3, config.target_eps, config.max_stages)?
        }
        (None, None, Some(a0)) => cans_schedule_to_target(a0, 1.0, 3, config.target_eps, config.max_stages)?,
        (None, None, None) => unreachable!("checked above"),
    };
    for entry in main.entries() {
        stages.push(entry.poly.clone());
        if entry.epsilon <= config.target_eps {
            break;
        }
    }

    for (k, p) in stages.iter().enumerate() {
        let cost = if std::mem::take(&mut reused_gram) { p.matmul_cost() - 1 } else { p.matmul_cost() };
        x = match apply_odd_poly_with_gram(&x, &gram, p) {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => {
                trace.push(k + 1, matmuls + cost, f64::INFINITY, None);
                break;
            }
            Err(e) => return Err(e),
        };
        matmuls += cost;
        gram = x.gram();
        if !trace.push(k + 1, matmuls, gram_error(&gram), spec(&x)?) {
            break;
        }
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minimax::best_cubic;
    use crate::rng::gaussian_matrix;
    use crate::schedule::{cans_schedule, epsilon_recursion};

    fn diag(values: &[f64]) -> DenseMatrix {
        DenseMatrix::from_diagonal(values.len(), values.len(), values)
    }

    #[test]
    fn polynomial_fixes_identity() {
        let y = apply_odd_poly(&DenseMatrix::identity(5), &OddPolynomial::newton_schulz()).unwrap();
        assert_eq!(y, DenseMatrix::identity(5));
    }

    #[test]
    fn best_cubic_equalizes_endpoints() {
        let p = best_cubic(0.5, 1.0).unwrap().poly;
        let y = apply_odd_poly(&diag(&[0.5, 1.0]), &p).unwrap();
        assert!((y[(0, 0)] - 0.91405).abs() < 1e-4);
        assert!((y[(1, 1)] - 0.91405).abs() < 1e-4);
    }

    #[test]
    fn singular_values_commute_with_polynomial() {
        let p = OddPolynomial::new(vec![2.0, -1.5, 0.4]).unwrap();
        for (seed, (m, n)) in [(8, 4), (64, 32), (20, 20)].into_iter().enumerate() {
            let x = gaussian_matrix(m, n, seed as u64);
            let x = x.scale(1.0 / singular_values(&x).unwrap()[0]);
            let mut expected: Vec<f64> = singular_values(&x).unwrap().iter().map(|&s| p.eval(s).abs()).collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            let got = singular_values(&apply_odd_poly(&x, &p).unwrap()).unwrap();
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() <= 1e-10 * e.max(1.0), "{g} vs {e}");
            }
        }
    }

    #[test]
    fn apply_rejects_wide_and_overflow() {
        let p = OddPolynomial::newton_schulz();
        assert!(apply_odd_poly(&DenseMatrix::zeros(2, 3), &p).is_err());
        let huge = diag(&[1e200, 1.0]);
        assert!(matches!(apply_odd_poly(&huge, &p), Err(Error::NonFinite(_))));
    }

    #[test]
    fn newton_schulz_examples() {
        let (y, trace) = classical_newton_schulz(&DenseMatrix::identity(3), 4, true).unwrap();
        assert_eq!(y, DenseMatrix::identity(3));
        assert!(trace.records.iter().all(|r| r.fro_err == 0.0));

        let (y, trace) = classical_newton_schulz(&diag(&[0.5, 1.0]), 1, false).unwrap();
        assert_eq!(y[(0, 0)], 0.6875);
        assert_eq!(y[(1, 1)], 1.0);
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.records[1].matmuls, 2);
    }

    #[test]
    fn newton_schulz_diverges_beyond_its_basin() {
        let (_, trace) = classical_newton_schulz(&diag(&[3.0, 0.5]), 20, false).unwrap();
        assert!(trace.diverged);
        assert!(trace.records.len() <= 21);
        // p(2) = −1 lands on a fixed point of |p|, so σ₁ = 2 does not diverge.
        let (_, trace) = classical_newton_schulz(&diag(&[2.0, 0.5]), 20, false).unwrap();
        assert!(!trace.diverged);
    }

    #[test]
    fn gelfand_examples() {
        let est = gelfand_estimate(&DenseMatrix::identity(16), 2).unwrap();
        assert!((est - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(gelfand_estimate(&DenseMatrix::zeros(2, 2), 1), Err(Error::ZeroMatrix)));
        assert!(gelfand_estimate(&DenseMatrix::identity(2), 0).is_err());
        let big = diag(&[1e300, 1e299]);
        let est = gelfand_estimate(&big, 3).unwrap();
        assert!(est >= 1e300 && est.is_finite());
    }

    #[test]
    fn normalization_examples() {
        let q = DenseMatrix::identity(9);
        assert_eq!(normalize(&q, NormalizationMethod::Frobenius).unwrap().1, 3.0);
        assert_eq!(normalize(&diag(&[3.0, 1.0]), NormalizationMethod::SpectralExact).unwrap().1, 3.0);
        let a = gaussian_matrix(30, 20, 4);
        let (x, scale) = normalize(&a, NormalizationMethod::Gelfand(2)).unwrap();
        let g = a.gram();
        let expected = g.matmul(&g).unwrap().frobenius_norm().powf(0.25);
        assert!((scale - expected).abs() < 1e-12 * expected);
        assert!(singular_values(&x).unwrap()[0] <= 1.0);
        assert!(matches!(normalize(&DenseMatrix::zeros(3, 3), NormalizationMethod::Frobenius), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn normalization_parsing() {
        for (s, m) in [
            ("frobenius", NormalizationMethod::Frobenius),
            ("spectral", NormalizationMethod::SpectralExact),
            ("gelfand", NormalizationMethod::Gelfand(2)),
            ("gelfand:3", NormalizationMethod::Gelfand(3)),
        ] {
            assert_eq!(s.parse::<NormalizationMethod>().unwrap(), m);
        }
        assert!("gelfand:0".parse::<NormalizationMethod>().is_err());
        assert!("qr".parse::<NormalizationMethod>().is_err());
    }

    #[test]
    fn orthogonality_error_examples() {
        let (fro, spec) = orthogonality_error(&DenseMatrix::identity(4), true).unwrap();
        assert_eq!((fro, spec), (0.0, Some(0.0)));
        let (fro, spec) = orthogonality_error(&diag(&[0.9, 1.1]), true).unwrap();
        assert!((spec.unwrap() - 0.1).abs() < 1e-15);
        assert!((fro - 0.28320).abs() < 1e-5);
    }

    #[test]
    fn orthogonalize_requires_interval_knowledge() {
        let r = orthogonalize(&DenseMatrix::identity(2), &OrthoConfig::default());
        assert!(matches!(r, Err(Error::UnknownInterval)));
    }

    #[test]
    fn orthonormal_input_is_preserved() {
        let q = polar_factor(&gaussian_matrix(6, 4, 1)).unwrap();
        let config = OrthoConfig {
            schedule: Some(cans_schedule(1.0, 1.0, &[3, 3]).unwrap()),
            normalization: NormalizationMethod::SpectralExact,
            ..OrthoConfig::default()
        };
        let (out, _) = orthogonalize(&q, &config).unwrap();
        assert!(out.sub(&q).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn diagonal_case_follows_scalar_recursion() {
        let schedule = cans_schedule(0.5, 1.0, &[3, 3, 3]).unwrap();
        let config = OrthoConfig {
            schedule: Some(schedule),
            normalization: NormalizationMethod::SpectralExact,
            target_eps: 0.0,
            use_oracle: true,
            ..OrthoConfig::default()
        };
        let (q, trace) = orthogonalize(&diag(&[0.5, 1.0]), &config).unwrap();
        let eps = epsilon_recursion(0.5, 1.0, 3).unwrap();
        let bound = 2.0 * eps[2] + eps[2] * eps[2];
        let gram_spectral = q.gram().add_identity(-1.0).max_abs();
        assert!(gram_spectral <= bound * (1.0 + 1e-9));
        // Both singular values sit at 1 − ε₃, so the Frobenius norm is √2 times larger.
        let (fro, _) = orthogonality_error(&q, false).unwrap();
        assert!(fro <= 2f64.sqrt() * bound * (1.0 + 1e-9));
        for (record, e) in trace.records[1..].iter().zip(&eps) {
            assert!((record.spec_err.unwrap() - e).abs() < 1e-12, "{record:?} vs {e}");
        }
        assert_eq!(trace.records.last().unwrap().matmuls, 6);
    }

    #[test]
    fn gelfand_gram_reuse_saves_a_product() {
        let a = gaussian_matrix(12, 6, 2);
        let config = OrthoConfig { a_hint: Some(1e-3), target_eps: 1e-8, ..OrthoConfig::default() };
        let (_, trace) = orthogonalize(&a, &config).unwrap();
        assert_eq!(trace.records[0].matmuls, 2);
        assert_eq!(trace.records[1].matmuls, 3);
        assert_eq!(trace.records[2].matmuls, 5);
        assert!(trace.records.windows(2).all(|w| w[0].matmuls <= w[1].matmuls));
    }

    #[test]
    fn orthogonalize_meets_target() {
        let a = gaussian_matrix(40, 20, 3);
        let s = singular_values(&a).unwrap();
        let config = OrthoConfig {
            a_hint: Some(s[19] / s[0]),
            normalization: NormalizationMethod::SpectralExact,
            target_eps: 1e-9,
            use_oracle: true,
            ..OrthoConfig::default()
        };
        let (q, trace) = orthogonalize(&a, &config).unwrap();
        assert!(trace.last().unwrap().spec_err.unwrap() <= 1e-9);
        let (fro, _) = orthogonality_error(&q, false).unwrap();
        assert!(fro <= 1e-9 * (2.0 + 1e-9) * (20f64).sqrt());
    }
}
