//! Convergence benchmark on a seeded Gaussian matrix: classical Newton-Schulz
//! against CANS chains under exact, over- and underestimated spectrum bounds.

use std::fmt;
use std::str::FromStr;

use crate::engine::{
    apply_odd_poly_with_gram, normalize, reference_svd, singular_values, ConvergenceTrace, DenseMatrix,
    NormalizationMethod, TraceRecord, ORACLE_CAP,
};
use crate::error::{Error, Result};
use crate::poly::OddPolynomial;
use crate::rng::gaussian_matrix;
use crate::schedule::{delta_design, StageChain, DELTA_DESIGN_TOL};

pub const MAX_BENCH_SIZE: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMethod {
    NewtonSchulz,
    Cans3,
    Cans5,
    DeltaPreprocess,
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ns" => Ok(Self::NewtonSchulz),
            "cans3" => Ok(Self::Cans3),
            "cans5" => Ok(Self::Cans5),
            "delta-preproc" => Ok(Self::DeltaPreprocess),
            _ => Err(Error::Parse(format!("unknown method '{s}' (expected ns, cans3, cans5, delta-preproc)"))),
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NewtonSchulz => "ns",
            Self::Cans3 => "cans3",
            Self::Cans5 => "cans5",
            Self::DeltaPreprocess => "delta-preproc",
        })
    }
}

/// Where the smallest normalized singular value is assumed to be.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundsMode {
    /// Normalize by the true `σ₁` and use the true `σ_n/σ₁`.
    Exact,
    Overestimate(f64),
    Underestimate(f64),
}

impl FromStr for BoundsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Self::Exact);
        }
        let (kind, value) = s.split_once(':').ok_or_else(|| {
            Error::Parse(format!("bounds '{s}': expected exact, overestimate:A0 or underestimate:A0"))
        })?;
        let a0: f64 = value.parse().map_err(|e| Error::Parse(format!("bounds value '{value}': {e}")))?;
        if !(a0 > 0.0 && a0 <= 1.0) {
            return Err(Error::Parse(format!("bounds value {a0} outside (0, 1]")));
        }
        match kind {
            "overestimate" => Ok(Self::Overestimate(a0)),
            "underestimate" => Ok(Self::Underestimate(a0)),
            _ => Err(Error::Parse(format!("unknown bounds mode '{kind}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub n: usize,
    pub seed: u64,
    pub methods: Vec<BenchMethod>,
    pub target_eps: f64,
    /// Used whenever the bounds are not exact.
    pub normalization: NormalizationMethod,
    pub bounds: BoundsMode,
    pub max_iters: usize,
    /// Measure `max |σ_i − 1|` with the oracle SVD and stop on it.
    pub spectral: bool,
    pub delta: f64,
    pub delta_degrees: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 300,
            seed: 42,
            methods: vec![BenchMethod::NewtonSchulz, BenchMethod::Cans3],
            target_eps: 1e-6,
            normalization: NormalizationMethod::Gelfand(2),
            bounds: BoundsMode::Exact,
            max_iters: 100,
            spectral: true,
            delta: 0.3,
            delta_degrees: vec![5; 4],
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_BENCH_SIZE {
            return Err(Error::InvalidArgument(format!("n = {} outside 1..={MAX_BENCH_SIZE}", self.n)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("at least one method is required".into()));
        }
        if !(self.target_eps > 0.0 && self.target_eps < 1.0) {
            return Err(Error::InvalidArgument(format!("target {} outside (0, 1)", self.target_eps)));
        }
        if self.spectral && self.n > ORACLE_CAP {
            return Err(Error::OracleCap { cols: self.n, cap: ORACLE_CAP });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BenchRun {
    pub method: BenchMethod,
    pub trace: ConvergenceTrace,
}

impl BenchRun {
    /// Iteration at which the stopping criterion was first met.
    pub fn iterations_to_target(&self, target: f64) -> Option<usize> {
        reached(&self.trace, target).map(|r| r.iter)
    }

    pub fn matmuls_to_target(&self, target: f64) -> Option<usize> {
        reached(&self.trace, target).map(|r| r.matmuls)
    }
}

fn reached(trace: &ConvergenceTrace, target: f64) -> Option<&TraceRecord> {
    trace.records.iter().find(|r| match r.spec_err {
        Some(e) => e <= target,
        None => r.fro_err <= target,
    })
}

/// Spectral error of iterates `X_k = U φ_k(S) Vᵀ`: right-multiplying by the
/// initial `V` leaves nearly orthogonal columns, which one-sided Jacobi
/// finishes in a sweep or two.
pub struct SpectralProbe {
    v: DenseMatrix,
}

impl SpectralProbe {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Ok(Self { v: reference_svd(a)?.v })
    }

    pub fn error(&self, x: &DenseMatrix) -> Result<f64> {
        let s = singular_values(&x.matmul(&self.v)?)?;
        Ok(s.iter().fold(0.0, |m, s| m.max((s - 1.0).abs())))
    }
}

/// Shared inputs of one benchmark matrix.
pub struct BenchProblem {
    pub matrix: DenseMatrix,
    pub sigma_max: f64,
    pub sigma_min: f64,
    probe: Option<SpectralProbe>,
}

impl BenchProblem {
    pub fn new(matrix: DenseMatrix, spectral: bool) -> Result<Self> {
        let s = singular_values(&matrix)?;
        let probe = if spectral { Some(SpectralProbe::new(&matrix)?) } else { None };
        Ok(Self { sigma_max: s[0], sigma_min: s[s.len() - 1], matrix, probe })
    }
}

/// Runs one method and returns its trace. `normalization` applies unless the
/// bounds are exact.
pub fn run_method(
    problem: &BenchProblem,
    method: BenchMethod,
    bounds: BoundsMode,
    normalization: NormalizationMethod,
    config: &BenchConfig,
) -> Result<ConvergenceTrace> {
    let (x0, norm_matmuls, reuse_gram, a_lo) = match bounds {
        BoundsMode::Exact => {
            let x = problem.matrix.scale(1.0 / problem.sigma_max);
            (x, 0, false, problem.sigma_min / problem.sigma_max)
        }
        BoundsMode::Overestimate(a0) | BoundsMode::Underestimate(a0) => {
            let (x, _) = normalize(&problem.matrix, normalization)?;
            let (cost, reuse) = match normalization {
                NormalizationMethod::Gelfand(k) => (k as usize, true),
                _ => (0, false),
            };
            (x, cost, reuse, a0)
        }
    };

    let mut prefix: Vec<OddPolynomial> = Vec::new();
    let (mut chain, terms) = match method {
        BenchMethod::NewtonSchulz => (None, 2),
        BenchMethod::Cans3 => (Some(StageChain::new(a_lo, 1.0)?), 2),
        BenchMethod::Cans5 => (Some(StageChain::new(a_lo, 1.0)?), 3),
        BenchMethod::DeltaPreprocess => {
            let design = delta_design(config.delta, &config.delta_degrees, Some(1.0), DELTA_DESIGN_TOL)?;
            prefix.extend(design.schedule.entries().iter().map(|e| e.poly.clone()));
            let (lo, hi) = design.final_interval();
            (Some(StageChain::new(lo, hi)?), 2)
        }
    };
    prefix.reverse();
    let mut next_poly = move || -> Result<OddPolynomial> {
        if let Some(p) = prefix.pop() {
            return Ok(p);
        }
        match chain.as_mut() {
            Some(c) => Ok(c.next_stage(terms)?.poly),
            None => Ok(OddPolynomial::newton_schulz()),
        }
    };

    let spec = |m: &DenseMatrix| -> Result<Option<f64>> { problem.probe.as_ref().map(|p| p.error(m)).transpose() };
    let fro = |g: &DenseMatrix| g.add_identity(-1.0).frobenius_norm();

    let mut trace = ConvergenceTrace::default();
    let mut x = x0;
    let mut gram = x.gram();
    let mut matmuls = norm_matmuls;
    let mut reuse = reuse_gram;
    trace.records.push(TraceRecord { iter: 0, matmuls, fro_err: fro(&gram), spec_err: spec(&x)? });
    for iter in 1..=config.max_iters {
        if reached(&trace, config.target_eps).is_some() {
            break;
        }
        let p = next_poly()?;
        let cost = p.matmul_cost() - usize::from(std::mem::take(&mut reuse));
        matmuls += cost;
        x = match apply_odd_poly_with_gram(&x, &gram, &p) {
            Ok(m) => m,
            Err(Error::NonFinite(_)) => {
                trace.records.push(TraceRecord { iter, matmuls, fro_err: f64::INFINITY, spec_err: None });
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        gram = x.gram();
        let fro_err = fro(&gram);
        trace.records.push(TraceRecord { iter, matmuls, fro_err, spec_err: spec(&x)? });
        if fro_err > crate::engine::DIVERGENCE_THRESHOLD {
            trace.diverged = true;
            break;
        }
    }
    Ok(trace)
}

/// Generates the seeded matrix and runs every configured method.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRun>> {
    config.validate()?;
    let problem = BenchProblem::new(gaussian_matrix(config.n, config.n, config.seed), config.spectral)?;
    log::info!(
        "bench n={} seed={}: sigma_max={:e} sigma_min={:e}",
        config.n,
        config.seed,
        problem.sigma_max,
        problem.sigma_min
    );
    config
        .methods
        .iter()
        .map(|&method| {
            let trace = run_method(&problem, method, config.bounds, config.normalization, config)?;
            Ok(BenchRun { method, trace })
        })
        .collect()
}

/// One CSV block per method, each introduced by a `# method=…` line.
pub fn bench_csv(runs: &[BenchRun]) -> String {
    let blocks: Vec<String> =
        runs.iter().map(|r| format!("# method={}\n{}", r.method, crate::io::trace_csv(&r.trace))).collect();
    blocks.join("\n")
}
