//! Stiefel manifold `St(n, p) = {X : XᵀX = I}`: tangent projection, an
//! approximate polar retraction built from optimal cubics, and Riemannian
//! SGD/Adam.

use crate::engine::{apply_odd_poly, polar_factor, DenseMatrix};
use crate::error::{Error, Result};
use crate::io::OptimizerRecord;
use crate::minimax::{best_cubic, best_cubic_centered};
use crate::poly::OddPolynomial;
use crate::rng::gaussian_matrix;

/// Allowed `‖XᵀX − I‖_F` for a point on the manifold.
pub const ORTHONORMALITY_TOL: f64 = 1e-6;

/// Below `1 + DEGENERATE_SIGMA` the retraction interval is treated as `[1, 1]`.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// Corrective Newton-Schulz steps allowed after one optimizer step.
const MAX_DRIFT_CORRECTIONS: usize = 5;

fn orth_residual(x: &DenseMatrix) -> f64 {
    x.gram().add_identity(-1.0).frobenius_norm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    x: DenseMatrix,
}

impl StiefelPoint {
    /// Checks `n ≥ p` and `‖XᵀX − I‖_F ≤ 1e-6`.
    pub fn new(x: DenseMatrix) -> Result<Self> {
        if x.rows() < x.cols() {
            return Err(Error::Dimension(format!("Stiefel point needs n >= p, got {}x{}", x.rows(), x.cols())));
        }
        let r = orth_residual(&x);
        if r > ORTHONORMALITY_TOL {
            return Err(Error::InvalidArgument(format!("columns are not orthonormal: ||X^T X - I||_F = {r:e}")));
        }
        Ok(Self { x })
    }

    /// Orthonormal polar factor of an `n × p` Gaussian matrix.
    pub fn random(n: usize, p: usize, seed: u64) -> Result<Self> {
        Self::new(polar_factor(&gaussian_matrix(n, p, seed))?)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.x
    }

    pub fn residual(&self) -> f64 {
        orth_residual(&self.x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub z: DenseMatrix,
    pub base: StiefelPoint,
}

impl TangentVector {
    /// `‖ZᵀX + XᵀZ‖_F`.
    pub fn tangency_defect(&self) -> f64 {
        let s = self.z.transpose().matmul(self.base.matrix()).expect("shapes agree");
        s.add(&s.transpose()).expect("square").frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector { z: self.z.scale(s), base: self.base.clone() }
    }
}

fn check_shape(x: &StiefelPoint, z: &DenseMatrix) -> Result<()> {
    if x.matrix().shape() != z.shape() {
        return Err(Error::Dimension(format!(
            "point is {}x{}, direction is {}x{}",
            x.matrix().rows(),
            x.matrix().cols(),
            z.rows(),
            z.cols()
        )));
    }
    Ok(())
}

/// `π_X(Z) = Z − ½ X (ZᵀX + XᵀZ)`.
pub fn project_tangent(x: &StiefelPoint, z: &DenseMatrix) -> Result<TangentVector> {
    check_shape(x, z)?;
    let xm = x.matrix();
    let s = xm.transpose().matmul(z)?;
    let sym = s.add(&s.transpose())?;
    let z = z.sub(&xm.matmul(&sym)?.scale(0.5))?;
    Ok(TangentVector { z, base: x.clone() })
}

/// Skew-symmetric `W = Ŵ − Ŵᵀ`, `Ŵ = ZXᵀ − ½ X (XᵀZXᵀ)`, with `WX = π_X(Z)`.
pub fn w_matrix(x: &StiefelPoint, z: &DenseMatrix) -> Result<DenseMatrix> {
    check_shape(x, z)?;
    let xm = x.matrix();
    let xt = xm.transpose();
    let zxt = z.matmul(&xt)?;
    let xtzxt = xt.matmul(&zxt)?;
    let w_hat = zxt.sub(&xm.matmul(&xtzxt)?.scale(0.5))?;
    w_hat.sub(&w_hat.transpose())
}

/// `√(‖A‖_F² − (p − 1))`, an upper bound on `σ₁(A)` when `σ_p(A) ≥ 1`.
pub fn sigma1_bound(a: &DenseMatrix, p: usize) -> Result<f64> {
    let f = a.frobenius_norm();
    let radicand = f * f - (p as f64 - 1.0);
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

/// Outcome of [`polar_retract_report`].
#[derive(Clone, Debug)]
pub struct Retraction {
    pub point: StiefelPoint,
    pub sigma1_bound: f64,
    /// Certified half-width: singular values of the result lie in `[1−ε, 1+ε]`.
    pub epsilon: f64,
}

/// Approximate polar retraction with `s` optimal cubic rounds.
pub fn polar_retract(x: &StiefelPoint, v: &TangentVector, s: usize) -> Result<StiefelPoint> {
    Ok(polar_retract_report(x, v, s)?.point)
}

pub fn polar_retract_report(x: &StiefelPoint, v: &TangentVector, s: usize) -> Result<Retraction> {
    check_shape(x, &v.z)?;
    if s == 0 {
        return Err(Error::InvalidArgument("retraction needs at least one round".into()));
    }
    if v.z.max_abs() == 0.0 {
        return Ok(Retraction { point: x.clone(), sigma1_bound: 1.0, epsilon: 0.0 });
    }
    let p = x.matrix().cols();
    let mut a = x.matrix().add(&v.z)?;
    let sigma = sigma1_bound(&a, p)?;
    let mut epsilon = 0.0;
    if sigma < 1.0 + DEGENERATE_SIGMA {
        for _ in 0..s {
            a = apply_odd_poly(&a, &OddPolynomial::newton_schulz())?;
        }
    } else {
        a = a.scale(1.0 / sigma);
        let mut stage = best_cubic(1.0 / sigma, 1.0)?;
        for round in 0..s {
            if round > 0 {
                stage = best_cubic_centered(epsilon)?;
            }
            a = apply_odd_poly(&a, &stage.poly)?;
            epsilon = stage.epsilon;
        }
    }
    Ok(Retraction { point: StiefelPoint { x: a }, sigma1_bound: sigma, epsilon })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerParams {
    pub lr: f64,
    /// SGD momentum.
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Retraction rounds.
    pub rounds: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self { lr: 0.01, beta: 0.9, beta1: 0.9, beta2: 0.999, eps: 1e-8, rounds: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub x: StiefelPoint,
    pub m: DenseMatrix,
    pub v: f64,
    pub step_count: usize,
    pub params: OptimizerParams,
    /// Extra Newton-Schulz iterations spent keeping the iterate orthonormal.
    pub drift_corrections: usize,
}

impl OptimizerState {
    pub fn new(x: StiefelPoint, params: OptimizerParams) -> Self {
        let (n, p) = x.matrix().shape();
        Self { x, m: DenseMatrix::zeros(n, p), v: 0.0, step_count: 0, params, drift_corrections: 0 }
    }

    /// Moves to `next`, applying Newton-Schulz steps while the orthonormality
    /// residual exceeds [`ORTHONORMALITY_TOL`].
    fn advance(&mut self, mut next: DenseMatrix) -> Result<()> {
        for _ in 0..MAX_DRIFT_CORRECTIONS {
            let r = orth_residual(&next);
            if r <= ORTHONORMALITY_TOL {
                break;
            }
            log::info!("step {}: residual {r:e} above tolerance, applying one Newton-Schulz step", self.step_count);
            next = apply_odd_poly(&next, &OddPolynomial::newton_schulz())?;
            self.drift_corrections += 1;
        }
        self.x = StiefelPoint::new(next)?;
        Ok(())
    }
}

fn check_gradient(state: &OptimizerState, g: &DenseMatrix) -> Result<()> {
    check_shape(&state.x, g)?;
    if !g.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(())
}

/// SGD with momentum: `M ← βM − G`, `M ← π_X(M)`, `X ← Retr_X(αM)`.
pub fn rsgd_step(state: &OptimizerState, g: &DenseMatrix) -> Result<OptimizerState> {
    check_gradient(state, g)?;
    let p = &state.params;
    let m = project_tangent(&state.x, &state.m.scale(p.beta).sub(g)?)?;
    let next = polar_retract(&state.x, &m.scale(p.lr), p.rounds)?;
    let mut out = OptimizerState { m: m.z, step_count: state.step_count + 1, ..state.clone() };
    out.advance(next.into_matrix())?;
    Ok(out)
}

/// Adam with a scalar second moment. The momentum stores the negative
/// gradient, as in [`rsgd_step`], so the step is `+α M̂ / √(v̂ + ε)`.
pub fn radam_step(state: &OptimizerState, g: &DenseMatrix) -> Result<OptimizerState> {
    check_gradient(state, g)?;
    let p = &state.params;
    let k = state.step_count + 1;
    let g_norm = g.frobenius_norm();
    let v = p.beta2 * state.v + (1.0 - p.beta2) * g_norm * g_norm;
    let v_hat = v / (1.0 - p.beta2.powi(k as i32));
    let bias1 = 1.0 - p.beta1.powi(k as i32);
    let m = state.m.scale(p.beta1).add_scaled(g, -(1.0 - p.beta1))?;
    let m_hat = project_tangent(&state.x, &m.scale(1.0 / bias1))?;
    let step = m_hat.scale(p.lr / (v_hat + p.eps).sqrt());
    let next = polar_retract(&state.x, &step, p.rounds)?;
    let mut out = OptimizerState { m: m_hat.z.scale(bias1), v, step_count: k, ..state.clone() };
    out.advance(next.into_matrix())?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Minimizes `f(X) = −tr(XᵀBX)` for symmetric `B`, recording one row per
/// step (row 0 is the start).
pub fn minimize_trace_objective(
    b: &DenseMatrix,
    x0: StiefelPoint,
    optimizer: Optimizer,
    params: OptimizerParams,
    steps: usize,
) -> Result<(OptimizerState, Vec<OptimizerRecord>)> {
    let objective = |x: &DenseMatrix| -> Result<f64> { Ok(-x.dot(&b.matmul(x)?)?) };
    let mut state = OptimizerState::new(x0, params);
    let mut records = vec![OptimizerRecord {
        step: 0,
        objective: objective(state.x.matrix())?,
        orth_residual: state.x.residual(),
        step_norm: 0.0,
    }];
    for step in 1..=steps {
        let g = b.matmul(state.x.matrix())?.scale(-2.0);
        let next = match optimizer {
            Optimizer::Sgd => rsgd_step(&state, &g)?,
            Optimizer::Adam => radam_step(&state, &g)?,
        };
        let step_norm = next.x.matrix().sub(state.x.matrix())?.frobenius_norm();
        state = next;
        records.push(OptimizerRecord {
            step,
            objective: objective(state.x.matrix())?,
            orth_residual: state.x.residual(),
            step_norm,
        });
    }
    Ok((state, records))
}
