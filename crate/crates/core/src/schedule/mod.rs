//! Iteration schedules built from optimal odd polynomials.
//!
//! * [`cans_schedule`] chains best approximations, each stage starting from
//!   the interval `[1−ε, 1+ε]` certified by the previous one.
//! * [`delta_design`] finds the smallest left boundary that a fixed list of
//!   degrees can push into `[1−δ, 1+δ]`.
//! * [`max_derivative_poly`] and [`backchained_schedule`] build polynomials
//!   with large slope at the origin while staying inside `[1−δ, 1+δ]`.

pub mod published;
pub mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimax::{best_cubic, best_cubic_centered, best_odd, epsilon_cubic, epsilon_cubic_centered, MinimaxResult};
use crate::poly::{Composition, OddPolynomial};

/// Tolerance for the inner bisections.
pub const BISECTION_TOL: f64 = 1e-10;

/// Termination constant of the δ-orthogonalization bisection.
pub const DELTA_DESIGN_TOL: f64 = 1e-7;

const MAX_BISECTION_STEPS: usize = 200;

/// One stage of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub poly: OddPolynomial,
    /// Interval assumed to contain the singular values before this stage.
    pub pre_interval: (f64, f64),
    /// `(1 − ε, 1 + ε)`: where this stage sends `pre_interval`.
    pub post_interval: (f64, f64),
    pub epsilon: f64,
}

impl From<MinimaxResult> for ScheduleEntry {
    fn from(r: MinimaxResult) -> Self {
        Self::from_result(r)
    }
}

impl ScheduleEntry {
    fn from_result(r: MinimaxResult) -> Self {
        Self {
            pre_interval: (r.a, r.b),
            post_interval: (1.0 - r.epsilon, 1.0 + r.epsilon),
            epsilon: r.epsilon,
            poly: r.poly,
        }
    }
}

/// An ordered list of stages. Applying a schedule never solves anything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
    /// Target half-width when the schedule comes from a δ design.
    delta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    entries: Vec<RawEntry>,
    total_matmuls: usize,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let entries = raw
            .entries
            .into_iter()
            .map(|e| {
                Ok(ScheduleEntry {
                    poly: OddPolynomial::new(e.coeffs)?,
                    pre_interval: (e.a, e.b),
                    post_interval: (1.0 - e.epsilon, 1.0 + e.epsilon),
                    epsilon: e.epsilon,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = Schedule::new(entries, raw.delta)?;
        if schedule.total_matmuls() != raw.total_matmuls {
            return Err(Error::Parse(format!(
                "total_matmuls {} does not match entries ({})",
                raw.total_matmuls,
                schedule.total_matmuls()
            )));
        }
        Ok(schedule)
    }
}

impl From<Schedule> for RawSchedule {
    fn from(s: Schedule) -> Self {
        let total_matmuls = s.total_matmuls();
        RawSchedule {
            delta: s.delta,
            entries: s
                .entries
                .into_iter()
                .map(|e| RawEntry {
                    a: e.pre_interval.0,
                    b: e.pre_interval.1,
                    coeffs: e.poly.coeffs().to_vec(),
                    epsilon: e.epsilon,
                })
                .collect(),
            total_matmuls,
        }
    }
}

impl Schedule {
    pub fn new(entries: Vec<ScheduleEntry>, delta: Option<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("schedule has no entries".into()));
        }
        Ok(Self { entries, delta })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Interval assumed by the first stage.
    pub fn initial_interval(&self) -> (f64, f64) {
        self.entries[0].pre_interval
    }

    pub fn final_epsilon(&self) -> f64 {
        self.entries[self.entries.len() - 1].epsilon
    }

    pub fn total_matmuls(&self) -> usize {
        self.entries.iter().map(|e| e.poly.matmul_cost()).sum()
    }

    pub fn composition(&self) -> Composition {
        Composition::new(self.entries.iter().map(|e| e.poly.clone()).collect()).expect("schedule is non-empty")
    }

    /// Per-stage `(min, max)` of each polynomial over its pre-interval.
    pub fn stage_ranges(&self, grid: usize) -> Result<Vec<(f64, f64)>> {
        self.entries
            .iter()
            .map(|e| {
                let (a, b) = e.pre_interval;
                if a < b {
                    e.poly.range_on_interval(a, b, grid)
                } else {
                    let y = e.poly.eval(a);
                    Ok((y, y))
                }
            })
            .collect()
    }
}

/// Converts a polynomial degree (odd, 3..=15) into its term count.
pub fn terms_for_degree(degree: usize) -> Result<usize> {
    if degree.is_multiple_of(2) || !(3..=15).contains(&degree) {
        return Err(Error::InvalidArgument(format!("degree {degree} must be odd and in 3..=15")));
    }
    Ok(degree.div_ceil(2))
}

/// Best approximation on `[a, b]`; once the interval is `[1−h, 1+h]` the
/// half-width is used directly for cubics.
fn stage(a: f64, b: f64, centered: Option<f64>, terms: usize) -> Result<MinimaxResult> {
    match (terms, centered) {
        (2, Some(h)) => best_cubic_centered(h),
        (2, None) => best_cubic(a, b),
        _ => best_odd(a, b, terms),
    }
}

/// Stage-by-stage generator of a CANS chain: each stage is optimal for the
/// interval the previous one certified.
#[derive(Clone, Debug)]
pub struct StageChain {
    lo: f64,
    hi: f64,
    centered: Option<f64>,
}

impl StageChain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 || a > b {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { lo: a, hi: b, centered: None })
    }

    /// Interval the next stage is designed for.
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Next stage with `terms` terms (degree `2·terms − 1`).
    pub fn next_stage(&mut self, terms: usize) -> Result<ScheduleEntry> {
        let r = stage(self.lo, self.hi, self.centered, terms)?;
        let eps = r.epsilon;
        self.lo = 1.0 - eps;
        self.hi = 1.0 + eps;
        self.centered = Some(eps);
        Ok(ScheduleEntry::from_result(r))
    }
}

/// Chain of optimal polynomials of the given degrees starting from `[a, b]`.
pub fn cans_schedule(a: f64, b: f64, degrees: &[usize]) -> Result<Schedule> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("empty degree list".into()));
    }
    let terms = degrees.iter().map(|&d| terms_for_degree(d)).collect::<Result<Vec<_>>>()?;
    let mut chain = StageChain::new(a, b)?;
    let entries = terms.into_iter().map(|t| chain.next_stage(t)).collect::<Result<Vec<_>>>()?;
    Schedule::new(entries, None)
}

/// Chains of one degree from `[a, b]` until the certified error is at most
/// `target_eps` (or `max_stages` is reached).
pub fn cans_schedule_to_target(a: f64, b: f64, degree: usize, target_eps: f64, max_stages: usize) -> Result<Schedule> {
    let terms = terms_for_degree(degree)?;
    let mut chain = StageChain::new(a, b)?;
    let mut entries = Vec::new();
    while entries.len() < max_stages.max(1) {
        let entry = chain.next_stage(terms)?;
        let done = entry.epsilon <= target_eps;
        entries.push(entry);
        if done {
            break;
        }
    }
    Schedule::new(entries, None)
}

/// `[ε₁, …, ε_steps]` of the degree-3 chain started on `[a0, b0]`.
pub fn epsilon_recursion(a0: f64, b0: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let mut eps = epsilon_cubic(a0, b0)?;
    let mut out = Vec::with_capacity(steps);
    out.push(eps);
    for _ in 1..steps {
        eps = epsilon_cubic_centered(eps);
        out.push(eps);
    }
    Ok(out)
}

/// `⌈log₂(ln ε / ln(1 − a0))⌉`, floored at zero.
pub fn predicted_iterations(a0: f64, eps: f64) -> Result<u32> {
    if !(a0 > 0.0 && a0 < 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < a0 < 1 and 0 < eps < 1, got a0={a0}, eps={eps}")));
    }
    let ratio = eps.ln() / (-a0).ln_1p();
    Ok(ratio.log2().ceil().max(0.0) as u32)
}

/// Bisects a monotone function on `[lo, hi]` for `f(x) = target`.
/// `increasing` states the direction of monotonicity.
fn bisect_monotone<F>(mut lo: f64, mut hi: f64, target: f64, increasing: bool, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best = (0.5 * (lo + hi), f64::INFINITY);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let value = f(mid)?;
        let gap = (value - target).abs();
        if gap < best.1 {
            best = (mid, gap);
        }
        if gap <= BISECTION_TOL || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            return Ok(best);
        }
        if (value < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// `q_{d,δ}`: the best approximation on `[a(d,δ), 1+δ]` where `a(d,δ)` solves
/// `ε(d, a, 1+δ) = δ`. `d` is the term count (degree `2d − 1`).
pub fn max_derivative_poly(d: usize, delta: f64) -> Result<MinimaxResult> {
    if d < 2 {
        return Err(Error::InvalidArgument("term count must be at least 2".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    let right = 1.0 + delta;
    let (a, _) = bisect_monotone(0.0, right, delta, false, |a| {
        if a <= 0.0 {
            return Ok(1.0);
        }
        Ok(best_odd(a, right, d)?.epsilon)
    })?;
    best_odd(a, right, d)
}

/// Composition from back-chaining symmetric intervals, rescaled to accept
/// arguments up to `1 + δ`.
#[derive(Clone, Debug)]
pub struct Backchain {
    /// Innermost first; the innermost stage carries the argument rescaling.
    pub composition: Composition,
    /// `[δ₁, …, δ_l]` with `ε(d, 1−δ_k, 1+δ_k) = δ_{k−1}`, `δ₀ = δ`.
    pub half_widths: Vec<f64>,
    /// Left end of the certified domain `[a*, 1+δ]`.
    pub left: f64,
    pub delta: f64,
}

impl Backchain {
    /// Stages with their design intervals; the innermost one accepts
    /// `[left, 1 + δ]`.
    pub fn schedule(&self) -> Result<Schedule> {
        let l = self.half_widths.len();
        let outer_delta = |k: usize| if k == 0 { self.delta } else { self.half_widths[k - 1] };
        let entries = self
            .composition
            .polys()
            .iter()
            .enumerate()
            .map(|(i, poly)| {
                // Composition index i is back-chain stage l − 1 − i.
                let k = l - 1 - i;
                let h = self.half_widths[k];
                let eps = outer_delta(k);
                let pre_interval = if i == 0 { (self.left, 1.0 + self.delta) } else { (1.0 - h, 1.0 + h) };
                ScheduleEntry { poly: poly.clone(), pre_interval, post_interval: (1.0 - eps, 1.0 + eps), epsilon: eps }
            })
            .collect();
        Schedule::new(entries, Some(self.delta))
    }
}

/// Back-chained composition of `l` polynomials with `d` terms each.
pub fn backchained_schedule(d: usize, l: usize, delta: f64) -> Result<Backchain> {
    if d < 2 || l == 0 {
        return Err(Error::InvalidArgument("need d >= 2 and l >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    let eps_at = |h: f64| -> Result<f64> {
        if d == 2 {
            Ok(epsilon_cubic_centered(h))
        } else {
            Ok(best_odd(1.0 - h, 1.0 + h, d)?.epsilon)
        }
    };
    let mut half_widths = Vec::with_capacity(l);
    let mut prev = delta;
    for k in 0..l {
        let hi = 1.0 - 1e-12;
        if prev >= hi || eps_at(hi)? <= prev {
            return Err(Error::Bisection(format!(
                "half-width reached 1 after {k} stages; too many stages for delta {delta}"
            )));
        }
        let (h, _) = bisect_monotone(prev, hi, prev, true, eps_at)?;
        half_widths.push(h);
        prev = h;
    }
    let stage_poly = |h: f64| -> Result<OddPolynomial> {
        Ok(if d == 2 { best_cubic_centered(h)?.poly } else { best_odd(1.0 - h, 1.0 + h, d)?.poly })
    };
    let innermost = half_widths[l - 1];
    let t = (1.0 + innermost) / (1.0 + delta);
    let mut polys = Vec::with_capacity(l);
    polys.push(stage_poly(innermost)?.rescale_argument(t));
    for &h in half_widths[..l - 1].iter().rev() {
        polys.push(stage_poly(h)?);
    }
    Ok(Backchain { composition: Composition::new(polys)?, half_widths, left: (1.0 - innermost) / t, delta })
}

/// Result of the δ-orthogonalization design.
#[derive(Clone, Debug)]
pub struct DeltaDesign {
    pub schedule: Schedule,
    /// Smallest singular value (after normalization) the design lifts into
    /// `[1−δ, 1+δ]`.
    pub a_reach: f64,
    pub right: f64,
    pub delta: f64,
    /// `|δ − ε|` at termination.
    pub residual: f64,
}

impl DeltaDesign {
    /// Interval assumed after applying the design.
    pub fn final_interval(&self) -> (f64, f64) {
        (1.0 - self.delta, 1.0 + self.delta)
    }
}

/// Bisection on the left boundary so that the forward chain of the given
/// degrees, started on `[A, right]`, ends with error `δ` (within `eps_tol`).
/// `right` defaults to `1 + δ`.
pub fn delta_design(delta: f64, degrees: &[usize], right: Option<f64>, eps_tol: f64) -> Result<DeltaDesign> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("empty degree list".into()));
    }
    let right = right.unwrap_or(1.0 + delta);
    if !(right > 0.0 && right.is_finite()) {
        return Err(Error::InvalidArgument(format!("right boundary {right} must be positive")));
    }
    let (mut lo, mut hi) = (0.0, right);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let schedule = cans_schedule(mid, right, degrees)?;
        let eps = schedule.final_epsilon();
        let residual = (delta - eps).abs();
        if residual <= eps_tol {
            return Ok(DeltaDesign {
                schedule: Schedule { delta: Some(delta), ..schedule },
                a_reach: mid,
                right,
                delta,
                residual,
            });
        }
        if eps < delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Bisection(format!(
        "delta design did not reach |delta - eps| <= {eps_tol} in {MAX_BISECTION_STEPS} steps"
    )))
}
