//! The minimizing-movement step and the time loop.
//!
//! Each step minimizes
//!
//! ```text
//! Φ(x) = τ (1/k) Σ_{i=0}^{k} c((x_i - x_i^prev) / τ) + H_m(x)
//! ```
//!
//! over strictly increasing states with pinned endpoints. Only the `k - 1`
//! interior coordinates are unknowns.
//!
//! The minimizer is computed by a damped Newton method started at the
//! previous state, with step lengths `1, θ, θ², …` chosen as the largest one
//! that keeps the iterate feasible and does not increase the merit function.
//! For `p < 2` the cost has unbounded curvature at zero velocity, so after a
//! globalizing phase on `Φ` Newton is applied to the velocity form of the
//! optimality system, `x_i - x_i^prev = τ (c*)'(a_i(x))`, whose nonlinearity
//! is smooth in that regime. Every other cost minimizes `Φ` directly with its
//! exact Hessian.

use crate::cost::{CostModel, INFEASIBLE};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::IdfVector;
use crate::tridiag::{solve_tridiagonal_general, SymTridiagonal};

/// Velocities below `HESSIAN_VELOCITY_FLOOR * τ` are raised to that value
/// when evaluating `c''` for `p < 2`.
pub const HESSIAN_VELOCITY_FLOOR: f64 = 1e-3;

// The objective-form iteration hands over to the velocity form once the
// velocity residual is below this multiple of τ.
const HANDOFF_LEVEL: f64 = 1.0;
const LINE_SEARCH_MIN_STEP: f64 = 1e-14;
// A stalled line search is accepted as converged when the residual is within
// this factor of the tolerance.
const STALL_FACTOR: f64 = 1e3;

/// Time stepping and inner solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct JkoConfig {
    pub tau: f64,
    pub t_end: f64,
    /// Residual tolerance of the Newton iteration. `None` selects a
    /// tolerance a small multiple above the rounding floor of the residual,
    /// see [`newton_tolerance`].
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
    pub armijo_shrink: f64,
    /// Lower bound on every gap `x_{i+1} - x_i` enforced by the line search.
    pub min_gap: f64,
}

impl JkoConfig {
    pub fn new(tau: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            t_end,
            newton_tol: None,
            newton_max_iter: 200,
            armijo_shrink: 0.5,
            min_gap: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        let n = self.t_end / self.tau;
        if !(n.round() >= 1.0 && (n - n.round()).abs() <= 1e-9 * n.round().max(1.0)) {
            return Err(Error::Config(format!(
                "t_end / tau must be a positive integer, got {} / {} = {n}",
                self.t_end, self.tau
            )));
        }
        if let Some(tol) = self.newton_tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("newton_tol must be > 0, got {tol}")));
            }
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::Config(format!(
                "armijo_shrink must lie in (0, 1), got {}",
                self.armijo_shrink
            )));
        }
        if !(self.min_gap >= 0.0) {
            return Err(Error::Config(format!("min_gap must be >= 0, got {}", self.min_gap)));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps `T / τ`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }
}

/// Which system the Newton iteration is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonForm {
    /// Minimize `Φ` with its Hessian; residual is `‖∇Φ‖∞`.
    Objective,
    /// Solve `x - x_prev - τ (c*)'(a(x)) = 0`; residual is its sup norm.
    Velocity,
}

impl NewtonForm {
    pub fn for_cost(cost: &CostModel) -> Self {
        match cost {
            CostModel::PPower { p } if *p < 2.0 => NewtonForm::Velocity,
            _ => NewtonForm::Objective,
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub n: usize,
    /// `H_m` after the step.
    pub energy: f64,
    /// `τ (1/k) Σ c((x_i - x_i^prev)/τ)`.
    pub transport: f64,
    pub min_dx: f64,
    pub max_dx: f64,
    pub min_d2x: f64,
    pub max_d2x: f64,
    /// `max_i |x_i - x_i^prev| / τ`.
    pub max_speed: f64,
    pub newton_iters: usize,
    /// Final Newton residual and the tolerance it was held to.
    pub residual: f64,
    pub tolerance: f64,
}

/// States `x^0, …, x^N` together with the reports of steps `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tau: f64,
    pub states: Vec<IdfVector>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn last(&self) -> &IdfVector {
        self.states.last().expect("trajectory holds the initial state")
    }
}

struct Objective<'a> {
    cost: &'a CostModel,
    energy: &'a EnergyModel,
    tau: f64,
    prev: &'a [f64],
    kf: f64,
}

impl<'a> Objective<'a> {
    fn new(cost: &'a CostModel, energy: &'a EnergyModel, tau: f64, prev: &'a [f64]) -> Self {
        Self {
            cost,
            energy,
            tau,
            prev,
            kf: (prev.len() - 1) as f64,
        }
    }

    fn speed_ok(&self, s: f64) -> bool {
        match self.cost.speed_limit() {
            Some(gamma) => (s / gamma).abs() < 1.0,
            None => true,
        }
    }

    /// First violation of strict feasibility, if any.
    fn infeasibility(&self, x: &[f64], min_gap: f64) -> Option<(usize, &'static str)> {
        for (i, w) in x.windows(2).enumerate() {
            if !(w[1] - w[0] > min_gap) || !(w[1] > w[0]) {
                return Some((i, "gap x[i+1] - x[i] not above the minimum"));
            }
        }
        for (i, (&xi, &pi)) in x.iter().zip(self.prev).enumerate() {
            if !self.speed_ok((xi - pi) / self.tau) {
                return Some((i, "displacement reaches gamma * tau"));
            }
        }
        None
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.prev.len() {
            return Err(Error::DimensionMismatch {
                expected: self.prev.len(),
                found: x.len(),
            });
        }
        match self.infeasibility(x, 0.0) {
            Some((index, reason)) => Err(Error::Infeasible { index, reason }),
            None => Ok(()),
        }
    }

    fn transport(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&xi, &pi) in x.iter().zip(self.prev) {
            let s = (xi - pi) / self.tau;
            if !self.speed_ok(s) {
                return INFEASIBLE;
            }
            acc += self.cost.value(s);
        }
        self.tau * acc / self.kf
    }

    fn value(&self, x: &[f64]) -> f64 {
        let t = self.transport(x);
        if t == INFEASIBLE {
            return INFEASIBLE;
        }
        let h = self.energy.energy_of(x);
        if h == INFEASIBLE {
            return INFEASIBLE;
        }
        t + h
    }

    /// `Φ(y) - Φ(x)` summed term by term, so that small decreases are not
    /// lost against the magnitude of `Φ`. Also returns a bound on the
    /// rounding error of the sum.
    fn difference(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        let kf = self.kf;
        let pot = self.energy.potential();
        let mut transport = 0.0;
        let mut internal = 0.0;
        let mut external = 0.0;
        let mut magnitude = 0.0;
        for i in 0..x.len() {
            let sy = (y[i] - self.prev[i]) / self.tau;
            if !self.speed_ok(sy) {
                return (INFEASIBLE, 0.0);
            }
            if x[i] != y[i] {
                let sx = (x[i] - self.prev[i]) / self.tau;
                let (cy, cx) = (self.cost.value(sy), self.cost.value(sx));
                let (vy, vx) = (pot.value(y[i]), pot.value(x[i]));
                transport += cy - cx;
                external += vy - vx;
                magnitude += self.tau * (cy.abs() + cx.abs()) + vy.abs() + vx.abs();
            }
            if i + 1 < x.len() {
                let dy = kf * (y[i + 1] - y[i]);
                if !(dy > 0.0) {
                    return (INFEASIBLE, 0.0);
                }
                let dx = kf * (x[i + 1] - x[i]);
                if dx != dy {
                    let (hy, hx) = (self.energy.h_x_raw(dy), self.energy.h_x_raw(dx));
                    internal += hy - hx;
                    magnitude += hy.abs() + hx.abs();
                }
            }
        }
        (
            (self.tau * transport + internal + external) / kf,
            8.0 * f64::EPSILON * magnitude / kf,
        )
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let kf = self.kf;
        let k = x.len() - 1;
        let pot = self.energy.potential();
        let mut dh_prev = self.energy.dh_x_raw(kf * (x[1] - x[0]));
        let mut g = Vec::with_capacity(k - 1);
        for j in 1..k {
            let dh_next = self.energy.dh_x_raw(kf * (x[j + 1] - x[j]));
            let s = (x[j] - self.prev[j]) / self.tau;
            let (_, v1, _) = pot.eval(x[j]);
            g.push((self.cost.prime(s)? + v1) / kf + dh_prev - dh_next);
            dh_prev = dh_next;
        }
        Ok(g)
    }

    fn clamped_second(&self, s: f64) -> Result<f64> {
        match self.cost {
            CostModel::PPower { p } if *p < 2.0 => {
                let floor = HESSIAN_VELOCITY_FLOOR * self.tau;
                self.cost.second(if s.abs() < floor { floor } else { s })
            }
            _ => self.cost.second(s),
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymTridiagonal> {
        self.check(x)?;
        let kf = self.kf;
        let k = x.len() - 1;
        let pot = self.energy.potential();
        let mut diag = Vec::with_capacity(k - 1);
        let mut off = Vec::with_capacity(k.saturating_sub(2));
        let mut ddh_prev = self.energy.ddh_x_raw(kf * (x[1] - x[0]));
        for j in 1..k {
            let ddh_next = self.energy.ddh_x_raw(kf * (x[j + 1] - x[j]));
            let s = (x[j] - self.prev[j]) / self.tau;
            let (_, _, v2) = pot.eval(x[j]);
            diag.push(self.clamped_second(s)? / (kf * self.tau) + kf * (ddh_prev + ddh_next) + v2 / kf);
            if j + 1 < k {
                off.push(-kf * ddh_next);
            }
            ddh_prev = ddh_next;
        }
        SymTridiagonal::new(diag, off)
    }

    fn residual_floor(&self, x: &[f64], form: NewtonForm) -> Result<f64> {
        let scale = x.iter().fold(x[x.len() - 1] - x[0], |m, v| m.max(v.abs()));
        let mut worst = 0.0_f64;
        match form {
            NewtonForm::Objective => {
                let h = self.hessian(x)?;
                let kf = self.kf;
                let pot = self.energy.potential();
                for (j, d) in (1..x.len() - 1).zip(&h.diag) {
                    let s = (x[j] - self.prev[j]) / self.tau;
                    let terms = (self.cost.prime(s)?.abs() + pot.eval(x[j]).1.abs()) / kf
                        + self.energy.dh_x_raw(kf * (x[j] - x[j - 1])).abs()
                        + self.energy.dh_x_raw(kf * (x[j + 1] - x[j])).abs();
                    worst = worst.max(scale * d + terms);
                }
            }
            NewtonForm::Velocity => {
                let (_, [_, diag, _]) = self.velocity_system(x)?;
                for d in diag {
                    worst = worst.max(scale * d);
                }
            }
        }
        Ok(f64::EPSILON * worst)
    }

    /// Residual of the velocity form and its tridiagonal Jacobian.
    fn velocity_system(&self, x: &[f64]) -> Result<(Vec<f64>, [Vec<f64>; 3])> {
        self.check(x)?;
        let kf = self.kf;
        let k = x.len() - 1;
        let k2 = kf * kf;
        let pot = self.energy.potential();
        let mut res = Vec::with_capacity(k - 1);
        let mut lower = Vec::with_capacity(k - 1);
        let mut diag = Vec::with_capacity(k - 1);
        let mut upper = Vec::with_capacity(k - 1);
        let d0 = kf * (x[1] - x[0]);
        let (mut dh_prev, mut ddh_prev) = (self.energy.dh_x_raw(d0), self.energy.ddh_x_raw(d0));
        for j in 1..k {
            let d = kf * (x[j + 1] - x[j]);
            let (dh_next, ddh_next) = (self.energy.dh_x_raw(d), self.energy.ddh_x_raw(d));
            let (_, v1, v2) = pot.eval(x[j]);
            let a = kf * (dh_next - dh_prev) - v1;
            let w = self.tau * self.cost.dual_second(a);
            res.push(x[j] - self.prev[j] - self.tau * self.cost.dual_prime(a));
            diag.push(1.0 + w * (k2 * (ddh_prev + ddh_next) + v2));
            if j > 1 {
                lower.push(-w * k2 * ddh_prev);
            }
            if j + 1 < k {
                upper.push(-w * k2 * ddh_next);
            }
            dh_prev = dh_next;
            ddh_prev = ddh_next;
        }
        Ok((res, [lower, diag, upper]))
    }
}

pub(crate) fn force_of(energy: &EnergyModel, x: &[f64]) -> Vec<f64> {
    let kf = (x.len() - 1) as f64;
    let k = x.len() - 1;
    let pot = energy.potential();
    let mut dh_prev = energy.dh_x_raw(kf * (x[1] - x[0]));
    let mut a = Vec::with_capacity(k - 1);
    for j in 1..k {
        let dh_next = energy.dh_x_raw(kf * (x[j + 1] - x[j]));
        a.push(kf * (dh_next - dh_prev) - pot.eval(x[j]).1);
        dh_prev = dh_next;
    }
    a
}

fn same_grid(x_prev: &IdfVector, x: &IdfVector) -> Result<()> {
    if x_prev.k() != x.k() {
        return Err(Error::DimensionMismatch {
            expected: x_prev.k(),
            found: x.k(),
        });
    }
    if x_prev.a() != x.a() || x_prev.b() != x.b() {
        return Err(Error::InvalidModel("states live on different domains".into()));
    }
    Ok(())
}

/// `Φ(τ; x_prev, x)`, or [`INFEASIBLE`] when `x` is not strictly monotone or
/// a displacement reaches `γ τ`.
pub fn phi(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector, x: &IdfVector) -> f64 {
    if same_grid(x_prev, x).is_err() {
        return INFEASIBLE;
    }
    Objective::new(cost, energy, tau, x_prev.values()).value(x.values())
}

/// `Φ` evaluated on a raw coordinate vector, which need not be monotone.
pub fn phi_raw(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector, values: &[f64]) -> f64 {
    if values.len() != x_prev.values().len() {
        return INFEASIBLE;
    }
    Objective::new(cost, energy, tau, x_prev.values()).value(values)
}

/// Gradient of `Φ` with respect to the interior coordinates,
///
/// ```text
/// ∂Φ/∂x_j = (1/k) c'((x_j - x_j^prev)/τ) + h_X'(δx_{j-1}) - h_X'(δx_j) + (1/k) v'(x_j)
/// ```
pub fn grad_phi(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector, x: &IdfVector) -> Result<Vec<f64>> {
    same_grid(x_prev, x)?;
    Objective::new(cost, energy, tau, x_prev.values()).gradient(x.values())
}

/// Hessian of `Φ` on the interior coordinates. For `p < 2` the curvature of
/// the cost is evaluated at a velocity of at least
/// [`HESSIAN_VELOCITY_FLOOR`]` * τ`.
pub fn hess_phi(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector, x: &IdfVector) -> Result<SymTridiagonal> {
    same_grid(x_prev, x)?;
    Objective::new(cost, energy, tau, x_prev.values()).hessian(x.values())
}

/// The driving force `a_j`, `j = 1..k`, whose image under `(c*)'` is the
/// velocity of a minimizer.
pub fn driving_force(energy: &EnergyModel, x: &IdfVector) -> Vec<f64> {
    force_of(energy, x.values())
}

/// Default Newton tolerance at the iterate `x` of a step leaving `x_prev`.
///
/// It is 64 times an estimate of the rounding floor of the residual: the
/// change caused by moving a coordinate by one ulp (coordinate scale times
/// the diagonal of the Newton matrix) plus the rounding error of the largest
/// terms summed in the residual.
pub fn newton_tolerance(cost: &CostModel, energy: &EnergyModel, cfg: &JkoConfig, x_prev: &IdfVector, x: &IdfVector) -> f64 {
    if let Some(tol) = cfg.newton_tol {
        return tol;
    }
    let obj = Objective::new(cost, energy, cfg.tau, x_prev.values());
    obj.residual_floor(x.values(), NewtonForm::for_cost(cost))
        .map(|f| 64.0 * f)
        .unwrap_or(f64::NAN)
}

/// Euler-Lagrange residual of an accepted step and the bound implied by the
/// Newton tolerance.
///
/// Where `(c*)'` is Lipschitz (`p <= 2`, relativistic) the residual is the
/// velocity mismatch `max_i |(x_i - x_i^prev)/τ - (c*)'(a_i)|`; for `p > 2`
/// it is the force mismatch `max_i |c'((x_i - x_i^prev)/τ) - a_i|`, since
/// `(c*)'` is not Lipschitz at zero there.
pub fn euler_lagrange_residual(
    cost: &CostModel,
    energy: &EnergyModel,
    tau: f64,
    tolerance: f64,
    x_prev: &IdfVector,
    x: &IdfVector,
) -> Result<(f64, f64)> {
    same_grid(x_prev, x)?;
    let a = force_of(energy, x.values());
    let k = x.k() as f64;
    let velocities = x.interior().iter().zip(x_prev.interior()).map(|(xi, pi)| (xi - pi) / tau);
    let form = NewtonForm::for_cost(cost);
    let velocity_form = match cost {
        CostModel::PPower { p } => *p <= 2.0,
        CostModel::Relativistic { .. } => true,
    };
    let mut worst = 0.0_f64;
    for (s, &aj) in velocities.zip(&a) {
        let r = if velocity_form {
            (s - cost.dual_prime(aj)).abs()
        } else {
            (cost.prime(s)? - aj).abs()
        };
        worst = worst.max(r);
    }
    // The objective-form tolerance bounds k |c'(s) - a|; (c*)' has Lipschitz
    // constant gamma for the relativistic cost and 1 for p = 2.
    let bound = match (form, velocity_form) {
        (NewtonForm::Velocity, _) => tolerance / tau,
        (NewtonForm::Objective, true) => tolerance * k * cost.speed_limit().unwrap_or(1.0),
        (NewtonForm::Objective, false) => tolerance * k,
    };
    Ok((worst, bound))
}

struct NewtonOutcome {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    tolerance: f64,
}

fn tolerance_at(obj: &Objective, cfg: &JkoConfig, x: &[f64], form: NewtonForm) -> Result<f64> {
    match cfg.newton_tol {
        Some(tol) => Ok(tol),
        None => Ok(64.0 * obj.residual_floor(x, form)?),
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Minimizes `Φ` by Newton's method. With `handoff`, returns as soon as the
/// velocity-form residual has dropped to that level or progress stalls.
fn newton_objective(obj: &Objective, cfg: &JkoConfig, form: NewtonForm, handoff: Option<f64>) -> Result<NewtonOutcome> {
    let mut x = obj.prev.to_vec();
    let k = x.len() - 1;
    let mut trial = x.clone();
    for it in 0..=cfg.newton_max_iter {
        let g = obj.gradient(&x)?;
        let r = sup_norm(&g);
        let tol = tolerance_at(obj, cfg, &x, form)?;
        if let Some(level) = handoff {
            let (res, _) = obj.velocity_system(&x)?;
            if sup_norm(&res) <= level {
                return Ok(NewtonOutcome { x, iterations: it, residual: r, tolerance: tol });
            }
        }
        if r <= tol {
            return Ok(NewtonOutcome { x, iterations: it, residual: r, tolerance: tol });
        }
        if it == cfg.newton_max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: r });
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let dir = obj.hessian(&x)?.solve(&rhs)?;
        let mut h = 1.0;
        let accepted = loop {
            for j in 1..k {
                trial[j] = x[j] + h * dir[j - 1];
            }
            if obj.infeasibility(&trial, cfg.min_gap).is_none() {
                let (change, noise) = obj.difference(&x, &trial);
                if change <= 0.0 {
                    break true;
                }
                // Near the minimizer the decrease of Φ drops below its
                // rounding error; the gradient norm then decides.
                if change <= noise && norm2(&obj.gradient(&trial)?) < norm2(&g) {
                    break true;
                }
            }
            h *= cfg.armijo_shrink;
            if h < LINE_SEARCH_MIN_STEP {
                break false;
            }
        };
        if !accepted {
            if r <= STALL_FACTOR * tol || handoff.is_some() {
                return Ok(NewtonOutcome { x, iterations: it, residual: r, tolerance: tol });
            }
            return Err(Error::LineSearch { iteration: it, residual: r });
        }
        std::mem::swap(&mut x, &mut trial);
        trial.copy_from_slice(&x);
    }
    unreachable!("loop returns on its last iteration")
}

/// Solves the velocity form by Newton's method, starting from a point
/// prepared by `newton_objective` in handoff mode.
fn newton_velocity(obj: &Objective, cfg: &JkoConfig, form: NewtonForm) -> Result<NewtonOutcome> {
    let start = newton_objective(obj, cfg, NewtonForm::Objective, Some(HANDOFF_LEVEL * obj.tau))?;
    let mut x = start.x;
    let k = x.len() - 1;
    let mut trial = x.clone();
    for it in start.iterations..=cfg.newton_max_iter {
        let (res, [lower, diag, upper]) = obj.velocity_system(&x)?;
        let r = sup_norm(&res);
        let tol = tolerance_at(obj, cfg, &x, form)?;
        if r <= tol {
            return Ok(NewtonOutcome { x, iterations: it, residual: r, tolerance: tol });
        }
        if it == cfg.newton_max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: r });
        }
        let merit = norm2(&res);
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let dir = solve_tridiagonal_general(&lower, &diag, &upper, &rhs)?;
        let mut h = 1.0;
        let accepted = loop {
            for j in 1..k {
                trial[j] = x[j] + h * dir[j - 1];
            }
            if obj.infeasibility(&trial, cfg.min_gap).is_none() {
                if let Ok((res_t, _)) = obj.velocity_system(&trial) {
                    if norm2(&res_t) <= (1.0 - 1e-4 * h) * merit {
                        break true;
                    }
                }
            }
            h *= cfg.armijo_shrink;
            if h < LINE_SEARCH_MIN_STEP {
                break false;
            }
        };
        if !accepted {
            if r <= STALL_FACTOR * tol {
                return Ok(NewtonOutcome { x, iterations: it, residual: r, tolerance: tol });
            }
            return Err(Error::LineSearch { iteration: it, residual: r });
        }
        std::mem::swap(&mut x, &mut trial);
        trial.copy_from_slice(&x);
    }
    unreachable!("loop returns on its last iteration")
}

fn report(cost: &CostModel, energy: &EnergyModel, tau: f64, n: usize, prev: &[f64], x: &IdfVector) -> StepReport {
    let obj = Objective::new(cost, energy, tau, prev);
    let dx = x.delta();
    let d2x = x.delta2();
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)))
    };
    let (min_dx, max_dx) = fold(&dx);
    let (min_d2x, max_d2x) = fold(&d2x);
    let max_speed = x
        .values()
        .iter()
        .zip(prev)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / tau));
    StepReport {
        n,
        energy: energy.total_energy(x),
        transport: obj.transport(x.values()),
        min_dx,
        max_dx,
        min_d2x,
        max_d2x,
        max_speed,
        newton_iters: 0,
        residual: 0.0,
        tolerance: 0.0,
    }
}

/// Report for a state without a preceding step (the initial state).
pub fn initial_report(energy: &EnergyModel, x: &IdfVector) -> StepReport {
    let cost = CostModel::PPower { p: 2.0 };
    report(&cost, energy, 1.0, 0, x.values(), x)
}

/// One minimizing-movement step from `x_prev`.
pub fn jko_step(cost: &CostModel, energy: &EnergyModel, cfg: &JkoConfig, x_prev: &IdfVector) -> Result<(IdfVector, StepReport)> {
    step_numbered(cost, energy, cfg, x_prev, 1)
}

fn step_numbered(
    cost: &CostModel,
    energy: &EnergyModel,
    cfg: &JkoConfig,
    x_prev: &IdfVector,
    n: usize,
) -> Result<(IdfVector, StepReport)> {
    cfg.validate()?;
    let prev = x_prev.values();
    let obj = Objective::new(cost, energy, cfg.tau, prev);
    if let Some((index, reason)) = obj.infeasibility(prev, cfg.min_gap) {
        return Err(Error::Infeasible { index, reason });
    }
    let form = NewtonForm::for_cost(cost);
    let outcome = match form {
        NewtonForm::Objective => newton_objective(&obj, cfg, form, None)?,
        NewtonForm::Velocity => newton_velocity(&obj, cfg, form)?,
    };
    let x = IdfVector::from_values_unchecked(outcome.x);
    let mut rep = report(cost, energy, cfg.tau, n, prev, &x);
    rep.newton_iters = outcome.iterations;
    rep.residual = outcome.residual;
    rep.tolerance = outcome.tolerance;
    Ok((x, rep))
}

/// Runs `T / τ` steps from `x0`, calling `observer` after each step.
pub fn evolve<F>(cost: &CostModel, energy: &EnergyModel, cfg: &JkoConfig, x0: &IdfVector, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(&StepReport),
{
    cfg.validate()?;
    let steps = cfg.steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut reports = Vec::with_capacity(steps);
    states.push(x0.clone());
    for n in 1..=steps {
        let (x, rep) = step_numbered(cost, energy, cfg, &states[n - 1], n).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        observer(&rep);
        states.push(x);
        reports.push(rep);
    }
    Ok(Trajectory {
        tau: cfg.tau,
        states,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Potential;

    fn sample() -> IdfVector {
        IdfVector::new(vec![0.0, 0.1, 0.3, 0.6, 1.0]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(JkoConfig::new(0.01, 0.5).is_ok());
        assert_eq!(JkoConfig::new(0.01, 0.5).unwrap().steps(), 50);
        assert!(JkoConfig::new(0.0, 1.0).is_err());
        assert!(JkoConfig::new(0.08, 0.7).is_err());
        assert!(JkoConfig::new(0.01, 0.0).is_err());
        let mut cfg = JkoConfig::new(0.1, 1.0).unwrap();
        cfg.armijo_shrink = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn phi_at_previous_state_is_energy() {
        let e = EnergyModel::new(5.0 / 3.0, Potential::quadratic(1.0, 0.2).unwrap()).unwrap();
        let x = sample();
        for cost in [CostModel::p_power(7.0).unwrap(), CostModel::relativistic(1.0).unwrap()] {
            assert_eq!(phi(&cost, &e, 0.1, &x, &x), e.total_energy(&x));
        }
    }

    #[test]
    fn phi_hand_sum() {
        let cost = CostModel::p_power(2.0).unwrap();
        let e = EnergyModel::boltzmann();
        let prev = sample();
        let x = IdfVector::new(vec![0.0, 0.2, 0.45, 0.7, 1.0]).unwrap();
        let tau = 0.05;
        let d: [f64; 5] = [0.0, 0.1, 0.15, 0.1, 0.0];
        let transport: f64 = d.iter().map(|v| 0.5 * (v / tau).powi(2)).sum::<f64>() * tau / 4.0;
        let gaps: [f64; 4] = [0.2, 0.25, 0.25, 0.3];
        let internal: f64 = gaps.iter().map(|g| -(4.0 * g).ln()).sum::<f64>() / 4.0;
        let got = phi(&cost, &e, tau, &prev, &x);
        assert!((got - (transport + internal)).abs() < 1e-14);
    }

    #[test]
    fn phi_flags_speed_violation() {
        let cost = CostModel::relativistic(1.0).unwrap();
        let e = EnergyModel::boltzmann();
        let prev = IdfVector::equispaced(0.0, 1.0, 4).unwrap();
        let mut v = prev.values().to_vec();
        v[2] += 0.02;
        let x = IdfVector::new(v).unwrap();
        assert_eq!(phi(&cost, &e, 0.01, &prev, &x), INFEASIBLE);
        assert!(grad_phi(&cost, &e, 0.01, &prev, &x).is_err());
        assert_eq!(phi_raw(&cost, &e, 0.01, &prev, &[0.0, 0.5, 0.4, 0.75, 1.0]), INFEASIBLE);
    }

    #[test]
    fn stationary_gradient_vanishes() {
        let x = IdfVector::equispaced(0.0, 1.0, 8).unwrap();
        let e = EnergyModel::boltzmann();
        for cost in [
            CostModel::p_power(7.0).unwrap(),
            CostModel::p_power(2.0).unwrap(),
            CostModel::relativistic(1.0).unwrap(),
        ] {
            let g = grad_phi(&cost, &e, 0.1, &x, &x).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn hessian_hand_values() {
        let x = IdfVector::equispaced(0.0, 1.0, 4).unwrap();
        let h = hess_phi(&CostModel::p_power(2.0).unwrap(), &EnergyModel::boltzmann(), 1.0, &x, &x).unwrap();
        for d in &h.diag {
            assert!((d - 8.25).abs() < 1e-12);
        }
        for o in &h.off {
            assert!((o + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_gradient_names_index() {
        let prev = IdfVector::equispaced(0.0, 1.0, 4).unwrap();
        let cost = CostModel::PPower { p: 2.0 };
        let e = EnergyModel::boltzmann();
        let obj = Objective::new(&cost, &e, 0.1, prev.values());
        let err = obj.gradient(&[0.0, 0.5, 0.4, 0.75, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Infeasible { index: 1, .. }));
    }

    #[test]
    fn stationary_step_does_not_move() {
        let x = IdfVector::equispaced(-1.0, 1.0, 16).unwrap();
        let e = EnergyModel::boltzmann();
        let cfg = JkoConfig::new(0.01, 0.01).unwrap();
        for cost in [
            CostModel::p_power(7.0).unwrap(),
            CostModel::p_power(4.0 / 3.0).unwrap(),
            CostModel::relativistic(1.0).unwrap(),
        ] {
            let (y, rep) = jko_step(&cost, &e, &cfg, &x).unwrap();
            assert_eq!(rep.newton_iters, 0);
            assert_eq!(y, x);
        }
    }

    #[test]
    fn evolve_wraps_step_errors() {
        let x = sample();
        let mut cfg = JkoConfig::new(0.05, 0.1).unwrap();
        cfg.min_gap = 0.15;
        let err = evolve(&CostModel::PPower { p: 2.0 }, &EnergyModel::boltzmann(), &cfg, &x, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, .. }));
    }
}
