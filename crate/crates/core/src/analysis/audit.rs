use std::fmt;

use crate::cost::CostModel;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::IdfVector;
use crate::jko::{driving_force, euler_lagrange_residual, newton_tolerance, JkoConfig, Trajectory};

/// Slack of the energy dissipation check, relative to `1 + |H|`.
pub const DISSIPATION_SLACK: f64 = 1e-10;
/// Absolute slack of the first difference principles.
pub const DELTA_SLACK: f64 = 1e-9;
/// Slack of the second difference principle, in units of `k²`.
pub const DELTA2_SLACK: f64 = 1e-7;
/// Relative slack of the Hölder and entropy bounds.
pub const BOUND_SLACK: f64 = 1e-8;
/// The Euler-Lagrange residual may exceed the tolerance-implied bound by this
/// factor.
pub const EL_FACTOR: f64 = 10.0;
// Step pairs of the Hölder check are drawn from at most this many states.
const HOLDER_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The hypotheses of the inequality do not hold for this model.
    NotApplicable,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "true",
            Status::Fail => "false",
            Status::NotApplicable => "n/a",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "true" => Some(Status::Pass),
            "false" => Some(Status::Fail),
            "n/a" => Some(Status::NotApplicable),
            _ => None,
        }
    }
}

/// Outcome of one inequality over the whole trajectory. `worst` is the
/// largest amount by which the left side exceeds the right side before any
/// slack is applied (zero when the inequality holds everywhere) and `step`
/// the step where the check came closest to failing.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub worst: f64,
    pub step: usize,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<InvariantCheck>,
}

pub const INVARIANT_NAMES: [&str; 10] = [
    "energy_dissipation",
    "dissipation_estimate",
    "dx_min_max_principle",
    "dx_upper_bound",
    "d2x_principle",
    "flux_limit",
    "holder_bound",
    "entropy_bound",
    "euler_lagrange",
    "endpoints_pinned",
];

impl AuditReport {
    /// True when no applicable check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// Text form: a header and one `name,worst,step,pass` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::from("name,worst,step,pass\n");
        for c in &self.checks {
            out.push_str(&format!("{},{:.16e},{},{}\n", c.name, c.worst, c.step, c.status.as_str()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut checks = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let bad = |column: usize, message: &str| Error::Parse {
                line: i + 1,
                column,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(1, "expected 4 fields"));
            }
            let name = INVARIANT_NAMES
                .iter()
                .find(|n| **n == fields[0])
                .ok_or_else(|| bad(1, "unknown invariant"))?;
            let worst = fields[1].parse().map_err(|_| bad(2, "bad number"))?;
            let step = fields[2].parse().map_err(|_| bad(3, "bad step"))?;
            let status = Status::parse(fields[3]).ok_or_else(|| bad(4, "bad pass flag"))?;
            checks.push(InvariantCheck { name, worst, step, status });
        }
        Ok(Self { checks })
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

// Tracks the worst excess and the step of the smallest margin.
struct Tracker {
    name: &'static str,
    worst: f64,
    step: usize,
    closest: f64,
    failed: bool,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            step: 0,
            closest: f64::NEG_INFINITY,
            failed: false,
        }
    }

    /// Records `lhs <= rhs + slack` at `step`.
    fn record(&mut self, step: usize, lhs: f64, rhs: f64, slack: f64) {
        let excess = lhs - rhs;
        let margin = excess - slack;
        if excess.is_nan() || !(margin <= 0.0) {
            self.failed = true;
        }
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
        if margin > self.closest || (margin.is_nan() && !self.closest.is_nan()) {
            self.closest = margin;
            self.step = step;
        }
    }

    /// Records the strict inequality `lhs < rhs`.
    fn record_strict(&mut self, step: usize, lhs: f64, rhs: f64) {
        if !(lhs < rhs) {
            self.failed = true;
        }
        self.record_margin_only(step, lhs - rhs);
    }

    fn record_margin_only(&mut self, step: usize, excess: f64) {
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
        if excess > self.closest || (excess.is_nan() && !self.closest.is_nan()) {
            self.closest = excess;
            self.step = step;
        }
    }

    fn finish(self) -> InvariantCheck {
        InvariantCheck {
            name: self.name,
            worst: self.worst,
            step: self.step,
            status: if self.failed { Status::Fail } else { Status::Pass },
        }
    }
}

fn not_applicable(name: &'static str) -> InvariantCheck {
    InvariantCheck {
        name,
        worst: 0.0,
        step: 0,
        status: Status::NotApplicable,
    }
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)))
}

fn holder_indices(n_states: usize) -> Vec<usize> {
    if n_states <= HOLDER_SAMPLES {
        return (0..n_states).collect();
    }
    let mut idx: Vec<usize> = (0..HOLDER_SAMPLES)
        .map(|j| ((j as f64) * (n_states - 1) as f64 / (HOLDER_SAMPLES - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Evaluates every discrete invariant of the scheme on `trajectory`.
///
/// Energies, differences and forces are recomputed from the states, so a
/// trajectory read back from disk audits identically to the one in memory.
pub fn audit(trajectory: &Trajectory, cost: &CostModel, energy: &EnergyModel, cfg: &JkoConfig) -> Result<AuditReport> {
    let states = &trajectory.states;
    if states.is_empty() {
        return Err(Error::InvalidModel("trajectory has no states".into()));
    }
    if trajectory.tau != cfg.tau {
        return Err(Error::InvalidModel(format!(
            "trajectory time step {} differs from configured {}",
            trajectory.tau, cfg.tau
        )));
    }
    let x0 = &states[0];
    for x in states {
        if x.k() != x0.k() {
            return Err(Error::DimensionMismatch {
                expected: x0.k(),
                found: x.k(),
            });
        }
    }
    let tau = cfg.tau;
    let k = x0.k();
    let kf = k as f64;
    let (a, b) = (x0.a(), x0.b());
    let v_constant = energy.potential().is_constant();
    let energies: Vec<f64> = states.iter().map(|x| energy.total_energy(x)).collect();
    let h_low = energy.energy_lower_bound(a, b, k);

    let mut dissipation = Tracker::new("energy_dissipation");
    let mut estimate = Tracker::new("dissipation_estimate");
    let mut minmax = Tracker::new("dx_min_max_principle");
    let mut upper = Tracker::new("dx_upper_bound");
    let mut second = Tracker::new("d2x_principle");
    let mut flux = Tracker::new("flux_limit");
    let mut euler = Tracker::new("euler_lagrange");
    let mut pinned = Tracker::new("endpoints_pinned");

    let (d2_lo, d2_hi) = {
        let (lo, hi) = extremes(&x0.delta2());
        (lo.min(0.0), hi.max(0.0))
    };
    let mut entropy_sum = 0.0;
    let mut prev_dx = extremes(&x0.delta());
    let p_dual = cost.conjugate_exponent();

    for n in 1..states.len() {
        let (xp, x) = (&states[n - 1], &states[n]);
        let (hp, h) = (energies[n - 1], energies[n]);
        dissipation.record(n, h, hp, DISSIPATION_SLACK * (1.0 + hp.abs()));

        let a_force = driving_force(energy, x);
        let mut transport = 0.0;
        let mut correction = 0.0;
        let mut max_speed = 0.0_f64;
        for (i, (xi, pi)) in x.values().iter().zip(xp.values()).enumerate() {
            let s = (xi - pi) / tau;
            max_speed = max_speed.max(s.abs());
            transport += cost.dissipation(s);
            if i >= 1 && i < k {
                if let Ok(d) = cost.prime(s) {
                    correction += s.abs() * (d - a_force[i - 1]).abs();
                }
            }
        }
        // The estimate is exact for an exact minimizer; the residual of the
        // Euler-Lagrange equation enters with weight |s|.
        let slack = tau * correction / kf + DISSIPATION_SLACK * (1.0 + hp.abs());
        estimate.record(n, tau * transport / kf, hp - h, slack);

        let dx = extremes(&x.delta());
        if v_constant {
            let excess = (prev_dx.0 - dx.0).max(dx.1 - prev_dx.1);
            minmax.record(n, excess, 0.0, DELTA_SLACK);
        }
        upper.record(n, dx.1, prev_dx.1, DELTA_SLACK);
        prev_dx = dx;

        let d2 = extremes(&x.delta2());
        second.record(n, (d2_lo - d2.0).max(d2.1 - d2_hi), 0.0, DELTA2_SLACK * kf * kf);

        if let Some(gamma) = cost.speed_limit() {
            flux.record_strict(n, max_speed, gamma);
        }

        for ai in &a_force {
            entropy_sum += ai.abs().powf(p_dual);
        }

        let tol = newton_tolerance(cost, energy, cfg, xp, x);
        let (res, bound) = euler_lagrange_residual(cost, energy, tau, tol, xp, x)?;
        euler.record(n, res, EL_FACTOR * bound, 0.0);
    }
    for (n, x) in states.iter().enumerate() {
        let drift = (x.a() - a).abs().max((x.b() - b).abs());
        pinned.record(n, drift, 0.0, 0.0);
    }

    let holder = holder_check(states, cost, tau, energies[0] - h_low);
    let entropy = match cost {
        CostModel::PPower { .. } => {
            let mut t = Tracker::new("entropy_bound");
            let rhs = energies[0] - h_low;
            t.record(states.len() - 1, tau * entropy_sum / kf, rhs, BOUND_SLACK * rhs.abs());
            t.finish()
        }
        CostModel::Relativistic { .. } => not_applicable("entropy_bound"),
    };

    let checks = vec![
        dissipation.finish(),
        estimate.finish(),
        if v_constant { minmax.finish() } else { not_applicable("dx_min_max_principle") },
        if cost.exponent() == 2.0 && matches!(cost, CostModel::PPower { .. }) {
            upper.finish()
        } else {
            not_applicable("dx_upper_bound")
        },
        if cost.speed_limit().is_some() && v_constant {
            second.finish()
        } else {
            not_applicable("d2x_principle")
        },
        if cost.speed_limit().is_some() { flux.finish() } else { not_applicable("flux_limit") },
        holder,
        entropy,
        euler.finish(),
        pinned.finish(),
    ];
    Ok(AuditReport { checks })
}

// (1/k) Σ_{i=0}^{k} |x^{m2}_i - x^{m1}_i| <= (t2 - t1 + τ)^{1/p'} α^{-1/p} (H0 - H_low)^{1/p}
fn holder_check(states: &[IdfVector], cost: &CostModel, tau: f64, budget: f64) -> InvariantCheck {
    let mut t = Tracker::new("holder_bound");
    let env = cost.growth_envelope();
    let p = env.p;
    let p_dual = p / (p - 1.0);
    let kf = states[0].k() as f64;
    let coef = env.alpha.powf(-1.0 / p) * budget.max(0.0).powf(1.0 / p);
    let idx = holder_indices(states.len());
    for (u, &m1) in idx.iter().enumerate() {
        for &m2 in &idx[u + 1..] {
            let lhs: f64 = states[m2]
                .values()
                .iter()
                .zip(states[m1].values())
                .map(|(p2, p1)| (p2 - p1).abs())
                .sum::<f64>()
                / kf;
            let span = (m2 - m1) as f64 * tau + tau;
            let rhs = span.powf(1.0 / p_dual) * coef;
            t.record(m2, lhs, rhs, BOUND_SLACK * rhs);
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Potential;
    use crate::grid::Density;
    use crate::jko::evolve;

    fn run(cost: CostModel, energy: &EnergyModel, steps: usize) -> (Trajectory, JkoConfig) {
        let x0 = IdfVector::from_density(&Density::Uniform { left: -0.3, right: 0.3 }, 40, -4.0, 4.0, 1e-3).unwrap();
        let cfg = JkoConfig::new(0.01, 0.01 * steps as f64).unwrap();
        (evolve(&cost, energy, &cfg, &x0, |_| {}).unwrap(), cfg)
    }

    #[test]
    fn stationary_trajectory_has_zero_violations() {
        // Dyadic spacing keeps every difference exact.
        let x = IdfVector::equispaced(-1.0, 1.0, 16).unwrap();
        let cfg = JkoConfig::new(0.125, 0.5).unwrap();
        let e = EnergyModel::boltzmann();
        for cost in [CostModel::p_power(7.0).unwrap(), CostModel::relativistic(1.0).unwrap()] {
            let tr = evolve(&cost, &e, &cfg, &x, |_| {}).unwrap();
            let rep = audit(&tr, &cost, &e, &cfg).unwrap();
            assert!(rep.passed(), "{rep}");
            for c in &rep.checks {
                assert_eq!(c.worst, 0.0, "{}", c.name);
            }
        }
    }

    #[test]
    fn scaled_runs_pass() {
        let e = EnergyModel::boltzmann();
        for cost in [
            CostModel::p_power(7.0).unwrap(),
            CostModel::p_power(2.0).unwrap(),
            CostModel::relativistic(1.0).unwrap(),
        ] {
            let (tr, cfg) = run(cost, &e, 20);
            let rep = audit(&tr, &cost, &e, &cfg).unwrap();
            assert!(rep.passed(), "{cost:?}\n{rep}");
        }
        let q = EnergyModel::new(5.0 / 3.0, Potential::Constant(0.0)).unwrap();
        let cost = CostModel::p_power(4.0 / 3.0).unwrap();
        let (tr, cfg) = run(cost, &q, 20);
        assert!(audit(&tr, &cost, &q, &cfg).unwrap().passed());
    }

    #[test]
    fn injected_energy_increase_is_located() {
        let e = EnergyModel::boltzmann();
        let cost = CostModel::p_power(2.0).unwrap();
        let (mut tr, cfg) = run(cost, &e, 10);
        tr.states[6] = tr.states[0].clone();
        let rep = audit(&tr, &cost, &e, &cfg).unwrap();
        let c = rep.get("energy_dissipation").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.step, 6);
        assert!(c.worst > 0.0);
        assert!(!rep.passed());
    }

    #[test]
    fn applicability() {
        let e = EnergyModel::new(1.0, Potential::quadratic(1.0, 0.5).unwrap()).unwrap();
        let cost = CostModel::relativistic(1.0).unwrap();
        let (tr, cfg) = run(cost, &e, 5);
        let rep = audit(&tr, &cost, &e, &cfg).unwrap();
        assert_eq!(rep.get("dx_min_max_principle").unwrap().status, Status::NotApplicable);
        assert_eq!(rep.get("d2x_principle").unwrap().status, Status::NotApplicable);
        assert_eq!(rep.get("entropy_bound").unwrap().status, Status::NotApplicable);
        assert_eq!(rep.get("flux_limit").unwrap().status, Status::Pass);
        assert_eq!(rep.checks.len(), INVARIANT_NAMES.len());
    }

    #[test]
    fn text_round_trip_and_determinism() {
        let e = EnergyModel::boltzmann();
        let cost = CostModel::p_power(7.0).unwrap();
        let (tr, cfg) = run(cost, &e, 5);
        let r1 = audit(&tr, &cost, &e, &cfg).unwrap();
        let r2 = audit(&tr, &cost, &e, &cfg).unwrap();
        assert_eq!(r1.to_text(), r2.to_text());
        assert_eq!(AuditReport::from_text(&r1.to_text()).unwrap(), r1);
    }

    #[test]
    fn mismatched_step_is_rejected() {
        let e = EnergyModel::boltzmann();
        let cost = CostModel::p_power(2.0).unwrap();
        let (tr, _) = run(cost, &e, 2);
        let other = JkoConfig::new(0.02, 0.04).unwrap();
        assert!(audit(&tr, &cost, &e, &other).is_err());
    }
}
