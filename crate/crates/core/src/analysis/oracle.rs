use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostModel, INFEASIBLE};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::IdfVector;
use crate::jko::phi_raw;

/// Largest grid size accepted by the brute-force oracle.
pub const ORACLE_MAX_K: usize = 6;
pub const ORACLE_STARTS: usize = 20;
const SWEEP_DECREASE: f64 = 1e-12;
const MAX_SWEEPS: usize = 20_000;
const GOLDEN_ITERS: usize = 90;
const SEED: u64 = 0x5eed_0fac1e;

/// Result of the multi-start search.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best: IdfVector,
    pub value: f64,
    /// Every start's final point.
    pub finals: Vec<Vec<f64>>,
    /// Largest sup-norm distance between two final points.
    pub spread: f64,
}

/// Minimizes `Φ` by coordinate-wise golden-section search, independently of
/// any derivative. Returns the best of [`ORACLE_STARTS`] seeded random
/// feasible starts.
pub fn brute_force_step(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector) -> Result<IdfVector> {
    Ok(brute_force_detailed(cost, energy, tau, x_prev)?.best)
}

pub fn brute_force_detailed(cost: &CostModel, energy: &EnergyModel, tau: f64, x_prev: &IdfVector) -> Result<OracleResult> {
    let k = x_prev.k();
    if k > ORACLE_MAX_K {
        return Err(Error::InvalidModel(format!(
            "brute-force oracle supports k <= {ORACLE_MAX_K}, got {k}"
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be > 0, got {tau}")));
    }
    let f = |x: &[f64]| phi_raw(cost, energy, tau, x_prev, x);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut finals = Vec::with_capacity(ORACLE_STARTS);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..ORACLE_STARTS {
        let mut x = random_start(cost, tau, x_prev, &mut rng, &f);
        let mut value = f(&x);
        for _ in 0..MAX_SWEEPS {
            let start = value;
            for j in 1..k {
                let (lo, hi) = window(cost, tau, x_prev, &x, j);
                let (t, v) = golden(|t| {
                    let mut y = x.clone();
                    y[j] = t;
                    f(&y)
                }, lo, hi);
                if v <= value {
                    x[j] = t;
                    value = v;
                }
            }
            if start - value < SWEEP_DECREASE {
                break;
            }
        }
        let value = f(&x);
        if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
            best = Some((value, x.clone()));
        }
        finals.push(x);
    }
    let (value, x) = best.expect("at least one start");
    let mut spread = 0.0_f64;
    for (u, p) in finals.iter().enumerate() {
        for q in &finals[u + 1..] {
            for (a, b) in p.iter().zip(q) {
                spread = spread.max((a - b).abs());
            }
        }
    }
    Ok(OracleResult {
        best: IdfVector::new(x)?,
        value,
        finals,
        spread,
    })
}

// Open interval of feasible values for coordinate j with the others fixed.
fn window(cost: &CostModel, tau: f64, x_prev: &IdfVector, x: &[f64], j: usize) -> (f64, f64) {
    let mut lo = x[j - 1];
    let mut hi = x[j + 1];
    if let Some(gamma) = cost.speed_limit() {
        let c = x_prev.values()[j];
        lo = lo.max(c - gamma * tau);
        hi = hi.min(c + gamma * tau);
    }
    (lo, hi)
}

fn random_start(
    cost: &CostModel,
    tau: f64,
    x_prev: &IdfVector,
    rng: &mut ChaCha8Rng,
    f: &impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let (a, b) = (x_prev.a(), x_prev.b());
    let k = x_prev.k();
    let mut width = 1.0;
    for attempt in 1.. {
        if attempt % 1000 == 0 {
            width *= 0.5;
        }
        let mut x: Vec<f64> = match cost.speed_limit() {
            None => {
                let mut inner: Vec<f64> = (1..k).map(|_| rng.gen_range(a..b)).collect();
                inner.sort_by(f64::total_cmp);
                std::iter::once(a).chain(inner).chain(std::iter::once(b)).collect()
            }
            Some(gamma) => {
                let w = width * gamma * tau;
                x_prev.values().iter().map(|&c| c + rng.gen_range(-w..w)).collect()
            }
        };
        x[0] = a;
        x[k] = b;
        if f(&x) < INFEASIBLE {
            return x;
        }
    }
    unreachable!()
}

// Golden-section minimization of a unimodal function on the open interval
// (lo, hi).
fn golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
