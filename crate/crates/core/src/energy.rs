//! Internal and potential energy.
//!
//! On the inverse-distribution side the internal energy density is
//! `h_X(s) = s h(1/s)`, evaluated on the difference quotients `δx_i` of the
//! state vector. For the Boltzmann entropy (`m = 1`) this is `-log s` up to an
//! additive constant that is dropped; for the Rényi family (`m > 1`) it is
//! `s^(1-m) / (m-1)`. In both cases `h_X'(s) = -s^(-m)`.

use crate::cost::INFEASIBLE;
use crate::error::{Error, Result};
use crate::grid::IdfVector;

const CONVEXITY_SAMPLES: usize = 1024;

/// A convex external potential `v` on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant(f64),
    /// `weight / 2 * (x - center)^2`, `weight >= 0`.
    Quadratic { weight: f64, center: f64 },
    /// `sum_j coefficients[j] * x^j`.
    Polynomial { coefficients: Vec<f64> },
}

impl Potential {
    pub fn quadratic(weight: f64, center: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite() && center.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "quadratic potential needs a finite weight >= 0, got {weight}"
            )));
        }
        Ok(Potential::Quadratic { weight, center })
    }

    /// Polynomial potential, checked for convexity by sampling `v''` on
    /// `[a, b]`.
    pub fn polynomial(coefficients: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        let pot = Potential::Polynomial { coefficients };
        pot.check_convex(a, b)?;
        Ok(pot)
    }

    /// Rejects potentials with a sampled `v'' < 0` on `[a, b]`.
    pub fn check_convex(&self, a: f64, b: f64) -> Result<()> {
        for i in 0..CONVEXITY_SAMPLES {
            let x = a + (b - a) * i as f64 / (CONVEXITY_SAMPLES - 1) as f64;
            let (_, _, v2) = self.eval(x);
            if v2 < -1e-12 * (1.0 + v2.abs()) {
                return Err(Error::InvalidModel(format!(
                    "potential is not convex on [{a}, {b}]: v''({x}) = {v2}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Potential::Constant(_) => true,
            Potential::Quadratic { weight, .. } => *weight == 0.0,
            Potential::Polynomial { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
        }
    }

    /// `(v(x), v'(x), v''(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Potential::Constant(c) => (*c, 0.0, 0.0),
            Potential::Quadratic { weight, center } => {
                let d = x - center;
                (0.5 * weight * d * d, weight * d, *weight)
            }
            Potential::Polynomial { coefficients } => {
                // Horner for the value and both derivatives at once.
                let (mut v, mut v1, mut v2) = (0.0, 0.0, 0.0);
                for &c in coefficients.iter().rev() {
                    v2 = v2 * x + 2.0 * v1;
                    v1 = v1 * x + v;
                    v = v * x + c;
                }
                (v, v1, v2)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// `max v''` over `[a, b]`, sampled.
    pub fn max_curvature(&self, a: f64, b: f64) -> f64 {
        (0..CONVEXITY_SAMPLES)
            .map(|i| self.eval(a + (b - a) * i as f64 / (CONVEXITY_SAMPLES - 1) as f64).2)
            .fold(0.0, f64::max)
    }

    /// `min v` over `[a, b]`. Exact for constant and quadratic potentials,
    /// sampled for polynomials.
    pub fn min_value(&self, a: f64, b: f64) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Quadratic { center, .. } => self.value(center.clamp(a, b)),
            Potential::Polynomial { .. } => (0..=4 * CONVEXITY_SAMPLES)
                .map(|i| self.value(a + (b - a) * i as f64 / (4 * CONVEXITY_SAMPLES) as f64))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Entropy exponent together with the external potential.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    m: f64,
    potential: Potential,
}

impl EnergyModel {
    pub fn new(m: f64, potential: Potential) -> Result<Self> {
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::InvalidModel(format!("entropy exponent m must be >= 1, got {m}")));
        }
        Ok(Self { m, potential })
    }

    /// Boltzmann entropy without potential.
    pub fn boltzmann() -> Self {
        Self {
            m: 1.0,
            potential: Potential::Constant(0.0),
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    #[inline]
    pub(crate) fn h_x_raw(&self, s: f64) -> f64 {
        if self.m == 1.0 {
            -s.ln()
        } else {
            s.powf(1.0 - self.m) / (self.m - 1.0)
        }
    }

    #[inline]
    pub(crate) fn dh_x_raw(&self, s: f64) -> f64 {
        if self.m == 1.0 {
            -1.0 / s
        } else {
            -s.powf(-self.m)
        }
    }

    #[inline]
    pub(crate) fn ddh_x_raw(&self, s: f64) -> f64 {
        if self.m == 1.0 {
            1.0 / (s * s)
        } else {
            self.m * s.powf(-self.m - 1.0)
        }
    }

    fn check_positive(function: &'static str, s: f64) -> Result<()> {
        if s > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                function,
                value: s,
                reason: "difference quotient must be positive",
            })
        }
    }

    /// `h_X(s)`.
    pub fn h_x(&self, s: f64) -> Result<f64> {
        Self::check_positive("h_x", s)?;
        Ok(self.h_x_raw(s))
    }

    /// `h_X'(s) = -s^(-m)`.
    pub fn dh_x(&self, s: f64) -> Result<f64> {
        Self::check_positive("dh_x", s)?;
        Ok(self.dh_x_raw(s))
    }

    /// `h_X''(s) = m s^(-m-1)`.
    pub fn ddh_x(&self, s: f64) -> Result<f64> {
        Self::check_positive("ddh_x", s)?;
        Ok(self.ddh_x_raw(s))
    }

    /// Discrete energy of a raw state vector; [`INFEASIBLE`] if any gap is
    /// not positive.
    pub fn energy_of(&self, values: &[f64]) -> f64 {
        let k = (values.len() - 1) as f64;
        let mut internal = 0.0;
        for w in values.windows(2) {
            let d = k * (w[1] - w[0]);
            if !(d > 0.0) {
                return INFEASIBLE;
            }
            internal += self.h_x_raw(d);
        }
        let external: f64 = values.iter().map(|&x| self.potential.value(x)).sum();
        (internal + external) / k
    }

    /// `H_m(x) = (1/k) Σ h_X(δx_i) + (1/k) Σ v(x_i)`.
    pub fn total_energy(&self, x: &IdfVector) -> f64 {
        self.energy_of(x.values())
    }

    /// Lower bound for the discrete energy on `[a, b]`: Jensen's inequality
    /// for the convex `h_X` gives `h_X(b - a)`, and each of the `k + 1`
    /// potential samples is at least `min v`.
    pub fn energy_lower_bound(&self, a: f64, b: f64, k: usize) -> f64 {
        let kf = k as f64;
        self.h_x_raw(b - a) + self.potential.min_value(a, b) * (kf + 1.0) / kf
    }
}
