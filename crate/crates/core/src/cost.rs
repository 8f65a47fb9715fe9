//! Transport costs.
//!
//! Two families are supported: the p-Wasserstein cost `c(s) = |s|^p / p` and
//! the relativistic (flux-limiting) cost
//!
//! ```text
//! c(s) = γ (1 - sqrt(1 - (s/γ)^2))   for |s| <= γ
//!        +inf                        otherwise
//! ```
//!
//! Besides `c` itself the solver needs `c'`, `c''` and the derivative of the
//! Legendre dual `(c*)' = (c')^{-1}`, which maps the discrete driving force to
//! a velocity.

use crate::error::{Error, Result};

/// Value returned for an infinite cost or energy.
pub const INFEASIBLE: f64 = f64::INFINITY;

/// A convex, even transport cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// `c(s) = |s|^p / p`, `p > 1`.
    PPower { p: f64 },
    /// Flux-limiting cost, finite exactly on `[-gamma, gamma]`.
    Relativistic { gamma: f64 },
}

/// Constants `alpha, beta` with `alpha |s|^p <= s c'(s) <= beta |s|^p` for
/// `|s| <= s_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEnvelope {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// Half-width of the interval on which the bounds hold; infinite for the
    /// p-Wasserstein family.
    pub s_max: f64,
}

impl CostModel {
    pub fn p_power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidModel(format!("cost exponent p must be > 1, got {p}")));
        }
        Ok(CostModel::PPower { p })
    }

    pub fn relativistic(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidModel(format!("speed limit gamma must be > 0, got {gamma}")));
        }
        Ok(CostModel::Relativistic { gamma })
    }

    /// Speed limit of a flux-limiting cost.
    pub fn speed_limit(&self) -> Option<f64> {
        match *self {
            CostModel::PPower { .. } => None,
            CostModel::Relativistic { gamma } => Some(gamma),
        }
    }

    /// Growth exponent: `p` for the power family, 2 for the relativistic cost.
    pub fn exponent(&self) -> f64 {
        match *self {
            CostModel::PPower { p } => p,
            CostModel::Relativistic { .. } => 2.0,
        }
    }

    /// Hölder conjugate `p' = p / (p - 1)` of [`CostModel::exponent`].
    pub fn conjugate_exponent(&self) -> f64 {
        let p = self.exponent();
        p / (p - 1.0)
    }

    /// `c(s)`, or [`INFEASIBLE`] outside the domain of a flux-limiting cost.
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            CostModel::PPower { p } => s.abs().powf(p) / p,
            CostModel::Relativistic { gamma } => {
                let u = s / gamma;
                if u.abs() > 1.0 {
                    INFEASIBLE
                } else {
                    // 1 - sqrt(1 - u^2) written without cancellation
                    let u2 = u * u;
                    gamma * u2 / (1.0 + (1.0 - u2).sqrt())
                }
            }
        }
    }

    /// `c'(s)`. Fails with a domain error when `|s| >= gamma` for the
    /// relativistic cost.
    pub fn prime(&self, s: f64) -> Result<f64> {
        match *self {
            CostModel::PPower { p } => Ok(s.abs().powf(p - 1.0).copysign(s)),
            CostModel::Relativistic { gamma } => {
                let u = s / gamma;
                if !(u.abs() < 1.0) {
                    return Err(Error::Domain {
                        function: "cost_prime",
                        value: s,
                        reason: "|s| >= gamma",
                    });
                }
                Ok(u / (1.0 - u * u).sqrt())
            }
        }
    }

    /// `c''(s)`. For `p < 2` the second derivative blows up at the origin and
    /// `s = 0` is rejected.
    pub fn second(&self, s: f64) -> Result<f64> {
        match *self {
            CostModel::PPower { p } => {
                if p < 2.0 && s == 0.0 {
                    return Err(Error::Domain {
                        function: "cost_second",
                        value: s,
                        reason: "c'' is unbounded at 0 for p < 2",
                    });
                }
                if p == 2.0 {
                    Ok(1.0)
                } else {
                    Ok((p - 1.0) * s.abs().powf(p - 2.0))
                }
            }
            CostModel::Relativistic { gamma } => {
                let u = s / gamma;
                if !(u.abs() < 1.0) {
                    return Err(Error::Domain {
                        function: "cost_second",
                        value: s,
                        reason: "|s| >= gamma",
                    });
                }
                let w = 1.0 - u * u;
                Ok(1.0 / (gamma * w * w.sqrt()))
            }
        }
    }

    /// `(c*)'(r)`, the inverse of `c'`. Total on the real line.
    pub fn dual_prime(&self, r: f64) -> f64 {
        match *self {
            CostModel::PPower { p } => r.abs().powf(1.0 / (p - 1.0)).copysign(r),
            CostModel::Relativistic { gamma } => gamma * (r / 1.0_f64.hypot(r)),
        }
    }

    /// `(c*)''(r) = 1 / c''((c*)'(r))`.
    pub fn dual_second(&self, r: f64) -> f64 {
        match *self {
            CostModel::PPower { p } => {
                let q = 1.0 / (p - 1.0);
                if q == 1.0 {
                    1.0
                } else {
                    q * r.abs().powf(q - 1.0)
                }
            }
            CostModel::Relativistic { gamma } => {
                let w = 1.0_f64.hypot(r);
                gamma / (w * w * w)
            }
        }
    }

    /// `s c'(s)`, the quantity bounded by the growth envelope. Infinite where
    /// the cost is.
    pub fn dissipation(&self, s: f64) -> f64 {
        match self.prime(s) {
            Ok(d) => s * d,
            Err(_) => INFEASIBLE,
        }
    }

    /// Growth constants on the natural domain: global for the power family,
    /// `|s| <= 0.9 gamma` for the relativistic cost.
    pub fn growth_envelope(&self) -> GrowthEnvelope {
        match *self {
            CostModel::PPower { .. } => self.growth_envelope_within(f64::INFINITY),
            CostModel::Relativistic { gamma } => self.growth_envelope_within(0.9 * gamma),
        }
    }

    /// Growth constants valid on `|s| <= s_max`. For the relativistic cost
    /// `s_max` is clamped below `gamma`; the lower constant `1/gamma` holds
    /// on the whole domain while the upper one degenerates at the edge.
    pub fn growth_envelope_within(&self, s_max: f64) -> GrowthEnvelope {
        match *self {
            CostModel::PPower { p } => GrowthEnvelope {
                alpha: 1.0,
                beta: 1.0,
                p,
                s_max: f64::INFINITY,
            },
            CostModel::Relativistic { gamma } => {
                let s_max = s_max.abs().min(gamma * (1.0 - 1e-12));
                let u = s_max / gamma;
                GrowthEnvelope {
                    alpha: 1.0 / gamma,
                    beta: 1.0 / (gamma * (1.0 - u * u).sqrt()),
                    p: 2.0,
                    s_max,
                }
            }
        }
    }

    /// Global lower bound on `c''`, when one exists (p = 2 and the
    /// relativistic cost).
    pub fn min_curvature(&self) -> Option<f64> {
        match *self {
            CostModel::PPower { p } if p == 2.0 => Some(1.0),
            CostModel::PPower { .. } => None,
            CostModel::Relativistic { gamma } => Some(1.0 / gamma),
        }
    }
}
