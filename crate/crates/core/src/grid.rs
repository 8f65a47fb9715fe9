//! State vectors, difference quotients and densities.
//!
//! A state `x = (a = x_0 < x_1 < ... < x_k = b)` encodes a piecewise constant
//! inverse distribution function on the uniform mass grid `i/k`: cell `i` of
//! the mass interval carries the value `x_i`, and the density recovered from
//! `x` is `1 / (k (x_{i+1} - x_i))` on `(x_i, x_{i+1})`.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Strictly increasing state vector with pinned endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfVector {
    values: Vec<f64>,
}

impl IdfVector {
    /// Builds a state from its full coordinate list; the endpoints are taken
    /// from the first and last entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Infeasible {
                index: bad,
                reason: "non-finite coordinate",
            });
        }
        if let Some(i) = values.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Infeasible {
                index: i,
                reason: "coordinates must be strictly increasing",
            });
        }
        Ok(Self { values })
    }

    /// Builds a state on `[a, b]` from its `k - 1` interior coordinates.
    pub fn from_interior(a: f64, b: f64, interior: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(a);
        values.extend_from_slice(interior);
        values.push(b);
        Self::new(values)
    }

    /// `x_i = a + (b - a) i / k`, the state of the uniform density.
    pub fn equispaced(a: f64, b: f64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidModel(format!("k must be >= 2, got {k}")));
        }
        let mut values: Vec<f64> = (0..=k).map(|i| a + (b - a) * (i as f64 / k as f64)).collect();
        values[k] = b;
        Self::new(values)
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[1] > w[0]));
        Self { values }
    }

    /// Number of mass cells.
    pub fn k(&self) -> usize {
        self.values.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.values[0]
    }

    pub fn b(&self) -> f64 {
        self.values[self.k()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.k()]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Forward difference quotients `δx_i = k (x_{i+1} - x_i)`, `i = 0..k`.
    pub fn delta(&self) -> Vec<f64> {
        delta_of(&self.values)
    }

    /// Second symmetric difference quotients
    /// `δ²x_i = k² (x_{i+1} - 2 x_i + x_{i-1})`, `i = 1..k`.
    pub fn delta2(&self) -> Vec<f64> {
        let k = self.k() as f64;
        self.values
            .windows(3)
            .map(|w| k * k * ((w[2] - w[1]) - (w[1] - w[0])))
            .collect()
    }

    /// The piecewise constant density encoded by this state.
    pub fn to_density(&self) -> PiecewiseDensity {
        let k = self.k() as f64;
        let cell_values = self.values.windows(2).map(|w| 1.0 / (k * (w[1] - w[0]))).collect();
        PiecewiseDensity {
            breakpoints: self.values.clone(),
            cell_values,
        }
    }

    /// Quantile initialization from a density on `[a, b]`.
    ///
    /// The density is blended with a uniform density of total mass `floor`
    /// and renormalized, then `x_i` is the smallest point where the blended
    /// cumulative distribution reaches `i / k`.
    pub fn from_density(density: &Density, k: usize, a: f64, b: f64, floor: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidModel(format!("k must be >= 2, got {k}")));
        }
        if !(a < b) {
            return Err(Error::InvalidDensity(format!("empty domain [{a}, {b}]")));
        }
        if !(0.0..1.0).contains(&floor) {
            return Err(Error::InvalidDensity(format!("floor must lie in [0, 1), got {floor}")));
        }
        let cdf = Cdf::new(density, a, b)?;
        let total = 1.0 + floor;
        let blended = |x: f64| (cdf.eval(x) + floor * (x - a) / (b - a)) / total;

        let mut values = Vec::with_capacity(k + 1);
        values.push(a);
        for i in 1..k {
            let target = i as f64 / k as f64;
            // Smallest x with blended(x) >= target, by bisection down to
            // adjacent floating point numbers.
            let (mut lo, mut hi) = (values[i - 1], b);
            while hi - lo > 1e-15 * (b - a) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if blended(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            values.push(hi);
        }
        values.push(b);
        Self::new(values)
    }
}

pub(crate) fn delta_of(values: &[f64]) -> Vec<f64> {
    let k = (values.len() - 1) as f64;
    values.windows(2).map(|w| k * (w[1] - w[0])).collect()
}

/// `(1/k) Σ_{i=0}^{k} |x_i - y_i|` for states on the same mass grid.
pub fn l1_idf_distance(x: &IdfVector, y: &IdfVector) -> Result<f64> {
    if x.k() != y.k() {
        return Err(Error::DimensionMismatch {
            expected: x.k(),
            found: y.k(),
        });
    }
    let k = x.k() as f64;
    Ok(x.values.iter().zip(&y.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / k)
}

/// Exact `∫_0^1 |X(ξ) - Y(ξ)| dξ` for the piecewise constant inverse
/// distribution functions of two states with possibly different `k`.
/// Coincides with [`l1_idf_distance`] when both share `k` and the endpoints.
pub fn l1_idf_distance_any(x: &IdfVector, y: &IdfVector) -> f64 {
    let (kx, ky) = (x.k(), y.k());
    // Merge the mass grids i/kx and j/ky. Comparing i*ky against j*kx keeps
    // the merge exact.
    let (mut i, mut j) = (0usize, 0usize);
    let mut last = 0.0;
    let mut acc = 0.0;
    while i < kx && j < ky {
        let next_x = (i + 1) * ky;
        let next_y = (j + 1) * kx;
        let edge = next_x.min(next_y) as f64 / (kx * ky) as f64;
        acc += (x.values[i] - y.values[j]).abs() * (edge - last);
        last = edge;
        match next_x.cmp(&next_y) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Exact L1 distance between the piecewise constant densities of two states
/// on a common domain.
pub fn l1_density_distance(x: &IdfVector, y: &IdfVector) -> f64 {
    x.to_density().l1_distance(&y.to_density())
}

/// Piecewise constant density on a partition of `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    pub breakpoints: Vec<f64>,
    pub cell_values: Vec<f64>,
}

impl PiecewiseDensity {
    /// Total mass, summed with Neumaier compensation.
    pub fn mass(&self) -> f64 {
        let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
        for (w, u) in self.breakpoints.windows(2).zip(&self.cell_values) {
            let term = u * (w[1] - w[0]);
            let t = sum + term;
            comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
        }
        sum + comp
    }

    /// Value on the cell containing `x`; zero outside the partition.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.cell_values.len();
        if !(x >= self.breakpoints[0] && x <= self.breakpoints[n]) {
            return 0.0;
        }
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        self.cell_values[idx.saturating_sub(1).min(n - 1)]
    }

    /// Exact L1 distance, computed on the merged breakpoint partition.
    /// Points outside either partition count as zero density.
    pub fn l1_distance(&self, other: &PiecewiseDensity) -> f64 {
        let mut edges: Vec<f64> = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let (mut i, mut j) = (0usize, 0usize);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let u = cell_value_advancing(self, &mut i, mid);
            let v = cell_value_advancing(other, &mut j, mid);
            acc += (u - v).abs() * (hi - lo);
        }
        acc
    }
}

// Monotone cursor lookup used by the merged-partition sweep.
fn cell_value_advancing(d: &PiecewiseDensity, cursor: &mut usize, x: f64) -> f64 {
    let n = d.cell_values.len();
    if x < d.breakpoints[0] || x > d.breakpoints[n] {
        return 0.0;
    }
    while *cursor + 1 < n && d.breakpoints[*cursor + 1] <= x {
        *cursor += 1;
    }
    d.cell_values[*cursor]
}

/// A probability density to initialize from.
#[derive(Clone)]
pub enum Density {
    /// Uniform on `[left, right]`.
    Uniform { left: f64, right: f64 },
    /// Piecewise constant with `values[i]` on `(breakpoints[i], breakpoints[i+1])`.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    /// Piecewise linear interpolation of samples `(x[i], u[i])`; zero outside
    /// `[x[0], x[n-1]]`.
    Tabulated { x: Vec<f64>, u: Vec<f64> },
    /// Arbitrary nonnegative function supported on `[left, right]`,
    /// integrated with the cumulative trapezoid rule on `samples` points.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        left: f64,
        right: f64,
        samples: usize,
    },
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Density::Uniform { left, right } => write!(f, "Uniform[{left}, {right}]"),
            Density::Piecewise { breakpoints, .. } => write!(f, "Piecewise({} cells)", breakpoints.len() - 1),
            Density::Tabulated { x, .. } => write!(f, "Tabulated({} samples)", x.len()),
            Density::Function { left, right, .. } => write!(f, "Function[{left}, {right}]"),
        }
    }
}

impl From<&PiecewiseDensity> for Density {
    fn from(d: &PiecewiseDensity) -> Self {
        Density::Piecewise {
            breakpoints: d.breakpoints.clone(),
            values: d.cell_values.clone(),
        }
    }
}

// Normalized cumulative distribution of a `Density`, piecewise linear or
// piecewise quadratic in x depending on the variant.
struct Cdf {
    // Knots with cumulative mass at each knot and density at both ends of
    // each segment (linear density within a segment).
    knots: Vec<f64>,
    mass: Vec<f64>,
    left_u: Vec<f64>,
    right_u: Vec<f64>,
}

impl Cdf {
    fn new(density: &Density, a: f64, b: f64) -> Result<Self> {
        let (knots, left_u, right_u): (Vec<f64>, Vec<f64>, Vec<f64>) = match density {
            Density::Uniform { left, right } => {
                if !(left < right) {
                    return Err(Error::InvalidDensity(format!("empty support [{left}, {right}]")));
                }
                (vec![*left, *right], vec![1.0], vec![1.0])
            }
            Density::Piecewise { breakpoints, values } => {
                if breakpoints.len() != values.len() + 1 {
                    return Err(Error::DimensionMismatch {
                        expected: values.len() + 1,
                        found: breakpoints.len(),
                    });
                }
                (breakpoints.clone(), values.clone(), values.clone())
            }
            Density::Tabulated { x, u } => {
                if x.len() != u.len() || x.len() < 2 {
                    return Err(Error::InvalidDensity(format!(
                        "tabulated density needs >= 2 matching samples, got {} and {}",
                        x.len(),
                        u.len()
                    )));
                }
                (x.clone(), u[..u.len() - 1].to_vec(), u[1..].to_vec())
            }
            Density::Function { f, left, right, samples } => {
                let n = (*samples).max(2);
                let knots: Vec<f64> = (0..n).map(|i| left + (right - left) * i as f64 / (n - 1) as f64).collect();
                let u: Vec<f64> = knots.iter().map(|&x| f(x)).collect();
                (knots, u[..n - 1].to_vec(), u[1..].to_vec())
            }
        };
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDensity("breakpoints must be strictly increasing".into()));
        }
        let tol = 1e-12 * (b - a);
        if knots[0] < a - tol || knots[knots.len() - 1] > b + tol {
            return Err(Error::InvalidDensity(format!(
                "support [{}, {}] is not inside [{a}, {b}]",
                knots[0],
                knots[knots.len() - 1]
            )));
        }
        if left_u.iter().chain(&right_u).any(|&u| !(u >= 0.0 && u.is_finite())) {
            return Err(Error::InvalidDensity("density values must be finite and nonnegative".into()));
        }
        let mut mass = Vec::with_capacity(knots.len());
        mass.push(0.0);
        for (i, w) in knots.windows(2).enumerate() {
            let m = mass[i] + 0.5 * (left_u[i] + right_u[i]) * (w[1] - w[0]);
            mass.push(m);
        }
        let total = mass[mass.len() - 1];
        if !(total > 0.0) {
            return Err(Error::InvalidDensity("density has zero mass".into()));
        }
        let scale = 1.0 / total;
        for m in &mut mass {
            *m *= scale;
        }
        let left_u = left_u.into_iter().map(|u| u * scale).collect();
        let right_u = right_u.into_iter().map(|u| u * scale).collect();
        Ok(Self {
            knots,
            mass,
            left_u,
            right_u,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[n - 1] {
            return 1.0;
        }
        let seg = self.knots.partition_point(|&k| k <= x) - 1;
        let (x0, x1) = (self.knots[seg], self.knots[seg + 1]);
        let t = x - x0;
        let slope = (self.right_u[seg] - self.left_u[seg]) / (x1 - x0);
        self.mass[seg] + self.left_u[seg] * t + 0.5 * slope * t * t
    }
}
