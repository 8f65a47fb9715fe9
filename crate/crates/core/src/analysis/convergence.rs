use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cost::CostModel;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::{l1_density_distance, l1_idf_distance_any, Density, IdfVector};
use crate::jko::{evolve, JkoConfig, Trajectory};

/// A complete problem description: models, domain, initial density and
/// discretization.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cost: CostModel,
    pub energy: EnergyModel,
    pub a: f64,
    pub b: f64,
    pub init: Density,
    /// Weight of the uniform density blended into `init`.
    pub floor: f64,
    pub k: usize,
    pub tau: f64,
    pub t_end: f64,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
    pub min_gap: f64,
}

impl Scenario {
    /// Relativistic heat flow (`γ = 1`, `m = 1`, `v = 0`) on `[-4, 4]` from
    /// the uniform density on `[-0.3, 0.3]`, `k = 1000`, `τ = 0.01`,
    /// `T = 0.7`.
    pub fn relativistic_bump() -> Self {
        Self {
            cost: CostModel::Relativistic { gamma: 1.0 },
            energy: EnergyModel::boltzmann(),
            a: -4.0,
            b: 4.0,
            init: Density::Uniform { left: -0.3, right: 0.3 },
            floor: 1e-3,
            k: 1000,
            tau: 0.01,
            t_end: 0.7,
            newton_tol: None,
            newton_max_iter: 200,
            min_gap: 0.0,
        }
    }

    pub fn with_grid(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn initial_state(&self) -> Result<IdfVector> {
        IdfVector::from_density(&self.init, self.k, self.a, self.b, self.floor)
    }

    pub fn config(&self) -> Result<JkoConfig> {
        let cfg = JkoConfig {
            tau: self.tau,
            t_end: self.t_end,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            armijo_shrink: 0.5,
            min_gap: self.min_gap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run(&self) -> Result<Trajectory> {
        evolve(&self.cost, &self.energy, &self.config()?, &self.initial_state()?, |_| {})
    }

    pub fn final_state(&self) -> Result<IdfVector> {
        Ok(self.run()?.last().clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Levels are grid sizes `k`; the mesh width is `1/k`.
    Grid,
    /// Levels are time steps `τ`.
    Timestep,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Grid => "grid",
            Axis::Timestep => "timestep",
        }
    }

    /// Discretization parameter `h` against which errors are fitted.
    pub fn width(self, level: f64) -> f64 {
        match self {
            Axis::Grid => 1.0 / level,
            Axis::Timestep => level,
        }
    }

    fn scenario_at(self, base: &Scenario, level: f64) -> Result<Scenario> {
        match self {
            Axis::Grid => {
                if !(level >= 2.0 && level.fract() == 0.0) {
                    return Err(Error::Config(format!("grid level must be an integer >= 2, got {level}")));
                }
                Ok(base.with_grid(level as usize))
            }
            Axis::Timestep => Ok(base.with_tau(level)),
        }
    }

    fn finer(self, a: f64, b: f64) -> bool {
        self.width(a) < self.width(b)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Axis::Grid),
            "timestep" => Ok(Axis::Timestep),
            other => Err(Error::Config(format!("axis must be grid or timestep, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub level: f64,
    pub err_idf: f64,
    pub err_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub axis: Axis,
    pub reference: f64,
    /// Levels from coarse to fine.
    pub levels: Vec<LevelError>,
    /// Least-squares slope of `log err_idf` against `log h`.
    pub fitted_slope: f64,
    /// The same for `err_density`.
    pub density_slope: f64,
    pub warnings: Vec<String>,
}

impl ConvergenceResult {
    /// `axis,level,err_idf,err_density` with one row per level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,level,err_idf,err_density\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                self.axis, l.level, l.err_idf, l.err_density
            ));
        }
        out
    }

    /// Number of consecutive level pairs whose IDF error does not increase
    /// under refinement, and the number of pairs.
    pub fn monotone_pairs(&self) -> (usize, usize) {
        let pairs = self.levels.windows(2);
        let total = pairs.len();
        let good = self.levels.windows(2).filter(|w| w[1].err_idf <= w[0].err_idf).count();
        (good, total)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves `scenario` at every level and at `reference`, in parallel, and
/// fits the order of the final-time L1 errors against the reference.
///
/// Levels with zero error are excluded from the fit with a warning.
pub fn convergence_study(axis: Axis, scenario: &Scenario, levels: &[f64], reference: f64) -> Result<ConvergenceResult> {
    if levels.is_empty() {
        return Err(Error::Config("convergence study needs at least one level".into()));
    }
    for &l in levels {
        if !axis.finer(reference, l) && l != reference {
            return Err(Error::Config(format!(
                "reference level {reference} is not finer than level {l}"
            )));
        }
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(|a, b| axis.width(*b).total_cmp(&axis.width(*a)));
    sorted.dedup();
    let mut jobs = sorted.clone();
    jobs.push(reference);
    let scenarios = jobs
        .iter()
        .map(|&l| axis.scenario_at(scenario, l))
        .collect::<Result<Vec<_>>>()?;
    for s in &scenarios {
        s.config()?;
    }
    let mut finals: Vec<IdfVector> = scenarios
        .par_iter()
        .map(|s| s.final_state())
        .collect::<Result<Vec<_>>>()?;
    let reference_state = finals.pop().expect("reference job");

    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(sorted.len());
    let (mut hs, mut e_idf, mut e_den) = (Vec::new(), Vec::new(), Vec::new());
    for (&level, x) in sorted.iter().zip(&finals) {
        let err_idf = l1_idf_distance_any(x, &reference_state);
        let err_density = l1_density_distance(x, &reference_state);
        if err_idf > 0.0 && err_density > 0.0 {
            hs.push(axis.width(level).ln());
            e_idf.push(err_idf.ln());
            e_den.push(err_density.ln());
        } else {
            warnings.push(format!("level {level} has zero error against the reference and is excluded from the fit"));
        }
        rows.push(LevelError {
            level,
            err_idf,
            err_density,
        });
    }
    if hs.len() < 2 {
        warnings.push("fewer than two levels with nonzero error; slope undefined".into());
    }
    Ok(ConvergenceResult {
        axis,
        reference,
        levels: rows,
        fitted_slope: fit_slope(&hs, &e_idf),
        density_slope: fit_slope(&hs, &e_den),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = [0.1_f64, 0.05, 0.025].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [0.1_f64, 0.05, 0.025].iter().map(|v| (3.0 * v * v).ln()).collect();
        assert!((fit_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert!(fit_slope(&xs[..1], &ys[..1]).is_nan());
    }

    #[test]
    fn axis_parsing_and_widths() {
        assert_eq!("grid".parse::<Axis>().unwrap(), Axis::Grid);
        assert_eq!("timestep".parse::<Axis>().unwrap(), Axis::Timestep);
        assert!("space".parse::<Axis>().is_err());
        assert_eq!(Axis::Grid.width(50.0), 0.02);
        assert!(Axis::Grid.finer(100.0, 50.0));
        assert!(Axis::Timestep.finer(0.01, 0.02));
    }

    fn small() -> Scenario {
        Scenario {
            t_end: 0.1,
            ..Scenario::relativistic_bump()
        }
    }

    #[test]
    fn identical_level_is_excluded() {
        let s = small();
        let r = convergence_study(Axis::Grid, &s, &[40.0], 40.0).unwrap();
        assert_eq!(r.levels[0].err_idf, 0.0);
        assert!(!r.warnings.is_empty());
        assert!(r.fitted_slope.is_nan());
    }

    #[test]
    fn coarse_reference_is_rejected() {
        assert!(convergence_study(Axis::Grid, &small(), &[40.0, 80.0], 60.0).is_err());
        assert!(convergence_study(Axis::Timestep, &small(), &[0.02], 0.05).is_err());
        assert!(convergence_study(Axis::Grid, &small(), &[], 60.0).is_err());
    }

    #[test]
    fn levels_are_sorted_coarse_to_fine() {
        let r = convergence_study(Axis::Grid, &small(), &[40.0, 20.0], 80.0).unwrap();
        assert_eq!(r.levels[0].level, 20.0);
        assert!(r.to_csv().starts_with("axis,level,err_idf,err_density\ngrid,2.0000000000000000e1,"));
    }
}
