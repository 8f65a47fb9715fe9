//! Experiment drivers behind the `lagflow` binary: configuration files,
//! solve/converge/audit runs and their CSV output.

mod config;
pub mod io;

use std::path::{Path, PathBuf};

pub use config::{ladder, parse_config, InitSpec, RunConfig, LADDER_EXPONENT_STEP, LADDER_START};

use crate::analysis::{audit, convergence_study, AuditReport, Axis, ConvergenceResult};
use crate::error::{Error, Result};
use crate::jko::{evolve, Trajectory};

/// Environment variable overriding the configured output directory.
pub const OUTPUT_ENV: &str = "LAGFLOW_OUT";
/// Accepted range of fitted convergence orders.
pub const SLOPE_BAND: (f64, f64) = (0.7, 1.3);

pub const CONFIG_COPY: &str = "config.cfg";
pub const CHARACTERISTICS_FILE: &str = "characteristics.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const AUDIT_FILE: &str = "audit.txt";
pub const PLOT_FILE: &str = "plot.gp";

/// Reads and parses a configuration file. Returns the directory containing
/// it, against which relative input paths are resolved.
pub fn load_config(path: &Path) -> Result<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// `$LAGFLOW_OUT` when set, otherwise the configured directory.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output.clone())
}

pub fn density_file(n: usize) -> String {
    format!("density_{n:06}.csv")
}

pub fn idf_file(n: usize) -> String {
    format!("idf_{n:06}.csv")
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub dir: PathBuf,
    pub trajectory: Trajectory,
    pub audit: AuditReport,
    /// Step indices with density and IDF snapshots.
    pub snapshot_steps: Vec<usize>,
}

impl SolveOutcome {
    pub fn passed(&self) -> bool {
        self.audit.passed()
    }
}

/// Solves, audits and writes every output file into [`output_dir`].
pub fn run_solve(cfg: &RunConfig, base: &Path) -> Result<SolveOutcome> {
    run_solve_in(cfg, base, &output_dir(cfg))
}

pub fn run_solve_in(cfg: &RunConfig, base: &Path, out: &Path) -> Result<SolveOutcome> {
    let scenario = cfg.scenario(base)?;
    let jko = cfg.jko()?;
    let x0 = scenario.initial_state()?;
    let trajectory = evolve(&scenario.cost, &scenario.energy, &jko, &x0, |_| {})?;
    let report = audit(&trajectory, &scenario.cost, &scenario.energy, &jko)?;

    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let mut snapshot_steps = vec![0];
    snapshot_steps.extend(cfg.snapshot_steps().into_iter().filter(|&n| n > 0));
    let mut plotted = Vec::new();
    for &n in &snapshot_steps {
        let x = &trajectory.states[n];
        io::write_density(&out.join(density_file(n)), x)?;
        io::write_idf(&out.join(idf_file(n)), x)?;
        plotted.push((trajectory.time(n), density_file(n)));
    }
    io::write_characteristics(&out.join(CHARACTERISTICS_FILE), cfg.tau, &trajectory.states)?;
    io::write_diagnostics(&out.join(DIAGNOSTICS_FILE), cfg.tau, &trajectory.reports)?;
    write_text(&out.join(AUDIT_FILE), &report.to_text())?;
    write_text(&out.join(CONFIG_COPY), &cfg.to_text())?;
    write_text(&out.join(PLOT_FILE), &io::plot_script(&plotted, cfg.cost.speed_limit()))?;
    Ok(SolveOutcome {
        dir: out.to_path_buf(),
        trajectory,
        audit: report,
        snapshot_steps,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Re-audits a directory written by [`run_solve`] from its configuration
/// copy and characteristics file.
pub fn run_audit(dir: &Path) -> Result<AuditReport> {
    let (cfg, _) = load_config(&dir.join(CONFIG_COPY))?;
    let (times, states) = io::read_characteristics(&dir.join(CHARACTERISTICS_FILE))?;
    for (n, t) in times.iter().enumerate() {
        if (t - n as f64 * cfg.tau).abs() > 1e-9 * cfg.tau.max(*t) {
            return Err(Error::InvalidModel(format!(
                "state {n} is stamped t = {t}, expected {}",
                n as f64 * cfg.tau
            )));
        }
    }
    let jko = cfg.jko()?;
    if states.len() != jko.steps() + 1 {
        return Err(Error::InvalidModel(format!(
            "expected {} states, found {}",
            jko.steps() + 1,
            states.len()
        )));
    }
    let trajectory = Trajectory {
        tau: cfg.tau,
        states,
        reports: Vec::new(),
    };
    audit(&trajectory, &cfg.cost, &cfg.energy(), &jko)
}

#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub result: ConvergenceResult,
    pub csv: PathBuf,
}

impl ConvergenceOutcome {
    /// True when the IDF error order lies in [`SLOPE_BAND`].
    pub fn passed(&self) -> bool {
        let s = self.result.fitted_slope;
        s >= SLOPE_BAND.0 && s <= SLOPE_BAND.1
    }
}

pub fn run_convergence(
    cfg: &RunConfig,
    base: &Path,
    axis: Axis,
    levels: &[f64],
    reference: f64,
    out: &Path,
) -> Result<ConvergenceOutcome> {
    if levels.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two levels".into()));
    }
    let result = convergence_study(axis, &cfg.scenario(base)?, levels, reference)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let csv = out.join(format!("convergence_{axis}.csv"));
    io::write_convergence(&csv, axis, &result.levels)?;
    Ok(ConvergenceOutcome { result, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "a = -4\nb = 4\nk = 40\ntau = 0.01\nt_end = 0.1\ncost = relativistic\ngamma = 1\n\
                         init = uniform\ninit_support = -0.3, 0.3\nsnapshot_times = 0.05, 0.1\n";

    #[test]
    fn solve_writes_all_outputs_and_reaudits() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(SMALL).unwrap();
        let out = run_solve_in(&cfg, Path::new("."), dir.path()).unwrap();
        assert!(out.passed(), "{}", out.audit);
        assert_eq!(out.snapshot_steps, vec![0, 5, 10]);
        for f in [CHARACTERISTICS_FILE, DIAGNOSTICS_FILE, AUDIT_FILE, CONFIG_COPY, PLOT_FILE] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let rows = io::read_diagnostics(&dir.path().join(DIAGNOSTICS_FILE)).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.max_speed < 1.0));
        let d = io::read_density(&dir.path().join(density_file(10))).unwrap();
        assert!((d.mass() - 1.0).abs() <= 1e-14);
        let again = run_audit(dir.path()).unwrap();
        assert_eq!(again, out.audit);
    }

    #[test]
    fn convergence_needs_two_levels() {
        let cfg = parse_config(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(run_convergence(&cfg, Path::new("."), Axis::Grid, &[20.0], 80.0, dir.path()).is_err());
    }

    #[test]
    fn audit_rejects_truncated_trajectory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(SMALL).unwrap();
        run_solve_in(&cfg, Path::new("."), dir.path()).unwrap();
        let states: Vec<_> = io::read_characteristics(&dir.path().join(CHARACTERISTICS_FILE)).unwrap().1;
        io::write_characteristics(&dir.path().join(CHARACTERISTICS_FILE), 0.01, &states[..5]).unwrap();
        assert!(run_audit(dir.path()).is_err());
    }
}
