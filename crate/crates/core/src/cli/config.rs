use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::Scenario;
use crate::cost::CostModel;
use crate::energy::{EnergyModel, Potential};
use crate::error::{Error, Result};
use crate::grid::Density;
use crate::jko::JkoConfig;

const KEYS: &[&str] = &[
    "a",
    "b",
    "k",
    "tau",
    "t_end",
    "cost",
    "p",
    "gamma",
    "m",
    "potential",
    "potential_value",
    "potential_weight",
    "potential_center",
    "potential_coefficients",
    "init",
    "init_support",
    "init_file",
    "floor",
    "output",
    "snapshot_times",
    "newton_tol",
    "newton_max_iter",
    "min_gap",
];

/// Base and exponent step of the default snapshot ladder
/// `t_j = 0.01 * 10^(0.12 j)`.
pub const LADDER_START: f64 = 0.01;
pub const LADDER_EXPONENT_STEP: f64 = 0.12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Uniform { left: f64, right: f64 },
    /// Two-column `x,u` samples of a density, linearly interpolated.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub tau: f64,
    pub t_end: f64,
    pub cost: CostModel,
    pub m: f64,
    pub potential: Potential,
    pub init: InitSpec,
    pub floor: f64,
    pub output: PathBuf,
    /// Snapshot times, each a multiple of `tau`, increasing.
    pub snapshot_times: Vec<f64>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
    pub min_gap: f64,
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(parse_error(line, col, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        let key_col = content.len() - content.trim_start().len() + 1;
        if key.is_empty() {
            return Err(parse_error(line, key_col, "missing key before `=`"));
        }
        if !KEYS.contains(&key) {
            return Err(parse_error(line, key_col, format!("unknown key `{key}`")));
        }
        let rest = &content[eq + 1..];
        let value = rest.trim();
        let value_col = eq + 2 + (rest.len() - rest.trim_start().len());
        if value.is_empty() {
            return Err(parse_error(line, value_col, format!("missing value for `{key}`")));
        }
        if entries.contains_key(key) {
            return Err(parse_error(line, key_col, format!("duplicate key `{key}`")));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
                column: value_col,
            },
        );
    }
    Ok(entries)
}

struct Fields {
    entries: BTreeMap<String, Entry>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn required(&self, key: &str) -> Result<&Entry> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn number_of(e: &Entry, key: &str) -> Result<f64> {
        e.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_error(e.line, e.column, format!("`{key}` must be a finite number, got `{}`", e.value)))
    }

    fn number(&self, key: &str) -> Result<f64> {
        Self::number_of(self.required(key)?, key)
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |e| Self::number_of(e, key))
    }

    fn integer(&self, key: &str) -> Result<i64> {
        let e = self.required(key)?;
        e.value
            .parse::<i64>()
            .map_err(|_| parse_error(e.line, e.column, format!("`{key}` must be an integer, got `{}`", e.value)))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        let mut out = Vec::new();
        let mut offset = 0;
        for part in e.value.split(',') {
            let t = part.trim();
            let col = e.column + offset + (part.len() - part.trim_start().len());
            out.push(
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(e.line, col, format!("bad number `{t}` in `{key}`")))?,
            );
            offset += part.len() + 1;
        }
        Ok(Some(out))
    }

    fn word(&self, key: &str, default: &str) -> String {
        self.raw(key).map_or_else(|| default.to_string(), |e| e.value.clone())
    }
}

/// Parses `key = value` lines; `#` starts a comment. Relative `init_file`
/// paths are kept as written.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let f = Fields { entries: tokenize(text)? };
    let a = f.number("a")?;
    let b = f.number("b")?;
    if !(a < b) {
        return Err(Error::Config(format!("domain requires a < b, got a = {a}, b = {b}")));
    }
    let k = f.integer("k")?;
    if k < 2 {
        return Err(Error::Config("k must be ≥ 2".into()));
    }
    let k = k as usize;
    let tau = f.number("tau")?;
    if !(tau > 0.0) {
        return Err(Error::Config("tau must be > 0".into()));
    }
    let t_end = f.number("t_end")?;

    let cost = match f.required("cost")?.value.as_str() {
        "ppower" => CostModel::p_power(
            f.raw("p")
                .ok_or_else(|| Error::Config("cost = ppower requires key `p`".into()))
                .and_then(|e| Fields::number_of(e, "p"))?,
        )?,
        "relativistic" => CostModel::relativistic(
            f.raw("gamma")
                .ok_or_else(|| Error::Config("cost = relativistic requires key `gamma`".into()))
                .and_then(|e| Fields::number_of(e, "gamma"))?,
        )?,
        other => {
            let e = f.required("cost")?;
            return Err(parse_error(
                e.line,
                e.column,
                format!("cost must be `ppower` or `relativistic`, got `{other}`"),
            ));
        }
    };
    let m = f.number_or("m", 1.0)?;

    let potential = match f.word("potential", "constant").as_str() {
        "constant" => Potential::Constant(f.number_or("potential_value", 0.0)?),
        "quadratic" => Potential::quadratic(f.number_or("potential_weight", 1.0)?, f.number_or("potential_center", 0.0)?)?,
        "polynomial" => Potential::polynomial(
            f.list("potential_coefficients")?
                .ok_or_else(|| Error::Config("potential = polynomial requires key `potential_coefficients`".into()))?,
            a,
            b,
        )?,
        other => {
            let e = f.required("potential")?;
            return Err(parse_error(
                e.line,
                e.column,
                format!("potential must be constant, quadratic or polynomial, got `{other}`"),
            ));
        }
    };
    EnergyModel::new(m, potential.clone())?;

    let init = match f.word("init", "uniform").as_str() {
        "uniform" => {
            let support = f.list("init_support")?.unwrap_or_else(|| vec![a, b]);
            if support.len() != 2 || !(support[0] < support[1]) || support[0] < a || support[1] > b {
                return Err(Error::Config(format!(
                    "init_support must be two increasing values inside [{a}, {b}]"
                )));
            }
            InitSpec::Uniform {
                left: support[0],
                right: support[1],
            }
        }
        "csv" => InitSpec::Csv {
            path: PathBuf::from(
                f.raw("init_file")
                    .ok_or_else(|| Error::Config("init = csv requires key `init_file`".into()))?
                    .value
                    .clone(),
            ),
        },
        other => {
            let e = f.required("init")?;
            return Err(parse_error(e.line, e.column, format!("init must be uniform or csv, got `{other}`")));
        }
    };
    let floor = f.number_or("floor", 1e-3)?;
    if !(floor >= 0.0) {
        return Err(Error::Config("floor must be >= 0".into()));
    }
    let output = PathBuf::from(f.word("output", "out"));

    let newton_tol = match f.raw("newton_tol") {
        Some(e) => Some(Fields::number_of(e, "newton_tol")?),
        None => None,
    };
    let newton_max_iter = match f.raw("newton_max_iter") {
        Some(_) => {
            let n = f.integer("newton_max_iter")?;
            if n < 1 {
                return Err(Error::Config("newton_max_iter must be >= 1".into()));
            }
            n as usize
        }
        None => 200,
    };
    let min_gap = f.number_or("min_gap", 0.0)?;

    let mut cfg = RunConfig {
        a,
        b,
        k,
        tau,
        t_end,
        cost,
        m,
        potential,
        init,
        floor,
        output,
        snapshot_times: Vec::new(),
        newton_tol,
        newton_max_iter,
        min_gap,
    };
    cfg.jko()?;
    cfg.snapshot_times = match f.raw("snapshot_times").map(|e| e.value.as_str()) {
        None | Some("ladder") => ladder(tau, t_end),
        Some(_) => {
            let times = f.list("snapshot_times")?.unwrap_or_default();
            check_snapshots(&times, tau, t_end)?;
            times
        }
    };
    Ok(cfg)
}

/// The logarithmic ladder `0.01 * 10^(0.12 j)` up to `t_end`, each time
/// rounded to the nearest step and deduplicated, followed by `t_end`.
pub fn ladder(tau: f64, t_end: f64) -> Vec<f64> {
    let steps = (t_end / tau).round() as usize;
    let mut out: Vec<usize> = Vec::new();
    for j in 0.. {
        let t = LADDER_START * 10f64.powf(LADDER_EXPONENT_STEP * j as f64);
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        let n = ((t / tau).round() as usize).clamp(1, steps);
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out.into_iter().map(|n| n as f64 * tau).collect()
}

fn check_snapshots(times: &[f64], tau: f64, t_end: f64) -> Result<()> {
    for (i, &t) in times.iter().enumerate() {
        let n = t / tau;
        if !((n - n.round()).abs() <= 1e-9 * n.round().max(1.0)) {
            return Err(Error::Config(format!("snapshot time {t} is not a multiple of tau = {tau}")));
        }
        if t < 0.0 || t > t_end * (1.0 + 1e-12) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, {t_end}]")));
        }
        if i > 0 && !(t > times[i - 1]) {
            return Err(Error::Config("snapshot times must be increasing".into()));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn energy(&self) -> EnergyModel {
        EnergyModel::new(self.m, self.potential.clone()).expect("validated at parse time")
    }

    pub fn jko(&self) -> Result<JkoConfig> {
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

    /// Step indices of the snapshots.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_times.iter().map(|t| (t / self.tau).round() as usize).collect()
    }

    /// The initial density; relative CSV paths are resolved against `base`.
    pub fn initial_density(&self, base: &Path) -> Result<Density> {
        match &self.init {
            InitSpec::Uniform { left, right } => Ok(Density::Uniform {
                left: *left,
                right: *right,
            }),
            InitSpec::Csv { path } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                let (x, u) = super::io::read_density_samples(&path)?;
                Ok(Density::Tabulated { x, u })
            }
        }
    }

    pub fn scenario(&self, base: &Path) -> Result<Scenario> {
        Ok(Scenario {
            cost: self.cost,
            energy: self.energy(),
            a: self.a,
            b: self.b,
            init: self.initial_density(base)?,
            floor: self.floor,
            k: self.k,
            tau: self.tau,
            t_end: self.t_end,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            min_gap: self.min_gap,
        })
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "a = {}", self.a);
        let _ = writeln!(s, "b = {}", self.b);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "t_end = {}", self.t_end);
        match self.cost {
            CostModel::PPower { p } => {
                let _ = writeln!(s, "cost = ppower\np = {p}");
            }
            CostModel::Relativistic { gamma } => {
                let _ = writeln!(s, "cost = relativistic\ngamma = {gamma}");
            }
        }
        let _ = writeln!(s, "m = {}", self.m);
        match &self.potential {
            Potential::Constant(v) => {
                let _ = writeln!(s, "potential = constant\npotential_value = {v}");
            }
            Potential::Quadratic { weight, center } => {
                let _ = writeln!(
                    s,
                    "potential = quadratic\npotential_weight = {weight}\npotential_center = {center}"
                );
            }
            Potential::Polynomial { coefficients } => {
                let _ = writeln!(s, "potential = polynomial\npotential_coefficients = {}", join(coefficients));
            }
        }
        match &self.init {
            InitSpec::Uniform { left, right } => {
                let _ = writeln!(s, "init = uniform\ninit_support = {left}, {right}");
            }
            InitSpec::Csv { path } => {
                let _ = writeln!(s, "init = csv\ninit_file = {}", path.display());
            }
        }
        let _ = writeln!(s, "floor = {}", self.floor);
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "snapshot_times = {}", join(&self.snapshot_times));
        if let Some(tol) = self.newton_tol {
            let _ = writeln!(s, "newton_tol = {tol}");
        }
        let _ = writeln!(s, "newton_max_iter = {}", self.newton_max_iter);
        let _ = writeln!(s, "min_gap = {}", self.min_gap);
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "a = -4\nb = 4\nk = 100\ntau = 0.01\nt_end = 0.5\ncost = ppower\np = 2\n";

    #[test]
    fn minimal_config_defaults() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.k, 100);
        assert_eq!(cfg.m, 1.0);
        assert_eq!(cfg.potential, Potential::Constant(0.0));
        assert_eq!(cfg.init, InitSpec::Uniform { left: -4.0, right: 4.0 });
        assert_eq!(cfg.floor, 1e-3);
        assert_eq!(cfg.newton_tol, None);
        assert_eq!(cfg.snapshot_times[0], 0.01);
        assert_eq!(*cfg.snapshot_times.last().unwrap(), 0.5);
    }

    #[test]
    fn comments_and_whitespace() {
        let text = format!("# header\n\n{BASE}m = 1.5   # inline\n   floor=0\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.m, 1.5);
        assert_eq!(cfg.floor, 0.0);
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = parse_config(&format!("{BASE}  colour = red\n")).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 8,
                column: 3,
                message: "unknown key `colour`".into()
            }
        );
    }

    #[test]
    fn bad_number_reports_value_column() {
        let err = parse_config("a = -4\nb = four\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 5, .. }), "{err:?}");
        let err = parse_config(&format!("{BASE}snapshot_times = 0.01, x\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 8, column: 24, .. }), "{err:?}");
    }

    #[test]
    fn semantic_errors() {
        let err = parse_config(&BASE.replace("k = 100", "k = 0")).unwrap_err();
        assert_eq!(err.to_string(), "invalid configuration: k must be ≥ 2");
        let err = parse_config(&BASE.replace("cost = ppower\np = 2", "cost = relativistic")).unwrap_err();
        assert!(err.to_string().contains("`gamma`"));
        let err = parse_config(&format!("{BASE}snapshot_times = 0.015\n")).unwrap_err();
        assert!(err.to_string().contains("multiple of tau"));
        assert!(parse_config(&BASE.replace("t_end = 0.5", "t_end = 0.505")).is_err());
        assert!(parse_config(&format!("{BASE}k = 10\n")).is_err());
        assert!(parse_config("a = 1\n").is_err());
    }

    #[test]
    fn ladder_matches_times() {
        let l = ladder(0.01, 2.0);
        assert_eq!(l[0], 0.01);
        for w in l.windows(2) {
            assert!(w[1] > w[0]);
        }
        // 0.01 * 10^(0.12 * 19) = 1.905...
        assert!((l[l.len() - 2] - 1.91).abs() < 1e-12);
        assert_eq!(*l.last().unwrap(), 2.0);
        for t in &l {
            let n = t / 0.01;
            assert!((n - n.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = format!(
            "{BASE}m = 1.6666666666666667\npotential = quadratic\npotential_weight = 2\ninit_support = -0.3, 0.3\nnewton_tol = 1e-9\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
        let rel = parse_config(&BASE.replace("cost = ppower\np = 2", "cost = relativistic\ngamma = 1")).unwrap();
        assert_eq!(parse_config(&rel.to_text()).unwrap(), rel);
    }
}
