use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{Axis, LevelError};
use crate::error::{Error, Result};
use crate::grid::{IdfVector, PiecewiseDensity};
use crate::jko::StepReport;

pub const DENSITY_HEADER: [&str; 3] = ["x_left", "x_right", "u"];
pub const IDF_HEADER: [&str; 2] = ["xi", "x"];
pub const CHARACTERISTICS_HEADER: [&str; 3] = ["t", "i", "x"];
pub const DIAGNOSTICS_HEADER: [&str; 10] = [
    "n",
    "t",
    "energy",
    "transport",
    "min_dx",
    "max_dx",
    "min_d2x",
    "max_d2x",
    "max_speed",
    "newton_iters",
];
pub const CONVERGENCE_HEADER: [&str; 4] = ["axis", "level", "err_idf", "err_density"];

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("{}: expected header {}, found {}", path.display(), header.join(","), found.join(",")),
        });
    }
    Ok(r)
}

fn rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, rec) in reader(path, header)?.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len());
        for (j, field) in rec.iter().enumerate() {
            row.push(field.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: i + 2,
                column: j + 1,
                message: format!("{}: bad number `{field}`", path.display()),
            })?);
        }
        if row.len() != header.len() {
            return Err(Error::Parse {
                line: i + 2,
                column: 1,
                message: format!("{}: expected {} fields", path.display(), header.len()),
            });
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_density(path: &Path, x: &IdfVector) -> Result<()> {
    let d = x.to_density();
    let mut w = writer(path)?;
    w.write_record(DENSITY_HEADER)?;
    for (cell, u) in d.breakpoints.windows(2).zip(&d.cell_values) {
        w.write_record([num(cell[0]), num(cell[1]), num(*u)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_density(path: &Path) -> Result<PiecewiseDensity> {
    let rows = rows(path, &DENSITY_HEADER)?;
    if rows.is_empty() {
        return Err(Error::InvalidDensity(format!("{}: no cells", path.display())));
    }
    let mut breakpoints = vec![rows[0][0]];
    let mut cell_values = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r[0] != *breakpoints.last().unwrap() {
            return Err(Error::InvalidDensity(format!("{}: cell {} is not adjacent to its predecessor", path.display(), i + 1)));
        }
        breakpoints.push(r[1]);
        cell_values.push(r[2]);
    }
    Ok(PiecewiseDensity {
        breakpoints,
        cell_values,
    })
}

pub fn write_idf(path: &Path, x: &IdfVector) -> Result<()> {
    let k = x.k() as f64;
    let mut w = writer(path)?;
    w.write_record(IDF_HEADER)?;
    for (i, v) in x.values().iter().enumerate() {
        w.write_record([num(i as f64 / k), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_idf(path: &Path) -> Result<IdfVector> {
    IdfVector::new(rows(path, &IDF_HEADER)?.into_iter().map(|r| r[1]).collect())
}

/// Long format: one `t,i,x` row per step and grid index.
pub fn write_characteristics(path: &Path, tau: f64, states: &[IdfVector]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", CHARACTERISTICS_HEADER.join(","))?;
    for (n, x) in states.iter().enumerate() {
        let t = num(n as f64 * tau);
        for (i, v) in x.values().iter().enumerate() {
            writeln!(w, "{t},{i},{}", num(*v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Returns the times and states stored by [`write_characteristics`].
pub fn read_characteristics(path: &Path) -> Result<(Vec<f64>, Vec<IdfVector>)> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    for r in rows(path, &CHARACTERISTICS_HEADER)? {
        let (t, i, x) = (r[0], r[1] as usize, r[2]);
        if i == 0 && !current.is_empty() {
            states.push(IdfVector::new(std::mem::take(&mut current))?);
        }
        if i == 0 {
            times.push(t);
        }
        if i != current.len() {
            return Err(Error::Parse {
                line: 0,
                column: 2,
                message: format!("{}: grid index {i} out of sequence", path.display()),
            });
        }
        current.push(x);
    }
    if !current.is_empty() {
        states.push(IdfVector::new(current)?);
    }
    Ok((times, states))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub transport: f64,
    pub min_dx: f64,
    pub max_dx: f64,
    pub min_d2x: f64,
    pub max_d2x: f64,
    pub max_speed: f64,
    pub newton_iters: usize,
}

pub fn write_diagnostics(path: &Path, tau: f64, reports: &[StepReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DIAGNOSTICS_HEADER)?;
    for r in reports {
        w.write_record([
            r.n.to_string(),
            num(r.n as f64 * tau),
            num(r.energy),
            num(r.transport),
            num(r.min_dx),
            num(r.max_dx),
            num(r.min_d2x),
            num(r.max_d2x),
            num(r.max_speed),
            r.newton_iters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    Ok(rows(path, &DIAGNOSTICS_HEADER)?
        .into_iter()
        .map(|r| DiagnosticsRow {
            n: r[0] as usize,
            t: r[1],
            energy: r[2],
            transport: r[3],
            min_dx: r[4],
            max_dx: r[5],
            min_d2x: r[6],
            max_d2x: r[7],
            max_speed: r[8],
            newton_iters: r[9] as usize,
        })
        .collect())
}

pub fn write_convergence(path: &Path, axis: Axis, levels: &[LevelError]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(CONVERGENCE_HEADER)?;
    for l in levels {
        w.write_record([axis.as_str().to_string(), num(l.level), num(l.err_idf), num(l.err_density)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence(path: &Path) -> Result<(Axis, Vec<LevelError>)> {
    let mut axis = None;
    let mut levels = Vec::new();
    for (i, rec) in reader(path, &CONVERGENCE_HEADER)?.records().enumerate() {
        let rec = rec?;
        let bad = |column: usize| Error::Parse {
            line: i + 2,
            column,
            message: format!("{}: malformed convergence row", path.display()),
        };
        let a: Axis = rec.get(0).ok_or_else(|| bad(1))?.parse()?;
        if axis.is_some_and(|prev| prev != a) {
            return Err(bad(1));
        }
        axis = Some(a);
        let field = |j: usize| -> Result<f64> { rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| bad(j + 1)) };
        levels.push(LevelError {
            level: field(1)?,
            err_idf: field(2)?,
            err_density: field(3)?,
        });
    }
    Ok((axis.ok_or_else(|| Error::Io(format!("{}: no rows", path.display())))?, levels))
}

/// Two-column `x,u` samples of an initial density.
pub fn read_density_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = rows(path, &["x", "u"])?;
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

/// Gnuplot script plotting the snapshots, characteristics and energy.
pub fn plot_script(snapshot_files: &[(f64, String)], speed_limit: Option<f64>) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 1200,800\n\n");
    s.push_str("set output 'density.png'\nset xlabel 'x'\nset ylabel 'u'\nplot \\\n");
    let lines: Vec<String> = snapshot_files
        .iter()
        .map(|(t, f)| format!("  '{f}' using (($1+$2)/2):3 with steps title 't={t}'"))
        .collect();
    s.push_str(&lines.join(", \\\n"));
    s.push_str("\n\nset output 'characteristics.png'\nset xlabel 'x'\nset ylabel 't'\nunset key\n");
    s.push_str("plot 'characteristics.csv' using 3:1 with dots");
    if let Some(gamma) = speed_limit {
        s.push_str(&format!(", {gamma}*x dashtype 2, -{gamma}*x dashtype 2"));
    }
    s.push_str("\n\nset output 'energy.png'\nset xlabel 't'\nset ylabel 'H'\nplot 'diagnostics.csv' using 2:3 with lines\n");
    s
}
