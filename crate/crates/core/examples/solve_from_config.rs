//! Drives a run from a configuration file, as the `solve` subcommand does.
//!
//! ```text
//! cargo run --release --example solve_from_config -- experiments/p7_linear.cfg
//! ```
//!
//! Output goes to `$LAGFLOW_OUT` if set, otherwise to the configured
//! directory.

use std::path::PathBuf;

use lagflow::cli::{load_config, run_solve};

fn main() -> lagflow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../experiments/p7_linear.cfg")));
    let (cfg, base) = load_config(&path)?;
    let outcome = run_solve(&cfg, &base)?;
    print!("{}", outcome.audit);
    println!("snapshots at steps {:?}", outcome.snapshot_steps);
    println!("wrote {}", outcome.dir.display());
    Ok(())
}
