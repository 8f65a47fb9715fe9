//! The large reference run: relativistic heat flow on `k = 10000` cells up
//! to `T = 0.7`, timed.

use std::time::Instant;

use lagflow::analysis::Scenario;

fn main() -> lagflow::Result<()> {
    let scenario = Scenario {
        k: 10_000,
        ..Scenario::relativistic_bump()
    };
    let start = Instant::now();
    let traj = scenario.run()?;
    let elapsed = start.elapsed();
    let iters: usize = traj.reports.iter().map(|r| r.newton_iters).sum();
    let fastest = traj.reports.iter().map(|r| r.max_speed).fold(0.0, f64::max);
    println!("{} steps in {:.2?}, {iters} Newton iterations", traj.reports.len(), elapsed);
    println!("final energy {:.12}", traj.reports.last().map_or(f64::NAN, |r| r.energy));
    println!("fastest characteristic {fastest:.10}");
    Ok(())
}
