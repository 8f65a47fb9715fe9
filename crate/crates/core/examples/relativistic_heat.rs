//! Relativistic heat equation with speed limit `γ = 1`. The support of the
//! initial bump cannot spread faster than `γ`, so its right edge stays behind
//! `0.3 + γ t`. With `k = 1000` and floor `1e-3` the background occupies one
//! cell at each wall, so the edge is `x_{k-1}`.

use lagflow::analysis::Scenario;

fn main() -> lagflow::Result<()> {
    let scenario = Scenario {
        t_end: 2.0,
        ..Scenario::relativistic_bump()
    };
    let traj = scenario.run()?;
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "max speed", "edge", "0.3 + t");
    for (n, x) in traj.states.iter().enumerate().filter(|(n, _)| n % 25 == 0 && *n > 0) {
        let edge = x.values()[x.k() - 1];
        let t = traj.time(n);
        println!("{:>6.2} {:>12.9} {:>12.5} {:>12.5}", t, traj.reports[n - 1].max_speed, edge, 0.3 + t);
    }
    let fastest = traj.reports.iter().map(|r| r.max_speed).fold(0.0, f64::max);
    println!("fastest characteristic {fastest:.12} (limit 1)");
    Ok(())
}
