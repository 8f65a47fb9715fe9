//! Linear diffusion (`m = 1`) under the `p = 7` transport cost, starting from
//! the uniform density on `[-0.3, 0.3]` inside `[-4, 4]`.
//!
//! Prints energy, transport cost and difference-quotient extremes at a few
//! times, then the mass of the final density.

use lagflow::analysis::Scenario;
use lagflow::{CostModel, Density, EnergyModel};

fn main() -> lagflow::Result<()> {
    let scenario = Scenario {
        cost: CostModel::p_power(7.0)?,
        energy: EnergyModel::boltzmann(),
        init: Density::Uniform { left: -0.3, right: 0.3 },
        t_end: 2.0,
        ..Scenario::relativistic_bump()
    };
    let traj = scenario.run()?;
    println!("{:>6} {:>14} {:>12} {:>12} {:>12} {:>8}", "t", "energy", "transport", "min dx", "max dx", "newton");
    for r in traj.reports.iter().filter(|r| r.n % 20 == 0) {
        println!(
            "{:>6.2} {:>14.8} {:>12.3e} {:>12.5} {:>12.5} {:>8}",
            traj.time(r.n),
            r.energy,
            r.transport,
            r.min_dx,
            r.max_dx,
            r.newton_iters
        );
    }
    let density = traj.last().to_density();
    println!("final mass {:.16}", density.mass());
    println!("u(0) = {:.6}, u(2) = {:.6}", density.value_at(0.0), density.value_at(2.0));
    Ok(())
}
