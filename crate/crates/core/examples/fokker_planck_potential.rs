//! Linear Fokker-Planck flow with quadratic confinement, `v(x) = (x - 1)^2`,
//! and the quadratic cost. The density relaxes toward `exp(-v) / Z`.
//!
//! The audit shows that `dx_upper_bound` fails: the cell at the wall keeps
//! losing density toward the tiny equilibrium value there, so the largest
//! `δx` grows.

use lagflow::analysis::{audit, Scenario};
use lagflow::{CostModel, Density, EnergyModel, Potential};

fn main() -> lagflow::Result<()> {
    let potential = Potential::quadratic(2.0, 1.0)?;
    let scenario = Scenario {
        cost: CostModel::p_power(2.0)?,
        energy: EnergyModel::new(1.0, potential.clone())?,
        init: Density::Uniform { left: -3.0, right: -2.0 },
        k: 400,
        t_end: 3.0,
        ..Scenario::relativistic_bump()
    };
    let traj = scenario.run()?;
    let grid: Vec<f64> = (0..=8000).map(|i| -4.0 + i as f64 * 1e-3).collect();
    let z: f64 = grid.iter().map(|&x| (-potential.value(x)).exp() * 1e-3).sum();
    for n in [0, 30, 100, 300] {
        let density = traj.states[n].to_density();
        let l1: f64 = grid
            .iter()
            .map(|&x| (density.value_at(x) - (-potential.value(x)).exp() / z).abs() * 1e-3)
            .sum();
        println!("t = {:.1}  L1 distance to equilibrium {:.4}", traj.time(n), l1);
    }
    let report = audit(&traj, &scenario.cost, &scenario.energy, &scenario.config()?)?;
    print!("{report}");
    Ok(())
}
