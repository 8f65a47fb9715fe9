//! The `q`-Laplace equation `∂_t u = ∂_x(|∂_x u|^q ∂_x u)` with `q = 2`:
//! `p`-power cost with `q = (2 - p)/(p - 1)`, so `p = 4/3`, and exponent
//! `m = 3 - p = 5/3`. Compares the final profiles for two grids.

use lagflow::analysis::Scenario;
use lagflow::grid::l1_density_distance;
use lagflow::{CostModel, EnergyModel, Potential};

fn main() -> lagflow::Result<()> {
    let base = Scenario {
        cost: CostModel::p_power(4.0 / 3.0)?,
        energy: EnergyModel::new(5.0 / 3.0, Potential::Constant(0.0))?,
        t_end: 1.0,
        ..Scenario::relativistic_bump()
    };
    let coarse = base.with_grid(250).run()?;
    let fine = base.run()?;
    for r in fine.reports.iter().filter(|r| r.n % 10 == 0) {
        println!("t = {:.2}  energy {:.10}  Newton {:>3}", fine.time(r.n), r.energy, r.newton_iters);
    }
    let total: usize = fine.reports.iter().map(|r| r.newton_iters).sum();
    println!("Newton iterations over {} steps: {total}", fine.reports.len());
    println!(
        "L1 density distance k = 250 vs k = 1000: {:.4e}",
        l1_density_distance(coarse.last(), fine.last())
    );
    Ok(())
}
