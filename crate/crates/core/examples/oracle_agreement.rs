//! Solves single steps on a `k = 4` grid with Newton's method and with the
//! derivative-free multi-start oracle, and prints how far apart they land.

use lagflow::analysis::brute_force_detailed;
use lagflow::jko::{jko_step, phi, JkoConfig};
use lagflow::{CostModel, EnergyModel, IdfVector, Potential};

fn main() -> lagflow::Result<()> {
    let prev = IdfVector::new(vec![-1.0, -0.6, 0.1, 0.3, 1.0])?;
    let cases = [
        ("p = 4/3", CostModel::p_power(4.0 / 3.0)?),
        ("p = 2", CostModel::p_power(2.0)?),
        ("p = 7", CostModel::p_power(7.0)?),
        ("relativistic", CostModel::relativistic(1.0)?),
    ];
    let energies = [
        ("m = 1", EnergyModel::boltzmann()),
        ("m = 5/3, quadratic v", EnergyModel::new(5.0 / 3.0, Potential::quadratic(1.0, 0.2)?)?),
    ];
    let tau = 0.05;
    println!("{:<14} {:<22} {:>12} {:>12} {:>12}", "cost", "energy", "|dx|_inf", "|dPhi|", "spread");
    for (cname, cost) in &cases {
        for (ename, energy) in &energies {
            let oracle = brute_force_detailed(cost, energy, tau, &prev)?;
            let (newton, _) = jko_step(cost, energy, &JkoConfig::new(tau, tau)?, &prev)?;
            let dx = oracle
                .best
                .values()
                .iter()
                .zip(newton.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dphi = (oracle.value - phi(cost, energy, tau, &prev, &newton)).abs();
            println!("{cname:<14} {ename:<22} {dx:>12.3e} {dphi:>12.3e} {:>12.3e}", oracle.spread);
        }
    }
    Ok(())
}
