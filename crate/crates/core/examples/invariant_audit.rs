//! Audits a trajectory against the discrete invariants, then corrupts one
//! state so that the energy rises and audits again.

use lagflow::analysis::{audit, Scenario};

fn main() -> lagflow::Result<()> {
    let scenario = Scenario {
        k: 200,
        t_end: 0.5,
        ..Scenario::relativistic_bump()
    };
    let cfg = scenario.config()?;
    let mut traj = scenario.run()?;
    let report = audit(&traj, &scenario.cost, &scenario.energy, &cfg)?;
    print!("{report}");
    println!("passed: {}\n", report.passed());

    traj.states[20] = traj.states[0].clone();
    let report = audit(&traj, &scenario.cost, &scenario.energy, &cfg)?;
    for check in report.failures() {
        println!("{} fails at step {} by {:.3e}", check.name, check.step, check.worst);
    }
    Ok(())
}
