//! Grid and time-step refinement of the relativistic heat flow. Errors are
//! L1 distances at the final time against a fine reference solution; the
//! fitted slopes are orders in `1/k` and in `τ`.

use lagflow::analysis::{convergence_study, Axis, Scenario};

fn main() -> lagflow::Result<()> {
    let base = Scenario::relativistic_bump();
    let grid = convergence_study(Axis::Grid, &base, &[25.0, 50.0, 100.0, 200.0], 800.0)?;
    print!("{}", grid.to_csv());
    println!("grid order: idf {:.3}, density {:.3}", grid.fitted_slope, grid.density_slope);

    let base = Scenario {
        k: 500,
        t_end: 0.72,
        ..base
    };
    let time = convergence_study(Axis::Timestep, &base, &[0.08, 0.04, 0.02, 0.01], 0.00125)?;
    print!("{}", time.to_csv());
    println!("time order: idf {:.3}, density {:.3}", time.fitted_slope, time.density_slope);
    Ok(())
}
