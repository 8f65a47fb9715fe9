use lagflow::analysis::audit;
use lagflow::jko::{euler_lagrange_residual, phi};
use lagflow::{evolve, jko_step, CostModel, EnergyModel, IdfVector, JkoConfig, Potential};
use proptest::prelude::*;

fn cost() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        Just(CostModel::PPower { p: 4.0 / 3.0 }),
        Just(CostModel::PPower { p: 2.0 }),
        Just(CostModel::PPower { p: 7.0 }),
        Just(CostModel::Relativistic { gamma: 1.0 }),
    ]
}

fn energy() -> impl Strategy<Value = EnergyModel> {
    prop_oneof![
        Just(EnergyModel::boltzmann()),
        Just(EnergyModel::new(5.0 / 3.0, Potential::Constant(0.0)).unwrap()),
        Just(EnergyModel::new(1.0, Potential::quadratic(1.0, 0.3).unwrap()).unwrap()),
    ]
}

fn state(k: usize) -> impl Strategy<Value = IdfVector> {
    prop::collection::vec(0.2f64..1.0, k).prop_map(move |gaps| {
        let total: f64 = gaps.iter().sum();
        let mut values = vec![-1.0];
        let mut acc = 0.0;
        for g in &gaps[..k - 1] {
            acc += g;
            values.push(-1.0 + 2.0 * acc / total);
        }
        values.push(1.0);
        IdfVector::new(values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_satisfy_discrete_invariants(
        cost in cost(),
        energy in energy(),
        x0 in (4usize..24).prop_flat_map(state),
    ) {
        let cfg = JkoConfig::new(0.01, 0.1).unwrap();
        let traj = evolve(&cost, &energy, &cfg, &x0, |_| {}).unwrap();
        prop_assert_eq!(traj.states.len(), 11);
        let report = audit(&traj, &cost, &energy, &cfg).unwrap();
        for name in ["energy_dissipation", "dissipation_estimate", "flux_limit", "euler_lagrange", "endpoints_pinned"] {
            let check = report.get(name).unwrap();
            prop_assert!(check.status != lagflow::analysis::Status::Fail, "{:?}", check);
        }
        if energy.potential().is_constant() {
            prop_assert!(report.get("dx_min_max_principle").unwrap().status == lagflow::analysis::Status::Pass);
        }
    }

    #[test]
    fn step_minimizes_phi_against_perturbations(
        cost in cost(),
        energy in energy(),
        x0 in (4usize..12).prop_flat_map(state),
        j in 1usize..4,
        eps in prop::sample::select(vec![-1e-4, -1e-6, 1e-6, 1e-4]),
    ) {
        let tau = 0.02;
        let cfg = JkoConfig::new(tau, tau).unwrap();
        let (x, report) = jko_step(&cost, &energy, &cfg, &x0).unwrap();
        let (res, bound) = euler_lagrange_residual(&cost, &energy, tau, report.tolerance, &x0, &x).unwrap();
        prop_assert!(res <= 10.0 * bound, "{} > 10 * {}", res, bound);
        let base = phi(&cost, &energy, tau, &x0, &x);
        let mut y = x.values().to_vec();
        y[j] += eps;
        if let Ok(y) = IdfVector::new(y) {
            let moved = phi(&cost, &energy, tau, &x0, &y);
            prop_assert!(moved >= base - 1e-13 * (1.0 + base.abs()), "{} < {}", moved, base);
        }
    }

    #[test]
    fn equispaced_state_is_stationary(cost in cost(), k in 2usize..60, tau in 0.001f64..0.1) {
        let x0 = IdfVector::equispaced(-2.0, 3.0, k).unwrap();
        let (x, report) = jko_step(&cost, &EnergyModel::boltzmann(), &JkoConfig::new(tau, tau).unwrap(), &x0).unwrap();
        for (a, b) in x.values().iter().zip(x0.values()) {
            prop_assert!((a - b).abs() <= 10.0 * report.tolerance);
        }
    }
}

#[test]
fn evolve_is_bit_deterministic() {
    let x0 = IdfVector::new(vec![-1.0, -0.8, -0.1, 0.05, 0.3, 1.0]).unwrap();
    let cfg = JkoConfig::new(0.01, 0.2).unwrap();
    for cost in [CostModel::PPower { p: 4.0 / 3.0 }, CostModel::Relativistic { gamma: 1.0 }] {
        let a = evolve(&cost, &EnergyModel::boltzmann(), &cfg, &x0, |_| {}).unwrap();
        let b = evolve(&cost, &EnergyModel::boltzmann(), &cfg, &x0, |_| {}).unwrap();
        assert_eq!(a, b);
    }
}
