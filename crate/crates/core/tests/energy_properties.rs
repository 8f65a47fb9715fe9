use lagflow::{EnergyModel, IdfVector, Potential};
use proptest::prelude::*;

fn state(k: usize, a: f64, b: f64) -> impl Strategy<Value = IdfVector> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(move |gaps| {
        let total: f64 = gaps.iter().sum();
        let mut values = vec![a];
        let mut acc = 0.0;
        for g in &gaps[..gaps.len() - 1] {
            acc += g;
            values.push(a + (b - a) * acc / total);
        }
        values.push(b);
        IdfVector::new(values).unwrap()
    })
}

fn models() -> Vec<EnergyModel> {
    vec![
        EnergyModel::boltzmann(),
        EnergyModel::new(5.0 / 3.0, Potential::Constant(0.0)).unwrap(),
        EnergyModel::new(1.0, Potential::quadratic(2.0, 0.5).unwrap()).unwrap(),
        EnergyModel::new(2.5, Potential::polynomial(vec![0.0, -1.0, 0.5, 0.0, 0.1], -1.0, 2.0).unwrap()).unwrap(),
    ]
}

proptest! {
    #[test]
    fn boltzmann_jensen_bound(x in (2usize..80).prop_flat_map(|k| state(k, -1.0, 2.0))) {
        let e = EnergyModel::boltzmann().total_energy(&x);
        prop_assert!(e >= -(3.0f64).ln() - 1e-12, "energy {}", e);
    }

    #[test]
    fn energy_convex_along_segments(
        (x, y) in (2usize..40).prop_flat_map(|k| (state(k, -1.0, 2.0), state(k, -1.0, 2.0))),
        lambda in 0.0f64..1.0,
    ) {
        let z: Vec<f64> = x.values().iter().zip(y.values()).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect();
        for m in models() {
            let hz = m.energy_of(&z);
            let bound = lambda * m.total_energy(&x) + (1.0 - lambda) * m.total_energy(&y);
            prop_assert!(hz <= bound + 1e-10 * (1.0 + bound.abs()), "m = {}: {} > {}", m.m(), hz, bound);
        }
    }

    #[test]
    fn h_x_derivatives_match_finite_differences(e in -3.0f64..3.0) {
        let s = 10f64.powf(e);
        for m in models() {
            let h = 1e-5 * s;
            let fd = (m.h_x(s + h).unwrap() - m.h_x(s - h).unwrap()) / (2.0 * h);
            let exact = m.dh_x(s).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "m = {} s = {}", m.m(), s);
            let fd2 = (m.dh_x(s + h).unwrap() - m.dh_x(s - h).unwrap()) / (2.0 * h);
            let exact2 = m.ddh_x(s).unwrap();
            prop_assert!((fd2 - exact2).abs() <= 1e-6 * exact2.abs(), "m = {} s = {}", m.m(), s);
            prop_assert!(exact < 0.0);
            prop_assert!((exact + s.powf(-m.m())).abs() <= 1e-12 * exact.abs());
        }
    }
}

#[test]
fn jensen_equality_at_equispaced() {
    let x = IdfVector::equispaced(-1.0, 2.0, 37).unwrap();
    let e = EnergyModel::boltzmann().total_energy(&x);
    assert!((e + 3f64.ln()).abs() < 1e-14);
    assert!(EnergyModel::boltzmann().total_energy(&IdfVector::equispaced(0.0, 1.0, 9).unwrap()).abs() < 1e-15);
}

#[test]
fn nonconvex_potential_rejected() {
    assert!(Potential::polynomial(vec![0.0, 0.0, -1.0], -1.0, 1.0).is_err());
    assert!(Potential::quadratic(-1.0, 0.0).is_err());
}
