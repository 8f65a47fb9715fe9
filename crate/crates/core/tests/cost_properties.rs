use lagflow::CostModel;
use proptest::prelude::*;

fn costs() -> Vec<CostModel> {
    vec![
        CostModel::p_power(4.0 / 3.0).unwrap(),
        CostModel::p_power(2.0).unwrap(),
        CostModel::p_power(7.0).unwrap(),
        CostModel::relativistic(1.0).unwrap(),
        CostModel::relativistic(0.25).unwrap(),
    ]
}

fn log_grid() -> Vec<f64> {
    let mut r: Vec<f64> = (0..=240).map(|j| 10f64.powf(-6.0 + j as f64 * 0.05)).collect();
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    r.extend(neg);
    r.push(0.0);
    r
}

// Beyond this |r| the relativistic round trip is limited by the rounding of
// s = (c*)'(r) itself: c'' grows like |r|^3 near the speed limit.
const RELATIVISTIC_EXACT_RANGE: f64 = 4.0e3;

#[test]
fn inverse_identity_on_log_grid() {
    for cost in costs() {
        for r in log_grid() {
            let s = cost.dual_prime(r);
            let back = cost.prime(s).unwrap();
            let mut tol = 1e-9 * (1.0 + r.abs());
            if cost.speed_limit().is_some() && r.abs() > RELATIVISTIC_EXACT_RANGE {
                tol += cost.second(s).unwrap() * s.abs() * f64::EPSILON;
            }
            assert!((back - r).abs() <= tol, "{cost:?} r = {r}: got {back}");
        }
    }
}

#[test]
fn relativistic_dual_saturates_at_speed_limit() {
    for gamma in [0.25, 1.0, 3.0] {
        let cost = CostModel::relativistic(gamma).unwrap();
        assert!((cost.dual_prime(1e8) - gamma).abs() <= 1e-6);
        assert!((cost.dual_prime(-1e8) + gamma).abs() <= 1e-6);
        for r in log_grid() {
            assert!(cost.dual_prime(r).abs() <= gamma);
        }
    }
}

#[test]
fn derivatives_strictly_increasing_on_grid() {
    for cost in costs() {
        let limit = cost.speed_limit().unwrap_or(50.0);
        let s: Vec<f64> = (1..2000).map(|i| -limit + 2.0 * limit * i as f64 / 2000.0).collect();
        for w in s.windows(2) {
            assert!(cost.prime(w[1]).unwrap() > cost.prime(w[0]).unwrap(), "{cost:?} at {}", w[0]);
        }
        let mut r = log_grid();
        r.sort_by(f64::total_cmp);
        for w in r.windows(2) {
            assert!(cost.dual_prime(w[1]) >= cost.dual_prime(w[0]), "{cost:?} at {}", w[0]);
        }
    }
}

fn central(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (f(s + h) - f(s - h)) / (2.0 * h)
}

proptest! {
    #[test]
    fn derivatives_are_odd(u in -0.999f64..0.999, r in -1e6f64..1e6) {
        for cost in costs() {
            let s = cost.speed_limit().map_or(u * 40.0, |g| u * g);
            prop_assert_eq!(cost.prime(-s).unwrap(), -cost.prime(s).unwrap());
            prop_assert_eq!(cost.dual_prime(-r), -cost.dual_prime(r));
            prop_assert_eq!(cost.value(-s), cost.value(s));
        }
    }

    #[test]
    fn first_derivative_matches_finite_difference(u in 0.05f64..0.95, sign in prop::bool::ANY) {
        for cost in costs() {
            let s = cost.speed_limit().map_or(u * 4.0, |g| u * g);
            let s = if sign { s } else { -s };
            let h = 1e-6 * s.abs().max(1e-3);
            let fd = central(|t| cost.value(t), s, h);
            let exact = cost.prime(s).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{:?} s = {}: {} vs {}", cost, s, fd, exact);
            let fd2 = central(|t| cost.prime(t).unwrap(), s, h);
            let exact2 = cost.second(s).unwrap();
            prop_assert!((fd2 - exact2).abs() <= 1e-5 * exact2.abs().max(1e-3), "{:?} s = {}: {} vs {}", cost, s, fd2, exact2);
        }
    }

    #[test]
    fn growth_envelope_brackets_dissipation(u in -1.0f64..1.0) {
        for cost in costs() {
            let env = cost.growth_envelope();
            let s = if env.s_max.is_finite() { u * env.s_max } else { u * 100.0 };
            let d = cost.dissipation(s);
            let sp = s.abs().powf(env.p);
            prop_assert!(env.alpha * sp <= d * (1.0 + 1e-12) + 1e-300, "{:?} s = {}", cost, s);
            prop_assert!(d <= env.beta * sp * (1.0 + 1e-12) + 1e-300, "{:?} s = {}", cost, s);
        }
    }

    #[test]
    fn relativistic_cost_finite_exactly_inside_limit(gamma in 0.1f64..5.0, u in -3.0f64..3.0) {
        let cost = CostModel::relativistic(gamma).unwrap();
        let s = u * gamma;
        prop_assert_eq!(cost.value(s).is_finite(), u.abs() <= 1.0);
        prop_assert!(cost.value(s) >= 0.0);
    }
}
