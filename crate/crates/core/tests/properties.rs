use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI, TAU};

use proptest::prelude::*;

use coinflip_core::analysis::{in_fair_region, nutation_bounds};
use coinflip_core::montecarlo::{self, McSetup};
use coinflip_core::probability::{heads_probability, heads_probability_time_average};
use coinflip_core::{InertiaTensor, MagnitudeDensity, MomentumDirection, ProbabilityMethod};

fn inertia_strategy() -> impl Strategy<Value = InertiaTensor> {
    (1.0..10.0f64, 0.0..3.0f64, 0.1..10.0f64)
        .prop_map(|(ix, dy, dz)| InertiaTensor::new(ix, ix + dy, ix + dy + dz).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probability_is_a_probability(
        inertia in inertia_strategy(),
        beta in 0.0..PI,
        phi0 in 0.0..TAU,
        theta0 in 0.0..PI,
    ) {
        let p = heads_probability(&inertia, beta, phi0, theta0);
        prop_assert!((0.0..=1.0).contains(&p.p));
        if p.method == ProbabilityMethod::FairSymmetry {
            prop_assert_eq!(p.p, 0.5);
        }
        prop_assert_eq!(p.method == ProbabilityMethod::FairSymmetry, in_fair_region(&inertia, phi0, theta0));
    }

    #[test]
    fn starting_face_swaps_heads_and_tails(
        inertia in inertia_strategy(),
        beta in 0.05..PI - 0.05,
        phi0 in 0.0..TAU,
        theta0 in 0.05..PI - 0.05,
    ) {
        let p = heads_probability(&inertia, beta, phi0, theta0).p;
        let q = heads_probability(&inertia, beta, phi0, PI - theta0).p;
        prop_assert!((p + q - 1.0).abs() < 1e-8, "{} + {}", p, q);
        let mirrored = heads_probability(&inertia, PI - beta, phi0, PI - theta0).p;
        prop_assert!((p - mirrored).abs() < 1e-8);
        let t = heads_probability_time_average(&inertia, beta, phi0, theta0).p;
        let u = heads_probability_time_average(&inertia, beta, phi0, PI - theta0).p;
        prop_assert!((t + u - 1.0).abs() < 1e-8);
    }

    #[test]
    fn envelope_contains_release_angle(inertia in inertia_strategy(), phi0 in 0.0..TAU, theta0 in 0.0..PI) {
        let b = nutation_bounds(&inertia, phi0, theta0);
        prop_assert!(b.theta_m <= theta0 + 1e-9 && theta0 <= b.theta_max + 1e-9);
    }
}

fn density() -> MagnitudeDensity {
    MagnitudeDensity::new(1000.0, 100.0).unwrap()
}

#[test]
fn mc_limit_ignores_psi0() {
    let inertia = InertiaTensor::half_dollar();
    let dir = MomentumDirection::new(0.0, FRAC_PI_3);
    let mut a = McSetup::new(inertia, FRAC_PI_4, FRAC_PI_3, 0.0, density(), 20_000, 10.0, 3);
    let pa = montecarlo::estimate_heads(&a, &dir).unwrap();
    a.psi0 = 2.0;
    let pb = montecarlo::estimate_heads(&a, &dir).unwrap();
    let se = pa.std_error.hypot(pb.std_error);
    assert!((pa.p_hat - pb.p_hat).abs() < 3.0 * se, "{pa:?} {pb:?}");
}

#[test]
fn mc_starting_face_complements() {
    let inertia = InertiaTensor::half_dollar();
    let (beta, phi0, theta0) = (1.0, 0.6, 0.8);
    let a = McSetup::new(inertia, phi0, theta0, 0.0, density(), 20_000, 10.0, 11);
    let b = McSetup::new(inertia, phi0, PI - theta0, 0.0, density(), 20_000, 10.0, 12);
    let dir = MomentumDirection::new(0.0, beta);
    let pa = montecarlo::estimate_heads(&a, &dir).unwrap();
    let pb = montecarlo::estimate_heads(&b, &dir).unwrap();
    let se = pa.std_error.hypot(pb.std_error);
    assert!((pa.p_hat + pb.p_hat - 1.0).abs() < 3.0 * se, "{pa:?} {pb:?}");
}

#[test]
fn mc_report_json_is_deterministic() {
    let setup = McSetup::new(InertiaTensor::half_dollar(), 1.0, 1.0, 0.0, density(), 5_000, 10.0, 99);
    let dir = MomentumDirection::new(0.0, 1.0);
    let a = montecarlo::run_report(&setup, &dir).unwrap();
    let b = montecarlo::run_report(&setup, &dir).unwrap();
    assert_eq!(a, b);
    assert!(a.rng.contains("ChaCha8"));
    assert!(a.ks_phi_time_average.is_some());
}
