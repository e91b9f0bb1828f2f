mod common;

use common::*;
use platoon_shield::control_design::{closed_loop_hinf, performance_plant};
use platoon_shield::numerics::{
    eigenvalues, frequency_sweep_peak, hinf_norm, mat_exp, spectral_abscissa, zoh_discretize,
    Matrix, DEFAULT_HINF_TOL,
};
use platoon_shield::platoon_model::{
    build_follower, build_leader, discretize_follower, ControllerGains, VehicleParams,
    VehicleState,
};
use platoon_shield::rng::{stream_rng, StreamPurpose};

const OPTIMAL: ControllerGains = ControllerGains::new(5.002, 305.1862);
const COMPARISON: ControllerGains = ControllerGains::new(0.2, 0.7);

fn params(h: f64) -> VehicleParams {
    VehicleParams::new(h, 0.1).unwrap()
}

#[test]
fn zoh_matches_series_on_random_stable_systems() {
    let mut rng = stream_rng(7, "zoh-oracle", StreamPurpose::Link, 0);
    for case in 0..100 {
        let (a, b) = random_stable(&mut rng, 4, 3, 0.1);
        let ts = 0.01 * (1 + case % 10) as f64;
        let (ad, bd) = zoh_discretize(&a, &b, ts).unwrap();
        let (ad_o, bd_o) = taylor_zoh(&a, &b, ts);
        assert!(scaled_diff(&ad, &ad_o) <= 1e-10, "case {case}: Ad");
        assert!(scaled_diff(&bd, &bd_o) <= 1e-10, "case {case}: Bd");
    }
}

#[test]
fn zoh_matches_series_on_vehicle_models() {
    for h in [0.5, 0.6] {
        for gains in [OPTIMAL, COMPARISON] {
            let (a, b) = build_follower(&params(h), &gains).unwrap();
            let (ad, bd) = zoh_discretize(&a, &b, 0.01).unwrap();
            let (ad_o, bd_o) = taylor_zoh(&a, &b, 0.01);
            assert!(scaled_diff(&ad, &ad_o) <= 1e-10);
            assert!(scaled_diff(&bd, &bd_o) <= 1e-10);
        }
        let (a0, b0) = build_leader(&params(h)).unwrap();
        let (ad, bd) = zoh_discretize(&a0, &b0, 0.01).unwrap();
        let (ad_o, bd_o) = taylor_zoh(&a0, &b0, 0.01);
        assert!(scaled_diff(&ad, &ad_o) <= 1e-10);
        assert!(scaled_diff(&bd, &bd_o) <= 1e-10);
    }
}

#[test]
fn mat_exp_matches_taylor_for_larger_arguments() {
    let mut rng = stream_rng(8, "expm-oracle", StreamPurpose::Link, 0);
    for _ in 0..50 {
        let (a, _) = random_stable(&mut rng, 4, 1, 0.2);
        for t in [0.1, 1.0, 3.0] {
            let e = mat_exp(&a, t).unwrap();
            assert!(scaled_diff(&e, &taylor_expm(&a, t)) <= 1e-9);
        }
    }
}

#[test]
fn abscissa_matches_characteristic_polynomial_roots() {
    for gains in [OPTIMAL, COMPARISON] {
        let (a, _) = build_follower(&params(0.5), &gains).unwrap();
        let ours = spectral_abscissa(&a).unwrap();
        let oracle = oracle_abscissa(&a);
        assert!(ours < 0.0);
        assert!((ours - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()), "{ours} vs {oracle}");
    }
    let mut rng = stream_rng(9, "eig-oracle", StreamPurpose::Link, 0);
    for _ in 0..50 {
        let (a, _) = random_stable(&mut rng, 4, 1, 0.3);
        let ours = spectral_abscissa(&a).unwrap();
        assert!((ours + 0.3).abs() <= 1e-6, "{ours}");
    }
}

#[test]
fn eigenvalues_are_characteristic_roots() {
    let (a, _) = build_follower(&params(0.5), &OPTIMAL).unwrap();
    let ours = eigenvalues(&a).unwrap();
    let roots = poly_roots(&char_poly(&a));
    for r in &roots {
        let nearest = ours.iter().map(|z| (z - r).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-6 * (1.0 + r.norm()), "root {r} unmatched");
    }
}

#[test]
fn discrete_step_matches_rk4() {
    let p = params(0.5);
    for gains in [OPTIMAL, COMPARISON] {
        let (a, b) = build_follower(&p, &gains).unwrap();
        let plant = discretize_follower(&p, &gains, 0.01).unwrap();
        let x = VehicleState {
            e: 0.3,
            v: -1.2,
            a: 0.5,
            u: 2.0,
        };
        let input = [0.05, 3.0, -1.5];
        let ours = plant.step(&x, &input).unwrap().to_array();
        let oracle = rk4_step(&a, &b, &x.to_array(), &input, 0.01, 4000);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (p, q) in ours.iter().zip(&oracle) {
            assert!((p - q).abs() <= 1e-9 * scale, "{ours:?} vs {oracle:?}");
        }
    }
}

fn oracle_gamma(gains: ControllerGains) -> f64 {
    let pp = performance_plant(&params(0.5), &gains).unwrap();
    let pl = &pp.plant;
    oracle_peak_gain(pl.a(), pl.b(), pl.c(), pl.d())
}

#[test]
fn hinf_matches_dense_frequency_oracle() {
    for gains in [OPTIMAL, COMPARISON] {
        let gamma = closed_loop_hinf(&params(0.5), &gains, DEFAULT_HINF_TOL).unwrap();
        let oracle = oracle_gamma(gains);
        assert!(
            (gamma - oracle).abs() <= 2.0 * DEFAULT_HINF_TOL + 1e-6 * oracle,
            "{gamma} vs {oracle}"
        );
    }
}

#[test]
fn hinf_and_sweep_agree() {
    let mut rng = stream_rng(10, "hinf-oracle", StreamPurpose::Link, 0);
    for _ in 0..10 {
        let (a, b) = random_stable(&mut rng, 4, 2, 0.05);
        let c = Matrix::from_rows(&[[1.0, 0.0, 0.5, 0.0], [0.0, 1.0, 0.0, -0.3]]);
        let d = Matrix::zeros(2, 2);
        let plant = platoon_shield::numerics::StateSpacePlant::new(a, b, c, d).unwrap();
        let gamma = hinf_norm(&plant, DEFAULT_HINF_TOL).unwrap();
        let (peak, _) = frequency_sweep_peak(&plant).unwrap();
        assert!(gamma + 2.0 * DEFAULT_HINF_TOL >= peak, "{gamma} < sweep {peak}");
        let oracle = oracle_peak_gain(plant.a(), plant.b(), plant.c(), plant.d());
        assert!((gamma - oracle).abs() <= 2.0 * DEFAULT_HINF_TOL + 1e-6 * oracle, "{gamma} vs {oracle}");
    }
}
