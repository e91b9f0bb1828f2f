mod common;

use common::*;
use proptest::prelude::*;

use platoon_shield::attack_monitor::{detect, detection_thresholds, isolate, ReferenceSelector};
use platoon_shield::channel_set::ChannelSet;
use platoon_shield::control_design::{closed_loop_hinf, performance_plant, string_stability_check, SignalNorm};
use platoon_shield::fusion::{fuse, fuse_unchecked, noise_bound_inf};
use platoon_shield::numerics::{hinf_norm, mat_exp, spectral_abscissa, Matrix, DEFAULT_HINF_TOL};
use platoon_shield::platoon_model::{discretize_follower, ControllerGains, VehicleParams, VehicleState};
use platoon_shield::rng::{stream_rng, StreamPurpose};
use platoon_shield::v2v_link::{
    ambiguity_attack_pair, transmit, AttackKind, AttackPolicy, ChannelModel, MagnitudeDistribution,
    NoiseDistribution,
};

fn channels_strategy() -> impl Strategy<Value = Vec<ChannelModel>> {
    prop::sample::select(vec![3usize, 4, 5, 6, 7])
        .prop_flat_map(|n| prop::collection::vec(0.0f64..1.0, n))
        .prop_map(|bounds| bounds.into_iter().map(ChannelModel::uniform).collect())
}

fn valid_gains() -> impl Strategy<Value = (VehicleParams, ControllerGains)> {
    (0.2f64..1.5, 0.05f64..0.5, 0.05f64..10.0, 1.01f64..50.0).prop_map(|(h, tau, kp, ratio)| {
        let p = VehicleParams::new(h, tau).unwrap();
        let kd = kp * tau * ratio;
        (p, ControllerGains::new(kp, kd))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_semigroup(seed in any::<u64>(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let mut rng = stream_rng(seed, "semigroup", StreamPurpose::Link, 0);
        let (a, _) = random_stable(&mut rng, 4, 1, 0.1);
        // Keep ‖A(t1 + t2)‖ ≤ 5.
        let scale = (5.0 / (a.norm_1() * (t1 + t2)).max(1e-12)).min(1.0);
        let a = a.scale(scale);
        let lhs = mat_exp(&a, t1 + t2).unwrap();
        let rhs = &mat_exp(&a, t1).unwrap() * &mat_exp(&a, t2).unwrap();
        prop_assert!(scaled_diff(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn abscissa_similarity_invariant(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, "similarity", StreamPurpose::Link, 0);
        let (a, _) = random_stable(&mut rng, 4, 1, 0.5);
        let (p, _) = random_stable(&mut rng, 4, 1, 0.0);
        // Well-conditioned T = I + 0.2·P/‖P‖.
        let t = &Matrix::identity(4) + &p.scale(0.2 / p.norm_1());
        let tat = &(&t * &a) * &t.inverse().unwrap();
        let a1 = spectral_abscissa(&a).unwrap();
        let a2 = spectral_abscissa(&tat).unwrap();
        prop_assert!((a1 - a2).abs() <= 1e-8, "{} {}", a1, a2);
    }

    #[test]
    fn step_is_linear(
        (p, g) in valid_gains(),
        x1 in prop::array::uniform4(-10.0f64..10.0),
        x2 in prop::array::uniform4(-10.0f64..10.0),
        u1 in prop::array::uniform3(-10.0f64..10.0),
        u2 in prop::array::uniform3(-10.0f64..10.0),
    ) {
        let plant = discretize_follower(&p, &g, 0.01).unwrap();
        let s = |x: [f64; 4], u: [f64; 3]| plant.step(&VehicleState::from_slice(&x).unwrap(), &u).unwrap().to_array();
        let sum_x: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let sum_u: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let lhs = plant.step(&VehicleState::from_slice(&sum_x).unwrap(), &sum_u).unwrap().to_array();
        let (r1, r2, r0) = (s(x1, u1), s(x2, u2), s([0.0; 4], [0.0; 3]));
        let scale = plant.ad().max_abs().max(plant.bd().max_abs()).max(1.0) * 40.0;
        for i in 0..4 {
            prop_assert!((lhs[i] - (r1[i] + r2[i] - r0[i])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_input_decay((p, g) in valid_gains(), x0 in prop::array::uniform4(-5.0f64..5.0)) {
        let plant = discretize_follower(&p, &g, 0.01).unwrap();
        let (a, _) = platoon_shield::platoon_model::build_follower(&p, &g).unwrap();
        prop_assert!(spectral_abscissa(&a).unwrap() < 0.0);
        let mut x = VehicleState::from_slice(&x0).unwrap();
        let mut window_max = Vec::new();
        for _ in 0..40 {
            let mut m = 0.0f64;
            for _ in 0..1000 {
                x = plant.step(&x, &[0.0; 3]).unwrap();
                m = m.max(x.max_abs());
            }
            window_max.push(m);
        }
        let last = *window_max.last().unwrap();
        prop_assert!(last < window_max[0] || window_max[0] < 1e-12);
        for w in window_max.windows(2).skip(1) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
        }
    }

    #[test]
    fn hinf_similarity_invariant(seed in 0u64..1000) {
        let mut rng = stream_rng(seed, "hinf-similarity", StreamPurpose::Link, 0);
        let (a, b) = random_stable(&mut rng, 4, 2, 0.1);
        let c = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
        let plant = platoon_shield::numerics::StateSpacePlant::new(a, b, c, Matrix::zeros(2, 2)).unwrap();
        let (p, _) = random_stable(&mut rng, 4, 1, 0.0);
        let t = &Matrix::identity(4) + &p.scale(0.2 / p.norm_1());
        let g1 = hinf_norm(&plant, DEFAULT_HINF_TOL).unwrap();
        let g2 = hinf_norm(&plant.similarity(&t).unwrap(), DEFAULT_HINF_TOL).unwrap();
        prop_assert!((g1 - g2).abs() <= 2.0 * DEFAULT_HINF_TOL, "{} {}", g1, g2);
    }

    #[test]
    fn invalid_gains_refuse_plant(kp in 0.01f64..10.0, frac in 0.0f64..1.0, tau in 0.05f64..0.5) {
        let p = VehicleParams::new(0.5, tau).unwrap();
        let g = ControllerGains::new(kp, kp * tau * frac);
        prop_assert!(performance_plant(&p, &g).is_err());
    }

    #[test]
    fn noise_respects_bounds(b in 0.0f64..2.0, std in 0.01f64..5.0, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, "noise", StreamPurpose::Link, 0);
        let uni = ChannelModel::uniform(b);
        let gauss = ChannelModel { noise_bound: b, distribution: NoiseDistribution::TruncatedGaussian { std } };
        for _ in 0..200 {
            prop_assert!(uni.sample_noise(&mut rng).abs() <= b);
            prop_assert!(gauss.sample_noise(&mut rng).abs() <= b);
        }
    }

    #[test]
    fn transmit_honours_budget(
        channels in channels_strategy(),
        kind in 0usize..4,
        seed in any::<u64>(),
        u in -20.0f64..20.0,
    ) {
        let n = channels.len();
        let q = (n - 1) / 2;
        let kind = match kind {
            0 => AttackKind::None,
            1 => AttackKind::RandomSingleChannel,
            2 => AttackKind::RoundRobin,
            _ => AttackKind::FixedSet(ChannelSet::from_indices(0..q).unwrap()),
        };
        let policy = AttackPolicy { kind, q: q.max(1), magnitude: MagnitudeDistribution::default() };
        let mut rng = stream_rng(seed, "budget", StreamPurpose::Link, 0);
        for k in 0..50 {
            let f = transmit(u, &channels, &policy, k, &mut rng).unwrap();
            prop_assert!(f.true_attack_support.len() <= policy.q);
            for (j, ch) in channels.iter().enumerate() {
                if !f.true_attack_support.contains(j) {
                    prop_assert!((f.values[j] - u).abs() <= ch.noise_bound + 1e-12 * (1.0 + u.abs()));
                }
            }
        }
    }

    #[test]
    fn ties_are_deterministic(n in 3usize..8, v in -10.0f64..10.0) {
        let q = (n - 1) / 2;
        let a = fuse(&vec![v; n], q).unwrap();
        let b = fuse(&vec![v; n], q).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.sigma, ChannelSet::all(n - q));
        prop_assert_eq!(a.u_hat, v);
    }

    #[test]
    fn fusion_is_deterministic(values in prop::collection::vec(-100.0f64..100.0, 3..8)) {
        let q = (values.len() - 1) / 2;
        prop_assert_eq!(fuse(&values, q).unwrap(), fuse(&values, q).unwrap());
    }

    #[test]
    fn ambiguity_frames_are_indistinguishable(
        (n, q) in prop::sample::select(vec![(2usize, 1usize), (3, 2), (4, 2), (5, 3), (6, 3), (7, 4)]),
        u in -20.0f64..20.0,
        offset in 0.1f64..20.0,
        seed in any::<u64>(),
    ) {
        let mut rng = stream_rng(seed, "ambiguity", StreamPurpose::Link, 0);
        let channels = vec![ChannelModel::uniform(0.1); n];
        let noise: Vec<f64> = channels.iter().map(|c| c.sample_noise(&mut rng)).collect();
        let w = ChannelSet::from_indices(0..q).unwrap();
        let w_bar = ChannelSet::from_indices(n - q..n).unwrap();
        let (f1, f2) = ambiguity_attack_pair(u, u + offset, n, q, w, w_bar, &noise).unwrap();
        prop_assert_eq!(&f1.values, &f2.values);
        prop_assert!(f1.values.iter().zip(&f2.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_ne!(f1.true_command, f2.true_command);
        prop_assert_eq!(fuse_unchecked(&f1.values, q).unwrap(), fuse_unchecked(&f2.values, q).unwrap());
    }

    #[test]
    fn clean_frames_raise_no_alarm(
        channels in channels_strategy(),
        u in -50.0f64..50.0,
        seed in any::<u64>(),
        random_ref in any::<bool>(),
    ) {
        let mut rng = stream_rng(seed, "clean", StreamPurpose::Link, 0);
        let n = channels.len();
        let q = (n - 1) / 2;
        let thresholds = detection_thresholds(&channels);
        let mut selector = if random_ref {
            ReferenceSelector::seeded(stream_rng(seed, "clean", StreamPurpose::Reference, 0))
        } else {
            ReferenceSelector::SmallestIndex
        };
        for k in 0..20 {
            let f = transmit(u, &channels, &AttackPolicy::none(q), k, &mut rng).unwrap();
            let (det, _) = detect(&f.values, &thresholds).unwrap();
            prop_assert!(!det);
            let out = fuse(&f.values, q).unwrap();
            let (iso, reference) = isolate(&f.values, out.sigma, &channels, &mut selector).unwrap();
            prop_assert!(iso.is_empty());
            prop_assert!(out.sigma.contains(reference));
            prop_assert!((out.u_hat - u).abs() <= noise_bound_inf(&channels) + 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn isolation_respects_pairwise_bound(
        channels in channels_strategy(),
        values_seed in any::<u64>(),
    ) {
        let mut rng = stream_rng(values_seed, "pairwise", StreamPurpose::Link, 0);
        let n = channels.len();
        let policy = AttackPolicy::random_single_channel(MagnitudeDistribution::default());
        let f = transmit(1.0, &channels, &policy, 0, &mut rng).unwrap();
        let out = fuse(&f.values, (n - 1) / 2).unwrap();
        let (iso, r) = isolate(&f.values, out.sigma, &channels, &mut ReferenceSelector::SmallestIndex).unwrap();
        for j in 0..n {
            let within = (f.values[r] - f.values[j]).abs() <= channels[r].noise_bound + channels[j].noise_bound;
            prop_assert_eq!(within, !iso.contains(j));
        }
    }

    #[test]
    fn string_stability_ratio(norms in prop::collection::vec(0.0f64..10.0, 1..6)) {
        let traces: Vec<Vec<f64>> = norms.iter().map(|&c| vec![c; 4]).collect();
        let r = string_stability_check(&traces, 0.25, SignalNorm::LInf, 0.0).unwrap();
        let mut expect = 0.0f64;
        for w in norms.windows(2) {
            let q = if w[1] == 0.0 { 0.0 } else if w[0] == 0.0 { f64::INFINITY } else { w[1] / w[0] };
            expect = expect.max(q);
        }
        prop_assert_eq!(r.worst_ratio, expect);
        prop_assert_eq!(r.monotone, expect <= 1.0);
    }
}

#[test]
fn fusion_error_bound_over_random_frames() {
    let sweep = frame_sweep(100_000, 2024);
    assert_eq!(sweep.frames, 100_000);
    assert!(sweep.attacked_frames > 50_000);
    assert_eq!(sweep.fusion_violations, 0, "worst excess {}", sweep.worst_fusion_ratio);
}

#[test]
fn clean_subsets_stay_within_noise_bound() {
    let sweep = frame_sweep(20_000, 2025);
    assert!(sweep.subset_checks > 20_000);
    assert_eq!(sweep.subset_violations, 0);
}

#[test]
fn paper_gain_ordering() {
    let p = VehicleParams::new(0.5, 0.1).unwrap();
    let opt = closed_loop_hinf(&p, &ControllerGains::new(5.002, 305.1862), DEFAULT_HINF_TOL).unwrap();
    let cmp = closed_loop_hinf(&p, &ControllerGains::new(0.2, 0.7), DEFAULT_HINF_TOL).unwrap();
    assert!(opt < cmp);
}
