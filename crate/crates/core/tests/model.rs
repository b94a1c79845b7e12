use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use approx::assert_relative_eq;
use isac_ee::metrics::{self, BeamformerSolution, Target};
use isac_ee::oracle::{self, OracleConfig};
use isac_ee::scenario::{self, draw_channels, draw_channels_seeded, make_config, SystemConfig};
use isac_ee::steering::{steering, steering_derivative, SteeringPair};
use isac_ee::{Error, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg_with(pairs: &[(&str, &str)]) -> SystemConfig {
    let mut raw = scenario::default_raw();
    for (k, v) in pairs {
        raw.insert(k.to_string(), v.to_string());
    }
    make_config(&raw).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_psd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(m, m + 1, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    &g * g.adjoint() + DMatrix::identity(m, m) * c(0.05, 0.0)
}

// ---------------------------------------------------------------- scenario

#[test]
fn dbm_values_convert_to_watts() {
    let cfg = cfg_with(&[("Pmax", "30 dBm"), ("P0", "33 dBm")]);
    assert_relative_eq!(cfg.pmax, 1.0, max_relative = 1e-12);
    assert_relative_eq!(cfg.p0, 1.995_262_314_968_88, max_relative = 1e-9);
}

#[test]
fn more_users_than_antennas_rejected() {
    let mut raw = scenario::default_raw();
    raw.insert("K".into(), "3".into());
    raw.insert("M".into(), "2".into());
    match make_config(&raw) {
        Err(Error::InvalidConfig(msg)) => assert!(msg.contains("K exceeds M"), "{msg}"),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn missing_key_and_bad_units_rejected() {
    let mut raw = scenario::default_raw();
    raw.remove("L");
    assert!(matches!(make_config(&raw), Err(Error::InvalidConfig(_))));
    let mut raw = scenario::default_raw();
    raw.insert("Pmax".into(), "30 furlongs".into());
    assert!(matches!(make_config(&raw), Err(Error::InvalidConfig(_))));
    let mut raw = scenario::default_raw();
    raw.insert("eps_pa".into(), "1.5".into());
    assert!(matches!(make_config(&raw), Err(Error::InvalidConfig(_))));
}

#[test]
fn angles_and_ratios_parse() {
    let cfg = cfg_with(&[("theta", "60 deg"), ("rho", "0.15 deg"), ("gamma", "10 dB, 3")]);
    assert_relative_eq!(cfg.theta, FRAC_PI_3, max_relative = 1e-12);
    assert_relative_eq!(cfg.root_crb, 0.15f64.to_radians(), max_relative = 1e-12);
    assert_relative_eq!(cfg.rho(), 0.15f64.to_radians().powi(2), max_relative = 1e-12);
    assert_relative_eq!(cfg.gamma[0], 10.0, max_relative = 1e-12);
    assert_relative_eq!(cfg.gamma[1], 3.0, max_relative = 1e-12);
}

#[test]
fn config_text_and_raw_round_trip() {
    let text = "M = 4\nK = 1\nPmax = \"27 dBm\"\ngamma = [\"5 dB\"]\n";
    let parsed = scenario::parse_config_text(text).unwrap();
    let mut raw = scenario::default_raw();
    raw.extend(parsed);
    let cfg = make_config(&raw).unwrap();
    assert_eq!((cfg.m, cfg.k), (4, 1));
    assert_relative_eq!(cfg.pmax, 0.501_187_233_627_272_3, max_relative = 1e-12);
    let back = make_config(&scenario::to_raw(&cfg)).unwrap();
    assert_eq!(back, cfg);
    assert!(scenario::parse_config_text("M = { a = 1 }").is_err());
}

#[test]
fn channel_draws_are_deterministic_and_shaped() {
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    let a = draw_channels(&cfg);
    let b = draw_channels(&cfg);
    assert_eq!(a, b);
    assert_eq!(a.h.len(), 2);
    assert!(a.h.iter().all(|h| h.len() == 4));
    let other = draw_channels_seeded(&cfg, cfg.rng_seed + 1);
    assert_ne!(a.h, other.h);
}

#[test]
fn channel_entries_have_unit_power() {
    let cfg = cfg_with(&[("M", "50"), ("K", "50"), ("N_rx", "50"), ("gamma", "1")]);
    let mut acc = 0.0;
    let mut n = 0usize;
    for s in 0..40 {
        for h in draw_channels_seeded(&cfg, s).h {
            acc += h.norm_squared();
            n += h.len();
        }
    }
    assert!(n >= 100_000);
    let mean = acc / n as f64;
    assert!((0.98..=1.02).contains(&mean), "mean power {mean}");
}

proptest! {
    #[test]
    fn dbm_round_trip(x in -60.0f64..60.0) {
        let back = scenario::watt_to_dbm(scenario::dbm_to_watt(x));
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn db_round_trip(x in -40.0f64..40.0) {
        let back = scenario::linear_to_db(scenario::db_to_linear(x));
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

// ---------------------------------------------------------------- steering

#[test]
fn steering_examples() {
    let a = steering(FRAC_PI_2, 4);
    for z in a.iter() {
        assert!((z - c(1.0, 0.0)).norm() < 1e-15);
    }
    let a = steering(0.0, 2);
    assert!((a[1] - c(-1.0, 0.0)).norm() < 1e-15);
    let a = steering(FRAC_PI_3, 3);
    let want = [c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)];
    for (z, w) in a.iter().zip(want) {
        assert!((z - w).norm() < 1e-12);
    }
}

#[test]
fn derivative_examples() {
    let d = steering_derivative(FRAC_PI_2, 3);
    let want = [c(0.0, 0.0), c(0.0, PI), c(0.0, 2.0 * PI)];
    for (z, w) in d.iter().zip(want) {
        assert!((z - w).norm() < 1e-12);
    }
    assert_eq!(steering_derivative(1.1, 1)[0], c(0.0, 0.0));
    let s = FRAC_PI_4.sin();
    let want = c(0.0, PI * s) * C64::from_polar(1.0, -PI * s);
    assert!((steering_derivative(FRAC_PI_4, 2)[1] - want).norm() < 1e-12);
}

#[test]
fn steering_pair_shapes() {
    let p = SteeringPair::new(1.0, 4, 6);
    assert_eq!((p.a_t.len(), p.a_r.len(), p.da_t.len()), (4, 6, 4));
    assert_eq!(p.a_t[0], c(1.0, 0.0));
    assert_eq!(p.da_t[0], c(0.0, 0.0));
}

proptest! {
    #[test]
    fn derivative_matches_central_difference(theta in 0.0f64..PI, n in 1usize..=32) {
        let h = 1e-6;
        let fd = (steering(theta + h, n) - steering(theta - h, n)) / c(2.0 * h, 0.0);
        let err = (steering_derivative(theta, n) - fd).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-5, "err {}", err);
    }

    #[test]
    fn steering_has_unit_modulus(theta in 0.0f64..PI, n in 1usize..=32) {
        let a = steering(theta, n);
        prop_assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        prop_assert!((a.norm_squared() - n as f64).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------- metrics

#[test]
fn sinr_examples() {
    let w = DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
    let h = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    assert_relative_eq!(metrics::sinr_k(&w, &h, 0, 1.0, None), 1.0);

    // h_1 orthogonal to w_2, |h_1ᴴw_1|² = 4
    let w = DMatrix::from_columns(&[
        DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]),
        DVector::from_vec(vec![c(0.0, 0.0), c(3.0, 1.0)]),
    ]);
    let h1 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    assert_relative_eq!(metrics::sinr_k(&w, &h1, 0, 2.0, None), 2.0);

    let probe = DMatrix::identity(2, 2) * c(2.0, 0.0);
    assert_relative_eq!(metrics::sinr_k(&w, &h1, 0, 2.0, Some(&probe)), 1.0);
}

#[test]
fn sinr_matches_scalar_loop_oracle() {
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in 0..10 {
        let ch = draw_channels_seeded(&cfg, s);
        let w = DMatrix::from_fn(4, 2, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let probe = random_psd(&mut rng, 4);
        for k in 0..2 {
            let hv: Vec<C64> = ch.h[k].iter().copied().collect();
            for p in [None, Some(&probe)] {
                let a = metrics::sinr_k(&w, &ch.h[k], k, cfg.sigma_c2, p);
                let b = oracle::sinr_loop(&w, &hv, k, cfg.sigma_c2, p);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
        let a = metrics::ee_comm(&w, &ch, &cfg, Some(&probe));
        let b = oracle::ee_comm_loop(&w, &ch, &cfg, Some(&probe));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn ee_comm_examples() {
    let cfg = cfg_with(&[("M", "2"), ("K", "1"), ("N_rx", "2"), ("eps_pa", "0.5"), ("P0", "1"), ("sigma_c2", "0.5")]);
    let h = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let ch = scenario::ChannelSet {
        h: vec![h],
        theta: cfg.theta,
        alpha: cfg.alpha,
        scatterers: vec![],
    };
    assert_eq!(metrics::ee_comm(&DMatrix::zeros(2, 1), &ch, &cfg, None), 0.0);
    // SINR = 1 with radiated power ε·1 W: one bit over 2 W
    let s = cfg.eps_pa.sqrt();
    let w = DMatrix::from_column_slice(2, 1, &[c(s, 0.0), c(0.0, 0.0)]);
    assert_relative_eq!(metrics::ee_comm(&w, &ch, &cfg, None), 0.5, max_relative = 1e-12);
}

#[test]
fn ee_comm_decreases_with_interference() {
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    let ch = draw_channels_seeded(&cfg, 11);
    let w = DMatrix::from_fn(4, 2, |i, j| c((i + j) as f64 * 0.1, 0.05 * i as f64));
    let mut last = metrics::ee_comm(&w, &ch, &cfg, None);
    let mut probe = DMatrix::zeros(4, 4);
    for _ in 0..5 {
        probe += ch.h[0].clone() * ch.h[0].adjoint() * c(1e-3, 0.0);
        let rate = metrics::sum_rate(&metrics::sinrs(&w, &ch, cfg.sigma_c2, Some(&probe)));
        let cur = rate / cfg.consumed_power(w.norm_squared());
        assert!(cur <= last + 1e-15);
        last = cur;
    }
}

#[test]
fn crb_single_antenna_is_undefined() {
    let cfg = cfg_with(&[("M", "1"), ("K", "1"), ("N_rx", "1")]);
    let rx = DMatrix::identity(1, 1);
    assert!(matches!(metrics::crb_point(&rx, FRAC_PI_2, c(1.0, 0.0), &cfg), Err(Error::CrbUndefined(_))));
    let j = oracle::fisher_fd(&rx, FRAC_PI_2, c(1.0, 0.0), &cfg, &OracleConfig::default()).unwrap();
    assert_eq!(j, 0.0);
}

#[test]
fn crb_two_antennas_identity_matches_fd_oracle() {
    let cfg = cfg_with(&[("M", "2"), ("K", "1"), ("N_rx", "2"), ("L", "1"), ("sigma_s2", "1"), ("alpha", "1")]);
    let rx = DMatrix::identity(2, 2);
    let crb = metrics::crb_point(&rx, FRAC_PI_2, c(1.0, 0.0), &cfg).unwrap();
    let j = oracle::fisher_fd(&rx, FRAC_PI_2, c(1.0, 0.0), &cfg, &OracleConfig::default()).unwrap();
    assert_relative_eq!(crb, 1.0 / j, max_relative = 1e-6);
    // F = M‖ȧ‖² + M‖ȧ‖² − M|aᴴȧ|²/M with ȧ = [0, jπ]
    let f = 2.0 * PI * PI + 2.0 * PI * PI - PI * PI;
    assert_relative_eq!(crb, 1.0 / (2.0 * f), max_relative = 1e-12);
}

#[test]
fn crb_scales_inversely_with_covariance() {
    let cfg = cfg_with(&[("M", "4"), ("K", "1"), ("N_rx", "4")]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let rx = random_psd(&mut rng, 4);
        let s: f64 = rng.random_range(0.1..10.0);
        let a = metrics::crb_point(&rx, 1.2, cfg.alpha, &cfg).unwrap();
        let b = metrics::crb_point(&(&rx * c(s, 0.0)), 1.2, cfg.alpha, &cfg).unwrap();
        assert_relative_eq!(b, a / s, max_relative = 1e-10);
        let a = metrics::crb_extended(&rx, &cfg).unwrap();
        let b = metrics::crb_extended(&(&rx * c(s, 0.0)), &cfg).unwrap();
        assert_relative_eq!(b, a / s, max_relative = 1e-10);
    }
}

#[test]
fn crb_depends_on_covariance_only() {
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = DMatrix::from_fn(4, 2, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    // right-multiplying by a unitary leaves W Wᴴ unchanged
    let t = 0.7f64;
    let u = DMatrix::from_row_slice(2, 2, &[c(t.cos(), 0.0), c(0.0, t.sin()), c(0.0, t.sin()), c(t.cos(), 0.0)]);
    let a = BeamformerSolution::new(w.clone(), None);
    let b = BeamformerSolution::new(&w * u, None);
    let ca = metrics::crb_point(&a.covariance(), 1.0, cfg.alpha, &cfg).unwrap();
    let cb = metrics::crb_point(&b.covariance(), 1.0, cfg.alpha, &cfg).unwrap();
    assert_relative_eq!(ca, cb, max_relative = 1e-12);
}

#[test]
fn crb_extended_examples() {
    let cfg = cfg_with(&[("M", "3"), ("K", "1"), ("N_rx", "3"), ("L", "1"), ("sigma_s2", "1")]);
    assert_relative_eq!(metrics::crb_extended(&DMatrix::identity(3, 3), &cfg).unwrap(), 9.0, max_relative = 1e-12);
    let cfg2 = cfg_with(&[("M", "2"), ("K", "1"), ("N_rx", "2"), ("L", "1"), ("sigma_s2", "1")]);
    let rx = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
    assert_relative_eq!(metrics::crb_extended(&rx, &cfg2).unwrap(), 3.0, max_relative = 1e-12);
    let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
    assert!(matches!(metrics::crb_extended(&singular, &cfg2), Err(Error::RankDeficient(_))));
}

#[test]
fn crb_extended_matches_eigen_oracle() {
    let cfg = cfg_with(&[("M", "4"), ("K", "1"), ("N_rx", "4")]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let rx = random_psd(&mut rng, 4);
        let a = metrics::crb_extended(&rx, &cfg).unwrap();
        let b = oracle::crb_extended_eig(&rx, &cfg).unwrap();
        assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
    }
}

#[test]
fn ee_sense_examples() {
    let cfg = cfg_with(&[("L", "1"), ("P0", "1")]);
    assert_relative_eq!(metrics::ee_sense(1.0, 0.0, &cfg), 1.0);
    let cfg2 = SystemConfig { l: 2, ..cfg.clone() };
    assert_relative_eq!(metrics::ee_sense(0.3, 0.5, &cfg2), 0.5 * metrics::ee_sense(0.3, 0.5, &cfg), max_relative = 1e-15);
}

#[test]
fn evaluate_reports_consistent_metrics() {
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    let ch = draw_channels_seeded(&cfg, 2);
    let w = DMatrix::from_fn(4, 2, |i, j| c(0.2 + 0.1 * i as f64, 0.05 * j as f64));
    let mut sol = BeamformerSolution::new(w, None);
    let rep = metrics::evaluate(&sol, &ch, &cfg, Target::Point);
    let p = sol.radiated_power();
    let j = oracle::fisher_fd(&sol.covariance(), ch.theta, ch.alpha, &cfg, &OracleConfig::default()).unwrap();
    assert_relative_eq!(rep.crb, 1.0 / j, max_relative = 1e-6);
    let want = 1.0 / (rep.crb * cfg.l as f64 * (p / cfg.eps_pa + cfg.p0));
    assert!((rep.ee_s - want).abs() <= 1e-12 * want);
    rep.record(&mut sol);
    assert_eq!(sol.achieved["ee_c"], rep.ee_c);
    assert_eq!(sol.achieved["sinr_1"], rep.sinr[1]);
}
