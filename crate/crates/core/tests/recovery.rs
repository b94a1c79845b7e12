use isac_ee::recovery::{self, closed_form_beam, eig_ratio, numeric_rank, recover_rank1, RecoveryPath};
use isac_ee::scenario::{self, draw_channels_seeded, make_config, ChannelSet, SystemConfig};
use isac_ee::{metrics, Error, C64};
use nalgebra::{DMatrix, DVector};
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

fn random_psd_rank(rng: &mut ChaCha8Rng, m: usize, rank: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(m, rank, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    &g * g.adjoint()
}

fn min_eig(h: &DMatrix<C64>) -> f64 {
    let s = (h + h.adjoint()) * c(0.5, 0.0);
    s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn channels(m: usize, k: usize, seed: u64) -> ChannelSet {
    let cfg = cfg_with(&[("M", &m.to_string()), ("K", &k.to_string()), ("N_rx", &m.to_string())]);
    draw_channels_seeded(&cfg, seed)
}

#[test]
fn numeric_rank_examples() {
    let i3 = DMatrix::<C64>::identity(3, 3);
    assert_eq!(numeric_rank(&i3, 1e-6), 3);
    assert_eq!(numeric_rank(&DMatrix::zeros(3, 3), 1e-6), 0);
    let v = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)]);
    let r1 = &v * v.adjoint();
    assert_eq!(numeric_rank(&r1, 1e-6), 1);
    assert!(eig_ratio(&r1) < 1e-12);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(1e-8, 0.0), c(0.0, 0.0)]));
    assert_eq!(numeric_rank(&d, 1e-6), 1);
    assert_eq!(numeric_rank(&d, 1e-9), 2);
}

#[test]
fn closed_form_keeps_the_numerator_and_stays_below() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for s in 0..50 {
        let ch = channels(4, 1, s);
        let h = &ch.h[0];
        let rank = rng.random_range(1..=4);
        let w = random_psd_rank(&mut rng, 4, rank);
        let b = closed_form_beam(&w, h).unwrap();
        let before = h.dotc(&(&w * h)).re;
        let after = h.dotc(&b).norm_sqr();
        assert!((before - after).abs() <= 1e-10 * before);
        // W − bbᴴ ⪰ 0
        assert!(min_eig(&(&w - &b * b.adjoint())) >= -1e-10 * w.norm());
    }
}

#[test]
fn closed_form_rejects_blind_covariance() {
    let h = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let v = DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(matches!(closed_form_beam(&(&v * v.adjoint()), &h), Err(Error::Degenerate(_))));
}

#[test]
fn recovery_with_probe_preserves_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = cfg_with(&[("M", "4"), ("K", "2"), ("N_rx", "4")]);
    for s in 0..20 {
        let ch = draw_channels_seeded(&cfg, s);
        let ws: Vec<DMatrix<C64>> = (0..2).map(|_| random_psd_rank(&mut rng, 4, 3) * c(0.2, 0.0)).collect();
        let probe = random_psd_rank(&mut rng, 4, 2) * c(0.05, 0.0);
        let (w, rp, rep) = recover_rank1(&ws, Some(&probe), &ch).unwrap();
        assert_eq!(rep.path, RecoveryPath::ClosedForm);
        assert!(rep.numerator_delta <= 1e-10, "{}", rep.numerator_delta);
        assert!(rep.covariance_delta <= 1e-10, "{}", rep.covariance_delta);
        assert!(rep.eig_ratio_after <= 1e-6);
        let rp = rp.unwrap();
        assert!(min_eig(&rp) >= -1e-10);
        // every user sees the same signal and interference as under the relaxed solution
        for k in 0..2 {
            let h = &ch.h[k];
            let relaxed_signal = h.dotc(&(&ws[k] * h)).re;
            let relaxed_interf = cfg.sigma_c2 + h.dotc(&(&ws[1 - k] * h)).re + h.dotc(&(&probe * h)).re;
            let sinr = metrics::sinr_k(&w, h, k, cfg.sigma_c2, Some(&rp));
            let want = relaxed_signal / relaxed_interf;
            assert!((sinr - want).abs() <= 1e-9 * want, "{sinr} vs {want}");
        }
    }
}

#[test]
fn recovery_of_rank_one_input_is_identity() {
    let ch = channels(3, 1, 4);
    let v = DVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.1, 0.0)]);
    let ws = vec![&v * v.adjoint()];
    let (w, rp, rep) = recover_rank1(&ws, Some(&DMatrix::zeros(3, 3)), &ch).unwrap();
    assert_eq!(rep.path, RecoveryPath::AlreadyRank1);
    let col = w.column(0);
    assert!((&col * col.adjoint() - &ws[0]).norm() < 1e-12);
    assert!(rp.unwrap().norm() < 1e-12);
}

#[test]
fn recovery_without_probe_uses_dominant_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = channels(4, 2, 5);
    let ws: Vec<DMatrix<C64>> = (0..2).map(|_| random_psd_rank(&mut rng, 4, 2)).collect();
    let (w, rp, rep) = recover_rank1(&ws, None, &ch).unwrap();
    assert_eq!(rep.path, RecoveryPath::DominantEigenvector);
    assert!(rp.is_none());
    for k in 0..2 {
        let top = recovery::spectrum(&ws[k])[0];
        assert!((w.column(k).norm_squared() - top).abs() < 1e-10 * top);
    }
}

#[test]
fn recovery_rejects_indefinite_and_mismatched_input() {
    let ch = channels(2, 1, 6);
    let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-0.1, 0.0)]));
    assert!(matches!(recover_rank1(&[bad], None, &ch), Err(Error::Degenerate(_))));
    assert!(matches!(recover_rank1(&[], None, &ch), Err(Error::Dimension(_))));
}

#[test]
fn projection_clips_negative_eigenvalues() {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0, 0.0), c(-1e-9, 0.0)]));
    let p = recovery::project_psd(&m);
    assert!(min_eig(&p) >= 0.0);
    assert!((p[(0, 0)].re - 2.0).abs() < 1e-14);
}
