//! Rank-one beamformers from relaxed covariance solutions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::ChannelSet;
use crate::C64;

/// Eigenvalue-ratio threshold below which a covariance counts as rank one.
pub const RANK_TOL: f64 = 1e-6;

/// How the beamformers were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryPath {
    /// Every `W_k` was numerically rank one already.
    AlreadyRank1,
    /// `Ŵ_k = W_k h_k h_kᴴ W_k / (h_kᴴ W_k h_k)`, residual moved into the probe.
    ClosedForm,
    /// Principal eigenvector of each `W_k` (no probing covariance to absorb the rest).
    DominantEigenvector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    /// Eigenvalues of each input `W_k`, descending.
    pub spectra: Vec<Vec<f64>>,
    pub ranks: Vec<usize>,
    pub path: RecoveryPath,
    /// Largest change of `h_kᴴ W_k h_k` (absolute).
    pub numerator_delta: f64,
    /// Frobenius change of the total covariance.
    pub covariance_delta: f64,
    /// Largest `λ₂/λ₁` of the recovered `w_k w_kᴴ`.
    pub eig_ratio_after: f64,
}

/// Descending eigenvalues of a Hermitian matrix.
pub fn spectrum(w: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(w).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn hermitian_part(w: &DMatrix<C64>) -> DMatrix<C64> {
    (w + w.adjoint()) * C64::new(0.5, 0.0)
}

/// Nearest Hermitian PSD matrix (negative eigenvalues clipped to zero).
pub fn project_psd(w: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(w).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0), 0.0)));
    let v = &eig.eigenvectors;
    let p = v * d * v.adjoint();
    hermitian_part(&p)
}

/// Number of eigenvalues `≥ ratio_tol·λ_max`.
pub fn numeric_rank(w: &DMatrix<C64>, ratio_tol: f64) -> usize {
    let ev = spectrum(w);
    let top = ev.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return 0;
    }
    ev.iter().filter(|&&l| l >= ratio_tol * top).count()
}

/// `λ₂/λ₁`, 0 for a zero matrix.
pub fn eig_ratio(w: &DMatrix<C64>) -> f64 {
    let ev = spectrum(w);
    match ev.as_slice() {
        [l1, l2, ..] if *l1 > 0.0 => (l2.max(0.0)) / l1,
        _ => 0.0,
    }
}

/// `√λ₁ v₁` of a Hermitian PSD matrix.
pub fn dominant_beam(w: &DMatrix<C64>) -> DVector<C64> {
    let eig = hermitian_part(w).symmetric_eigen();
    let (i, l) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
    eig.eigenvectors.column(i) * C64::new(l.max(0.0).sqrt(), 0.0)
}

/// `w = W h / √(hᴴWh)`, so that `wwᴴ = W h hᴴ W / (hᴴ W h)`.
pub fn closed_form_beam(w: &DMatrix<C64>, h: &DVector<C64>) -> Result<DVector<C64>> {
    let wh = w * h;
    let g = h.dotc(&wh).re;
    let scale = w.trace().re.abs().max(f64::MIN_POSITIVE) * h.norm_squared();
    if !(g > 1e-12 * scale) {
        return Err(Error::Degenerate(format!("h^H W h = {g:.3e}")));
    }
    Ok(wh / C64::new(g.sqrt(), 0.0))
}

/// Rank-one beamformers for relaxed solutions `{W_k}`.
///
/// With a probing covariance, each `W_k` is replaced by its closed-form
/// rank-one part and the remainder `W_k − w_kw_kᴴ ⪰ 0` is added to the
/// probe. This keeps every `h_kᴴW_kh_k`, every user's interference and the
/// total covariance unchanged. Without a probe, the principal eigenvector of
/// each `W_k` is used.
pub fn recover_rank1(ws: &[DMatrix<C64>], rprobe: Option<&DMatrix<C64>>, ch: &ChannelSet) -> Result<(DMatrix<C64>, Option<DMatrix<C64>>, RankReport)> {
    let k = ws.len();
    if k == 0 || ch.h.len() != k {
        return Err(Error::Dimension(format!("{} covariances for {} users", k, ch.h.len())));
    }
    let m = ws[0].nrows();
    let spectra: Vec<Vec<f64>> = ws.iter().map(spectrum).collect();
    for (i, s) in spectra.iter().enumerate() {
        let top = s.first().copied().unwrap_or(0.0).max(0.0);
        if let Some(&low) = s.last() {
            if low < -1e-9 * top.max(1.0) {
                return Err(Error::Degenerate(format!("W_{i} is not PSD (eigenvalue {low:.3e})")));
            }
        }
    }
    let ranks: Vec<usize> = ws.iter().map(|w| numeric_rank(w, RANK_TOL)).collect();
    let all_rank1 = ranks.iter().all(|&r| r <= 1);

    let mut out = DMatrix::zeros(m, k);
    let mut probe_out = rprobe.cloned();
    let path;
    match rprobe {
        Some(r) => {
            let mut rp = hermitian_part(r);
            for (i, (w, h)) in ws.iter().zip(&ch.h).enumerate() {
                let b = closed_form_beam(w, h)?;
                rp += w - &b * b.adjoint();
                out.set_column(i, &b);
            }
            probe_out = Some(hermitian_part(&rp));
            path = if all_rank1 { RecoveryPath::AlreadyRank1 } else { RecoveryPath::ClosedForm };
        }
        None => {
            for (i, w) in ws.iter().enumerate() {
                out.set_column(i, &dominant_beam(w));
            }
            path = if all_rank1 { RecoveryPath::AlreadyRank1 } else { RecoveryPath::DominantEigenvector };
        }
    }

    let mut numerator_delta: f64 = 0.0;
    for (i, (w, h)) in ws.iter().zip(&ch.h).enumerate() {
        let before = h.dotc(&(w * h)).re;
        let after = h.dotc(&out.column(i)).norm_sqr();
        numerator_delta = numerator_delta.max((before - after).abs());
    }
    let mut before = DMatrix::<C64>::zeros(m, m);
    for w in ws {
        before += w;
    }
    if let Some(r) = rprobe {
        before += r;
    }
    let mut after = &out * out.adjoint();
    if let Some(r) = &probe_out {
        after += r;
    }
    let covariance_delta = (before - after).norm();
    let eig_ratio_after = (0..k)
        .map(|i| {
            let c = out.column(i);
            eig_ratio(&(&c * c.adjoint()))
        })
        .fold(0.0, f64::max);
    Ok((
        out,
        probe_out,
        RankReport {
            spectra,
            ranks,
            path,
            numerator_delta,
            covariance_delta,
            eig_ratio_after,
        },
    ))
}
