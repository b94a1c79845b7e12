//! Brute-force reference computations.
//!
//! Nothing here calls into [`crate::steering`] or the closed forms of
//! [`crate::metrics`]; every quantity is rebuilt from scalar loops so the
//! two code paths can be compared against each other. The only exception is
//! [`audit_solution`], which deliberately re-evaluates a solution through the
//! public metric functions without touching solver state.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::{self, BeamformerSolution, Target};
use crate::scenario::{ChannelSet, SystemConfig};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    /// Central-difference step, radians.
    pub fd_step: f64,
    /// Points of the power grid in [`grid_search_ee`].
    pub grid_points: usize,
    /// Random samples per property check.
    pub samples: usize,
    /// Pass threshold of [`audit_solution`].
    pub audit_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-6,
            grid_points: 10_000,
            samples: 10_000,
            audit_tol: 1e-6,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-8..=1e-3).contains(&self.fd_step) {
            return Err(Error::InvalidConfig(format!(
                "fd_step must lie in [1e-8, 1e-3], got {}",
                self.fd_step
            )));
        }
        if self.grid_points == 0 {
            return Err(Error::InvalidConfig("grid_points must be positive".into()));
        }
        Ok(())
    }
}

fn response(theta: f64, n: usize) -> Vec<C64> {
    let u = theta.cos();
    (0..n)
        .map(|i| {
            let ph = PI * i as f64 * u;
            C64::new(ph.cos(), -ph.sin())
        })
        .collect()
}

fn response_fd(theta: f64, n: usize, h: f64) -> Vec<C64> {
    let p = response(theta + h, n);
    let q = response(theta - h, n);
    p.iter().zip(&q).map(|(x, y)| (x - y) / (2.0 * h)).collect()
}

/// `xᴴ Rᵀ y` with explicit loops.
fn form_t(x: &[C64], r: &DMatrix<C64>, y: &[C64]) -> C64 {
    let n = x.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += x[i].conj() * r[(j, i)] * y[j];
        }
    }
    acc
}

fn fisher_structure(rx: &DMatrix<C64>, theta: f64, h: f64) -> f64 {
    let m = rx.nrows();
    let a = response(theta, m);
    let da = response_fd(theta, m, h);
    let mf = m as f64;
    let q_aa = form_t(&a, rx, &a).re;
    if q_aa <= 0.0 {
        return 0.0;
    }
    let q_dd = form_t(&da, rx, &da).re;
    let q_ad = form_t(&a, rx, &da);
    let nd: f64 = da.iter().map(|z| z.norm_sqr()).sum();
    mf * q_dd + q_aa * nd - mf * q_ad.norm_sqr() / q_aa
}

/// Fisher information of the target angle, `1/CRB`, with derivatives of the
/// array response taken by central differences.
///
/// A second evaluation at half the step guards against cancellation; a
/// relative disagreement above 1e-3 is reported as an error.
pub fn fisher_fd(rx: &DMatrix<C64>, theta: f64, alpha: C64, cfg: &SystemConfig, oc: &OracleConfig) -> Result<f64> {
    oc.validate()?;
    if rx.nrows() != rx.ncols() {
        return Err(Error::Dimension("covariance must be square".into()));
    }
    let f1 = fisher_structure(rx, theta, oc.fd_step);
    let f2 = fisher_structure(rx, theta, 0.5 * oc.fd_step);
    let scale = f1.abs().max(f2.abs());
    if scale > 0.0 && (f1 - f2).abs() > 1e-3 * scale {
        return Err(Error::Oracle(format!(
            "finite-difference Fisher term unstable: {f1:.6e} vs {f2:.6e} at half step"
        )));
    }
    let f = f1.max(0.0);
    Ok(2.0 * cfg.l as f64 * alpha.norm_sqr() * f / cfg.sigma_s2)
}

/// SINR of user `k`, scalar loops only.
pub fn sinr_loop(w: &DMatrix<C64>, h: &[C64], k: usize, sigma_c2: f64, rprobe: Option<&DMatrix<C64>>) -> f64 {
    let m = h.len();
    let gain = |j: usize| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            s += h[i].conj() * w[(i, j)];
        }
        s.norm_sqr()
    };
    let mut den = sigma_c2;
    for j in 0..w.ncols() {
        if j != k {
            den += gain(j);
        }
    }
    if let Some(r) = rprobe {
        let mut q = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                q += h[i].conj() * r[(i, j)] * h[j];
            }
        }
        den += q.re;
    }
    gain(k) / den
}

/// Communication EE from scalar loops.
pub fn ee_comm_loop(w: &DMatrix<C64>, ch: &ChannelSet, cfg: &SystemConfig, rprobe: Option<&DMatrix<C64>>) -> f64 {
    let mut rate = 0.0;
    for (k, hk) in ch.h.iter().enumerate() {
        let hv: Vec<C64> = hk.iter().copied().collect();
        rate += (1.0 + sinr_loop(w, &hv, k, cfg.sigma_c2, rprobe)).ln() / 2f64.ln();
    }
    let mut p = 0.0;
    for z in w.iter() {
        p += z.norm_sqr();
    }
    if let Some(r) = rprobe {
        for i in 0..r.nrows() {
            p += r[(i, i)].re;
        }
    }
    rate / (p / cfg.eps_pa + cfg.p0)
}

/// Extended-target CRB from the eigenvalues of `rx` (Jacobi sweeps on the
/// real embedding, independent of the library eigen-solver path).
pub fn crb_extended_eig(rx: &DMatrix<C64>, cfg: &SystemConfig) -> Result<f64> {
    let m = rx.nrows();
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = rx[(i, j)];
            a[(i, j)] = z.re;
            a[(i + m, j + m)] = z.re;
            a[(i, j + m)] = -z.im;
            a[(i + m, j)] = z.im;
        }
    }
    let ev = jacobi_eigenvalues(a);
    // every eigenvalue of the embedding appears twice
    let inv: f64 = ev.iter().map(|l| 1.0 / l).sum::<f64>() / 2.0;
    let lmin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::RankDeficient(format!("smallest eigenvalue {lmin:.3e}")));
    }
    Ok(cfg.sigma_s2 * m as f64 * inv / cfg.l as f64)
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Result of [`grid_search_ee`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptimum {
    /// Radiated power of the best grid point, watts.
    pub power: f64,
    pub ee: f64,
    /// Number of grid points meeting the SINR and CRB requirements.
    pub feasible_points: usize,
}

/// Single-user EE by exhaustive search over the transmit power of the
/// maximum-ratio beam `√p h/‖h‖`, `p ∈ (0, Pmax]`.
///
/// Grid points violating the SINR or angle-CRB requirement are skipped.
pub fn grid_search_ee(cfg: &SystemConfig, ch: &ChannelSet, oc: &OracleConfig) -> Result<GridOptimum> {
    if ch.h.len() != 1 || cfg.k != 1 {
        return Err(Error::InvalidConfig("grid search needs exactly one user".into()));
    }
    let h: Vec<C64> = ch.h[0].iter().copied().collect();
    let m = h.len();
    let g: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    // unit-power MRT covariance h hᴴ/‖h‖²
    let r1 = DMatrix::from_fn(m, m, |i, j| h[i] * h[j].conj() / g);
    let j1 = fisher_fd(&r1, ch.theta, ch.alpha, cfg, oc)?;
    let mut best = GridOptimum {
        power: f64::NAN,
        ee: f64::NEG_INFINITY,
        feasible_points: 0,
    };
    let n = oc.grid_points;
    for i in 1..=n {
        let p = cfg.pmax * i as f64 / n as f64;
        let sinr = p * g / cfg.sigma_c2;
        let crb = if j1 > 0.0 { 1.0 / (p * j1) } else { f64::INFINITY };
        if sinr < cfg.gamma[0] || crb > cfg.rho() {
            continue;
        }
        best.feasible_points += 1;
        let ee = (1.0 + sinr).log2() / (p / cfg.eps_pa + cfg.p0);
        if ee > best.ee {
            best.ee = ee;
            best.power = p;
        }
    }
    if best.feasible_points == 0 {
        return Err(Error::Infeasible("no grid point meets the SINR and CRB requirements".into()));
    }
    Ok(best)
}

/// Constraints checked by [`audit_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct AuditChecks {
    pub power: bool,
    pub sinr: bool,
    /// Sensing-accuracy requirement: angle CRB ≤ ρ or extended CRB ≤ τ.
    pub crb: Option<Target>,
    /// Minimum sensing EE (point target).
    pub ee_s_min: Option<f64>,
}

impl AuditChecks {
    pub fn all(target: Target) -> Self {
        Self {
            power: true,
            sinr: true,
            crb: Some(target),
            ee_s_min: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    /// `(constraint name, violation)`; violations ≤ 0 mean satisfied.
    pub items: Vec<(String, f64)>,
    pub max_violation: f64,
    pub pass: bool,
}

/// Re-evaluates every requirement of the originating problem.
///
/// Power is measured relative to `Pmax`, SINR as the absolute shortfall
/// `γ_k − SINR_k`, and CRB-type bounds relative to the bound.
pub fn audit_with(sol: &BeamformerSolution, cfg: &SystemConfig, ch: &ChannelSet, checks: &AuditChecks, tol: f64) -> AuditReport {
    let mut items = Vec::new();
    let p = sol.radiated_power();
    if checks.power {
        items.push(("power".to_string(), (p - cfg.pmax) / cfg.pmax));
    }
    if checks.sinr {
        let s = metrics::sinrs(&sol.w, ch, cfg.sigma_c2, sol.rprobe.as_ref());
        for (k, (sk, gk)) in s.iter().zip(&cfg.gamma).enumerate() {
            items.push((format!("sinr_{k}"), gk - sk));
        }
    }
    let rx = sol.covariance();
    if let Some(t) = checks.crb {
        let (crb, bound) = match t {
            Target::Point => (metrics::crb_point(&rx, ch.theta, ch.alpha, cfg), cfg.rho()),
            Target::Extended => (metrics::crb_extended(&rx, cfg), cfg.crb_ext),
        };
        let v = crb.map_or(f64::INFINITY, |c| (c - bound) / bound);
        items.push(("crb".to_string(), v));
    }
    if let Some(e) = checks.ee_s_min {
        let ees = metrics::crb_point(&rx, ch.theta, ch.alpha, cfg)
            .map_or(0.0, |c| metrics::ee_sense(c, p, cfg));
        items.push(("ee_s".to_string(), (e - ees) / e.max(f64::MIN_POSITIVE)));
    }
    let max_violation = items.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    AuditReport {
        pass: items.iter().all(|x| x.1 <= tol),
        items,
        max_violation,
    }
}

/// [`audit_with`] for power, SINR and the CRB of `target`, at tolerance 1e-6.
pub fn audit_solution(sol: &BeamformerSolution, cfg: &SystemConfig, ch: &ChannelSet, target: Target) -> AuditReport {
    audit_with(sol, cfg, ch, &AuditChecks::all(target), OracleConfig::default().audit_tol)
}
