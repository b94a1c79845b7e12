//! Performance metrics of a candidate beamformer: SINR, rate, power,
//! communication and sensing energy efficiency, and both CRB forms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::{ChannelSet, SystemConfig};
use crate::steering::{steering, steering_derivative};
use crate::C64;

/// Sensing model the solution was designed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Single far-field target, angle estimation.
    Point,
    /// Extended target, response-matrix estimation.
    Extended,
}

/// One outer iteration of an optimization loop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceEntry {
    /// Value of the quantity being maximized after this iteration.
    pub objective: f64,
    /// Ratio parameter (Dinkelbach-style loops); NaN when not applicable.
    pub lambda: f64,
    /// Stopping residual evaluated at this iteration.
    pub residual: f64,
    /// Largest constraint violation measured on the metric level.
    pub violation: f64,
    /// Sum of penalty slacks, when a penalty is in use.
    pub slack: f64,
}

#[derive(Clone, Debug)]
pub struct BeamformerSolution {
    /// M×K matrix with columns `w_k`.
    pub w: DMatrix<C64>,
    /// Optional dedicated probing covariance.
    pub rprobe: Option<DMatrix<C64>>,
    pub trace: Vec<TraceEntry>,
    pub achieved: BTreeMap<String, f64>,
}

impl BeamformerSolution {
    pub fn new(w: DMatrix<C64>, rprobe: Option<DMatrix<C64>>) -> Self {
        Self {
            w,
            rprobe,
            trace: Vec::new(),
            achieved: BTreeMap::new(),
        }
    }

    /// Transmit covariance `W Wᴴ + R_probe`.
    pub fn covariance(&self) -> DMatrix<C64> {
        let mut r = &self.w * self.w.adjoint();
        if let Some(p) = &self.rprobe {
            r += p;
        }
        r
    }

    /// Radiated power `Σ‖w_k‖² + tr(R_probe)`.
    pub fn radiated_power(&self) -> f64 {
        radiated_power(&self.w, self.rprobe.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
    /// Radiated power, watts.
    pub p_total: f64,
    pub ee_c: f64,
    pub crb: f64,
    pub ee_s: f64,
}

fn quad(h: &DVector<C64>, m: &DMatrix<C64>) -> f64 {
    (h.adjoint() * m * h)[(0, 0)].re
}

/// SINR of user `k`. The probing covariance, when given, adds `h_kᴴ R h_k`
/// to the interference.
pub fn sinr_k(
    w: &DMatrix<C64>,
    h_k: &DVector<C64>,
    k: usize,
    sigma_c2: f64,
    rprobe: Option<&DMatrix<C64>>,
) -> f64 {
    let gains: Vec<f64> = w
        .column_iter()
        .map(|wj| h_k.dotc(&wj).norm_sqr())
        .collect();
    let mut interference = sigma_c2;
    for (j, g) in gains.iter().enumerate() {
        if j != k {
            interference += g;
        }
    }
    if let Some(r) = rprobe {
        interference += quad(h_k, r);
    }
    gains[k] / interference
}

pub fn sinrs(w: &DMatrix<C64>, ch: &ChannelSet, sigma_c2: f64, rprobe: Option<&DMatrix<C64>>) -> Vec<f64> {
    ch.h.iter()
        .enumerate()
        .map(|(k, h)| sinr_k(w, h, k, sigma_c2, rprobe))
        .collect()
}

pub fn sum_rate(sinr: &[f64]) -> f64 {
    sinr.iter().map(|s| (1.0 + s).log2()).sum()
}

pub fn radiated_power(w: &DMatrix<C64>, rprobe: Option<&DMatrix<C64>>) -> f64 {
    w.norm_squared() + rprobe.map_or(0.0, |r| r.trace().re)
}

/// Communication-centric energy efficiency: sum rate over consumed power.
pub fn ee_comm(w: &DMatrix<C64>, ch: &ChannelSet, cfg: &SystemConfig, rprobe: Option<&DMatrix<C64>>) -> f64 {
    let rate = sum_rate(&sinrs(w, ch, cfg.sigma_c2, rprobe));
    rate / cfg.consumed_power(radiated_power(w, rprobe))
}

/// Fisher term `F(R)` of the angle estimate (without the `2L|α|²/σ_s²` factor).
pub fn fisher_term(rx: &DMatrix<C64>, theta: f64, m: usize) -> Result<f64> {
    let a = steering(theta, m);
    let da = steering_derivative(theta, m);
    let rt = rx.transpose();
    let mf = m as f64;
    let q_aa = (a.adjoint() * &rt * &a)[(0, 0)].re;
    let q_dd = (da.adjoint() * &rt * &da)[(0, 0)].re;
    let q_ad = (a.adjoint() * &rt * &da)[(0, 0)];
    let scale = mf * rx.trace().re.abs() * da.norm_squared().max(1.0);
    if !(q_aa > 1e-12 * scale.max(1e-300)) {
        return Err(Error::CrbUndefined(format!(
            "no power towards the target (aᴴRᵀa = {q_aa:.3e})"
        )));
    }
    let f = mf * q_dd + q_aa * da.norm_squared() - mf * q_ad.norm_sqr() / q_aa;
    if !(f > 1e-12 * scale) {
        return Err(Error::CrbUndefined(format!("singular Fisher term (F = {f:.3e})")));
    }
    Ok(f)
}

/// CRB of the target angle (rad²) for transmit covariance `rx`.
pub fn crb_point(rx: &DMatrix<C64>, theta: f64, alpha: C64, cfg: &SystemConfig) -> Result<f64> {
    let f = fisher_term(rx, theta, rx.nrows())?;
    Ok(cfg.sigma_s2 / (2.0 * cfg.l as f64 * alpha.norm_sqr() * f))
}

/// CRB of the extended-target response matrix, `σ_s² M tr(R⁻¹) / L`.
pub fn crb_extended(rx: &DMatrix<C64>, cfg: &SystemConfig) -> Result<f64> {
    let m = rx.nrows();
    let ev = rx.clone().symmetric_eigenvalues();
    let tr = rx.trace().re;
    let floor = 1e-10 * tr / m as f64;
    let lmin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > floor) || !(tr > 0.0) {
        return Err(Error::RankDeficient(format!(
            "smallest eigenvalue {lmin:.3e} ≤ {floor:.3e}"
        )));
    }
    let inv_trace: f64 = ev.iter().map(|l| 1.0 / l).sum();
    Ok(cfg.sigma_s2 * m as f64 * inv_trace / cfg.l as f64)
}

/// Sensing-centric energy efficiency `(1/CRB) / (L (P/ε + P0))`.
pub fn ee_sense(crb: f64, radiated: f64, cfg: &SystemConfig) -> f64 {
    (1.0 / crb) / (cfg.l as f64 * cfg.consumed_power(radiated))
}

/// Evaluates every metric of a solution. A singular CRB is reported as +∞
/// (and EE_S as 0).
pub fn evaluate(sol: &BeamformerSolution, ch: &ChannelSet, cfg: &SystemConfig, target: Target) -> MetricReport {
    let rp = sol.rprobe.as_ref();
    let sinr = sinrs(&sol.w, ch, cfg.sigma_c2, rp);
    let rate = sum_rate(&sinr);
    let p = sol.radiated_power();
    let rx = sol.covariance();
    let crb = match target {
        Target::Point => crb_point(&rx, ch.theta, ch.alpha, cfg),
        Target::Extended => crb_extended(&rx, cfg),
    }
    .unwrap_or(f64::INFINITY);
    MetricReport {
        sinr,
        sum_rate: rate,
        p_total: p,
        ee_c: rate / cfg.consumed_power(p),
        crb,
        ee_s: if crb.is_finite() { ee_sense(crb, p, cfg) } else { 0.0 },
    }
}

impl MetricReport {
    /// Stores the report into a solution's `achieved` map.
    pub fn record(&self, sol: &mut BeamformerSolution) {
        let a = &mut sol.achieved;
        a.insert("sum_rate".into(), self.sum_rate);
        a.insert("p_total".into(), self.p_total);
        a.insert("ee_c".into(), self.ee_c);
        a.insert("crb".into(), self.crb);
        a.insert("ee_s".into(), self.ee_s);
        for (k, s) in self.sinr.iter().enumerate() {
            a.insert(format!("sinr_{k}"), *s);
        }
    }
}
