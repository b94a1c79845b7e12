//! Builders that add the pieces of every beamforming subproblem to a
//! [`ConeProblem`]: CRB matrix inequalities, relaxed SINR constraints, the
//! rank-one coupling between `w_k` and `W_k`, successive convex
//! approximation cuts, and the epigraph chains of the sensing objectives.
//!
//! The scalar functions at the bottom (`*_value`, [`frac_cut`], ...) evaluate
//! the same surrogates numerically and are what the tests sample.

use nalgebra::{DMatrix, DVector};

use crate::scenario::{ChannelSet, SystemConfig};
use crate::sdp::{CExpr, ComplexVecVar, ConeProblem, HermitianVar, LinExpr, Lmi, Var};
use crate::steering::{steering, steering_derivative};
use crate::C64;

fn cvec(v: &DVector<C64>) -> Vec<C64> {
    v.iter().copied().collect()
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Beamformers `w_k` (optional) and their covariance surrogates `W_k`.
#[derive(Clone, Debug)]
pub struct BeamVars {
    pub w: Vec<ComplexVecVar>,
    pub cov: Vec<HermitianVar>,
}

impl BeamVars {
    pub fn new(p: &mut ConeProblem, m: usize, k: usize, with_vectors: bool) -> Self {
        let cov = (0..k).map(|_| p.add_hermitian(m)).collect();
        let w = if with_vectors {
            (0..k).map(|_| p.add_complex_vec(m)).collect()
        } else {
            Vec::new()
        };
        Self { w, cov }
    }

    pub fn m(&self) -> usize {
        self.cov[0].n
    }

    /// `Σ_k tr(W_k)`.
    pub fn total_trace(&self) -> LinExpr {
        self.cov.iter().map(|c| c.trace()).sum()
    }

    /// Beamformer matrix (M×K) at a solution.
    pub fn w_value(&self, x: &[f64]) -> DMatrix<C64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m, self.w.len());
        for (k, wk) in self.w.iter().enumerate() {
            for (i, z) in wk.value(x).into_iter().enumerate() {
                out[(i, k)] = z;
            }
        }
        out
    }

    pub fn cov_values(&self, x: &[f64]) -> Vec<DMatrix<C64>> {
        self.cov.iter().map(|c| c.value(x)).collect()
    }
}

/// Requires a Hermitian matrix variable to be positive semidefinite.
pub fn hermitian_psd(p: &mut ConeProblem, h: &HermitianVar) {
    p.add_hermitian_lmi(h.n, |i, j| h.entry(i, j));
}

/// `Σ tr(W) ≤ Pmax` over the given matrices.
pub fn power_budget(p: &mut ConeProblem, mats: &[&HermitianVar], pmax: f64) {
    let total: LinExpr = mats.iter().map(|m| m.trace()).sum();
    p.add_le(total * (1.0 / pmax), LinExpr::constant(1.0));
}

/// Right-hand side of the CRB matrix inequality.
#[derive(Clone, Debug)]
pub enum CrbBound {
    /// `CRB ≤ ρ` for a constant ρ (rad²).
    Fixed(f64),
    /// `CRB⁻¹ ≥ c` for an affine expression `c` (1/rad²).
    InverseAtLeast(LinExpr),
}

/// Scalar sandwiches `aᴴRᵀa`, `ȧᴴRᵀȧ`, `aᴴRᵀȧ` of `R = Σ mats`.
fn crb_forms(mats: &[&HermitianVar], theta: f64) -> (CExpr, CExpr, CExpr) {
    let m = mats[0].n;
    let a = cvec(&steering(theta, m));
    let da = cvec(&steering_derivative(theta, m));
    let mut aa = CExpr::zero();
    let mut dd = CExpr::zero();
    let mut ad = CExpr::zero();
    for w in mats {
        aa.add_scaled(&w.sandwich_transpose(&a, &a), one());
        dd.add_scaled(&w.sandwich_transpose(&da, &da), one());
        ad.add_scaled(&w.sandwich_transpose(&a, &da), one());
    }
    (aa, dd, ad)
}

/// Congruence weights bringing the two diagonal entries of the CRB block to
/// comparable magnitude.
fn crb_scales(m: usize, theta: f64, pmax: f64) -> (f64, f64) {
    let nd = steering_derivative(theta, m).norm_squared().max(1.0);
    let s0 = 2.0 * m as f64 * nd * pmax;
    let s1 = m as f64 * pmax;
    (1.0 / s0.sqrt(), 1.0 / s1.sqrt())
}

/// Schur-complement form of the angle-CRB requirement on `R = Σ mats`:
///
/// `[[F(R) − c σ_s²/(2L|α|²), √M aᴴRᵀȧ], [·, aᴴRᵀa]] ⪰ 0`,
/// with `F(R) = M ȧᴴRᵀȧ + ‖ȧ‖² aᴴRᵀa` and `c = 1/ρ` or a variable.
pub fn crb_schur_lmi(p: &mut ConeProblem, mats: &[&HermitianVar], theta: f64, alpha: C64, cfg: &SystemConfig, bound: CrbBound) {
    let m = mats[0].n;
    let mf = m as f64;
    let nd = steering_derivative(theta, m).norm_squared();
    let (aa, dd, ad) = crb_forms(mats, theta);
    let kappa = cfg.sigma_s2 / (2.0 * cfg.l as f64 * alpha.norm_sqr());
    let mut f = CExpr::zero();
    f.add_scaled(&dd, C64::new(mf, 0.0));
    f.add_scaled(&aa, C64::new(nd, 0.0));
    let c = match bound {
        CrbBound::Fixed(rho) => LinExpr::constant(1.0 / rho),
        CrbBound::InverseAtLeast(e) => e,
    };
    f.re.add_scaled(&c, -kappa);
    let off = ad.scaled(C64::new(mf.sqrt(), 0.0));
    let (g0, g1) = crb_scales(m, theta, cfg.pmax);
    p.add_hermitian_lmi(2, |i, j| match (i, j) {
        (0, 0) => f.scaled(C64::new(g0 * g0, 0.0)),
        (0, 1) => off.scaled(C64::new(g0 * g1, 0.0)),
        _ => aa.scaled(C64::new(g1 * g1, 0.0)),
    });
}

/// Numeric value of the CRB block at `rx` for `CRB⁻¹ ≥ c`.
pub fn crb_schur_matrix(rx: &DMatrix<C64>, theta: f64, alpha: C64, cfg: &SystemConfig, c: f64) -> DMatrix<C64> {
    let m = rx.nrows();
    let mf = m as f64;
    let a = steering(theta, m);
    let da = steering_derivative(theta, m);
    let rt = rx.transpose();
    let aa = (a.adjoint() * &rt * &a)[(0, 0)];
    let dd = (da.adjoint() * &rt * &da)[(0, 0)];
    let ad = (a.adjoint() * &rt * &da)[(0, 0)];
    let kappa = cfg.sigma_s2 / (2.0 * cfg.l as f64 * alpha.norm_sqr());
    let f = dd * mf + aa * da.norm_squared() - C64::new(c * kappa, 0.0);
    let off = ad * mf.sqrt();
    DMatrix::from_row_slice(2, 2, &[f, off, off.conj(), aa])
}

/// `σ_c² + Σ_{j≠k} tr(Q_k W_j)`, plus `h_kᴴ R̃ h_k` when a probe is given.
pub fn interference_expr(mats: &[HermitianVar], k: usize, h: &DVector<C64>, sigma_c2: f64, probe: Option<&HermitianVar>) -> LinExpr {
    let hv = cvec(h);
    let mut e = LinExpr::constant(sigma_c2);
    for (j, wj) in mats.iter().enumerate() {
        if j != k {
            e += wj.sandwich(&hv, &hv).re;
        }
    }
    if let Some(r) = probe {
        e += r.sandwich(&hv, &hv).re;
    }
    e
}

/// Relaxed SINR constraint `tr(Q_k W_k) − γ_k (interference) ≥ γ_k σ_c²`,
/// normalized by `max(γ_k, 1) σ_c²`.
pub fn sinr_sdr(p: &mut ConeProblem, mats: &[HermitianVar], k: usize, h: &DVector<C64>, gamma: f64, sigma_c2: f64, probe: Option<&HermitianVar>) {
    let hv = cvec(h);
    let signal = mats[k].sandwich(&hv, &hv).re;
    let interf = interference_expr(mats, k, h, sigma_c2, probe);
    let expr = signal - interf * gamma;
    p.add_ge(expr * (1.0 / (gamma.max(1.0) * sigma_c2)));
}

/// `[[W_k, w_k], [w_kᴴ, 1]] ⪰ 0`, i.e. `W_k ⪰ w_k w_kᴴ` (and `W_k ⪰ 0`).
pub fn rank1_block_constraints(p: &mut ConeProblem, vars: &BeamVars, k: usize) {
    let m = vars.m();
    let w = &vars.cov[k];
    let v = &vars.w[k];
    p.add_hermitian_lmi(m + 1, |i, j| {
        if i < m && j < m {
            w.entry(i, j)
        } else if i < m {
            v.entry(i)
        } else {
            CExpr::constant(one())
        }
    });
}

/// Linear cut `tr(W_k) − 2Re(w̄ᴴw_k) + ‖w̄‖² ≤ slack` (slack 0 when `None`).
///
/// Together with the rank-one block it bounds `‖w_k − w̄‖² + tr(W_k − w_k w_kᴴ)`.
pub fn rank1_cut(p: &mut ConeProblem, vars: &BeamVars, k: usize, w_bar: &[C64], slack: Option<Var>, scale: f64) {
    let nb: f64 = w_bar.iter().map(|z| z.norm_sqr()).sum();
    let mut e = vars.cov[k].trace() - vars.w[k].re_inner(w_bar) * 2.0 + nb;
    if let Some(s) = slack {
        e.add_term(s, -1.0);
    }
    p.add_le(e * (1.0 / scale), LinExpr::zero());
}

/// Softened rank-one cuts: one nonnegative slack per user and the penalty
/// `p̄ Σ ρ̄_k / scale` to be subtracted from the objective.
pub fn penalty_variant(p: &mut ConeProblem, vars: &BeamVars, w_bar: &DMatrix<C64>, p_bar: f64, scale: f64) -> (Vec<Var>, LinExpr) {
    let mut slacks = Vec::new();
    let mut pen = LinExpr::zero();
    for k in 0..vars.cov.len() {
        let s = p.add_free();
        p.add_ge(LinExpr::term(s, 1.0 / scale));
        let wb: Vec<C64> = w_bar.column(k).iter().copied().collect();
        rank1_cut(p, vars, k, &wb, Some(s), scale);
        pen.add_term(s, p_bar / scale);
        slacks.push(s);
    }
    (slacks, pen)
}

/// Concave minorant of `ln u` tight at `u0`: returns `ln u0 + 1 − u0·v`
/// with a new variable `v ≥ 1/u` enforced by `[[v, 1], [1, u]] ⪰ 0`.
pub fn log_minorant(p: &mut ConeProblem, u: LinExpr, u0: f64) -> LinExpr {
    let v = p.add_free();
    // scaled as [[u0 v, 1], [1, u/u0]] to keep both diagonals near one
    let mut lmi = Lmi::new(2);
    lmi.add(0, 0, LinExpr::term(v, u0));
    lmi.add(0, 1, LinExpr::constant(1.0));
    lmi.add(1, 1, u * (1.0 / u0));
    p.add_lmi(lmi);
    LinExpr::constant(u0.ln() + 1.0) - LinExpr::term(v, u0)
}

/// `1 + 2 t_k Re(h_kᴴ w_k) − t_k² B_k(W)`.
pub fn quad_transform_arg(vars: &BeamVars, k: usize, h: &DVector<C64>, t: f64, sigma_c2: f64) -> LinExpr {
    let hv = cvec(h);
    let b = interference_expr(&vars.cov, k, h, sigma_c2, None);
    LinExpr::constant(1.0) + vars.w[k].re_inner(&hv) * (2.0 * t) - b * (t * t)
}

/// Objective of the quadratic-transform subproblem:
/// `Σ_k log₂(1 + 2t_k Re(h_kᴴw_k) − t_k² B_k) − λ(Σ tr W_k/ε + P0)`,
/// with each logarithm replaced by its minorant at `u0[k]`.
pub fn quad_transform_objective(p: &mut ConeProblem, vars: &BeamVars, ch: &ChannelSet, t: &[f64], u0: &[f64], lambda: f64, cfg: &SystemConfig) -> LinExpr {
    let ln2 = std::f64::consts::LN_2;
    let mut obj = LinExpr::zero();
    for (k, h) in ch.h.iter().enumerate() {
        let u = quad_transform_arg(vars, k, h, t[k], cfg.sigma_c2);
        let lm = log_minorant(p, u, u0[k]);
        obj.add_scaled(&lm, 1.0 / ln2);
    }
    obj.add_scaled(&vars.total_trace(), -lambda / cfg.eps_pa);
    obj -= lambda * cfg.p0;
    obj
}

/// Expansion point of the sensing-centric epigraph chain.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationPoint {
    /// Previous beamformers, phase-aligned so that `h_kᴴ w_k ≥ 0`.
    pub w_prev: DMatrix<C64>,
    /// `ζⁿ = √(CRB⁻¹)` at `w_prev`.
    pub zeta: f64,
    /// `φⁿ`: consumed power at `w_prev`.
    pub phi: f64,
    /// `τ_kⁿ = Re(h_kᴴ w_k)`.
    pub tau: Vec<f64>,
    /// `ψ_kⁿ`: interference plus noise of user k.
    pub psi: Vec<f64>,
}

impl LinearizationPoint {
    pub fn is_valid(&self) -> bool {
        self.zeta.is_finite()
            && self.zeta > 0.0
            && self.phi > 0.0
            && self.psi.iter().all(|&v| v > 0.0 && v.is_finite())
            && self.tau.iter().all(|v| v.is_finite())
    }
}

/// Variables of the sensing-centric chain, stored normalized by the
/// expansion point (`ω = ωⁿ·o`, `ζ = ζⁿ·z`, `t = ζⁿ²·s`, `φ = φⁿ·f`,
/// `ψ_k = ψ_kⁿ·q_k`).
#[derive(Clone, Debug)]
pub struct SensingPointVars {
    pub o: Var,
    pub z: Var,
    pub s: Var,
    pub f: Var,
    pub q: Vec<Var>,
    pub omega_n: f64,
}

impl SensingPointVars {
    /// `ω` in physical units (`CRB⁻¹` per watt).
    pub fn omega(&self, x: &[f64]) -> f64 {
        self.omega_n * x[self.o.0]
    }
}

/// Sensing-centric chain around `lp`: power ≤ φ, `t ≥ ζ²`,
/// `ω ≤ 2(ζⁿ/φⁿ)ζ − (ζⁿ/φⁿ)²φ`, `γ_k ≤ 2(τⁿ/ψⁿ)τ_k − (τⁿ/ψⁿ)²ψ_k`,
/// `ψ_k ≥ σ_c² + Σ_{j≠k}|h_kᴴw_j|²` and `CRB⁻¹(Σ W_k) ≥ t`.
///
/// Returns `None` if the expansion point has a zero denominator.
pub fn epigraph_sensing_point(p: &mut ConeProblem, vars: &BeamVars, lp: &LinearizationPoint, ch: &ChannelSet, cfg: &SystemConfig) -> Option<SensingPointVars> {
    if !lp.is_valid() || lp.tau.iter().any(|&t| t <= 0.0) {
        return None;
    }
    let o = p.add_free();
    let z = p.add_free();
    let s = p.add_free();
    let f = p.add_free();
    let zn2 = lp.zeta * lp.zeta;
    let omega_n = zn2 / lp.phi;

    // φ ≥ Σ tr W/ε + P0
    let power = vars.total_trace() * (1.0 / cfg.eps_pa) + cfg.p0;
    p.add_le(power * (1.0 / lp.phi), LinExpr::var(f));

    // t ≥ ζ²  ⇔  s ≥ z²
    let mut lmi = Lmi::new(2);
    lmi.add(0, 0, LinExpr::var(s));
    lmi.add(0, 1, LinExpr::var(z));
    lmi.add(1, 1, LinExpr::constant(1.0));
    p.add_lmi(lmi);

    // ω ≤ ζⁿ²/φⁿ·(2z − f)
    p.add_le(LinExpr::var(o), LinExpr::term(z, 2.0) - LinExpr::var(f));

    // CRB⁻¹ ≥ t
    let mats: Vec<&HermitianVar> = vars.cov.iter().collect();
    crb_schur_lmi(p, &mats, ch.theta, ch.alpha, cfg, CrbBound::InverseAtLeast(LinExpr::term(s, zn2)));

    let mut q = Vec::new();
    let kk = ch.h.len();
    for (k, h) in ch.h.iter().enumerate() {
        let hv = cvec(h);
        let qk = p.add_free();
        let psi_n = lp.psi[k];
        let psi = LinExpr::term(qk, psi_n);
        // ψ_k − σ² ≥ Σ_{j≠k} |h_kᴴ w_j|², normalized by ψⁿ
        let others: Vec<CExpr> = (0..kk)
            .filter(|&j| j != k)
            .map(|j| vars.w[j].inner_from(&hv).scaled(C64::new(1.0 / psi_n.sqrt(), 0.0)))
            .collect();
        let head = (psi.clone() - cfg.sigma_c2) * (1.0 / psi_n);
        if others.is_empty() {
            p.add_ge(head);
        } else {
            let n = others.len() + 1;
            p.add_hermitian_lmi(n, |i, j| {
                if i == 0 && j == 0 {
                    CExpr::real(head.clone())
                } else if i == 0 {
                    others[j - 1].conj()
                } else if i == j {
                    CExpr::constant(one())
                } else {
                    CExpr::zero()
                }
            });
        }
        // γ_k ≤ 2(τⁿ/ψⁿ)τ_k − (τⁿ/ψⁿ)²ψ_k
        let r = lp.tau[k] / psi_n;
        let tau = vars.w[k].re_inner(&hv);
        let cut = tau * (2.0 * r) - psi * (r * r) - cfg.gamma[k];
        p.add_ge(cut * (1.0 / cfg.gamma[k].max(1.0)));
        q.push(qk);
    }
    Some(SensingPointVars { o, z, s, f, q, omega_n })
}

/// Variables of an extended-target subproblem.
#[derive(Clone, Debug)]
pub struct ExtendedVars {
    pub cov: Vec<HermitianVar>,
    pub probe: HermitianVar,
    /// Epigraph of `R_x⁻¹` (scaled, see [`ExtendedVars::y_scale`]).
    pub y: HermitianVar,
    pub y_scale: f64,
    pub p_e: Option<Var>,
    pub q_e: Option<Var>,
}

impl ExtendedVars {
    /// `Σ_k W_k + R̃` at a solution.
    pub fn covariance(&self, x: &[f64]) -> DMatrix<C64> {
        let mut r = self.probe.value(x);
        for w in &self.cov {
            r += w.value(x);
        }
        r
    }

    pub fn total_trace(&self) -> LinExpr {
        self.cov.iter().map(|c| c.trace()).sum::<LinExpr>() + self.probe.trace()
    }
}

/// Which extended-target subproblem to build.
#[derive(Clone, Debug)]
pub enum ExtendedMode {
    /// Rate-minus-power objective at fixed `b_k = 1/I_kⁿ` and ratio λ;
    /// `s0[k]` is the expansion point of `S_k = h_kᴴR_xh_k + σ_c²`.
    Comm { b: Vec<f64>, s0: Vec<f64>, lambda: f64 },
    /// Linearized `ln p_e + ln q_e` around `(p_n, q_n)`.
    Sense { p_n: f64, q_n: f64 },
    /// Minimize the radiated power.
    MinPower,
}

/// Extended-target subproblem: PSD `W_k`, probing covariance `R̃`, the
/// `[[R_x, I], [I, Y]] ⪰ 0` epigraph of `R_x⁻¹`, power budget, the trace-form
/// CRB bound and the SINR constraints (probe counted as interference).
/// Sets the objective of `p`.
pub fn extended_target_fragments(p: &mut ConeProblem, ch: &ChannelSet, cfg: &SystemConfig, mode: &ExtendedMode) -> ExtendedVars {
    let m = cfg.m;
    let kk = ch.h.len();
    let cov: Vec<HermitianVar> = (0..kk).map(|_| p.add_hermitian(m)).collect();
    let probe = p.add_hermitian(m);
    let y = p.add_hermitian(m);
    for c in &cov {
        hermitian_psd(p, c);
    }
    hermitian_psd(p, &probe);

    // [[s R_x, I], [I, Y']] ⪰ 0 with s = M/Pmax, so tr(R_x⁻¹) ≤ s·tr(Y')
    let s = m as f64 / cfg.pmax;
    let y_scale = s;
    p.add_hermitian_lmi(2 * m, |i, j| {
        if i < m && j < m {
            let mut e = probe.entry(i, j);
            for c in &cov {
                e.add_scaled(&c.entry(i, j), one());
            }
            e.scaled(C64::new(s, 0.0))
        } else if i < m {
            if j - m == i {
                CExpr::constant(one())
            } else {
                CExpr::zero()
            }
        } else {
            y.entry(i - m, j - m)
        }
    });
    // tr(R_x⁻¹) ≤ tr(Y) = y_scale·tr(Y')
    let mut all: Vec<&HermitianVar> = cov.iter().collect();
    all.push(&probe);
    power_budget(p, &all, cfg.pmax);
    let ytr = y.trace() * y_scale;
    let ybound = cfg.crb_ext * cfg.l as f64 / (cfg.sigma_s2 * m as f64);
    p.add_le(ytr.clone() * (1.0 / ybound), LinExpr::constant(1.0));
    for (k, h) in ch.h.iter().enumerate() {
        sinr_sdr(p, &cov, k, h, cfg.gamma[k], cfg.sigma_c2, Some(&probe));
    }

    let total: LinExpr = all.iter().map(|c| c.trace()).sum();
    let mut p_e = None;
    let mut q_e = None;
    match mode {
        ExtendedMode::Comm { b, s0, lambda } => {
            let ln2 = std::f64::consts::LN_2;
            let mut obj = LinExpr::zero();
            for (k, h) in ch.h.iter().enumerate() {
                let hv = cvec(h);
                let mut sk = LinExpr::constant(cfg.sigma_c2);
                for c in all.iter() {
                    sk += c.sandwich(&hv, &hv).re;
                }
                let ik = sk.clone() - cov[k].sandwich(&hv, &hv).re;
                // −ln I ≥ ln b − b I + 1
                let mut term = log_minorant(p, sk, s0[k]);
                term += b[k].ln() + 1.0;
                term.add_scaled(&ik, -b[k]);
                obj.add_scaled(&term, 1.0 / ln2);
            }
            obj.add_scaled(&total, -lambda / cfg.eps_pa);
            obj -= lambda * cfg.p0;
            p.set_objective(obj);
        }
        ExtendedMode::Sense { p_n, q_n } => {
            let pe = p.add_free();
            let qe = p.add_free();
            let mf = m as f64;
            // p_e ≥ σ_s² M (tr R_x/ε + P0), q_e ≥ tr(Y)
            let pw = (total * (1.0 / cfg.eps_pa) + cfg.p0) * (cfg.sigma_s2 * mf);
            p.add_le(pw * (1.0 / p_n), LinExpr::term(pe, 1.0 / p_n));
            p.add_le(ytr * (1.0 / q_n), LinExpr::term(qe, 1.0 / q_n));
            // minimize p_e/pⁿ + q_e/qⁿ
            p.set_objective(LinExpr::term(pe, -1.0 / p_n) + LinExpr::term(qe, -1.0 / q_n));
            p_e = Some(pe);
            q_e = Some(qe);
        }
        ExtendedMode::MinPower => p.set_objective(total * (-1.0 / cfg.pmax)),
    }
    ExtendedVars {
        cov,
        probe,
        y,
        y_scale,
        p_e,
        q_e,
    }
}

/// `tr(W) − 2Re(w̄ᴴw) + ‖w̄‖²`.
pub fn rank1_cut_value(w_mat: &DMatrix<C64>, w: &DVector<C64>, w_bar: &DVector<C64>) -> f64 {
    w_mat.trace().re - 2.0 * w_bar.dotc(w).re + w_bar.norm_squared()
}

/// Linear minorant of `‖w‖²` at `w̄`: `2Re(w̄ᴴw) − ‖w̄‖²`.
pub fn norm_sq_minorant(w: &DVector<C64>, w_bar: &DVector<C64>) -> f64 {
    2.0 * w_bar.dotc(w).re - w_bar.norm_squared()
}

/// Minorant of `x²/y` (`y > 0`) at `(xn, yn)`: `2(xn/yn)x − (xn/yn)²y`.
pub fn frac_cut(x: f64, y: f64, xn: f64, yn: f64) -> f64 {
    let r = xn / yn;
    2.0 * r * x - r * r * y
}

/// Majorant of `ln p + ln q` at `(pn, qn)`: its first-order expansion.
pub fn log_sum_majorant(p: f64, q: f64, pn: f64, qn: f64) -> f64 {
    pn.ln() + qn.ln() + (p - pn) / pn + (q - qn) / qn
}

/// Minorant of `ln u` at `u0`: `ln u0 + 1 − u0/u`.
pub fn log_minorant_value(u: f64, u0: f64) -> f64 {
    u0.ln() + 1.0 - u0 / u
}

/// Minorant of `−ln I` with `b > 0`: `ln b − bI + 1`.
pub fn neg_log_minorant_value(i: f64, b: f64) -> f64 {
    b.ln() - b * i + 1.0
}

/// Quadratic-transform value `2t Re(a) − t²B`.
pub fn quad_transform_value(a: C64, b: f64, t: f64) -> f64 {
    2.0 * t * a.re - t * t * b
}
