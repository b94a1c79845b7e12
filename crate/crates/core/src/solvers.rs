//! Outer iterations for the energy-efficiency problems.
//!
//! Point-target problems are solved over beamformer vectors `w_k` coupled to
//! covariance surrogates `W_k ⪰ w_k w_kᴴ`; a penalized linear cut keeps each
//! `W_k` close to rank one and also acts as a proximal term. Every candidate
//! iterate is re-evaluated with the exact metrics and accepted only if it is
//! feasible and does not decrease the merit function; otherwise the penalty
//! weight grows and the subproblem is solved again.
//!
//! Extended-target problems are solved over the relaxed covariances directly
//! and rank one beamformers are constructed at the end.

use nalgebra::{DMatrix, DVector};

use crate::constraints::{
    crb_schur_lmi, epigraph_sensing_point, extended_target_fragments, interference_expr,
    penalty_variant, power_budget, quad_transform_objective, rank1_block_constraints, sinr_sdr,
    BeamVars, CrbBound, ExtendedMode, ExtendedVars, LinearizationPoint,
};
use crate::error::{Error, Result};
use crate::metrics::{self, BeamformerSolution, Target, TraceEntry};
use crate::recovery::{project_psd, recover_rank1};
use crate::scenario::{ChannelSet, SystemConfig};
use crate::sdp::{self, ConeProblem, HermitianVar, LinExpr, SolveOptions, SolveReport, SolveStatus};
use crate::C64;

/// Relative merit loss attributed to subproblem accuracy rather than a bad step.
const STALL_TOL: f64 = 1e-6;

/// Starting point of the outer loops.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum InitStrategy {
    /// Regularized zero-forcing at full power, repaired by a penalty warm-up
    /// when it violates a constraint.
    #[default]
    Rzf,
    /// Caller-supplied beamformers (M×K), also repaired if infeasible.
    Given(DMatrix<C64>),
}

/// Rate surrogate used by the tradeoff loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RateSurrogate {
    /// Quadratic transform of each SINR with a logarithmic minorant.
    #[default]
    QuadraticTransform,
    /// Lagrangian dual transform with auxiliaries `b_k`, `t_k`. Valid but
    /// more conservative, so it typically needs many more iterations.
    LagrangianDual,
}

#[derive(Clone, Debug)]
pub struct AlgorithmOptions {
    /// Outer stopping tolerance.
    pub delta: f64,
    pub max_outer: usize,
    pub init: InitStrategy,
    /// Initial weight of the rank-one penalty.
    pub penalty_start: f64,
    /// Factor applied to the penalty weight when an iterate is rejected.
    pub penalty_growth: f64,
    /// Penalty increases tried per outer iteration (and warm-up rounds).
    pub penalty_rounds: usize,
    /// Warm-up stops once the summed slack is below this (relative to Pmax).
    pub slack_tol: f64,
    /// Relative tolerance of the feasibility test applied to iterates.
    pub feas_tol: f64,
    /// Relative safety margin applied to SINR and CRB bounds in subproblems.
    pub margin: f64,
    pub pareto_surrogate: RateSurrogate,
    pub sdp: SolveOptions,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            max_outer: 50,
            init: InitStrategy::Rzf,
            penalty_start: 1.0,
            penalty_growth: 5.0,
            penalty_rounds: 10,
            slack_tol: 1e-6,
            feas_tol: 1e-7,
            margin: 1e-6,
            pareto_surrogate: RateSurrogate::QuadraticTransform,
            sdp: SolveOptions::default(),
        }
    }
}

impl AlgorithmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || self.max_outer == 0 {
            return Err(Error::InvalidConfig("delta must be positive and max_outer at least 1".into()));
        }
        if !(self.penalty_start > 0.0 && self.penalty_growth > 1.0) {
            return Err(Error::InvalidConfig("penalty schedule must start positive and grow".into()));
        }
        Ok(())
    }
}

/// Why an outer loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Dinkelbach residual below tolerance.
    Residual,
    /// Relative objective change below tolerance.
    Stalled,
    /// No acceptable iterate could be produced; the last accepted one is kept.
    NoProgress,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::Stalled => "stalled",
            StopReason::NoProgress => "no-progress",
            StopReason::MaxIterations => "max-iterations",
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, StopReason::Residual | StopReason::Stalled)
    }
}

/// Bookkeeping of an outer loop.
#[derive(Clone, Debug)]
pub struct OuterLoopState {
    pub iteration: usize,
    /// Ratio parameter (NaN for non-fractional loops).
    pub lambda: f64,
    pub t: Vec<f64>,
    pub b: Vec<f64>,
    pub history: Vec<TraceEntry>,
    pub stop: Option<StopReason>,
    pub subproblems: usize,
    /// Largest KKT residual of any subproblem reported optimal.
    pub max_kkt: f64,
}

impl OuterLoopState {
    fn new(k: usize) -> Self {
        Self {
            iteration: 0,
            lambda: f64::NAN,
            t: vec![0.0; k],
            b: vec![0.0; k],
            history: Vec::new(),
            stop: None,
            subproblems: 0,
            max_kkt: 0.0,
        }
    }

    fn solve(&mut self, p: &ConeProblem, opts: &AlgorithmOptions) -> SolveReport {
        let rep = sdp::solve(p, &opts.sdp);
        self.subproblems += 1;
        if rep.is_optimal() {
            self.max_kkt = self.max_kkt.max(rep.kkt.max());
        }
        rep
    }

    fn finish(self, mut sol: BeamformerSolution) -> BeamformerSolution {
        let stop = self.stop.unwrap_or(StopReason::MaxIterations);
        sol.trace = self.history;
        let a = &mut sol.achieved;
        a.insert("iterations".into(), self.iteration as f64);
        a.insert("converged".into(), if stop.converged() { 1.0 } else { 0.0 });
        a.insert("subproblems".into(), self.subproblems as f64);
        a.insert("max_subproblem_kkt".into(), self.max_kkt);
        sol
    }
}

/// Which requirements a point-target problem imposes besides the power budget.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSpec {
    pub sinr: bool,
    pub crb: bool,
    /// Lower bound on the sensing-centric EE.
    pub ee_s_min: Option<f64>,
}

impl PointSpec {
    /// SINR and CRB requirements of the base problem.
    pub fn standard() -> Self {
        Self {
            sinr: true,
            crb: true,
            ee_s_min: None,
        }
    }
}

/// Exact metrics of a point-target beamformer.
#[derive(Clone, Debug)]
struct PointEval {
    sinr: Vec<f64>,
    rate: f64,
    power: f64,
    crb: f64,
    ee_c: f64,
    ee_s: f64,
}

fn eval_point(w: &DMatrix<C64>, ch: &ChannelSet, cfg: &SystemConfig) -> PointEval {
    let sol = BeamformerSolution::new(w.clone(), None);
    let r = metrics::evaluate(&sol, ch, cfg, Target::Point);
    PointEval {
        sinr: r.sinr,
        rate: r.sum_rate,
        power: r.p_total,
        crb: r.crb,
        ee_c: r.ee_c,
        ee_s: r.ee_s,
    }
}

/// Largest relative violation (≤ 0 when feasible).
fn point_violation(e: &PointEval, cfg: &SystemConfig, spec: &PointSpec) -> f64 {
    let mut v = (e.power - cfg.pmax) / cfg.pmax;
    if spec.sinr {
        for (s, g) in e.sinr.iter().zip(&cfg.gamma) {
            v = v.max((g - s) / g);
        }
    }
    if spec.crb {
        v = v.max((e.crb - cfg.rho()) / cfg.rho());
    }
    if let Some(m) = spec.ee_s_min {
        if m > 0.0 {
            v = v.max((m - e.ee_s) / m);
        }
    }
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Regularized zero-forcing directions, equal power split of `power`.
pub fn rzf(ch: &ChannelSet, cfg: &SystemConfig, power: f64) -> DMatrix<C64> {
    let m = cfg.m;
    let k = ch.h.len();
    let h = DMatrix::from_fn(m, k, |i, j| ch.h[j][i]);
    let reg = k as f64 * cfg.sigma_c2 / power;
    let g = h.adjoint() * &h + DMatrix::<C64>::identity(k, k) * C64::new(reg, 0.0);
    let inv = g.try_inverse().unwrap_or_else(|| DMatrix::identity(k, k));
    let mut w = &h * inv;
    let per = (power / k as f64).sqrt();
    for mut c in w.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c *= C64::new(per / n, 0.0);
        }
    }
    w
}

/// Rotates each column so that `h_kᴴ w_k` is real and nonnegative.
pub fn align_phases(w: &DMatrix<C64>, ch: &ChannelSet) -> DMatrix<C64> {
    let mut out = w.clone();
    for (k, h) in ch.h.iter().enumerate() {
        let g = h.dotc(&out.column(k));
        if g.norm() > 0.0 {
            let rot = g.conj() / g.norm();
            let mut c = out.column_mut(k);
            c *= rot;
        }
    }
    out
}

/// Objective family of a point-target subproblem.
#[derive(Clone, Debug)]
enum PointKind {
    /// Quadratic-transform rate minus `λ·power` (λ = 0 gives sum-rate).
    Rate { lambda: f64 },
    /// Lagrangian-dual plus quadratic-transform rate minus `λ·power`.
    DualRate { lambda: f64 },
    /// Minimize radiated power.
    Power,
    /// Sensing-centric epigraph chain.
    Sense,
}

impl PointKind {
    fn merit(&self, e: &PointEval) -> f64 {
        match self {
            PointKind::Rate { lambda } if *lambda == 0.0 => e.rate,
            PointKind::Rate { .. } | PointKind::DualRate { .. } => e.ee_c,
            PointKind::Power => -e.power,
            PointKind::Sense => e.ee_s,
        }
    }

    fn is_ratio(&self) -> bool {
        match self {
            PointKind::Rate { lambda } => *lambda != 0.0,
            PointKind::DualRate { .. } => true,
            _ => false,
        }
    }

    fn with_lambda(&self, l: f64) -> Self {
        if !self.is_ratio() {
            return self.clone();
        }
        match self {
            PointKind::Rate { .. } => PointKind::Rate { lambda: l },
            PointKind::DualRate { .. } => PointKind::DualRate { lambda: l },
            other => other.clone(),
        }
    }
}

struct PointSub {
    problem: ConeProblem,
    vars: BeamVars,
    slacks: Vec<crate::sdp::Var>,
}

fn build_point(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    spec: &PointSpec,
    w_bar: &DMatrix<C64>,
    p_bar: f64,
    kind: &PointKind,
    st: &mut OuterLoopState,
    margin: f64,
) -> Option<PointSub> {
    let k = ch.h.len();
    let mut p = ConeProblem::new();
    let vars = BeamVars::new(&mut p, cfg.m, k, true);
    for i in 0..k {
        rank1_block_constraints(&mut p, &vars, i);
    }
    let (slacks, pen) = penalty_variant(&mut p, &vars, w_bar, p_bar, cfg.pmax);
    let mats: Vec<&HermitianVar> = vars.cov.iter().collect();
    power_budget(&mut p, &mats, cfg.pmax);
    if spec.sinr {
        for (i, h) in ch.h.iter().enumerate() {
            sinr_sdr(&mut p, &vars.cov, i, h, cfg.gamma[i] * (1.0 + margin), cfg.sigma_c2, None);
        }
    }
    if spec.crb {
        crb_schur_lmi(&mut p, &mats, ch.theta, ch.alpha, cfg, CrbBound::Fixed(cfg.rho() * (1.0 - margin)));
    }
    if let Some(e) = spec.ee_s_min.filter(|&e| e > 0.0) {
        let lhs = (vars.total_trace() * (1.0 / cfg.eps_pa) + cfg.p0) * (e * (1.0 + margin) * cfg.l as f64);
        crb_schur_lmi(&mut p, &mats, ch.theta, ch.alpha, cfg, CrbBound::InverseAtLeast(lhs));
    }
    let ln2 = std::f64::consts::LN_2;
    let obj = match kind {
        PointKind::Rate { lambda } => {
            let mut t = Vec::with_capacity(k);
            let mut u0 = Vec::with_capacity(k);
            for (i, h) in ch.h.iter().enumerate() {
                let a = h.dotc(&w_bar.column(i)).re;
                let b = interference_value(w_bar, h, i, cfg.sigma_c2);
                t.push(a / b);
                u0.push(1.0 + a * a / b);
            }
            st.t = t.clone();
            quad_transform_objective(&mut p, &vars, ch, &t, &u0, *lambda, cfg)
        }
        PointKind::DualRate { lambda } => {
            let mut obj = LinExpr::zero();
            let mut ts = Vec::with_capacity(k);
            let mut bs = Vec::with_capacity(k);
            for (i, h) in ch.h.iter().enumerate() {
                let hv: Vec<C64> = h.iter().copied().collect();
                let a = h.dotc(&w_bar.column(i)).re;
                let b_int = interference_value(w_bar, h, i, cfg.sigma_c2);
                let b = a * a / b_int;
                let d = b_int + a * a;
                let t = (1.0 + b).sqrt() * a / d;
                // D_k(W) = σ² + Σ_j tr(Q_k W_j)
                let dk = interference_expr(&vars.cov, i, h, cfg.sigma_c2, None) + vars.cov[i].sandwich(&hv, &hv).re;
                let mut term = LinExpr::constant((1.0 + b).ln() - b);
                term.add_scaled(&vars.w[i].re_inner(&hv), 2.0 * t * (1.0 + b).sqrt());
                term.add_scaled(&dk, -t * t);
                obj.add_scaled(&term, 1.0 / ln2);
                ts.push(t);
                bs.push(b);
            }
            st.t = ts;
            st.b = bs;
            obj.add_scaled(&vars.total_trace(), -lambda / cfg.eps_pa);
            obj -= lambda * cfg.p0;
            obj
        }
        PointKind::Power => vars.total_trace() * (-1.0 / cfg.pmax),
        PointKind::Sense => {
            let e = eval_point(w_bar, ch, cfg);
            let mut tau = Vec::with_capacity(k);
            let mut psi = Vec::with_capacity(k);
            for (i, h) in ch.h.iter().enumerate() {
                tau.push(h.dotc(&w_bar.column(i)).re);
                psi.push(interference_value(w_bar, h, i, cfg.sigma_c2));
            }
            let lp = LinearizationPoint {
                w_prev: w_bar.clone(),
                zeta: (1.0 / e.crb).sqrt(),
                phi: cfg.consumed_power(e.power),
                tau,
                psi,
            };
            let sv = epigraph_sensing_point(&mut p, &vars, &lp, ch, cfg)?;
            LinExpr::var(sv.o)
        }
    };
    p.set_objective(obj - pen);
    Some(PointSub { problem: p, vars, slacks })
}

fn interference_value(w: &DMatrix<C64>, h: &DVector<C64>, k: usize, sigma_c2: f64) -> f64 {
    let mut b = sigma_c2;
    for (j, c) in w.column_iter().enumerate() {
        if j != k {
            b += h.dotc(&c).norm_sqr();
        }
    }
    b
}

/// Penalty warm-up: drives an infeasible start into the feasible set by
/// minimizing power with softened rank-one cuts and a growing penalty.
fn warm_up(ch: &ChannelSet, cfg: &SystemConfig, spec: &PointSpec, start: &DMatrix<C64>, opts: &AlgorithmOptions, st: &mut OuterLoopState) -> Result<DMatrix<C64>> {
    let mut w_bar = align_phases(start, ch);
    if point_violation(&eval_point(&w_bar, ch, cfg), cfg, spec) <= opts.feas_tol {
        return Ok(w_bar);
    }
    let mut p_bar = opts.penalty_start;
    let mut slack = f64::INFINITY;
    let mut last_violation = f64::INFINITY;
    for round in 0..opts.penalty_rounds {
        let sub = build_point(ch, cfg, spec, &w_bar, p_bar, &PointKind::Power, st, opts.margin)
            .ok_or_else(|| Error::Solver("invalid expansion point".into()))?;
        let rep = st.solve(&sub.problem, opts);
        match rep.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if round == 0 => {
                return Err(Error::Infeasible("the relaxed problem has no feasible point".into()));
            }
            _ => {
                p_bar *= opts.penalty_growth;
                continue;
            }
        }
        slack = sub.slacks.iter().map(|s| rep.x[s.0]).sum::<f64>() / cfg.pmax;
        w_bar = align_phases(&sub.vars.w_value(&rep.x), ch);
        last_violation = point_violation(&eval_point(&w_bar, ch, cfg), cfg, spec);
        if last_violation <= opts.feas_tol {
            return Ok(w_bar);
        }
        if slack < opts.slack_tol {
            // rank gap closed but still infeasible: keep moving at this weight
            continue;
        }
        p_bar *= opts.penalty_growth;
    }
    Err(Error::Infeasible(format!(
        "penalty warm-up ended with slack {slack:.3e} and violation {last_violation:.3e}"
    )))
}

fn point_start(ch: &ChannelSet, cfg: &SystemConfig, spec: &PointSpec, opts: &AlgorithmOptions, st: &mut OuterLoopState) -> Result<DMatrix<C64>> {
    let start = match &opts.init {
        InitStrategy::Rzf => rzf(ch, cfg, cfg.pmax),
        InitStrategy::Given(w) => {
            if w.nrows() != cfg.m || w.ncols() != ch.h.len() {
                return Err(Error::Dimension(format!(
                    "initial beamformer is {}x{}, expected {}x{}",
                    w.nrows(),
                    w.ncols(),
                    cfg.m,
                    ch.h.len()
                )));
            }
            w.clone()
        }
    };
    warm_up(ch, cfg, spec, &start, opts, st)
}

/// Generic point-target outer loop. `w` must be feasible.
fn point_loop(ch: &ChannelSet, cfg: &SystemConfig, spec: &PointSpec, kind: PointKind, mut w: DMatrix<C64>, opts: &AlgorithmOptions, st: &mut OuterLoopState) -> DMatrix<C64> {
    let mut cur = eval_point(&w, ch, cfg);
    let mut merit = kind.merit(&cur);
    let ratio = kind.is_ratio();
    st.lambda = if ratio { merit } else { f64::NAN };
    st.history.push(TraceEntry {
        objective: merit,
        lambda: st.lambda,
        residual: f64::NAN,
        violation: point_violation(&cur, cfg, spec),
        slack: 0.0,
    });
    let mut p_bar = opts.penalty_start;
    let mut small_steps = 0;
    for it in 0..opts.max_outer {
        st.iteration = it + 1;
        let k_now = kind.with_lambda(merit);
        let mut accepted = None;
        let mut stalled = false;
        for _ in 0..opts.penalty_rounds {
            let Some(sub) = build_point(ch, cfg, spec, &w, p_bar, &k_now, st, opts.margin) else {
                break;
            };
            let rep = st.solve(&sub.problem, opts);
            if rep.is_optimal() {
                let cand = align_phases(&sub.vars.w_value(&rep.x), ch);
                let e = eval_point(&cand, ch, cfg);
                let m = kind.merit(&e);
                let slack = sub.slacks.iter().map(|s| rep.x[s.0]).sum::<f64>() / cfg.pmax;
                let feasible = point_violation(&e, cfg, spec) <= opts.feas_tol;
                if feasible && m >= merit - 1e-12 * merit.abs().max(1e-300) {
                    accepted = Some((cand, e, m, slack));
                    break;
                }
                if feasible && m >= merit - STALL_TOL * merit.abs() {
                    // the subproblem optimum is the current point up to solver accuracy
                    stalled = true;
                    break;
                }
            }
            p_bar *= opts.penalty_growth;
        }
        let Some((cand, e, m, slack)) = accepted else {
            st.stop = Some(if stalled { StopReason::Stalled } else { StopReason::NoProgress });
            break;
        };
        // f1(w⁺) − λ f2(w⁺) for ratio loops; objective change otherwise
        let residual = if ratio {
            e.rate - merit * cfg.consumed_power(e.power)
        } else {
            m - merit
        };
        let rel = (m - merit).abs() / merit.abs().max(1e-300);
        w = cand;
        cur = e;
        merit = m;
        if ratio {
            st.lambda = merit;
        }
        st.history.push(TraceEntry {
            objective: merit,
            lambda: st.lambda,
            residual,
            violation: point_violation(&cur, cfg, spec),
            slack,
        });
        let done = if ratio {
            residual <= opts.delta * (1.0 + cur.rate.abs())
        } else {
            rel <= opts.delta
        };
        if done {
            st.stop = Some(if ratio { StopReason::Residual } else { StopReason::Stalled });
            break;
        }
        if rel < opts.delta / 10.0 {
            small_steps += 1;
            if small_steps >= 3 {
                st.stop = Some(StopReason::Stalled);
                break;
            }
        } else {
            small_steps = 0;
        }
        p_bar = (p_bar / opts.penalty_growth).max(opts.penalty_start);
    }
    if st.stop.is_none() {
        st.stop = Some(StopReason::MaxIterations);
    }
    w
}

fn check_inputs(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<()> {
    cfg.validate()?;
    opts.validate()?;
    if ch.h.len() != cfg.k || ch.h.iter().any(|h| h.len() != cfg.m) {
        return Err(Error::Dimension(format!(
            "channels do not match M = {}, K = {}",
            cfg.m, cfg.k
        )));
    }
    Ok(())
}

fn point_solution(w: DMatrix<C64>, ch: &ChannelSet, cfg: &SystemConfig, st: OuterLoopState) -> BeamformerSolution {
    let mut sol = BeamformerSolution::new(w, None);
    metrics::evaluate(&sol, ch, cfg, Target::Point).record(&mut sol);
    st.finish(sol)
}

/// Communication-centric EE maximization with SINR and angle-CRB
/// requirements (Dinkelbach ratio, quadratic transform, rank-one cuts).
pub fn solve_eec_point(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let spec = PointSpec::standard();
    let mut st = OuterLoopState::new(cfg.k);
    let w0 = point_start(ch, cfg, &spec, opts, &mut st)?;
    let w = point_loop(ch, cfg, &spec, PointKind::Rate { lambda: 1.0 }, w0, opts, &mut st);
    Ok(point_solution(w, ch, cfg, st))
}

/// Sensing-centric EE maximization for the point target.
pub fn solve_ees_point(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    solve_ees_point_with(cfg, ch, &PointSpec::standard(), opts)
}

/// [`solve_ees_point`] with a custom requirement set.
pub fn solve_ees_point_with(cfg: &SystemConfig, ch: &ChannelSet, spec: &PointSpec, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let mut st = OuterLoopState::new(cfg.k);
    let w0 = point_start(ch, cfg, spec, opts, &mut st)?;
    let w = point_loop(ch, cfg, spec, PointKind::Sense, w0, opts, &mut st);
    Ok(point_solution(w, ch, cfg, st))
}

/// Minimum radiated power meeting the SINR and CRB requirements: one
/// relaxed SDP, followed by penalized rank-one refinement if its solution
/// is not rank one.
pub fn baseline_power_min(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let spec = PointSpec::standard();
    let mut st = OuterLoopState::new(cfg.k);
    let mut p = ConeProblem::new();
    let vars = BeamVars::new(&mut p, cfg.m, cfg.k, false);
    for c in &vars.cov {
        crate::constraints::hermitian_psd(&mut p, c);
    }
    let mats: Vec<&HermitianVar> = vars.cov.iter().collect();
    power_budget(&mut p, &mats, cfg.pmax);
    for (i, h) in ch.h.iter().enumerate() {
        sinr_sdr(&mut p, &vars.cov, i, h, cfg.gamma[i] * (1.0 + opts.margin), cfg.sigma_c2, None);
    }
    crb_schur_lmi(&mut p, &mats, ch.theta, ch.alpha, cfg, CrbBound::Fixed(cfg.rho() * (1.0 - opts.margin)));
    p.set_objective(vars.total_trace() * (-1.0 / cfg.pmax));
    let rep = st.solve(&p, opts);
    match rep.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(Error::Infeasible("power minimization is infeasible".into())),
        s => return Err(Error::Solver(format!("power minimization ended with status {s}"))),
    }
    let ws: Vec<_> = vars.cov_values(&rep.x).iter().map(project_psd).collect();
    let (w, _, _) = recover_rank1(&ws, None, ch)?;
    let w = align_phases(&w, ch);
    st.iteration = 1;
    let e = eval_point(&w, ch, cfg);
    st.history.push(TraceEntry {
        objective: -e.power,
        lambda: f64::NAN,
        residual: f64::NAN,
        violation: point_violation(&e, cfg, &spec),
        slack: 0.0,
    });
    let w = if point_violation(&e, cfg, &spec) <= opts.feas_tol {
        st.stop = Some(StopReason::Residual);
        w
    } else {
        let w0 = warm_up(ch, cfg, &spec, &w, opts, &mut st)?;
        point_loop(ch, cfg, &spec, PointKind::Power, w0, opts, &mut st)
    };
    Ok(point_solution(w, ch, cfg, st))
}

/// Sum-rate maximization under the same requirements (the EE loop with λ = 0).
pub fn baseline_sumrate_max(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let spec = PointSpec::standard();
    let mut st = OuterLoopState::new(cfg.k);
    let w0 = point_start(ch, cfg, &spec, opts, &mut st)?;
    let w = point_loop(ch, cfg, &spec, PointKind::Rate { lambda: 0.0 }, w0, opts, &mut st);
    Ok(point_solution(w, ch, cfg, st))
}

/// One point of the EE tradeoff curve.
#[derive(Clone, Debug)]
pub struct ParetoPoint {
    /// Required sensing-centric EE.
    pub threshold: f64,
    /// `None` when the threshold is not attainable (or the solve failed).
    pub solution: Option<BeamformerSolution>,
    pub error: Option<Error>,
}

impl ParetoPoint {
    pub fn ee_c(&self) -> Option<f64> {
        self.solution.as_ref().and_then(|s| s.achieved.get("ee_c").copied())
    }
}

/// Communication-centric EE maximization subject to `EE_S ≥ E` and the
/// power budget, for one threshold.
pub fn solve_pareto_single(cfg: &SystemConfig, ch: &ChannelSet, threshold: f64, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let spec = PointSpec {
        sinr: false,
        crb: false,
        ee_s_min: Some(threshold),
    };
    let mut st = OuterLoopState::new(cfg.k);
    let w0 = point_start(ch, cfg, &spec, opts, &mut st)?;
    let kind = match opts.pareto_surrogate {
        RateSurrogate::QuadraticTransform => PointKind::Rate { lambda: 1.0 },
        RateSurrogate::LagrangianDual => PointKind::DualRate { lambda: 1.0 },
    };
    let w = point_loop(ch, cfg, &spec, kind, w0, opts, &mut st);
    let mut sol = point_solution(w, ch, cfg, st);
    sol.achieved.insert("ee_s_threshold".into(), threshold);
    Ok(sol)
}

/// Approximate EE_C/EE_S tradeoff: one independent constrained solve per
/// sensing-EE threshold. Failures are recorded per point.
pub fn solve_pareto_point(cfg: &SystemConfig, ch: &ChannelSet, grid: &[f64], opts: &AlgorithmOptions) -> Result<Vec<ParetoPoint>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("EE_S thresholds must be sorted ascending".into()));
    }
    check_inputs(cfg, ch, opts)?;
    Ok(grid
        .iter()
        .map(|&e| match solve_pareto_single(cfg, ch, e, opts) {
            Ok(s) => ParetoPoint {
                threshold: e,
                solution: Some(s),
                error: None,
            },
            Err(err) => ParetoPoint {
                threshold: e,
                solution: None,
                error: Some(err),
            },
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Extended target

#[derive(Clone, Debug)]
struct ExtState {
    ws: Vec<DMatrix<C64>>,
    probe: DMatrix<C64>,
}

#[derive(Clone, Debug)]
struct ExtEval {
    signal: Vec<f64>,
    total: Vec<f64>,
    rate: f64,
    power: f64,
    crb: f64,
    inv_trace: f64,
}

impl ExtState {
    fn covariance(&self) -> DMatrix<C64> {
        let mut r = self.probe.clone();
        for w in &self.ws {
            r += w;
        }
        r
    }
}

fn eval_ext(s: &ExtState, ch: &ChannelSet, cfg: &SystemConfig) -> ExtEval {
    let r = s.covariance();
    let mut signal = Vec::new();
    let mut total = Vec::new();
    let mut rate = 0.0;
    for (k, h) in ch.h.iter().enumerate() {
        let sg = h.dotc(&(&s.ws[k] * h)).re;
        let tt = h.dotc(&(&r * h)).re + cfg.sigma_c2;
        rate += (tt / (tt - sg)).log2();
        signal.push(sg);
        total.push(tt);
    }
    let power = r.trace().re;
    let crb = metrics::crb_extended(&r, cfg).unwrap_or(f64::INFINITY);
    let inv_trace = if crb.is_finite() {
        crb * cfg.l as f64 / (cfg.sigma_s2 * cfg.m as f64)
    } else {
        f64::INFINITY
    };
    ExtEval {
        signal,
        total,
        rate,
        power,
        crb,
        inv_trace,
    }
}

fn ext_violation(e: &ExtEval, cfg: &SystemConfig) -> f64 {
    let mut v = (e.power - cfg.pmax) / cfg.pmax;
    for k in 0..e.signal.len() {
        let sinr = e.signal[k] / (e.total[k] - e.signal[k]);
        v = v.max((cfg.gamma[k] - sinr) / cfg.gamma[k]);
    }
    v = v.max((e.crb - cfg.crb_ext) / cfg.crb_ext);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn ext_values(vars: &ExtendedVars, x: &[f64]) -> ExtState {
    ExtState {
        ws: vars.cov.iter().map(|c| project_psd(&c.value(x))).collect(),
        probe: project_psd(&vars.probe.value(x)),
    }
}

fn ext_start(ch: &ChannelSet, cfg: &SystemConfig, opts: &AlgorithmOptions, st: &mut OuterLoopState) -> Result<ExtState> {
    let m = cfg.m;
    let w = match &opts.init {
        InitStrategy::Given(w) if w.nrows() == m && w.ncols() == ch.h.len() => w.clone(),
        _ => rzf(ch, cfg, 0.5 * cfg.pmax),
    };
    let beam_power = w.norm_squared();
    let s = ExtState {
        ws: w.column_iter().map(|c| &c * c.adjoint()).collect(),
        probe: DMatrix::identity(m, m) * C64::new((cfg.pmax - beam_power).max(0.0) / m as f64, 0.0),
    };
    if ext_violation(&eval_ext(&s, ch, cfg), cfg) <= opts.feas_tol {
        return Ok(s);
    }
    let mut p = ConeProblem::new();
    let vars = extended_target_fragments(&mut p, ch, cfg, &ExtendedMode::MinPower);
    let rep = st.solve(&p, opts);
    match rep.status {
        SolveStatus::Optimal => Ok(ext_values(&vars, &rep.x)),
        SolveStatus::Infeasible => Err(Error::Infeasible("the relaxed extended-target problem has no feasible point".into())),
        s => Err(Error::Solver(format!("extended-target start ended with status {s}"))),
    }
}

fn ext_solution(s: &ExtState, ch: &ChannelSet, cfg: &SystemConfig, st: OuterLoopState) -> Result<BeamformerSolution> {
    let (w, probe, report) = recover_rank1(&s.ws, Some(&s.probe), ch)?;
    let mut sol = BeamformerSolution::new(w, probe);
    metrics::evaluate(&sol, ch, cfg, Target::Extended).record(&mut sol);
    sol.achieved.insert("recovery_numerator_delta".into(), report.numerator_delta);
    sol.achieved.insert("recovery_covariance_delta".into(), report.covariance_delta);
    sol.achieved.insert("recovery_eig_ratio".into(), report.eig_ratio_after);
    let rank = report.ranks.iter().copied().max().unwrap_or(0);
    sol.achieved.insert("recovery_input_rank".into(), rank as f64);
    Ok(st.finish(sol))
}

/// Communication-centric EE maximization for an extended target with a
/// dedicated probing covariance; rank-one beamformers recovered at the end.
pub fn solve_eec_extended(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let mut st = OuterLoopState::new(cfg.k);
    let mut s = ext_start(ch, cfg, opts, &mut st)?;
    let mut e = eval_ext(&s, ch, cfg);
    let mut lambda = e.rate / cfg.consumed_power(e.power);
    st.lambda = lambda;
    st.history.push(TraceEntry {
        objective: lambda,
        lambda,
        residual: f64::NAN,
        violation: ext_violation(&e, cfg),
        slack: 0.0,
    });
    let mut small_steps = 0;
    for it in 0..opts.max_outer {
        st.iteration = it + 1;
        let b: Vec<f64> = (0..cfg.k).map(|k| 1.0 / (e.total[k] - e.signal[k])).collect();
        st.b = b.clone();
        let mode = ExtendedMode::Comm {
            b,
            s0: e.total.clone(),
            lambda,
        };
        let mut p = ConeProblem::new();
        let vars = extended_target_fragments(&mut p, ch, cfg, &mode);
        let rep = st.solve(&p, opts);
        if !rep.is_optimal() {
            st.stop = Some(StopReason::NoProgress);
            break;
        }
        let cand = ext_values(&vars, &rep.x);
        let ce = eval_ext(&cand, ch, cfg);
        let new_lambda = ce.rate / cfg.consumed_power(ce.power);
        if ext_violation(&ce, cfg) > opts.feas_tol {
            st.stop = Some(StopReason::NoProgress);
            break;
        }
        if new_lambda < lambda - 1e-12 * lambda.abs() {
            let tiny = new_lambda >= lambda - STALL_TOL * lambda.abs();
            st.stop = Some(if tiny { StopReason::Stalled } else { StopReason::NoProgress });
            break;
        }
        let residual = ce.rate - lambda * cfg.consumed_power(ce.power);
        let rel = (new_lambda - lambda).abs() / lambda.abs().max(1e-300);
        s = cand;
        e = ce;
        lambda = new_lambda;
        st.lambda = lambda;
        st.history.push(TraceEntry {
            objective: lambda,
            lambda,
            residual,
            violation: ext_violation(&e, cfg),
            slack: 0.0,
        });
        if residual <= opts.delta * (1.0 + e.rate.abs()) {
            st.stop = Some(StopReason::Residual);
            break;
        }
        if rel < opts.delta / 10.0 {
            small_steps += 1;
            if small_steps >= 3 {
                st.stop = Some(StopReason::Stalled);
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    ext_solution(&s, ch, cfg, st)
}

/// Sensing-centric EE maximization for an extended target: minimizes
/// `ln p_e + ln q_e` (consumed power times `tr(R_x⁻¹)`) by successive
/// linearization.
pub fn solve_ees_extended(cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> Result<BeamformerSolution> {
    check_inputs(cfg, ch, opts)?;
    let mut st = OuterLoopState::new(cfg.k);
    let mut s = ext_start(ch, cfg, opts, &mut st)?;
    let mf = cfg.m as f64;
    let obj = |e: &ExtEval| (cfg.sigma_s2 * mf * cfg.consumed_power(e.power)).ln() + e.inv_trace.ln();
    let mut e = eval_ext(&s, ch, cfg);
    let mut cur = obj(&e);
    st.history.push(TraceEntry {
        objective: cur,
        lambda: f64::NAN,
        residual: f64::NAN,
        violation: ext_violation(&e, cfg),
        slack: 0.0,
    });
    for it in 0..opts.max_outer {
        st.iteration = it + 1;
        let mode = ExtendedMode::Sense {
            p_n: cfg.sigma_s2 * mf * cfg.consumed_power(e.power),
            q_n: e.inv_trace,
        };
        let mut p = ConeProblem::new();
        let vars = extended_target_fragments(&mut p, ch, cfg, &mode);
        let rep = st.solve(&p, opts);
        if !rep.is_optimal() {
            st.stop = Some(StopReason::NoProgress);
            break;
        }
        let cand = ext_values(&vars, &rep.x);
        let ce = eval_ext(&cand, ch, cfg);
        let next = obj(&ce);
        if ext_violation(&ce, cfg) > opts.feas_tol || next.is_nan() {
            st.stop = Some(StopReason::NoProgress);
            break;
        }
        if next > cur + 1e-12 * cur.abs() {
            let tiny = next <= cur + STALL_TOL * cur.abs();
            st.stop = Some(if tiny { StopReason::Stalled } else { StopReason::NoProgress });
            break;
        }
        let change = cur - next;
        s = cand;
        e = ce;
        cur = next;
        st.history.push(TraceEntry {
            objective: cur,
            lambda: f64::NAN,
            residual: change,
            violation: ext_violation(&e, cfg),
            slack: 0.0,
        });
        // ln-scale objective: an absolute change is a relative change of EE_S
        if change <= opts.delta {
            st.stop = Some(StopReason::Stalled);
            break;
        }
    }
    ext_solution(&s, ch, cfg, st)
}
