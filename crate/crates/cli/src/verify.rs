//! Acceptance checks AC1–AC8, shared by `isac-ee verify` and the
//! `acceptance` test target.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use isac_ee::constraints::{frac_cut, log_minorant_value, log_sum_majorant, neg_log_minorant_value, norm_sq_minorant, quad_transform_value, rank1_cut_value};
use isac_ee::metrics::{self, BeamformerSolution, Target};
use isac_ee::oracle::{self, AuditChecks, OracleConfig};
use isac_ee::scenario::{self, draw_channels_seeded, make_config, SystemConfig};
use isac_ee::sdp::{self, ConeProblem, LinExpr, Lmi, SolveOptions};
use isac_ee::solvers::{self, AlgorithmOptions};
use isac_ee::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sweep::{run_pareto, run_sweep, Algorithm, SweepResult, SweepSpec, SweptParam};

/// Relative slack for monotone trends: the outer-loop stopping tolerance.
const TREND_TOL: f64 = 1e-4;
const SWEEP_LIMIT_S: f64 = 600.0;

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "{} {} [{:.1} s] {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Monte-Carlo trials per grid point of the trend sweeps.
    pub trend_trials: usize,
    pub seed: u64,
    /// Where the trend sweeps write their CSV and SVG files, if anywhere.
    pub out_dir: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trend_trials: 20,
            seed: 0,
            out_dir: None,
        }
    }
}

fn cfg_with(pairs: &[(&str, &str)]) -> SystemConfig {
    let mut raw = scenario::default_raw();
    for (k, v) in pairs {
        raw.insert(k.to_string(), v.to_string());
    }
    make_config(&raw).expect("built-in scenario is valid")
}

fn timed(id: &'static str, f: impl FnOnce() -> (bool, String)) -> Criterion {
    let start = Instant::now();
    let (pass, detail) = f();
    Criterion {
        id,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion in order, handing each result to `report` as soon
/// as it is available.
pub fn run_with(opts: &VerifyOptions, mut report: impl FnMut(&Criterion)) -> Vec<Criterion> {
    let steps: [&dyn Fn() -> Criterion; 8] = [
        &|| ac1_crb(opts.seed),
        &|| ac2_dinkelbach(opts.seed),
        &|| ac3_cuts(opts.seed),
        &|| ac4_recovery(opts.seed),
        &|| ac5_grid(opts.seed),
        &|| ac6_sdp(opts.seed),
        &|| ac7_trends(opts),
        &|| ac8_baselines(opts.seed),
    ];
    steps
        .iter()
        .map(|f| {
            let c = f();
            report(&c);
            c
        })
        .collect()
}

pub fn run_all(opts: &VerifyOptions) -> Vec<Criterion> {
    run_with(opts, |_| {})
}

fn random_pd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(m, m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    &g * g.adjoint() + DMatrix::identity(m, m) * C64::new(0.05, 0.0)
}

/// Closed-form CRB against the finite-difference Fisher information.
pub fn ac1_crb(seed: u64) -> Criterion {
    timed("AC1", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xAC1);
        let oc = OracleConfig::default();
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let m = 2 + i % 3;
            let cfg = cfg_with(&[("M", &m.to_string()), ("K", "1"), ("N_rx", &m.to_string())]);
            let rx = random_pd(&mut rng, m);
            let theta = rng.random_range(0.2..PI - 0.2);
            let alpha = C64::new(rng.random_range(0.2..2.0), rng.random_range(-1.0..1.0));
            let rel = match (metrics::crb_point(&rx, theta, alpha, &cfg), oracle::fisher_fd(&rx, theta, alpha, &cfg, &oc)) {
                (Ok(crb), Ok(j)) => (crb * j - 1.0).abs(),
                _ => f64::INFINITY,
            };
            worst = worst.max(rel);
        }
        let secs = start.elapsed().as_secs_f64();
        (
            worst <= 1e-4 && secs < 1.0,
            format!("50 instances, max relative error {worst:.2e} (tol 1e-4), {secs:.3} s (limit 1 s)"),
        )
    })
}

fn lambda_monotone(s: &BeamformerSolution) -> bool {
    s.trace.windows(2).all(|w| w[1].lambda >= w[0].lambda - 1e-9)
}

/// Ratio sequences of the Dinkelbach loops and their termination.
pub fn ac2_dinkelbach(seed: u64) -> Criterion {
    timed("AC2", || {
        let cfg = cfg_with(&[]);
        let opts = AlgorithmOptions::default();
        let mut fails = Vec::new();
        let mut worst_iters = 0.0f64;
        type Solver = fn(&SystemConfig, &scenario::ChannelSet, &AlgorithmOptions) -> isac_ee::Result<BeamformerSolution>;
        let solvers: [(&str, Solver); 2] = [("eec-point", solvers::solve_eec_point), ("eec-extended", solvers::solve_eec_extended)];
        for (name, solve) in solvers {
            for s in 0..20 {
                let ch = draw_channels_seeded(&cfg, seed + s);
                match solve(&cfg, &ch, &opts) {
                    Ok(sol) => {
                        let iters = sol.achieved["iterations"];
                        worst_iters = worst_iters.max(iters);
                        // every converged exit (residual, stall, or sub-δ/10 steps)
                        // bounds f1 − λ f2 by δ(1 + |f1|)
                        let ok = lambda_monotone(&sol) && sol.achieved["converged"] == 1.0 && iters <= 50.0;
                        if !ok {
                            fails.push(format!("{name} seed {}", seed + s));
                        }
                    }
                    Err(e) => fails.push(format!("{name} seed {}: {e}", seed + s)),
                }
            }
        }
        (
            fails.is_empty(),
            if fails.is_empty() {
                format!("40 runs (eec-point, eec-extended): lambda non-decreasing, converged, max {worst_iters} iterations (limit 50)")
            } else {
                format!("failed: {}", fails.join("; "))
            },
        )
    })
}

/// Under-/over-estimator property and tightness of every SCA cut family.
pub fn ac3_cuts(seed: u64) -> Criterion {
    timed("AC3", || {
        const N: usize = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xAC3);
        let mut worst = [0.0f64; 6];
        let rel = |v: f64, f: f64| v / f.abs().max(1.0);
        let cv = |rng: &mut ChaCha8Rng, n: usize| DVector::from_fn(n, |_, _| C64::new(4.0 * (rng.random::<f64>() - 0.5), 4.0 * (rng.random::<f64>() - 0.5)));
        for _ in 0..N {
            // linearized norm and rank-one cut
            let n = rng.random_range(1..=8);
            let w = cv(&mut rng, n);
            let wb = cv(&mut rng, n);
            let f = w.norm_squared();
            worst[0] = worst[0].max(rel(norm_sq_minorant(&w, &wb) - f, f));
            worst[0] = worst[0].max(rel((norm_sq_minorant(&wb, &wb) - wb.norm_squared()).abs(), wb.norm_squared()));
            let cut = rank1_cut_value(&(&w * w.adjoint()), &w, &wb);
            worst[0] = worst[0].max(rel((cut - (&w - &wb).norm_squared()).abs(), cut));

            // fraction cut
            let (x, y, xn, yn): (f64, f64, f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(1e-3..10.0), rng.random_range(-10.0..10.0), rng.random_range(1e-3..10.0));
            let f = x * x / y;
            worst[1] = worst[1].max(rel(frac_cut(x, y, xn, yn) - f, f));
            worst[1] = worst[1].max(rel((frac_cut(xn, yn, xn, yn) - xn * xn / yn).abs(), xn * xn / yn));

            // log-sum majorant
            let (p, q, pn, qn): (f64, f64, f64, f64) = (rng.random_range(1e-3..100.0), rng.random_range(1e-3..100.0), rng.random_range(1e-3..100.0), rng.random_range(1e-3..100.0));
            let f = p.ln() + q.ln();
            worst[2] = worst[2].max(rel(f - log_sum_majorant(p, q, pn, qn), f));
            worst[2] = worst[2].max(rel((log_sum_majorant(pn, qn, pn, qn) - pn.ln() - qn.ln()).abs(), pn.ln() + qn.ln()));

            // log minorant
            let (u, u0): (f64, f64) = (rng.random_range(1e-3..1e3), rng.random_range(1e-3..1e3));
            worst[3] = worst[3].max(rel(log_minorant_value(u, u0) - u.ln(), u.ln()));
            worst[3] = worst[3].max(rel((log_minorant_value(u0, u0) - u0.ln()).abs(), u0.ln()));

            // negative-log minorant
            let b = rng.random_range(1e-3..1e3);
            worst[4] = worst[4].max(rel(neg_log_minorant_value(u, b) + u.ln(), u.ln()));
            worst[4] = worst[4].max(rel((neg_log_minorant_value(u, 1.0 / u) + u.ln()).abs(), u.ln()));

            // quadratic transform
            let a = C64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let (bb, t) = (rng.random_range(1e-2..10.0), rng.random_range(-5.0..5.0));
            let f = a.norm_sqr() / bb;
            worst[5] = worst[5].max(rel(quad_transform_value(a, bb, t) - f, f));
            let ar = C64::new(a.norm(), 0.0);
            worst[5] = worst[5].max(rel((quad_transform_value(ar, bb, ar.re / bb) - f).abs(), f));
        }
        let names = ["rank-one/norm", "fraction", "log-sum", "log", "neg-log", "quadratic-transform"];
        let max = worst.iter().copied().fold(0.0, f64::max);
        let parts: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
        (max <= 1e-12, format!("{N} samples per family, worst violation: {} (tol 1e-12)", parts.join(", ")))
    })
}

/// Rank-one recovery on extended-target relaxed solutions.
pub fn ac4_recovery(seed: u64) -> Criterion {
    timed("AC4", || {
        let cfg = cfg_with(&[]);
        let opts = AlgorithmOptions::default();
        let mut fails = Vec::new();
        let (mut num, mut cov, mut ratio, mut audit, mut higher_rank) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY, 0);
        for s in 0..20 {
            let ch = draw_channels_seeded(&cfg, seed + 100 + s);
            let out = if s % 2 == 0 {
                solvers::solve_eec_extended(&cfg, &ch, &opts)
            } else {
                solvers::solve_ees_extended(&cfg, &ch, &opts)
            };
            match out {
                Ok(sol) => {
                    num = num.max(sol.achieved["recovery_numerator_delta"]);
                    cov = cov.max(sol.achieved["recovery_covariance_delta"]);
                    ratio = ratio.max(sol.achieved["recovery_eig_ratio"]);
                    if sol.achieved["recovery_input_rank"] > 1.0 {
                        higher_rank += 1;
                    }
                    let rep = oracle::audit_with(&sol, &cfg, &ch, &AuditChecks::all(Target::Extended), 1e-6);
                    audit = audit.max(rep.max_violation);
                    if !rep.pass {
                        fails.push(format!("seed {} audit", seed + 100 + s));
                    }
                }
                Err(e) => fails.push(format!("seed {}: {e}", seed + 100 + s)),
            }
        }
        let pass = fails.is_empty() && num <= 1e-8 && cov <= 1e-8 && ratio <= 1e-6;
        (
            pass,
            format!(
                "20 solutions ({higher_rank} with relaxed rank > 1): numerator delta {num:.1e}, covariance delta {cov:.1e} (tol 1e-8), audit {audit:.1e} (tol 1e-6), eigen-ratio {ratio:.1e} (tol 1e-6){}",
                if fails.is_empty() { String::new() } else { format!("; failed: {}", fails.join("; ")) }
            ),
        )
    })
}

/// Single-user EE solver against a dense MRT power grid.
pub fn ac5_grid(seed: u64) -> Criterion {
    timed("AC5", || {
        let cfg = cfg_with(&[("M", "4"), ("N_rx", "4"), ("K", "1"), ("gamma", "-60 dB"), ("rho", "90 deg")]);
        let opts = AlgorithmOptions::default();
        let oc = OracleConfig::default();
        let mut worst: f64 = 0.0;
        let mut fails = Vec::new();
        for s in 0..10 {
            let ch = draw_channels_seeded(&cfg, seed + 200 + s);
            match (solvers::solve_eec_point(&cfg, &ch, &opts), oracle::grid_search_ee(&cfg, &ch, &oc)) {
                (Ok(sol), Ok(g)) => worst = worst.max((sol.achieved["ee_c"] - g.ee).abs() / g.ee),
                (a, b) => fails.push(format!("seed {}: {:?} {:?}", seed + 200 + s, a.err(), b.err())),
            }
        }
        (
            fails.is_empty() && worst <= 5e-3,
            format!("10 instances, M = 4, {}-point grid: max relative gap {worst:.2e} (tol 5e-3){}", oc.grid_points, if fails.is_empty() { String::new() } else { format!("; failed: {}", fails.join("; ")) }),
        )
    })
}

fn analytic_sdps() -> Vec<(&'static str, f64)> {
    let opts = SolveOptions {
        tol_feas: 1e-10,
        tol_gap: 1e-10,
        ..SolveOptions::default()
    };
    let mut out = Vec::new();

    // max tr X s.t. tr X ≤ 1, X ⪰ 0 (3×3): optimum 1
    let mut p = ConeProblem::new();
    let x = p.add_psd_block(3);
    let tr: LinExpr = (0..3).map(|i| LinExpr::var(x.entry(i, i))).sum();
    p.add_le(tr.clone(), LinExpr::constant(1.0));
    p.set_objective(tr);
    let r = sdp::solve(&p, &opts);
    out.push(("trace bound", if r.is_optimal() { (r.objective - 1.0).abs() } else { f64::INFINITY }));

    // min t s.t. [[t, 1], [1, t]] ⪰ 0: optimum t = 1
    let mut p = ConeProblem::new();
    let t = p.add_free();
    let mut l = Lmi::new(2);
    l.add(0, 0, t.into());
    l.add(1, 1, t.into());
    l.add(0, 1, LinExpr::constant(1.0));
    p.add_lmi(l);
    p.set_objective(-LinExpr::var(t));
    let r = sdp::solve(&p, &opts);
    out.push(("2x2 Schur", if r.is_optimal() { (r.x[t.0] - 1.0).abs() } else { f64::INFINITY }));

    // max tr(Q W) s.t. tr W = 1, W ⪰ 0 Hermitian: optimum λ_max(Q)
    let q = DMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)]);
    let mut p = ConeProblem::new();
    let w = p.add_hermitian(2);
    p.add_hermitian_lmi(2, |i, j| w.entry(i, j));
    p.add_eq(w.trace() - 1.0);
    p.set_objective(w.trace_with(&q));
    let r = sdp::solve(&p, &opts);
    out.push(("complex max-eigenvalue", if r.is_optimal() { (r.objective - 3.0).abs() } else { f64::INFINITY }));
    out
}

/// Hand-built SDPs with known optima, and KKT residuals of every optimal
/// subproblem met by the solvers on a batch of instances.
pub fn ac6_sdp(seed: u64) -> Criterion {
    timed("AC6", || {
        let analytic = analytic_sdps();
        let analytic_ok = analytic.iter().all(|(_, e)| *e <= 1e-8);
        let cfg = cfg_with(&[("M", "4"), ("N_rx", "4")]);
        let opts = AlgorithmOptions::default();
        let (mut kkt, mut subproblems) = (0.0f64, 0.0);
        let mut errors = Vec::new();
        for s in 0..4 {
            let ch = draw_channels_seeded(&cfg, seed + 300 + s);
            let mut runs: Vec<isac_ee::Result<BeamformerSolution>> = Algorithm::ALL.iter().map(|a| a.solve(&cfg, &ch, &opts)).collect();
            if let Ok(ees) = &runs[2] {
                let e = 0.5 * ees.achieved["ee_s"];
                runs.push(solvers::solve_pareto_single(&cfg, &ch, e, &opts));
            }
            for r in runs {
                match r {
                    Ok(sol) => {
                        kkt = kkt.max(sol.achieved["max_subproblem_kkt"]);
                        subproblems += sol.achieved["subproblems"];
                    }
                    Err(e) => errors.push(e.to_string()),
                }
            }
        }
        let parts: Vec<String> = analytic.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
        (
            analytic_ok && kkt <= 1e-7 && errors.is_empty(),
            format!(
                "analytic errors: {} (tol 1e-8); max KKT residual {kkt:.1e} over {subproblems} subproblems (tol 1e-7){}",
                parts.join(", "),
                if errors.is_empty() { String::new() } else { format!("; solver errors: {}", errors.join("; ")) }
            ),
        )
    })
}

fn non_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_TOL))
}

fn non_decreasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] >= w[0] * (1.0 - TREND_TOL))
}

fn fmt_vals(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn timed_sweep(f: impl FnOnce() -> crate::Result<SweepResult>) -> (crate::Result<SweepResult>, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}

/// Qualitative trends of the sweeps at M = 8, K = 2.
pub fn ac7_trends(opts: &VerifyOptions) -> Criterion {
    timed("AC7", || {
        let spec = |alg: Algorithm, param: SweptParam, grid: Vec<f64>, name: &str| {
            let mut s = SweepSpec::new(alg, param, grid);
            s.trials = opts.trend_trials;
            s.seed = opts.seed;
            s.out_dir = opts.out_dir.as_ref().map(|d| d.join(name));
            s
        };
        let rho_grid = vec![0.05, 0.1, 0.15, 0.2, 0.3];
        let gamma_grid = vec![0.0, 5.0, 10.0, 15.0, 20.0];
        let tradeoff_grid: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();

        let mut parts = Vec::new();
        let mut pass = true;
        let mut check = |label: &str, r: (crate::Result<SweepResult>, f64), test: &dyn Fn(&SweepResult) -> (bool, Vec<f64>)| {
            let (res, secs) = r;
            match res {
                Ok(res) => {
                    let feasible = res.rows.iter().all(|row| row.feasible_fraction == 1.0);
                    let (ok, vals) = test(&res);
                    let ok = ok && feasible && secs < SWEEP_LIMIT_S;
                    pass &= ok;
                    parts.push(format!(
                        "({label}) {} [{}] {secs:.0} s{}",
                        if ok { "ok" } else { "FAIL" },
                        fmt_vals(&vals),
                        if feasible { "" } else { ", infeasible trials" }
                    ));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("({label}) error: {e}"));
                }
            }
        };

        check("a: EE_C vs rho", timed_sweep(|| run_sweep(&spec(Algorithm::EecPoint, SweptParam::Rho, rho_grid, "rho"))), &|r| {
            let v = r.mean_ee_c();
            (non_decreasing(&v), v)
        });
        check(
            "b: EE_C vs gamma",
            timed_sweep(|| run_sweep(&spec(Algorithm::EecPoint, SweptParam::Gamma, gamma_grid.clone(), "gamma_eec"))),
            &|r| {
                let v = r.mean_ee_c();
                // flat while the SINR target is inactive, then decreasing
                let decreases = v[v.len() - 1] < v[0] * (1.0 - TREND_TOL);
                (non_increasing(&v) && decreases, v)
            },
        );
        check(
            "c: EE_S vs gamma",
            timed_sweep(|| run_sweep(&spec(Algorithm::EesPoint, SweptParam::Gamma, gamma_grid.clone(), "gamma_ees"))),
            &|r| {
                let v = r.mean_ee_s();
                (non_increasing(&v), v)
            },
        );
        check(
            "d: tradeoff",
            timed_sweep(|| run_pareto(&spec(Algorithm::EecPoint, SweptParam::Threshold, tradeoff_grid, "pareto"))),
            &|r| {
                let v = r.mean_ee_c();
                let n = v.len() - 1;
                let lower = v[0] - v[n / 2];
                let upper = v[n / 2] - v[n];
                (non_increasing(&v) && upper >= 2.0 * lower && upper > 0.0, v)
            },
        );
        (pass, format!("{} trials per point; {}", opts.trend_trials, parts.join("; ")))
    })
}

/// Dominance relations between the EE solver and the baselines.
pub fn ac8_baselines(seed: u64) -> Criterion {
    timed("AC8", || {
        let cfg = cfg_with(&[]);
        let opts = AlgorithmOptions::default();
        let mut fails = Vec::new();
        let (mut ee_margin, mut p_margin) = (f64::INFINITY, f64::INFINITY);
        for s in 0..20 {
            let seed = seed + 400 + s;
            let ch = draw_channels_seeded(&cfg, seed);
            let run = |a: Algorithm| a.solve(&cfg, &ch, &opts);
            match (run(Algorithm::EecPoint), run(Algorithm::EesPoint), run(Algorithm::PowerMin), run(Algorithm::SumRate)) {
                (Ok(eec), Ok(ees), Ok(ba1), Ok(ba2)) => {
                    let d = eec.achieved["ee_c"] - ba2.achieved["ee_c"];
                    ee_margin = ee_margin.min(d);
                    let p1 = ba1.achieved["p_total"];
                    for other in [&eec, &ees, &ba2] {
                        p_margin = p_margin.min(other.achieved["p_total"] - p1);
                    }
                }
                (a, b, c, d) => fails.push(format!(
                    "seed {seed}: {}",
                    [a.err(), b.err(), c.err(), d.err()].into_iter().flatten().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
                )),
            }
        }
        (
            fails.is_empty() && ee_margin >= -1e-6 && p_margin >= -1e-6,
            format!(
                "20 instances: min EE_C(eec-point) - EE_C(BA2) = {ee_margin:.3e}, min P(other) - P(BA1) = {p_margin:.3e} (both >= -1e-6){}",
                if fails.is_empty() { String::new() } else { format!("; failed: {}", fails.join("; ")) }
            ),
        )
    })
}
