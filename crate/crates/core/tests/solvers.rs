use isac_ee::metrics::{BeamformerSolution, Target};
use isac_ee::oracle::{self, AuditChecks, OracleConfig};
use isac_ee::scenario::{self, draw_channels_seeded, make_config, SystemConfig};
use isac_ee::solvers::{self, AlgorithmOptions, InitStrategy, PointSpec};
use isac_ee::Error;

fn cfg_with(pairs: &[(&str, &str)]) -> SystemConfig {
    let mut raw = scenario::default_raw();
    raw.insert("M".into(), "4".into());
    raw.insert("N_rx".into(), "4".into());
    for (k, v) in pairs {
        raw.insert(k.to_string(), v.to_string());
    }
    make_config(&raw).unwrap()
}

fn ee_c(s: &BeamformerSolution) -> f64 {
    s.achieved["ee_c"]
}

fn assert_lambda_monotone(s: &BeamformerSolution) {
    for pair in s.trace.windows(2) {
        assert!(pair[1].lambda >= pair[0].lambda - 1e-9, "{} then {}", pair[0].lambda, pair[1].lambda);
    }
}

#[test]
fn eec_point_is_monotone_feasible_and_converged() {
    let cfg = cfg_with(&[]);
    let opts = AlgorithmOptions::default();
    for seed in 0..4 {
        let ch = draw_channels_seeded(&cfg, seed);
        let s = solvers::solve_eec_point(&cfg, &ch, &opts).unwrap();
        assert_lambda_monotone(&s);
        assert_eq!(s.achieved["converged"], 1.0, "seed {seed}");
        assert!(s.achieved["iterations"] <= 50.0);
        assert!(s.achieved["max_subproblem_kkt"] <= 1e-7);
        assert!(oracle::audit_solution(&s, &cfg, &ch, Target::Point).pass);
        let last = s.trace.last().unwrap();
        assert!((last.lambda - ee_c(&s)).abs() <= 1e-12 * ee_c(&s));
    }
}

#[test]
fn single_user_matches_grid_oracle() {
    let cfg = cfg_with(&[("K", "1"), ("gamma", "-60 dB"), ("rho", "90 deg")]);
    let opts = AlgorithmOptions::default();
    let oc = OracleConfig {
        grid_points: 2000,
        ..Default::default()
    };
    for seed in 0..3 {
        let ch = draw_channels_seeded(&cfg, seed);
        let s = solvers::solve_eec_point(&cfg, &ch, &opts).unwrap();
        let g = oracle::grid_search_ee(&cfg, &ch, &oc).unwrap();
        let rel = (ee_c(&s) - g.ee).abs() / g.ee;
        assert!(rel <= 5e-3, "seed {seed}: {} vs grid {}", ee_c(&s), g.ee);
    }
}

#[test]
fn restarting_from_the_output_changes_little() {
    let cfg = cfg_with(&[]);
    let ch = draw_channels_seeded(&cfg, 7);
    let s = solvers::solve_eec_point(&cfg, &ch, &AlgorithmOptions::default()).unwrap();
    let again = solvers::solve_eec_point(
        &cfg,
        &ch,
        &AlgorithmOptions {
            init: InitStrategy::Given(s.w.clone()),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(ee_c(&again) >= ee_c(&s) - 1e-9 * ee_c(&s));
    assert!((ee_c(&again) - ee_c(&s)) <= 1e-3 * ee_c(&s));
}

#[test]
fn solves_are_deterministic() {
    let cfg = cfg_with(&[]);
    let ch = draw_channels_seeded(&cfg, 3);
    let a = solvers::solve_eec_point(&cfg, &ch, &AlgorithmOptions::default()).unwrap();
    let b = solvers::solve_eec_point(&cfg, &ch, &AlgorithmOptions::default()).unwrap();
    assert_eq!(a.w, b.w);
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        assert_eq!(x.objective.to_bits(), y.objective.to_bits());
    }
}

#[test]
fn tiny_budget_is_reported_infeasible() {
    let cfg = cfg_with(&[("Pmax", "-40 dBm")]);
    let ch = draw_channels_seeded(&cfg, 0);
    let opts = AlgorithmOptions::default();
    assert!(matches!(solvers::solve_eec_point(&cfg, &ch, &opts), Err(Error::Infeasible(_))));
    assert!(matches!(solvers::baseline_power_min(&cfg, &ch, &opts), Err(Error::Infeasible(_))));
}

#[test]
fn mismatched_channels_are_rejected() {
    let cfg = cfg_with(&[]);
    let other = cfg_with(&[("M", "3"), ("N_rx", "3")]);
    let ch = draw_channels_seeded(&other, 0);
    assert!(matches!(
        solvers::solve_eec_point(&cfg, &ch, &AlgorithmOptions::default()),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn ees_point_improves_and_respects_constraints() {
    let cfg = cfg_with(&[]);
    let opts = AlgorithmOptions::default();
    for seed in 0..3 {
        let ch = draw_channels_seeded(&cfg, seed);
        let s = solvers::solve_ees_point(&cfg, &ch, &opts).unwrap();
        for pair in s.trace.windows(2) {
            assert!(pair[1].objective >= pair[0].objective * (1.0 - 1e-9));
        }
        assert!(oracle::audit_solution(&s, &cfg, &ch, Target::Point).pass);
        assert!(s.achieved["crb"] <= cfg.rho() * (1.0 + 1e-7));
    }
}

#[test]
fn baselines_bracket_the_ee_solution() {
    let cfg = cfg_with(&[]);
    let opts = AlgorithmOptions::default();
    for seed in 0..3 {
        let ch = draw_channels_seeded(&cfg, seed);
        let eec = solvers::solve_eec_point(&cfg, &ch, &opts).unwrap();
        let ees = solvers::solve_ees_point(&cfg, &ch, &opts).unwrap();
        let ba1 = solvers::baseline_power_min(&cfg, &ch, &opts).unwrap();
        let ba2 = solvers::baseline_sumrate_max(&cfg, &ch, &opts).unwrap();
        for s in [&eec, &ees, &ba1, &ba2] {
            assert!(oracle::audit_solution(s, &cfg, &ch, Target::Point).pass);
        }
        assert!(ee_c(&eec) >= ee_c(&ba2) - 1e-6, "seed {seed}");
        for s in [&eec, &ees, &ba2] {
            assert!(ba1.achieved["p_total"] <= s.achieved["p_total"] + 1e-6);
        }
        assert!(ba2.achieved["sum_rate"] >= eec.achieved["sum_rate"] * (1.0 - 1e-4));
    }
}

#[test]
fn tradeoff_at_zero_matches_the_ee_solver() {
    let cfg = cfg_with(&[("gamma", "-60 dB"), ("rho", "90 deg")]);
    let opts = AlgorithmOptions::default();
    let ch = draw_channels_seeded(&cfg, 1);
    let eec = solvers::solve_eec_point(&cfg, &ch, &opts).unwrap();
    let p0 = solvers::solve_pareto_single(&cfg, &ch, 0.0, &opts).unwrap();
    let rel = (ee_c(&p0) - ee_c(&eec)).abs() / ee_c(&eec);
    assert!(rel <= 1e-4, "{} vs {}", ee_c(&p0), ee_c(&eec));
}

#[test]
fn tradeoff_curve_is_non_increasing() {
    let cfg = cfg_with(&[]);
    let opts = AlgorithmOptions::default();
    let ch = draw_channels_seeded(&cfg, 2);
    let spec = PointSpec {
        sinr: false,
        crb: false,
        ee_s_min: None,
    };
    let top = solvers::solve_ees_point_with(&cfg, &ch, &spec, &opts).unwrap();
    let emax = top.achieved["ee_s"];
    let mut grid: Vec<f64> = (0..5).map(|i| emax * i as f64 / 4.0).collect();
    grid.push(emax * 1.5);
    let pts = solvers::solve_pareto_point(&cfg, &ch, &grid, &opts).unwrap();
    let vals: Vec<f64> = pts[..5].iter().map(|p| p.ee_c().unwrap()).collect();
    for pair in vals.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-6), "{vals:?}");
    }
    for p in &pts[..5] {
        let s = p.solution.as_ref().unwrap();
        assert!(s.achieved["ee_s"] >= p.threshold * (1.0 - 1e-6));
    }
    assert!(pts[5].solution.is_none() && pts[5].error.is_some());
}

#[test]
fn tradeoff_grid_must_be_sorted() {
    let cfg = cfg_with(&[]);
    let ch = draw_channels_seeded(&cfg, 0);
    let r = solvers::solve_pareto_point(&cfg, &ch, &[2.0, 1.0], &AlgorithmOptions::default());
    assert!(matches!(r, Err(Error::InvalidConfig(_))));
}

#[test]
fn extended_solvers_respect_the_trace_bound() {
    let cfg = cfg_with(&[]);
    let opts = AlgorithmOptions::default();
    for seed in 0..3 {
        let ch = draw_channels_seeded(&cfg, seed);
        let c = solvers::solve_eec_extended(&cfg, &ch, &opts).unwrap();
        assert_lambda_monotone(&c);
        let s = solvers::solve_ees_extended(&cfg, &ch, &opts).unwrap();
        for sol in [&c, &s] {
            assert!(sol.rprobe.is_some());
            assert!(sol.achieved["crb"] <= cfg.crb_ext + 1e-7);
            assert!(sol.achieved["recovery_numerator_delta"] <= 1e-8);
            assert!(sol.achieved["recovery_covariance_delta"] <= 1e-8);
            assert!(sol.achieved["recovery_eig_ratio"] <= 1e-6);
            let rep = oracle::audit_with(sol, &cfg, &ch, &AuditChecks::all(Target::Extended), 1e-6);
            assert!(rep.pass, "{:?}", rep.items);
        }
        assert!(ee_c(&c) >= ee_c(&s) - 1e-6);
        assert!(s.achieved["ee_s"] >= c.achieved["ee_s"] - 1e-6 * s.achieved["ee_s"]);
    }
}

#[test]
fn extended_with_unreachable_sinr_is_infeasible() {
    let cfg = cfg_with(&[("gamma", "80 dB")]);
    let ch = draw_channels_seeded(&cfg, 0);
    let opts = AlgorithmOptions::default();
    assert!(matches!(solvers::solve_eec_extended(&cfg, &ch, &opts), Err(Error::Infeasible(_))));
    assert!(matches!(solvers::solve_ees_extended(&cfg, &ch, &opts), Err(Error::Infeasible(_))));
}

#[test]
fn sensing_efficiency_grows_with_budget_when_unconstrained() {
    let opts = AlgorithmOptions::default();
    let mut prev = 0.0;
    for pmax in ["20 dBm", "25 dBm", "30 dBm"] {
        let cfg = cfg_with(&[("Pmax", pmax), ("gamma", "-60 dB"), ("rho", "90 deg")]);
        let ch = draw_channels_seeded(&cfg, 4);
        let s = solvers::solve_ees_point(&cfg, &ch, &opts).unwrap();
        let v = s.achieved["ee_s"];
        assert!(v >= prev * (1.0 - 1e-6), "{pmax}: {v} < {prev}");
        prev = v;
    }
}
