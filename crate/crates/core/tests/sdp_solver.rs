mod common;

use isac_ee::sdp::*;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn tight() -> SolveOptions {
    SolveOptions { tol_feas: 1e-10, tol_gap: 1e-10, ..SolveOptions::default() }
}

fn rand_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn rand_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

fn block_inner(blk: &PsdBlock, m: &DMatrix<f64>) -> LinExpr {
    let mut e = LinExpr::zero();
    for i in 0..blk.dim {
        for j in i..blk.dim {
            let c = if i == j { m[(i, i)] } else { m[(i, j)] + m[(j, i)] };
            e.add_term(blk.entry(i, j), c);
        }
    }
    e
}

#[test]
fn analytic_trace_bound() {
    for dim in 1..=4 {
        let mut p = ConeProblem::new();
        let x = p.add_psd_block(dim);
        let tr: LinExpr = (0..dim).map(|i| LinExpr::var(x.entry(i, i))).sum();
        p.add_le(tr.clone(), LinExpr::constant(1.0));
        p.set_objective(tr);
        let r = solve(&p, &tight());
        assert!(r.is_optimal(), "{:?}", r.status);
        assert!((r.objective - 1.0).abs() <= 1e-8, "{}", r.objective);
    }
}

#[test]
fn analytic_two_by_two_schur() {
    let mut p = ConeProblem::new();
    let t = p.add_free();
    let mut l = Lmi::new(2);
    l.add(0, 0, t.into());
    l.add(1, 1, t.into());
    l.add(0, 1, LinExpr::constant(1.0));
    p.add_lmi(l);
    p.set_objective(-LinExpr::var(t));
    let r = solve(&p, &tight());
    assert!(r.is_optimal());
    assert!((r.x[t.0] - 1.0).abs() <= 1e-8);
    assert!((r.objective + 1.0).abs() <= 1e-8);
}

#[test]
fn analytic_max_eigenvalue_complex() {
    // max tr(Q W) s.t. tr(W) = 1, W ⪰ 0 (Hermitian) equals λ_max(Q)
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2usize, 3, 4] {
        let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let mut p = ConeProblem::new();
        let w = p.add_hermitian(n);
        p.add_hermitian_lmi(n, |i, j| w.entry(i, j));
        p.add_eq(w.trace() - 1.0);
        p.set_objective(w.trace_with(&q));
        let r = solve(&p, &tight());
        assert!(r.is_optimal());
        let lmax = q.clone().symmetric_eigenvalues().max();
        assert!((r.objective - lmax).abs() <= 1e-8 * (1.0 + lmax.abs()), "{} vs {}", r.objective, lmax);
        // solution is rank one along the top eigenvector
        let wv = w.value(&r.x);
        let ev = wv.symmetric_eigenvalues();
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(ev[1] <= 1e-6 * ev[0]);
    }
}

#[test]
fn lp_as_diagonal_sdp_matches_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let n = rng.random_range(2..6);
        let m = rng.random_range(2..6);
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let (opt, _) = common::simplex_max(&a, &b, &c).unwrap();

        let mut p = ConeProblem::new();
        let x = p.add_free_vec(n);
        let mut l = Lmi::new(n + m);
        for j in 0..n {
            l.add(j, j, x[j].into());
        }
        for i in 0..m {
            let mut e = LinExpr::constant(b[i]);
            for j in 0..n {
                e.add_term(x[j], -a[i][j]);
            }
            l.add(n + i, n + i, e);
        }
        p.add_lmi(l);
        let mut obj = LinExpr::zero();
        for j in 0..n {
            obj.add_term(x[j], c[j]);
        }
        p.set_objective(obj);
        let r = solve(&p, &opts());
        assert!(r.is_optimal());
        assert!((r.objective - opt).abs() <= 1e-6, "{} vs {}", r.objective, opt);
    }
}

/// Random primal-dual pair: min <C,X> s.t. <A_i,X> = b_i, X ⪰ 0
/// and max bᵀy s.t. C − Σ y_i A_i ⪰ 0.
fn random_pair(seed: u64, n: usize, m: usize) -> (ConeProblem, ConeProblem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amats: Vec<DMatrix<f64>> = (0..m).map(|_| rand_sym(&mut rng, n)).collect();
    let x0 = rand_pd(&mut rng, n);
    let b: Vec<f64> = amats.iter().map(|a| a.dot(&x0)).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut cm = rand_pd(&mut rng, n);
    for (a, y) in amats.iter().zip(&y0) {
        cm += a * *y;
    }

    let mut primal = ConeProblem::new();
    let blk = primal.add_psd_block(n);
    for (a, bi) in amats.iter().zip(&b) {
        primal.add_eq(block_inner(&blk, a) - *bi);
    }
    primal.set_objective(-block_inner(&blk, &cm));

    let mut dual = ConeProblem::new();
    let y = dual.add_free_vec(m);
    let mut l = Lmi::new(n);
    for i in 0..n {
        for j in i..n {
            let mut e = LinExpr::constant(cm[(i, j)]);
            for (k, a) in amats.iter().enumerate() {
                e.add_term(y[k], -a[(i, j)]);
            }
            l.add(i, j, e);
        }
    }
    dual.add_lmi(l);
    let mut obj = LinExpr::zero();
    for k in 0..m {
        obj.add_term(y[k], b[k]);
    }
    dual.set_objective(obj);
    (primal, dual)
}

#[test]
fn primal_and_dual_forms_agree() {
    for seed in 0..6 {
        let (primal, dual) = random_pair(seed, 4, 3);
        let rp = solve(&primal, &opts());
        let rd = solve(&dual, &opts());
        assert!(rp.is_optimal() && rd.is_optimal(), "{:?} {:?}", rp.status, rd.status);
        // primal is a maximization of −<C,X>
        assert!((-rp.objective - rd.objective).abs() <= 1e-6 * (1.0 + rd.objective.abs()),
            "{} vs {}", -rp.objective, rd.objective);
    }
}

#[test]
fn optimal_reports_satisfy_kkt_and_weak_duality() {
    for seed in 10..16 {
        let (_, dual) = random_pair(seed, 5, 4);
        let r = solve(&dual, &opts());
        assert!(r.is_optimal());
        assert!(r.kkt.max() <= 1e-7, "{:?}", r.kkt);
        for h in &r.history {
            assert!(h.complementarity >= 0.0);
        }
        assert!(r.objective <= r.dual_objective + 1e-9 * (1.0 + r.objective.abs()));
        // dual multiplier of the LMI is PSD
        let z = &r.lmi_duals[0];
        assert!(z.clone().symmetric_eigenvalues().min() >= -1e-9);
    }
}

#[test]
fn deterministic() {
    let (primal, _) = random_pair(3, 4, 3);
    let a = solve(&primal, &opts());
    let b = solve(&primal, &opts());
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
}

#[test]
fn infeasible_lmi_certified() {
    // X ⪰ 0 with X_00 ≤ −1
    let mut p = ConeProblem::new();
    let blk = p.add_psd_block(2);
    p.add_ge(LinExpr::term(blk.entry(0, 0), -1.0) - 1.0);
    p.set_objective(LinExpr::var(blk.entry(1, 1)) * -1.0);
    let r = solve(&p, &opts());
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn inconsistent_equalities_infeasible() {
    let mut p = ConeProblem::new();
    let x = p.add_free();
    p.add_eq(LinExpr::var(x) - 1.0);
    p.add_eq(LinExpr::var(x) - 2.0);
    p.add_ge(LinExpr::var(x));
    let r = solve(&p, &opts());
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn max_iterations_reported() {
    let (primal, _) = random_pair(1, 4, 3);
    let o = SolveOptions { max_iter: 2, ..opts() };
    let r = solve(&primal, &o);
    assert_eq!(r.status, SolveStatus::MaxIterations);
}

#[test]
fn embedding_examples() {
    let i2 = DMatrix::<C64>::identity(2, 2);
    assert_eq!(embed_hermitian(&i2).unwrap(), DMatrix::<f64>::identity(4, 4));
    let h = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(0.0, 0.0)]);
    let e = embed_hermitian(&h).unwrap();
    let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let bad = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
    assert!(embed_hermitian(&bad).is_err());
}

#[test]
fn embedding_of_random_psd_is_psd_with_double_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(1..6);
        let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = &g * g.adjoint();
        let e = embed_hermitian(&h).unwrap();
        assert!(e.clone().symmetric_eigenvalues().min() >= -1e-10);
        assert!((e.trace() - 2.0 * h.trace().re).abs() < 1e-10);
    }
}

#[test]
fn random_pairs_of_varied_size_all_converge() {
    for seed in 0..40u64 {
        let n = 2 + (seed as usize % 7);
        let m = 1 + (seed as usize % 5);
        let (primal, dual) = random_pair(seed, n, m);
        let rp = solve(&primal, &opts());
        let rd = solve(&dual, &opts());
        assert!(rp.is_optimal() && rd.is_optimal(), "seed {seed}: {:?} {:?}", rp.status, rd.status);
        assert!(rp.kkt.max() <= 1e-7 && rd.kkt.max() <= 1e-7);
        assert!((-rp.objective - rd.objective).abs() <= 1e-6 * (1.0 + rd.objective.abs()));
    }
}
