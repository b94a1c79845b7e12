use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::expr::LinExpr;
use super::problem::{ConeProblem, Lmi};

/// Solver tolerances and limits.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative primal and dual residual tolerance.
    pub tol_feas: f64,
    /// Relative duality gap tolerance.
    pub tol_gap: f64,
    /// Tolerance used for infeasibility certificates.
    pub tol_infeas: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Number of Ruiz equilibration passes (0 disables scaling).
    pub equilibrate_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-7,
            tol_gap: 1e-8,
            tol_infeas: 1e-8,
            max_iter: 100,
            step_fraction: 0.98,
            equilibrate_iters: 15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative KKT residuals of the original (unscaled) problem.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kkt {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Kkt {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Per-iteration trace entry.
#[derive(Clone, Copy, Debug)]
pub struct IterInfo {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub kkt: Kkt,
    /// Complementarity `<s, z>` of the embedded iterate.
    pub complementarity: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal objective (maximization sense).
    pub objective: f64,
    pub dual_objective: f64,
    /// Values of all variables of the problem.
    pub x: Vec<f64>,
    /// Multipliers of the scalar inequalities, in insertion order.
    pub ineq_duals: Vec<f64>,
    /// Multipliers of the explicit LMIs, in insertion order.
    pub lmi_duals: Vec<DMatrix<f64>>,
    /// Multipliers of the implicit `X ⪰ 0` constraints of PSD block variables.
    pub block_duals: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub kkt: Kkt,
    pub history: Vec<IterInfo>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }
}

// ---------------------------------------------------------------------------
// Standard form: minimize cᵀx  s.t.  A x + s = b,  s ∈ R₊ᵐ × S₊^{d₁} × ...

#[derive(Clone, Debug)]
struct PsdData {
    dim: usize,
    b: DMatrix<f64>,
    /// Per variable: upper-triangle entries `(r, c, value)` of A_i.
    cols: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

#[derive(Clone, Debug)]
struct StdForm {
    n: usize,
    c: DVector<f64>,
    lp_rows: Vec<Vec<(usize, f64)>>,
    b_lp: DVector<f64>,
    blocks: Vec<PsdData>,
}

#[derive(Clone, Debug)]
struct ConeVec {
    lp: DVector<f64>,
    psd: Vec<DMatrix<f64>>,
}

impl ConeVec {
    fn zeros_like(f: &StdForm) -> Self {
        Self {
            lp: DVector::zeros(f.lp_rows.len()),
            psd: f
                .blocks
                .iter()
                .map(|b| DMatrix::zeros(b.dim, b.dim))
                .collect(),
        }
    }

    fn identity_like(f: &StdForm) -> Self {
        Self {
            lp: DVector::from_element(f.lp_rows.len(), 1.0),
            psd: f.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim)).collect(),
        }
    }

    fn dot(&self, o: &ConeVec) -> f64 {
        self.lp.dot(&o.lp)
            + self
                .psd
                .iter()
                .zip(&o.psd)
                .map(|(a, b)| a.dot(b))
                .sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &ConeVec) {
        self.lp.axpy(a, &o.lp, 1.0);
        for (x, y) in self.psd.iter_mut().zip(&o.psd) {
            *x += y * a;
        }
    }

    fn scaled(&self, a: f64) -> ConeVec {
        ConeVec {
            lp: &self.lp * a,
            psd: self.psd.iter().map(|m| m * a).collect(),
        }
    }

    fn sub(&self, o: &ConeVec) -> ConeVec {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl StdForm {
    fn nu(&self) -> f64 {
        (self.lp_rows.len() + self.blocks.iter().map(|b| b.dim).sum::<usize>()) as f64
    }

    fn mul_a(&self, x: &DVector<f64>) -> ConeVec {
        let lp = DVector::from_iterator(
            self.lp_rows.len(),
            self.lp_rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
        );
        let psd = self
            .blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.dim, blk.dim);
                for (var, ents) in &blk.cols {
                    let xv = x[*var];
                    if xv == 0.0 {
                        continue;
                    }
                    for &(r, c, v) in ents {
                        m[(r, c)] += v * xv;
                        if r != c {
                            m[(c, r)] += v * xv;
                        }
                    }
                }
                m
            })
            .collect();
        ConeVec { lp, psd }
    }

    fn mul_at(&self, z: &ConeVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (row, &zr) in self.lp_rows.iter().zip(z.lp.iter()) {
            for &(j, v) in row {
                out[j] += v * zr;
            }
        }
        for (blk, zm) in self.blocks.iter().zip(&z.psd) {
            for (var, ents) in &blk.cols {
                out[*var] += sym_inner(ents, zm);
            }
        }
        out
    }

    fn b_vec(&self) -> ConeVec {
        ConeVec {
            lp: self.b_lp.clone(),
            psd: self.blocks.iter().map(|b| b.b.clone()).collect(),
        }
    }
}

/// `<A, M>` for symmetric sparse `A` given by its upper triangle.
fn sym_inner(ents: &[(usize, usize, f64)], m: &DMatrix<f64>) -> f64 {
    ents.iter()
        .map(|&(r, c, v)| {
            if r == c {
                v * m[(r, c)]
            } else {
                v * (m[(r, c)] + m[(c, r)])
            }
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Conversion from the modelling layer.

enum VarMap {
    Identity,
    Affine { x0: DVector<f64>, basis: DMatrix<f64> },
}

impl VarMap {
    fn dim(&self, n: usize) -> usize {
        match self {
            VarMap::Identity => n,
            VarMap::Affine { basis, .. } => basis.ncols(),
        }
    }

    /// Rewrites an expression in terms of the reduced variables.
    fn map(&self, e: &LinExpr) -> (f64, Vec<(usize, f64)>) {
        match self {
            VarMap::Identity => {
                let e = e.clone().compacted();
                (e.constant, e.terms)
            }
            VarMap::Affine { x0, basis } => {
                let mut k = e.constant;
                let mut dense = vec![0.0; basis.ncols()];
                for &(i, c) in &e.terms {
                    k += c * x0[i];
                    for (j, d) in dense.iter_mut().enumerate() {
                        *d += c * basis[(i, j)];
                    }
                }
                let terms = dense
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0)
                    .collect();
                (k, terms)
            }
        }
    }

    fn lift(&self, xi: &DVector<f64>) -> DVector<f64> {
        match self {
            VarMap::Identity => xi.clone(),
            VarMap::Affine { x0, basis } => x0 + basis * xi,
        }
    }
}

fn eliminate_equalities(p: &ConeProblem) -> Result<VarMap, ()> {
    if p.eq_constraints.is_empty() {
        return Ok(VarMap::Identity);
    }
    let n = p.num_vars();
    let m = p.eq_constraints.len();
    let mut e = DMatrix::zeros(m, n);
    let mut rhs = DVector::zeros(m);
    for (r, eq) in p.eq_constraints.iter().enumerate() {
        for &(j, v) in &eq.terms {
            e[(r, j)] += v;
        }
        rhs[r] = -eq.constant;
    }
    // SVD of Eᵀ (n × m) exposes range and null space of E.
    let svd = e.transpose().svd(true, false);
    let u = svd.u.expect("svd u");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-12 * (n.max(m) as f64);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    // Pseudo-inverse solution via normal equations on the range basis.
    let x0 = {
        let pinv = svd_pinv(&e, tol);
        &pinv * &rhs
    };
    let resid = (&e * &x0 - &rhs).norm();
    if resid > 1e-9 * (1.0 + rhs.norm()) {
        return Err(());
    }
    // Null space: complement of range(Eᵀ) in Rⁿ.
    let range = u.columns(0, rank).into_owned();
    let basis = null_complement(&range, n);
    Ok(VarMap::Affine { x0, basis })
}

fn svd_pinv(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the orthonormal columns `q`.
fn null_complement(q: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut all: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..n {
        if all.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for a in &all {
                let d = a.dot(&v);
                v.axpy(-d, a, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            v /= nv;
            all.push(v.clone());
            basis.push(v);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

struct Conversion {
    form: StdForm,
    map: VarMap,
    obj_const: f64,
    n_ineq: usize,
    n_lmi: usize,
}

fn convert(p: &ConeProblem) -> Result<Conversion, ()> {
    let map = eliminate_equalities(p)?;
    let n = map.dim(p.num_vars());

    let (obj_const, obj_terms) = map.map(&p.objective);
    let mut c = DVector::zeros(n);
    for (j, v) in obj_terms {
        c[j] -= v;
    }

    let mut lp_rows = Vec::with_capacity(p.ineq_constraints.len());
    let mut b_lp = Vec::with_capacity(p.ineq_constraints.len());
    for g in &p.ineq_constraints {
        let (k, terms) = map.map(g);
        lp_rows.push(terms.into_iter().map(|(j, v)| (j, -v)).collect());
        b_lp.push(k);
    }

    let mut lmis: Vec<&Lmi> = p.lmi_constraints.iter().collect();
    let block_lmis: Vec<Lmi> = p
        .psd_blocks
        .iter()
        .map(|blk| {
            let mut l = Lmi::new(blk.dim);
            for i in 0..blk.dim {
                for j in i..blk.dim {
                    l.add(i, j, LinExpr::var(blk.entry(i, j)));
                }
            }
            l
        })
        .collect();
    lmis.extend(block_lmis.iter());

    let blocks = lmis
        .iter()
        .map(|lmi| {
            let mut b = DMatrix::zeros(lmi.dim, lmi.dim);
            let mut cols: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for (r, cc, e) in &lmi.entries {
                let (k, terms) = map.map(e);
                b[(*r, *cc)] += k;
                if r != cc {
                    b[(*cc, *r)] += k;
                }
                for (j, v) in terms {
                    cols.entry(j).or_default().push((*r, *cc, -v));
                }
            }
            PsdData {
                dim: lmi.dim,
                b,
                cols: cols.into_iter().collect(),
            }
        })
        .collect();

    Ok(Conversion {
        form: StdForm {
            n,
            c,
            b_lp: DVector::from_vec(b_lp),
            lp_rows,
            blocks,
        },
        map,
        obj_const,
        n_ineq: p.ineq_constraints.len(),
        n_lmi: p.lmi_constraints.len(),
    })
}

// ---------------------------------------------------------------------------
// Equilibration: x = D x̃, rows/blocks scaled by E, cost scaled by k.

struct Scaling {
    d: DVector<f64>,
    e_lp: DVector<f64>,
    e_psd: Vec<f64>,
    k: f64,
}

fn equilibrate(f: &mut StdForm, iters: usize) -> Scaling {
    let n = f.n;
    let mut d = DVector::from_element(n, 1.0);
    let mut e_lp = DVector::from_element(f.lp_rows.len(), 1.0);
    let mut e_psd = vec![1.0; f.blocks.len()];
    for _ in 0..iters {
        let mut colmax = vec![0.0f64; n];
        let mut rowmax_lp = vec![0.0f64; f.lp_rows.len()];
        let mut rowmax_psd = vec![0.0f64; f.blocks.len()];
        for (r, row) in f.lp_rows.iter().enumerate() {
            for &(j, v) in row {
                colmax[j] = colmax[j].max(v.abs());
                rowmax_lp[r] = rowmax_lp[r].max(v.abs());
            }
        }
        for (bi, blk) in f.blocks.iter().enumerate() {
            for (j, ents) in &blk.cols {
                for &(_, _, v) in ents {
                    colmax[*j] = colmax[*j].max(v.abs());
                    rowmax_psd[bi] = rowmax_psd[bi].max(v.abs());
                }
            }
        }
        let fix = |m: f64| if m > 0.0 { (1.0 / m.sqrt()).clamp(1e-4, 1e4) } else { 1.0 };
        let dc: Vec<f64> = colmax.iter().map(|&m| fix(m)).collect();
        let er: Vec<f64> = rowmax_lp.iter().map(|&m| fix(m)).collect();
        let eb: Vec<f64> = rowmax_psd.iter().map(|&m| fix(m)).collect();
        for (r, row) in f.lp_rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut() {
                *v *= er[r] * dc[*j];
            }
        }
        for (bi, blk) in f.blocks.iter_mut().enumerate() {
            for (j, ents) in blk.cols.iter_mut() {
                for e in ents.iter_mut() {
                    e.2 *= eb[bi] * dc[*j];
                }
            }
        }
        for j in 0..n {
            d[j] *= dc[j];
        }
        for r in 0..er.len() {
            e_lp[r] *= er[r];
        }
        for b in 0..eb.len() {
            e_psd[b] *= eb[b];
        }
    }
    for j in 0..n {
        f.c[j] *= d[j];
    }
    for r in 0..f.lp_rows.len() {
        f.b_lp[r] *= e_lp[r];
    }
    for (bi, blk) in f.blocks.iter_mut().enumerate() {
        blk.b *= e_psd[bi];
    }
    let cmax = f.c.amax();
    let k = if cmax > 0.0 { (1.0 / cmax).clamp(1e-6, 1e6) } else { 1.0 };
    f.c *= k;
    Scaling { d, e_lp, e_psd, k }
}

// ---------------------------------------------------------------------------
// Nesterov–Todd scaling.

struct PsdScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    /// W_nt⁻¹ = R⁻ᵀR⁻¹
    winv: DMatrix<f64>,
    lambda: DVector<f64>,
}

struct NtScaling {
    /// sqrt(s/z) for the orthant.
    w_lp: DVector<f64>,
    lambda_lp: DVector<f64>,
    psd: Vec<PsdScaling>,
}

fn lower_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
}

fn nt_scaling(s: &ConeVec, z: &ConeVec) -> Option<NtScaling> {
    let w_lp = s.lp.zip_map(&z.lp, |a, b| (a / b).sqrt());
    let lambda_lp = s.lp.zip_map(&z.lp, |a, b| (a * b).sqrt());
    let mut psd = Vec::with_capacity(s.psd.len());
    for (sm, zm) in s.psd.iter().zip(&z.psd) {
        let ls = Cholesky::new(sm.clone())?.l();
        let lz = Cholesky::new(zm.clone())?.l();
        let m = lz.transpose() * &ls;
        let svd = m.svd(true, true);
        let vt = svd.v_t?;
        let lam = svd.singular_values;
        if lam.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return None;
        }
        let v = vt.transpose();
        let d = lam.len();
        let mut r = &ls * &v;
        let mut vt_lsinv = &vt * lower_inverse(&ls)?;
        for k in 0..d {
            let sq = lam[k].sqrt();
            r.column_mut(k).scale_mut(1.0 / sq);
            vt_lsinv.row_mut(k).scale_mut(sq);
        }
        let rinv = vt_lsinv;
        let mut winv = rinv.transpose() * &rinv;
        symmetrize(&mut winv);
        psd.push(PsdScaling {
            r,
            rinv,
            winv,
            lambda: lam,
        });
    }
    Some(NtScaling {
        w_lp,
        lambda_lp,
        psd,
    })
}

impl NtScaling {
    /// H⁻¹(q) where H = WᵀW.
    fn h_inv(&self, q: &ConeVec) -> ConeVec {
        ConeVec {
            lp: q.lp.zip_map(&self.w_lp, |a, w| a / (w * w)),
            psd: q
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| {
                    let mut t = &sc.winv * m * &sc.winv;
                    symmetrize(&mut t);
                    t
                })
                .collect(),
        }
    }

    fn h(&self, q: &ConeVec) -> ConeVec {
        ConeVec {
            lp: q.lp.zip_map(&self.w_lp, |a, w| a * w * w),
            psd: q
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| {
                    let wnt = &sc.r * sc.r.transpose();
                    let mut t = &wnt * m * &wnt;
                    symmetrize(&mut t);
                    t
                })
                .collect(),
        }
    }

    /// Wᵀ(u) for u in scaled coordinates.
    fn wt(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.component_mul(&self.w_lp),
            psd: u
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| {
                    let mut t = &sc.r * m * sc.r.transpose();
                    symmetrize(&mut t);
                    t
                })
                .collect(),
        }
    }

    /// W(z) = Rᵀ z R
    fn w(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: z.lp.component_mul(&self.w_lp),
            psd: z
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| sc.r.transpose() * m * &sc.r)
                .collect(),
        }
    }

    /// W⁻ᵀ(s) = R⁻¹ s R⁻ᵀ
    fn w_inv_t(&self, s: &ConeVec) -> ConeVec {
        ConeVec {
            lp: s.lp.component_div(&self.w_lp),
            psd: s
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| &sc.rinv * m * sc.rinv.transpose())
                .collect(),
        }
    }

    fn lambda_sq(&self) -> ConeVec {
        ConeVec {
            lp: self.lambda_lp.component_mul(&self.lambda_lp),
            psd: self
                .psd
                .iter()
                .map(|sc| DMatrix::from_diagonal(&sc.lambda.component_mul(&sc.lambda)))
                .collect(),
        }
    }

    /// Solves λ ∘ u = v.
    fn lambda_div(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.component_div(&self.lambda_lp),
            psd: v
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, sc)| {
                    let l = &sc.lambda;
                    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (l[i] + l[j]))
                })
                .collect(),
        }
    }
}

fn jordan(a: &ConeVec, b: &ConeVec) -> ConeVec {
    ConeVec {
        lp: a.lp.component_mul(&b.lp),
        psd: a
            .psd
            .iter()
            .zip(&b.psd)
            .map(|(x, y)| (x * y + y * x) * 0.5)
            .collect(),
    }
}

/// Largest step in (0, ∞) keeping `λ + α·d` in the cone, with `d` in scaled coordinates.
fn max_step_scaled(sc: &NtScaling, d: &ConeVec) -> f64 {
    let mut a = f64::INFINITY;
    for (dv, lv) in d.lp.iter().zip(sc.lambda_lp.iter()) {
        if *dv < 0.0 {
            a = a.min(-lv / dv);
        }
    }
    for (dm, ps) in d.psd.iter().zip(&sc.psd) {
        let n = dm.nrows();
        let mut t = DMatrix::from_fn(n, n, |i, j| {
            dm[(i, j)] / (ps.lambda[i] * ps.lambda[j]).sqrt()
        });
        symmetrize(&mut t);
        let ev = SymmetricEigen::new(t).eigenvalues;
        let emin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if emin < 0.0 {
            a = a.min(-1.0 / emin);
        }
    }
    a
}

// ---------------------------------------------------------------------------
// Normal equations.

struct Normal {
    n: usize,
    mat: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

fn assemble_normal(f: &StdForm, sc: &NtScaling) -> DMatrix<f64> {
    let n = f.n;
    let mut nm = DMatrix::zeros(n, n);
    for (r, row) in f.lp_rows.iter().enumerate() {
        let h = 1.0 / (sc.w_lp[r] * sc.w_lp[r]);
        for &(i, vi) in row {
            for &(j, vj) in row {
                nm[(i, j)] += h * vi * vj;
            }
        }
    }
    for (blk, ps) in f.blocks.iter().zip(&sc.psd) {
        let v = &ps.winv;
        let d = blk.dim;
        for (kk, (k, ek)) in blk.cols.iter().enumerate() {
            let mut t = DMatrix::zeros(d, d);
            for &(r, c, val) in ek {
                let vr = v.column(r);
                let vc = v.column(c);
                if r == c {
                    t.ger(val, &vr, &vr, 1.0);
                } else {
                    t.ger(val, &vr, &vc, 1.0);
                    t.ger(val, &vc, &vr, 1.0);
                }
            }
            for (i, ei) in blk.cols.iter().take(kk + 1) {
                let val = sym_inner(ei, &t);
                nm[(*i, *k)] += val;
                if i != k {
                    nm[(*k, *i)] += val;
                }
            }
        }
    }
    nm
}

impl Normal {
    fn factor(mat: DMatrix<f64>) -> Option<Normal> {
        let n = mat.nrows();
        let scale = (0..n).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = 1e-14 * scale.max(1.0);
        for _ in 0..8 {
            let mut m = mat.clone();
            for i in 0..n {
                m[(i, i)] += reg;
            }
            if let Some(chol) = Cholesky::new(m) {
                return Some(Normal { n, mat, chol });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        for _ in 0..2 {
            let r = rhs - &self.mat * &x;
            x += self.chol.solve(&r);
        }
        debug_assert_eq!(x.len(), self.n);
        x
    }
}

/// Solves `Aᵀz = p`, `A x − H z = q`.
fn solve_reduced(
    f: &StdForm,
    sc: &NtScaling,
    nm: &Normal,
    p: &DVector<f64>,
    q: &ConeVec,
) -> (DVector<f64>, ConeVec) {
    let once = |p: &DVector<f64>, q: &ConeVec| {
        let hq = sc.h_inv(q);
        let rhs = p + f.mul_at(&hq);
        let x = nm.solve(&rhs);
        let ax = f.mul_a(&x);
        let z = sc.h_inv(&ax.sub(q));
        (x, z)
    };
    let (mut x, mut z) = once(p, q);
    // refinement on the reduced system itself
    for _ in 0..2 {
        let r1 = p - f.mul_at(&z);
        let mut r2 = q.clone();
        r2.axpy(-1.0, &f.mul_a(&x));
        r2.axpy(1.0, &sc.h(&z));
        let scale = p.norm() + q.norm() + 1e-300;
        if r1.norm() + r2.norm() <= 1e-15 * scale {
            break;
        }
        let (dx, dz) = once(&r1, &r2);
        x += dx;
        z.axpy(1.0, &dz);
    }
    (x, z)
}

// ---------------------------------------------------------------------------

struct Unscaled<'a> {
    f0: &'a StdForm,
    scaling: &'a Scaling,
}

impl Unscaled<'_> {
    fn x(&self, xt: &DVector<f64>, tau: f64) -> DVector<f64> {
        xt.component_mul(&self.scaling.d) / tau
    }

    fn s(&self, st: &ConeVec, tau: f64) -> ConeVec {
        ConeVec {
            lp: st.lp.component_div(&self.scaling.e_lp) / tau,
            psd: st
                .psd
                .iter()
                .zip(&self.scaling.e_psd)
                .map(|(m, e)| m / (e * tau))
                .collect(),
        }
    }

    fn z(&self, zt: &ConeVec, tau: f64) -> ConeVec {
        let k = self.scaling.k;
        ConeVec {
            lp: zt.lp.component_mul(&self.scaling.e_lp) / (k * tau),
            psd: zt
                .psd
                .iter()
                .zip(&self.scaling.e_psd)
                .map(|(m, e)| m * (e / (k * tau)))
                .collect(),
        }
    }

    fn kkt(&self, x: &DVector<f64>, s: &ConeVec, z: &ConeVec) -> (Kkt, f64, f64) {
        let f = self.f0;
        let ax = f.mul_a(x);
        let b = f.b_vec();
        let mut rp = ax.clone();
        rp.axpy(1.0, s);
        rp.axpy(-1.0, &b);
        let rd = f.mul_at(z) + &f.c;
        let pobj = f.c.dot(x);
        let dobj = -b.dot(z);
        let kkt = Kkt {
            primal: rp.norm() / (1.0 + b.norm()),
            dual: rd.norm() / (1.0 + f.c.norm()),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        (kkt, pobj, dobj)
    }
}

/// Solves a [`ConeProblem`] (maximization) with a homogeneous self-dual
/// interior-point method using Nesterov–Todd scaling and Mehrotra
/// predictor-corrector steps.
pub fn solve(problem: &ConeProblem, opts: &SolveOptions) -> SolveReport {
    let conv = match convert(problem) {
        Ok(c) => c,
        Err(()) => {
            return SolveReport {
                status: SolveStatus::Infeasible,
                objective: f64::NAN,
                dual_objective: f64::NAN,
                x: vec![f64::NAN; problem.num_vars()],
                ineq_duals: vec![],
                lmi_duals: vec![],
                block_duals: vec![],
                iterations: 0,
                kkt: Kkt::default(),
                history: vec![],
            }
        }
    };
    let f0 = conv.form.clone();
    let mut f = conv.form;
    let scaling = equilibrate(&mut f, opts.equilibrate_iters);
    let uns = Unscaled {
        f0: &f0,
        scaling: &scaling,
    };
    let n = f.n;
    let nu = f.nu();
    let b = f.b_vec();
    let e = ConeVec::identity_like(&f);

    let finish = |status: SolveStatus,
                  x: &DVector<f64>,
                  s: &ConeVec,
                  z: &ConeVec,
                  tau: f64,
                  iters: usize,
                  history: Vec<IterInfo>| {
        let (xo, zo, kkt, pobj, dobj) = if matches!(status, SolveStatus::Infeasible) {
            // certificate direction, normalized
            let zo = uns.z(z, 1.0);
            let nz = zo.norm().max(1e-300);
            (
                DVector::from_element(n, f64::NAN),
                zo.scaled(1.0 / nz),
                Kkt::default(),
                f64::NAN,
                f64::NAN,
            )
        } else if matches!(status, SolveStatus::Unbounded) {
            let xo = uns.x(x, 1.0);
            let nx = xo.norm().max(1e-300);
            (
                xo / nx,
                ConeVec::zeros_like(&f),
                Kkt::default(),
                f64::INFINITY,
                f64::INFINITY,
            )
        } else {
            let xo = uns.x(x, tau);
            let so = uns.s(s, tau);
            let zo = uns.z(z, tau);
            let (kkt, p, d) = uns.kkt(&xo, &so, &zo);
            (xo, zo, kkt, -p, -d)
        };
        let xfull = conv.map.lift(&xo);
        let mut lmi_duals = zo.psd;
        let block_duals = lmi_duals.split_off(conv.n_lmi);
        debug_assert_eq!(zo.lp.len(), conv.n_ineq);
        SolveReport {
            status,
            objective: pobj + conv.obj_const,
            dual_objective: dobj + conv.obj_const,
            x: xfull.iter().copied().collect(),
            ineq_duals: zo.lp.iter().copied().collect(),
            lmi_duals,
            block_duals,
            iterations: iters,
            kkt,
            history,
        }
    };

    // Degenerate: no cone constraints at all.
    if nu == 0.0 {
        let x = DVector::zeros(n);
        let s = ConeVec::zeros_like(&f);
        let status = if f.c.amax() == 0.0 {
            SolveStatus::Optimal
        } else {
            SolveStatus::Unbounded
        };
        let mut xs = x.clone();
        if status == SolveStatus::Unbounded {
            xs = -f.c.clone();
        }
        return finish(status, &xs, &s, &s, 1.0, 0, vec![]);
    }

    // Initial point: least-squares solves with H = I, then shift into the cone.
    let identity_sc = NtScaling {
        w_lp: DVector::from_element(f.lp_rows.len(), 1.0),
        lambda_lp: DVector::from_element(f.lp_rows.len(), 1.0),
        psd: f
            .blocks
            .iter()
            .map(|bk| PsdScaling {
                r: DMatrix::identity(bk.dim, bk.dim),
                rinv: DMatrix::identity(bk.dim, bk.dim),
                winv: DMatrix::identity(bk.dim, bk.dim),
                lambda: DVector::from_element(bk.dim, 1.0),
            })
            .collect(),
    };
    let Some(nm0) = Normal::factor(assemble_normal(&f, &identity_sc)) else {
        let z = ConeVec::zeros_like(&f);
        return finish(SolveStatus::NumericalFailure, &DVector::zeros(n), &z, &z, 1.0, 0, vec![]);
    };
    // primal: min ½‖s‖² s.t. Ax + s = b  → Aᵀ(Ax − b) = 0
    let (mut x, _) = solve_reduced(&f, &identity_sc, &nm0, &DVector::zeros(n), &b);
    let mut s = b.sub(&f.mul_a(&x));
    // dual: min ½‖z‖² s.t. Aᵀz + c = 0
    let (_, zneg) = solve_reduced(&f, &identity_sc, &nm0, &(-&f.c), &ConeVec::zeros_like(&f));
    let mut z = zneg;
    shift_into_cone(&mut s);
    shift_into_cone(&mut z);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut history = Vec::new();
    let mut stall = 0usize;

    for iter in 0..opts.max_iter {
        // residuals of the embedding
        let r_x = f.mul_at(&z) + &f.c * tau;
        let mut r_z = f.mul_a(&x);
        r_z.axpy(1.0, &s);
        r_z.axpy(-tau, &b);
        let cx = f.c.dot(&x);
        let bz = b.dot(&z);
        let r_tau = cx + bz + kappa;
        let sz = s.dot(&z);
        let mu = (sz + tau * kappa) / (nu + 1.0);

        // convergence check on the original problem
        let xo = uns.x(&x, tau);
        let so = uns.s(&s, tau);
        let zo = uns.z(&z, tau);
        let (kkt, pobj, dobj) = uns.kkt(&xo, &so, &zo);
        let step_prev = history.last().map(|h: &IterInfo| h.step).unwrap_or(1.0);
        history.push(IterInfo {
            primal_objective: -pobj + conv.obj_const,
            dual_objective: -dobj + conv.obj_const,
            kkt,
            complementarity: sz,
            tau,
            kappa,
            step: step_prev,
        });
        if kkt.primal <= opts.tol_feas && kkt.dual <= opts.tol_feas && kkt.gap <= opts.tol_gap {
            return finish(SolveStatus::Optimal, &x, &s, &z, tau, iter, history);
        }
        // infeasibility certificates (scaled problem)
        if bz < 0.0 {
            let atz = f.mul_at(&z).norm();
            if atz <= -opts.tol_infeas * bz && tau < kappa {
                return finish(SolveStatus::Infeasible, &x, &s, &z, tau, iter, history);
            }
        }
        if cx < 0.0 {
            let mut axs = f.mul_a(&x);
            axs.axpy(1.0, &s);
            if axs.norm() <= -opts.tol_infeas * cx && tau < kappa {
                return finish(SolveStatus::Unbounded, &x, &s, &z, tau, iter, history);
            }
        }

        let Some(sc) = nt_scaling(&s, &z) else {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, iter, history);
        };
        let Some(nm) = Normal::factor(assemble_normal(&f, &sc)) else {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, iter, history);
        };
        let (x1, z1) = solve_reduced(&f, &sc, &nm, &(-&f.c), &b);
        let den_base = f.c.dot(&x1) + b.dot(&z1) - kappa / tau;

        let lam_sq = sc.lambda_sq();
        let direction = |eta: f64, ds: &ConeVec, dk: f64| {
            let wlds = sc.wt(&sc.lambda_div(ds));
            let p2 = &r_x * (-eta);
            let mut q2 = r_z.scaled(-eta);
            q2.axpy(-1.0, &wlds);
            let (x2, z2) = solve_reduced(&f, &sc, &nm, &p2, &q2);
            let dtau = (-eta * r_tau - f.c.dot(&x2) - b.dot(&z2) - dk / tau) / den_base;
            let mut dx = x2;
            dx.axpy(dtau, &x1, 1.0);
            let mut dz = z2;
            dz.axpy(dtau, &z1);
            // Δs from the linear equation keeps the primal residual exact
            let mut dsv = r_z.scaled(-eta);
            dsv.axpy(dtau, &b);
            dsv.axpy(-1.0, &f.mul_a(&dx));
            let dkappa = (dk - kappa * dtau) / tau;
            (dx, dsv, dz, dtau, dkappa)
        };
        let step_len = |ds: &ConeVec, dz: &ConeVec, dtau: f64, dkappa: f64| {
            let mut a = max_step_scaled(&sc, &sc.w_inv_t(ds)).min(max_step_scaled(&sc, &sc.w(dz)));
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        // predictor
        let ds_aff = lam_sq.scaled(-1.0);
        let (dx_a, ds_a, dz_a, dtau_a, dkappa_a) = direction(1.0, &ds_aff, -tau * kappa);
        let alpha_a = step_len(&ds_a, &dz_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3).clamp(0.0, 1.0);
        let _ = dx_a;

        // corrector
        let mut ds_c = lam_sq.scaled(-1.0);
        let cross = jordan(&sc.w_inv_t(&ds_a), &sc.w(&dz_a));
        ds_c.axpy(-1.0, &cross);
        ds_c.axpy(sigma * mu, &e);
        let dk_c = -tau * kappa - dtau_a * dkappa_a + sigma * mu;
        let (dx, ds, dz, dtau, dkappa) = direction(1.0 - sigma, &ds_c, dk_c);
        let alpha = (opts.step_fraction * step_len(&ds, &dz, dtau, dkappa)).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, iter, history);
        }

        x.axpy(alpha, &dx, 1.0);
        s.axpy(alpha, &ds);
        z.axpy(alpha, &dz);
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if let Some(h) = history.last_mut() {
            h.step = alpha;
        }
        for m in s.psd.iter_mut().chain(z.psd.iter_mut()) {
            symmetrize(m);
        }

        // keep the embedding well scaled
        let scale = tau + kappa;
        if scale > 1e6 || scale < 1e-6 {
            let k = 1.0 / scale;
            x *= k;
            s = s.scaled(k);
            z = z.scaled(k);
            tau *= k;
            kappa *= k;
        }

        if alpha < 1e-9 {
            stall += 1;
            if stall >= 3 {
                return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, iter + 1, history);
            }
        } else {
            stall = 0;
        }
    }
    finish(SolveStatus::MaxIterations, &x, &s, &z, tau, opts.max_iter, history)
}

fn shift_into_cone(v: &mut ConeVec) {
    let mut minev = v.lp.iter().cloned().fold(f64::INFINITY, f64::min);
    for m in &v.psd {
        let ev = SymmetricEigen::new(m.clone()).eigenvalues;
        minev = minev.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    if !minev.is_finite() {
        return;
    }
    let shift = if minev < 1e-8 { 1.0 - minev } else { 0.0 };
    if shift > 0.0 {
        v.lp.add_scalar_mut(shift);
        for m in v.psd.iter_mut() {
            for i in 0..m.nrows() {
                m[(i, i)] += shift;
            }
        }
    }
}
