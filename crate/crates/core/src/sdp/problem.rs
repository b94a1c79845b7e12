use nalgebra::DMatrix;
use nalgebra::Complex;

type Complex64 = Complex<f64>;

use super::expr::{LinExpr, Var};

/// Symmetric matrix of affine expressions required to be positive semidefinite.
///
/// Only the upper triangle (`row <= col`) is stored; absent entries are zero.
#[derive(Clone, Debug, Default)]
pub struct Lmi {
    pub dim: usize,
    pub entries: Vec<(usize, usize, LinExpr)>,
}

impl Lmi {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `expr` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, expr: LinExpr) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if let Some(slot) = self
            .entries
            .iter_mut()
            .find(|(a, b, _)| *a == r && *b == c)
        {
            slot.2 += expr;
        } else {
            self.entries.push((r, c, expr));
        }
    }

    /// Evaluates the matrix at a variable assignment.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, e) in &self.entries {
            let v = e.eval(x);
            m[(*i, *j)] += v;
            if i != j {
                m[(*j, *i)] += v;
            }
        }
        m
    }
}

/// Real symmetric PSD matrix variable stored as its upper triangle.
#[derive(Clone, Copy, Debug)]
pub struct PsdBlock {
    pub dim: usize,
    pub first_var: usize,
}

impl PsdBlock {
    pub fn entry(&self, i: usize, j: usize) -> Var {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        Var(self.first_var + upper_index(self.dim, r, c))
    }

    pub fn num_entries(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| x[self.entry(i, j).0])
    }
}

fn upper_index(n: usize, r: usize, c: usize) -> usize {
    // row-major upper triangle; rows before r hold n + (n-1) + ... entries
    r * n - r * r.saturating_sub(1) / 2 + (c - r)
}

/// Complex affine expression `re + j·im`.
#[derive(Clone, Debug, Default)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            re: LinExpr::constant(c.re),
            im: LinExpr::constant(c.im),
        }
    }

    pub fn real(re: LinExpr) -> Self {
        Self {
            re,
            im: LinExpr::zero(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.clone() * -1.0,
        }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, other: &CExpr, c: Complex64) {
        // (a + jb)(x + jy) = (ax - by) + j(ay + bx)
        self.re.add_scaled(&other.re, c.re);
        self.re.add_scaled(&other.im, -c.im);
        self.im.add_scaled(&other.im, c.re);
        self.im.add_scaled(&other.re, c.im);
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = CExpr::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn compacted(self) -> Self {
        Self {
            re: self.re.compacted(),
            im: self.im.compacted(),
        }
    }
}

/// Hermitian matrix whose real and imaginary parts are free scalar variables.
#[derive(Clone, Debug)]
pub struct HermitianVar {
    pub n: usize,
    re: Vec<Var>,
    im: Vec<Option<Var>>,
}

impl HermitianVar {
    fn slot(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.n + c
    }

    pub fn re(&self, i: usize, j: usize) -> Var {
        self.re[self.slot(i, j)]
    }

    /// Imaginary part variable of the upper-triangle entry, `None` on the diagonal.
    pub fn im_upper(&self, i: usize, j: usize) -> Option<Var> {
        self.im[self.slot(i, j)]
    }

    pub fn entry(&self, i: usize, j: usize) -> CExpr {
        let re = LinExpr::var(self.re(i, j));
        let im = match self.im_upper(i, j) {
            None => LinExpr::zero(),
            Some(v) if i <= j => LinExpr::var(v),
            Some(v) => LinExpr::term(v, -1.0),
        };
        CExpr { re, im }
    }

    pub fn trace(&self) -> LinExpr {
        (0..self.n).map(|i| LinExpr::var(self.re(i, i))).sum()
    }

    /// `tr(Q W)` for a Hermitian constant `Q`; real-valued.
    pub fn trace_with(&self, q: &DMatrix<Complex64>) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.n {
            e.add_term(self.re(i, i), q[(i, i)].re);
            for j in (i + 1)..self.n {
                let qij = q[(i, j)];
                // Q_ij W_ji + Q_ji W_ij = 2 Re(Q_ij conj(W_ij))
                e.add_term(self.re(i, j), 2.0 * qij.re);
                if let Some(v) = self.im_upper(i, j) {
                    e.add_term(v, 2.0 * qij.im);
                }
            }
        }
        e
    }

    /// `xᴴ W y`.
    pub fn sandwich(&self, x: &[Complex64], y: &[Complex64]) -> CExpr {
        let mut out = CExpr::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let c = x[i].conj() * y[j];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                out.add_scaled(&self.entry(i, j), c);
            }
        }
        out.compacted()
    }

    /// `xᴴ Wᵀ y`.
    pub fn sandwich_transpose(&self, x: &[Complex64], y: &[Complex64]) -> CExpr {
        let mut out = CExpr::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let c = x[i].conj() * y[j];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                out.add_scaled(&self.entry(j, i), c);
            }
        }
        out.compacted()
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval(x))
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.re.iter().copied().chain(self.im.iter().flatten().copied())
    }
}

/// Complex vector with free real and imaginary parts.
#[derive(Clone, Debug)]
pub struct ComplexVecVar {
    pub re: Vec<Var>,
    pub im: Vec<Var>,
}

impl ComplexVecVar {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn entry(&self, i: usize) -> CExpr {
        CExpr {
            re: LinExpr::var(self.re[i]),
            im: LinExpr::var(self.im[i]),
        }
    }

    /// `cᴴ w` for a constant vector `c`.
    pub fn inner_from(&self, c: &[Complex64]) -> CExpr {
        let mut out = CExpr::zero();
        for (i, ci) in c.iter().enumerate() {
            out.add_scaled(&self.entry(i), ci.conj());
        }
        out
    }

    /// `Re(cᴴ w)`.
    pub fn re_inner(&self, c: &[Complex64]) -> LinExpr {
        self.inner_from(c).re
    }

    pub fn value(&self, x: &[f64]) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| Complex64::new(x[r.0], x[i.0]))
            .collect()
    }
}

/// Linear-objective conic program over free scalars and real symmetric PSD blocks.
///
/// The objective is maximized. Equalities read `expr == 0`, inequalities
/// `expr >= 0`, and every [`Lmi`] must be positive semidefinite. Each PSD
/// block variable carries its own implicit `X ⪰ 0` constraint.
#[derive(Clone, Debug, Default)]
pub struct ConeProblem {
    num_vars: usize,
    pub free_vars: usize,
    pub psd_blocks: Vec<PsdBlock>,
    pub objective: LinExpr,
    pub eq_constraints: Vec<LinExpr>,
    pub ineq_constraints: Vec<LinExpr>,
    pub lmi_constraints: Vec<Lmi>,
}

impl ConeProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_free(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        self.free_vars += 1;
        v
    }

    pub fn add_free_vec(&mut self, n: usize) -> Vec<Var> {
        (0..n).map(|_| self.add_free()).collect()
    }

    pub fn add_psd_block(&mut self, dim: usize) -> PsdBlock {
        assert!(dim >= 1, "PSD block dimension must be at least 1");
        let blk = PsdBlock {
            dim,
            first_var: self.num_vars,
        };
        self.num_vars += blk.num_entries();
        self.psd_blocks.push(blk);
        blk
    }

    pub fn add_hermitian(&mut self, n: usize) -> HermitianVar {
        let mut re = vec![Var(usize::MAX); n * n];
        let mut im = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                re[i * n + j] = self.add_free();
                if i != j {
                    im[i * n + j] = Some(self.add_free());
                }
            }
        }
        HermitianVar { n, re, im }
    }

    pub fn add_complex_vec(&mut self, n: usize) -> ComplexVecVar {
        let re = self.add_free_vec(n);
        let im = self.add_free_vec(n);
        ComplexVecVar { re, im }
    }

    pub fn add_eq(&mut self, expr: LinExpr) {
        self.eq_constraints.push(expr.compacted());
    }

    /// `expr >= 0`
    pub fn add_ge(&mut self, expr: LinExpr) {
        self.ineq_constraints.push(expr.compacted());
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_ge(rhs - lhs);
    }

    pub fn add_lmi(&mut self, mut lmi: Lmi) {
        for e in &mut lmi.entries {
            e.2.compact();
        }
        self.lmi_constraints.push(lmi);
    }

    /// Adds a Hermitian LMI `H ⪰ 0` through the real embedding
    /// `[[Re H, -Im H], [Im H, Re H]] ⪰ 0`. `entry(i, j)` is queried for `i <= j`.
    pub fn add_hermitian_lmi<F>(&mut self, n: usize, mut entry: F)
    where
        F: FnMut(usize, usize) -> CExpr,
    {
        let mut lmi = Lmi::new(2 * n);
        for i in 0..n {
            for j in i..n {
                let h = entry(i, j);
                let re = h.re.compacted();
                let im = h.im.compacted();
                lmi.add(i, j, re.clone());
                lmi.add(i + n, j + n, re);
                if i != j {
                    // lower-left block holds Im H: (j + n, i) = Im H_ji = -Im H_ij
                    lmi.add(i, j + n, im.clone() * -1.0);
                    lmi.add(j, i + n, im);
                }
            }
        }
        self.add_lmi(lmi);
    }

    pub fn set_objective(&mut self, obj: LinExpr) {
        self.objective = obj.compacted();
    }

    /// Plain-text dump for cross-checking with other solvers.
    ///
    /// ```text
    /// vars <n>
    /// psd <first_var> <dim>          one line per PSD block
    /// obj <expr>                     maximized
    /// eq <expr>                      expr == 0
    /// ge <expr>                      expr >= 0
    /// lmi <dim>                      followed by entry lines
    /// e <i> <j> <expr>               upper triangle, i <= j
    /// ```
    ///
    /// An `<expr>` is `<constant> [<var>:<coef>]*`. Floats use Rust's
    /// shortest round-trip formatting.
    pub fn dump(&self) -> String {
        fn expr(e: &LinExpr) -> String {
            let mut s = format!("{:?}", e.constant);
            for (v, c) in &e.terms {
                s.push_str(&format!(" {v}:{c:?}"));
            }
            s
        }
        let mut out = format!("vars {}\n", self.num_vars);
        for b in &self.psd_blocks {
            out.push_str(&format!("psd {} {}\n", b.first_var, b.dim));
        }
        out.push_str(&format!("obj {}\n", expr(&self.objective)));
        for e in &self.eq_constraints {
            out.push_str(&format!("eq {}\n", expr(e)));
        }
        for e in &self.ineq_constraints {
            out.push_str(&format!("ge {}\n", expr(e)));
        }
        for l in &self.lmi_constraints {
            out.push_str(&format!("lmi {}\n", l.dim));
            for (i, j, e) in &l.entries {
                out.push_str(&format!("e {i} {j} {}\n", expr(e)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_block_entries_are_distinct() {
        let mut p = ConeProblem::new();
        p.add_free();
        let b = p.add_psd_block(3);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..3 {
            for j in i..3 {
                assert_eq!(b.entry(i, j), b.entry(j, i));
                seen.insert(b.entry(i, j).0);
            }
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(*seen.iter().min().unwrap(), 1);
        assert_eq!(*seen.iter().max().unwrap(), 6);
        assert_eq!(p.num_vars(), 7);
    }

    #[test]
    fn hermitian_trace_with_matches_direct() {
        let mut p = ConeProblem::new();
        let w = p.add_hermitian(2);
        let mut x = vec![0.0; p.num_vars()];
        // W = [[2, 1+j],[1-j, 3]]
        x[w.re(0, 0).0] = 2.0;
        x[w.re(1, 1).0] = 3.0;
        x[w.re(0, 1).0] = 1.0;
        x[w.im_upper(0, 1).unwrap().0] = 1.0;
        let q = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, -2.0),
                Complex64::new(0.5, 2.0),
                Complex64::new(4.0, 0.0),
            ],
        );
        let wm = w.value(&x);
        let direct = (&q * &wm).trace();
        let got = w.trace_with(&q).eval(&x);
        assert!((direct.re - got).abs() < 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }
}
