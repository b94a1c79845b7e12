use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Index of a scalar decision variable inside a [`ConeProblem`](super::ConeProblem).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

/// Sparse affine function `constant + Σ coef·x[var]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        Self {
            terms: vec![(v.0, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        Self {
            terms: vec![(v.0, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: Var, coef: f64) {
        if coef != 0.0 {
            self.terms.push((v.0, coef));
        }
    }

    /// `self += coef * other`
    pub fn add_scaled(&mut self, other: &LinExpr, coef: f64) {
        if coef == 0.0 {
            return;
        }
        self.constant += coef * other.constant;
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, c * coef)));
    }

    /// Merges duplicate variable indices and drops exact zeros.
    pub fn compact(&mut self) {
        if self.terms.len() < 2 {
            self.terms.retain(|&(_, c)| c != 0.0);
            return;
        }
        self.terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
    }

    pub fn compacted(mut self) -> Self {
        self.compact();
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::var(v)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl AddAssign<LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, -1.0);
    }
}

impl SubAssign<LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: LinExpr) {
        self.add_scaled(&rhs, -1.0);
    }
}

impl AddAssign<f64> for LinExpr {
    fn add_assign(&mut self, rhs: f64) {
        self.constant += rhs;
    }
}

impl SubAssign<f64> for LinExpr {
    fn sub_assign(&mut self, rhs: f64) {
        self.constant -= rhs;
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += rhs;
        self
    }
}

impl Add<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: &LinExpr) -> LinExpr {
        self += rhs;
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: f64) -> LinExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self -= rhs;
        self
    }
}

impl Sub<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: &LinExpr) -> LinExpr {
        self -= rhs;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: f64) -> LinExpr {
        self.constant -= rhs;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        self.constant *= rhs;
        for t in &mut self.terms {
            t.1 *= rhs;
        }
        self
    }
}

impl Mul<f64> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.clone() * rhs
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl std::iter::Sum for LinExpr {
    fn sum<I: Iterator<Item = LinExpr>>(iter: I) -> Self {
        iter.fold(LinExpr::zero(), |acc, e| acc + e)
    }
}
