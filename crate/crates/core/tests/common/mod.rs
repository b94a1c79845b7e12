#![allow(dead_code)]

/// Dense tableau simplex for `max cᵀx s.t. Ax ≤ b, x ≥ 0` with `b ≥ 0`.
/// Uses Bland's rule; returns `None` when unbounded.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][w - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(col) = (0..w - 1).find(|&j| t[m][j] < -1e-12) else {
            break;
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > 1e-12 {
                let r = t[i][w - 1] / t[i][col];
                if r < best - 1e-15 || (r <= best + 1e-15 && row.map_or(true, |k: usize| basis[i] < basis[k])) {
                    best = r;
                    row = Some(i);
                }
            }
        }
        let row = row?;
        let p = t[row][col];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        for i in 0..=m {
            if i != row {
                let f = t[i][col];
                if f != 0.0 {
                    for j in 0..w {
                        t[i][j] -= f * t[row][j];
                    }
                }
            }
        }
        basis[row] = col;
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][w - 1];
        }
    }
    Some((t[m][w - 1], x))
}
