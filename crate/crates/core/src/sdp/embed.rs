use nalgebra::{Complex, DMatrix};

use crate::error::Error;

/// Largest deviation from Hermitian symmetry, `max |H_ij − conj(H_ji)|`.
pub fn hermitian_defect(h: &DMatrix<Complex<f64>>) -> f64 {
    let n = h.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    d
}

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]` of a Hermitian matrix.
///
/// `H ⪰ 0` iff the embedding is PSD; every eigenvalue of `H` appears twice.
pub fn embed_hermitian(h: &DMatrix<Complex<f64>>) -> Result<DMatrix<f64>, Error> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = hermitian_defect(h);
    if !(defect <= 1e-10) {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    Ok(out)
}
