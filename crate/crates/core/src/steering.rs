//! Half-wavelength uniform linear array responses.

use nalgebra::DVector;

use crate::C64;

/// Array response `a[m] = exp(−jπ m cos θ)`, `m = 0..n`.
pub fn steering(theta: f64, n: usize) -> DVector<C64> {
    let c = theta.cos();
    DVector::from_fn(n, |m, _| C64::from_polar(1.0, -std::f64::consts::PI * m as f64 * c))
}

/// Derivative of [`steering`] with respect to θ: `jπ m sin θ · a[m]`.
pub fn steering_derivative(theta: f64, n: usize) -> DVector<C64> {
    let s = theta.sin();
    let a = steering(theta, n);
    DVector::from_fn(n, |m, _| {
        C64::new(0.0, std::f64::consts::PI * m as f64 * s) * a[m]
    })
}

/// Transmit/receive responses and the transmit derivative at one angle.
#[derive(Clone, Debug)]
pub struct SteeringPair {
    pub a_t: DVector<C64>,
    pub a_r: DVector<C64>,
    pub da_t: DVector<C64>,
}

impl SteeringPair {
    pub fn new(theta: f64, m: usize, n_rx: usize) -> Self {
        Self {
            a_t: steering(theta, m),
            a_r: steering(theta, n_rx),
            da_t: steering_derivative(theta, m),
        }
    }
}
