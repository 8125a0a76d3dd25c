//! Tanh-sinh (double exponential) quadrature on a finite interval.
//!
//! The integrand receives the abscissa together with its distances to both
//! endpoints, computed without cancellation, so integrands with logarithmic
//! or inverse-square-root endpoint singularities can be evaluated at nodes
//! that sit closer to an endpoint than `f64` can resolve in `x` itself.

use crate::{Error, Result};

const V_MAX: f64 = 4.5;
const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 12;

/// `(x, x - a, b - x)` for one node.
pub(crate) type Node = (f64, f64, f64);

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, doubling the
/// node density until two successive estimates agree.
pub(crate) fn tanh_sinh<F: Fn(Node) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::invalid("quadrature interval must have b > a"));
    }
    let half = 0.5 * (b - a);
    let term = |v: f64| -> f64 {
        let u = core::f64::consts::FRAC_PI_2 * libm::sinh(v);
        let e = libm::exp(-2.0 * u.abs());
        let weight = core::f64::consts::FRAC_PI_2 * libm::cosh(v) * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if weight == 0.0 {
            return 0.0;
        }
        let near = half * 2.0 * e / (1.0 + e);
        let far = half * 2.0 / (1.0 + e);
        let node = if u >= 0.0 {
            (b - near, far, near)
        } else {
            (a + near, near, far)
        };
        let value = f(node);
        if value == 0.0 {
            0.0
        } else {
            weight * value
        }
    };

    // level 0: h = 1, all integer nodes
    let n0 = V_MAX as i64;
    let mut sum: f64 = (-n0..=n0).map(|k| term(k as f64)).sum();
    let mut estimate = sum;
    let mut residual = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let h = libm::ldexp(1.0, -(level as i32));
        let count = (V_MAX / h) as i64;
        let mut k = 1;
        while k <= count {
            let v = k as f64 * h;
            sum += term(v) + term(-v);
            k += 2;
        }
        let next = h * sum;
        residual = (next - estimate).abs() * half;
        estimate = next;
        if level >= MIN_LEVEL && residual <= tol {
            return Ok(half * estimate);
        }
    }
    Err(Error::QuadratureNonConvergence { residual })
}
