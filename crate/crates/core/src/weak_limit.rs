//! Large-`w` asymptotics of the coin-mixed Hadamard walk.
//!
//! For large `w` the rescaled position of the Hadamard walk started from
//! the completely mixed coin has density
//! `p(x, w) = 1 / (pi w sqrt(1 - 2x^2/w^2) (1 - x^2/w^2))` on
//! `|x| < w/sqrt 2`. Its differential entropy is `C + log2 w` with a
//! universal constant `C`, which approximates the coin-ignoring bound at
//! large waiting times.
//!
//! The entropy integral is taken in the variable `x = (w/sqrt 2) sin t`,
//! where the density becomes `1 / (pi sqrt 2 (1 - sin^2 t / 2))` per unit
//! `t`. Only a logarithmic endpoint singularity of `log p` remains, which
//! tanh-sinh quadrature integrates to full precision.

use core::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use core::sync::atomic::{AtomicU64, Ordering};

use crate::quadrature::tanh_sinh;
use crate::{Error, Result};

/// Absolute quadrature tolerance in bits.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// The limiting density at waiting time `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLimitDensity {
    w: f64,
}

impl WeakLimitDensity {
    pub fn new(w: f64) -> Result<Self> {
        if !(w >= 1.0) || !w.is_finite() {
            return Err(Error::invalid("waiting time must be a finite value >= 1"));
        }
        Ok(WeakLimitDensity { w })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `w / sqrt 2`; the support is the open interval `(-half_width, half_width)`.
    pub fn half_width(&self) -> f64 {
        self.w / SQRT_2
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let half_width = self.half_width();
        if !(x.abs() < half_width) {
            return Err(Error::OutsideSupport { x, half_width });
        }
        let r = x / self.w;
        Ok(1.0 / (PI * self.w * libm::sqrt(1.0 - 2.0 * r * r) * (1.0 - r * r)))
    }

    /// Integral of the density over its support, evaluated directly in `x`.
    pub fn total_mass(&self) -> Result<f64> {
        let a = self.half_width();
        let w = self.w;
        // 1 - 2x^2/w^2 = (2/w^2)(a - x)(a + x), written in endpoint distances
        tanh_sinh(
            |(x, dl, dr)| {
                let r = x / w;
                1.0 / (PI * w * libm::sqrt(2.0 * dl * dr) / w * (1.0 - r * r))
            },
            -a,
            a,
            QUADRATURE_TOL,
        )
    }

    /// Differential entropy `-int p log2 p dx` in bits.
    pub fn entropy(&self) -> Result<f64> {
        let log_scale = libm::log2(PI * self.w);
        // integrand is even in t; integrate over [0, pi/2] and double
        let half = tanh_sinh(
            |(t, _, dr)| {
                let s = libm::sin(t);
                let q = 1.0 - 0.5 * s * s;
                let cos_t = libm::sin(dr);
                let rho = 1.0 / (PI * SQRT_2 * q);
                rho * (log_scale + libm::log2(cos_t) + libm::log2(q))
            },
            0.0,
            FRAC_PI_2,
            0.5 * QUADRATURE_TOL,
        )?;
        Ok(2.0 * half)
    }
}

/// `p(x, w)`; errors at or beyond `|x| = w / sqrt 2`.
pub fn density(x: f64, w: f64) -> Result<f64> {
    WeakLimitDensity::new(w)?.evaluate(x)
}

/// Differential entropy of the limiting density, in bits per iteration.
pub fn entropy_integral(w: f64) -> Result<f64> {
    WeakLimitDensity::new(w)?.entropy()
}

// f64 bits of the constant; 0 means not computed yet (the constant is
// negative, so its bit pattern is never 0)
static CONSTANT_BITS: AtomicU64 = AtomicU64::new(0);

/// `entropy_integral(w) - log2 w`, computed once and cached.
pub fn weak_limit_constant() -> f64 {
    let bits = CONSTANT_BITS.load(Ordering::Relaxed);
    if bits != 0 {
        return f64::from_bits(bits);
    }
    let c = entropy_integral(1.0).expect("entropy integral at w = 1 converges");
    CONSTANT_BITS.store(c.to_bits(), Ordering::Relaxed);
    c
}

/// `C + log2 w`.
pub fn closed_form(w: f64) -> Result<f64> {
    if !(w >= 1.0) || !w.is_finite() {
        return Err(Error::invalid("waiting time must be a finite value >= 1"));
    }
    Ok(weak_limit_constant() + libm::log2(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn density_at_origin_and_symmetry() {
        for w in [1.0, 7.0, 300.0] {
            assert_abs_diff_eq!(density(0.0, w).unwrap(), 1.0 / (PI * w), epsilon = 1e-15);
            for x in [0.1, 0.5, 0.7] {
                let x = x * w;
                assert_eq!(density(x, w).unwrap(), density(-x, w).unwrap());
            }
        }
    }

    #[test]
    fn outside_support_rejected() {
        let a = 10.0 / SQRT_2;
        assert!(matches!(density(a, 10.0), Err(Error::OutsideSupport { .. })));
        assert!(matches!(density(-a - 1.0, 10.0), Err(Error::OutsideSupport { .. })));
        assert!(density(0.0, 0.5).is_err());
    }

    #[test]
    fn normalized() {
        for w in [1.0, 10.0, 100.0, 1000.0] {
            let m = WeakLimitDensity::new(w).unwrap().total_mass().unwrap();
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn scale_law() {
        let c = weak_limit_constant();
        for w in [1.0, 10.0, 100.0, 1000.0] {
            assert_abs_diff_eq!(entropy_integral(w).unwrap() - libm::log2(w), c, epsilon = 1e-6);
        }
        let d = entropy_integral(200.0).unwrap() - entropy_integral(100.0).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn constant_matches_midpoint_rule() {
        // crude independent evaluation in t with the midpoint rule
        let n = 2_000_000;
        let h = PI / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = -FRAC_PI_2 + (i as f64 + 0.5) * h;
            let s = libm::sin(t);
            let q = 1.0 - 0.5 * s * s;
            let rho = 1.0 / (PI * SQRT_2 * q);
            acc += rho * (libm::log2(PI) + libm::log2(libm::cos(t)) + libm::log2(q)) * h;
        }
        assert_abs_diff_eq!(weak_limit_constant(), acc, epsilon = 1e-5);
    }

    #[test]
    fn closed_form_power_of_two() {
        assert_abs_diff_eq!(
            closed_form(1024.0).unwrap(),
            weak_limit_constant() + 10.0,
            epsilon = 1e-12
        );
        assert_eq!(closed_form(1.0).unwrap(), weak_limit_constant());
    }
}
