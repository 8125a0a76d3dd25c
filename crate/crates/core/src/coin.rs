//! Coin operators and canonical coin states.

use num_complex::Complex64;

use crate::{Error, Result};

const UNITARITY_TOL: f64 = 1e-12;
const STATE_NORM_TOL: f64 = 1e-9;
/// Moduli closer than this count as a tie when picking the phase reference.
const TIE_TOL: f64 = 1e-10;

/// A mixing 2x2 unitary coin `[[e, -f], [f*, e*]]` acting on `(L, R)` columns.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoinOperator {
    e: Complex64,
    f: Complex64,
}

impl CoinOperator {
    /// Builds the coin from its two free entries. Rejects non-unitary and
    /// non-mixing (`e = 0` or `f = 0`) parameters.
    pub fn new(e: Complex64, f: Complex64) -> Result<Self> {
        let norm = e.norm_sqr() + f.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > UNITARITY_TOL {
            return Err(Error::NonUnitaryCoin { norm });
        }
        if e.norm_sqr() <= UNITARITY_TOL || f.norm_sqr() <= UNITARITY_TOL {
            return Err(Error::NonMixingCoin);
        }
        Ok(CoinOperator { e, f })
    }

    /// The Hadamard coin `(1/sqrt 2) [[1, -1], [1, 1]]`.
    pub fn hadamard() -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        CoinOperator {
            e: Complex64::new(s, 0.0),
            f: Complex64::new(s, 0.0),
        }
    }

    /// Real rotation coin with `e = cos(theta)`, `f = sin(theta)`.
    pub fn from_angle(theta: f64) -> Result<Self> {
        Self::new(
            Complex64::new(libm::cos(theta), 0.0),
            Complex64::new(libm::sin(theta), 0.0),
        )
    }

    pub fn e(&self) -> Complex64 {
        self.e
    }

    pub fn f(&self) -> Complex64 {
        self.f
    }

    /// Row-major matrix in the `(L, R)` basis.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.e, -self.f], [self.f.conj(), self.e.conj()]]
    }

    #[inline]
    pub fn apply(&self, l: Complex64, r: Complex64) -> (Complex64, Complex64) {
        (self.e * l - self.f * r, self.f.conj() * l + self.e.conj() * r)
    }

    #[inline]
    pub fn apply_inverse(&self, l: Complex64, r: Complex64) -> (Complex64, Complex64) {
        (self.e.conj() * l + self.f * r, -self.f.conj() * l + self.e * r)
    }

    /// Probability mass that any coin state sends to `L` or `R` after one
    /// measured block of `w` steps: the two ballistic extremes `-w` and `+w`
    /// alone carry `|e|^(2(w-1))`.
    pub fn guaranteed_lr_mass(&self, w: usize) -> f64 {
        if w == 0 {
            return 1.0;
        }
        libm::pow(self.e.norm_sqr(), (w - 1) as f64)
    }

    /// Whether all four matrix entries have equal modulus.
    pub fn is_unbiased(&self) -> bool {
        (self.e.norm_sqr() - 0.5).abs() <= UNITARITY_TOL
    }
}

/// A normalized coin vector `l|L> + r|R>` in canonical phase: the component
/// of larger modulus (ties go to `l`) is real and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoinState {
    l: Complex64,
    r: Complex64,
}

impl CoinState {
    pub const L: CoinState = CoinState {
        l: Complex64 { re: 1.0, im: 0.0 },
        r: Complex64 { re: 0.0, im: 0.0 },
    };
    pub const R: CoinState = CoinState {
        l: Complex64 { re: 0.0, im: 0.0 },
        r: Complex64 { re: 1.0, im: 0.0 },
    };

    /// Accepts an already normalized vector and brings it to canonical phase.
    pub fn new(l: Complex64, r: Complex64) -> Result<Self> {
        let norm = l.norm_sqr() + r.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::UnnormalizedState { norm });
        }
        Ok(Self::canonicalize(l, r))
    }

    /// Normalizes and canonicalizes an arbitrary nonzero vector.
    pub fn from_unnormalized(l: Complex64, r: Complex64) -> Option<Self> {
        let norm = libm::sqrt(l.norm_sqr() + r.norm_sqr());
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        Some(Self::canonicalize(l / norm, r / norm))
    }

    /// `(L + R)/sqrt 2`.
    pub fn symmetric() -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        CoinState {
            l: Complex64::new(s, 0.0),
            r: Complex64::new(s, 0.0),
        }
    }

    /// Point on the Bloch sphere: `cos(theta/2)|L> + e^{i phi} sin(theta/2)|R>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
        Self::canonicalize(Complex64::new(c, 0.0), Complex64::from_polar(s, phi))
    }

    fn canonicalize(l: Complex64, r: Complex64) -> Self {
        let (ml, mr) = (l.norm(), r.norm());
        let reference = if ml + TIE_TOL >= mr { l } else { r };
        let m = reference.norm();
        if m == 0.0 {
            return CoinState { l, r };
        }
        let phase = reference.conj() / m;
        let (mut l, mut r) = (l * phase, r * phase);
        // the reference component is real by construction
        if ml + TIE_TOL >= mr {
            l = Complex64::new(l.re.max(0.0), 0.0);
        } else {
            r = Complex64::new(r.re.max(0.0), 0.0);
        }
        CoinState { l, r }
    }

    pub fn l(&self) -> Complex64 {
        self.l
    }

    pub fn r(&self) -> Complex64 {
        self.r
    }

    /// Spin-flip partner `r*|L> - l*|R>`, whose shift distribution is the
    /// mirror image of this state's.
    pub fn mirror(&self) -> Self {
        Self::canonicalize(self.r.conj(), -self.l.conj())
    }

    /// Euclidean distance between the canonical vectors.
    pub fn distance(&self, other: &CoinState) -> f64 {
        libm::sqrt((self.l - other.l).norm_sqr() + (self.r - other.r).norm_sqr())
    }

    /// True for `|L>` or `|R>` up to phase.
    pub fn is_basis(&self, tol: f64) -> bool {
        (self.l.norm() - 1.0).abs() <= tol || (self.r.norm() - 1.0).abs() <= tol
    }

    pub(crate) fn coords(&self) -> [f64; 4] {
        [self.l.re, self.l.im, self.r.re, self.r.im]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hadamard_matrix_matches_convention() {
        let m = CoinOperator::hadamard().matrix();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m[0][0].re, s);
        assert_abs_diff_eq!(m[0][1].re, -s);
        assert_abs_diff_eq!(m[1][0].re, s);
        assert_abs_diff_eq!(m[1][1].re, s);
    }

    #[test]
    fn rejects_invalid_coins() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(CoinOperator::new(one, zero), Err(Error::NonMixingCoin));
        assert!(matches!(CoinOperator::new(one, one), Err(Error::NonUnitaryCoin { .. })));
        assert_eq!(CoinOperator::from_angle(0.0), Err(Error::NonMixingCoin));
    }

    #[test]
    fn inverse_undoes_apply() {
        let c = CoinOperator::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        let (l, r) = (Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.9));
        let (a, b) = c.apply(l, r);
        let (x, y) = c.apply_inverse(a, b);
        assert_abs_diff_eq!((x - l).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((y - r).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn canonical_phase() {
        let i = Complex64::new(0.0, 1.0);
        let s = CoinState::new(i * 0.6, -0.8 * i).unwrap();
        assert_eq!(s.r(), Complex64::new(0.8, 0.0));
        assert_abs_diff_eq!(s.l().re, -0.6, epsilon = 1e-15);
        // tie goes to l
        let t = CoinState::from_unnormalized(-i, i).unwrap();
        assert_abs_diff_eq!(t.l().re, core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.r().re, -core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn rejects_unnormalized_state() {
        assert!(CoinState::new(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)).is_err());
        assert!(CoinState::from_unnormalized(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).is_none());
    }

    #[test]
    fn mirror_of_l_is_r() {
        assert!(CoinState::L.mirror().distance(&CoinState::R) < 1e-15);
        assert!(CoinState::R.mirror().distance(&CoinState::L) < 1e-15);
        // (-L+R)/sqrt2 mirrors to (L+R)/sqrt2
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let a = CoinState::new(Complex64::new(-s, 0.0), Complex64::new(s, 0.0)).unwrap();
        assert!(a.mirror().distance(&CoinState::symmetric()) < 1e-15);
    }

    #[test]
    fn guaranteed_mass_hadamard() {
        let h = CoinOperator::hadamard();
        for w in 1..10 {
            assert_abs_diff_eq!(h.guaranteed_lr_mass(w), libm::pow(2.0, 1.0 - w as f64), epsilon = 1e-15);
        }
    }
}
