//! Dense state-vector engine for 1D coined walks.
//!
//! Amplitudes are stored site-major with the coin index inside
//! (`[site][L, R]`). One step applies the coin at every site and then shifts
//! the `L` component one site left and the `R` component one site right.
//! On a line the window is `2 * radius + 1` sites around the origin and the
//! walk may never put amplitude on the two outermost sites; on a cycle
//! positions are residues mod `M`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::{uniform_f64, CoinOperator, CoinState, Error, Result, PROBABILITY_THRESHOLD};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Lattice {
    /// Sites `-radius..=radius`.
    Line { radius: usize },
    /// Residues mod `m`, `m >= 3`.
    Cycle { m: usize },
}

impl Lattice {
    /// Line large enough for `steps` steps from a localized state.
    pub fn line_for(steps: usize) -> Self {
        Lattice::Line { radius: steps + 1 }
    }

    pub fn cycle(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::invalid("a cycle needs at least 3 vertices"));
        }
        Ok(Lattice::Cycle { m })
    }

    pub fn sites(&self) -> usize {
        match *self {
            Lattice::Line { radius } => 2 * radius + 1,
            Lattice::Cycle { m } => m,
        }
    }

    /// Storage index of a position, or `None` when off the line window.
    pub fn index_of(&self, position: i64) -> Option<usize> {
        match *self {
            Lattice::Line { radius } => {
                let r = radius as i64;
                (-r..=r).contains(&position).then(|| (position + r) as usize)
            }
            Lattice::Cycle { m } => Some(position.rem_euclid(m as i64) as usize),
        }
    }

    pub fn position_of(&self, index: usize) -> i64 {
        match *self {
            Lattice::Line { radius } => index as i64 - radius as i64,
            Lattice::Cycle { .. } => index as i64,
        }
    }

    /// Shift between two measured positions. On a cycle the representative
    /// lies in `(-M/2, M/2]`.
    pub fn shift(&self, from: i64, to: i64) -> i64 {
        match *self {
            Lattice::Line { .. } => to - from,
            Lattice::Cycle { m } => cycle_representative(to - from, m),
        }
    }
}

/// Representative of `delta mod m` in `(-m/2, m/2]`.
pub fn cycle_representative(delta: i64, m: usize) -> i64 {
    let m = m as i64;
    let r = delta.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

/// Complex amplitudes over `(position, coin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    lattice: Lattice,
    amplitudes: Vec<Complex64>,
}

impl WalkState {
    /// `|position, coin>`.
    pub fn localized(lattice: Lattice, position: i64, coin: CoinState) -> Result<Self> {
        if let Lattice::Cycle { m } = lattice {
            if m < 3 {
                return Err(Error::invalid("a cycle needs at least 3 vertices"));
            }
        }
        let idx = lattice
            .index_of(position)
            .ok_or_else(|| Error::invalid("position outside the line window"))?;
        if let Lattice::Line { radius } = lattice {
            if position.unsigned_abs() as usize == radius {
                return Err(Error::BoundaryOverflow { radius });
            }
        }
        let mut amplitudes = vec![ZERO; 2 * lattice.sites()];
        amplitudes[2 * idx] = coin.l();
        amplitudes[2 * idx + 1] = coin.r();
        Ok(WalkState { lattice, amplitudes })
    }

    /// Builds a state from raw site-major amplitudes; the norm is checked.
    pub fn from_amplitudes(lattice: Lattice, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * lattice.sites() {
            return Err(Error::invalid("amplitude vector does not match the lattice"));
        }
        let s = WalkState { lattice, amplitudes };
        let total = s.norm_sqr();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedState { norm: total });
        }
        Ok(s)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `(l, r)` amplitudes at a position; zero off the window.
    pub fn amplitude(&self, position: i64) -> (Complex64, Complex64) {
        match self.lattice.index_of(position) {
            Some(i) => (self.amplitudes[2 * i], self.amplitudes[2 * i + 1]),
            None => (ZERO, ZERO),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born-rule probability of each position, in storage order.
    pub fn position_probabilities(&self) -> Vec<(i64, f64)> {
        self.amplitudes
            .chunks_exact(2)
            .enumerate()
            .map(|(i, a)| (self.lattice.position_of(i), a[0].norm_sqr() + a[1].norm_sqr()))
            .collect()
    }

    /// Unnormalized projection `S_x |psi>` onto one position.
    pub fn project(&self, position: i64) -> WalkState {
        let mut amplitudes = vec![ZERO; self.amplitudes.len()];
        if let Some(i) = self.lattice.index_of(position) {
            amplitudes[2 * i] = self.amplitudes[2 * i];
            amplitudes[2 * i + 1] = self.amplitudes[2 * i + 1];
        }
        WalkState {
            lattice: self.lattice,
            amplitudes,
        }
    }
}

/// One step `U = S (I (x) C)` for a fixed coin and lattice.
#[derive(Debug, Clone, Copy)]
pub struct StepOperator {
    coin: CoinOperator,
    lattice: Lattice,
}

pub fn build_step_operator(coin: CoinOperator, lattice: Lattice) -> StepOperator {
    StepOperator { coin, lattice }
}

impl StepOperator {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn apply(&self, state: &WalkState) -> Result<WalkState> {
        let mut out = vec![ZERO; state.amplitudes.len()];
        self.step_into(&state.amplitudes, &mut out)?;
        Ok(WalkState {
            lattice: state.lattice,
            amplitudes: out,
        })
    }

    /// Exact inverse of [`StepOperator::apply`].
    pub fn apply_inverse(&self, state: &WalkState) -> Result<WalkState> {
        let n = self.lattice.sites();
        let a = &state.amplitudes;
        let mut out = vec![ZERO; a.len()];
        for i in 0..n {
            // undo the shift: L from site i went to i-1, R to i+1
            let l = match self.neighbor(i, -1) {
                Some(j) => a[2 * j],
                None => ZERO,
            };
            let r = match self.neighbor(i, 1) {
                Some(j) => a[2 * j + 1],
                None => ZERO,
            };
            let (l, r) = self.coin.apply_inverse(l, r);
            out[2 * i] = l;
            out[2 * i + 1] = r;
        }
        Ok(WalkState {
            lattice: state.lattice,
            amplitudes: out,
        })
    }

    fn neighbor(&self, i: usize, offset: i64) -> Option<usize> {
        match self.lattice {
            Lattice::Line { .. } => {
                let j = i as i64 + offset;
                (0..self.lattice.sites() as i64).contains(&j).then_some(j as usize)
            }
            Lattice::Cycle { m } => Some((i as i64 + offset).rem_euclid(m as i64) as usize),
        }
    }

    /// One step from `src` into `dst` (fully overwritten).
    pub(crate) fn step_into(&self, src: &[Complex64], dst: &mut [Complex64]) -> Result<()> {
        dst.fill(ZERO);
        let n = self.lattice.sites();
        match self.lattice {
            Lattice::Line { radius } => {
                for i in 0..n {
                    let (l, r) = (src[2 * i], src[2 * i + 1]);
                    if l == ZERO && r == ZERO {
                        continue;
                    }
                    if i == 0 || i == n - 1 {
                        return Err(Error::BoundaryOverflow { radius });
                    }
                    let (l, r) = self.coin.apply(l, r);
                    dst[2 * (i - 1)] = l;
                    dst[2 * (i + 1) + 1] = r;
                }
                if dst[0] != ZERO || dst[1] != ZERO || dst[2 * n - 2] != ZERO || dst[2 * n - 1] != ZERO {
                    return Err(Error::BoundaryOverflow { radius });
                }
            }
            Lattice::Cycle { .. } => {
                for i in 0..n {
                    let (l, r) = self.coin.apply(src[2 * i], src[2 * i + 1]);
                    let left = if i == 0 { n - 1 } else { i - 1 };
                    let right = if i + 1 == n { 0 } else { i + 1 };
                    dst[2 * left] = l;
                    dst[2 * right + 1] = r;
                }
            }
        }
        Ok(())
    }
}

/// `U^steps |state>`.
pub fn evolve(state: &WalkState, coin: CoinOperator, steps: usize) -> Result<WalkState> {
    let op = build_step_operator(coin, state.lattice);
    let mut cur = state.amplitudes.clone();
    let mut next = vec![ZERO; cur.len()];
    for _ in 0..steps {
        op.step_into(&cur, &mut next)?;
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(WalkState {
        lattice: state.lattice,
        amplitudes: cur,
    })
}

/// Where the shifts of a [`ShiftDistribution`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ShiftSupport {
    /// `delta` in `[-w, w]`.
    Line,
    /// Residues mod `m`, reported in `(-m/2, m/2]`.
    Cycle { m: usize },
}

/// Distribution of the shift between consecutive measured positions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftDistribution {
    pub w: usize,
    pub support: ShiftSupport,
    /// `(delta, probability)` in increasing `delta`, zeros omitted.
    pub probabilities: Vec<(i64, f64)>,
}

impl ShiftDistribution {
    pub fn probability(&self, delta: i64) -> f64 {
        self.probabilities
            .iter()
            .find(|(d, _)| *d == delta)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        crate::entropy::entropy_bits(self.probabilities.iter().map(|&(_, p)| p))
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().map(|&(_, p)| p).sum()
    }
}

/// Shift distribution of one measured block together with the collapsed
/// coin state for every outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftProfile {
    pub distribution: ShiftDistribution,
    /// Canonical post-measurement coin, aligned with `distribution.probabilities`.
    pub collapsed: Vec<CoinState>,
}

impl ShiftProfile {
    pub fn collapsed_for(&self, delta: i64) -> Option<CoinState> {
        self.distribution
            .probabilities
            .iter()
            .position(|(d, _)| *d == delta)
            .map(|i| self.collapsed[i])
    }

    pub fn entropy(&self) -> f64 {
        self.distribution.entropy()
    }
}

/// Evolves `|0, alpha>` for `w` steps and reports every shift with
/// probability above [`PROBABILITY_THRESHOLD`] together with its collapsed
/// coin state. On a cycle the walk starts at vertex 0.
pub fn shift_profile(coin: CoinOperator, w: usize, alpha: CoinState, lattice: Lattice) -> Result<ShiftProfile> {
    shift_profile_from(coin, w, alpha, lattice, 0)
}

/// As [`shift_profile`], starting from an arbitrary vertex.
pub fn shift_profile_from(
    coin: CoinOperator,
    w: usize,
    alpha: CoinState,
    lattice: Lattice,
    start: i64,
) -> Result<ShiftProfile> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    let state = evolve(&WalkState::localized(lattice, start, alpha)?, coin, w)?;
    let mut outcomes: Vec<(i64, f64, CoinState)> = Vec::new();
    for (i, a) in state.amplitudes.chunks_exact(2).enumerate() {
        let p = a[0].norm_sqr() + a[1].norm_sqr();
        if p <= PROBABILITY_THRESHOLD {
            continue;
        }
        let delta = lattice.shift(start, lattice.position_of(i));
        // p > 0 so the vector is nonzero
        let c = CoinState::from_unnormalized(a[0], a[1]).expect("nonzero amplitude");
        outcomes.push((delta, p, c));
    }
    outcomes.sort_by_key(|o| o.0);
    let support = match lattice {
        Lattice::Line { .. } => ShiftSupport::Line,
        Lattice::Cycle { m } => ShiftSupport::Cycle { m },
    };
    Ok(ShiftProfile {
        distribution: ShiftDistribution {
            w,
            support,
            probabilities: outcomes.iter().map(|o| (o.0, o.1)).collect(),
        },
        collapsed: outcomes.iter().map(|o| o.2).collect(),
    })
}

/// Shift profile on a line sized automatically for `w` steps.
pub fn line_shift_profile(coin: CoinOperator, w: usize, alpha: CoinState) -> Result<ShiftProfile> {
    shift_profile(coin, w, alpha, Lattice::line_for(w))
}

/// Projective position measurement: samples a position with the Born rule
/// and returns it with the renormalized collapsed state.
pub fn measure_position<R: RngCore + ?Sized>(state: &WalkState, rng: &mut R) -> Result<(i64, WalkState)> {
    let probs: Vec<f64> = state
        .amplitudes
        .chunks_exact(2)
        .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
        .collect();
    let total: f64 = probs.iter().sum();
    if !(total >= 1e-9) {
        return Err(Error::DegenerateState { total });
    }
    let target = uniform_f64(rng) * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        acc += p;
        chosen = Some(i);
        if target < acc {
            break;
        }
    }
    // chosen is Some because total > 0
    let i = chosen.expect("positive total probability");
    let norm = libm::sqrt(probs[i]);
    let mut amplitudes = vec![ZERO; state.amplitudes.len()];
    amplitudes[2 * i] = state.amplitudes[2 * i] / norm;
    amplitudes[2 * i + 1] = state.amplitudes[2 * i + 1] / norm;
    Ok((
        state.lattice.position_of(i),
        WalkState {
            lattice: state.lattice,
            amplitudes,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn assert_amp(s: &WalkState, x: i64, l: f64, r: f64) {
        let (a, b) = s.amplitude(x);
        assert_abs_diff_eq!((a - c(l)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((b - c(r)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_two_steps() {
        let h = CoinOperator::hadamard();
        let s0 = WalkState::localized(Lattice::line_for(2), 0, CoinState::L).unwrap();
        let s = evolve(&s0, h, 2).unwrap();
        assert_amp(&s, -2, 0.5, 0.0);
        assert_amp(&s, 0, -0.5, 0.5);
        assert_amp(&s, 2, 0.0, 0.5);
        assert_amp(&s, -1, 0.0, 0.0);
        assert_amp(&s, 1, 0.0, 0.0);
    }

    #[test]
    fn hadamard_three_steps() {
        let h = CoinOperator::hadamard();
        let s0 = WalkState::localized(Lattice::line_for(3), 0, CoinState::L).unwrap();
        let s = evolve(&s0, h, 3).unwrap();
        let k = 1.0 / libm::sqrt(8.0);
        assert_amp(&s, -3, k, 0.0);
        assert_amp(&s, -1, -2.0 * k, k);
        assert_amp(&s, 1, -k, 0.0);
        assert_amp(&s, 3, 0.0, k);
    }

    #[test]
    fn zero_steps_is_identity() {
        let s0 = WalkState::localized(Lattice::line_for(4), 1, CoinState::symmetric()).unwrap();
        assert_eq!(evolve(&s0, CoinOperator::hadamard(), 0).unwrap(), s0);
    }

    #[test]
    fn inverse_step_restores_state() {
        let h = CoinOperator::from_angle(0.4).unwrap();
        for lattice in [Lattice::line_for(8), Lattice::Cycle { m: 5 }] {
            let s0 = WalkState::localized(lattice, 0, CoinState::symmetric()).unwrap();
            let s = evolve(&s0, h, 6).unwrap();
            let op = build_step_operator(h, lattice);
            let back = op.apply_inverse(&op.apply(&s).unwrap()).unwrap();
            for (a, b) in back.amplitudes().iter().zip(s.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cycle_of_four_merges_extremes() {
        // two Hadamard steps on a 4-cycle: sites -2 and 2 coincide at residue 2
        let h = CoinOperator::hadamard();
        let s0 = WalkState::localized(Lattice::Cycle { m: 4 }, 0, CoinState::L).unwrap();
        let s = evolve(&s0, h, 2).unwrap();
        assert_amp(&s, 0, -0.5, 0.5);
        assert_amp(&s, 2, 0.5, 0.5);
        assert_amp(&s, 1, 0.0, 0.0);
        assert_amp(&s, 3, 0.0, 0.0);
    }

    #[test]
    fn boundary_overflow_detected() {
        let s0 = WalkState::localized(Lattice::Line { radius: 3 }, 0, CoinState::L).unwrap();
        assert!(evolve(&s0, CoinOperator::hadamard(), 2).is_ok());
        assert_eq!(
            evolve(&s0, CoinOperator::hadamard(), 3),
            Err(Error::BoundaryOverflow { radius: 3 })
        );
        assert!(WalkState::localized(Lattice::Line { radius: 3 }, 3, CoinState::L).is_err());
    }

    #[test]
    fn profile_two_steps() {
        let p = line_shift_profile(CoinOperator::hadamard(), 2, CoinState::L).unwrap();
        let d = &p.distribution;
        assert_eq!(d.probabilities.len(), 3);
        assert_abs_diff_eq!(d.probability(-2), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability(2), 0.25, epsilon = 1e-12);
        assert!(p.collapsed_for(-2).unwrap().distance(&CoinState::L) < 1e-12);
        assert!(p.collapsed_for(2).unwrap().distance(&CoinState::R) < 1e-12);
        let minus = CoinState::new(c(-FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        assert!(p.collapsed_for(0).unwrap().distance(&minus) < 1e-12);
    }

    #[test]
    fn profile_single_step_is_fair() {
        let p = line_shift_profile(CoinOperator::hadamard(), 1, CoinState::L).unwrap();
        assert_abs_diff_eq!(p.distribution.probability(-1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.distribution.probability(1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn profile_three_steps() {
        let p = line_shift_profile(CoinOperator::hadamard(), 3, CoinState::L).unwrap();
        let d = &p.distribution;
        assert_abs_diff_eq!(d.probability(-3), 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability(-1), 0.625, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability(1), 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability(3), 0.125, epsilon = 1e-12);
        let s5 = libm::sqrt(5.0);
        let expected = CoinState::new(c(-2.0 / s5), c(1.0 / s5)).unwrap();
        assert!(p.collapsed_for(-1).unwrap().distance(&expected) < 1e-12);
    }

    #[test]
    fn profile_rejects_zero_wait() {
        assert!(line_shift_profile(CoinOperator::hadamard(), 0, CoinState::L).is_err());
    }

    #[test]
    fn measuring_a_localized_state() {
        let s = WalkState::localized(Lattice::line_for(6), 5, CoinState::R).unwrap();
        let mut rng = seeded_rng(3);
        let (x, t) = measure_position(&s, &mut rng).unwrap();
        assert_eq!(x, 5);
        assert_eq!(t, s);
    }

    #[test]
    fn measurement_collapses_coin() {
        let s0 = WalkState::localized(Lattice::line_for(2), 0, CoinState::L).unwrap();
        let s = evolve(&s0, CoinOperator::hadamard(), 2).unwrap();
        let mut rng = seeded_rng(11);
        loop {
            let (x, t) = measure_position(&s, &mut rng).unwrap();
            if x == 0 {
                assert_amp(&t, 0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2);
                assert_abs_diff_eq!(t.norm_sqr(), 1.0, epsilon = 1e-12);
                break;
            }
        }
    }

    #[test]
    fn degenerate_state_rejected() {
        let lattice = Lattice::line_for(1);
        let s = WalkState {
            lattice,
            amplitudes: vec![ZERO; 2 * lattice.sites()],
        };
        assert!(matches!(
            measure_position(&s, &mut seeded_rng(0)),
            Err(Error::DegenerateState { .. })
        ));
    }

    #[test]
    fn representative_range() {
        assert_eq!(cycle_representative(8, 16), 8);
        assert_eq!(cycle_representative(9, 16), -7);
        assert_eq!(cycle_representative(-8, 16), 8);
        assert_eq!(cycle_representative(2, 5), 2);
        assert_eq!(cycle_representative(3, 5), -2);
    }
}
