//! The coin-ignoring upper bound, waiting-time scans and independently
//! prepared walks.
//!
//! Estimating the rate from the shift histogram alone treats the shifts as
//! i.i.d. and ignores the coin memory, so it bounds the true rate from
//! above. In the long run the coin seen at the start of a block is
//! completely mixed, so the bound equals the entropy of the shift
//! distribution averaged over the `|L>` and `|R>` initial coins
//! ([`qw_bound_exact`]). [`qw_bound_mc`] runs the measured walk itself and is
//! the Monte Carlo check of that identity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::entropy::{cw_cycle_rate_exact, cw_entropy_rate, cw_rate_mc, entropy_bits, EntropyEstimate, ShiftTally};
use crate::walk::{evolve, measure_position, shift_profile, ShiftDistribution, ShiftSupport};
use crate::weak_limit::closed_form;
use crate::{seeded_rng, CoinOperator, CoinState, Error, Lattice, Result, WalkState};

pub const DEFAULT_BURN_IN: u64 = 1000;

/// Settings of the measured-walk protocol beyond the iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolConfig {
    /// Coin of the walker at the first iteration, placed at the origin.
    pub c0: CoinState,
    /// Iterations run before recording starts.
    pub burn_in: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            c0: CoinState::L,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// One Monte Carlo run of the measured walk.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolRun {
    pub coin: CoinOperator,
    pub w: usize,
    pub lattice: Lattice,
    pub iterations: u64,
    pub seed: u64,
    pub config: ProtocolConfig,
    /// Measured position after the last iteration (absolute, also on a line).
    pub final_position: i64,
    pub estimate: EntropyEstimate,
}

impl ProtocolRun {
    pub fn bits(&self) -> f64 {
        self.estimate.bits
    }

    pub fn std_error(&self) -> Option<f64> {
        self.estimate.std_error
    }

    pub fn counts(&self) -> &[(i64, u64)] {
        &self.estimate.counts
    }
}

/// [`qw_bound_mc_with`] with the default configuration.
pub fn qw_bound_mc(coin: CoinOperator, w: usize, lattice: Lattice, iterations: u64, seed: u64) -> Result<ProtocolRun> {
    qw_bound_mc_with(coin, w, lattice, iterations, seed, ProtocolConfig::default())
}

/// Runs the measured walk: evolve `w` steps, measure the position, record
/// the shift, continue from the collapsed state.
///
/// On a line the state after each measurement is moved back to the origin
/// (the dynamics is translation invariant), so a radius of `w + 1` is
/// enough for any number of iterations; a smaller radius is a
/// boundary-overflow error. On a cycle the walker stays where it was
/// measured and shifts are taken mod `M`.
pub fn qw_bound_mc_with(
    coin: CoinOperator,
    w: usize,
    lattice: Lattice,
    iterations: u64,
    seed: u64,
    config: ProtocolConfig,
) -> Result<ProtocolRun> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    if iterations == 0 {
        return Err(Error::invalid("at least one iteration is required"));
    }
    if let Lattice::Line { radius } = lattice {
        if radius < w + 1 {
            return Err(Error::BoundaryOverflow { radius });
        }
    }
    let mut rng = seeded_rng(seed);
    let mut tally = ShiftTally::new(iterations);
    let mut state = WalkState::localized(lattice, 0, config.c0)?;
    let mut here: i64 = 0;
    let mut absolute: i64 = 0;
    for it in 0..config.burn_in + iterations {
        let evolved = evolve(&state, coin, w)?;
        let (y, collapsed) = measure_position(&evolved, &mut rng)?;
        let delta = lattice.shift(here, y);
        absolute += delta;
        if it >= config.burn_in {
            tally.record(delta);
        }
        match lattice {
            Lattice::Line { .. } => {
                let (l, r) = collapsed.amplitude(y);
                let c = CoinState::from_unnormalized(l, r).ok_or(Error::DegenerateState { total: 0.0 })?;
                state = WalkState::localized(lattice, 0, c)?;
                here = 0;
            }
            Lattice::Cycle { .. } => {
                state = collapsed;
                here = y;
            }
        }
    }
    Ok(ProtocolRun {
        coin,
        w,
        lattice,
        iterations,
        seed,
        config,
        final_position: absolute,
        estimate: tally.finish(),
    })
}

/// Shift distribution of one block started from the completely mixed coin:
/// the average of the `|L>` and `|R>` distributions. A line lattice is
/// sized for `w` automatically.
pub fn mixed_coin_shift_distribution(coin: CoinOperator, w: usize, lattice: Lattice) -> Result<ShiftDistribution> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    let lattice = match lattice {
        Lattice::Line { .. } => Lattice::line_for(w),
        c => c,
    };
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for c in [CoinState::L, CoinState::R] {
        let profile = shift_profile(coin, w, c, lattice)?;
        for (d, p) in profile.distribution.probabilities {
            *acc.entry(d).or_insert(0.0) += 0.5 * p;
        }
    }
    Ok(ShiftDistribution {
        w,
        support: match lattice {
            Lattice::Line { .. } => ShiftSupport::Line,
            Lattice::Cycle { m } => ShiftSupport::Cycle { m },
        },
        probabilities: acc.into_iter().collect(),
    })
}

/// Entropy of [`mixed_coin_shift_distribution`]: the coin-ignoring rate.
pub fn qw_bound_exact(coin: CoinOperator, w: usize, lattice: Lattice) -> Result<f64> {
    Ok(mixed_coin_shift_distribution(coin, w, lattice)?.entropy())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Estimator {
    /// [`qw_bound_mc`].
    McBound,
    /// [`qw_bound_exact`].
    ExactBound,
    /// Closed-form classical rate (folded binomial on a cycle).
    CwExact,
    /// Sampled classical rate.
    CwMc,
    /// `C + log2 w`; unbiased coins on a line only.
    WeakLimit,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::McBound,
        Estimator::ExactBound,
        Estimator::CwExact,
        Estimator::CwMc,
        Estimator::WeakLimit,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Estimator::McBound => "mc-bound",
            Estimator::ExactBound => "exact-bound",
            Estimator::CwExact => "cw-exact",
            Estimator::CwMc => "cw-mc",
            Estimator::WeakLimit => "weak-limit",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Estimator::McBound | Estimator::CwMc)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::invalid("unknown estimator"))
    }
}

/// One evaluated `(w, estimator)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanRow {
    pub w: usize,
    pub estimator: Estimator,
    pub rate_bits: f64,
    pub err_bits: Option<f64>,
}

/// A `(w, estimator)` pair whose evaluation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFailure {
    pub w: usize,
    pub estimator: Estimator,
    pub error: Error,
}

pub type ScanResult = core::result::Result<ScanRow, ScanFailure>;

/// Shared settings of the stochastic estimators in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub iterations: u64,
    pub seed: u64,
    pub protocol: ProtocolConfig,
}

/// Rows of a scan in output order (ascending `w`, then the estimators in
/// the order given) with the seed of each row, `seed ^ row_index`.
pub fn scan_plan(ws: &[usize], estimators: &[Estimator], seed: u64) -> Vec<(usize, Estimator, u64)> {
    let mut ws: Vec<usize> = ws.to_vec();
    ws.sort_unstable();
    ws.dedup();
    let mut plan = Vec::with_capacity(ws.len() * estimators.len());
    for &w in &ws {
        for &e in estimators {
            let index = plan.len() as u64;
            plan.push((w, e, seed ^ index));
        }
    }
    plan
}

/// Evaluates one scan row with its own seed.
pub fn scan_row(
    coin: CoinOperator,
    lattice: Lattice,
    w: usize,
    estimator: Estimator,
    settings: &ScanSettings,
    row_seed: u64,
) -> Result<ScanRow> {
    let (rate_bits, err_bits) = match estimator {
        Estimator::McBound => {
            let lattice = match lattice {
                Lattice::Line { .. } => Lattice::line_for(w),
                c => c,
            };
            let run = qw_bound_mc_with(coin, w, lattice, settings.iterations, row_seed, settings.protocol)?;
            (run.bits(), run.std_error())
        }
        Estimator::ExactBound => (qw_bound_exact(coin, w, lattice)?, None),
        Estimator::CwExact => match lattice {
            Lattice::Line { .. } => (cw_entropy_rate(w)?, None),
            Lattice::Cycle { m } => (cw_cycle_rate_exact(w, m)?, None),
        },
        Estimator::CwMc => {
            let cycle = match lattice {
                Lattice::Line { .. } => None,
                Lattice::Cycle { m } => Some(m),
            };
            let est = cw_rate_mc(w, cycle, settings.iterations, row_seed)?;
            (est.bits, est.std_error)
        }
        Estimator::WeakLimit => {
            if !coin.is_unbiased() || !matches!(lattice, Lattice::Line { .. }) {
                return Err(Error::invalid(
                    "the weak-limit estimator needs an unbiased coin on a line",
                ));
            }
            (closed_form(w as f64)?, None)
        }
    };
    Ok(ScanRow {
        w,
        estimator,
        rate_bits,
        err_bits,
    })
}

/// Evaluates every estimator at every `w`. Failures are reported per row
/// and do not stop the scan.
pub fn scan_w(
    coin: CoinOperator,
    lattice: Lattice,
    ws: &[usize],
    estimators: &[Estimator],
    settings: &ScanSettings,
) -> Result<Vec<ScanResult>> {
    if ws.is_empty() || estimators.is_empty() {
        return Err(Error::invalid(
            "a scan needs at least one waiting time and one estimator",
        ));
    }
    Ok(scan_plan(ws, estimators, settings.seed)
        .into_iter()
        .map(|(w, estimator, seed)| {
            scan_row(coin, lattice, w, estimator, settings, seed).map_err(|error| ScanFailure { w, estimator, error })
        })
        .collect())
}

/// Least-squares slope `s` of `rate = s log2 w + c`.
pub fn log_slope(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("a slope needs at least two points"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| libm::log2(p.0 as f64)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, p) in xs.iter().zip(points) {
        sxy += (x - mx) * (p.1 - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("a slope needs at least two distinct waiting times"));
    }
    Ok(sxy / sxx)
}

/// Entropy of the position of a fresh walk `|0, c0>` after `w k`
/// undisturbed steps: the rate when every measurement is made on a new,
/// never measured copy of the walk.
pub fn independent_entropy(coin: CoinOperator, w: usize, k: usize, lattice: Lattice, c0: CoinState) -> Result<f64> {
    let steps = w.checked_mul(k).ok_or_else(|| Error::invalid("w * k overflows"))?;
    let state = evolve(&WalkState::localized(lattice, 0, c0)?, coin, steps)?;
    Ok(entropy_bits(state.position_probabilities().into_iter().map(|p| p.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::cw_cycle_rate_mc;
    use approx::assert_abs_diff_eq;

    fn h() -> CoinOperator {
        CoinOperator::hadamard()
    }

    #[test]
    fn exact_bound_small_w() {
        let d = mixed_coin_shift_distribution(h(), 2, Lattice::Line { radius: 1 }).unwrap();
        assert_eq!(d.probabilities.len(), 3);
        for (got, want) in d.probabilities.iter().zip([(-2, 0.25), (0, 0.5), (2, 0.25)]) {
            assert_eq!(got.0, want.0);
            assert_abs_diff_eq!(got.1, want.1, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            qw_bound_exact(h(), 2, Lattice::line_for(2)).unwrap(),
            1.5,
            epsilon = 1e-12
        );
        for w in 1..=3 {
            assert_abs_diff_eq!(
                qw_bound_exact(h(), w, Lattice::line_for(w)).unwrap(),
                cw_entropy_rate(w).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn mc_bound_w1_and_w2() {
        let one = qw_bound_mc(h(), 1, Lattice::line_for(1), 200_000, 3).unwrap();
        let se = one.std_error().unwrap();
        assert!((one.bits() - 1.0).abs() <= 3.0 * se + 1e-4, "{} +- {}", one.bits(), se);
        let two = qw_bound_mc(h(), 2, Lattice::line_for(2), 200_000, 4).unwrap();
        let se = two.std_error().unwrap();
        assert!((two.bits() - 1.5).abs() <= 3.0 * se, "{} +- {}", two.bits(), se);
        assert_eq!(two.counts().iter().map(|c| c.1).sum::<u64>(), 200_000);
    }

    #[test]
    fn mc_reproducible_and_seed_sensitive() {
        let a = qw_bound_mc(h(), 3, Lattice::line_for(3), 5000, 9).unwrap();
        let b = qw_bound_mc(h(), 3, Lattice::line_for(3), 5000, 9).unwrap();
        let c = qw_bound_mc(h(), 3, Lattice::line_for(3), 5000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn mc_small_line_overflows() {
        assert_eq!(
            qw_bound_mc(h(), 4, Lattice::Line { radius: 4 }, 10, 1),
            Err(Error::BoundaryOverflow { radius: 4 })
        );
    }

    #[test]
    fn mc_even_cycle_parity() {
        let run = qw_bound_mc(h(), 3, Lattice::Cycle { m: 8 }, 20_000, 2).unwrap();
        for &(d, _) in run.counts() {
            assert_eq!(d.rem_euclid(2), 1);
            assert!(-4 < d && d <= 4);
        }
    }

    #[test]
    fn collapse_revival_point() {
        let q = qw_bound_exact(h(), 216, Lattice::Cycle { m: 16 }).unwrap();
        assert!((q - 0.514).abs() < 0.02, "{q}");
        let c = cw_cycle_rate_mc(216, 16, 200_000, 1).unwrap();
        assert!((c.bits - 3.0).abs() < 0.05);
    }

    #[test]
    fn scan_rows_ordered_and_failures_isolated() {
        let settings = ScanSettings {
            iterations: 2000,
            seed: 5,
            protocol: ProtocolConfig::default(),
        };
        let angle = CoinOperator::from_angle(0.3).unwrap();
        let rows = scan_w(
            angle,
            Lattice::line_for(1),
            &[3, 1, 2],
            &[Estimator::ExactBound, Estimator::WeakLimit],
            &settings,
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].as_ref().unwrap().w, 1);
        assert!(rows[1].is_err());
        assert!(rows
            .iter()
            .filter(|r| r.is_ok())
            .all(|r| r.as_ref().unwrap().rate_bits >= 0.0));
        let plan = scan_plan(&[2, 1], &[Estimator::CwMc, Estimator::McBound], 8);
        assert_eq!(plan[0], (1, Estimator::CwMc, 8));
        assert_eq!(plan[3], (2, Estimator::McBound, 8 ^ 3));
        assert!(scan_w(h(), Lattice::line_for(1), &[], &[Estimator::CwExact], &settings).is_err());
    }

    #[test]
    fn estimator_ids_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.id().parse::<Estimator>().unwrap(), e);
        }
        assert!("bogus".parse::<Estimator>().is_err());
    }

    #[test]
    fn independent_single_step() {
        let one = independent_entropy(h(), 1, 1, Lattice::line_for(1), CoinState::L).unwrap();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-12);
        assert!(matches!(
            independent_entropy(h(), 5, 2, Lattice::Line { radius: 5 }, CoinState::L),
            Err(Error::BoundaryOverflow { .. })
        ));
    }

    #[test]
    fn slope_of_exact_log() {
        let pts: Vec<(usize, f64)> = [4usize, 8, 64]
            .iter()
            .map(|&w| (w, 0.7 * libm::log2(w as f64) + 2.0))
            .collect();
        assert_abs_diff_eq!(log_slope(&pts).unwrap(), 0.7, epsilon = 1e-12);
    }
}
