//! Shannon entropies, the closed-form classical walk rates and a
//! block-jackknife entropy estimator for sampled shift sequences.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::walk::cycle_representative;
use crate::{seeded_rng, Error, Result};

const SUM_TOL: f64 = 1e-6;
/// Above this waiting time binomial coefficients are handled in log space.
const EXACT_BINOMIAL_MAX_W: usize = 60;
const JACKKNIFE_BLOCKS: usize = 100;

/// `-sum p log2 p` with `0 log 0 = 0`. No validation.
pub fn entropy_bits<I: IntoIterator<Item = f64>>(probabilities: I) -> f64 {
    let h: f64 = probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * libm::log2(p))
        .sum();
    h.max(0.0)
}

/// A finite labelled probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<L> {
    entries: Vec<(L, f64)>,
}

impl<L> FiniteDistribution<L> {
    pub fn new(entries: Vec<(L, f64)>) -> Result<Self> {
        validate(entries.iter().map(|e| e.1))?;
        Ok(FiniteDistribution { entries })
    }

    pub fn entries(&self) -> &[(L, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.entries.iter().map(|e| e.1))
    }
}

impl FiniteDistribution<i64> {
    /// Normalizes nonnegative counts.
    pub fn from_counts<I: IntoIterator<Item = (i64, u64)>>(counts: I) -> Result<Self> {
        let counts: Vec<(i64, u64)> = counts.into_iter().collect();
        let total: u64 = counts.iter().map(|c| c.1).sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no samples".into()));
        }
        Ok(FiniteDistribution {
            entries: counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect(),
        })
    }
}

fn validate<I: IntoIterator<Item = f64>>(probabilities: I) -> Result<()> {
    let mut sum = 0.0;
    for p in probabilities {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("invalid probability {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// Shannon entropy in bits of a probability vector, validated.
pub fn shannon_entropy(probabilities: &[f64]) -> Result<f64> {
    validate(probabilities.iter().copied())?;
    Ok(entropy_bits(probabilities.iter().copied()))
}

fn check_wait(w: usize) -> Result<()> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    Ok(())
}

/// `ln C(w, i)` for every `i` in `0..=w`, by cumulative log ratios.
fn ln_binomials(w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=w {
        acc += libm::log(((w - i + 1) as f64) / (i as f64));
        out.push(acc);
    }
    out
}

/// Entropy rate of the unbiased classical walk measured every `w` steps:
/// `2^-w sum_i C(w,i) (w - log2 C(w,i))`.
pub fn cw_entropy_rate(w: usize) -> Result<f64> {
    check_wait(w)?;
    if w <= EXACT_BINOMIAL_MAX_W {
        let scale = libm::exp2(-(w as f64));
        let mut c: u128 = 1;
        let mut h = 0.0;
        for i in 0..=w {
            let cf = c as f64;
            h += cf * (w as f64 - libm::log2(cf));
            c = c * (w - i) as u128 / (i as u128 + 1);
        }
        Ok(h * scale)
    } else {
        let ln2 = core::f64::consts::LN_2;
        let h = ln_binomials(w)
            .into_iter()
            .map(|lc| {
                let log2c = lc / ln2;
                libm::exp2(log2c - w as f64) * (w as f64 - log2c)
            })
            .sum();
        Ok(h)
    }
}

/// Gaussian approximation `(-1 + log2(pi e w)) / 2`.
pub fn cw_entropy_rate_gaussian(w: usize) -> Result<f64> {
    check_wait(w)?;
    let x = core::f64::consts::PI * core::f64::consts::E * w as f64;
    Ok(0.5 * (-1.0 + libm::log2(x)))
}

/// Rate of a fully mixed classical walk on an `M`-cycle: `log2 M` for odd
/// `M`, `log2 M - 1` for even `M` (only one parity class is reachable).
pub fn cw_limit(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::invalid("a cycle needs at least 3 vertices"));
    }
    let h = libm::log2(m as f64);
    Ok(if m.is_multiple_of(2) { h - 1.0 } else { h })
}

/// Binomial shift distribution of the classical walk after `w` steps on a
/// line, or folded mod `M` on a cycle.
pub fn classical_shift_distribution(w: usize, cycle: Option<usize>) -> Result<Vec<(i64, f64)>> {
    check_wait(w)?;
    let ln2w = w as f64 * core::f64::consts::LN_2;
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for (i, lc) in ln_binomials(w).into_iter().enumerate() {
        let delta = 2 * i as i64 - w as i64;
        let key = match cycle {
            Some(m) => cycle_representative(delta, m),
            None => delta,
        };
        *acc.entry(key).or_insert(0.0) += libm::exp(lc - ln2w);
    }
    Ok(acc.into_iter().collect())
}

/// Exact classical rate on an `M`-cycle: entropy of the folded binomial.
pub fn cw_cycle_rate_exact(w: usize, m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::invalid("a cycle needs at least 3 vertices"));
    }
    let d = classical_shift_distribution(w, Some(m))?;
    Ok(entropy_bits(d.into_iter().map(|e| e.1)))
}

/// Entropy of an empirical shift histogram with its block-jackknife
/// standard error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyEstimate {
    pub bits: f64,
    /// `None` with fewer than two samples.
    pub std_error: Option<f64>,
    /// `(delta, count)` in increasing `delta`.
    pub counts: Vec<(i64, u64)>,
    pub samples: u64,
}

/// Accumulates shift outcomes into contiguous blocks for a delete-a-block
/// jackknife. Consecutive samples of a measured walk are correlated through
/// the coin, so whole blocks are left out rather than single samples.
#[derive(Debug, Clone)]
pub struct ShiftTally {
    expected: u64,
    blocks: usize,
    seen: u64,
    keys: BTreeMap<i64, usize>,
    /// `per_block[b][k]` counts of key slot `k` in block `b`.
    per_block: Vec<Vec<u64>>,
}

impl ShiftTally {
    /// Tally for exactly `samples` observations.
    pub fn new(samples: u64) -> Self {
        let blocks = (samples.min(JACKKNIFE_BLOCKS as u64) as usize).max(1);
        ShiftTally {
            expected: samples.max(1),
            blocks,
            seen: 0,
            keys: BTreeMap::new(),
            per_block: alloc::vec![Vec::new(); blocks],
        }
    }

    pub fn record(&mut self, delta: i64) {
        let next = self.keys.len();
        let slot = *self.keys.entry(delta).or_insert(next);
        let b = ((self.seen.min(self.expected - 1) as u128 * self.blocks as u128) / self.expected as u128) as usize;
        let row = &mut self.per_block[b];
        if row.len() <= slot {
            row.resize(slot + 1, 0);
        }
        row[slot] += 1;
        self.seen += 1;
    }

    pub fn samples(&self) -> u64 {
        self.seen
    }

    pub fn finish(&self) -> EntropyEstimate {
        let k = self.keys.len();
        let mut total = alloc::vec![0u64; k];
        for row in &self.per_block {
            for (t, c) in total.iter_mut().zip(row) {
                *t += c;
            }
        }
        let n = self.seen;
        let bits = counts_entropy(&total, n);
        let used: Vec<&Vec<u64>> = self.per_block.iter().filter(|r| r.iter().any(|&c| c > 0)).collect();
        let std_error = if n < 2 || used.len() < 2 {
            None
        } else {
            let mut leave_out = Vec::with_capacity(used.len());
            let mut rest = alloc::vec![0u64; k];
            for row in &used {
                let mut m = n;
                for (slot, r) in rest.iter_mut().enumerate() {
                    let c = row.get(slot).copied().unwrap_or(0);
                    *r = total[slot] - c;
                    m -= c;
                }
                leave_out.push(counts_entropy(&rest, m));
            }
            let b = leave_out.len() as f64;
            let mean = leave_out.iter().sum::<f64>() / b;
            let var = (b - 1.0) / b * leave_out.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>();
            Some(libm::sqrt(var))
        };
        let counts = self.keys.iter().map(|(&d, &slot)| (d, total[slot])).collect();
        EntropyEstimate {
            bits,
            std_error,
            counts,
            samples: n,
        }
    }
}

fn counts_entropy(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    entropy_bits(counts.iter().map(|&c| c as f64 / nf))
}

/// Monte Carlo rate of the unbiased classical walk measured every `w`
/// steps, on a line (`cycle = None`) or an `M`-cycle. Each iteration draws
/// `w` fair steps from the bits of one or more `u64` draws.
pub fn cw_rate_mc(w: usize, cycle: Option<usize>, iterations: u64, seed: u64) -> Result<EntropyEstimate> {
    check_wait(w)?;
    if matches!(cycle, Some(m) if m < 3) {
        return Err(Error::invalid("a cycle needs at least 3 vertices"));
    }
    if iterations == 0 {
        return Err(Error::invalid("at least one iteration is required"));
    }
    let mut rng = seeded_rng(seed);
    let mut tally = ShiftTally::new(iterations);
    for _ in 0..iterations {
        let mut right = 0u32;
        let mut left_to_draw = w;
        while left_to_draw > 0 {
            let take = left_to_draw.min(64);
            let bits = rand_core::RngCore::next_u64(&mut rng);
            let masked = if take == 64 { bits } else { bits & ((1u64 << take) - 1) };
            right += masked.count_ones();
            left_to_draw -= take;
        }
        let step = 2 * right as i64 - w as i64;
        tally.record(match cycle {
            Some(m) => cycle_representative(step, m),
            None => step,
        });
    }
    Ok(tally.finish())
}

/// [`cw_rate_mc`] on an `M`-cycle.
pub fn cw_cycle_rate_mc(w: usize, m: usize, iterations: u64, seed: u64) -> Result<EntropyEstimate> {
    if m < 3 {
        return Err(Error::invalid("a cycle needs at least 3 vertices"));
    }
    cw_rate_mc(w, Some(m), iterations, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Binomial probabilities from Pascal's triangle in floating point.
    fn pascal_probabilities(w: usize) -> Vec<f64> {
        let mut row = alloc::vec![1.0f64];
        for _ in 0..w {
            let mut next = alloc::vec![0.0; row.len() + 1];
            for (i, v) in row.iter().enumerate() {
                next[i] += v / 2.0;
                next[i + 1] += v / 2.0;
            }
            row = next;
        }
        row
    }

    #[test]
    fn small_entropies() {
        assert_abs_diff_eq!(shannon_entropy(&[0.5, 0.5]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(shannon_entropy(&[0.25, 0.5, 0.25]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            shannon_entropy(&[0.125, 0.375, 0.375, 0.125]).unwrap(),
            1.811278124459133,
            epsilon = 1e-12
        );
        assert_eq!(shannon_entropy(&[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_distributions() {
        assert!(shannon_entropy(&[0.5, 0.4]).is_err());
        assert!(shannon_entropy(&[1.5, -0.5]).is_err());
        assert!(shannon_entropy(&[f64::NAN, 1.0]).is_err());
        assert!(FiniteDistribution::new(alloc::vec![(1, 0.3)]).is_err());
    }

    #[test]
    fn classical_rate_matches_binomial_oracle() {
        for w in 1..=30 {
            let oracle = entropy_bits(pascal_probabilities(w));
            assert_abs_diff_eq!(cw_entropy_rate(w).unwrap(), oracle, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cw_entropy_rate(1).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cw_entropy_rate(2).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cw_entropy_rate(3).unwrap(), 1.811278124459133, epsilon = 1e-12);
        assert!(cw_entropy_rate(0).is_err());
    }

    #[test]
    fn exact_and_log_space_branches_agree() {
        for w in [50, 60, 61, 80, 120] {
            let oracle = entropy_bits(pascal_probabilities(w));
            assert_abs_diff_eq!(cw_entropy_rate(w).unwrap(), oracle, epsilon = 1e-10);
        }
        let h = cw_entropy_rate(10_000).unwrap();
        assert!(h.is_finite() && h > 7.0);
    }

    #[test]
    fn gaussian_approximation() {
        assert_abs_diff_eq!(
            cw_entropy_rate_gaussian(1).unwrap(),
            0.5 * libm::log2(core::f64::consts::PI * core::f64::consts::E / 2.0),
            epsilon = 1e-12
        );
        let gap = cw_entropy_rate_gaussian(100).unwrap() - cw_entropy_rate(100).unwrap();
        assert!(gap.abs() < 0.01);
        let mut prev = f64::INFINITY;
        // beyond a few thousand the gap (~1e-8) is within reach of summation noise
        for w in (5..=2000).step_by(7) {
            let g = cw_entropy_rate_gaussian(w).unwrap() - cw_entropy_rate(w).unwrap();
            assert!(g >= 0.0 && g <= prev + 1e-12, "w = {w}");
            prev = g;
        }
        let far = cw_entropy_rate_gaussian(10_000).unwrap() - cw_entropy_rate(10_000).unwrap();
        assert!(far.abs() < 1e-6);
    }

    #[test]
    fn limits() {
        assert_eq!(cw_limit(16).unwrap(), 3.0);
        assert_abs_diff_eq!(cw_limit(17).unwrap(), libm::log2(17.0), epsilon = 1e-15);
        assert_abs_diff_eq!(cw_limit(3).unwrap(), 1.584962500721156, epsilon = 1e-12);
        assert!(cw_limit(2).is_err());
    }

    #[test]
    fn folded_distribution() {
        let d = classical_shift_distribution(2, Some(4)).unwrap();
        // -2 and 2 coincide mod 4
        assert_eq!(d, alloc::vec![(0, 0.5), (2, 0.5)]);
        assert_abs_diff_eq!(cw_cycle_rate_exact(2, 1001).unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cw_cycle_rate_exact(216, 16).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn classical_mc_small_wait() {
        let est = cw_cycle_rate_mc(2, 1001, 200_000, 7).unwrap();
        let se = est.std_error.unwrap();
        assert!((est.bits - 1.5).abs() <= 3.0 * se + 1e-4, "{} +- {}", est.bits, se);
        let one = cw_cycle_rate_mc(1, 16, 100_000, 1).unwrap();
        assert!((one.bits - 1.0).abs() < 3.0 * one.std_error.unwrap() + 1e-4);
    }

    #[test]
    fn classical_mc_parity_on_even_cycles() {
        for w in [3usize, 8] {
            let est = cw_cycle_rate_mc(w, 16, 20_000, 5).unwrap();
            for &(d, _) in &est.counts {
                assert_eq!((d - w as i64).rem_euclid(2), 0);
            }
        }
    }

    #[test]
    fn classical_mc_converges_to_limits() {
        // short waits see the line rate, long waits the mixed limit
        let a = cw_cycle_rate_mc(4, 16, 200_000, 21).unwrap();
        assert!((a.bits - cw_entropy_rate(4).unwrap()).abs() <= 3.0 * a.std_error.unwrap() + 1e-4);
        let b = cw_cycle_rate_mc(64, 15, 200_000, 22).unwrap();
        assert!((b.bits - cw_cycle_rate_exact(64, 15).unwrap()).abs() <= 3.0 * b.std_error.unwrap() + 1e-4);
        let c = cw_cycle_rate_mc(2000, 15, 100_000, 23).unwrap();
        assert_abs_diff_eq!(
            cw_cycle_rate_exact(2000, 15).unwrap(),
            cw_limit(15).unwrap(),
            epsilon = 1e-10
        );
        assert!((c.bits - cw_limit(15).unwrap()).abs() <= 3.0 * c.std_error.unwrap() + 1e-4);
    }

    #[test]
    fn tally_counts_and_reproducibility() {
        let a = cw_cycle_rate_mc(5, 9, 1000, 42).unwrap();
        let b = cw_cycle_rate_mc(5, 9, 1000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().map(|c| c.1).sum::<u64>(), 1000);
        let single = cw_cycle_rate_mc(5, 9, 1, 42).unwrap();
        assert_eq!(single.std_error, None);
    }
}
