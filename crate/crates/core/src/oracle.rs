//! Brute-force joint distributions of shift sequences.
//!
//! [`joint_distribution`] enumerates every sequence `(delta_1, .., delta_N)`
//! depth first, multiplying the per-block probabilities along the branch
//! and carrying the collapsed coin state down. Profiles of coin states seen
//! before are looked up instead of recomputed. [`joint_distribution_trace`]
//! is an independent path for short sequences: it applies evolution and
//! position projectors to the full walk state and reads each sequence's
//! probability off the final norm.

use alloc::vec;
use alloc::vec::Vec;

use crate::entropy::entropy_bits;
use crate::state_index::StateIndex;
use crate::walk::{build_step_operator, line_shift_profile};
use crate::{CoinOperator, CoinState, Error, Lattice, Result, WalkState};

pub const DEFAULT_LEAF_CAP: u128 = 10_000_000;
/// Branches whose probability drops below this are dropped.
pub const PRUNE_BELOW: f64 = 1e-14;
/// Longest sequence accepted by the trace form.
pub const TRACE_MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Upper limit on `(w + 1)^N`.
    pub leaf_cap: u128,
    pub prune_below: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            leaf_cap: DEFAULT_LEAF_CAP,
            prune_below: PRUNE_BELOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Leaf {
    pub sequence: Vec<i64>,
    pub probability: f64,
}

/// Probabilities of all shift sequences of one length.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeTree {
    pub coin: CoinOperator,
    pub w: usize,
    pub c0: CoinState,
    pub depth: usize,
    /// In lexicographic order of the sequences.
    pub leaves: Vec<Leaf>,
    /// Probability of the branches dropped below the pruning threshold.
    pub pruned_mass: f64,
}

impl OutcomeTree {
    pub fn total(&self) -> f64 {
        self.leaves.iter().map(|l| l.probability).sum()
    }

    /// `H(X_1, .., X_N)` in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(self.leaves.iter().map(|l| l.probability))
    }

    pub fn probability(&self, sequence: &[i64]) -> f64 {
        self.leaves
            .binary_search_by(|l| l.sequence.as_slice().cmp(sequence))
            .map_or(0.0, |i| self.leaves[i].probability)
    }

    /// Largest leaf-wise probability difference, a missing leaf counting as 0.
    pub fn max_difference(&self, other: &OutcomeTree) -> f64 {
        let one = self
            .leaves
            .iter()
            .map(|l| (l.probability - other.probability(&l.sequence)).abs());
        let two = other
            .leaves
            .iter()
            .map(|l| (l.probability - self.probability(&l.sequence)).abs());
        one.chain(two).fold(0.0, f64::max)
    }
}

fn check_size(w: usize, n: usize, cap: u128) -> Result<()> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("sequence length must be at least 1"));
    }
    let base = w as u128 + 1;
    let mut size: u128 = 1;
    for _ in 0..n {
        size = size.saturating_mul(base);
        if size > cap {
            // report the full size when it fits, otherwise saturate
            let attempted = (0..n).try_fold(1u128, |a, _| a.checked_mul(base)).unwrap_or(u128::MAX);
            return Err(Error::CapExceeded { attempted, cap });
        }
    }
    Ok(())
}

/// Per coin state: `(delta, probability, child state id)`.
struct BranchTable {
    coin: CoinOperator,
    w: usize,
    index: StateIndex,
    children: Vec<Vec<(i64, f64, usize)>>,
    pending: Vec<Option<CoinState>>,
}

impl BranchTable {
    fn new(coin: CoinOperator, w: usize) -> Self {
        BranchTable {
            coin,
            w,
            index: StateIndex::new(),
            children: Vec::new(),
            pending: Vec::new(),
        }
    }

    fn id(&mut self, state: CoinState) -> usize {
        if let Some(i) = self.index.find(&state) {
            return i;
        }
        let i = self.children.len();
        self.index.insert(state, i);
        self.children.push(Vec::new());
        self.pending.push(Some(state));
        i
    }

    fn branches(&mut self, id: usize) -> Result<&[(i64, f64, usize)]> {
        if let Some(state) = self.pending[id].take() {
            let profile = line_shift_profile(self.coin, self.w, state)?;
            let mut out = Vec::with_capacity(profile.collapsed.len());
            for (&(d, p), &c) in profile.distribution.probabilities.iter().zip(&profile.collapsed) {
                out.push((d, p, self.id(c)));
            }
            self.children[id] = out;
        }
        Ok(&self.children[id])
    }
}

/// Depth-first walk over all branches; `visit(depth, prefix, p)` is
/// called for every kept node at depth `1..=n`.
fn enumerate<F: FnMut(usize, &[i64], f64)>(
    coin: CoinOperator,
    w: usize,
    c0: CoinState,
    n: usize,
    prune_below: f64,
    mut visit: F,
) -> Result<f64> {
    let mut table = BranchTable::new(coin, w);
    let root = table.id(c0);
    let mut prefix: Vec<i64> = Vec::with_capacity(n);
    let mut pruned = 0.0;
    // explicit stack of (state id, probability, next branch)
    let mut stack: Vec<(usize, f64, usize)> = vec![(root, 1.0, 0)];
    while let Some(&(id, p, next)) = stack.last() {
        let depth = stack.len() - 1;
        if depth == n {
            stack.pop();
            prefix.pop();
            continue;
        }
        let branches = table.branches(id)?;
        if next >= branches.len() {
            stack.pop();
            prefix.pop();
            continue;
        }
        let (d, q, child) = branches[next];
        let top = stack.len() - 1;
        stack[top].2 += 1;
        let pc = p * q;
        if pc < prune_below {
            pruned += pc;
            continue;
        }
        prefix.push(d);
        visit(depth + 1, &prefix, pc);
        stack.push((child, pc, 0));
    }
    Ok(pruned)
}

/// All sequences of length `n` with their product-form probabilities.
pub fn joint_distribution(coin: CoinOperator, w: usize, c0: CoinState, n: usize) -> Result<OutcomeTree> {
    joint_distribution_with(coin, w, c0, n, OracleOptions::default())
}

pub fn joint_distribution_with(
    coin: CoinOperator,
    w: usize,
    c0: CoinState,
    n: usize,
    options: OracleOptions,
) -> Result<OutcomeTree> {
    check_size(w, n, options.leaf_cap)?;
    let mut leaves = Vec::new();
    let pruned_mass = enumerate(coin, w, c0, n, options.prune_below, |depth, prefix, p| {
        if depth == n {
            leaves.push(Leaf {
                sequence: prefix.to_vec(),
                probability: p,
            });
        }
    })?;
    Ok(OutcomeTree {
        coin,
        w,
        c0,
        depth: n,
        leaves,
        pruned_mass,
    })
}

/// The same distribution from explicit projector and evolution products on
/// the full walk state; `n <= 3`.
pub fn joint_distribution_trace(coin: CoinOperator, w: usize, c0: CoinState, n: usize) -> Result<OutcomeTree> {
    if n > TRACE_MAX_DEPTH {
        return Err(Error::invalid("the trace form is limited to sequences of length 3"));
    }
    check_size(w, n, DEFAULT_LEAF_CAP)?;
    let lattice = Lattice::Line { radius: n * w + 1 };
    let op = build_step_operator(coin, lattice);
    let start = WalkState::localized(lattice, 0, c0)?;
    let steps: Vec<i64> = (0..=w).map(|i| 2 * i as i64 - w as i64).collect();
    let mut leaves = Vec::new();
    let mut digits = vec![0usize; n];
    'sequences: loop {
        let sequence: Vec<i64> = digits.iter().map(|&i| steps[i]).collect();
        let mut state = start.clone();
        let mut x = 0i64;
        for &d in &sequence {
            for _ in 0..w {
                state = op.apply(&state)?;
            }
            x += d;
            state = state.project(x);
        }
        let probability = state.norm_sqr();
        if probability > PRUNE_BELOW {
            leaves.push(Leaf { sequence, probability });
        }
        // odometer over the (w+1)^n parity-legal sequences
        for k in (0..n).rev() {
            digits[k] += 1;
            if digits[k] <= w {
                continue 'sequences;
            }
            digits[k] = 0;
        }
        break;
    }
    let total: f64 = leaves.iter().map(|l| l.probability).sum();
    Ok(OutcomeTree {
        coin,
        w,
        c0,
        depth: n,
        leaves,
        pruned_mass: (1.0 - total).max(0.0),
    })
}

/// `H(X_1, .., X_n) / n` without materializing the leaves.
pub fn partial_rate(coin: CoinOperator, w: usize, c0: CoinState, n: usize) -> Result<f64> {
    let h = block_entropies(coin, w, c0, n)?;
    Ok(h[n - 1] / n as f64)
}

/// `H(X_1, .., X_d)` for every `d` in `1..=n`, from one enumeration.
pub fn block_entropies(coin: CoinOperator, w: usize, c0: CoinState, n: usize) -> Result<Vec<f64>> {
    check_size(w, n, DEFAULT_LEAF_CAP)?;
    let mut h = vec![0.0; n];
    enumerate(coin, w, c0, n, PRUNE_BELOW, |depth, _, p| {
        h[depth - 1] -= p * libm::log2(p);
    })?;
    Ok(h)
}
