//! The coin-state Markov chain of a periodically measured quantum walk.
//!
//! After each position measurement the walk collapses to one site, and the
//! only thing carried into the next block is the (normalized) coin state
//! there. The shift emitted by the next block depends on nothing else, so
//! the source is a Markov chain over coin states, and its entropy rate is
//! `sum_alpha mu(alpha) H(p_alpha)` with `mu` the chain's stationary
//! distribution.
//!
//! [`explore`] discovers the reachable coin states breadth-first from an
//! initial coin. In [`Mode::Reduced`] a state and its spin-flip partner
//! `(l, r) ~ (r*, -l*)` share a node (their shift distributions are mirror
//! images, their transitions are mirror images as well), so `|L>` and `|R>`
//! collapse into the merged `LR` node. When a depth budget stops the search
//! before the chain closes, every unexpanded node and an extra
//! unknown-state sink `?` are given the guaranteed rule "`b(w)` to `LR`,
//! `1 - b(w)` to `?`", with `b(w) = |e|^(2(w-1))`, and [`entropy_rate`]
//! returns an interval by bounding the sink's entropy with
//! [`extremal_entropies`].

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::state_index::{StateIndex, DEDUP_TOL};
use crate::walk::{line_shift_profile, ShiftDistribution, ShiftProfile};
use crate::{CoinOperator, CoinState, Error, Result};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;
const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// One node per canonical coin state.
    Full,
    /// Spin-flip partners share a node; `L` and `R` form the `LR` node.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Budget {
    Unlimited,
    /// Nodes first reached at breadth-first depth `< k` are expanded;
    /// `k = 1` expands only the initial node.
    Depth(usize),
}

impl Budget {
    /// Budget after `k` rounds of the procedure beyond expanding the
    /// initial node, i.e. `Depth(k + 1)`. Under this count the node count
    /// of [`truncation_diagnostics`] is a worst-case estimate for the same
    /// `k`.
    pub fn iterations(k: usize) -> Self {
        Budget::Depth(k.saturating_add(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub mode: Mode,
    pub budget: Budget,
    pub node_cap: usize,
}

impl ExploreOptions {
    pub fn new(mode: Mode, budget: Budget) -> Self {
        ExploreOptions {
            mode,
            budget,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum NodeKind {
    Concrete {
        state: CoinState,
    },
    /// Equivalence class of `|L>` and `|R>`; its profile is that of `|L>`.
    MergedLr,
    UnknownSink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinNode {
    pub kind: NodeKind,
    /// Absent for the unknown sink.
    pub distribution: Option<ShiftDistribution>,
    /// `H(p_alpha)` in bits; absent for the unknown sink.
    pub entropy: Option<f64>,
    /// Breadth-first discovery depth (the sink reports the budget).
    pub depth: usize,
    /// Whether the node's transitions were computed from its own profile.
    pub expanded: bool,
}

impl CoinNode {
    /// Representative coin state used to compute the node's profile.
    pub fn representative(&self) -> Option<CoinState> {
        match self.kind {
            NodeKind::Concrete { state } => Some(state),
            NodeKind::MergedLr => Some(CoinState::L),
            NodeKind::UnknownSink => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "lowercase"))]
pub enum Status {
    Closed,
    Truncated { budget: usize },
}

/// Discovered coin states with the row-stochastic transition matrix
/// `P[alpha -> beta]` stored as sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinTransitionSystem {
    pub coin: CoinOperator,
    pub w: usize,
    pub mode: Mode,
    pub status: Status,
    pub nodes: Vec<CoinNode>,
    /// `rows[i]` lists `(j, P[i -> j])` with distinct `j` in first-seen order.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub initial: usize,
}

impl CoinTransitionSystem {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.status == Status::Closed
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().filter(|(j, _)| *j == to).map(|(_, p)| *p).sum()
    }

    /// Dense row-major copy of the transition matrix.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        self.rows
            .iter()
            .map(|row| {
                let mut r = vec![0.0; n];
                for &(j, p) in row {
                    r[j] += p;
                }
                r
            })
            .collect()
    }

    pub fn merged_lr(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::MergedLr)
    }

    pub fn sink(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::UnknownSink)
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `nu P` for a row vector `nu`.
    pub fn step_distribution(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; nu.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let m = nu[i];
            if m == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += m * p;
            }
        }
        out
    }

    /// Index of the node that owns `state`, if discovered.
    pub fn find(&self, state: &CoinState) -> Option<usize> {
        let lr_tol = DEDUP_TOL;
        if self.mode == Mode::Reduced && state.is_basis(lr_tol) {
            return self.merged_lr();
        }
        let mirror = state.mirror();
        self.nodes.iter().position(|n| match n.kind {
            NodeKind::Concrete { state: s } => {
                s.distance(state) <= DEDUP_TOL || (self.mode == Mode::Reduced && s.distance(&mirror) <= DEDUP_TOL)
            }
            _ => false,
        })
    }
}

/// Node bookkeeping during exploration.
struct Builder {
    coin: CoinOperator,
    w: usize,
    mode: Mode,
    cap: usize,
    index: StateIndex,
    nodes: Vec<CoinNode>,
    profiles: Vec<Option<ShiftProfile>>,
    lr: Option<usize>,
}

impl Builder {
    fn node_for(&mut self, state: CoinState, depth: usize) -> Result<(usize, bool)> {
        if self.mode == Mode::Reduced && state.is_basis(DEDUP_TOL) {
            if let Some(i) = self.lr {
                return Ok((i, false));
            }
            let i = self.push(NodeKind::MergedLr, CoinState::L, depth)?;
            self.lr = Some(i);
            return Ok((i, true));
        }
        if let Some(i) = self.index.find(&state) {
            return Ok((i, false));
        }
        if self.mode == Mode::Reduced {
            if let Some(i) = self.index.find(&state.mirror()) {
                return Ok((i, false));
            }
        }
        let i = self.push(NodeKind::Concrete { state }, state, depth)?;
        self.index.insert(state, i);
        Ok((i, true))
    }

    fn push(&mut self, kind: NodeKind, representative: CoinState, depth: usize) -> Result<usize> {
        if self.nodes.len() >= self.cap {
            return Err(Error::StateExplosion { cap: self.cap });
        }
        let profile = line_shift_profile(self.coin, self.w, representative)?;
        self.nodes.push(CoinNode {
            kind,
            entropy: Some(profile.entropy()),
            distribution: Some(profile.distribution.clone()),
            depth,
            expanded: false,
        });
        self.profiles.push(Some(profile));
        Ok(self.nodes.len() - 1)
    }
}

/// Breadth-first discovery of the coin transition system from `c0`.
///
/// Frontier nodes are expanded in discovery order; within a node, outcomes
/// are visited in increasing shift, and transitions into the same node are
/// summed. Truncation (a budget that stops before closure) is only
/// supported in reduced mode.
pub fn explore(coin: CoinOperator, w: usize, c0: CoinState, options: ExploreOptions) -> Result<CoinTransitionSystem> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    let mut b = Builder {
        coin,
        w,
        mode: options.mode,
        cap: options.node_cap.max(1),
        index: StateIndex::new(),
        nodes: Vec::new(),
        profiles: Vec::new(),
        lr: None,
    };
    let (initial, _) = b.node_for(c0, 0)?;
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None];
    let mut queue = VecDeque::from([initial]);
    let limit = match options.budget {
        Budget::Unlimited => usize::MAX,
        Budget::Depth(k) => k,
    };

    while let Some(i) = queue.pop_front() {
        if b.nodes[i].depth >= limit {
            continue;
        }
        // profiles are only needed until their node is expanded
        let profile = b.profiles[i].take().expect("profile kept until expansion");
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (&(_, p), &target) in profile.distribution.probabilities.iter().zip(&profile.collapsed) {
            let (j, fresh) = b.node_for(target, b.nodes[i].depth + 1)?;
            if fresh {
                rows.push(None);
                queue.push_back(j);
            }
            match row.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += p,
                None => row.push((j, p)),
            }
        }
        b.nodes[i].expanded = true;
        rows[i] = Some(row);
    }

    let closed = rows.iter().all(Option::is_some);
    let status = if closed {
        Status::Closed
    } else {
        if options.mode == Mode::Full {
            return Err(Error::TruncatedFullMode);
        }
        Status::Truncated { budget: limit }
    };

    if !closed {
        let lr = match b.lr {
            Some(i) => i,
            None => {
                let i = b.push(NodeKind::MergedLr, CoinState::L, limit)?;
                b.lr = Some(i);
                rows.push(None);
                i
            }
        };
        if b.nodes.len() >= b.cap {
            return Err(Error::StateExplosion { cap: b.cap });
        }
        let sink = b.nodes.len();
        b.nodes.push(CoinNode {
            kind: NodeKind::UnknownSink,
            distribution: None,
            entropy: None,
            depth: limit,
            expanded: false,
        });
        rows.push(None);
        let mass = coin.guaranteed_lr_mass(w);
        let rule = if lr == sink {
            unreachable!("sink is pushed after the LR node")
        } else {
            vec![(lr, mass), (sink, 1.0 - mass)]
        };
        for r in rows.iter_mut().filter(|r| r.is_none()) {
            *r = Some(rule.clone());
        }
    }

    let rows: Vec<Vec<(usize, f64)>> = rows.into_iter().map(|r| r.expect("row filled")).collect();
    let system = CoinTransitionSystem {
        coin,
        w,
        mode: options.mode,
        status,
        nodes: b.nodes,
        rows,
        initial,
    };
    debug_assert!(system.max_row_defect() <= ROW_SUM_TOL);
    Ok(system)
}

/// Asymptotic coin distribution with convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryCoinDistribution {
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// `||mu P - mu||_1` at exit.
    pub residual: f64,
}

/// Long-run occupation of the chain started at the initial node.
///
/// This is the Cesaro limit `lim (1/N) sum_{i<N} nu_i` with
/// `nu_0 = indicator(initial)`, which is what the entropy rate needs even
/// for periodic chains. It is reached by power iteration of the lazy chain
/// `(I + P)/2`: the lazy chain has the same invariant vectors, no
/// eigenvalue other than 1 on the unit circle, and so converges
/// geometrically to the same limit.
pub fn stationary(system: &CoinTransitionSystem) -> Result<StationaryCoinDistribution> {
    stationary_with(system, STATIONARY_TOL, STATIONARY_MAX_ITER)
}

pub fn stationary_with(
    system: &CoinTransitionSystem,
    tol: f64,
    max_iterations: usize,
) -> Result<StationaryCoinDistribution> {
    let n = system.len();
    let mut nu = vec![0.0; n];
    nu[system.initial] = 1.0;
    let mut residual = f64::INFINITY;
    for it in 0..=max_iterations {
        let moved = system.step_distribution(&nu);
        residual = nu.iter().zip(&moved).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            return Ok(StationaryCoinDistribution {
                weights: nu,
                iterations: it,
                residual,
            });
        }
        let mut total = 0.0;
        for (a, b) in nu.iter_mut().zip(&moved) {
            *a = 0.5 * (*a + b);
            total += *a;
        }
        for a in nu.iter_mut() {
            *a /= total;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

/// Minimum and maximum of `H(p_alpha)` over all coin states.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtremalEntropies {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Provenance {
    Exact,
    Bounded { budget: usize, sink_mass: f64 },
}

/// A rate in bits per iteration: a point (`lower == upper`) or an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyRateResult {
    pub lower: f64,
    pub upper: f64,
    pub provenance: Provenance,
}

impl EntropyRateResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::Exact
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        value >= self.lower - tol && value <= self.upper + tol
    }
}

/// `sum_alpha mu(alpha) H(p_alpha)`; for truncated systems the sink's
/// unknown entropy is replaced by `[bounds.min, bounds.max]`.
pub fn entropy_rate(
    system: &CoinTransitionSystem,
    mu: &StationaryCoinDistribution,
    bounds: Option<ExtremalEntropies>,
) -> Result<EntropyRateResult> {
    if mu.weights.len() != system.len() {
        return Err(Error::invalid("stationary distribution does not match the system"));
    }
    let known: f64 = system
        .nodes
        .iter()
        .zip(&mu.weights)
        .filter_map(|(n, m)| n.entropy.map(|h| h * m))
        .sum();
    match system.status {
        Status::Closed => Ok(EntropyRateResult {
            lower: known,
            upper: known,
            provenance: Provenance::Exact,
        }),
        Status::Truncated { budget } => {
            let bounds = bounds.ok_or(Error::MissingExtremalBounds)?;
            let sink_mass = system.sink().map_or(0.0, |s| mu.weights[s]);
            Ok(EntropyRateResult {
                lower: known + sink_mass * bounds.min,
                upper: known + sink_mass * bounds.max,
                provenance: Provenance::Bounded { budget, sink_mass },
            })
        }
    }
}

/// Grid and refinement settings for [`extremal_entropies_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalOptions {
    /// Grid points in the polar angle `theta in [0, pi]`.
    pub theta_points: usize,
    /// Grid points in the azimuth `phi in [0, 2 pi)`.
    pub phi_points: usize,
    /// Grid optima refined by Nelder-Mead, per direction.
    pub starts: usize,
    /// Stop refining once the simplex values agree to this many bits.
    pub tolerance: f64,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions {
            theta_points: 256,
            phi_points: 256,
            starts: 4,
            tolerance: 1e-12,
        }
    }
}

/// Entropy of the shift distribution produced by coin state `alpha`.
pub fn profile_entropy(coin: CoinOperator, w: usize, alpha: CoinState) -> Result<f64> {
    Ok(line_shift_profile(coin, w, alpha)?.entropy())
}

/// Extremes of `H(p_alpha)` over the Bloch sphere with default settings.
pub fn extremal_entropies(coin: CoinOperator, w: usize) -> Result<ExtremalEntropies> {
    extremal_entropies_with(coin, w, ExtremalOptions::default())
}

pub fn extremal_entropies_with(coin: CoinOperator, w: usize, options: ExtremalOptions) -> Result<ExtremalEntropies> {
    if w == 0 {
        return Err(Error::invalid("waiting time must be at least 1"));
    }
    let nt = options.theta_points.max(2);
    let np = options.phi_points.max(1);
    let eval = |theta: f64, phi: f64| -> f64 {
        profile_entropy(coin, w, CoinState::from_bloch(theta, phi)).unwrap_or(f64::NAN)
    };
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(nt * np);
    for i in 0..nt {
        let theta = core::f64::consts::PI * i as f64 / (nt - 1) as f64;
        for j in 0..np {
            let phi = 2.0 * core::f64::consts::PI * j as f64 / np as f64;
            samples.push((eval(theta, phi), theta, phi));
        }
    }
    samples.retain(|s| s.0.is_finite());
    if samples.is_empty() {
        return Err(Error::invalid("entropy grid produced no finite values"));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let starts = options.starts.max(1).min(samples.len());
    let step = (core::f64::consts::PI / (nt - 1) as f64).max(1e-3);

    let mut min = samples[0].0;
    for s in &samples[..starts] {
        let v = nelder_mead(|x| eval(x[0], x[1]), [s.1, s.2], step, options.tolerance);
        min = min.min(v);
    }
    let mut max = samples[samples.len() - 1].0;
    for s in samples.iter().rev().take(starts) {
        let v = -nelder_mead(|x| -eval(x[0], x[1]), [s.1, s.2], step, options.tolerance);
        max = max.max(v);
    }
    Ok(ExtremalEntropies { min, max })
}

/// Derivative-free 2D minimization; returns the best value found.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: f64, tol: f64) -> f64 {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut values = simplex.map(|p| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    });
    let g = |p: [f64; 2]| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    for _ in 0..2000 {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let [best, mid, worst] = order;
        let size = (simplex[worst][0] - simplex[best][0]).abs()
            + (simplex[worst][1] - simplex[best][1]).abs()
            + (simplex[mid][0] - simplex[best][0]).abs()
            + (simplex[mid][1] - simplex[best][1]).abs();
        if (values[worst] - values[best]).abs() <= tol && size <= 1e-9 {
            break;
        }
        let centroid = [
            0.5 * (simplex[best][0] + simplex[mid][0]),
            0.5 * (simplex[best][1] + simplex[mid][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[worst][0] - centroid[0]),
                centroid[1] + t * (simplex[worst][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = g(reflected);
        if fr < values[best] {
            let expanded = along(-2.0);
            let fe = g(expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] { along(-0.5) } else { along(0.5) };
            let fc = g(contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for k in [mid, worst] {
                    simplex[k] = [
                        0.5 * (simplex[k][0] + simplex[best][0]),
                        0.5 * (simplex[k][1] + simplex[best][1]),
                    ];
                    values[k] = g(simplex[k]);
                }
            }
        }
    }
    values.into_iter().fold(f64::INFINITY, f64::min)
}

/// Worst-case size and sink-mass estimates for a depth-`k` truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationDiagnostics {
    /// `[(w-1)^(k+1) - 1]/(w-2) + 1`, or `k + 2` at `w = 2`.
    pub predicted_nodes: f64,
    /// `(1 - b(w))^(k+1)`.
    pub predicted_sink_mass: f64,
}

pub fn truncation_diagnostics(coin: CoinOperator, w: usize, k: usize) -> Result<TruncationDiagnostics> {
    if w < 2 {
        return Err(Error::invalid("truncation diagnostics need w >= 2"));
    }
    let predicted_nodes = if w == 2 {
        k as f64 + 2.0
    } else {
        let base = (w - 1) as f64;
        (libm::pow(base, (k + 1) as f64) - 1.0) / (w - 2) as f64 + 1.0
    };
    let b = coin.guaranteed_lr_mass(w);
    Ok(TruncationDiagnostics {
        predicted_nodes,
        predicted_sink_mass: libm::pow(1.0 - b, (k + 1) as f64),
    })
}

/// Explores, solves for `mu` and evaluates the rate in one call. Extremal
/// bounds are computed only when the system turns out truncated.
pub fn solve(
    coin: CoinOperator,
    w: usize,
    c0: CoinState,
    options: ExploreOptions,
) -> Result<(CoinTransitionSystem, StationaryCoinDistribution, EntropyRateResult)> {
    let system = explore(coin, w, c0, options)?;
    let mu = stationary(&system)?;
    let bounds = if system.is_closed() {
        None
    } else {
        Some(extremal_entropies(coin, w)?)
    };
    let rate = entropy_rate(&system, &mu, bounds)?;
    Ok((system, mu, rate))
}
