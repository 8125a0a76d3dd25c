//! The `qwentropy` command line: argument handling, dispatch to the engines
//! and CSV/JSON reports.

pub mod config;
mod report;

use std::fs;
use std::io::Write;

use log::info;
use qwalk_entropy::coin_graph::{
    entropy_rate, explore, extremal_entropies, solve, stationary, truncation_diagnostics, Budget, CoinTransitionSystem,
    ExploreOptions, Mode, NodeKind, StationaryCoinDistribution,
};
use qwalk_entropy::oracle::{block_entropies, joint_distribution, joint_distribution_trace, OutcomeTree};
use qwalk_entropy::protocols::{
    independent_entropy, scan_plan, scan_row, Estimator, ProtocolConfig, ScanRow, ScanSettings,
};
use qwalk_entropy::weak_limit::{closed_form, density, entropy_integral, weak_limit_constant};
use qwalk_entropy::CoinOperator;
use rayon::prelude::*;
use serde_json::{json, Value};

use config::{Form, LatticeSpec, Method, ParseFailure, RunConfig, Task};
pub use report::{Cell, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;

/// A failure after the arguments were accepted.
#[derive(Debug)]
pub struct RunError {
    pub kind: String,
    pub message: String,
}

impl From<qwalk_entropy::Error> for RunError {
    fn from(e: qwalk_entropy::Error) -> Self {
        RunError {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError {
            kind: "io".into(),
            message: e.to_string(),
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Runs one invocation and returns the exit status. `args` includes the
/// program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::parse(args) {
        Ok(c) => c,
        Err(ParseFailure::Clap(e)) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = writeln!(stderr, "{}", error_json("usage", text.trim_end()));
                    EXIT_USAGE
                }
            };
        }
        Err(ParseFailure::Usage(e)) => {
            let _ = writeln!(stderr, "{}", error_json("usage", &e.0));
            return EXIT_USAGE;
        }
    };
    match execute(&config) {
        Ok((report, status)) => {
            let text = report.render(config.output.format, &config);
            let written = match &config.output.path {
                Some(path) => fs::write(path, text.as_bytes()),
                None => stdout.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => status,
                Err(e) => {
                    let _ = writeln!(stderr, "{}", error_json("io", &e.to_string()));
                    EXIT_COMPUTATION
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e.kind, &e.message));
            EXIT_COMPUTATION
        }
    }
}

/// Evaluates a validated config into a report and its exit status.
pub fn execute(config: &RunConfig) -> Result<(Report, i32), RunError> {
    // validated during parsing
    let coin = config.coin.operator().expect("coin checked at parse time");
    let per_step = config.output.per_walk_step;
    let scale = |w: usize, v: f64| if per_step { v / w as f64 } else { v };
    let seed = config.seed.unwrap_or(0);
    info!("running {}", config.command_name());

    match &config.task {
        Task::Classical {
            ws,
            lattice,
            mc,
            iterations,
        } => {
            let est = if *mc { Estimator::CwMc } else { Estimator::CwExact };
            let settings = ScanSettings {
                iterations: *iterations,
                seed,
                protocol: ProtocolConfig::default(),
            };
            let rows = estimator_rows(coin, *lattice, ws, est, &settings)?;
            Ok((rate_report(rows, scale), EXIT_OK))
        }
        Task::Bound {
            ws,
            lattice,
            method,
            iterations,
            burn_in,
            c0,
        } => {
            let est = match method {
                Method::Exact => Estimator::ExactBound,
                Method::Mc => Estimator::McBound,
            };
            let settings = ScanSettings {
                iterations: *iterations,
                seed,
                protocol: ProtocolConfig {
                    c0: c0.state().expect("checked at parse time"),
                    burn_in: *burn_in,
                },
            };
            let rows = estimator_rows(coin, *lattice, ws, est, &settings)?;
            Ok((rate_report(rows, scale), EXIT_OK))
        }
        Task::Scan {
            ws,
            lattice,
            estimators,
            iterations,
            burn_in,
            c0,
            jobs,
        } => {
            let settings = ScanSettings {
                iterations: *iterations,
                seed,
                protocol: ProtocolConfig {
                    c0: c0.state().expect("checked at parse time"),
                    burn_in: *burn_in,
                },
            };
            let plan = scan_plan(ws, estimators, seed);
            let eval = |&(w, e, s): &(usize, Estimator, u64)| scan_row(coin, lattice.lattice(w), w, e, &settings, s);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(*jobs)
                .build()
                .map_err(|e| RunError {
                    kind: "thread-pool".into(),
                    message: e.to_string(),
                })?;
            let results: Vec<_> = pool.install(|| plan.par_iter().map(eval).collect());
            let mut report = Report::new(&["w", "estimator", "rate_bits", "err_bits", "error"]);
            let mut ok = 0;
            for ((w, e, _), r) in plan.iter().zip(results) {
                match r {
                    Ok(row) => {
                        ok += 1;
                        report.push(vec![
                            Cell::Int(*w as i64),
                            Cell::Text(e.id().into()),
                            Cell::Float(scale(*w, row.rate_bits)),
                            opt_float(row.err_bits.map(|x| scale(*w, x))),
                            Cell::Missing,
                        ]);
                    }
                    Err(err) => report.push(vec![
                        Cell::Int(*w as i64),
                        Cell::Text(e.id().into()),
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Text(format!("{}: {err}", err.kind())),
                    ]),
                }
            }
            let status = if ok > 0 { EXIT_OK } else { EXIT_COMPUTATION };
            Ok((report, status))
        }
        Task::Exact {
            w,
            c0,
            mode,
            node_cap,
            dump_system,
        } => {
            let options = ExploreOptions {
                mode: *mode,
                budget: Budget::Unlimited,
                node_cap: *node_cap,
            };
            let (system, mu, rate) = solve(coin, *w, c0.state().expect("checked at parse time"), options)?;
            if let Some(path) = dump_system {
                fs::write(path, system_json(&system, &mu).to_string())?;
            }
            let mut report = Report::new(&["w", "mode", "status", "nodes", "rate_bits"]);
            report.push(vec![
                Cell::Int(*w as i64),
                Cell::Text(mode_name(*mode).into()),
                Cell::Text(status_name(&system).into()),
                Cell::Int(system.len() as i64),
                Cell::Float(scale(*w, rate.lower)),
            ]);
            Ok((report, EXIT_OK))
        }
        Task::Truncated {
            w,
            c0,
            budget,
            node_cap,
            dump_system,
        } => {
            let options = ExploreOptions {
                mode: Mode::Reduced,
                budget: Budget::iterations(*budget),
                node_cap: *node_cap,
            };
            let system = explore(coin, *w, c0.state().expect("checked at parse time"), options)?;
            let mu = stationary(&system)?;
            let bounds = extremal_entropies(coin, *w)?;
            let rate = entropy_rate(&system, &mu, Some(bounds))?;
            let diag = truncation_diagnostics(coin, *w, *budget)?;
            if let Some(path) = dump_system {
                fs::write(path, system_json(&system, &mu).to_string())?;
            }
            let sink_mass = system.sink().map_or(0.0, |s| mu.weights[s]);
            let mut report = Report::new(&[
                "w",
                "budget",
                "status",
                "nodes",
                "sink_mass",
                "h_min",
                "h_max",
                "lower_bits",
                "upper_bits",
                "midpoint_bits",
                "half_width_bits",
                "predicted_nodes",
                "predicted_sink_mass",
            ]);
            report.push(vec![
                Cell::Int(*w as i64),
                Cell::Int(*budget as i64),
                Cell::Text(status_name(&system).into()),
                Cell::Int(system.len() as i64),
                Cell::Float(sink_mass),
                Cell::Float(scale(*w, bounds.min)),
                Cell::Float(scale(*w, bounds.max)),
                Cell::Float(scale(*w, rate.lower)),
                Cell::Float(scale(*w, rate.upper)),
                Cell::Float(scale(*w, rate.midpoint())),
                Cell::Float(scale(*w, rate.half_width())),
                count_cell(diag.predicted_nodes),
                Cell::Float(diag.predicted_sink_mass),
            ]);
            Ok((report, EXIT_OK))
        }
        Task::WeakLimit { ws, x } => {
            let mut ws = ws.clone();
            ws.sort_unstable();
            ws.dedup();
            let report = match x {
                Some(x) => {
                    let mut report = Report::new(&["w", "x", "density"]);
                    for &w in &ws {
                        let d = density(*x, w as f64)?;
                        report.push(vec![Cell::Int(w as i64), Cell::Float(*x), Cell::Float(d)]);
                    }
                    report
                }
                None => {
                    let mut report = Report::new(&["w", "entropy_integral_bits", "closed_form_bits", "constant_bits"]);
                    for &w in &ws {
                        let integral = entropy_integral(w as f64)?;
                        let closed = closed_form(w as f64)?;
                        report.push(vec![
                            Cell::Int(w as i64),
                            Cell::Float(scale(w, integral)),
                            Cell::Float(scale(w, closed)),
                            Cell::Float(weak_limit_constant()),
                        ]);
                    }
                    report
                }
            };
            Ok((report, EXIT_OK))
        }
        Task::Oracle {
            w,
            n,
            c0,
            form,
            dump_tree,
        } => {
            let c0 = c0.state().expect("checked at parse time");
            let hs = match form {
                Form::Product => block_entropies(coin, *w, c0, *n)?,
                Form::Trace => (1..=*n)
                    .map(|d| joint_distribution_trace(coin, *w, c0, d).map(|t| t.entropy()))
                    .collect::<Result<_, _>>()?,
            };
            if let Some(path) = dump_tree {
                let tree = match form {
                    Form::Product => joint_distribution(coin, *w, c0, *n)?,
                    Form::Trace => joint_distribution_trace(coin, *w, c0, *n)?,
                };
                fs::write(path, tree_json(&tree).to_string())?;
            }
            let mut report = Report::new(&["n", "block_entropy_bits", "partial_rate_bits", "conditional_bits"]);
            for (i, &h) in hs.iter().enumerate() {
                let prev = if i == 0 { 0.0 } else { hs[i - 1] };
                report.push(vec![
                    Cell::Int(i as i64 + 1),
                    Cell::Float(h),
                    Cell::Float(scale(*w, h / (i + 1) as f64)),
                    Cell::Float(scale(*w, h - prev)),
                ]);
            }
            Ok((report, EXIT_OK))
        }
        Task::Independent { w, ks, lattice, c0 } => {
            let c0 = c0.state().expect("checked at parse time");
            let mut report = Report::new(&["k", "steps", "entropy_bits"]);
            for &k in ks {
                let steps = w.checked_mul(k).ok_or_else(|| RunError {
                    kind: "invalid-argument".into(),
                    message: "w * k overflows".into(),
                })?;
                let h = independent_entropy(coin, *w, k, lattice.lattice(steps), c0)?;
                report.push(vec![Cell::Int(k as i64), Cell::Int(steps as i64), Cell::Float(h)]);
            }
            Ok((report, EXIT_OK))
        }
    }
}

/// One estimator over a list of waiting times, seeded like a scan; the
/// first failure aborts.
fn estimator_rows(
    coin: CoinOperator,
    lattice: LatticeSpec,
    ws: &[usize],
    est: Estimator,
    settings: &ScanSettings,
) -> Result<Vec<ScanRow>, RunError> {
    scan_plan(ws, &[est], settings.seed)
        .into_iter()
        .map(|(w, e, s)| scan_row(coin, lattice.lattice(w), w, e, settings, s).map_err(RunError::from))
        .collect()
}

fn rate_report(rows: Vec<ScanRow>, scale: impl Fn(usize, f64) -> f64) -> Report {
    let mut report = Report::new(&["w", "estimator", "rate_bits", "err_bits"]);
    for row in rows {
        report.push(vec![
            Cell::Int(row.w as i64),
            Cell::Text(row.estimator.id().into()),
            Cell::Float(scale(row.w, row.rate_bits)),
            opt_float(row.err_bits.map(|x| scale(row.w, x))),
        ]);
    }
    report
}

/// Whole counts print as integers while they are exact in `f64`.
fn count_cell(v: f64) -> Cell {
    if v.is_finite() && v.abs() < 9.0e15 && v.fract() == 0.0 {
        Cell::Int(v as i64)
    } else {
        Cell::Float(v)
    }
}

fn opt_float(v: Option<f64>) -> Cell {
    v.map_or(Cell::Missing, Cell::Float)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "full",
        Mode::Reduced => "reduced",
    }
}

fn status_name(system: &CoinTransitionSystem) -> &'static str {
    if system.is_closed() {
        "closed"
    } else {
        "truncated"
    }
}

fn complex(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

fn coin_json(coin: &CoinOperator) -> Value {
    json!({ "e": complex(coin.e()), "f": complex(coin.f()) })
}

/// The transition system with its stationary weights; complex numbers are
/// `[re, im]` pairs.
pub fn system_json(system: &CoinTransitionSystem, mu: &StationaryCoinDistribution) -> Value {
    let nodes: Vec<Value> = system
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let (kind, state) = match node.kind {
                NodeKind::Concrete { state } => {
                    ("concrete", json!({ "l": complex(state.l()), "r": complex(state.r()) }))
                }
                NodeKind::MergedLr => ("merged-lr", Value::Null),
                NodeKind::UnknownSink => ("unknown-sink", Value::Null),
            };
            json!({
                "index": i,
                "kind": kind,
                "state": state,
                "depth": node.depth,
                "expanded": node.expanded,
                "entropy_bits": node.entropy,
                "shifts": node.distribution.as_ref().map(|d| d.probabilities.clone()),
                "stationary_weight": mu.weights[i],
            })
        })
        .collect();
    let transitions: Vec<Value> = system
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, p)| json!([i, j, p])))
        .collect();
    json!({
        "w": system.w,
        "coin": coin_json(&system.coin),
        "mode": mode_name(system.mode),
        "status": status_name(system),
        "initial": system.initial,
        "nodes": nodes,
        "transitions": transitions,
        "stationary_iterations": mu.iterations,
        "stationary_residual": mu.residual,
    })
}

pub fn tree_json(tree: &OutcomeTree) -> Value {
    let leaves: Vec<Value> = tree
        .leaves
        .iter()
        .map(|l| json!({ "sequence": l.sequence, "probability": l.probability }))
        .collect();
    json!({
        "w": tree.w,
        "coin": coin_json(&tree.coin),
        "c0": { "l": complex(tree.c0.l()), "r": complex(tree.c0.r()) },
        "depth": tree.depth,
        "entropy_bits": tree.entropy(),
        "pruned_mass": tree.pruned_mass,
        "leaves": leaves,
    })
}
