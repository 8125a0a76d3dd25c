//! Command-line grammar and the validated [`RunConfig`] it produces.
//!
//! A `RunConfig` renders back to an argument vector with
//! [`RunConfig::to_args`]; parsing that vector yields the same config, so
//! the rendered form is the canonical spelling of a run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qwalk_entropy::coin_graph::{Mode, DEFAULT_NODE_CAP};
use qwalk_entropy::oracle::TRACE_MAX_DEPTH;
use qwalk_entropy::protocols::{Estimator, DEFAULT_BURN_IN};
use qwalk_entropy::{CoinOperator, CoinState, Lattice};
use serde::Serialize;

const AFTER_HELP: &str = "\
Rates are in bits per iteration (one block of w steps plus a measurement) unless
--per-walk-step is given. CSV columns per subcommand:
  classical    w,estimator,rate_bits,err_bits
  exact        w,mode,status,nodes,rate_bits
  truncated    w,budget,status,nodes,sink_mass,h_min,h_max,lower_bits,upper_bits,
               midpoint_bits,half_width_bits,predicted_nodes,predicted_sink_mass
  bound        w,estimator,rate_bits,err_bits
  scan         w,estimator,rate_bits,err_bits,error
  weak-limit   w,entropy_integral_bits,closed_form_bits,constant_bits
               (with --x: w,x,density)
  oracle       n,block_entropy_bits,partial_rate_bits,conditional_bits
  independent  k,steps,entropy_bits
Exit status: 0 success, 1 usage error, 2 computation error.
Log verbosity is read from RUST_LOG.";

#[derive(Debug, Parser)]
#[command(name = "qwentropy", version, about = "Entropy rates of periodically measured 1D walks", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Coin: `hadamard`, `angle:THETA` (e = cos, f = sin) or `e=RE+IMi,f=RE+IMi`.
    #[arg(long, default_value = "hadamard")]
    pub coin: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Divide rates by w.
    #[arg(long)]
    pub per_walk_step: bool,
    /// Seed of the random stream; required by every stochastic estimator.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Classical walk rates: closed form, or Monte Carlo with --mc.
    #[command(after_help = AFTER_HELP)]
    Classical {
        #[command(flatten)]
        common: CommonArgs,
        /// Waiting times: `N`, `A:B`, `A:B:STEP` or a comma list.
        #[arg(long)]
        w: String,
        /// `line` or `cycle:M`.
        #[arg(long, default_value = "line")]
        lattice: String,
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 1_000_000)]
        iterations: u64,
    },
    /// Exact rate from the closed coin transition system.
    #[command(after_help = AFTER_HELP)]
    Exact {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: usize,
        /// `L`, `R`, `plus`, `minus` or `l,r` as complex numbers.
        #[arg(long, default_value = "L")]
        c0: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Reduced)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        /// Also write the transition system as JSON.
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Certified interval after a bounded number of expansion rounds.
    #[command(after_help = AFTER_HELP)]
    Truncated {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: usize,
        #[arg(long, default_value = "L")]
        c0: String,
        /// Rounds beyond expanding the initial node (0 expands only c0).
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Coin-ignoring upper bound, exact or Monte Carlo.
    #[command(after_help = AFTER_HELP)]
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: String,
        #[arg(long, default_value = "line")]
        lattice: String,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long, default_value_t = 1_000_000)]
        iterations: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: u64,
        #[arg(long, default_value = "L")]
        c0: String,
    },
    /// Sweep estimators over waiting times.
    #[command(after_help = AFTER_HELP)]
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: String,
        #[arg(long, default_value = "line")]
        lattice: String,
        /// Comma list of mc-bound, exact-bound, cw-exact, cw-mc, weak-limit.
        #[arg(long, default_value = "exact-bound")]
        estimators: String,
        #[arg(long, default_value_t = 100_000)]
        iterations: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: u64,
        #[arg(long, default_value = "L")]
        c0: String,
        /// Worker threads; rows are still emitted in order.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Large-w density, its entropy integral and the closed form.
    #[command(after_help = AFTER_HELP)]
    WeakLimit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: String,
        /// Evaluate the density at this position instead.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
    },
    /// Exhaustive joint distributions and partial rates.
    #[command(after_help = AFTER_HELP)]
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: usize,
        /// Sequence length.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "L")]
        c0: String,
        #[arg(long, value_enum, default_value_t = Form::Product)]
        form: Form,
        /// Also write the depth-n outcome tree as JSON.
        #[arg(long)]
        dump_tree: Option<PathBuf>,
    },
    /// Entropy of fresh walks measured after w*k steps.
    #[command(after_help = AFTER_HELP)]
    Independent {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        w: usize,
        /// `N`, `A:B`, `A:B:STEP` or a comma list.
        #[arg(long)]
        k: String,
        #[arg(long, default_value = "line")]
        lattice: String,
        #[arg(long, default_value = "L")]
        c0: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Product,
    Trace,
}

/// A rejected command line.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// Parsed coin with the text it was given as.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoinSpec {
    Hadamard,
    Angle { theta: f64 },
    Params { e: [f64; 2], f: [f64; 2] },
}

impl CoinSpec {
    pub fn operator(&self) -> Result<CoinOperator, UsageError> {
        let op = match *self {
            CoinSpec::Hadamard => Ok(CoinOperator::hadamard()),
            CoinSpec::Angle { theta } => CoinOperator::from_angle(theta),
            CoinSpec::Params { e, f } => CoinOperator::new(Complex64::new(e[0], e[1]), Complex64::new(f[0], f[1])),
        };
        op.map_err(|e| UsageError(format!("invalid coin: {e}")))
    }
}

impl FromStr for CoinSpec {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("hadamard") {
            return Ok(CoinSpec::Hadamard);
        }
        if let Some(t) = s.strip_prefix("angle:") {
            let theta = t.parse::<f64>().map_err(|_| UsageError(format!("bad angle `{t}`")))?;
            return Ok(CoinSpec::Angle { theta });
        }
        let mut e = None;
        let mut f = None;
        for part in s.split(',') {
            match part.split_once('=') {
                Some(("e", v)) => e = Some(parse_complex(v)?),
                Some(("f", v)) => f = Some(parse_complex(v)?),
                _ => return usage(format!("bad coin `{s}`; expected hadamard, angle:THETA or e=..,f=..")),
            }
        }
        match (e, f) {
            (Some(e), Some(f)) => Ok(CoinSpec::Params {
                e: [e.re, e.im],
                f: [f.re, f.im],
            }),
            _ => usage("a parametric coin needs both e and f"),
        }
    }
}

impl fmt::Display for CoinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinSpec::Hadamard => f.write_str("hadamard"),
            CoinSpec::Angle { theta } => write!(f, "angle:{theta:?}"),
            CoinSpec::Params { e, f: ff } => write!(
                f,
                "e={},f={}",
                format_complex(Complex64::new(e[0], e[1])),
                format_complex(Complex64::new(ff[0], ff[1]))
            ),
        }
    }
}

/// Parses `re`, `imi`, `re+imi` or `re-imi` (`i` alone is `1i`).
pub fn parse_complex(s: &str) -> Result<Complex64, UsageError> {
    let t = s.trim();
    let bad = || UsageError(format!("bad complex number `{s}`; expected RE+IMi"));
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // the sign that starts the imaginary part: last +/- not at the start
    // and not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let im = im.trim_start_matches('+').parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    L,
    R,
    Plus,
    Minus,
    Pair { l: [f64; 2], r: [f64; 2] },
}

impl StateSpec {
    pub fn state(&self) -> Result<CoinState, UsageError> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pair = |l: Complex64, r: Complex64| {
            CoinState::new(l, r).map_err(|e| UsageError(format!("invalid initial coin: {e}")))
        };
        match *self {
            StateSpec::L => Ok(CoinState::L),
            StateSpec::R => Ok(CoinState::R),
            StateSpec::Plus => Ok(CoinState::symmetric()),
            StateSpec::Minus => pair(Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            StateSpec::Pair { l, r } => pair(Complex64::new(l[0], l[1]), Complex64::new(r[0], r[1])),
        }
    }
}

impl FromStr for StateSpec {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s.trim() {
            "L" | "l" => Ok(StateSpec::L),
            "R" | "r" => Ok(StateSpec::R),
            "plus" => Ok(StateSpec::Plus),
            "minus" => Ok(StateSpec::Minus),
            other => match other.split_once(',') {
                Some((l, r)) => {
                    let (l, r) = (parse_complex(l)?, parse_complex(r)?);
                    let spec = StateSpec::Pair {
                        l: [l.re, l.im],
                        r: [r.re, r.im],
                    };
                    spec.state()?;
                    Ok(spec)
                }
                None => usage(format!("bad initial coin `{other}`; expected L, R, plus, minus or l,r")),
            },
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::L => f.write_str("L"),
            StateSpec::R => f.write_str("R"),
            StateSpec::Plus => f.write_str("plus"),
            StateSpec::Minus => f.write_str("minus"),
            StateSpec::Pair { l, r } => write!(
                f,
                "{},{}",
                format_complex(Complex64::new(l[0], l[1])),
                format_complex(Complex64::new(r[0], r[1]))
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatticeSpec {
    Line,
    Cycle { m: usize },
}

impl LatticeSpec {
    /// The lattice for a run of `steps` steps from the origin; lines are
    /// sized to fit.
    pub fn lattice(&self, steps: usize) -> Lattice {
        match *self {
            LatticeSpec::Line => Lattice::line_for(steps),
            LatticeSpec::Cycle { m } => Lattice::Cycle { m },
        }
    }
}

impl FromStr for LatticeSpec {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        if s == "line" {
            return Ok(LatticeSpec::Line);
        }
        match s.strip_prefix("cycle:").map(str::parse::<usize>) {
            Some(Ok(m)) if m >= 3 => Ok(LatticeSpec::Cycle { m }),
            Some(Ok(_)) => usage("a cycle needs at least 3 vertices"),
            _ => usage(format!("bad lattice `{s}`; expected line or cycle:M")),
        }
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeSpec::Line => f.write_str("line"),
            LatticeSpec::Cycle { m } => write!(f, "cycle:{m}"),
        }
    }
}

/// Parses `N`, `A:B`, `A:B:STEP` (inclusive) or `N1,N2,..`; all values >= `min`.
pub fn parse_list(s: &str, min: usize) -> Result<Vec<usize>, UsageError> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| UsageError(format!("bad integer `{t}` in `{s}`")))
    };
    let values: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return usage(format!("bad range `{s}`")),
        };
        if step == 0 || b < a {
            return usage(format!("empty range `{s}`"));
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return usage("empty list");
    }
    if let Some(v) = values.iter().find(|&&v| v < min) {
        return usage(format!("value {v} is below the minimum {min}"));
    }
    Ok(values)
}

fn render_list(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Output settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub format: Format,
    pub path: Option<PathBuf>,
    pub per_walk_step: bool,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Task {
    Classical {
        ws: Vec<usize>,
        lattice: LatticeSpec,
        mc: bool,
        iterations: u64,
    },
    Exact {
        w: usize,
        c0: StateSpec,
        mode: Mode,
        node_cap: usize,
        dump_system: Option<PathBuf>,
    },
    Truncated {
        w: usize,
        c0: StateSpec,
        budget: usize,
        node_cap: usize,
        dump_system: Option<PathBuf>,
    },
    Bound {
        ws: Vec<usize>,
        lattice: LatticeSpec,
        method: Method,
        iterations: u64,
        burn_in: u64,
        c0: StateSpec,
    },
    Scan {
        ws: Vec<usize>,
        lattice: LatticeSpec,
        estimators: Vec<Estimator>,
        iterations: u64,
        burn_in: u64,
        c0: StateSpec,
        jobs: usize,
    },
    WeakLimit {
        ws: Vec<usize>,
        x: Option<f64>,
    },
    Oracle {
        w: usize,
        n: usize,
        c0: StateSpec,
        form: Form,
        dump_tree: Option<PathBuf>,
    },
    Independent {
        w: usize,
        ks: Vec<usize>,
        lattice: LatticeSpec,
        c0: StateSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub coin: CoinSpec,
    pub seed: Option<u64>,
    pub output: Output,
}

impl RunConfig {
    /// Parses and validates an argument vector (program name first).
    pub fn parse<I, T>(argv: I) -> Result<Self, ParseFailure>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv).map_err(ParseFailure::Clap)?;
        Self::from_cli(cli).map_err(ParseFailure::Usage)
    }

    pub fn from_cli(cli: Cli) -> Result<Self, UsageError> {
        let (common, task) = match cli.command {
            CommandArgs::Classical {
                common,
                w,
                lattice,
                mc,
                iterations,
            } => (
                common,
                Task::Classical {
                    ws: parse_list(&w, 1)?,
                    lattice: lattice.parse()?,
                    mc,
                    iterations: positive(iterations, "iterations")?,
                },
            ),
            CommandArgs::Exact {
                common,
                w,
                c0,
                mode,
                node_cap,
                dump_system,
            } => (
                common,
                Task::Exact {
                    w: positive(w, "w")?,
                    c0: c0.parse()?,
                    mode: match mode {
                        ModeArg::Full => Mode::Full,
                        ModeArg::Reduced => Mode::Reduced,
                    },
                    node_cap: positive(node_cap, "node cap")?,
                    dump_system,
                },
            ),
            CommandArgs::Truncated {
                common,
                w,
                c0,
                budget,
                node_cap,
                dump_system,
            } => {
                if w < 2 {
                    return usage("truncation needs w >= 2");
                }
                (
                    common,
                    Task::Truncated {
                        w,
                        c0: c0.parse()?,
                        budget,
                        node_cap: positive(node_cap, "node cap")?,
                        dump_system,
                    },
                )
            }
            CommandArgs::Bound {
                common,
                w,
                lattice,
                method,
                iterations,
                burn_in,
                c0,
            } => (
                common,
                Task::Bound {
                    ws: parse_list(&w, 1)?,
                    lattice: lattice.parse()?,
                    method,
                    iterations: positive(iterations, "iterations")?,
                    burn_in,
                    c0: c0.parse()?,
                },
            ),
            CommandArgs::Scan {
                common,
                w,
                lattice,
                estimators,
                iterations,
                burn_in,
                c0,
                jobs,
            } => {
                let estimators = estimators
                    .split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<Estimator>()
                            .map_err(|_| UsageError(format!("unknown estimator `{e}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (
                    common,
                    Task::Scan {
                        ws: parse_list(&w, 1)?,
                        lattice: lattice.parse()?,
                        estimators,
                        iterations: positive(iterations, "iterations")?,
                        burn_in,
                        c0: c0.parse()?,
                        jobs: positive(jobs, "jobs")?,
                    },
                )
            }
            CommandArgs::WeakLimit { common, w, x } => {
                if x.is_some_and(|x| !x.is_finite()) {
                    return usage("x must be finite");
                }
                (
                    common,
                    Task::WeakLimit {
                        ws: parse_list(&w, 1)?,
                        x,
                    },
                )
            }
            CommandArgs::Oracle {
                common,
                w,
                n,
                c0,
                form,
                dump_tree,
            } => {
                if form == Form::Trace && n > TRACE_MAX_DEPTH {
                    return usage(format!("the trace form handles n <= {TRACE_MAX_DEPTH}"));
                }
                (
                    common,
                    Task::Oracle {
                        w: positive(w, "w")?,
                        n: positive(n, "n")?,
                        c0: c0.parse()?,
                        form,
                        dump_tree,
                    },
                )
            }
            CommandArgs::Independent {
                common,
                w,
                k,
                lattice,
                c0,
            } => (
                common,
                Task::Independent {
                    w: positive(w, "w")?,
                    ks: parse_list(&k, 1)?,
                    lattice: lattice.parse()?,
                    c0: c0.parse()?,
                },
            ),
        };
        let coin: CoinSpec = common.coin.parse()?;
        coin.operator()?;
        let config = RunConfig {
            task,
            coin,
            seed: common.seed,
            output: Output {
                format: common.format,
                path: common.output,
                per_walk_step: common.per_walk_step,
            },
        };
        if config.is_stochastic() && config.seed.is_none() {
            return usage("this run is stochastic and needs --seed");
        }
        Ok(config)
    }

    /// Whether any part of the run draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        match &self.task {
            Task::Classical { mc, .. } => *mc,
            Task::Bound { method, .. } => *method == Method::Mc,
            Task::Scan { estimators, .. } => estimators.iter().any(|e| e.is_stochastic()),
            _ => false,
        }
    }

    pub fn command_name(&self) -> &'static str {
        match self.task {
            Task::Classical { .. } => "classical",
            Task::Exact { .. } => "exact",
            Task::Truncated { .. } => "truncated",
            Task::Bound { .. } => "bound",
            Task::Scan { .. } => "scan",
            Task::WeakLimit { .. } => "weak-limit",
            Task::Oracle { .. } => "oracle",
            Task::Independent { .. } => "independent",
        }
    }

    /// Canonical argument vector, program name included. Every option is
    /// spelled out, defaults too.
    pub fn to_args(&self) -> Vec<String> {
        let mut a: Vec<String> = vec!["qwentropy".into(), self.command_name().into()];
        let mut opt = |k: &str, v: String| {
            a.push(format!("--{k}"));
            a.push(v);
        };
        match &self.task {
            Task::Classical {
                ws,
                lattice,
                mc: _,
                iterations,
            } => {
                opt("w", render_list(ws));
                opt("lattice", lattice.to_string());
                opt("iterations", iterations.to_string());
            }
            Task::Exact {
                w,
                c0,
                mode,
                node_cap,
                dump_system,
            } => {
                opt("w", w.to_string());
                opt("c0", c0.to_string());
                opt("mode", mode_name(*mode).into());
                opt("node-cap", node_cap.to_string());
                if let Some(p) = dump_system {
                    opt("dump-system", p.display().to_string());
                }
            }
            Task::Truncated {
                w,
                c0,
                budget,
                node_cap,
                dump_system,
            } => {
                opt("w", w.to_string());
                opt("c0", c0.to_string());
                opt("budget", budget.to_string());
                opt("node-cap", node_cap.to_string());
                if let Some(p) = dump_system {
                    opt("dump-system", p.display().to_string());
                }
            }
            Task::Bound {
                ws,
                lattice,
                method,
                iterations,
                burn_in,
                c0,
            } => {
                opt("w", render_list(ws));
                opt("lattice", lattice.to_string());
                opt(
                    "method",
                    match method {
                        Method::Exact => "exact",
                        Method::Mc => "mc",
                    }
                    .into(),
                );
                opt("iterations", iterations.to_string());
                opt("burn-in", burn_in.to_string());
                opt("c0", c0.to_string());
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
                opt("w", render_list(ws));
                opt("lattice", lattice.to_string());
                opt(
                    "estimators",
                    estimators.iter().map(|e| e.id()).collect::<Vec<_>>().join(","),
                );
                opt("iterations", iterations.to_string());
                opt("burn-in", burn_in.to_string());
                opt("c0", c0.to_string());
                opt("jobs", jobs.to_string());
            }
            Task::WeakLimit { ws, x } => {
                opt("w", render_list(ws));
                if let Some(x) = x {
                    opt("x", format!("{x:?}"));
                }
            }
            Task::Oracle {
                w,
                n,
                c0,
                form,
                dump_tree,
            } => {
                opt("w", w.to_string());
                opt("n", n.to_string());
                opt("c0", c0.to_string());
                opt(
                    "form",
                    match form {
                        Form::Product => "product",
                        Form::Trace => "trace",
                    }
                    .into(),
                );
                if let Some(p) = dump_tree {
                    opt("dump-tree", p.display().to_string());
                }
            }
            Task::Independent { w, ks, lattice, c0 } => {
                opt("w", w.to_string());
                opt("k", render_list(ks));
                opt("lattice", lattice.to_string());
                opt("c0", c0.to_string());
            }
        }
        opt("coin", self.coin.to_string());
        opt(
            "format",
            match self.output.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
            .into(),
        );
        if let Some(p) = &self.output.path {
            opt("output", p.display().to_string());
        }
        if let Some(s) = self.seed {
            opt("seed", s.to_string());
        }
        if self.output.per_walk_step {
            a.push("--per-walk-step".into());
        }
        if let Task::Classical { mc: true, .. } = self.task {
            a.push("--mc".into());
        }
        a
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "full",
        Mode::Reduced => "reduced",
    }
}

fn positive<T: PartialOrd + Default + fmt::Display + Copy>(v: T, what: &str) -> Result<T, UsageError> {
    if v > T::default() {
        Ok(v)
    } else {
        usage(format!("{what} must be positive"))
    }
}

/// Why an argument vector did not produce a config.
#[derive(Debug)]
pub enum ParseFailure {
    /// Grammar errors, and `--help` / `--version` requests.
    Clap(clap::Error),
    Usage(UsageError),
}
