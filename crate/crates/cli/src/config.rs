//! Run configuration: command-line flags merged over an optional `key = value` file.
//!
//! File grammar: one `key = value` pair per line, keys spelled like the long flags
//! without the leading dashes (`N`, `alpha`, `c-sel`, ...). `#` starts a comment and
//! blank lines are ignored. Unknown or repeated keys are rejected. Flags override file
//! values.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use lambda_asp::{BsAspChain, ModelParams};

use crate::error::CliError;

/// Default output directory when `--out` is not given. Unset means stdout.
pub const OUT_DIR_ENV: &str = "LAMBDA_ASP_OUT_DIR";

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &[
    "N",
    "n-geom",
    "alpha",
    "b",
    "c-sel",
    "s",
    "seed",
    "out",
    "format",
    "threads",
    "x0",
    "replicates",
    "k",
    "n-sample",
    "t",
    "beta1",
    "beta2",
    "csv",
];

/// Keys left out of the config echo because they do not change any result.
const NOT_ECHOED: &[&str] = &["out", "threads"];

#[derive(Debug, Parser)]
#[command(
    name = "lambda-asp",
    version,
    about = "Fixation probabilities under Beta-coalescent reproduction and moderate selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Finite-N and limiting offspring laws, one row per family size.
    Offspring,
    /// Stationary law of the ancestral selection process.
    AspStationary,
    /// Fixation probability from the exact forward chain (N <= 400).
    FixationExact,
    /// Fixation probability by forward Monte Carlo.
    FixationMc,
    /// Both sides of the moment duality on a (k, n, t) grid.
    DualityCheck,
    /// Drift bounds on the stationary mean.
    LyapunovCheck,
    /// pi_N = E[A_eq]/N against the asymptotic law over a parameter grid.
    Sweep,
    /// Bolthausen-Sznitman boundary case against its heuristic.
    BsHeuristic,
    /// Python plotting stub for a CSV written by another subcommand.
    PlotScript,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Offspring => "offspring",
            Self::AspStationary => "asp-stationary",
            Self::FixationExact => "fixation-exact",
            Self::FixationMc => "fixation-mc",
            Self::DualityCheck => "duality-check",
            Self::LyapunovCheck => "lyapunov-check",
            Self::Sweep => "sweep",
            Self::BsHeuristic => "bs-heuristic",
            Self::PlotScript => "plot-script",
        }
    }
}

/// Flags shared by every subcommand. Values stay raw until merged with the file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Population sizes, comma separated.
    #[arg(long = "N", global = true, value_name = "LIST")]
    pub n: Option<String>,
    /// Geometric size grid `start:ratio:count` instead of --N.
    #[arg(long, global = true, value_name = "START:RATIO:COUNT")]
    pub n_geom: Option<String>,
    /// Coalescent parameters in (1, 2), comma separated.
    #[arg(long, global = true, value_name = "LIST")]
    pub alpha: Option<String>,
    /// Selection exponents, s_N = c_sel N^-b, comma separated.
    #[arg(long, global = true, value_name = "LIST")]
    pub b: Option<String>,
    /// Selection prefactor (default 1).
    #[arg(long, global = true)]
    pub c_sel: Option<String>,
    /// Fixed selection strength s_N, instead of --b.
    #[arg(long, global = true)]
    pub s: Option<String>,
    /// Master seed for Monte Carlo runs (default 1).
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output directory (default: $LAMBDA_ASP_OUT_DIR, else stdout).
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Output format: csv or json (default csv).
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<String>,
    /// Initial wildtype count for fixation runs (default N-1: one mutant).
    #[arg(long, global = true)]
    pub x0: Option<String>,
    /// Monte Carlo replicates (default 10000).
    #[arg(long, global = true)]
    pub replicates: Option<String>,
    /// Duality: initial wildtype counts (default 1,N-1).
    #[arg(long, global = true, value_name = "LIST")]
    pub k: Option<String>,
    /// Duality: initial ancestral-line counts (default 1,2,3).
    #[arg(long, global = true, value_name = "LIST")]
    pub n_sample: Option<String>,
    /// Duality: times (default 0.1,1,10).
    #[arg(long, global = true, value_name = "LIST")]
    pub t: Option<String>,
    /// Lower-bound exponent beta1 (default 0.4(alpha-1)).
    #[arg(long, global = true)]
    pub beta1: Option<String>,
    /// Lower-bound exponent beta2 (default 0.8(alpha-1)).
    #[arg(long, global = true)]
    pub beta2: Option<String>,
    /// Plot script: CSV file to plot.
    #[arg(long, global = true)]
    pub csv: Option<String>,
}

impl Flags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("N", &self.n),
            ("n-geom", &self.n_geom),
            ("alpha", &self.alpha),
            ("b", &self.b),
            ("c-sel", &self.c_sel),
            ("s", &self.s),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
            ("threads", &self.threads),
            ("x0", &self.x0),
            ("replicates", &self.replicates),
            ("k", &self.k),
            ("n-sample", &self.n_sample),
            ("t", &self.t),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("csv", &self.csv),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One grid point; which variant depends on the subcommand.
#[derive(Debug, Clone, Copy)]
pub enum Point {
    /// Offspring law: size and alpha only.
    Law {
        n: usize,
        alpha: f64,
    },
    /// Bolthausen-Sznitman boundary: size, b and the resulting s_N.
    Boundary {
        n: usize,
        b: f64,
        s_n: f64,
    },
    Model(ModelParams),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Ordered alpha, then selection, then N (N varies fastest).
    pub grid: Vec<Point>,
    pub seed: u64,
    pub format: Format,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub x0: Option<usize>,
    pub replicates: u64,
    pub ks: Option<Vec<usize>>,
    pub n_samples: Vec<usize>,
    pub times: Vec<f64>,
    pub betas: Option<(f64, f64)>,
    pub csv: Option<PathBuf>,
    /// Resolved key/value pairs that determine the results.
    pub echo: BTreeMap<String, String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses the `key = value` file format.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| config_err(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_err(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        if values.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(config_err(format!("config line {}: key `{key}` given twice", i + 1)));
        }
    }
    Ok(values)
}

/// Merges flags over the config file (if any) and validates the result.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut values = match &cli.flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config file {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in cli.flags.pairs() {
        if let Some(v) = value {
            values.insert(key.to_string(), v.clone());
        }
    }
    RunConfig::from_values(cli.command, values)
}

fn parse_one<V: FromStr>(key: &str, raw: &str) -> Result<V, CliError>
where
    V::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e| config_err(format!("{key}: cannot parse `{}`: {e}", raw.trim())))
}

fn parse_list<V: FromStr>(key: &str, raw: &str) -> Result<Vec<V>, CliError>
where
    V::Err: std::fmt::Display,
{
    if raw.trim().is_empty() {
        return Err(config_err(format!("{key}: empty list")));
    }
    raw.split(',').map(|item| parse_one(key, item)).collect()
}

fn geometric_sizes(raw: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("n-geom: expected start:ratio:count, got `{raw}`")));
    }
    let start: usize = parse_one("n-geom start", parts[0])?;
    let ratio: f64 = parse_one("n-geom ratio", parts[1])?;
    let count: usize = parse_one("n-geom count", parts[2])?;
    if count == 0 {
        return Err(config_err("n-geom: empty grid"));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(config_err(format!("n-geom: ratio must be > 0, got {ratio}")));
    }
    Ok((0..count).map(|i| (start as f64 * ratio.powi(i as i32)).round() as usize).collect())
}

impl RunConfig {
    pub fn from_values(command: Command, values: BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |key: &str| values.get(key).map(String::as_str);
        let format = match get("format").unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(config_err(format!("format: expected csv or json, got `{other}`"))),
        };
        let seed = get("seed").map(|v| parse_one("seed", v)).transpose()?.unwrap_or(1);
        let threads = get("threads").map(|v| parse_one::<usize>("threads", v)).transpose()?;
        if threads == Some(0) {
            return Err(config_err("threads: must be >= 1"));
        }
        let replicates = get("replicates").map(|v| parse_one("replicates", v)).transpose()?.unwrap_or(10_000);
        if replicates == 0 {
            return Err(config_err("replicates: must be >= 1"));
        }
        let beta1 = get("beta1").map(|v| parse_one::<f64>("beta1", v)).transpose()?;
        let beta2 = get("beta2").map(|v| parse_one::<f64>("beta2", v)).transpose()?;
        let betas = match (beta1, beta2) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(config_err("beta1 and beta2 must be given together")),
        };
        let out_dir = get("out")
            .map(str::to_string)
            .or_else(|| std::env::var(OUT_DIR_ENV).ok().filter(|v| !v.is_empty()))
            .map(PathBuf::from);
        let grid = if command == Command::PlotScript { Vec::new() } else { build_grid(command, &values)? };
        let csv = get("csv").map(PathBuf::from);
        if command == Command::PlotScript && csv.is_none() {
            return Err(config_err("plot-script needs --csv"));
        }
        let echo = values
            .iter()
            .filter(|(k, _)| !NOT_ECHOED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(Self {
            command,
            grid,
            seed,
            format,
            out_dir,
            threads,
            x0: get("x0").map(|v| parse_one("x0", v)).transpose()?,
            replicates,
            ks: get("k").map(|v| parse_list("k", v)).transpose()?,
            n_samples: get("n-sample").map(|v| parse_list("n-sample", v)).transpose()?.unwrap_or_else(|| vec![1, 2, 3]),
            times: get("t").map(|v| parse_list("t", v)).transpose()?.unwrap_or_else(|| vec![0.1, 1.0, 10.0]),
            betas,
            csv,
            echo,
        })
    }
}

fn build_grid(command: Command, values: &BTreeMap<String, String>) -> Result<Vec<Point>, CliError> {
    let get = |key: &str| values.get(key).map(String::as_str);
    let sizes = match (get("N"), get("n-geom")) {
        (Some(_), Some(_)) => return Err(config_err("give either N or n-geom, not both")),
        (Some(raw), None) => parse_list::<usize>("N", raw)?,
        (None, Some(raw)) => geometric_sizes(raw)?,
        (None, None) => return Err(config_err("missing N (or n-geom)")),
    };
    let alphas = || -> Result<Vec<f64>, CliError> {
        parse_list("alpha", get("alpha").ok_or_else(|| config_err("missing alpha"))?)
    };
    let bs = || -> Result<Vec<f64>, CliError> { parse_list("b", get("b").ok_or_else(|| config_err("missing b"))?) };
    let invalid = |e: lambda_asp::Error| config_err(e.to_string());
    let mut grid = Vec::new();
    match command {
        Command::Offspring => {
            for alpha in alphas()? {
                for &n in &sizes {
                    lambda_asp::offspring::c_tilde(n, alpha).map_err(invalid)?;
                    grid.push(Point::Law { n, alpha });
                }
            }
        }
        Command::BsHeuristic => {
            for b in bs()? {
                for &n in &sizes {
                    let s_n = BsAspChain::new(n, b).map_err(invalid)?.s_n();
                    grid.push(Point::Boundary { n, b, s_n });
                }
            }
        }
        _ => {
            let c_sel = get("c-sel").map(|v| parse_one::<f64>("c-sel", v)).transpose()?;
            let selections: Vec<(Option<f64>, Option<f64>)> = match (get("b"), get("s")) {
                (Some(_), Some(_)) => return Err(config_err("give either b or s, not both")),
                (Some(_), None) => bs()?.into_iter().map(|b| (Some(b), None)).collect(),
                (None, Some(raw)) => {
                    if c_sel.is_some() {
                        return Err(config_err("c-sel only applies together with b"));
                    }
                    vec![(None, Some(parse_one::<f64>("s", raw)?))]
                }
                (None, None) => return Err(config_err("missing b (or s)")),
            };
            for alpha in alphas()? {
                for &(b, s) in &selections {
                    for &n in &sizes {
                        let params = match (b, s) {
                            (Some(b), _) => ModelParams::with_c_sel(n, alpha, b, c_sel.unwrap_or(1.0)),
                            (None, Some(s)) => ModelParams::with_selection(n, alpha, s),
                            (None, None) => unreachable!("selection rule checked above"),
                        }
                        .map_err(invalid)?;
                        grid.push(Point::Model(params));
                    }
                }
            }
        }
    }
    Ok(grid)
}
