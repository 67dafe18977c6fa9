//! Per-point computations of each subcommand, gathered into one table.

use lambda_asp::asp::stationary_distribution;
use lambda_asp::duality::DualityCheck;
use lambda_asp::forward::{build_frequency_generator, fixation_prob_exact, fixation_prob_mc, DENSE_MAX_N};
use lambda_asp::lyapunov::{default_betas, lower_bound_check, sandwich_check, upper_bound_check};
use lambda_asp::model::{asymptotic_pi, bs_heuristic_pi};
use lambda_asp::offspring::limit_weight;
use lambda_asp::{AspChain, BsAspChain, ModelParams, OffspringLaw};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, Point, RunConfig};

/// Largest accepted `|p̃_0 + Σ p̃_k − 1|`.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Largest accepted relative global-balance residual of a stationary solve.
pub const BALANCE_TOL: f64 = 1e-8;
/// Largest accepted duality gap.
pub const DUALITY_TOL: f64 = 1e-8;
/// Sweep rows include the exact forward solution up to this size.
pub const SWEEP_EXACT_MAX_N: usize = 200;

/// Result table of one run, rows in grid order.
#[derive(Debug, Clone)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// One small record per grid point.
    pub summaries: Vec<Value>,
    /// One full record per grid point (JSON output).
    pub details: Vec<Value>,
    /// `grid index: message` for every failed point.
    pub failures: Vec<String>,
}

/// Output of one grid point. `rows` omit the parameter prefix and the error column.
struct PointOutput {
    rows: Vec<Vec<String>>,
    summary: Value,
    detail: Option<Value>,
    failure: Option<String>,
}

impl PointOutput {
    fn new(rows: Vec<Vec<String>>, summary: Value) -> Self {
        Self { rows, summary, detail: None, failure: None }
    }
}

type PointResult = lambda_asp::Result<PointOutput>;

/// Shortest round-trip decimal form; empty for non-finite values.
pub fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map(|n| n.to_string()).unwrap_or_default()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn prefix_header(command: Command) -> Vec<&'static str> {
    match command {
        Command::Offspring => vec!["N", "alpha"],
        Command::BsHeuristic => vec!["N", "b", "s_N"],
        _ => vec!["N", "alpha", "b", "s_N"],
    }
}

fn prefix(point: &Point) -> Vec<String> {
    match point {
        Point::Law { n, alpha } => vec![n.to_string(), num(*alpha)],
        Point::Boundary { n, b, s_n } => vec![n.to_string(), num(*b), num(*s_n)],
        Point::Model(p) => vec![p.n().to_string(), num(p.alpha()), opt_num(p.b()), num(p.s_n())],
    }
}

fn point_json(point: &Point) -> Value {
    match point {
        Point::Law { n, alpha } => json!({ "N": n, "alpha": alpha }),
        Point::Boundary { n, b, s_n } => json!({ "N": n, "b": b, "s_N": s_n }),
        Point::Model(p) => json!({ "N": p.n(), "alpha": p.alpha(), "b": p.b(), "s_N": p.s_n() }),
    }
}

fn body_header(command: Command) -> Vec<&'static str> {
    match command {
        Command::Offspring => vec!["k", "p_finite", "p_limit"],
        Command::AspStationary => vec!["n", "pi_n"],
        Command::FixationExact | Command::FixationMc => vec!["x0", "method", "pi_hat", "std_error", "seed"],
        Command::DualityCheck => vec!["k", "n", "t", "lhs", "rhs", "gap"],
        Command::LyapunovCheck => {
            vec!["beta1", "beta2", "max_over_dN", "argmax", "min_over_dN", "argmin", "d_N", "E_A_eq", "sandwich_ok"]
        }
        Command::Sweep => vec!["d_N", "pi_dual", "pi_asymptotic", "ratio", "pi_exact_forward", "abs_diff"],
        Command::BsHeuristic => vec!["pi_dual", "pi_heuristic", "ratio", "balance_residual"],
        Command::PlotScript => Vec::new(),
    }
}

fn model(point: &Point) -> &ModelParams {
    match point {
        Point::Model(p) => p,
        _ => unreachable!("grid of this subcommand holds model points"),
    }
}

fn offspring(n: usize, alpha: f64) -> PointResult {
    let law = OffspringLaw::build(n, alpha)?;
    let residual = law.normalization_residual();
    let finite: Vec<f64> = (0..=n).map(|k| law.weight(k)).collect();
    let limit = (0..=n).map(|k| limit_weight(k, alpha)).collect::<lambda_asp::Result<Vec<f64>>>()?;
    let rows = (0..=n).map(|k| vec![k.to_string(), num(finite[k]), num(limit[k])]).collect();
    let summary = json!({
        "N": n,
        "alpha": alpha,
        "c_tilde": law.c_tilde(),
        "p0": law.p0(),
        "p0_closed": law.p0_closed(),
        "mean": law.mean(),
        "normalization_residual": residual,
    });
    let mut detail = summary.clone();
    detail["p_finite"] = json!(finite);
    detail["p_limit"] = json!(limit);
    let mut out = PointOutput::new(rows, summary);
    out.detail = Some(detail);
    if residual > NORMALIZATION_TOL {
        out.failure = Some(format!("normalization residual {residual:e} > {NORMALIZATION_TOL:e}"));
    }
    Ok(out)
}

fn balance_failure(residual: f64) -> Option<String> {
    (residual > BALANCE_TOL).then(|| format!("balance residual {residual:e} > {BALANCE_TOL:e}"))
}

fn asp_stationary(p: &ModelParams) -> PointResult {
    let dist = stationary_distribution(&AspChain::new(*p)?)?;
    let rows = dist.weights.iter().enumerate().map(|(i, w)| vec![(i + 1).to_string(), num(*w)]).collect();
    let mut summary = point_json(&Point::Model(*p));
    summary["E_A_eq"] = json!(dist.mean);
    summary["pi_N"] = json!(dist.pi_n_dual());
    summary["balance_residual"] = json!(dist.balance_residual);
    let mut detail = summary.clone();
    detail["pi_n"] = json!(dist.weights);
    let mut out = PointOutput::new(rows, summary);
    out.detail = Some(detail);
    out.failure = balance_failure(dist.balance_residual);
    Ok(out)
}

fn default_x0(cfg: &RunConfig, p: &ModelParams) -> usize {
    cfg.x0.unwrap_or(p.n() - 1)
}

fn fixation_exact(cfg: &RunConfig, p: &ModelParams) -> PointResult {
    let x0 = default_x0(cfg, p);
    let pi = fixation_prob_exact(&build_frequency_generator(p)?, x0)?;
    let mut summary = point_json(&Point::Model(*p));
    summary["x0"] = json!(x0);
    summary["method"] = json!("exact");
    summary["pi_hat"] = json!(pi);
    summary["std_error"] = json!(0.0);
    let rows = vec![vec![x0.to_string(), "exact".into(), num(pi), num(0.0), String::new()]];
    Ok(PointOutput::new(rows, summary))
}

fn fixation_mc(cfg: &RunConfig, p: &ModelParams) -> PointResult {
    let x0 = default_x0(cfg, p);
    let est = fixation_prob_mc(p, x0, cfg.replicates, cfg.seed)?;
    let mut summary = point_json(&Point::Model(*p));
    summary["x0"] = json!(x0);
    summary["method"] = json!("mc");
    summary["pi_hat"] = json!(est.point);
    summary["std_error"] = json!(est.std_error);
    summary["replicates"] = json!(est.replicates);
    summary["seed"] = json!(est.seed);
    let rows = vec![vec![x0.to_string(), "mc".into(), num(est.point), num(est.std_error), est.seed.to_string()]];
    Ok(PointOutput::new(rows, summary))
}

fn duality(cfg: &RunConfig, p: &ModelParams) -> PointResult {
    let ks = cfg.ks.clone().unwrap_or_else(|| vec![1, p.n() - 1]);
    let report = DualityCheck::new(p)?.report(&ks, &cfg.n_samples, &cfg.times)?;
    let rows = report
        .points
        .iter()
        .map(|q| vec![q.k.to_string(), q.n.to_string(), num(q.t), num(q.lhs), num(q.rhs), num(q.gap)])
        .collect();
    let mut summary = point_json(&Point::Model(*p));
    summary["max_gap"] = json!(report.max_gap);
    summary["points"] = json!(report.points.len());
    let max_gap = report.max_gap;
    let mut out = PointOutput::new(rows, summary);
    out.detail = Some(serde_json::to_value(&report).expect("duality report serializes"));
    if max_gap > DUALITY_TOL {
        out.failure = Some(format!("duality gap {max_gap:e} > {DUALITY_TOL:e}"));
    }
    Ok(out)
}

fn lyapunov(cfg: &RunConfig, p: &ModelParams) -> PointResult {
    let chain = AspChain::new(*p)?;
    let (beta1, beta2) = cfg.betas.unwrap_or_else(|| default_betas(p.alpha()));
    let upper = upper_bound_check(&chain)?;
    let lower = lower_bound_check(&chain, beta1, beta2)?;
    let sandwich = sandwich_check(&chain, beta1, beta2)?;
    let mut summary = point_json(&Point::Model(*p));
    summary["beta1"] = json!(beta1);
    summary["beta2"] = json!(beta2);
    summary["max_over_dN"] = json!(upper.max_over_dn);
    summary["argmax"] = json!(upper.argmax);
    summary["min_over_dN"] = json!(lower.min_over_dn);
    summary["argmin"] = json!(lower.argmin);
    summary["d_N"] = json!(upper.d_n);
    summary["E_A_eq"] = json!(sandwich.mean);
    summary["sandwich_ok"] = json!(sandwich.holds);
    let rows = vec![vec![
        num(beta1),
        num(beta2),
        num(upper.max_over_dn),
        upper.argmax.to_string(),
        num(lower.min_over_dn),
        lower.argmin.to_string(),
        num(upper.d_n),
        num(sandwich.mean),
        sandwich.holds.to_string(),
    ]];
    let mut out = PointOutput::new(rows, summary);
    if !sandwich.holds {
        out.failure = Some(format!("sandwich violated: {} <= {} <= {}", sandwich.lower, sandwich.mean, sandwich.upper));
    }
    Ok(out)
}

fn sweep(p: &ModelParams) -> PointResult {
    let chain = AspChain::new(*p)?;
    let dist = stationary_distribution(&chain)?;
    let pi_dual = dist.pi_n_dual();
    let pi_asym = asymptotic_pi(p);
    let ratio = pi_dual / pi_asym;
    let d_n = chain.derived().d_n;
    let exact = if p.n() <= SWEEP_EXACT_MAX_N.min(DENSE_MAX_N) {
        Some(fixation_prob_exact(&build_frequency_generator(p)?, p.n() - 1)?)
    } else {
        None
    };
    let diff = exact.map(|e| (pi_dual - e).abs());
    let mut summary = point_json(&Point::Model(*p));
    summary["d_N"] = json!(d_n);
    summary["pi_dual"] = json!(pi_dual);
    summary["pi_asymptotic"] = json!(pi_asym);
    summary["ratio"] = json!(ratio);
    summary["pi_exact_forward"] = json!(exact);
    summary["abs_diff"] = json!(diff);
    summary["balance_residual"] = json!(dist.balance_residual);
    let rows = vec![vec![opt_num(d_n), num(pi_dual), num(pi_asym), num(ratio), opt_num(exact), opt_num(diff)]];
    let mut out = PointOutput::new(rows, summary);
    out.failure = balance_failure(dist.balance_residual);
    Ok(out)
}

fn bs_heuristic(n: usize, b: f64) -> PointResult {
    let chain = BsAspChain::new(n, b)?;
    let dist = stationary_distribution(&chain)?;
    let pi_dual = dist.pi_n_dual();
    let pi_h = bs_heuristic_pi(n, b)?;
    let mut summary = json!({ "N": n, "b": b, "s_N": chain.s_n(), "c_N": chain.c_n() });
    summary["pi_dual"] = json!(pi_dual);
    summary["pi_heuristic"] = json!(pi_h);
    summary["ratio"] = json!(pi_dual / pi_h);
    summary["balance_residual"] = json!(dist.balance_residual);
    let rows = vec![vec![num(pi_dual), num(pi_h), num(pi_dual / pi_h), num(dist.balance_residual)]];
    let mut out = PointOutput::new(rows, summary);
    out.failure = balance_failure(dist.balance_residual);
    Ok(out)
}

fn compute(cfg: &RunConfig, point: &Point) -> PointResult {
    match (cfg.command, point) {
        (Command::Offspring, Point::Law { n, alpha }) => offspring(*n, *alpha),
        (Command::BsHeuristic, Point::Boundary { n, b, .. }) => bs_heuristic(*n, *b),
        (Command::AspStationary, p) => asp_stationary(model(p)),
        (Command::FixationExact, p) => fixation_exact(cfg, model(p)),
        (Command::FixationMc, p) => fixation_mc(cfg, model(p)),
        (Command::DualityCheck, p) => duality(cfg, model(p)),
        (Command::LyapunovCheck, p) => lyapunov(cfg, model(p)),
        (Command::Sweep, p) => sweep(model(p)),
        (command, _) => unreachable!("no grid points for {}", command.name()),
    }
}

/// Runs every grid point (in parallel, output in grid order). Failed points become
/// rows with an error message; the run itself does not stop.
pub fn execute(cfg: &RunConfig) -> Report {
    let outcomes: Vec<PointResult> = cfg.grid.par_iter().map(|p| compute(cfg, p)).collect();
    let body = body_header(cfg.command);
    let mut header = prefix_header(cfg.command);
    header.extend(body.iter().copied());
    header.push("error");
    let mut report =
        Report { header, rows: Vec::new(), summaries: Vec::new(), details: Vec::new(), failures: Vec::new() };
    for (i, (point, outcome)) in cfg.grid.iter().zip(outcomes).enumerate() {
        let head = prefix(point);
        match outcome {
            Ok(out) => {
                let err = out.failure.clone().unwrap_or_default();
                for row in out.rows {
                    let mut full = head.clone();
                    full.extend(row);
                    full.push(err.clone());
                    report.rows.push(full);
                }
                let mut summary = out.summary;
                summary["error"] = json!(out.failure);
                let mut detail = out.detail.unwrap_or_else(|| summary.clone());
                detail["error"] = json!(out.failure);
                report.summaries.push(summary);
                report.details.push(detail);
                if let Some(msg) = out.failure {
                    report.failures.push(format!("point {i}: {msg}"));
                }
            }
            Err(e) => {
                let msg = e.to_string();
                let mut full = head;
                full.resize(report.header.len() - 1, String::new());
                full.push(msg.clone());
                report.rows.push(full);
                let mut record = point_json(point);
                record["error"] = json!(msg);
                report.summaries.push(record.clone());
                report.details.push(record);
                report.failures.push(format!("point {i}: {msg}"));
            }
        }
    }
    report
}

/// Python stub that plots `ratio` against `N` from a CSV table.
pub fn plot_script(csv: &str) -> String {
    let path = serde_json::to_string(csv).expect("string serializes");
    format!(
        r#"# Plot a lambda-asp CSV table. Edit X and Y to pick other columns.
import csv

import matplotlib.pyplot as plt

PATH = {path}
X, Y = "N", "ratio"

with open(PATH, newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if not r.get("error") and r.get(Y)]

xs = [float(r[X]) for r in rows]
ys = [float(r[Y]) for r in rows]
plt.semilogx(xs, ys, "o-")
plt.xlabel(X)
plt.ylabel(Y)
plt.savefig(PATH.rsplit(".", 1)[0] + ".png", dpi=150)
"#
    )
}
