//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion, and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use lambda_asp::asp::{pi_n_dual, stationary_distribution};
use lambda_asp::duality::DualityCheck;
use lambda_asp::forward::{build_frequency_generator, fixation_prob_exact, fixation_prob_mc};
use lambda_asp::lyapunov::{generator_linear_closed_form, lower_bound_check, upper_bound_check};
use lambda_asp::model::{asymptotic_fixation, asymptotic_pi};
use lambda_asp::offspring::{gw_survival, limit_weight, log_log_slope};
use lambda_asp::special::{gamma_frac_sum, gamma_ratio, log_gamma, two_term_gamma_identity_residual};
use lambda_asp::{AspChain, ModelParams, OffspringLaw, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Verdict);

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

fn c01_duality() -> Verdict {
    let mut worst = 0.0f64;
    let mut points = 0;
    for &n in &[5usize, 8, 12] {
        for &alpha in &[1.3, 1.7] {
            for &s in &[0.05, 0.2] {
                let check = DualityCheck::new(&ModelParams::with_selection(n, alpha, s)?)?;
                let report = check.report(&[1, n - 1], &[1, 2, 3], &[0.1, 1.0, 10.0])?;
                worst = worst.max(report.max_gap);
                points += report.points.len();
            }
        }
    }
    Ok((worst <= 1e-8, format!("max gap {worst:.3e} over {points} points (tol 1e-8)")))
}

fn c02_dual_identity() -> Verdict {
    let mut worst = 0.0f64;
    for &n in &[20usize, 50, 100, 200] {
        for &alpha in &[1.2, 1.5, 1.8] {
            let p = ModelParams::new(n, alpha, 0.3 * (alpha - 1.0))?;
            let dual = pi_n_dual(&AspChain::new(p)?)?;
            let exact = fixation_prob_exact(&build_frequency_generator(&p)?, n - 1)?;
            worst = worst.max((dual - exact).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max |pi_dual - pi_exact| {worst:.3e} (tol 1e-8)")))
}

fn c03_trend() -> Verdict {
    let mut ratios: Vec<f64> = Vec::new();
    for &n in &[1_000usize, 4_000, 16_000] {
        let p = ModelParams::new(n, 1.5, 0.25)?;
        ratios.push(pi_n_dual(&AspChain::new(p)?)? / asymptotic_pi(&p));
    }
    let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = strictly_decreasing(&devs);
    let last_ok = devs[2] <= 0.25;
    Ok((
        monotone && last_ok,
        format!(
            "r_N = [{}]; |r-1| strictly decreasing: {monotone}; |r-1| at 1.6e4 = {:.4} <= 0.25: {last_ok}",
            fmt_list(&ratios),
            devs[2]
        ),
    ))
}

fn c04_neutral() -> Verdict {
    let mut worst = 0.0f64;
    for &n in &[5usize, 20, 50] {
        for &alpha in &[1.2, 1.5, 1.8] {
            let p = ModelParams::with_selection(n, alpha, 0.0)?;
            let chain = build_frequency_generator(&p)?;
            for x0 in 0..=n {
                let h = fixation_prob_exact(&chain, x0)?;
                worst = worst.max((h - (1.0 - x0 as f64 / n as f64)).abs());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max |h(x0) - (1 - x0/N)| {worst:.3e} (tol 1e-10)")))
}

fn c05_mc() -> Verdict {
    let p = ModelParams::new(200, 1.5, 0.25)?;
    let exact = fixation_prob_exact(&build_frequency_generator(&p)?, 199)?;
    let est = fixation_prob_mc(&p, 199, 100_000, 20_240_611)?;
    let z = (est.point - exact).abs() / est.std_error;
    Ok((z <= 3.0, format!("MC {:.5} +- {:.5} vs exact {exact:.5}: {z:.2} SE (tol 3)", est.point, est.std_error)))
}

fn c06_offspring() -> Verdict {
    let alpha = 1.5;
    let mut worst_norm = 0.0f64;
    for &n in &[2usize, 10, 100, 1_000, 10_000, 100_000] {
        for &a in &[1.2, 1.5, 1.8] {
            worst_norm = worst_norm.max(OffspringLaw::build(n, a)?.normalization_residual());
        }
    }
    let mut p0_devs: Vec<f64> = Vec::new();
    for &n in &[100usize, 1_000, 10_000] {
        p0_devs.push((OffspringLaw::build(n, alpha)?.p0() - 1.0 / alpha).abs());
    }
    let n = 10_000usize;
    let limit: Vec<(usize, f64)> = (n / 10..=n / 2).map(|k| Ok((k, limit_weight(k, alpha)?))).collect::<Result<_>>()?;
    let slope = log_log_slope(&limit)?;
    let law = OffspringLaw::build(n, alpha)?;
    let finite: Vec<(usize, f64)> = (n / 10..=n / 2).map(|k| (k, law.weight(k))).collect();
    let finite_slope = log_log_slope(&finite)?;
    let norm_ok = worst_norm <= 1e-10;
    let trend_ok = strictly_decreasing(&p0_devs);
    let slope_ok = (slope + 1.0 + alpha).abs() <= 0.05;
    Ok((
        norm_ok && trend_ok && slope_ok,
        format!(
            "normalization {worst_norm:.2e} (tol 1e-10): {norm_ok}; |p0 - 1/alpha| = [{}] decreasing: {trend_ok}; \
             limit-law tail slope {slope:.4} vs {:.2} +- 0.05: {slope_ok} (finite-N law slope {finite_slope:.4})",
            fmt_list(&p0_devs),
            -(1.0 + alpha)
        ),
    ))
}

fn c07_gw() -> Verdict {
    let alpha = 1.5;
    let mut ratios: Vec<f64> = Vec::new();
    for &s in &[1e-2, 1e-3, 1e-4] {
        ratios.push(gw_survival(alpha, s)? / asymptotic_fixation(alpha, s));
    }
    let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = strictly_decreasing(&devs);
    let last_ok = devs[2] <= 0.03;
    Ok((
        monotone && last_ok,
        format!(
            "ratios [{}]; monotone: {monotone}; final deviation {:.4} <= 0.03: {last_ok}",
            fmt_list(&ratios),
            devs[2]
        ),
    ))
}

fn c08_linear_generator() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for &alpha in &[1.2, 1.5, 1.8] {
        let chain = AspChain::new(ModelParams::new(2_000, alpha, 0.3 * (alpha - 1.0))?)?;
        let c_n = chain.derived().c_n;
        let a = 1.0 / ((alpha - 1.0) * chain.derived().s_n);
        for _ in 0..100 {
            let x = rng.random_range(1..=2_000usize);
            let closed = generator_linear_closed_form(a, x, &chain)?;
            let mut direct =
                if x < 2_000 { a * chain.derived().s_n * x as f64 * (1.0 - x as f64 / 2_000.0) } else { 0.0 };
            for y in 1..x {
                direct += c_n * chain.q(x, y)? * a * (y as f64 - x as f64);
            }
            worst = worst.max((closed - direct).abs() / direct.abs());
        }
    }
    Ok((worst <= 1e-9, format!("max rel. err {worst:.3e} over 300 states (tol 1e-9)")))
}

fn c09_sandwich() -> Verdict {
    let chain = AspChain::new(ModelParams::new(10_000, 1.5, 0.25)?)?;
    let upper = upper_bound_check(&chain)?;
    let lower = lower_bound_check(&chain, 0.2, 0.4)?;
    let mean = stationary_distribution(&chain)?.mean;
    let slack = 1e-9 * mean;
    let exact = lower.min() <= mean + slack && mean <= upper.max() + slack;
    let up_ok = upper.max_over_dn <= 1.1;
    let lo_ok = lower.min_over_dn >= 0.9;
    Ok((
        up_ok && lo_ok && exact,
        format!(
            "max/d_N {:.4} <= 1.1: {up_ok}; min/d_N {:.4} >= 0.9: {lo_ok}; exact min {:.3} <= E[A] {mean:.3} <= max {:.3}: {exact} (d_N {:.3})",
            upper.max_over_dn,
            lower.min_over_dn,
            lower.min(),
            upper.max(),
            upper.d_n
        ),
    ))
}

fn direct_frac_sum(a: f64, b: f64, n: u64) -> Result<f64> {
    let mut s = 0.0;
    for j in 1..=n {
        let j = j as f64;
        s += (log_gamma(j + a)? - log_gamma(j + b)?).exp();
    }
    Ok(s)
}

fn c10_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_a2 = 0.0f64;
    for _ in 0..1_000 {
        let a = rng.random_range(-0.9..3.0);
        let b = rng.random_range(-0.9..3.0);
        let n = rng.random_range(1..=200u64);
        let closed = gamma_frac_sum(a, b, n)?;
        let direct = direct_frac_sum(a, b, n)?;
        worst_a2 = worst_a2.max((closed - direct).abs() / direct.abs());
    }
    let mut worst_a3 = 0.0f64;
    let xs: Vec<u64> = (2..=500).chain([1_000, 10_000]).collect();
    for &alpha in &[1.1, 1.5, 1.9] {
        for &x in &xs {
            worst_a3 = worst_a3.max(two_term_gamma_identity_residual(x, alpha)?);
        }
    }
    let mut monotone = true;
    for &delta in &[0.1, 0.5, 0.9, 1.5] {
        let mut last = 0.0;
        for i in 0..400 {
            let x = 0.05 * 1.03f64.powi(i);
            let r = gamma_ratio(x, delta)?;
            monotone &= r > last;
            last = r;
        }
    }
    let ok = worst_a2 <= 1e-9 && worst_a3 <= 1e-9 && monotone;
    Ok((
        ok,
        format!("frac-sum max rel. err {worst_a2:.3e} (1000 cases); two-term max residual {worst_a3:.3e}; gamma_ratio monotone: {monotone}"),
    ))
}

fn c11_haldane() -> Verdict {
    let s = 1e-3;
    let ratios: Vec<f64> = [1.9, 1.95, 1.99].iter().map(|&a| asymptotic_fixation(a, s) / (2.0 * s)).collect();
    let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = strictly_decreasing(&devs);
    let last_ok = devs[2] <= 0.05;
    Ok((
        monotone && last_ok,
        format!(
            "pi/(2s) = [{}]; monotone: {monotone}; final deviation {:.4} <= 0.05: {last_ok}",
            fmt_list(&ratios),
            devs[2]
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("exact duality", c01_duality),
        ("pi_N = E[A_eq]/N against the forward chain", c02_dual_identity),
        ("fixation ratio trend towards the asymptotic law", c03_trend),
        ("neutral martingale", c04_neutral),
        ("Monte Carlo vs exact fixation", c05_mc),
        ("offspring law", c06_offspring),
        ("Galton-Watson survival asymptotics", c07_gw),
        ("linear test function closed form", c08_linear_generator),
        ("drift sandwich at N = 1e4", c09_sandwich),
        ("Gamma-function identities", c10_identities),
        ("Haldane boundary", c11_haldane),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} | {name} | {detail} | {:.1}s",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
