//! Drift of the ancestral selection process on explicit test functions.
//!
//! For any `g` on `{1, …, N}`, stationarity gives `E[L g(A_eq)] = 0`, hence
//! `min_x (L g(x) + x) ≤ E[A_eq] ≤ max_x (L g(x) + x)`. A linear `g` yields the upper
//! bound and a two-power `g` the lower bound, both of order `d_N`.

use serde::Serialize;

use crate::asp::{stationary_distribution, AspChain, QTable, SkipFreeChain};
use crate::error::{ensure, Error, Result};
use crate::scalar::Real;
use crate::special::ln_gamma;

/// Size guard for the `O(N²)` direct evaluation of power test functions.
pub const LOWER_CHECK_MAX_N: usize = 20_000;

/// `Σ_{y<x} q(x, y) h(y)`, with `h` given at index `y−1`, as one dot product.
fn weighted_down_sum<T: Real>(table: &QTable<T>, x: usize, h_target: &[T]) -> T {
    let gap = table.gap_factors();
    let mut acc = T::zero();
    for (h, b) in h_target[..x - 1].iter().zip(gap[..x - 1].iter().rev()) {
        acc = acc + *h * *b;
    }
    T::of(x) * table.norm() * acc
}

/// `A(y) g(y)` for `y = 1..=len`.
fn fold_target<T: Real>(table: &QTable<T>, g: &[T]) -> Vec<T> {
    g.iter().zip(table.target_factors()).map(|(a, b)| *a * *b).collect()
}

/// `L g(x) = x s_N (1 − x/N)(g(x+1) − g(x)) + c_N Σ_{y<x} q(x, y)(g(y) − g(x))`.
///
/// `g` holds `g(1), …, g(N)`.
pub fn apply_generator<T: Real>(g: &[T], x: usize, chain: &AspChain<T>) -> Result<T> {
    let n = chain.size();
    ensure!(g.len() == n, Domain, "test function needs {n} values, got {}", g.len());
    ensure!(x >= 1 && x <= n, Domain, "state {x} outside 1..={n}");
    let folded = fold_target(chain.table(), &g[..x]);
    Ok(generator_at(g, &folded, x, chain))
}

fn generator_at<T: Real>(g: &[T], folded: &[T], x: usize, chain: &AspChain<T>) -> T {
    let gx = g[x - 1];
    let up = if x < chain.size() { chain.up_rate(x) * (g[x] - gx) } else { T::zero() };
    if x == 1 {
        return up;
    }
    let c_n = chain.derived().c_n;
    let down = weighted_down_sum(chain.table(), x, folded) - gx * chain.table().row_total(x);
    up + c_n * down
}

/// `L g(x)` for `g(x) = a x`:
/// `a s_N (1 − x/N) x − a c_N x [Γ(x+α)/Γ(x+1) − Γ(α+1)] / ((α−1) Γ(α+1))`.
pub fn generator_linear_closed_form<T: Real>(a: T, x: usize, chain: &AspChain<T>) -> Result<T> {
    let n = chain.size();
    ensure!(x >= 1 && x <= n, Domain, "state {x} outside 1..={n}");
    Ok(linear_closed(a, x, chain))
}

fn linear_closed<T: Real>(a: T, x: usize, chain: &AspChain<T>) -> T {
    let one = T::one();
    let alpha = chain.params().alpha();
    let xf = T::of(x);
    let up = a * chain.up_rate(x);
    if x == 1 {
        return up;
    }
    let g = ln_gamma(alpha + one).exp();
    let bracket = chain.table().growth(x) - g;
    up - a * chain.derived().c_n * xf * bracket / ((alpha - one) * g)
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerDriftScan<T> {
    pub beta: T,
    /// `R(x)` for `x = 2..=x_max`, index `x−2`.
    pub residuals: Vec<T>,
    pub sup: T,
    /// Supremum over the last decade `[x_max/10, x_max]`.
    pub sup_top_decade: T,
    /// Supremum over the decade before it.
    pub sup_previous_decade: T,
}

/// `R(x) = |Σ_y q(x, y)(y^β − x^β) + β c_α x^β Γ(x+α)/Γ(x+1)| / x^β` for `x = 2..=x_max`.
pub fn power_drift_scan<T: Real>(beta: T, alpha: T, x_max: usize) -> Result<PowerDriftScan<T>> {
    ensure!(beta > T::zero() && beta < T::one(), Domain, "beta must lie in (0, 1), got {beta}");
    ensure!(x_max >= 2, Domain, "x_max must be >= 2, got {x_max}");
    let table = QTable::new(alpha, x_max)?;
    let c_alpha = crate::model::c_alpha(alpha);
    let powers: Vec<T> = (1..=x_max).map(|y| T::of(y).powf(beta)).collect();
    let folded = fold_target(&table, &powers);
    let residuals: Vec<T> = (2..=x_max)
        .map(|x| {
            let xb = powers[x - 1];
            let drift = weighted_down_sum(&table, x, &folded) - xb * table.row_total(x);
            (drift + beta * c_alpha * xb * table.growth(x)).abs() / xb
        })
        .collect();
    let sup_over =
        |lo: usize, hi: usize| residuals[lo.max(2) - 2..=hi.max(2) - 2].iter().fold(T::zero(), |m, &r| m.max(r));
    let sup = sup_over(2, x_max);
    let sup_top_decade = sup_over(x_max / 10, x_max);
    let sup_previous_decade = sup_over(x_max / 100, x_max / 10);
    Ok(PowerDriftScan { beta, residuals, sup, sup_top_decade, sup_previous_decade })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Linear,
    PowerPair,
}

/// `L g(x) + x` over `x = 1..=N` and its extremes relative to `d_N`.
#[derive(Debug, Clone, Serialize)]
pub struct DriftProfile<T> {
    pub tag: TestFunction,
    /// `L g(x) + x` at index `x−1`.
    pub values: Vec<T>,
    pub d_n: T,
    pub max_over_dn: T,
    pub argmax: usize,
    pub min_over_dn: T,
    pub argmin: usize,
}

impl<T: Real> DriftProfile<T> {
    fn new(tag: TestFunction, values: Vec<T>, d_n: T) -> Result<Self> {
        ensure!(values.iter().all(|v| v.is_finite()), Numeric, "drift profile has non-finite values");
        let (mut argmax, mut argmin) = (0, 0);
        for (i, v) in values.iter().enumerate() {
            if *v > values[argmax] {
                argmax = i;
            }
            if *v < values[argmin] {
                argmin = i;
            }
        }
        Ok(Self {
            tag,
            max_over_dn: values[argmax] / d_n,
            min_over_dn: values[argmin] / d_n,
            argmax: argmax + 1,
            argmin: argmin + 1,
            values,
            d_n,
        })
    }

    pub fn max(&self) -> T {
        self.max_over_dn * self.d_n
    }

    pub fn min(&self) -> T {
        self.min_over_dn * self.d_n
    }
}

fn require_d_n<T: Real>(chain: &AspChain<T>) -> Result<T> {
    chain.derived().d_n.ok_or_else(|| Error::Config("drift checks need s_N > 0 (no balance point d_N)".into()))
}

/// Slope of the upper test function, `a = 1/((α−1) s_N)`.
pub fn upper_slope<T: Real>(chain: &AspChain<T>) -> T {
    ((chain.params().alpha() - T::one()) * chain.derived().s_n).recip()
}

/// `L g(x) + x` for `g(x) = x / ((α−1) s_N)`, from the closed form.
pub fn upper_bound_check<T: Real>(chain: &AspChain<T>) -> Result<DriftProfile<T>> {
    let d_n = require_d_n(chain)?;
    let a = upper_slope(chain);
    let values = (1..=chain.size()).map(|x| linear_closed(a, x, chain) + T::of(x)).collect();
    DriftProfile::new(TestFunction::Linear, values, d_n)
}

/// Maximizer `((a s_N + 1) / (a α c_α c_N))^{1/(α−1)}` of the smooth majorant of the
/// upper profile.
pub fn upper_predicted_maximizer<T: Real>(chain: &AspChain<T>) -> T {
    let alpha = chain.params().alpha();
    let d = chain.derived();
    let a = upper_slope(chain);
    ((a * d.s_n + T::one()) / (a * alpha * d.c_alpha * d.c_n)).powf((alpha - T::one()).recip())
}

/// `(β₁, β₂) = (0.4 (α−1), 0.8 (α−1))`.
pub fn default_betas<T: Real>(alpha: T) -> (T, T) {
    let e = alpha - T::one();
    (T::lit(0.4) * e, T::lit(0.8) * e)
}

/// `a₁ = d_N / ((2^{β₁} − 1) s_N)` and `a₂ = −β₁ a₁ d_N^{β₁} / (β₂ d_N^{β₂})`.
pub fn lower_coefficients<T: Real>(chain: &AspChain<T>, beta1: T, beta2: T) -> Result<(T, T)> {
    check_betas(chain, beta1, beta2)?;
    let d_n = require_d_n(chain)?;
    let a1 = d_n / ((T::lit(2.0).powf(beta1) - T::one()) * chain.derived().s_n);
    let a2 = -beta1 * a1 * d_n.powf(beta1) / (beta2 * d_n.powf(beta2));
    Ok((a1, a2))
}

fn check_betas<T: Real>(chain: &AspChain<T>, beta1: T, beta2: T) -> Result<()> {
    let e = chain.params().alpha() - T::one();
    ensure!(
        beta1 > T::zero() && beta1 < beta2 && beta2 < e,
        Config,
        "need 0 < beta1 < beta2 < alpha - 1 = {e}, got beta1={beta1}, beta2={beta2}"
    );
    Ok(())
}

/// `L g(x) + x` for `g(x) = a₁ x^{β₁} + a₂ x^{β₂}`, by direct summation over all rows.
pub fn lower_bound_check<T: Real>(chain: &AspChain<T>, beta1: T, beta2: T) -> Result<DriftProfile<T>> {
    check_betas(chain, beta1, beta2)?;
    let n = chain.size();
    ensure!(n <= LOWER_CHECK_MAX_N, Size, "lower-bound scan is limited to N <= {LOWER_CHECK_MAX_N}, got {n}");
    let d_n = require_d_n(chain)?;
    let (a1, a2) = lower_coefficients(chain, beta1, beta2)?;
    let g: Vec<T> = (1..=n)
        .map(|x| {
            let xf = T::of(x);
            a1 * xf.powf(beta1) + a2 * xf.powf(beta2)
        })
        .collect();
    let folded = fold_target(chain.table(), &g);
    let values = (1..=n).map(|x| generator_at(&g, &folded, x, chain) + T::of(x)).collect();
    DriftProfile::new(TestFunction::PowerPair, values, d_n)
}

#[derive(Debug, Clone, Serialize)]
pub struct Sandwich<T> {
    pub lower: T,
    pub mean: T,
    pub upper: T,
    pub d_n: T,
    pub holds: bool,
}

/// Relative slack allowed for rounding when comparing the sandwich ends.
const SANDWICH_SLACK: f64 = 1e-9;

/// `min_x (L g₂ + x) ≤ E[A_eq] ≤ max_x (L g₁ + x)` for the computed stationary law.
pub fn sandwich_check<T: Real>(chain: &AspChain<T>, beta1: T, beta2: T) -> Result<Sandwich<T>> {
    let upper = upper_bound_check(chain)?;
    let lower = lower_bound_check(chain, beta1, beta2)?;
    let mean = stationary_distribution(chain)?.mean;
    let slack = T::lit(SANDWICH_SLACK) * mean;
    let (lo, hi) = (lower.min(), upper.max());
    Ok(Sandwich { lower: lo, mean, upper: hi, d_n: upper.d_n, holds: lo <= mean + slack && mean <= hi + slack })
}
