//! The Λ-ancestral selection process: a block-counting chain on `{1, …, N}` that
//! branches at rate `n s_N (1 − n/N)` and coalesces `n → y` at rate `c_N q(n, y)`.
//!
//! The chain only ever jumps up by one, so its stationary law follows from a cut
//! balance across each edge `{n, n+1}` in `O(N²)` time and `O(N)` memory.

use std::num::NonZeroUsize;

use lru::LruCache;
use rand::Rng;
use serde::Serialize;

use crate::ctmc::SparseGenerator;
use crate::error::{ensure, Error, Result};
use crate::model::{derive_constants, DerivedConstants, ModelParams};
use crate::scalar::Real;
use crate::special::{ln_gamma, ln_gamma_ratio, GammaRatioTable};

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    ensure!(alpha > T::one() && alpha < T::lit(2.0), Domain, "alpha must lie in (1, 2), got {alpha}");
    Ok(())
}

/// Coalescence rate `q(x, y)` of the block-counting process, evaluated in log space.
pub fn q_rate<T: Real>(x: usize, y: usize, alpha: T) -> Result<T> {
    ensure!(y >= 1 && y < x, Domain, "q(x, y) needs 1 <= y < x, got x={x}, y={y}");
    check_alpha(alpha)?;
    let one = T::one();
    let (xf, yf) = (T::of(x), T::of(y));
    let gap = T::of(x - y);
    let ln = xf.ln() - ln_gamma(T::lit(2.0) - alpha) - ln_gamma(alpha)
        + ln_gamma_ratio(yf, alpha - one)
        + ln_gamma_ratio(gap + T::lit(2.0), -alpha - one);
    Ok(ln.exp())
}

/// Precomputed factors of `q(x, y) = x · K · A(y) · B(x − y)` with
/// `K = 1/(Γ(2−α)Γ(α))`, `A(y) = Γ(y+α−1)/Γ(y)` and `B(m) = Γ(m+1−α)/Γ(m+2)`.
#[derive(Debug, Clone)]
pub struct QTable<T> {
    alpha: T,
    norm: T,
    target: GammaRatioTable<T>,
    gap: GammaRatioTable<T>,
}

impl<T: Real> QTable<T> {
    /// Valid for `1 ≤ y < x ≤ n_max`; `A` is tabulated one step further so that
    /// `Γ(x+α)/Γ(x+1)` is available up to `x = n_max`.
    pub fn new(alpha: T, n_max: usize) -> Result<Self> {
        check_alpha(alpha)?;
        ensure!(n_max >= 2, Domain, "q table needs n_max >= 2, got {n_max}");
        let one = T::one();
        let norm = (-ln_gamma(T::lit(2.0) - alpha) - ln_gamma(alpha)).exp();
        let target = GammaRatioTable::new(alpha - one, T::zero(), n_max + 1)?;
        let gap = GammaRatioTable::new(one - alpha, T::lit(2.0), n_max - 1)?;
        Ok(Self { alpha, norm, target, gap })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.target.len() - 1
    }

    /// `q(x, y)` without bounds checks beyond slice indexing.
    #[inline]
    pub fn q(&self, x: usize, y: usize) -> T {
        T::of(x) * self.norm * self.target.ratio(y) * self.gap.ratio(x - y)
    }

    #[inline]
    pub fn ln_q(&self, x: usize, y: usize) -> T {
        T::of(x).ln() + self.norm.ln() + self.target.log_ratio(y) + self.gap.log_ratio(x - y)
    }

    /// `Σ_{y<x} q(x, y) = (x−1) Γ(x+α−1) / (Γ(α+1) Γ(x))`.
    pub fn row_total(&self, x: usize) -> T {
        if x <= 1 {
            return T::zero();
        }
        T::of(x - 1) * self.target.ratio(x) / ln_gamma(self.alpha + T::one()).exp()
    }

    /// `Γ(x+α)/Γ(x+1)` for `1 ≤ x ≤ n_max`.
    #[inline]
    pub fn growth(&self, x: usize) -> T {
        self.target.ratio(x + 1)
    }

    pub fn norm(&self) -> T {
        self.norm
    }

    /// `A(y)` for `y = 1..=n_max+1`, index `y−1`.
    pub fn target_factors(&self) -> &[T] {
        self.target.ratios()
    }

    /// `B(m)` for `m = 1..n_max`, index `m−1`.
    pub fn gap_factors(&self) -> &[T] {
        self.gap.ratios()
    }
}

/// A birth-death-like chain on `{1, …, N}` with unit up-jumps and down-jump rates of
/// product form `down_rate(m, y) = down_scale · m · target(y) · gap(m − y)`.
pub trait SkipFreeChain<T: Real> {
    fn size(&self) -> usize;
    fn up_rate(&self, n: usize) -> T;
    fn total_down_rate(&self, m: usize) -> T;
    fn down_scale(&self) -> T;
    /// `target(y)` at index `y−1`, at least `N` entries.
    fn target_factors(&self) -> &[T];
    /// `gap(k)` at index `k−1`, at least `N−1` entries.
    fn gap_factors(&self) -> &[T];

    fn down_rate(&self, m: usize, y: usize) -> T {
        if y == 0 || y >= m {
            return T::zero();
        }
        self.down_scale() * T::of(m) * self.target_factors()[y - 1] * self.gap_factors()[m - y - 1]
    }

    /// The chain as a sparse generator; state `n` sits at index `n−1`.
    fn to_generator(&self) -> Result<SparseGenerator<T>> {
        let n = self.size();
        let rows = (1..=n)
            .map(|m| {
                let mut row: Vec<(usize, T)> = (1..m).map(|y| (y - 1, self.down_rate(m, y))).collect();
                if m < n {
                    row.push((m, self.up_rate(m)));
                }
                row
            })
            .collect();
        SparseGenerator::from_rows(rows)
    }
}

/// The Λ-ASP for `Λ = Beta(2−α, α)`.
#[derive(Debug, Clone)]
pub struct AspChain<T> {
    params: ModelParams<T>,
    derived: DerivedConstants<T>,
    table: QTable<T>,
    scale: T,
}

impl<T: Real> AspChain<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        let derived = derive_constants(&params);
        let table = QTable::new(params.alpha(), params.n())?;
        let scale = derived.c_n * table.norm();
        Ok(Self { params, derived, table, scale })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn derived(&self) -> &DerivedConstants<T> {
        &self.derived
    }

    pub fn table(&self) -> &QTable<T> {
        &self.table
    }

    /// `q(x, y)` from the tables, checked.
    pub fn q(&self, x: usize, y: usize) -> Result<T> {
        ensure!(y >= 1 && y < x && x <= self.size(), Domain, "q(x, y) needs 1 <= y < x <= N, got x={x}, y={y}");
        Ok(self.table.q(x, y))
    }

    /// `c_N Σ_y q(x, y)` by direct summation, for cross-checking the closed form.
    pub fn total_down_rate_direct(&self, x: usize) -> T {
        self.derived.c_n * (1..x).map(|y| self.table.q(x, y)).sum::<T>()
    }
}

impl<T: Real> SkipFreeChain<T> for AspChain<T> {
    fn size(&self) -> usize {
        self.params.n()
    }

    fn up_rate(&self, n: usize) -> T {
        up_rate_with(n, self.params.n(), self.derived.s_n)
    }

    fn total_down_rate(&self, m: usize) -> T {
        self.derived.c_n * self.table.row_total(m)
    }

    fn down_scale(&self) -> T {
        self.scale
    }

    fn target_factors(&self) -> &[T] {
        self.table.target_factors()
    }

    fn gap_factors(&self) -> &[T] {
        self.table.gap_factors()
    }
}

fn up_rate_with<T: Real>(n: usize, size: usize, s: T) -> T {
    if n >= size {
        return T::zero();
    }
    let nf = T::of(n);
    nf * s * (T::one() - nf / T::of(size))
}

/// Branching rate `n s_N (1 − n/N)`.
pub fn up_rate<T: Real>(n: usize, params: &ModelParams<T>) -> Result<T> {
    ensure!(n >= 1 && n <= params.n(), Domain, "state {n} outside 1..={}", params.n());
    Ok(up_rate_with(n, params.n(), params.s_n()))
}

/// Total coalescence rate `c_N x(x−1)Γ(x+α−1)/(Γ(α+1)Γ(x+1))`; zero at `x = 1`.
pub fn total_down_rate<T: Real>(x: usize, params: &ModelParams<T>) -> Result<T> {
    ensure!(x >= 1 && x <= params.n(), Domain, "state {x} outside 1..={}", params.n());
    if x == 1 {
        return Ok(T::zero());
    }
    let (a, xf, one) = (params.alpha(), T::of(x), T::one());
    let ln = (xf * (xf - one)).ln() + ln_gamma_ratio(xf + one, a - T::lit(2.0)) - ln_gamma(a + one);
    Ok(params.c_n() * ln.exp())
}

/// The Bolthausen–Sznitman analogue: `c_N = 1/ln N`, `s_N = (ln N)^{−b}` and
/// down rates `c_N n / ((n−j+1)(n−j))`.
#[derive(Debug, Clone)]
pub struct BsAspChain<T> {
    n: usize,
    s_n: T,
    c_n: T,
    ones: Vec<T>,
    gap: Vec<T>,
}

impl<T: Real> BsAspChain<T> {
    pub fn new(n: usize, b: T) -> Result<Self> {
        ensure!(n > 2, Domain, "the BS variant needs N > 2, got {n}");
        ensure!(b > T::zero() && b < T::one(), Config, "b must lie in (0, 1), got {b}");
        Self::with_selection(n, T::of(n).ln().powf(-b))
    }

    pub fn with_selection(n: usize, s_n: T) -> Result<Self> {
        ensure!(n > 2, Domain, "the BS variant needs N > 2, got {n}");
        ensure!(s_n >= T::zero() && s_n.is_finite(), Config, "s_N must be finite and >= 0, got {s_n}");
        let gap = (1..n).map(|k| (T::of(k) * T::of(k + 1)).recip()).collect();
        Ok(Self { n, s_n, c_n: T::of(n).ln().recip(), ones: vec![T::one(); n], gap })
    }

    pub fn s_n(&self) -> T {
        self.s_n
    }

    pub fn c_n(&self) -> T {
        self.c_n
    }
}

impl<T: Real> SkipFreeChain<T> for BsAspChain<T> {
    fn size(&self) -> usize {
        self.n
    }

    fn up_rate(&self, n: usize) -> T {
        up_rate_with(n, self.n, self.s_n)
    }

    /// `c_N m Σ_{k<m} 1/(k(k+1)) = c_N (m − 1)`.
    fn total_down_rate(&self, m: usize) -> T {
        self.c_n * T::of(m.saturating_sub(1))
    }

    fn down_scale(&self) -> T {
        self.c_n
    }

    fn target_factors(&self) -> &[T] {
        &self.ones
    }

    fn gap_factors(&self) -> &[T] {
        &self.gap
    }
}

/// `r̃_{n,j} = n / ((n−j+1)(n−j) ln N)`.
pub fn bs_variant_down_rate<T: Real>(n: usize, j: usize, size: usize) -> Result<T> {
    ensure!(size > 2, Domain, "the BS variant needs N > 2, got {size}");
    ensure!(j >= 1 && j < n, Domain, "need 1 <= j < n, got n={n}, j={j}");
    let k = T::of(n - j);
    Ok(T::of(n) / ((k + T::one()) * k * T::of(size).ln()))
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryDist<T> {
    /// `π_n` at index `n−1`.
    pub weights: Vec<T>,
    /// `max_n |(π Q)_n| / max_n π_n |Q_nn|`.
    pub balance_residual: T,
    pub mean: T,
    /// Set when there are no up-moves and the law is the point mass at 1.
    pub degenerate: bool,
}

impl<T: Real> StationaryDist<T> {
    pub fn weight(&self, n: usize) -> T {
        self.weights[n - 1]
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    /// `E[A_eq] / N`.
    pub fn pi_n_dual(&self) -> T {
        self.mean / T::of(self.size())
    }

    pub fn total_variation(&self, other: &[T]) -> T {
        let l1: T = self.weights.iter().zip(other).map(|(a, b)| (*a - *b).abs()).sum();
        l1 / T::lit(2.0)
    }
}

/// `Σ_{m>n} w_m · down_rate(m, n)` using the product form; `wm[m] = w_m · m`.
#[inline]
fn inflow_from_above<T: Real>(wm: &[T], gap: &[T], scale_target: T, n: usize, size: usize) -> T {
    let mut acc = T::zero();
    for (w, g) in wm[n + 1..=size].iter().zip(&gap[..size - n]) {
        acc = acc + *w * *g;
    }
    acc * scale_target
}

/// Stationary law of a skip-free chain by downward cut balance.
///
/// With `F(n)` the probability flux from `{n+1, …, N}` into `{1, …, n}`, balance across
/// the cut gives `π_n · up(n) = F(n)`, and `F(n−1) = F(n) − Σ_{m>n} π_m down(m, n) +
/// π_n · D(n)` with `D` the total down rate. Starting from `π_N = 1` this fills in
/// every weight; a global balance check follows.
pub fn stationary_distribution<T: Real, C: SkipFreeChain<T> + ?Sized>(chain: &C) -> Result<StationaryDist<T>> {
    let size = chain.size();
    ensure!(size >= 2, Domain, "chain needs at least two states");
    let ups: Vec<T> = (0..=size).map(|n| if n == 0 { T::zero() } else { chain.up_rate(n) }).collect();
    let positive = ups[1..size].iter().filter(|&&u| u > T::zero()).count();
    if positive == 0 {
        let mut weights = vec![T::zero(); size];
        weights[0] = T::one();
        return Ok(StationaryDist { weights, balance_residual: T::zero(), mean: T::one(), degenerate: true });
    }
    ensure!(positive == size - 1, Numeric, "chain is reducible: some but not all up-rates vanish");

    let big = T::max_value().sqrt();
    let scale = chain.down_scale();
    let target = chain.target_factors();
    let gap = chain.gap_factors();
    ensure!(target.len() >= size && gap.len() + 1 >= size, Domain, "rate factor tables too short");

    let mut w = vec![T::zero(); size + 1];
    let mut wm = vec![T::zero(); size + 1];
    w[size] = T::one();
    wm[size] = T::of(size);
    let mut flux = chain.total_down_rate(size);
    for n in (1..size).rev() {
        ensure!(flux > T::zero() && flux.is_finite(), Numeric, "cut flux lost positivity at n={n}");
        w[n] = flux / ups[n];
        wm[n] = w[n] * T::of(n);
        if n == 1 {
            break;
        }
        let inflow = inflow_from_above(&wm, gap, scale * target[n - 1], n, size);
        flux = flux - inflow + w[n] * chain.total_down_rate(n);
        if w[n] > big {
            let shrink = big.recip();
            for v in w[n..].iter_mut().chain(wm[n..].iter_mut()) {
                *v = *v * shrink;
            }
            flux = flux * shrink;
        }
    }
    let total: T = w[1..].iter().copied().sum();
    let weights: Vec<T> = w[1..].iter().map(|&v| v / total).collect();

    let mut wm = vec![T::zero(); size + 1];
    for n in 1..=size {
        wm[n] = weights[n - 1] * T::of(n);
    }
    let mut worst = T::zero();
    let mut largest = T::zero();
    for n in 1..=size {
        let out = weights[n - 1] * (ups[n] + chain.total_down_rate(n));
        let mut inn = inflow_from_above(&wm, gap, scale * target[n - 1], n, size);
        if n > 1 {
            inn = inn + weights[n - 2] * ups[n - 1];
        }
        worst = worst.max((inn - out).abs());
        largest = largest.max(out);
    }
    let balance_residual = worst / largest;
    let mean = weights.iter().enumerate().map(|(i, &p)| T::of(i + 1) * p).sum();
    Ok(StationaryDist { weights, balance_residual, mean, degenerate: false })
}

/// Fixation probability of the beneficial type from one initial carrier,
/// `π_N = E[A_eq] / N`.
pub fn pi_n_dual<T: Real, C: SkipFreeChain<T> + ?Sized>(chain: &C) -> Result<T> {
    Ok(stationary_distribution(chain)?.pi_n_dual())
}

const ROW_CACHE: usize = 1024;

/// Time average of the chain over `[burn_in, horizon]`, started from one line.
///
/// Down targets are drawn by inverse CDF on the cumulative row of down rates, with
/// rows cached in an LRU map since visits concentrate on a narrow band of states.
pub fn simulate_asp<T, C, R>(chain: &C, horizon: T, burn_in: T, rng: &mut R) -> Result<T>
where
    T: Real,
    C: SkipFreeChain<T> + ?Sized,
    R: Rng + ?Sized,
{
    ensure!(burn_in >= T::zero() && horizon > burn_in && horizon.is_finite(), Config, "need horizon > burn_in >= 0");
    let mut rows: LruCache<usize, Vec<T>> = LruCache::new(NonZeroUsize::new(ROW_CACHE).expect("nonzero"));
    let mut state = 1usize;
    let mut t = T::zero();
    let mut area = T::zero();
    loop {
        let up = chain.up_rate(state);
        let down = chain.total_down_rate(state);
        let total = up + down;
        let dt = if total > T::zero() {
            let e: f64 = rng.sample(rand_distr::Exp1);
            T::lit(e) / total
        } else {
            T::infinity()
        };
        let end = (t + dt).min(horizon);
        let overlap = end - t.max(burn_in);
        if overlap > T::zero() {
            area = area + overlap * T::of(state);
        }
        if t + dt >= horizon {
            break;
        }
        t = t + dt;
        let u = T::lit(rng.random::<f64>());
        if u * total < up {
            state += 1;
        } else {
            let row = rows.get_or_insert(state, || {
                let mut acc = T::zero();
                (1..state)
                    .map(|y| {
                        acc = acc + chain.down_rate(state, y);
                        acc
                    })
                    .collect()
            });
            let last = *row.last().ok_or_else(|| Error::Numeric("empty down row".into()))?;
            let draw = T::lit(rng.random::<f64>()) * last;
            let idx = row.partition_point(|&c| c <= draw).min(row.len() - 1);
            state = idx + 1;
        }
    }
    Ok(area / (horizon - burn_in))
}

/// Largest two-sided deviation `max(r, 1/r)` of `r = x y^{α−1} (x−y)^{−α−1} / q(x, y)`
/// over every `1 ≤ y < x` for the given `x` values.
pub fn gautschi_constant<T: Real>(alpha: T, xs: &[usize]) -> Result<T> {
    let x_max = xs.iter().copied().max().unwrap_or(2).max(2);
    let table = QTable::new(alpha, x_max)?;
    let one = T::one();
    let mut worst = one;
    for &x in xs {
        let xf = T::of(x);
        for y in 1..x {
            let approx = xf.ln() + (alpha - one) * T::of(y).ln() - (alpha + one) * T::of(x - y).ln();
            let r = (approx - table.ln_q(x, y)).exp();
            worst = worst.max(r).max(r.recip());
        }
    }
    Ok(worst)
}
