//! Model parameters, derived constants, the drift-balance point `d_N`, and the
//! closed-form fixation asymptotics.
//!
//! Finite-N conventions are pinned to equalities:
//! `c_N = (α−1) Γ(α) N^{1−α}` and `s_N = c_sel · N^{−b}` (unless overridden).

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;
use crate::special::ln_gamma;

/// How the selection strength `s_N` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Selection<T> {
    /// Moderate selection `s_N = c_sel · N^{−b}` with `0 < b < α − 1`.
    Power { b: T, c_sel: T },
    /// Explicit `s_N ≥ 0` (neutral checks use `0`).
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    n: usize,
    alpha: T,
    selection: Selection<T>,
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    ensure!(
        alpha.is_finite() && alpha > T::one() && alpha < T::lit(2.0),
        Config,
        "alpha must lie in (1, 2), got {alpha}"
    );
    Ok(())
}

impl<T: Real> ModelParams<T> {
    /// Moderate selection with `c_sel = 1`.
    pub fn new(n: usize, alpha: T, b: T) -> Result<Self> {
        Self::with_c_sel(n, alpha, b, T::one())
    }

    pub fn with_c_sel(n: usize, alpha: T, b: T, c_sel: T) -> Result<Self> {
        ensure!(n >= 2, Config, "population size N must be >= 2, got {n}");
        check_alpha(alpha)?;
        ensure!(
            b.is_finite() && b > T::zero() && b < alpha - T::one(),
            Config,
            "b must lie in (0, alpha-1) = (0, {}), got {b}",
            alpha - T::one()
        );
        ensure!(c_sel.is_finite() && c_sel > T::zero(), Config, "c_sel must be > 0, got {c_sel}");
        Ok(Self { n, alpha, selection: Selection::Power { b, c_sel } })
    }

    /// Explicit selection strength, bypassing the `N^{−b}` scaling.
    pub fn with_selection(n: usize, alpha: T, s_n: T) -> Result<Self> {
        ensure!(n >= 2, Config, "population size N must be >= 2, got {n}");
        check_alpha(alpha)?;
        ensure!(s_n.is_finite() && s_n >= T::zero(), Config, "s_N must be finite and >= 0, got {s_n}");
        Ok(Self { n, alpha, selection: Selection::Fixed(s_n) })
    }

    /// Same model at a different population size (selection rule unchanged).
    pub fn at_size(&self, n: usize) -> Result<Self> {
        match self.selection {
            Selection::Power { b, c_sel } => Self::with_c_sel(n, self.alpha, b, c_sel),
            Selection::Fixed(s) => Self::with_selection(n, self.alpha, s),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn selection(&self) -> Selection<T> {
        self.selection
    }

    /// The exponent `b`, if selection follows the power law.
    pub fn b(&self) -> Option<T> {
        match self.selection {
            Selection::Power { b, .. } => Some(b),
            Selection::Fixed(_) => None,
        }
    }

    pub fn s_n(&self) -> T {
        match self.selection {
            Selection::Power { b, c_sel } => c_sel * T::of(self.n).powf(-b),
            Selection::Fixed(s) => s,
        }
    }

    /// `c_N = (α−1) Γ(α) N^{1−α}`.
    pub fn c_n(&self) -> T {
        let a = self.alpha;
        (a - T::one()) * ln_gamma(a).exp() * T::of(self.n).powf(T::one() - a)
    }

    /// `c_α = 1 / ((α−1) Γ(α+1))`.
    pub fn c_alpha(&self) -> T {
        c_alpha(self.alpha)
    }
}

pub fn c_alpha<T: Real>(alpha: T) -> T {
    ((alpha - T::one()) * ln_gamma(alpha + T::one()).exp()).recip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants<T> {
    pub c_n: T,
    pub s_n: T,
    pub c_alpha: T,
    /// Drift-balance point; `None` when `s_N = 0`.
    pub d_n: Option<T>,
}

pub fn derive_constants<T: Real>(params: &ModelParams<T>) -> DerivedConstants<T> {
    DerivedConstants { c_n: params.c_n(), s_n: params.s_n(), c_alpha: params.c_alpha(), d_n: d_n_root(params).ok() }
}

const BISECTION_MAX_ITER: usize = 200;

/// Root of `s_N (1 − x/N) − c_α c_N x^{α−1} = 0` on `(0, N)` by bisection.
///
/// The left side is strictly decreasing, positive at `0⁺` and negative at `N`, so the
/// root is unique. Stops at relative bracket width 1e−12 or after 200 halvings.
pub fn d_n_root<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let s = params.s_n();
    if s <= T::zero() {
        return Err(Error::NoRoot("s_N = 0: no drift-balance point".into()));
    }
    let n = T::of(params.n());
    let k = params.c_alpha() * params.c_n();
    let exponent = params.alpha() - T::one();
    let f = |x: T| s * (T::one() - x / n) - k * x.powf(exponent);
    let (mut lo, mut hi) = (T::zero(), n);
    let rtol = T::lit(1e-12);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rtol * hi {
            break;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// `(s_N / (c_α c_N))^{1/(α−1)}`, the leading-order balance point.
///
/// Under the pinned conventions this equals `α^{1/(α−1)} N^{1−b/(α−1)}` when `c_sel = 1`.
pub fn asymptotic_balance_point<T: Real>(params: &ModelParams<T>) -> T {
    let ratio = params.s_n() / (params.c_alpha() * params.c_n());
    ratio.powf((params.alpha() - T::one()).recip())
}

/// `(α s)^{1/(α−1)}`.
pub fn asymptotic_fixation<T: Real>(alpha: T, s: T) -> T {
    (alpha * s).powf((alpha - T::one()).recip())
}

/// Leading-order fixation probability `(α s_N)^{1/(α−1)}`.
pub fn asymptotic_pi<T: Real>(params: &ModelParams<T>) -> T {
    asymptotic_fixation(params.alpha(), params.s_n())
}

/// Heuristic fixation probability `N^{s_N − 1}` with `s_N = (ln N)^{−b}` for the
/// Bolthausen–Sznitman (α = 1) boundary case.
///
/// This is a heuristic value only; no convergence is claimed for it.
pub fn bs_heuristic_pi<T: Real>(n: usize, b: T) -> Result<T> {
    ensure!(n >= 3, Config, "N must be >= 3, got {n}");
    ensure!(b > T::zero() && b < T::one(), Config, "b must lie in (0, 1), got {b}");
    let ln_n = T::of(n).ln();
    let s = ln_n.powf(-b);
    Ok(((s - T::one()) * ln_n).exp())
}
