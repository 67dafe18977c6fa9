//! Numerical check of the hypergeometric duality between the type-count chain and the
//! ancestral selection process:
//!
//! `E[ffr(X_t, n) | X_0 = k] = E[ffr(k, A_t) | A_0 = n]`, with
//! `ffr(k, n) = k(k−1)⋯(k−n+1) / (N(N−1)⋯(N−n+1))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::asp::{AspChain, SkipFreeChain};
use crate::ctmc::SparseGenerator;
use crate::error::{ensure, Result};
use crate::forward::build_frequency_generator;
use crate::model::ModelParams;
use crate::scalar::Real;

pub use crate::ctmc::transient_distribution;

/// Largest `N` for which both transient laws are computed.
pub const DUALITY_MAX_N: usize = 30;

/// Truncation tolerance of each uniformization.
pub const UNIFORMIZATION_TOL: f64 = 1e-10;

/// `k(k−1)⋯(k−n+1) / (N(N−1)⋯(N−n+1))`; `1` for `n = 0` and `0` for `k < n`.
pub fn falling_factorial_ratio<T: Real>(k: usize, n: usize, size: usize) -> Result<T> {
    ensure!(k <= size && n <= size, Domain, "need k, n <= N, got k={k}, n={n}, N={size}");
    if k < n {
        return Ok(T::zero());
    }
    Ok((0..n).fold(T::one(), |acc, i| acc * T::of(k - i) / T::of(size - i)))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualityPoint<T> {
    pub k: usize,
    pub n: usize,
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport<T> {
    pub size: usize,
    pub alpha: T,
    pub b: Option<T>,
    pub s_n: T,
    pub points: Vec<DualityPoint<T>>,
    pub max_gap: T,
}

/// Both generators for one parameter set.
#[derive(Debug, Clone)]
pub struct DualityCheck<T> {
    params: ModelParams<T>,
    forward: SparseGenerator<T>,
    ancestral: SparseGenerator<T>,
}

impl<T: Real> DualityCheck<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self> {
        let n = params.n();
        ensure!(n <= DUALITY_MAX_N, Size, "duality check is limited to N <= {DUALITY_MAX_N}, got {n}");
        let forward = build_frequency_generator(params)?.generator().clone();
        let ancestral = AspChain::new(*params)?.to_generator()?;
        Ok(Self { params: *params, forward, ancestral })
    }

    /// Both sides of the duality for `X_0 = k`, `A_0 = n` at time `t`.
    pub fn point(&self, k: usize, n: usize, t: T) -> Result<DualityPoint<T>> {
        let size = self.params.n();
        ensure!(k <= size && n <= size, Domain, "need k, n <= N, got k={k}, n={n}");
        if n == 0 {
            let one = T::one();
            return Ok(DualityPoint { k, n, t, lhs: one, rhs: one, gap: T::zero() });
        }
        let tol = T::lit(UNIFORMIZATION_TOL);
        let px = transient_distribution(&self.forward, k, t, tol)?;
        let mut lhs = T::zero();
        for (x, p) in px.iter().enumerate() {
            lhs = lhs + *p * falling_factorial_ratio::<T>(x, n, size)?;
        }
        let pa = transient_distribution(&self.ancestral, n - 1, t, tol)?;
        let mut rhs = T::zero();
        for (i, p) in pa.iter().enumerate() {
            rhs = rhs + *p * falling_factorial_ratio::<T>(k, i + 1, size)?;
        }
        Ok(DualityPoint { k, n, t, lhs, rhs, gap: (lhs - rhs).abs() })
    }

    /// Every combination of the given `k`, `n` and `t` values, evaluated in parallel.
    pub fn report(&self, ks: &[usize], ns: &[usize], ts: &[T]) -> Result<DualityReport<T>> {
        let grid: Vec<(usize, usize, T)> =
            ks.iter().flat_map(|&k| ns.iter().flat_map(move |&n| ts.iter().map(move |&t| (k, n, t)))).collect();
        let points = grid.into_par_iter().map(|(k, n, t)| self.point(k, n, t)).collect::<Result<Vec<_>>>()?;
        let max_gap = points.iter().fold(T::zero(), |m, p| m.max(p.gap));
        Ok(DualityReport {
            size: self.params.n(),
            alpha: self.params.alpha(),
            b: self.params.b(),
            s_n: self.params.s_n(),
            points,
            max_gap,
        })
    }
}

/// `|LHS − RHS|` of the duality at one grid point.
pub fn duality_gap<T: Real>(params: &ModelParams<T>, k: usize, n: usize, t: T) -> Result<T> {
    Ok(DualityCheck::new(params)?.point(k, n, t)?.gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::stationary_distribution;
    use crate::error::Error;

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial_ratio::<f64>(3, 0, 5).unwrap(), 1.0);
        assert_eq!(falling_factorial_ratio::<f64>(5, 4, 5).unwrap(), 1.0);
        assert_eq!(falling_factorial_ratio::<f64>(2, 3, 5).unwrap(), 0.0);
        assert!((falling_factorial_ratio::<f64>(4, 2, 6).unwrap() - 12.0 / 30.0).abs() < 1e-15);
        assert!(falling_factorial_ratio::<f64>(7, 1, 5).is_err());
    }

    #[test]
    fn time_zero_and_empty_sample() {
        let p = ModelParams::with_selection(8, 1.5f64, 0.2).unwrap();
        let check = DualityCheck::new(&p).unwrap();
        for k in 0..=8 {
            for n in 0..=8 {
                assert_eq!(check.point(k, n, 0.0).unwrap().gap, 0.0);
            }
            assert_eq!(check.point(k, 0, 3.0).unwrap().gap, 0.0);
        }
    }

    #[test]
    fn duality_holds() {
        let p = ModelParams::with_selection(8, 1.5f64, 0.2).unwrap();
        for n in 1..=3 {
            for &t in &[0.1, 1.0, 10.0] {
                assert!(duality_gap(&p, 7, n, t).unwrap() <= 1e-8);
            }
        }
        for &size in &[5usize, 12] {
            for &a in &[1.3f64, 1.7] {
                let p = ModelParams::with_selection(size, a, 0.05).unwrap();
                let ks: Vec<usize> = (0..=size).collect();
                let r = DualityCheck::new(&p).unwrap().report(&ks, &[1, 2, 3], &[0.1, 1.0, 10.0]).unwrap();
                assert!(r.max_gap <= 1e-8, "N={size} a={a}: {}", r.max_gap);
                assert_eq!(r.points.len(), ks.len() * 9);
            }
        }
    }

    #[test]
    fn long_time_limit_uses_stationary_law() {
        let p = ModelParams::with_selection(10, 1.5f64, 0.3).unwrap();
        let eq = stationary_distribution(&AspChain::new(p).unwrap()).unwrap();
        let want: f64 = (1..=10).map(|a| eq.weight(a) * falling_factorial_ratio::<f64>(9, a, 10).unwrap()).sum();
        let got = DualityCheck::new(&p).unwrap().point(9, 1, 2000.0).unwrap();
        assert!((got.rhs - want).abs() < 1e-8 && (got.lhs - want).abs() < 1e-8);
    }

    #[test]
    fn size_guard() {
        let p = ModelParams::with_selection(31, 1.5f64, 0.2).unwrap();
        assert!(matches!(duality_gap(&p, 3, 1, 1.0), Err(Error::Size(_))));
    }
}
