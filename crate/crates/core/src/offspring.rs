//! Offspring laws of the neutral reproduction events, their generating functions,
//! and the survival probability of the slightly supercritical Galton–Watson process.
//!
//! An individual that takes part in a non-trivial event either dies (weight `p̃_0`) or
//! becomes the parent of a family of size `k ∈ {2, …, N}` (weight `p̃_k`).

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::asp::QTable;
use crate::error::{ensure, Error, Result};
use crate::model::c_alpha;
use crate::scalar::Real;
use crate::special::{ln_gamma, ln_gamma_ratio};

/// Largest `N` for which the sampler uses an alias table.
pub const ALIAS_MAX_N: usize = 100_000;

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    ensure!(alpha > T::one() && alpha < T::lit(2.0), Domain, "alpha must lie in (1, 2), got {alpha}");
    Ok(())
}

/// Rate at which a given individual takes part in a non-trivial event, in units of
/// `c_N`:
///
/// `c̃_N = c_α Γ(N+α)/Γ(N+1) − 1/(α−1) + Γ(N+α−1)/(Γ(α+1)Γ(N)) − Γ(N+α−1)/(Γ(α+1)Γ(N+1))`.
pub fn c_tilde<T: Real>(n: usize, alpha: T) -> Result<T> {
    ensure!(n >= 2, Domain, "c_tilde needs N >= 2, got {n}");
    check_alpha(alpha)?;
    let nf = T::of(n);
    let one = T::one();
    let lead = ln_gamma_ratio(nf + one, alpha - one).exp();
    let next = ln_gamma_ratio(nf, alpha - one).exp();
    Ok(c_tilde_from(alpha, nf, lead, next))
}

/// `lead = Γ(N+α)/Γ(N+1)`, `next = Γ(N+α−1)/Γ(N)`.
fn c_tilde_from<T: Real>(alpha: T, nf: T, lead: T, next: T) -> T {
    let one = T::one();
    let g = ln_gamma(alpha + one).exp();
    c_alpha(alpha) * lead - (alpha - one).recip() + next / g * (one - nf.recip())
}

fn p0_numerator<T: Real>(alpha: T, lead: T) -> T {
    c_alpha(alpha) * lead - (alpha - T::one()).recip()
}

/// Weight of `k` offspring in the limiting law `f̃`: `1/α` at `k = 0`, `0` at `k = 1`, and
/// `(α−1)/Γ(2−α) · Γ(k−α)/Γ(k+1)` for `k ≥ 2`.
pub fn limit_weight<T: Real>(k: usize, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    Ok(match k {
        0 => alpha.recip(),
        1 => T::zero(),
        _ => {
            let kf = T::of(k);
            (alpha - T::one()) / ln_gamma(T::lit(2.0) - alpha).exp()
                * ln_gamma_ratio(kf + T::one(), -alpha - T::one()).exp()
        }
    })
}

#[derive(Debug, Clone)]
enum Sampler {
    Alias(WeightedAliasIndex<f64>),
    Cdf(Vec<f64>),
}

/// The finite-`N` offspring law.
#[derive(Debug, Clone)]
pub struct OffspringLaw<T> {
    n: usize,
    alpha: T,
    c_tilde: T,
    p0: T,
    p0_closed: T,
    pk: Vec<T>,
    log_pk: Vec<T>,
    sampler: Sampler,
}

/// Tolerance of the build-time agreement between the two routes to `p̃_0` in double
/// precision. Narrower scalars use `64 ε √N` when that is larger.
pub const P0_CROSS_CHECK_TOL: f64 = 1e-9;

fn p0_cross_check_tol<T: Real>(n: usize) -> T {
    T::lit(P0_CROSS_CHECK_TOL).max(T::epsilon() * T::lit(64.0) * T::of(n).sqrt())
}

impl<T: Real> OffspringLaw<T> {
    /// `p̃_k = q(N, N−k+1) / (N c̃_N)` for `k = 2..=N`. `p̃_0` is taken as the complement
    /// and must agree with its closed form to `1e−9` (in `f64`).
    pub fn build(n: usize, alpha: T) -> Result<Self> {
        ensure!(n >= 2, Domain, "offspring law needs N >= 2, got {n}");
        check_alpha(alpha)?;
        let table = QTable::new(alpha, n)?;
        let nf = T::of(n);
        let lead = table.growth(n);
        let next = table.target_factors()[n - 1];
        let ct = c_tilde_from(alpha, nf, lead, next);
        let ln_ct = ct.ln();
        let ln_n = nf.ln();
        let log_pk: Vec<T> = (2..=n).map(|k| table.ln_q(n, n - k + 1) - ln_n - ln_ct).collect();
        let pk: Vec<T> = log_pk.iter().map(|v| v.exp()).collect();
        let mass: T = pk.iter().copied().sum();
        let p0 = T::one() - mass;
        let p0_closed = p0_numerator(alpha, lead) / ct;
        let gap = (p0 - p0_closed).abs();
        if gap.is_nan() || gap > p0_cross_check_tol::<T>(n) {
            return Err(Error::Numeric(format!(
                "p0 routes disagree by {gap} at N={n}, alpha={alpha} (complement {p0}, closed form {p0_closed})"
            )));
        }

        let mut weights = Vec::with_capacity(n);
        weights.push(p0.as_f64().max(0.0));
        weights.extend(pk.iter().map(|p| p.as_f64()));
        let sampler = if n <= ALIAS_MAX_N {
            Sampler::Alias(WeightedAliasIndex::new(weights).map_err(|e| Error::Numeric(format!("alias table: {e}")))?)
        } else {
            let mut acc = 0.0;
            Sampler::Cdf(
                weights
                    .into_iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect(),
            )
        };
        Ok(Self { n, alpha, c_tilde: ct, p0, p0_closed, pk, log_pk, sampler })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn c_tilde(&self) -> T {
        self.c_tilde
    }

    /// `p̃_0` as the complement `1 − Σ_k p̃_k`.
    pub fn p0(&self) -> T {
        self.p0
    }

    /// `p̃_0 = (c_α Γ(N+α)/Γ(N+1) − 1/(α−1)) / c̃_N`.
    pub fn p0_closed(&self) -> T {
        self.p0_closed
    }

    /// `p̃_k` for `k = 2..=N`, index `k−2`.
    pub fn pk(&self) -> &[T] {
        &self.pk
    }

    pub fn log_pk(&self) -> &[T] {
        &self.log_pk
    }

    /// Weight of `k` offspring, `0 ≤ k ≤ N`.
    pub fn weight(&self, k: usize) -> T {
        match k {
            0 => self.p0,
            1 => T::zero(),
            _ if k <= self.n => self.pk[k - 2],
            _ => T::zero(),
        }
    }

    /// `|p̃_0(closed) + Σ_k p̃_k − 1|`.
    pub fn normalization_residual(&self) -> T {
        let mass: T = self.pk.iter().copied().sum();
        (self.p0_closed + mass - T::one()).abs()
    }

    pub fn mean(&self) -> T {
        self.pk.iter().enumerate().map(|(i, &p)| T::of(i + 2) * p).sum()
    }

    pub fn uses_alias(&self) -> bool {
        matches!(self.sampler, Sampler::Alias(_))
    }

    /// Draws a number of offspring.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let idx = match &self.sampler {
            Sampler::Alias(table) => table.sample(rng),
            Sampler::Cdf(cdf) => {
                let total = cdf[cdf.len() - 1];
                let u = rng.random::<f64>() * total;
                cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
            }
        };
        if idx == 0 {
            0
        } else {
            idx + 1
        }
    }
}

fn check_unit<T: Real>(z: T) -> Result<()> {
    ensure!(z >= T::zero() && z <= T::one(), Domain, "z must lie in [0, 1], got {z}");
    Ok(())
}

/// `f̃(z) = (1−z)^α / α + z`.
pub fn gen_fn_tilde<T: Real>(z: T, alpha: T) -> Result<T> {
    check_unit(z)?;
    check_alpha(alpha)?;
    Ok((T::one() - z).powf(alpha) / alpha + z)
}

/// `f̃_N(z) = s z² / (1+s) + f̃(z) / (1+s)`.
pub fn gen_fn_selective<T: Real>(z: T, alpha: T, s: T) -> Result<T> {
    ensure!(s >= T::zero() && s.is_finite(), Domain, "s must be finite and >= 0, got {s}");
    let base = gen_fn_tilde(z, alpha)?;
    let one = T::one();
    Ok((s * z * z + base) / (one + s))
}

/// Survival probability `1 − q̃` of the Galton–Watson process with generating function
/// `f̃_N`, where `q̃` is the smallest fixed point in `[0, 1)`.
///
/// With `u = 1 − z` the fixed-point equation becomes `s = s u + u^{α−1}/α`, whose left
/// minus right side is monotone in `u`; the root is found by bisection down to the
/// resolution of the floating-point grid, well beyond `1e−15` absolute.
pub fn gw_survival<T: Real>(alpha: T, s: T) -> Result<T> {
    check_alpha(alpha)?;
    ensure!(s >= T::zero() && s.is_finite(), Domain, "s must be finite and >= 0, got {s}");
    if s == T::zero() {
        return Ok(T::zero());
    }
    let one = T::one();
    let h = |u: T| s * u + u.powf(alpha - one) / alpha - s;
    let (mut lo, mut hi) = (T::zero(), one);
    for _ in 0..4000 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// Least-squares slope of `ln w` against `ln k`.
pub fn log_log_slope<T: Real>(points: &[(usize, T)]) -> Result<T> {
    ensure!(points.len() >= 2, Domain, "slope needs at least two points");
    ensure!(points.iter().all(|(k, w)| *k > 0 && *w > T::zero()), Domain, "slope needs positive k and weights");
    let m = T::of(points.len());
    let xs: Vec<T> = points.iter().map(|(k, _)| T::of(*k).ln()).collect();
    let ys: Vec<T> = points.iter().map(|(_, w)| w.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    Ok(sxy / sxx)
}

/// Tail slope of the limiting law over `k` log-spaced in `[k_lo, k_hi]`.
pub fn limit_tail_slope<T: Real>(alpha: T, k_lo: usize, k_hi: usize, points: usize) -> Result<T> {
    ensure!(k_lo >= 2 && k_hi > k_lo && points >= 2, Domain, "need 2 <= k_lo < k_hi and >= 2 points");
    let (lo, hi) = ((k_lo as f64).ln(), (k_hi as f64).ln());
    let mut ks: Vec<usize> =
        (0..points).map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().round() as usize).collect();
    ks.dedup();
    let pts = ks.into_iter().map(|k| Ok((k, limit_weight(k, alpha)?))).collect::<Result<Vec<_>>>()?;
    log_log_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::tanh_sinh;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn c_tilde_at_two_is_one() {
        for &a in &[1.1f64, 1.5, 1.9] {
            assert!((c_tilde(2, a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn c_tilde_asymptotic_band() {
        let (n, a) = (10_000usize, 1.5f64);
        let lead = (n as f64).powf(a - 1.0) / ((a - 1.0) * ln_gamma(a).exp());
        let r = c_tilde(n, a).unwrap() / lead;
        assert!(r > 0.95 && r < 1.05, "{r}");
    }

    #[test]
    fn c_tilde_matches_quadrature() {
        // c̃_N = ∫ p^{−1} (1 − (1−p)^{N−1}) Λ(dp)
        for &(n, a) in &[(100usize, 1.2f64), (37, 1.5), (1000, 1.8)] {
            let norm = crate::special::log_beta(2.0 - a, a).unwrap().exp();
            let m = (n - 1) as f64;
            let oracle = tanh_sinh(|p, q| {
                let ln_q = if p < 0.5 { (-p).ln_1p() } else { q.ln() };
                let survive = -(m * ln_q).exp_m1();
                p.powf(-a) * survive * q.powf(a - 1.0)
            }) / norm;
            assert!(rel(c_tilde(n, a).unwrap(), oracle) < 1e-8, "N={n} a={a}");
        }
    }

    #[test]
    fn table_route_matches_direct_route() {
        for &(n, a) in &[(2usize, 1.5f64), (50, 1.2), (12_345, 1.7)] {
            let law = OffspringLaw::build(n, a).unwrap();
            assert!(rel(law.c_tilde(), c_tilde(n, a).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn two_individuals() {
        let law = OffspringLaw::build(2, 1.5f64).unwrap();
        assert_eq!(law.pk().len(), 1);
        assert!((law.weight(2) - 0.5).abs() < 1e-13);
        assert!((law.p0() - 0.5).abs() < 1e-13);
        assert!((law.p0_closed() - 0.5).abs() < 1e-13);
        assert_eq!(law.weight(1), 0.0);
    }

    #[test]
    fn weights_match_q_rates() {
        let (n, a) = (300usize, 1.35f64);
        let law = OffspringLaw::build(n, a).unwrap();
        let ct = c_tilde(n, a).unwrap();
        for &k in &[2usize, 3, 77, 299, 300] {
            let want = crate::asp::q_rate(n, n - k + 1, a).unwrap() / (n as f64 * ct);
            assert!(rel(law.weight(k), want) < 1e-11, "k={k}");
        }
    }

    #[test]
    fn normalization_and_positivity() {
        for &n in &[2usize, 10, 1_000, 100_000, 150_000] {
            for &a in &[1.1f64, 1.5, 1.9] {
                let law = OffspringLaw::build(n, a).unwrap();
                assert!(law.normalization_residual() <= 1e-10, "N={n} a={a}: {}", law.normalization_residual());
                assert!((law.p0() - law.p0_closed()).abs() <= 1e-9);
                assert!(law.pk().iter().all(|&p| p > 0.0));
                assert_eq!(law.uses_alias(), n <= ALIAS_MAX_N);
            }
        }
    }

    #[test]
    fn finite_law_approaches_limit() {
        let a = 1.5f64;
        let mut gap0 = f64::INFINITY;
        let mut gap3 = f64::INFINITY;
        let limit3 = limit_weight(3, a).unwrap();
        for &n in &[100usize, 1_000, 10_000] {
            let law = OffspringLaw::build(n, a).unwrap();
            let g0 = (law.p0() - 2.0 / 3.0).abs();
            let g3 = (law.weight(3) - limit3).abs();
            assert!(g0 < gap0 && g3 < gap3, "N={n}");
            gap0 = g0;
            gap3 = g3;
        }
    }

    #[test]
    fn limit_law_is_a_critical_distribution() {
        for &a in &[1.2f64, 1.5, 1.8] {
            assert!((gen_fn_tilde(0.0, a).unwrap() - limit_weight(0, a).unwrap()).abs() < 1e-15);
            let (lo, hi) = (1_000usize, 100_000usize);
            let slope = limit_tail_slope(a, lo, hi, 40).unwrap();
            assert!((slope + 1.0 + a).abs() < 0.05, "a={a}: slope {slope}");
            let k = 50_000usize;
            let scaled = limit_weight(k, a).unwrap() * (k as f64).powf(1.0 + a);
            let want = (a - 1.0) / ln_gamma(2.0 - a).exp();
            assert!(rel(scaled, want) < 0.05);
        }
    }

    #[test]
    fn finite_tail_is_limit_tail_times_bulk_factor() {
        let (n, a) = (10_000usize, 1.5f64);
        let law = OffspringLaw::build(n, a).unwrap();
        for k in (n / 10..=n / 2).step_by(97) {
            let bulk = (1.0 - k as f64 / n as f64).powf(a - 1.0);
            let r = law.weight(k) / (limit_weight(k, a).unwrap() * bulk);
            assert!((r - 1.0).abs() < 0.05, "k={k}: {r}");
        }
    }

    #[test]
    fn generating_functions() {
        let a = 1.5f64;
        assert_eq!(gen_fn_tilde(1.0, a).unwrap(), 1.0);
        assert!((gen_fn_tilde(0.0, a).unwrap() - 1.0 / a).abs() < 1e-15);
        let h = 1e-6;
        // the one-sided difference carries the bias h^{α−1}/α from the (1−z)^α term
        let d = (gen_fn_tilde(1.0, a).unwrap() - gen_fn_tilde(1.0 - h, a).unwrap()) / h;
        assert!((d - (1.0 - h.powf(a - 1.0) / a)).abs() < 1e-8);
        let a = 1.8f64;
        let d = (gen_fn_tilde(1.0, a).unwrap() - gen_fn_tilde(1.0 - h, a).unwrap()) / h;
        assert!((d - 1.0).abs() < 1e-4);
        for &s in &[0.0, 0.01, 0.5] {
            assert!((gen_fn_selective(1.0, a, s).unwrap() - 1.0).abs() < 1e-15);
            let d = (gen_fn_selective(1.0, a, s).unwrap() - gen_fn_selective(1.0 - h, a, s).unwrap()) / h;
            assert!((d - (2.0 * s + 1.0) / (1.0 + s)).abs() < 1e-4);
        }
        assert_eq!(gen_fn_selective(0.3, a, 0.0).unwrap(), gen_fn_tilde(0.3, a).unwrap());
        assert!(gen_fn_tilde(1.5, a).is_err());
    }

    #[test]
    fn survival_probability() {
        let a = 1.5f64;
        assert_eq!(gw_survival(a, 0.0).unwrap(), 0.0);
        let mut last_dev = f64::INFINITY;
        let mut last_u = 1.0;
        for &s in &[1e-2, 1e-3, 1e-4] {
            let u = gw_survival(a, s).unwrap();
            assert!(u > 0.0 && u < last_u);
            let q = 1.0 - u;
            assert!((gen_fn_selective(q, a, s).unwrap() - q).abs() < 1e-14);
            let dev = (u / (a * s).powf(1.0 / (a - 1.0)) - 1.0).abs();
            assert!(dev < last_dev);
            last_dev = dev;
            last_u = u;
        }
    }

    #[test]
    fn sampler_frequencies() {
        for &n in &[60usize, 150_000] {
            let law = OffspringLaw::build(n, 1.5f64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let draws = 1_000_000usize;
            let mut counts = vec![0usize; n + 1];
            for _ in 0..draws {
                counts[law.sample(&mut rng)] += 1;
            }
            assert_eq!(counts[1], 0);
            for k in [0usize, 2, 3, 4, 5, 10, 20] {
                let p = law.weight(k);
                let expect = p * draws as f64;
                let sd = (draws as f64 * p * (1.0 - p)).sqrt();
                assert!((counts[k] as f64 - expect).abs() <= 4.0 * sd, "N={n} k={k}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(c_tilde(1, 1.5f64), Err(Error::Domain(_))));
        assert!(matches!(OffspringLaw::build(10, 2.0f64), Err(Error::Domain(_))));
        assert!(gw_survival(1.5f64, -0.1).is_err());
    }
}
