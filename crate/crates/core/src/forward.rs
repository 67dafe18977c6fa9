//! The forward population model: the type-count chain `X_t` (number of wildtype
//! individuals among `N`), its exact generator for small `N`, fixation probabilities,
//! and an event-driven Monte Carlo simulator for large `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::asp::{total_down_rate, QTable};
use crate::ctmc::{absorption_probabilities, SparseGenerator};
use crate::error::{ensure, Error, Result};
use crate::model::ModelParams;
use crate::scalar::Real;
use crate::special::{ln_gamma, LogGammaTable};

/// Default size guard for the dense generator enumeration (`O(N³)` transitions).
pub const DENSE_MAX_N: usize = 400;

/// `ln` of the shared factor `c_N Γ(k−α) Γ(N−k+α) / (Γ(N) Γ(2−α) Γ(α))` of every event
/// with `k` participants.
fn ln_event_weight<T: Real>(k: usize, params: &ModelParams<T>) -> T {
    let (a, n) = (params.alpha(), T::of(params.n()));
    let kf = T::of(k);
    params.c_n().ln() + ln_gamma(kf - a) + ln_gamma(n - kf + a) - ln_gamma(n) - ln_gamma(T::lit(2.0) - a) - ln_gamma(a)
}

fn ln_binomial<T: Real>(n: usize, k: usize) -> T {
    ln_gamma(T::of(n + 1)) - ln_gamma(T::of(k + 1)) - ln_gamma(T::of(n - k + 1))
}

/// Rate of a neutral event in which exactly `i` wildtype and `j` beneficial
/// individuals take part, with `x` wildtype individuals present:
/// `c_N C(x,i) C(N−x,j) Γ(i+j−α) Γ(N−i−j+α) / (Γ(N) Γ(2−α) Γ(α))`.
///
/// Events with fewer than two participants change nothing and get rate `0`.
pub fn neutral_config_rate<T: Real>(x: usize, i: usize, j: usize, params: &ModelParams<T>) -> Result<T> {
    let n = params.n();
    ensure!(x <= n && i <= x && j <= n - x, Domain, "need i <= x <= N and j <= N - x, got x={x}, i={i}, j={j}");
    if i + j < 2 {
        return Ok(T::zero());
    }
    Ok((ln_event_weight(i + j, params) + ln_binomial::<T>(x, i) + ln_binomial::<T>(n - x, j)).exp())
}

/// Which parts of the dynamics enter the generator; both by default.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorOptions {
    pub max_n: usize,
    pub neutral: bool,
    pub selective: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { max_n: DENSE_MAX_N, neutral: true, selective: true }
    }
}

/// The type-count chain on `{0, …, N}`; `0` (beneficial fixed) and `N` (wildtype
/// fixed) are absorbing.
#[derive(Debug, Clone)]
pub struct FrequencyChain<T> {
    params: ModelParams<T>,
    generator: SparseGenerator<T>,
}

impl<T: Real> FrequencyChain<T> {
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn generator(&self) -> &SparseGenerator<T> {
        &self.generator
    }

    /// `P(X hits 0 | X_0 = x)` for every `x ∈ {0, …, N}`.
    pub fn fixation_profile(&self) -> Result<Vec<T>> {
        absorption_probabilities(&self.generator, 0)
    }
}

pub fn build_frequency_generator<T: Real>(params: &ModelParams<T>) -> Result<FrequencyChain<T>> {
    build_frequency_generator_with(params, GeneratorOptions::default())
}

/// Aggregates all neutral `(i, j)` events and the selective move `x → x−1` at rate
/// `s_N x (N−x) / N`. In a neutral event the parent is wildtype with probability
/// `i/(i+j)`, giving `x + j`, and beneficial otherwise, giving `x − i`.
pub fn build_frequency_generator_with<T: Real>(
    params: &ModelParams<T>,
    options: GeneratorOptions,
) -> Result<FrequencyChain<T>> {
    let n = params.n();
    ensure!(
        n <= options.max_n,
        Size,
        "N = {n} exceeds the exact-generator limit {}; use the Monte Carlo estimator instead",
        options.max_n
    );
    let alpha = params.alpha();
    let one = T::one();
    // ln k! = ln Γ(k+1) at index k+1; ln Γ(k−α) at index k−1; ln Γ(m+α) at index m+1
    let ln_fact = LogGammaTable::new(T::zero(), n + 1)?;
    let ln_g_minus = LogGammaTable::new(one - alpha, n)?;
    let ln_g_plus = LogGammaTable::new(alpha - one, n)?;
    let ln_const = params.c_n().ln() - ln_fact.get(n) - ln_gamma(T::lit(2.0) - alpha) - ln_gamma(alpha);
    let ln_weight = |k: usize| ln_const + ln_g_minus.get(k - 1) + ln_g_plus.get(n - k + 1);
    let ln_choose = |a: usize, b: usize| ln_fact.get(a + 1) - ln_fact.get(b + 1) - ln_fact.get(a - b + 1);
    let weights: Vec<T> = (0..=n).map(|k| if k >= 2 { ln_weight(k) } else { T::zero() }).collect();
    let s = params.s_n();
    let nf = T::of(n);

    let mut rows = Vec::with_capacity(n + 1);
    for x in 0..=n {
        if x == 0 || x == n {
            rows.push(Vec::new());
            continue;
        }
        let mut dense = vec![T::zero(); n + 1];
        if options.neutral {
            for i in 1..=x {
                let ci = ln_choose(x, i);
                for j in 1..=n - x {
                    let k = i + j;
                    let rate = (weights[k] + ci + ln_choose(n - x, j)).exp();
                    let kf = T::of(k);
                    dense[x + j] = dense[x + j] + rate * T::of(i) / kf;
                    dense[x - i] = dense[x - i] + rate * T::of(j) / kf;
                }
            }
        }
        if options.selective {
            let xf = T::of(x);
            dense[x - 1] = dense[x - 1] + s * xf * (nf - xf) / nf;
        }
        dense[x] = T::zero();
        rows.push(dense.into_iter().enumerate().filter(|(_, r)| *r > T::zero()).collect());
    }
    let generator = SparseGenerator::from_rows(rows)?;
    Ok(FrequencyChain { params: *params, generator })
}

/// `P(X hits 0 before N | X_0 = x0)`: the probability that the beneficial type fixes.
pub fn fixation_prob_exact<T: Real>(chain: &FrequencyChain<T>, x0: usize) -> Result<T> {
    let n = chain.params.n();
    ensure!(x0 <= n, Domain, "x0 must lie in 0..={n}, got {x0}");
    if x0 == 0 {
        return Ok(T::one());
    }
    if x0 == n {
        return Ok(T::zero());
    }
    Ok(chain.fixation_profile()?[x0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Absorbed {
    BeneficialFixed,
    WildtypeFixed,
}

/// Count-level simulator of the individual-based model.
///
/// Neutral events occur at total rate `N ρ = c_N Σ_k q(N, N−k+1)`. The parent is a
/// uniform individual, the family size `k` has weight `q(N, N−k+1)`, and the `k−1`
/// replaced individuals are a uniform subset of the other `N−1`. Selective events
/// occur at rate `s_N (N−x)`: a beneficial individual replaces a uniform individual.
#[derive(Debug, Clone)]
pub struct ForwardSimulator {
    n: usize,
    neutral_rate: f64,
    s_n: f64,
    family: WeightedAliasIndex<f64>,
}

/// Family sizes up to this many victims are drawn one by one.
const SEQUENTIAL_VICTIMS: usize = 8;

impl ForwardSimulator {
    pub fn new<T: Real>(params: &ModelParams<T>) -> Result<Self> {
        let n = params.n();
        let table = QTable::new(params.alpha(), n)?;
        let weights: Vec<f64> = (2..=n).map(|k| table.q(n, n - k + 1).as_f64()).collect();
        let family = WeightedAliasIndex::new(weights).map_err(|e| Error::Numeric(format!("family-size table: {e}")))?;
        Ok(Self { n, neutral_rate: total_down_rate(n, params)?.as_f64(), s_n: params.s_n().as_f64(), family })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total rate of neutral events, `N ρ`.
    pub fn neutral_rate(&self) -> f64 {
        self.neutral_rate
    }

    fn wildtype_victims<R: Rng + ?Sized>(&self, rng: &mut R, wildtype: usize, victims: usize) -> usize {
        let pool = self.n - 1;
        if wildtype == 0 {
            return 0;
        }
        if wildtype == pool {
            return victims;
        }
        if victims <= SEQUENTIAL_VICTIMS {
            let (mut wt, mut total, mut hits) = (wildtype, pool, 0);
            for _ in 0..victims {
                if rng.random_range(0..total) < wt {
                    wt -= 1;
                    hits += 1;
                }
                total -= 1;
            }
            return hits;
        }
        Hypergeometric::new(pool as u64, wildtype as u64, victims as u64)
            .expect("valid hypergeometric parameters")
            .sample(rng) as usize
    }

    /// Runs the chain from `x0` wildtype individuals until one type has fixed.
    pub fn run<R: Rng + ?Sized>(&self, x0: usize, rng: &mut R) -> Absorbed {
        let n = self.n;
        let mut x = x0.min(n);
        loop {
            if x == 0 {
                return Absorbed::BeneficialFixed;
            }
            if x == n {
                return Absorbed::WildtypeFixed;
            }
            let selective = self.s_n * (n - x) as f64;
            let u = rng.random::<f64>() * (self.neutral_rate + selective);
            if u < self.neutral_rate {
                let k = self.family.sample(rng) + 2;
                let parent_wildtype = rng.random_range(0..n) < x;
                let rest = x - usize::from(parent_wildtype);
                let hit = self.wildtype_victims(rng, rest, k - 1);
                x -= hit;
                if parent_wildtype {
                    x += k - 1;
                }
            } else if rng.random_range(0..n) < x {
                x -= 1;
            }
        }
    }
}

pub fn simulate_forward<T: Real, R: Rng + ?Sized>(params: &ModelParams<T>, x0: usize, rng: &mut R) -> Result<Absorbed> {
    ensure!(x0 <= params.n(), Domain, "x0 must lie in 0..={}, got {x0}", params.n());
    Ok(ForwardSimulator::new(params)?.run(x0, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub point: f64,
    /// `sqrt(p(1−p)/n)`; zero for a single replicate.
    pub std_error: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(successes: u64, replicates: u64, seed: u64) -> Self {
        let n = replicates as f64;
        let point = successes as f64 / n;
        Self { point, std_error: (point * (1.0 - point) / n).sqrt(), replicates, seed }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `i`: `splitmix64(splitmix64(master) ^ i)`. Each replicate then
/// runs on its own `ChaCha8Rng`, so results do not depend on thread scheduling.
pub fn replicate_seed(master: u64, i: u64) -> u64 {
    splitmix64(splitmix64(master) ^ i)
}

/// Fraction of `replicates` independent runs from `x0` in which the beneficial type
/// fixes. Replicates run in parallel.
pub fn fixation_prob_mc<T: Real>(
    params: &ModelParams<T>,
    x0: usize,
    replicates: u64,
    master_seed: u64,
) -> Result<McEstimate> {
    ensure!(replicates >= 1, Config, "need at least one replicate");
    ensure!(x0 <= params.n(), Domain, "x0 must lie in 0..={}, got {x0}", params.n());
    let sim = ForwardSimulator::new(params)?;
    let fixed = (0..replicates)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(master_seed, i));
            sim.run(x0, &mut rng) == Absorbed::BeneficialFixed
        })
        .count() as u64;
    Ok(McEstimate::from_counts(fixed, replicates, master_seed))
}
