//! Finite continuous-time Markov chain plumbing: sparse generators, transient
//! distributions by uniformization, and absorption probabilities.

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;
use crate::special::ln_gamma;

/// Generator matrix stored as off-diagonal rows; the diagonal is implied by
/// `Q_ii = −Σ_{j≠i} Q_ij`, so rows sum to zero by construction.
#[derive(Debug, Clone)]
pub struct SparseGenerator<T> {
    rows: Vec<Vec<(usize, T)>>,
    exit: Vec<T>,
}

impl<T: Real> SparseGenerator<T> {
    /// Builds from off-diagonal entries per row. Zero entries are dropped; diagonal
    /// entries or negative rates are rejected.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n = rows.len();
        let mut clean = Vec::with_capacity(n);
        let mut exit = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            let mut kept = Vec::with_capacity(row.len());
            let mut total = T::zero();
            for (j, r) in row {
                ensure!(j < n, Domain, "generator column {j} out of range");
                ensure!(j != i, Domain, "diagonal entry given explicitly in row {i}");
                ensure!(r >= T::zero() && r.is_finite(), Domain, "rate {r} at ({i},{j}) must be finite and >= 0");
                if r > T::zero() {
                    total = total + r;
                    kept.push((j, r));
                }
            }
            clean.push(kept);
            exit.push(total);
        }
        Ok(Self { rows: clean, exit })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    /// Total rate of leaving state `i` (= `−Q_ii`).
    pub fn exit_rate(&self, i: usize) -> T {
        self.exit[i]
    }

    pub fn rate(&self, i: usize, j: usize) -> T {
        if i == j {
            return -self.exit[i];
        }
        self.rows[i].iter().find(|(c, _)| *c == j).map_or(T::zero(), |&(_, r)| r)
    }

    pub fn max_exit_rate(&self) -> T {
        self.exit.iter().fold(T::zero(), |m, &r| m.max(r))
    }

    /// Row `i` as a dense vector including the diagonal.
    pub fn dense_row(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_states()];
        for &(j, r) in &self.rows[i] {
            out[j] = out[j] + r;
        }
        out[i] = -self.exit[i];
        out
    }

    /// `max_i |Σ_j Q_ij| / max_i |Q_ii|`, recomputed from the dense rows.
    pub fn row_sum_residual(&self) -> T {
        let scale = self.max_exit_rate().max(T::min_positive_value());
        (0..self.n_states()).map(|i| self.dense_row(i).into_iter().sum::<T>().abs()).fold(T::zero(), T::max) / scale
    }

    /// `v ↦ v Q`.
    pub fn left_multiply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_states()];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            out[i] = out[i] - vi * self.exit[i];
            for &(j, r) in &self.rows[i] {
                out[j] = out[j] + vi * r;
            }
        }
        out
    }
}

/// Distribution at time `t` started from `initial`, by uniformization.
///
/// The Poisson series is cut once the neglected weight falls below `tol`; since the
/// uniformized kernel is stochastic this bounds the total-variation error by `tol`.
pub fn transient_distribution<T: Real>(generator: &SparseGenerator<T>, initial: usize, t: T, tol: T) -> Result<Vec<T>> {
    ensure!(initial < generator.n_states(), Domain, "initial state {initial} out of range");
    let mut start = vec![T::zero(); generator.n_states()];
    start[initial] = T::one();
    transient_from(generator, &start, t, tol)
}

/// As [`transient_distribution`] from an arbitrary initial law.
pub fn transient_from<T: Real>(generator: &SparseGenerator<T>, initial: &[T], t: T, tol: T) -> Result<Vec<T>> {
    ensure!(t >= T::zero() && t.is_finite(), Domain, "time must be finite and >= 0, got {t}");
    ensure!(tol > T::zero() && tol < T::one(), Domain, "tolerance must lie in (0,1), got {tol}");
    ensure!(initial.len() == generator.n_states(), Domain, "initial law has wrong length");
    let lambda = generator.max_exit_rate();
    if t == T::zero() || lambda == T::zero() {
        return Ok(initial.to_vec());
    }
    let mean = lambda * t;
    let ln_mean = mean.ln();
    // generous cap; the tail criterion normally stops far earlier
    let cap = (mean + T::lit(60.0) * mean.sqrt() + T::lit(200.0)).to_usize().unwrap_or(usize::MAX);

    let n = generator.n_states();
    let mut v = initial.to_vec();
    let mut acc = vec![T::zero(); n];
    let mut cumulative = T::zero();
    let mut k = 0usize;
    loop {
        let kk = T::of(k);
        let weight = (kk * ln_mean - mean - ln_gamma(kk + T::one())).exp();
        if weight > T::zero() {
            for (a, &x) in acc.iter_mut().zip(&v) {
                *a = *a + weight * x;
            }
            cumulative = cumulative + weight;
        }
        if (kk >= mean && T::one() - cumulative <= tol) || k >= cap {
            break;
        }
        // v ← v (I + Q/λ)
        let mut next: Vec<T> =
            v.iter().enumerate().map(|(i, &x)| x * (T::one() - generator.exit[i] / lambda)).collect();
        for (i, &x) in v.iter().enumerate() {
            if x == T::zero() {
                continue;
            }
            let scaled = x / lambda;
            for &(j, r) in &generator.rows[i] {
                next[j] = next[j] + scaled * r;
            }
        }
        v = next;
        k += 1;
    }
    if T::one() - cumulative > tol {
        return Err(Error::Numeric(format!("uniformization did not reach tolerance {tol} within {k} terms")));
    }
    Ok(acc)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting. `a` is row-major.
pub(crate) fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    ensure!(a.len() == n && a.iter().all(|r| r.len() == n), Domain, "matrix shape mismatch");
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if a[pivot][col] == T::zero() {
            return Err(Error::Numeric(format!("singular system at column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let prow = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / prow[col];
            if factor == T::zero() {
                continue;
            }
            for c in col..n {
                row[c] = row[c] - factor * prow[c];
            }
            b[col + 1 + offset] = b[col + 1 + offset] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in i + 1..n {
            s = s - a[i][c] * x[c];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Probability of being absorbed in `target` rather than any other absorbing state,
/// for every starting state. Absorbing states are those with zero exit rate.
pub fn absorption_probabilities<T: Real>(generator: &SparseGenerator<T>, target: usize) -> Result<Vec<T>> {
    let n = generator.n_states();
    ensure!(target < n, Domain, "target state out of range");
    ensure!(generator.exit_rate(target) == T::zero(), Domain, "target state {target} is not absorbing");
    let transient: Vec<usize> = (0..n).filter(|&i| generator.exit_rate(i) > T::zero()).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in transient.iter().enumerate() {
        index[i] = k;
    }
    let m = transient.len();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut b = vec![T::zero(); m];
    for (k, &i) in transient.iter().enumerate() {
        a[k][k] = -generator.exit_rate(i);
        for &(j, r) in generator.row(i) {
            if j == target {
                b[k] = b[k] - r;
            } else if index[j] != usize::MAX {
                a[k][index[j]] = a[k][index[j]] + r;
            }
        }
    }
    let h = solve_dense(a, b)?;
    let mut out = vec![T::zero(); n];
    out[target] = T::one();
    for (k, &i) in transient.iter().enumerate() {
        out[i] = h[k];
    }
    Ok(out)
}
