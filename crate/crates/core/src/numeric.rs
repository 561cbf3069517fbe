//! Low-level numerical kernels: compensated summation, log-factorials and
//! normalized binomial / Poisson weight vectors.

use std::sync::OnceLock;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

const LN_FACT_TABLE: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..LN_FACT_TABLE)
            .map(|k| if k < 2 { 0.0 } else { libm::lgamma(k as f64 + 1.0) })
            .collect()
    })
}

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    if k < LN_FACT_TABLE {
        ln_factorial_table()[k]
    } else {
        libm::lgamma(k as f64 + 1.0)
    }
}

/// `ln C(n, k)` via log-gamma differences.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// The Binomial(n, p) pmf as a vector of length `n + 1`.
///
/// Weights are generated by the ratio recurrence outward from the mode and
/// normalized by their compensated sum, so entries far from the mode
/// underflow to zero instead of overflowing, and the row sums to one.
pub fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    if p <= 0.0 {
        row[0] = 1.0;
        return row;
    }
    if p >= 1.0 {
        row[n] = 1.0;
        return row;
    }
    let q = 1.0 - p;
    let odds = p / q;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    row[mode] = 1.0;
    for k in mode..n {
        row[k + 1] = row[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
        if row[k + 1] == 0.0 {
            break;
        }
    }
    for k in (1..=mode).rev() {
        row[k - 1] = row[k] * (k as f64 / (n - k + 1) as f64) / odds;
        if row[k - 1] == 0.0 {
            break;
        }
    }
    let total = compensated_sum(row.iter().copied());
    row.iter_mut().for_each(|w| *w /= total);
    row
}

/// Minimum support length demanded of any truncated Poisson(`lambda`).
pub fn poisson_min_support(lambda: f64) -> usize {
    (lambda + 10.0 * lambda.sqrt() + 30.0).ceil() as usize + 1
}

/// Poisson(`lambda`) weights on `{0, ..., N}`, renormalized, with the
/// discarded tail below `tail_eps` and `N >= lambda + 10 sqrt(lambda) + 30`.
pub fn poisson_weights(lambda: f64, tail_eps: f64) -> Vec<f64> {
    if lambda <= 0.0 {
        return vec![1.0];
    }
    let mode = lambda.floor() as usize;
    let min_len = poisson_min_support(lambda).max(mode + 2);
    let mut w = vec![0.0; min_len];
    w[mode] = 1.0;
    for k in (1..=mode).rev() {
        w[k - 1] = w[k] * (k as f64) / lambda;
        if w[k - 1] == 0.0 {
            break;
        }
    }
    let mut k = mode;
    loop {
        let next = w[k] * lambda / (k + 1) as f64;
        if k + 1 >= w.len() {
            // Past the mode the ratios are < 1 and decreasing, so the tail
            // beyond k is bounded by a geometric series.
            let ratio = lambda / (k + 2) as f64;
            let head: f64 = compensated_sum(w.iter().copied());
            let tail_bound = next / (1.0 - ratio);
            if ratio < 1.0 && tail_bound <= tail_eps * head {
                break;
            }
            w.push(next);
        } else {
            w[k + 1] = next;
        }
        k += 1;
    }
    while w.len() > 1 && *w.last().unwrap() == 0.0 {
        w.pop();
    }
    let total = compensated_sum(w.iter().copied());
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive() {
        let vals: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat(1e-16).take(10_000)).collect();
        let s = compensated_sum(vals.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let direct: f64 = (1..=5000).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(5000) - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn binomial_row_matches_closed_form() {
        let row = binomial_row(10, 0.3);
        for (k, &v) in row.iter().enumerate() {
            let exact = (ln_binomial(10, k) + k as f64 * 0.3f64.ln() + (10 - k) as f64 * 0.7f64.ln()).exp();
            assert!((v - exact).abs() < 1e-15, "k={k}");
        }
        assert_eq!(binomial_row(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_row(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn binomial_row_large_n_is_accurate() {
        let n = 2000;
        let p = 0.37;
        let row = binomial_row(n, p);
        for k in [600usize, 740, 800, 900] {
            let exact = (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
            assert!(((row[k] - exact) / exact).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn poisson_weights_support_and_tail() {
        for lambda in [0.5, 1.0, 5.0, 1000.0] {
            let w = poisson_weights(lambda, 1e-14);
            assert!(w.len() >= poisson_min_support(lambda));
            assert!((compensated_sum(w.iter().copied()) - 1.0).abs() < 1e-15);
        }
        let w = poisson_weights(1.0, 1e-14);
        assert!((w[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w[2] - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }
}
