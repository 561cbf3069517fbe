//! Scalar functionals: entropy, the Poisson entropy curve `E(t)` and its
//! derivative `J(t)`, the entropy power `V = E^{-1}(H)`, relative entropy to
//! the matched Poisson, and the `L`, `Lambda` and `U` functionals.
//!
//! All values are in nats unless stated otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ln_factorial, poisson_weights, CompensatedSum};
use crate::pmf::FinitePmf;
use crate::tolerance::ToleranceConfig;

/// An entropy in both nats and bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub nats: f64,
    pub bits: f64,
}

impl EntropyValue {
    pub fn from_nats(nats: f64) -> Self {
        EntropyValue { nats, bits: nats / std::f64::consts::LN_2 }
    }
}

/// Shannon entropy with the convention `0 log 0 = 0`.
pub fn entropy(p: &FinitePmf) -> EntropyValue {
    let h = compensated_sum(
        p.probs()
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|&q| -q * q.ln()),
    );
    EntropyValue::from_nats(h.max(0.0))
}

/// Entropy in nats; shorthand used internally.
pub(crate) fn h(p: &FinitePmf) -> f64 {
    entropy(p).nats
}

fn check_rate(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("Poisson rate t = {t} must be >= 0")))
    }
}

/// `E(t) = H(Poisson(t)) = t - t ln t + E[ln Z!]`, summed over the truncated
/// support.
pub fn poisson_entropy(t: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_rate(t)?;
    Ok(poisson_entropy_unchecked(t, tol.tail_eps))
}

fn poisson_entropy_unchecked(t: f64, tail_eps: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let w = poisson_weights(t, tail_eps);
    let mut acc = CompensatedSum::new();
    acc.add(t);
    acc.add(-t * t.ln());
    for (z, &p) in w.iter().enumerate().skip(2) {
        acc.add(p * ln_factorial(z));
    }
    acc.value()
}

/// `J(t) = E'(t) = sum_z Pi_t(z) ln((z+1)/t)`, strictly positive.
pub fn poisson_entropy_derivative(t: f64, tol: &ToleranceConfig) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("J(t) needs t > 0, got {t}")));
    }
    Ok(poisson_entropy_derivative_unchecked(t, tol.tail_eps))
}

fn poisson_entropy_derivative_unchecked(t: f64, tail_eps: f64) -> f64 {
    let w = poisson_weights(t, tail_eps);
    let mut acc = CompensatedSum::new();
    acc.add(-t.ln());
    for (z, &p) in w.iter().enumerate().skip(1) {
        acc.add(p * ((z + 1) as f64).ln());
    }
    acc.value()
}

/// `E^{-1}(h)`: the Poisson rate whose entropy is `h` nats.
///
/// The bracket `[0, hi]` starts from `hi = max(start, 1)` and doubles until
/// `E(hi) >= h`; the root is then polished by Newton steps on `E - h` using
/// `J`, falling back to bisection whenever a step leaves the bracket.
pub fn inverse_poisson_entropy(h: f64, start: f64, tol: &ToleranceConfig) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::Numeric(format!("entropy {h} is not finite")));
    }
    if h <= 0.0 {
        return Ok(0.0);
    }
    let e = |t: f64| poisson_entropy_unchecked(t, tol.tail_eps);
    let mut lo = 0.0;
    let mut hi = start.max(1.0);
    let mut e_hi = e(hi);
    let mut doublings = 0;
    while e_hi < h {
        lo = hi;
        hi *= 2.0;
        e_hi = e(hi);
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Numeric(format!("could not bracket E^-1({h})")));
        }
    }
    if e_hi == h {
        return Ok(hi);
    }
    let mut v = hi;
    let mut g = e_hi - h;
    for _ in 0..200 {
        let slope = poisson_entropy_derivative_unchecked(v, tol.tail_eps);
        let mut next = v - g / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let g_next = e(next) - h;
        if g_next > 0.0 {
            hi = next;
        } else {
            lo = next;
        }
        let step = (next - v).abs();
        v = next;
        g = g_next;
        if g == 0.0 || step <= tol.tol_root * v.max(1.0) || hi - lo <= tol.tol_root * v.max(1.0) {
            return Ok(v);
        }
    }
    Err(Error::Numeric(format!("E^-1({h}) did not converge")))
}

/// Entropy power `V(X) = E^{-1}(H(X))`.
pub fn entropy_power(p: &FinitePmf, tol: &ToleranceConfig) -> f64 {
    let h = h(p);
    if h <= 0.0 {
        return 0.0;
    }
    // H of a finite pmf is finite and E is unbounded, so the root exists.
    inverse_poisson_entropy(h, p.mean(), tol).expect("E^-1 of a finite entropy")
}

/// `ln Pi_lambda(k)` for the untruncated Poisson law.
fn ln_poisson(lambda: f64, k: usize) -> f64 {
    -lambda + k as f64 * lambda.ln() - ln_factorial(k)
}

/// `D(X) = D(X || Pi_{E X})`, zero for the point mass at 0.
pub fn rel_entropy_poisson(p: &FinitePmf) -> f64 {
    let lambda = p.mean();
    if lambda <= 0.0 {
        return 0.0;
    }
    let d = compensated_sum(
        p.probs()
            .iter()
            .enumerate()
            .filter(|(_, &q)| q > 0.0)
            .map(|(k, &q)| q * (q.ln() - ln_poisson(lambda, k))),
    );
    d.max(0.0)
}

/// `L(X) = sum_z (z+1) P(z+1) ln(P(z)/P(z+1))`.
///
/// Requires `P(0) > 0` and no interior zeros; otherwise a term `ln 0`
/// appears and the sum diverges to `-inf`, reported as a domain error.
pub fn l_functional(p: &FinitePmf) -> Result<f64> {
    if p.has_interior_gap() {
        return Err(Error::Domain("L undefined (gapped support)".into()));
    }
    let probs = p.probs();
    if probs[0] == 0.0 {
        return Err(Error::Domain("L diverges to -inf (P(0) = 0)".into()));
    }
    Ok(compensated_sum(
        (0..probs.len() - 1).map(|z| (z + 1) as f64 * probs[z + 1] * (probs[z].ln() - probs[z + 1].ln())),
    ))
}

/// Poisson cross-entropy `Lambda(X) = lambda + E[ln X!] - lambda ln lambda`.
pub fn lambda_functional(p: &FinitePmf) -> f64 {
    let lambda = p.mean();
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    acc.add(lambda);
    acc.add(-lambda * lambda.ln());
    for (k, &q) in p.probs().iter().enumerate().skip(2) {
        acc.add(q * ln_factorial(k));
    }
    acc.value()
}

/// `U(X) = H(X) - sum_z P(z+1) ln (z+1)! - E X + sum_z (z+1) P(z+1) ln(z+1)`.
pub fn u_functional(p: &FinitePmf) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.add(h(p));
    acc.add(-p.mean());
    for (k, &q) in p.probs().iter().enumerate().skip(2) {
        acc.add(-q * ln_factorial(k));
        acc.add(k as f64 * q * (k as f64).ln());
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{construct, FamilySpec};
    use crate::transforms::{convolve, thin};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn build(spec: FamilySpec) -> FinitePmf {
        construct(&spec, &cfg()).unwrap()
    }

    fn poisson(lambda: f64) -> FinitePmf {
        build(FamilySpec::Poisson { lambda })
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&FinitePmf::point_mass(3)).nats, 0.0);
        let b = build(FamilySpec::Bernoulli { p: 0.5 });
        let e = entropy(&b);
        assert!((e.nats - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((e.bits - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_entropy_examples() {
        assert_eq!(poisson_entropy(0.0, &cfg()).unwrap(), 0.0);
        let direct = entropy(&poisson(1.0)).nats;
        assert!((poisson_entropy(1.0, &cfg()).unwrap() - direct).abs() < 1e-11);
        assert!(poisson_entropy(-1.0, &cfg()).is_err());
    }

    #[test]
    fn poisson_entropy_large_rate_vs_asymptotic() {
        // E(t) = 0.5 ln(2 pi e t) - 1/(12 t) - 1/(24 t^2) - 19/(360 t^3) + ...
        let t: f64 = 1000.0;
        let asym = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * t).ln()
            - 1.0 / (12.0 * t)
            - 1.0 / (24.0 * t * t)
            - 19.0 / (360.0 * t.powi(3));
        assert!((poisson_entropy(t, &cfg()).unwrap() - asym).abs() < 1e-11);
    }

    #[test]
    fn derivative_matches_central_difference() {
        for t in [0.3, 1.0, 10.0, 250.0] {
            let step = 1e-5;
            let fd = (poisson_entropy(t + step, &cfg()).unwrap() - poisson_entropy(t - step, &cfg()).unwrap())
                / (2.0 * step);
            let j = poisson_entropy_derivative(t, &cfg()).unwrap();
            assert!(j > 0.0);
            assert!(((fd - j) / j).abs() < 1e-6, "t={t}: fd={fd}, j={j}");
        }
        let j1000 = poisson_entropy_derivative(1000.0, &cfg()).unwrap();
        assert!(j1000 > 0.0 && j1000 < 1e-3);
        assert!((j1000 - 1.0 / 2000.0).abs() < 1e-6);
        assert!(poisson_entropy_derivative(0.0, &cfg()).is_err());
    }

    #[test]
    fn entropy_power_inverts_poisson() {
        for lambda in [0.1, 0.5, 1.0, 3.0, 10.0, 100.0, 1000.0] {
            let v = entropy_power(&poisson(lambda), &cfg());
            assert!((v - lambda).abs() < 1e-8, "lambda={lambda}: v={v}");
        }
        assert_eq!(entropy_power(&FinitePmf::point_mass(2), &cfg()), 0.0);
    }

    #[test]
    fn entropy_power_bounded_by_mean_for_ulc() {
        for spec in [
            FamilySpec::Binomial { n: 5, p: 0.3 },
            FamilySpec::BernoulliSum { ps: vec![0.1, 0.5, 0.9] },
            FamilySpec::Bernoulli { p: 0.5 },
        ] {
            let p = build(spec);
            assert!(entropy_power(&p, &cfg()) <= p.mean() + 1e-9);
        }
        // geometric is not ULC and beats its mean
        let g = build(FamilySpec::Geometric { mean: 1.0 });
        assert!(entropy_power(&g, &cfg()) > g.mean());
    }

    #[test]
    fn fail2_input_entropy_in_bits() {
        let x = convolve(&build(FamilySpec::Bernoulli { p: 1.0 / 3.0 }), &poisson(1.0));
        assert!((entropy(&x).bits - 2.08286).abs() < 1e-4);
        assert!((entropy_power(&x, &cfg()) - 1.27189).abs() < 1e-4);
    }

    #[test]
    fn rel_entropy_examples() {
        assert!(rel_entropy_poisson(&poisson(2.0)) < 1e-10);
        assert_eq!(rel_entropy_poisson(&FinitePmf::point_mass(0)), 0.0);
        // Bern(1/2): 0.5 ln(0.5 / e^-0.5) + 0.5 ln(0.5 / (0.5 e^-0.5))
        let expected = 0.5 * (0.5f64.ln() + 0.5) + 0.5 * 0.5;
        let d = rel_entropy_poisson(&build(FamilySpec::Bernoulli { p: 0.5 }));
        assert!(d > 0.0);
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_functional(&FinitePmf::point_mass(0)), 0.0);
        let p = poisson(2.5);
        assert!((lambda_functional(&p) - entropy(&p).nats).abs() < 1e-10);
        let b = build(FamilySpec::Bernoulli { p: 0.5 });
        assert!((lambda_functional(&b) - 0.5 * (1.0 + std::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[test]
    fn lambda_is_entropy_plus_divergence() {
        for spec in [
            FamilySpec::Binomial { n: 6, p: 0.2 },
            FamilySpec::Geometric { mean: 2.0 },
            FamilySpec::Raw { probs: vec![0.1, 0.0, 0.4, 0.5] },
        ] {
            let p = build(spec);
            let gap = lambda_functional(&p) - entropy(&p).nats - rel_entropy_poisson(&p);
            assert!(gap.abs() < 1e-10);
        }
    }

    #[test]
    fn l_functional_examples() {
        for lambda in [0.5, 1.0, 5.0, 20.0] {
            let l = l_functional(&poisson(lambda)).unwrap();
            let target = lambda * poisson_entropy_derivative(lambda, &cfg()).unwrap();
            assert!((l - target).abs() < 1e-9, "lambda={lambda}");
        }
        assert!(l_functional(&build(FamilySpec::Bernoulli { p: 0.8 })).unwrap() < 0.0);
        // [1/4, 1/2, 1/4]: 1 * 1/2 * ln(1/2) + 2 * 1/4 * ln(2)
        let raw = FinitePmf::new(vec![0.25, 0.5, 0.25], &cfg()).unwrap();
        let expected = 0.5 * 0.5f64.ln() + 0.5 * 2f64.ln();
        assert!((l_functional(&raw).unwrap() - expected).abs() < 1e-15);
        let gapped = FinitePmf::new(vec![0.5, 0.0, 0.5], &cfg()).unwrap();
        assert!(matches!(l_functional(&gapped), Err(Error::Domain(_))));
    }

    #[test]
    fn l_is_thinning_derivative_of_entropy() {
        for spec in [
            FamilySpec::Binomial { n: 4, p: 0.35 },
            FamilySpec::Bernoulli { p: 0.8 },
            FamilySpec::BernoulliSum { ps: vec![0.2, 0.6, 0.7] },
        ] {
            let p = build(spec);
            let step = 1e-5;
            let h_at = |a: f64| entropy(&thin(&p, a).unwrap()).nats;
            let fd = (3.0 * h_at(1.0) - 4.0 * h_at(1.0 - step) + h_at(1.0 - 2.0 * step)) / (2.0 * step);
            assert!((fd - l_functional(&p).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn u_functional_examples() {
        assert_eq!(u_functional(&FinitePmf::point_mass(0)), 0.0);
        for lambda in [0.5, 2.0, 7.0] {
            let target = lambda * poisson_entropy_derivative(lambda, &cfg()).unwrap();
            assert!((u_functional(&poisson(lambda)) - target).abs() < 1e-8);
        }
        // Bern(1/2): H = ln 2, no factorial or z ln z terms beyond z+1 = 1.
        let b = build(FamilySpec::Bernoulli { p: 0.5 });
        assert!((u_functional(&b) - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-15);
    }
}
