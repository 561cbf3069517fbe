//! Thinning, convolution and inverse thinning.

use crate::error::{Error, Result};
use crate::numeric::{binomial_row, compensated_sum};
use crate::pmf::FinitePmf;
use crate::tolerance::ToleranceConfig;

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha = {alpha} is outside [0, 1]")))
    }
}

/// Rényi thinning `T_alpha X`: each unit of `X` survives independently with
/// probability `alpha`.
pub fn thin(x: &FinitePmf, alpha: f64) -> Result<FinitePmf> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(x.clone());
    }
    if alpha == 0.0 {
        return Ok(FinitePmf::point_mass(0));
    }
    let probs = x.probs();
    let mut out = vec![0.0; probs.len()];
    for (n, &mass) in probs.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (k, w) in binomial_row(n, alpha).into_iter().enumerate() {
            out[k] += mass * w;
        }
    }
    Ok(FinitePmf::from_exact(out))
}

/// Law of the sum of independent `X` and `Y`.
pub fn convolve(x: &FinitePmf, y: &FinitePmf) -> FinitePmf {
    let (a, b) = (x.probs(), y.probs());
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.iter().enumerate() {
            out[i + j] += pa * pb;
        }
    }
    FinitePmf::from_exact(out)
}

/// Convolution of a list of pmfs (the point mass at 0 for an empty list).
pub fn convolve_all<'a, I>(pmfs: I) -> FinitePmf
where
    I: IntoIterator<Item = &'a FinitePmf>,
{
    pmfs.into_iter()
        .fold(FinitePmf::point_mass(0), |acc, p| convolve(&acc, p))
}

/// Solves `x = T_alpha x*` for `x*` on the same support, by back-substitution
/// from the top index (thinning never raises the maximum).
///
/// Fails with [`Error::NotThinnable`] when a solved mass is below
/// `-tol_norm`, is not finite, or the solution does not carry unit mass.
pub fn inverse_thin(x: &FinitePmf, alpha: f64, tol: &ToleranceConfig) -> Result<FinitePmf> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if alpha == 1.0 {
        return Ok(x.clone());
    }
    let target = x.probs();
    let len = target.len();
    let rows: Vec<Vec<f64>> = (0..len).map(|n| binomial_row(n, alpha)).collect();
    let mut solved = vec![0.0; len];
    for k in (0..len).rev() {
        let pivot = rows[k][k];
        let carried = compensated_sum((k + 1..len).map(|n| solved[n] * rows[n][k]));
        let value = (target[k] - carried) / pivot;
        if !value.is_finite() || value < -tol.tol_norm {
            return Err(Error::NotThinnable { alpha, index: k, value });
        }
        solved[k] = value;
    }
    let total = compensated_sum(solved.iter().copied());
    if (total - 1.0).abs() > tol.tol_norm.max(1e-9) {
        return Err(Error::NotThinnable { alpha, index: 0, value: total });
    }
    FinitePmf::new(solved, &ToleranceConfig { tol_norm: tol.tol_norm.max(1e-9), ..*tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{construct, FamilySpec};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn build(spec: FamilySpec) -> FinitePmf {
        construct(&spec, &cfg()).unwrap()
    }

    /// Thinning by sampling-free enumeration: sum over survivor patterns.
    fn thin_by_enumeration(x: &FinitePmf, alpha: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (n, &mass) in x.probs().iter().enumerate() {
            for pattern in 0u32..(1u32 << n) {
                let k = pattern.count_ones() as usize;
                out[k] += mass * alpha.powi(k as i32) * (1.0 - alpha).powi((n - k) as i32);
            }
        }
        out
    }

    #[test]
    fn thin_identity_and_bernoulli() {
        let x = build(FamilySpec::Binomial { n: 4, p: 0.3 });
        assert_eq!(thin(&x, 1.0).unwrap(), x);
        let b1 = build(FamilySpec::Bernoulli { p: 1.0 });
        let half = thin(&b1, 0.5).unwrap();
        assert_eq!(half.probs(), &[0.5, 0.5]);
        assert!(matches!(thin(&x, 1.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn thin_matches_enumeration() {
        let x = FinitePmf::new(vec![0.1, 0.2, 0.3, 0.15, 0.05, 0.2], &cfg()).unwrap();
        for alpha in [0.1, 0.37, 0.8] {
            let fast = thin(&x, alpha).unwrap();
            let slow = thin_by_enumeration(&x, alpha);
            for (k, v) in slow.iter().enumerate() {
                assert!((fast.get(k) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn thin_poisson_closure() {
        let p = build(FamilySpec::Poisson { lambda: 3.0 });
        let expected = build(FamilySpec::Poisson { lambda: 1.2 });
        assert!(thin(&p, 0.4).unwrap().total_variation(&expected) < 1e-10);
    }

    #[test]
    fn convolve_examples() {
        let y = build(FamilySpec::Binomial { n: 3, p: 0.3 });
        assert_eq!(convolve(&FinitePmf::point_mass(0), &y), y);
        let b = build(FamilySpec::Bernoulli { p: 0.5 });
        assert_eq!(convolve(&b, &b).probs(), &[0.25, 0.5, 0.25]);
        let sum = convolve(&build(FamilySpec::Poisson { lambda: 1.0 }), &build(FamilySpec::Poisson { lambda: 2.0 }));
        assert!(sum.total_variation(&build(FamilySpec::Poisson { lambda: 3.0 })) < 1e-10);
    }

    #[test]
    fn inverse_thin_examples() {
        let x = build(FamilySpec::Bernoulli { p: 0.3 });
        let star = inverse_thin(&x, 0.5, &cfg()).unwrap();
        assert!((star.get(1) - 0.6).abs() < 1e-15);

        let x = build(FamilySpec::Bernoulli { p: 0.6 });
        match inverse_thin(&x, 0.5, &cfg()) {
            Err(Error::NotThinnable { index, value, .. }) => {
                assert_eq!(index, 0);
                assert!(value < 0.0);
            }
            other => panic!("expected NotThinnable, got {other:?}"),
        }
        assert!(matches!(inverse_thin(&x, 0.0, &cfg()), Err(Error::Parameter(_))));

        let p1 = build(FamilySpec::Poisson { lambda: 1.0 });
        let star = inverse_thin(&p1, 0.25, &cfg()).unwrap();
        assert!(star.total_variation(&build(FamilySpec::Poisson { lambda: 4.0 })) < 1e-9);
    }

    #[test]
    fn ulc_example_not_half_thinnable() {
        let x = FinitePmf::new(vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], &cfg()).unwrap();
        assert!(matches!(inverse_thin(&x, 0.5, &cfg()), Err(Error::NotThinnable { .. })));
    }
}
