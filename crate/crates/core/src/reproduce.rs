//! Reproduction of the two counterexamples and the binomial corollary.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checks::Checker;
use crate::error::Result;
use crate::functionals::{entropy_power, h};
use crate::pmf::{construct, FamilySpec, FinitePmf};
use crate::tolerance::ToleranceConfig;
use crate::transforms::convolve;
use crate::verdict::{InequalityVerdict, Units};

/// Values as printed (base-2 entropies; `V` is base independent).
pub const FAIL2_PRINTED: [(&str, f64); 5] = [
    ("H(X) [bits]", 2.08286),
    ("V(X)", 1.27189),
    ("a V(X) + (1-a) V(Y)", 2.27062),
    ("H(T_a X + T_(1-a) Y) [bits]", 2.55729),
    ("V(T_a X + T_(1-a) Y)", 2.25374),
];

/// Thinning parameter of the second counterexample.
pub const FAIL2_ALPHA: f64 = 0.999;

/// Printed values carry six significant digits.
pub const FAIL2_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducedValue {
    pub name: String,
    pub computed: f64,
    pub printed: f64,
    pub abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fail1Report {
    pub v_x: f64,
    pub v_sum: f64,
    pub verdict: InequalityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fail2Report {
    pub alpha: f64,
    pub values: Vec<ReproducedValue>,
    pub all_within_tolerance: bool,
    pub verdict: InequalityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinoineqReport {
    pub cases: usize,
    pub tightest_margin: f64,
    pub violations: Vec<InequalityVerdict>,
}

/// `P = (1/6, 2/3, 1/6)`: ULC, yet `V(X + X) < 2 V(X)`.
pub fn fail1_pmf() -> FinitePmf {
    FinitePmf::from_exact(vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
}

/// `X = Bern(1/3) + Pi_1` and `Y = Pi_1000`.
pub fn fail2_pmfs(tol: &ToleranceConfig) -> Result<(FinitePmf, FinitePmf)> {
    let x = convolve(
        &construct(&FamilySpec::Bernoulli { p: 1.0 / 3.0 }, tol)?,
        &construct(&FamilySpec::Poisson { lambda: 1.0 }, tol)?,
    );
    let y = construct(&FamilySpec::Poisson { lambda: 1000.0 }, tol)?;
    Ok((x, y))
}

pub fn fail1(tol: &ToleranceConfig) -> Fail1Report {
    let x = fail1_pmf();
    let verdict = Checker::new(*tol).v_superadd(&x, &x);
    Fail1Report {
        v_x: entropy_power(&x, tol),
        v_sum: verdict.lhs,
        verdict,
    }
}

pub fn fail2(tol: &ToleranceConfig) -> Result<Fail2Report> {
    let (x, y) = fail2_pmfs(tol)?;
    let a = FAIL2_ALPHA;
    let verdict = Checker::new(*tol).tepi(&x, &y, a)?;
    let mix = convolve(&crate::transforms::thin(&x, a)?, &crate::transforms::thin(&y, 1.0 - a)?);
    let computed = [
        h(&x) / LN_2,
        entropy_power(&x, tol),
        verdict.rhs,
        h(&mix) / LN_2,
        verdict.lhs,
    ];
    let values: Vec<ReproducedValue> = FAIL2_PRINTED
        .iter()
        .zip(computed)
        .map(|(&(name, printed), computed)| ReproducedValue {
            name: name.to_string(),
            computed,
            printed,
            abs_deviation: (computed - printed).abs(),
        })
        .collect();
    Ok(Fail2Report {
        alpha: a,
        all_within_tolerance: values.iter().all(|v| v.abs_deviation < FAIL2_TOLERANCE),
        values,
        verdict,
    })
}

/// `H(Bin(n,p) + Bin(n,q)) >= H(Bin(n,p+q))` for `n = 1..=10` and `p, q`
/// on a 0.05 grid with `p + q <= 1`.
pub fn binoineq(tol: &ToleranceConfig) -> Result<BinoineqReport> {
    let mut cases = 0;
    let mut tightest = f64::INFINITY;
    let mut violations = Vec::new();
    for n in 1..=10usize {
        for i in 1..20u32 {
            for j in 1..=(20 - i) {
                let (p, q) = (i as f64 * 0.05, j as f64 * 0.05);
                let bin = |p: f64| construct(&FamilySpec::Binomial { n, p: p.min(1.0) }, tol);
                let verdict = InequalityVerdict::new(
                    "binoineq",
                    h(&convolve(&bin(p)?, &bin(q)?)),
                    h(&bin(p + q)?),
                    tol.tol_ineq,
                    Units::Nats,
                    json!({ "n": n, "p": p, "q": q }),
                );
                cases += 1;
                tightest = tightest.min(verdict.margin);
                if !verdict.holds {
                    violations.push(verdict);
                }
            }
        }
    }
    Ok(BinoineqReport {
        cases,
        tightest_margin: tightest,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 40-digit evaluation.
    const FAIL1_MARGIN: f64 = -0.0329682801042978;
    const FAIL2_REFERENCE: [f64; 5] = [2.08286649331, 1.27188889077, 2.27061700188, 2.55728553888, 2.25373747099];

    #[test]
    fn fail1_refutes_superadditivity() {
        let report = fail1(&ToleranceConfig::default());
        assert!(!report.verdict.holds);
        assert!((report.verdict.margin - FAIL1_MARGIN).abs() < 1e-9);
        assert!((report.v_x - 0.442795369247723).abs() < 1e-9);
    }

    #[test]
    fn fail2_matches_printed_and_reference() {
        let report = fail2(&ToleranceConfig::default()).unwrap();
        assert!(report.all_within_tolerance, "{:?}", report.values);
        assert!(!report.verdict.holds);
        for (v, r) in report.values.iter().zip(FAIL2_REFERENCE) {
            assert!((v.computed - r).abs() < 1e-9, "{}: {} vs {r}", v.name, v.computed);
        }
    }

    #[test]
    fn binoineq_has_no_violations() {
        let report = binoineq(&ToleranceConfig::default()).unwrap();
        assert_eq!(report.cases, 10 * 190);
        assert!(report.violations.is_empty());
        assert!(report.tightest_margin >= -1e-12);
    }
}
