//! Seeded random ULC inputs and the falsification harness.
//!
//! Trial `i` of a search draws from its own ChaCha8 stream `i` under the
//! search seed, so reports do not depend on how trials are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checks::Checker;
use crate::error::{Error, Result};
use crate::numeric::ordered_map;
use crate::pmf::{construct, FamilySpec, FinitePmf};
use crate::reproduce::{fail1_pmf, fail2_pmfs, FAIL2_ALPHA};
use crate::tolerance::ToleranceConfig;
use crate::transforms::convolve;
use crate::verdict::InequalityVerdict;

/// The nine-point `alpha` grid `0.1, ..., 0.9`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// RNG for trial `trial` of a search seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Convolution of `k ~ U{1..max_bernoullis}` Bernoullis with
/// `p_i ~ U(0.05, 0.95)`, times `Pi_lambda` with `lambda ~ U(0, max_poisson_rate)`
/// when the rate bound is positive.
pub fn random_ulc_from<R: Rng>(
    rng: &mut R,
    max_bernoullis: usize,
    max_poisson_rate: f64,
    tol: &ToleranceConfig,
) -> Result<FinitePmf> {
    if max_bernoullis == 0 || !(max_poisson_rate >= 0.0) {
        return Err(Error::Parameter("need max_bernoullis >= 1 and max_poisson_rate >= 0".into()));
    }
    let k = rng.gen_range(1..=max_bernoullis);
    let ps: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.95)).collect();
    let mut pmf = construct(&FamilySpec::BernoulliSum { ps }, tol)?;
    if max_poisson_rate > 0.0 {
        let lambda = rng.gen_range(0.0..max_poisson_rate);
        pmf = convolve(&pmf, &construct(&FamilySpec::Poisson { lambda }, tol)?);
    }
    if !pmf.is_ulc(tol.tol_norm) {
        return Err(Error::Consistency("random ULC generator produced a non-ULC pmf".into()));
    }
    Ok(pmf)
}

pub fn random_ulc(seed: u64, max_bernoullis: usize, max_poisson_rate: f64, tol: &ToleranceConfig) -> Result<FinitePmf> {
    random_ulc_from(&mut ChaCha8Rng::seed_from_u64(seed), max_bernoullis, max_poisson_rate, tol)
}

/// Weights drawn uniformly from the open simplex.
pub fn random_simplex<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| -rng.gen_range(f64::EPSILON..1.0).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut alphas: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = alphas[..count - 1].iter().sum();
    alphas[count - 1] = 1.0 - head;
    alphas
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conjecture {
    Firstepi,
    Tepi,
    Teci,
    Rtepi,
    Hmon,
    Dsub,
    Isop,
}

impl Conjecture {
    pub const ALL: [Conjecture; 7] = [
        Conjecture::Firstepi,
        Conjecture::Tepi,
        Conjecture::Teci,
        Conjecture::Rtepi,
        Conjecture::Hmon,
        Conjecture::Dsub,
        Conjecture::Isop,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Conjecture::Firstepi => "firstepi",
            Conjecture::Tepi => "tepi",
            Conjecture::Teci => "teci",
            Conjecture::Rtepi => "rtepi",
            Conjecture::Hmon => "hmon",
            Conjecture::Dsub => "dsub",
            Conjecture::Isop => "isop",
        }
    }

    /// False for the two refuted conjectures.
    pub fn is_theorem(self) -> bool {
        !matches!(self, Conjecture::Firstepi | Conjecture::Tepi)
    }
}

impl fmt::Display for Conjecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Conjecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Conjecture::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownConjecture(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_bernoullis: usize,
    pub max_poisson_rate: f64,
    /// Replace trial 0 by the known counterexample (firstepi and tepi only).
    pub inject_counterexample: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_bernoullis: 4,
            max_poisson_rate: 3.0,
            inject_counterexample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub verdict: InequalityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub conjecture: Conjecture,
    pub trials: u64,
    pub seed: u64,
    /// True when the statement is a proved theorem, so any violation is a bug.
    pub expected_to_hold: bool,
    pub evaluations: usize,
    pub violations: Vec<Violation>,
    pub tightest_margin: f64,
}

pub fn search(conjecture: Conjecture, trials: u64, seed: u64, tol: &ToleranceConfig) -> Result<SearchReport> {
    search_with(conjecture, trials, seed, tol, &SearchOptions::default())
}

pub fn search_with(
    conjecture: Conjecture,
    trials: u64,
    seed: u64,
    tol: &ToleranceConfig,
    options: &SearchOptions,
) -> Result<SearchReport> {
    let ids: Vec<u64> = (0..trials).collect();
    let per_trial = ordered_map(&ids, |&trial| run_trial(conjecture, seed, trial, tol, options));

    let mut evaluations = 0;
    let mut tightest = f64::INFINITY;
    let mut violations = Vec::new();
    for (trial, verdicts) in ids.into_iter().zip(per_trial) {
        for verdict in verdicts? {
            evaluations += 1;
            tightest = tightest.min(verdict.margin);
            if !verdict.holds {
                violations.push(Violation { trial, verdict });
            }
        }
    }
    Ok(SearchReport {
        conjecture,
        trials,
        seed,
        expected_to_hold: conjecture.is_theorem(),
        evaluations,
        violations,
        tightest_margin: tightest,
    })
}

fn run_trial(
    conjecture: Conjecture,
    seed: u64,
    trial: u64,
    tol: &ToleranceConfig,
    options: &SearchOptions,
) -> Result<Vec<InequalityVerdict>> {
    let checker = Checker::new(*tol);
    let mut rng = trial_rng(seed, trial);
    let draw = |rng: &mut ChaCha8Rng| random_ulc_from(rng, options.max_bernoullis, options.max_poisson_rate, tol);
    let inject = options.inject_counterexample && trial == 0;

    match conjecture {
        Conjecture::Firstepi => {
            let (x, y) = if inject {
                (fail1_pmf(), fail1_pmf())
            } else {
                (draw(&mut rng)?, draw(&mut rng)?)
            };
            Ok(vec![checker.v_superadd(&x, &y)])
        }
        Conjecture::Tepi => {
            let (x, y, a) = if inject {
                let (x, y) = fail2_pmfs(tol)?;
                (x, y, FAIL2_ALPHA)
            } else {
                (draw(&mut rng)?, draw(&mut rng)?, rng.gen_range(0.0..1.0))
            };
            Ok(vec![checker.tepi(&x, &y, a)?])
        }
        Conjecture::Teci => {
            let (x, y) = (draw(&mut rng)?, draw(&mut rng)?);
            alpha_grid().into_iter().map(|a| checker.teci(&x, &y, a)).collect()
        }
        Conjecture::Rtepi => {
            let x = draw(&mut rng)?;
            alpha_grid().into_iter().map(|a| checker.rtepi(&x, a)).collect()
        }
        Conjecture::Hmon | Conjecture::Dsub => {
            let count = rng.gen_range(2..=3);
            let xs = (0..count).map(|_| draw(&mut rng)).collect::<Result<Vec<_>>>()?;
            let alphas = random_simplex(&mut rng, count);
            let verdict = if conjecture == Conjecture::Hmon {
                checker.hmon(&xs, &alphas)?
            } else {
                checker.dsub(&xs, &alphas)?
            };
            Ok(vec![verdict])
        }
        Conjecture::Isop => Ok(vec![checker.isop(&draw(&mut rng)?)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn random_ulc_examples() {
        let a = random_ulc(5, 3, 0.0, &cfg()).unwrap();
        assert!(a.is_ulc(0.0) && a.len() <= 4);
        let b = random_ulc(5, 1, 2.0, &cfg()).unwrap();
        assert!(b.is_ulc(cfg().tol_norm));
        assert_eq!(random_ulc(9, 4, 3.0, &cfg()).unwrap(), random_ulc(9, 4, 3.0, &cfg()).unwrap());
        assert!(random_ulc(1, 0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn simplex_draws_are_valid() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..100 {
            let a = random_simplex(&mut rng, 3);
            assert!(crate::checks::check_simplex(&a, 3).is_ok(), "{a:?}");
        }
    }

    #[test]
    fn conjecture_ids_roundtrip() {
        for c in Conjecture::ALL {
            assert_eq!(c.id().parse::<Conjecture>().unwrap(), c);
        }
        assert!(matches!("epi".parse::<Conjecture>(), Err(Error::UnknownConjecture(_))));
    }

    #[test]
    fn teci_search_is_clean() {
        let report = search(Conjecture::Teci, 40, 7, &cfg()).unwrap();
        assert_eq!(report.evaluations, 40 * 9);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn injected_counterexamples_are_flagged() {
        let options = SearchOptions {
            inject_counterexample: true,
            ..SearchOptions::default()
        };
        for c in [Conjecture::Tepi, Conjecture::Firstepi] {
            let report = search_with(c, 5, 1, &cfg(), &options).unwrap();
            assert!(report.violations.iter().any(|v| v.trial == 0), "{c}");
        }
    }

    #[test]
    fn search_is_reproducible() {
        let a = search(Conjecture::Hmon, 20, 42, &cfg()).unwrap();
        let b = search(Conjecture::Hmon, 20, 42, &cfg()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
