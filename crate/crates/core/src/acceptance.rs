//! Executable acceptance suite: nine criteria, each reported as one
//! pass/fail line with a short numeric detail.
//!
//! Details never contain timings, so the serialized report is identical
//! across runs and thread counts; elapsed times are kept out of the JSON.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::Checker;
use crate::error::Result;
use crate::functionals::{
    entropy_power, h, l_functional, lambda_functional, poisson_entropy_derivative, rel_entropy_poisson,
};
use crate::hessian::{
    check_quadratic_form, hessian_analytic, hessian_fd, margin_identity, positive_splitting, DEFAULT_CELL_BUDGET, HESSIAN_FD_STEP,
};
use crate::pmf::{construct, FamilySpec, FinitePmf};
use crate::reproduce::{binoineq, fail1, fail2};
use crate::search::{alpha_grid, random_simplex, random_ulc_from, search, trial_rng, Conjecture};
use crate::semigroup::{default_grid, entropy_preserving_path, pde_residual};
use crate::tolerance::ToleranceConfig;
use crate::transforms::{inverse_thin, thin};

/// Seed shared by every randomized criterion.
pub const ACCEPTANCE_SEED: u64 = 20_100_517;

const FAIL1_ORACLE_MARGIN: f64 = -0.0329682801042978;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    /// One human-readable line.
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} {} ({}) [{:.2}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

type Outcome = Result<(bool, String)>;

fn timed(id: u8, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = budget {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; exceeded {}s budget", limit.as_secs()));
        }
    }
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        elapsed,
    }
}

/// Runs criteria 1 to 8.
pub fn run_core(tol: &ToleranceConfig) -> Vec<CriterionResult> {
    vec![
        timed(1, "counterexample to thinned EPI reproduced", Some(Duration::from_secs(5)), || {
            criterion_fail2(tol)
        }),
        timed(2, "counterexample to V superadditivity reproduced", Some(Duration::from_secs(1)), || {
            criterion_fail1(tol)
        }),
        timed(3, "theorem suites on random ULC inputs", Some(Duration::from_secs(60)), || {
            criterion_theorems(tol)
        }),
        timed(4, "Poisson equality cases", None, || criterion_poisson(tol)),
        timed(5, "binomial entropy corollary", None, || criterion_binomial(tol)),
        timed(6, "semigroup, path and isoperimetric machinery", None, || criterion_semigroup(tol)),
        timed(7, "Hessian, splitting and margin identities", None, || criterion_hessian(tol)),
        timed(8, "algebraic invariants", None, || criterion_invariants(tol)),
    ]
}

/// Runs all nine criteria.
pub fn run_all(tol: &ToleranceConfig) -> AcceptanceReport {
    let mut criteria = run_core(tol);
    let core_json = serde_json::to_string(&criteria).expect("criteria serialize");
    criteria.push(timed(9, "determinism across worker counts", None, || {
        criterion_determinism(tol, &core_json)
    }));
    AcceptanceReport {
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn criterion_fail2(tol: &ToleranceConfig) -> Outcome {
    let report = fail2(tol)?;
    let worst = report.values.iter().map(|v| v.abs_deviation).fold(0.0, f64::max);
    let computed: Vec<String> = report.values.iter().map(|v| format!("{:.5}", v.computed)).collect();
    Ok((
        report.all_within_tolerance && !report.verdict.holds,
        format!(
            "values {}; max |dev| {:.2e}; tepi holds = {}",
            computed.join(", "),
            worst,
            report.verdict.holds
        ),
    ))
}

fn criterion_fail1(tol: &ToleranceConfig) -> Outcome {
    let report = fail1(tol);
    let m = report.verdict.margin;
    Ok((
        m < -1e-6 && !report.verdict.holds && (m - FAIL1_ORACLE_MARGIN).abs() < 1e-9,
        format!("V(X+Y) - 2V(X) = {m:.12e} (oracle {FAIL1_ORACLE_MARGIN:.12e})"),
    ))
}

fn criterion_theorems(tol: &ToleranceConfig) -> Outcome {
    let strict = ToleranceConfig { tol_ineq: 1e-9, ..*tol };
    let suites = [
        (Conjecture::Teci, 500),
        (Conjecture::Rtepi, 500),
        (Conjecture::Isop, 500),
        (Conjecture::Hmon, 100),
        (Conjecture::Dsub, 100),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, trials) in suites {
        let r = search(c, trials, ACCEPTANCE_SEED, &strict)?;
        ok &= r.violations.is_empty();
        parts.push(format!(
            "{c}: {} evals, {} violations, min margin {:.2e}",
            r.evaluations,
            r.violations.len(),
            r.tightest_margin
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn poisson(lambda: f64, tol: &ToleranceConfig) -> Result<FinitePmf> {
    construct(&FamilySpec::Poisson { lambda }, tol)
}

fn criterion_poisson(tol: &ToleranceConfig) -> Outcome {
    let checker = Checker::new(*tol);
    let p2 = poisson(2.0, tol)?;
    let margins = [
        ("teci", checker.teci(&p2, &p2, 0.3)?.margin),
        ("hmon", checker.hmon(&[p2.clone(), p2.clone(), p2.clone()], &[0.2, 0.3, 0.5])?.margin),
        ("epilike", checker.epilike(&p2, &p2)?.verdict.margin),
        ("tepi", checker.tepi(&p2, &p2, 0.3)?.margin),
    ];
    let worst = margins.iter().map(|(_, m)| m.abs()).fold(0.0, f64::max);
    let parts: Vec<String> = margins.iter().map(|(n, m)| format!("{n} {m:.2e}")).collect();
    Ok((worst < 1e-7, parts.join(", ")))
}

fn criterion_binomial(tol: &ToleranceConfig) -> Outcome {
    let report = binoineq(tol)?;
    Ok((
        report.violations.is_empty(),
        format!(
            "{} cases, {} violations, min margin {:.2e}",
            report.cases,
            report.violations.len(),
            report.tightest_margin
        ),
    ))
}

fn criterion_semigroup(tol: &ToleranceConfig) -> Outcome {
    let mut rng = trial_rng(ACCEPTANCE_SEED, 6);
    let mut worst_pde: f64 = 0.0;
    for _ in 0..20 {
        let x = random_ulc_from(&mut rng, 4, 2.0, tol)?;
        let t = rng.gen_range(0.1..0.9);
        worst_pde = worst_pde.max(pde_residual(&x, t, 0.0, 0.0, 1e-5, tol)?);
    }

    let mut paths = 0;
    let mut worst_f0: f64 = 0.0;
    let mut worst_rise: f64 = 0.0;
    let grid = default_grid();
    while paths < 20 {
        let x = random_ulc_from(&mut rng, 4, 2.0, tol)?;
        if l_functional(&x)? <= 0.0 {
            continue;
        }
        let report = entropy_preserving_path(&x, &grid, tol)?;
        worst_f0 = worst_f0.max((report.f0_extrapolated - report.v_target).abs());
        for w in report.u_vals.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        paths += 1;
    }

    let mut worst_l: f64 = 0.0;
    for lambda in [0.5, 1.0, 5.0, 20.0] {
        let l = l_functional(&poisson(lambda, tol)?)?;
        worst_l = worst_l.max((l - lambda * poisson_entropy_derivative(lambda, tol)?).abs());
    }
    Ok((
        worst_pde < 1e-6 && worst_f0 < 1e-3 && worst_rise <= 1e-8 && worst_l < 1e-9,
        format!(
            "PDE residual {worst_pde:.2e}; |f0 - V| {worst_f0:.2e}; max U increase {worst_rise:.2e}; |L - lJ(l)| {worst_l:.2e}"
        ),
    ))
}

fn criterion_hessian(tol: &ToleranceConfig) -> Outcome {
    let mut rng = trial_rng(ACCEPTANCE_SEED, 7);
    let mut worst_fd: f64 = 0.0;
    let mut worst_split: f64 = 0.0;
    let mut worst_q = f64::NEG_INFINITY;
    let mut worst_identity: f64 = 0.0;
    let t_grid = alpha_grid();
    for _ in 0..20 {
        let count = rng.gen_range(2..=3);
        let xs = (0..count)
            .map(|_| random_ulc_from(&mut rng, 3, 0.0, tol))
            .collect::<Result<Vec<_>>>()?;

        let free: Vec<f64> = (0..count).map(|_| rng.gen_range(0.1..0.9)).collect();
        let an = hessian_analytic(&xs, &free, DEFAULT_CELL_BUDGET)?;
        let fd = hessian_fd(&xs, &free, HESSIAN_FD_STEP)?;
        for i in 0..count {
            for j in 0..count {
                let err = (an[i][j] - fd[i][j]).abs() / an[i][j].abs().max(1e-3);
                worst_fd = worst_fd.max(err);
            }
        }

        let alphas = random_simplex(&mut rng, count);
        let lambdas: Vec<f64> = (0..count).map(|_| rng.gen_range(0.1..5.0)).collect();
        for l in 0..count {
            for &t in &t_grid {
                let w = positive_splitting(&alphas, l, t, &lambdas)?;
                let r = &w.residuals;
                worst_split = worst_split.max(r.pair_sums.max(r.column_sums).max(r.s_identity).max(r.lminus));
            }
            for v in check_quadratic_form(&xs, &alphas, l, &t_grid, tol)?.verdicts {
                worst_q = worst_q.max(v.rhs);
            }
        }
        worst_identity = worst_identity.max(margin_identity(&xs, &alphas, tol)?.residual.abs());
    }
    Ok((
        worst_fd < 1e-5 && worst_split < 1e-10 && worst_q <= 1e-10 && worst_identity < 1e-10,
        format!(
            "Hessian vs FD rel {worst_fd:.2e}; splitting {worst_split:.2e}; max quadratic form {worst_q:.2e}; margin identity {worst_identity:.2e}"
        ),
    ))
}

fn criterion_invariants(tol: &ToleranceConfig) -> Outcome {
    let mut rng = trial_rng(ACCEPTANCE_SEED, 8);
    let mut semigroup: f64 = 0.0;
    let mut roundtrip: f64 = 0.0;
    let mut lambda_id: f64 = 0.0;
    let mut l_fd: f64 = 0.0;
    for _ in 0..30 {
        let x = random_ulc_from(&mut rng, 4, 3.0, tol)?;
        let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        semigroup = semigroup.max(thin(&thin(&x, a)?, b)?.total_variation(&thin(&x, a * b)?));

        let thinned = thin(&x, a)?;
        if let Ok(star) = inverse_thin(&thinned, a, tol) {
            roundtrip = roundtrip.max(thin(&star, a)?.total_variation(&thinned));
        }
        lambda_id = lambda_id.max((lambda_functional(&x) - h(&x) - rel_entropy_poisson(&x)).abs());

        let step = 1e-5;
        let h_at = |s: f64| thin(&x, s).map(|p| h(&p));
        let fd = (3.0 * h_at(1.0)? - 4.0 * h_at(1.0 - step)? + h_at(1.0 - 2.0 * step)?) / (2.0 * step);
        l_fd = l_fd.max((fd - l_functional(&x)?).abs());
    }

    let mut closure: f64 = 0.0;
    for (lambda, a) in [(3.0, 0.4), (10.0, 0.25), (0.7, 0.9)] {
        let thinned = thin(&poisson(lambda, tol)?, a)?;
        closure = closure.max(thinned.total_variation(&poisson(a * lambda, tol)?));
    }
    let mut v_poisson: f64 = 0.0;
    for t in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        v_poisson = v_poisson.max((entropy_power(&poisson(t, tol)?, tol) - t).abs());
    }
    Ok((
        semigroup < 1e-12 && closure < 1e-10 && roundtrip < 1e-10 && lambda_id < 1e-10 && v_poisson < 1e-8 && l_fd < 1e-5,
        format!(
            "semigroup TV {semigroup:.2e}; Poisson closure TV {closure:.2e}; roundtrip TV {roundtrip:.2e}; \
             |Lambda - H - D| {lambda_id:.2e}; |V(Pi_t) - t| {v_poisson:.2e}; |L - dH/da| {l_fd:.2e}"
        ),
    ))
}

/// Serialized searches plus criteria 1 to 8, computed on a pool of `threads` workers.
#[cfg(feature = "parallel")]
fn deterministic_outputs(tol: &ToleranceConfig, threads: usize) -> Result<(String, String)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::Error::Numeric(format!("thread pool: {e}")))?;
    pool.install(|| determinism_payload(tol))
}

#[cfg(not(feature = "parallel"))]
fn deterministic_outputs(tol: &ToleranceConfig, _threads: usize) -> Result<(String, String)> {
    determinism_payload(tol)
}

fn determinism_payload(tol: &ToleranceConfig) -> Result<(String, String)> {
    let reports = Conjecture::ALL
        .iter()
        .map(|&c| search(c, 40, ACCEPTANCE_SEED, tol))
        .collect::<Result<Vec<_>>>()?;
    let searches = serde_json::to_string(&reports).expect("reports serialize");
    let verify = serde_json::to_string(&run_core(tol)).expect("criteria serialize");
    Ok((searches, verify))
}

fn criterion_determinism(tol: &ToleranceConfig, reference: &str) -> Outcome {
    let (search_1, verify_1) = deterministic_outputs(tol, 1)?;
    let (search_4, verify_4) = deterministic_outputs(tol, 4)?;
    let searches_equal = search_1 == search_4;
    let verify_equal = verify_1 == verify_4 && verify_1 == reference;
    Ok((
        searches_equal && verify_equal,
        format!(
            "search JSON identical on 1 and 4 workers: {searches_equal}; criteria 1-8 JSON identical: {verify_equal}"
        ),
    ))
}
