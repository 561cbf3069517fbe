//! Verdict-producing checkers for the entropy and entropy-power inequalities
//! (proved theorems and refuted conjectures alike).

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::functionals::{entropy_power, h, lambda_functional, rel_entropy_poisson};
use crate::pmf::FinitePmf;
use crate::semigroup::isoperimetric_check;
use crate::tolerance::ToleranceConfig;
use crate::transforms::{convolve, convolve_all, inverse_thin, thin};
use crate::verdict::{echo, echo_all, InequalityVerdict, Units};

/// Grid step of the feasibility scan in [`Checker::epilike`].
pub const EPILIKE_GRID_STEP: f64 = 1e-3;

/// Runs inequality checks under a fixed tolerance configuration.
///
/// ULC-gated checks fail with a precondition error on non-ULC input unless
/// `allow_non_ulc` is set, in which case the verdict is watermarked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checker {
    pub tol: ToleranceConfig,
    pub allow_non_ulc: bool,
}

/// Result of [`Checker::epilike`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpilikeOutcome {
    pub verdict: InequalityVerdict,
    /// The `alpha` with `X = T_alpha X*`, `Y = T_{1-alpha} Y*`, `H(X*) = H(Y*)`.
    pub alpha: f64,
    /// `V(X) / (V(X) + V(Y))`, the maximizer of the thinned-EPI lower bound.
    pub heuristic_alpha: f64,
    /// Grid bounds of the feasible `alpha` interval.
    pub feasible: (f64, f64),
}

/// Which hypothesis of the two-sided thinned EPI was satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TepisCondition {
    /// `beta/(1-gamma) <= V(Y)/V(X) <= (1-beta)/gamma`.
    Ratio,
    /// `Y` Poisson with rate at most `V(X)` and `beta + gamma = 1`.
    PoissonY,
}

/// `beta/(1-gamma) <= V(Y)/V(X) <= (1-beta)/gamma`, cleared of denominators.
pub fn tepis_ratio_condition(vx: f64, vy: f64, beta: f64, gamma: f64) -> bool {
    let slack = 1e-12 * vx.max(vy).max(1.0);
    beta * vx <= (1.0 - gamma) * vy + slack && gamma * vy <= (1.0 - beta) * vx + slack
}

/// The same condition restated as `beta V(X) + gamma V(Y) <= min(V(X), V(Y))`.
pub fn tepis_restated_condition(vx: f64, vy: f64, beta: f64, gamma: f64) -> bool {
    let slack = 1e-12 * vx.max(vy).max(1.0);
    beta * vx + gamma * vy <= vx.min(vy) + slack
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Validates weights `alpha_i > 0` summing to one for `n + 1 >= 2` inputs.
pub fn check_simplex(alphas: &[f64], count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::Precondition("need at least two inputs".into()));
    }
    if alphas.len() != count {
        return Err(Error::Parameter(format!("{} weights for {count} inputs", alphas.len())));
    }
    if alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::Parameter("weights must lie in (0, 1)".into()));
    }
    let total: f64 = alphas.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `sum_i T_{alpha_i} X_i`.
pub fn thinned_sum(xs: &[FinitePmf], alphas: &[f64]) -> Result<FinitePmf> {
    let parts = xs.iter().zip(alphas).map(|(x, &a)| thin(x, a)).collect::<Result<Vec<_>>>()?;
    Ok(convolve_all(&parts))
}

/// `sum_{i != l} T_{alpha_i / alpha^(l)} X_i` with `alpha^(l) = 1 - alpha_l`.
pub fn leave_one_out(xs: &[FinitePmf], alphas: &[f64], l: usize) -> Result<FinitePmf> {
    let rest = 1.0 - alphas[l];
    let parts = xs
        .iter()
        .zip(alphas)
        .enumerate()
        .filter(|(i, _)| *i != l)
        .map(|(_, (x, &a))| thin(x, (a / rest).min(1.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(convolve_all(&parts))
}

impl Checker {
    pub fn new(tol: ToleranceConfig) -> Self {
        Checker { tol, allow_non_ulc: false }
    }

    /// Lets ULC-gated checks run on arbitrary input.
    pub fn exploring(mut self) -> Self {
        self.allow_non_ulc = true;
        self
    }

    /// Returns whether every input is ULC, or a precondition error.
    fn gate(&self, what: &str, xs: &[&FinitePmf]) -> Result<bool> {
        let ulc = xs.iter().all(|x| x.is_ulc(self.tol.tol_norm));
        if !ulc && !self.allow_non_ulc {
            return Err(Error::Precondition(format!("{what} needs ULC inputs")));
        }
        Ok(ulc)
    }

    fn mark(verdict: InequalityVerdict, ulc: bool) -> InequalityVerdict {
        if ulc {
            verdict
        } else {
            verdict.outside_hypotheses("input not ULC")
        }
    }

    fn v(&self, x: &FinitePmf) -> f64 {
        entropy_power(x, &self.tol)
    }

    /// `H(T_a X + T_{1-a} Y) >= a H(X) + (1-a) H(Y)`.
    pub fn teci(&self, x: &FinitePmf, y: &FinitePmf, alpha: f64) -> Result<InequalityVerdict> {
        check_unit_interval("alpha", alpha)?;
        let ulc = self.gate("teci", &[x, y])?;
        let mix = convolve(&thin(x, alpha)?, &thin(y, 1.0 - alpha)?);
        let verdict = InequalityVerdict::new(
            "teci",
            h(&mix),
            alpha * h(x) + (1.0 - alpha) * h(y),
            self.tol.tol_ineq,
            Units::Nats,
            json!({ "x": echo(x), "y": echo(y), "alpha": alpha }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// `V(T_a X) >= a V(X)`.
    pub fn rtepi(&self, x: &FinitePmf, alpha: f64) -> Result<InequalityVerdict> {
        check_unit_interval("alpha", alpha)?;
        let ulc = self.gate("rtepi", &[x])?;
        let verdict = InequalityVerdict::new(
            "rtepi",
            self.v(&thin(x, alpha)?),
            alpha * self.v(x),
            self.tol.tol_ineq,
            Units::PoissonRate,
            json!({ "x": echo(x), "alpha": alpha }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// `H(X + Y) >= H(X*)` where `X = T_a X*`, `Y = T_{1-a} Y*` and
    /// `H(X*) = H(Y*)`.
    ///
    /// Scans `alpha` on a fine grid for the set where both inverse thinnings
    /// exist, then bisects the entropy gap `H(X*) - H(Y*)` across its first
    /// sign change.
    pub fn epilike(&self, x: &FinitePmf, y: &FinitePmf) -> Result<EpilikeOutcome> {
        let ulc = self.gate("epilike", &[x, y])?;
        let tol = &self.tol;
        let gap = |alpha: f64| -> Option<(f64, f64)> {
            let xs = inverse_thin(x, alpha, tol).ok()?;
            let ys = inverse_thin(y, 1.0 - alpha, tol).ok()?;
            let hx = h(&xs);
            Some((hx - h(&ys), hx))
        };

        let steps = (1.0 / EPILIKE_GRID_STEP).round() as usize;
        let scan: Vec<(f64, Option<(f64, f64)>)> = (1..steps)
            .map(|k| {
                let a = k as f64 / steps as f64;
                (a, gap(a))
            })
            .collect();

        let mut feasible: Option<(f64, f64)> = None;
        let mut run_start: Option<usize> = None;
        let mut best_len = 0;
        for (i, (_, g)) in scan.iter().enumerate() {
            match (g.is_some(), run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    if i - s > best_len {
                        best_len = i - s;
                        feasible = Some((scan[s].0, scan[i - 1].0));
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            if scan.len() - s > best_len {
                feasible = Some((scan[s].0, scan[scan.len() - 1].0));
            }
        }
        let feasible = feasible.ok_or_else(|| {
            Error::NoDecomposition("no alpha admits both X = T_a X* and Y = T_{1-a} Y*".into())
        })?;

        let crossing = scan.windows(2).find_map(|w| match (w[0].1, w[1].1) {
            (Some((g0, _)), Some((g1, _))) if g0 == 0.0 || g0.signum() != g1.signum() => {
                Some((w[0].0, g0, w[1].0))
            }
            _ => None,
        });
        let (mut lo, g_lo, mut hi) = crossing.ok_or_else(|| {
            Error::NoDecomposition("H(X*) - H(Y*) has no sign change on the feasible set".into())
        })?;

        let mut alpha = lo;
        if g_lo != 0.0 {
            let lo_sign = g_lo.signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                alpha = mid;
                if mid <= lo || mid >= hi {
                    break;
                }
                let (g, _) = gap(mid).ok_or_else(|| {
                    Error::NoDecomposition(format!("inverse thinning fails inside the feasible set at alpha = {mid}"))
                })?;
                if g.abs() <= tol.tol_root {
                    break;
                }
                if g.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let (_, h_star) = gap(alpha)
            .ok_or_else(|| Error::NoDecomposition(format!("inverse thinning fails at alpha = {alpha}")))?;

        let (vx, vy) = (self.v(x), self.v(y));
        let heuristic_alpha = if vx + vy > 0.0 { vx / (vx + vy) } else { 0.5 };
        let verdict = InequalityVerdict::new(
            "epilike",
            h(&convolve(x, y)),
            h_star,
            tol.tol_ineq,
            Units::Nats,
            json!({ "x": echo(x), "y": echo(y), "alpha": alpha }),
        );
        Ok(EpilikeOutcome {
            verdict: Self::mark(verdict, ulc),
            alpha,
            heuristic_alpha,
            feasible,
        })
    }

    /// `n H(sum T_{a_i} X_i) >= sum_l a^(l) H(sum_{i != l} T_{a_i/a^(l)} X_i)`.
    pub fn hmon(&self, xs: &[FinitePmf], alphas: &[f64]) -> Result<InequalityVerdict> {
        check_simplex(alphas, xs.len())?;
        let ulc = self.gate("hmon", &xs.iter().collect::<Vec<_>>())?;
        let (lhs, rhs) = self.monotone_sides(xs, alphas, h)?;
        let verdict = InequalityVerdict::new(
            "hmon",
            lhs,
            rhs,
            self.tol.tol_ineq,
            Units::Nats,
            json!({ "xs": echo_all(xs), "alphas": alphas }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// The same monotonicity for the Poisson cross-entropy `Lambda`.
    pub fn lammon(&self, xs: &[FinitePmf], alphas: &[f64]) -> Result<InequalityVerdict> {
        check_simplex(alphas, xs.len())?;
        let ulc = self.gate("lammon", &xs.iter().collect::<Vec<_>>())?;
        let (lhs, rhs) = self.monotone_sides(xs, alphas, lambda_functional)?;
        let verdict = InequalityVerdict::new(
            "lammon",
            lhs,
            rhs,
            self.tol.tol_ineq,
            Units::Nats,
            json!({ "xs": echo_all(xs), "alphas": alphas }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// `sum_l a^(l) D(leave-one-out) >= n D(full sum)`; holds for any
    /// independent inputs.
    pub fn dsub(&self, xs: &[FinitePmf], alphas: &[f64]) -> Result<InequalityVerdict> {
        check_simplex(alphas, xs.len())?;
        let (full, loo) = self.monotone_sides(xs, alphas, rel_entropy_poisson)?;
        Ok(InequalityVerdict::new(
            "dsub",
            loo,
            full,
            self.tol.tol_ineq,
            Units::Nats,
            json!({ "xs": echo_all(xs), "alphas": alphas }),
        ))
    }

    /// `(n F(full), sum_l a^(l) F(leave-one-out))`.
    fn monotone_sides(&self, xs: &[FinitePmf], alphas: &[f64], f: fn(&FinitePmf) -> f64) -> Result<(f64, f64)> {
        let n = (xs.len() - 1) as f64;
        let full = f(&thinned_sum(xs, alphas)?);
        let mut rest = 0.0;
        for l in 0..xs.len() {
            rest += (1.0 - alphas[l]) * f(&leave_one_out(xs, alphas, l)?);
        }
        Ok((n * full, rest))
    }

    /// `H(sum T_{a_i} Y*_i) >= H*`, where `H*` is the common entropy of the
    /// leave-one-out sums.
    pub fn discepilike(&self, ystars: &[FinitePmf], alphas: &[f64]) -> Result<InequalityVerdict> {
        check_simplex(alphas, ystars.len())?;
        let ulc = self.gate("discepilike", &ystars.iter().collect::<Vec<_>>())?;
        let loo = (0..ystars.len())
            .map(|l| leave_one_out(ystars, alphas, l).map(|p| h(&p)))
            .collect::<Result<Vec<_>>>()?;
        let max = loo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = loo.iter().cloned().fold(f64::INFINITY, f64::min);
        if max - min > self.tol.tol_ineq {
            return Err(Error::Precondition(format!(
                "leave-one-out entropies disagree (spread {:e} nats)",
                max - min
            )));
        }
        let h_star = loo.iter().sum::<f64>() / loo.len() as f64;
        let verdict = InequalityVerdict::new(
            "discepilike",
            h(&thinned_sum(ystars, alphas)?),
            h_star,
            self.tol.tol_ineq,
            Units::Nats,
            json!({ "ystars": echo_all(ystars), "alphas": alphas }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// Conjectured superadditivity `V(X + Y) >= V(X) + V(Y)` (false in general).
    pub fn v_superadd(&self, x: &FinitePmf, y: &FinitePmf) -> InequalityVerdict {
        InequalityVerdict::new(
            "firstepi",
            self.v(&convolve(x, y)),
            self.v(x) + self.v(y),
            self.tol.tol_ineq,
            Units::PoissonRate,
            json!({ "x": echo(x), "y": echo(y) }),
        )
    }

    /// Conjectured thinned EPI `V(T_a X + T_{1-a} Y) >= a V(X) + (1-a) V(Y)`
    /// (false in general).
    pub fn tepi(&self, x: &FinitePmf, y: &FinitePmf, alpha: f64) -> Result<InequalityVerdict> {
        check_unit_interval("alpha", alpha)?;
        let ulc = self.gate("tepi", &[x, y])?;
        let mix = convolve(&thin(x, alpha)?, &thin(y, 1.0 - alpha)?);
        let verdict = InequalityVerdict::new(
            "tepi",
            self.v(&mix),
            alpha * self.v(x) + (1.0 - alpha) * self.v(y),
            self.tol.tol_ineq,
            Units::PoissonRate,
            json!({ "x": echo(x), "y": echo(y), "alpha": alpha }),
        );
        Ok(Self::mark(verdict, ulc))
    }

    /// `V(T_b X + T_g Y) >= b V(X) + g V(Y)` under either sufficient condition.
    pub fn tepis(&self, x: &FinitePmf, y: &FinitePmf, beta: f64, gamma: f64) -> Result<InequalityVerdict> {
        check_unit_interval("beta", beta)?;
        check_unit_interval("gamma", gamma)?;
        let ulc = self.gate("tepis", &[x, y])?;
        let (vx, vy) = (self.v(x), self.v(y));
        let condition = if tepis_ratio_condition(vx, vy, beta, gamma) {
            TepisCondition::Ratio
        } else if rel_entropy_poisson(y) < 1e-10
            && y.mean() <= vx + self.tol.tol_ineq
            && (beta + gamma - 1.0).abs() <= 1e-12
        {
            TepisCondition::PoissonY
        } else {
            return Err(Error::Precondition(
                "neither the ratio condition nor the Poisson-Y condition holds".into(),
            ));
        };
        let mix = convolve(&thin(x, beta)?, &thin(y, gamma)?);
        let verdict = InequalityVerdict::new(
            "tepis",
            self.v(&mix),
            beta * vx + gamma * vy,
            self.tol.tol_ineq,
            Units::PoissonRate,
            json!({ "x": echo(x), "y": echo(y), "beta": beta, "gamma": gamma, "condition": condition }),
        );
        let verdict = match condition {
            TepisCondition::Ratio => verdict.with_note("ratio condition"),
            TepisCondition::PoissonY => verdict.with_note("Poisson Y condition"),
        };
        Ok(Self::mark(verdict, ulc))
    }

    /// `V(X) J(V(X)) >= L(X)`.
    pub fn isop(&self, x: &FinitePmf) -> Result<InequalityVerdict> {
        isoperimetric_check(x, &self.tol, self.allow_non_ulc)
    }
}
