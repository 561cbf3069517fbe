//! Second-order structure of `Phi(a) = Lambda(sum_i T_{a_i} X_i)`: dense joint
//! tables, the analytic Hessian, the positive splitting witness along the
//! leave-one-out interpolation, and the resulting quadratic-form checks.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checks::{check_simplex, thinned_sum, Checker};
use crate::error::{Error, Result};
use crate::functionals::lambda_functional;
use crate::numeric::CompensatedSum;
use crate::pmf::FinitePmf;
use crate::tolerance::ToleranceConfig;
use crate::transforms::thin;
use crate::verdict::{echo_all, InequalityVerdict, Units};

pub const DEFAULT_CELL_BUDGET: usize = 10_000_000;

/// Tolerance for the exact algebraic identities of the splitting witness.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Step of the finite-difference Hessian used as a cross-check.
pub const HESSIAN_FD_STEP: f64 = 1e-4;

/// Dense joint pmf of independent `T_{a_i} X_i`, stored row-major with the
/// last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Means of the unthinned inputs.
    pub means: Vec<f64>,
}

fn check_open_unit(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::Parameter("thinning parameters must lie in (0, 1]".into()));
    }
    Ok(())
}

pub fn build_joint(xs: &[FinitePmf], alphas: &[f64], budget: usize) -> Result<JointTable> {
    if xs.is_empty() || xs.len() != alphas.len() {
        return Err(Error::Parameter(format!("{} inputs but {} thinning parameters", xs.len(), alphas.len())));
    }
    check_open_unit(alphas)?;
    let thinned = xs.iter().zip(alphas).map(|(x, &a)| thin(x, a)).collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = thinned.iter().map(FinitePmf::len).collect();
    let cells = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&c| c <= budget)
        .ok_or_else(|| Error::Capacity {
            cells: dims.iter().fold(1usize, |acc, &d| acc.saturating_mul(d)),
            budget,
        })?;

    let mut values = vec![1.0; cells];
    let mut stride = cells;
    for p in &thinned {
        let d = p.len();
        stride /= d;
        for (cell, v) in values.iter_mut().enumerate() {
            *v *= p.get((cell / stride) % d);
        }
    }
    Ok(JointTable {
        dims,
        values,
        alphas: alphas.to_vec(),
        means: xs.iter().map(FinitePmf::mean).collect(),
    })
}

impl JointTable {
    /// Visits every cell with its coordinate tuple.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.dims.len()];
        for &v in &self.values {
            f(&idx, v);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[i]];
        self.for_each_cell(|x, v| out[x[i]] += v);
        out
    }

    /// Law `q(s)` of the coordinate sum.
    pub fn sum_law(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.iter().map(|d| d - 1).sum::<usize>() + 1];
        self.for_each_cell(|x, v| out[x.iter().sum::<usize>()] += v);
        out
    }
}

/// `Phi(a) = Lambda(sum_i T_{a_i} X_i)`; defined for any `a` in `(0, 1]^{n+1}`.
pub fn phi(xs: &[FinitePmf], alphas: &[f64]) -> Result<f64> {
    check_open_unit(alphas)?;
    Ok(lambda_functional(&thinned_sum(xs, alphas)?))
}

pub type Matrix = Vec<Vec<f64>>;

/// `Phi'' = Phi''_1 + Phi''_2` with
/// `Phi''_1[i][j] = E[x_i (x_j - d_ij) ln(s/(s-1))] / (a_i a_j)` and
/// `Phi''_2[i][j] = -l_i l_j / sum_k a_k l_k`.
///
/// Cells whose coefficient vanishes are skipped, so `ln(s/(s-1))` is only
/// ever evaluated at `s >= 2`.
pub fn hessian_analytic(xs: &[FinitePmf], alphas: &[f64], budget: usize) -> Result<Matrix> {
    let table = build_joint(xs, alphas, budget)?;
    let m = xs.len();
    let mut acc = vec![vec![CompensatedSum::new(); m]; m];
    table.for_each_cell(|x, w| {
        let s: usize = x.iter().sum();
        if s < 2 || w == 0.0 {
            return;
        }
        let log_ratio = (s as f64 / (s - 1) as f64).ln();
        for i in 0..m {
            if x[i] == 0 {
                continue;
            }
            for j in 0..m {
                let xj = if i == j { x[j] - 1 } else { x[j] };
                if xj == 0 {
                    continue;
                }
                acc[i][j].add(w * (x[i] * xj) as f64 * log_ratio);
            }
        }
    });
    let total_rate: f64 = alphas.iter().zip(&table.means).map(|(a, l)| a * l).sum();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let second = if total_rate > 0.0 {
                -table.means[i] * table.means[j] / total_rate
            } else {
                0.0
            };
            out[i][j] = acc[i][j].value() / (alphas[i] * alphas[j]) + second;
        }
    }
    Ok(out)
}

/// Central second differences of [`phi`] with step `step`.
pub fn hessian_fd(xs: &[FinitePmf], alphas: &[f64], step: f64) -> Result<Matrix> {
    check_open_unit(alphas)?;
    if alphas.iter().any(|&a| a - step <= 0.0 || a + step > 1.0) {
        return Err(Error::Parameter("finite-difference stencil leaves (0, 1]".into()));
    }
    let m = xs.len();
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut a = alphas.to_vec();
        for &(k, d) in shifts {
            a[k] += d;
        }
        phi(xs, &a)
    };
    let centre = phi(xs, alphas)?;
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        out[i][i] = (at(&[(i, step)])? - 2.0 * centre + at(&[(i, -step)])?) / (step * step);
        for j in 0..i {
            let v = (at(&[(i, step), (j, step)])? - at(&[(i, step), (j, -step)])? - at(&[(i, -step), (j, step)])?
                + at(&[(i, -step), (j, -step)])?)
                / (4.0 * step * step);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// `mu^T M mu`.
pub fn quadratic_form(m: &Matrix, mu: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            acc.add(mu[i] * v * mu[j]);
        }
    }
    acc.value()
}

/// Point `A_l(t) = (1-t) a^(l) + t e_l` on the leave-one-out interpolation and
/// its direction `mu_l = e_l - a^(l)`, where `a^(l)` is `a` with coordinate
/// `l` removed and renormalized.
pub fn interpolation(alphas: &[f64], l: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let rest = 1.0 - alphas[l];
    let loo: Vec<f64> = alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| if i == l { 0.0 } else { a / rest })
        .collect();
    let beta = loo
        .iter()
        .enumerate()
        .map(|(i, &a)| if i == l { t } else { (1.0 - t) * a })
        .collect();
    let mu = loo.iter().enumerate().map(|(i, &a)| if i == l { 1.0 } else { -a }).collect();
    (beta, mu)
}

/// `v_ij = (mu_i/b_i - mu_j/b_j)^2 b_i b_j l_i l_j`.
pub fn coupling(beta: &[f64], mu: &[f64], lambdas: &[f64], i: usize, j: usize) -> f64 {
    let d = mu[i] / beta[i] - mu[j] / beta[j];
    d * d * beta[i] * beta[j] * lambdas[i] * lambdas[j]
}

/// Both sides of
/// `sum mu_i^2 l_i / b_i - sum_{i<j} v_ij / sum b_k l_k = (sum mu_k l_k)^2 / sum b_k l_k`.
pub fn lminus_sides(beta: &[f64], mu: &[f64], lambdas: &[f64]) -> (f64, f64) {
    let m = beta.len();
    let rate: f64 = beta.iter().zip(lambdas).map(|(b, l)| b * l).sum();
    let mut v_total = CompensatedSum::new();
    for i in 0..m {
        for j in i + 1..m {
            v_total.add(coupling(beta, mu, lambdas, i, j));
        }
    }
    let diag: f64 = (0..m).map(|i| mu[i] * mu[i] * lambdas[i] / beta[i]).sum();
    let drift: f64 = mu.iter().zip(lambdas).map(|(u, l)| u * l).sum();
    (diag - v_total.value() / rate, drift * drift / rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingResiduals {
    /// `max |u_ij + u_ji - v_ij|`.
    pub pair_sums: f64,
    /// `max_j |sum_{i != j} u_ij / (b_j l_j) - S|`.
    pub column_sums: f64,
    /// `|S - sum_{i<j} v_ij / sum b_k l_k|`.
    pub s_identity: f64,
    /// Difference of the two sides of [`lminus_sides`].
    pub lminus: f64,
}

/// Explicit positive splitting `u` for the direction `mu_l` at `A_l(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingWitness {
    /// Zero-based leave-out index.
    pub l: usize,
    pub t: f64,
    pub u: Matrix,
    pub s: f64,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub residuals: SplittingResiduals,
}

/// Builds the witness
/// `u_li = S a_i l_i (1-t) / a^(l)`, `u_il = l_l^2 a_i l_i / ((1-t) a^(l) l(t))`,
/// `S = l^(l)(t) l_l / (t (1-t)^2 l(t))`, zero elsewhere, and verifies both
/// parts of the splitting condition together with the `lminus` identity.
pub fn positive_splitting(alphas: &[f64], l: usize, t: f64, lambdas: &[f64]) -> Result<SplittingWitness> {
    check_simplex(alphas, lambdas.len())?;
    if l >= alphas.len() {
        return Err(Error::Parameter(format!("leave-out index {l} out of range")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Parameter(format!("t = {t} must lie in (0, 1)")));
    }
    if lambdas.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Parameter("rates must be positive".into()));
    }
    let m = alphas.len();
    let rest = 1.0 - alphas[l];
    let (beta, mu) = interpolation(alphas, l, t);
    let rate: f64 = beta.iter().zip(lambdas).map(|(b, x)| b * x).sum();
    let rate_rest = rate - t * lambdas[l];
    let s = rate_rest * lambdas[l] / (t * (1.0 - t) * (1.0 - t) * rate);

    let mut u = vec![vec![0.0; m]; m];
    for i in (0..m).filter(|&i| i != l) {
        let w = alphas[i] * lambdas[i] / rest;
        u[l][i] = s * w * (1.0 - t);
        u[i][l] = lambdas[l] * lambdas[l] * w / ((1.0 - t) * rate);
    }

    let mut pair_sums: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let v = coupling(&beta, &mu, lambdas, i, j);
            pair_sums = pair_sums.max((u[i][j] + u[j][i] - v).abs() / v.abs().max(1.0));
        }
    }
    let mut column_sums: f64 = 0.0;
    for j in 0..m {
        let col: f64 = (0..m).filter(|&i| i != j).map(|i| u[i][j]).sum();
        column_sums = column_sums.max((col / (beta[j] * lambdas[j]) - s).abs() / s.abs().max(1.0));
    }
    let v_total: f64 = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .map(|(i, j)| coupling(&beta, &mu, lambdas, i, j))
        .sum();
    let s_identity = (s - v_total / rate).abs() / s.abs().max(1.0);
    let (lhs, rhs) = lminus_sides(&beta, &mu, lambdas);
    let lminus = (lhs - rhs).abs() / rhs.abs().max(1.0);

    let residuals = SplittingResiduals {
        pair_sums,
        column_sums,
        s_identity,
        lminus,
    };
    for (name, r) in [
        ("u_ij + u_ji = v_ij", pair_sums),
        ("column sums equal S", column_sums),
        ("S = sum v / sum b l", s_identity),
        ("lminus identity", lminus),
    ] {
        if !(r <= IDENTITY_TOL) {
            return Err(Error::Consistency(format!("{name} violated by {r:e}")));
        }
    }
    if u.iter().flatten().any(|&x| x < 0.0) {
        return Err(Error::Consistency("splitting has a negative entry".into()));
    }
    Ok(SplittingWitness {
        l,
        t,
        u,
        s,
        beta,
        mu,
        lambdas: lambdas.to_vec(),
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormReport {
    /// One verdict per `t`: `0 >= mu_l^T Phi''(A_l(t)) mu_l`.
    pub verdicts: Vec<InequalityVerdict>,
    /// `n Lambda(full sum) >= sum_l a^(l) Lambda(leave-one-out)`.
    pub lammon: InequalityVerdict,
}

pub fn check_quadratic_form(
    xs: &[FinitePmf],
    alphas: &[f64],
    l: usize,
    t_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<QuadraticFormReport> {
    check_simplex(alphas, xs.len())?;
    if l >= xs.len() {
        return Err(Error::Parameter(format!("leave-out index {l} out of range")));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Parameter("t grid must lie inside (0, 1)".into()));
    }
    let checker = Checker::new(*tol);
    let lammon = checker.lammon(xs, alphas)?;
    let verdicts = t_grid
        .iter()
        .map(|&t| {
            let (beta, mu) = interpolation(alphas, l, t);
            let q = quadratic_form(&hessian_analytic(xs, &beta, DEFAULT_CELL_BUDGET)?, &mu);
            Ok(InequalityVerdict::new(
                "hessian quadratic form",
                0.0,
                q,
                tol.tol_ineq,
                Units::Dimensionless,
                json!({ "xs": echo_all(xs), "alphas": alphas, "l": l, "t": t, "beta": beta, "mu": mu }),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadraticFormReport { verdicts, lammon })
}

/// The three monotonicity margins and `hmon - (lammon + dsub)`, which is
/// zero because `Lambda = H + D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginIdentity {
    pub hmon: f64,
    pub lammon: f64,
    pub dsub: f64,
    pub residual: f64,
}

pub fn margin_identity(xs: &[FinitePmf], alphas: &[f64], tol: &ToleranceConfig) -> Result<MarginIdentity> {
    let checker = Checker::new(*tol).exploring();
    let hmon = checker.hmon(xs, alphas)?.margin;
    let lammon = checker.lammon(xs, alphas)?.margin;
    let dsub = checker.dsub(xs, alphas)?.margin;
    Ok(MarginIdentity {
        hmon,
        lammon,
        dsub,
        residual: hmon - (lammon + dsub),
    })
}
