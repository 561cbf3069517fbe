//! The thin-then-add-Poisson semigroup `U_{t,f} X = T_t X + Pi_f`, the
//! entropy-preserving interpolation between `X` and a Poisson law, and the
//! isoperimetric inequality `L(X) <= V(X) J(V(X))`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::functionals::{entropy_power, h, l_functional, poisson_entropy_derivative, u_functional};
use crate::numeric::{ordered_map, poisson_weights};
use crate::pmf::FinitePmf;
use crate::tolerance::ToleranceConfig;
use crate::transforms::{convolve, thin};
use crate::verdict::{echo, InequalityVerdict, Units};

fn poisson_pmf(rate: f64, tol: &ToleranceConfig) -> FinitePmf {
    FinitePmf::from_exact(poisson_weights(rate, tol.tail_eps))
}

/// `U_{t,f} X = T_t X + Pi_f`.
pub fn evolve(x: &FinitePmf, t: f64, f_val: f64, tol: &ToleranceConfig) -> Result<FinitePmf> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!("t = {t} must lie in (0, 1]")));
    }
    if !(f_val.is_finite() && f_val >= 0.0) {
        return Err(Error::Parameter(format!("f = {f_val} must be >= 0")));
    }
    let thinned = thin(x, t)?;
    if f_val == 0.0 {
        return Ok(thinned);
    }
    Ok(convolve(&thinned, &poisson_pmf(f_val, tol)))
}

/// Largest pointwise gap between a central finite difference of
/// `t -> P_t(z)` and the evolution equation
/// `d/dt P_t(z) = Δ*((z+1) P_t(z+1)/t - r P_t(z))`, `Δ* g(z) = g(z-1) - g(z)`.
///
/// Around `t` the rate is taken linear, `f(s) = f_val + (s - t) f'(t)` with
/// `f'(t) = f_val/t - r_val`, which is the slope consistent with `r_val`.
/// With `f_val = r_val = 0` this is the pure thinning flow.
pub fn pde_residual(
    x: &FinitePmf,
    t: f64,
    r_val: f64,
    f_val: f64,
    fd_step: f64,
    tol: &ToleranceConfig,
) -> Result<f64> {
    if !(fd_step > 0.0 && t - fd_step > 0.0 && t + fd_step < 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < t - h < t + h < 1, got t = {t}, h = {fd_step}"
        )));
    }
    let slope = f_val / t - r_val;
    let f_at = |s: f64| f_val + (s - t) * slope;
    let (f_lo, f_hi) = (f_at(t - fd_step), f_at(t + fd_step));
    if f_lo < 0.0 || f_hi < 0.0 {
        return Err(Error::Parameter("rate f becomes negative inside the stencil".into()));
    }
    let lo = evolve(x, t - fd_step, f_lo, tol)?;
    let hi = evolve(x, t + fd_step, f_hi, tol)?;
    let mid = evolve(x, t, f_val, tol)?;

    let len = lo.len().max(hi.len()).max(mid.len()) + 1;
    let g = |z: usize| (z + 1) as f64 * mid.get(z + 1) / t - r_val * mid.get(z);
    let mut worst: f64 = 0.0;
    for z in 0..len {
        let time_derivative = (hi.get(z) - lo.get(z)) / (2.0 * fd_step);
        let previous = if z == 0 { 0.0 } else { g(z - 1) };
        let rhs = previous - g(z);
        worst = worst.max((time_derivative - rhs).abs());
    }
    Ok(worst)
}

/// Sampled entropy-preserving path `X_t = T_t X + Pi_{f(t)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub t_grid: Vec<f64>,
    pub f_vals: Vec<f64>,
    pub r_vals: Vec<f64>,
    pub h_vals: Vec<f64>,
    pub u_vals: Vec<f64>,
    /// Linear extrapolation of `f` to `t = 0` from the two smallest grid points.
    pub f0_extrapolated: f64,
    /// `V(X)`; the path ends at `Pi_{V(X)}`.
    pub v_target: f64,
    /// `H(X)` in nats.
    pub h_target: f64,
}

/// 40 logarithmically spaced points in `[0.02, 1]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(0.02, 40)
}

/// `points` logarithmically spaced values from `t_min` to 1.
pub fn log_grid(t_min: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && t_min > 0.0 && t_min < 1.0);
    let span = (1.0 / t_min).ln();
    let mut grid: Vec<f64> = (0..points)
        .map(|i| t_min * (span * i as f64 / (points - 1) as f64).exp())
        .collect();
    *grid.last_mut().unwrap() = 1.0;
    grid
}

/// Solves `H(T_t X + Pi_f) = H(X)` for `f >= 0` at every grid point.
///
/// Requires `X` ULC with `L(X) > 0`; only then is `H(T_t X)` increasing in
/// `t`, so that a nonnegative `f(t)` exists. `H` is increasing in the added
/// rate, and the bracket `[0, V(X) + E X + 1]` is closed by bisection.
/// A grid missing the endpoint `t = 1` gets it appended.
pub fn entropy_preserving_path(x: &FinitePmf, t_grid: &[f64], tol: &ToleranceConfig) -> Result<PathReport> {
    if !x.is_ulc(tol.tol_norm) {
        return Err(Error::Precondition("entropy-preserving path needs a ULC pmf".into()));
    }
    let l = l_functional(x)?;
    if l <= 0.0 {
        return Err(Error::Domain(format!("path undefined (L = {l} <= 0)")));
    }
    let mut grid = t_grid.to_vec();
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] <= 0.0 || *grid.last().unwrap() > 1.0 {
        return Err(Error::Parameter("t grid must be strictly increasing inside (0, 1]".into()));
    }
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }

    let h_target = h(x);
    let v_target = entropy_power(x, tol);
    let upper = v_target + x.mean() + 1.0;

    let solved: Vec<Result<(f64, f64, f64)>> = ordered_map(&grid, |&t| {
        let thinned = thin(x, t)?;
        let f = if t == 1.0 { 0.0 } else { solve_rate(&thinned, h_target, upper, t, tol)? };
        let xt = if f == 0.0 { thinned } else { convolve(&thinned, &poisson_pmf(f, tol)) };
        Ok((f, h(&xt), u_functional(&xt)))
    });
    let mut f_vals = Vec::with_capacity(grid.len());
    let mut h_vals = Vec::with_capacity(grid.len());
    let mut u_vals = Vec::with_capacity(grid.len());
    for item in solved {
        let (f, hv, u) = item?;
        f_vals.push(f);
        h_vals.push(hv);
        u_vals.push(u);
    }

    let r_vals = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| f_vals[i] / t - derivative_on_grid(&grid, &f_vals, i))
        .collect();
    let (t0, t1) = (grid[0], grid[1]);
    let f0_extrapolated = f_vals[0] - t0 * (f_vals[1] - f_vals[0]) / (t1 - t0);

    Ok(PathReport {
        t_grid: grid,
        f_vals,
        r_vals,
        h_vals,
        u_vals,
        f0_extrapolated,
        v_target,
        h_target,
    })
}

fn solve_rate(thinned: &FinitePmf, h_target: f64, upper: f64, t: f64, tol: &ToleranceConfig) -> Result<f64> {
    let gap = |f: f64| -> f64 {
        if f == 0.0 {
            h(thinned) - h_target
        } else {
            h(&convolve(thinned, &poisson_pmf(f, tol))) - h_target
        }
    };
    let mut lo = 0.0;
    let g_lo = gap(lo);
    if g_lo >= 0.0 {
        // H(T_t X) already reaches H(X) (only up to rounding near t = 1).
        return Ok(0.0);
    }
    let mut hi = upper;
    let mut g_hi = gap(hi);
    if g_hi < 0.0 {
        return Err(Error::Numeric(format!(
            "no entropy-preserving rate at t = {t}: H gap at f = {upper} is {g_hi:e}"
        )));
    }
    let mut best = (hi, g_hi.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = gap(mid);
        if g.abs() < best.1 {
            best = (mid, g.abs());
        }
        if g.abs() <= tol.tol_root {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            g_hi = g;
        }
    }
    let _ = g_hi;
    Ok(best.0)
}

/// Three-point derivative on a non-uniform grid; one-sided at the ends.
fn derivative_on_grid(t: &[f64], f: &[f64], i: usize) -> f64 {
    let n = t.len();
    if i == 0 {
        return (f[1] - f[0]) / (t[1] - t[0]);
    }
    if i == n - 1 {
        return (f[n - 1] - f[n - 2]) / (t[n - 1] - t[n - 2]);
    }
    let h1 = t[i] - t[i - 1];
    let h2 = t[i + 1] - t[i];
    (h1 * h1 * f[i + 1] - h2 * h2 * f[i - 1] + (h2 * h2 - h1 * h1) * f[i]) / (h1 * h2 * (h1 + h2))
}

/// `V(X) J(V(X)) >= L(X)`, oriented so that the verdict holds when the
/// margin is nonnegative.
pub fn isoperimetric_check(x: &FinitePmf, tol: &ToleranceConfig, allow_non_ulc: bool) -> Result<InequalityVerdict> {
    let ulc = x.is_ulc(tol.tol_norm);
    if !ulc && !allow_non_ulc {
        return Err(Error::Precondition("isoperimetric inequality needs a ULC pmf".into()));
    }
    let l = l_functional(x)?;
    let v = entropy_power(x, tol);
    let rhs_bound = if v == 0.0 { 0.0 } else { v * poisson_entropy_derivative(v, tol)? };
    let verdict = InequalityVerdict::new(
        "isop: V J(V) >= L",
        rhs_bound,
        l,
        tol.tol_ineq,
        Units::Nats,
        json!({ "x": echo(x) }),
    );
    Ok(if ulc { verdict } else { verdict.outside_hypotheses("X is not ULC") })
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

    #[test]
    fn evolve_examples() {
        let x = build(FamilySpec::Binomial { n: 3, p: 0.4 });
        assert_eq!(evolve(&x, 1.0, 0.0, &cfg()).unwrap(), x);
        let half = evolve(&FinitePmf::point_mass(1), 0.5, 0.0, &cfg()).unwrap();
        assert_eq!(half.probs(), &[0.5, 0.5]);
        assert!(evolve(&x, 0.0, 0.0, &cfg()).is_err());
        assert!(evolve(&x, 0.5, -1.0, &cfg()).is_err());
    }

    #[test]
    fn evolve_reproduces_counterexample_mixture() {
        // T_a (Bern(1/3) + Pi_1) + T_{1-a} Pi_1000 = Bern(a/3) + Pi_{a + (1-a) 1000}
        let a = 0.999;
        let bern = build(FamilySpec::Bernoulli { p: 1.0 / 3.0 });
        let lhs = evolve(&bern, a, a * 1.0 + (1.0 - a) * 1000.0, &cfg()).unwrap();
        let rhs = convolve(
            &build(FamilySpec::Bernoulli { p: a / 3.0 }),
            &build(FamilySpec::Poisson { lambda: a + (1.0 - a) * 1000.0 }),
        );
        assert!(lhs.total_variation(&rhs) < 1e-12);
    }

    #[test]
    fn pde_residual_pure_thinning() {
        let cases = [
            (build(FamilySpec::Bernoulli { p: 0.7 }), 0.5),
            (build(FamilySpec::Binomial { n: 3, p: 0.5 }), 0.25),
        ];
        for (x, t) in cases {
            assert!(pde_residual(&x, t, 0.0, 0.0, 1e-5, &cfg()).unwrap() < 1e-6);
        }
        assert_eq!(pde_residual(&FinitePmf::point_mass(0), 0.4, 0.0, 0.0, 1e-5, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn pde_residual_with_poisson_rate() {
        // f(s) = 2 (1 - s): r = f/t - f' = 2(1-t)/t + 2
        let x = build(FamilySpec::Binomial { n: 2, p: 0.6 });
        let t = 0.4;
        let f_val = 2.0 * (1.0 - t);
        let r_val = f_val / t + 2.0;
        assert!(pde_residual(&x, t, r_val, f_val, 1e-5, &cfg()).unwrap() < 1e-6);
        // any (f, r) pair defines a consistent local rate
        for (f_val, r_val) in [(0.5, -1.0), (3.0, 0.2), (1.0, 2.5)] {
            assert!(pde_residual(&x, t, r_val, f_val, 1e-5, &cfg()).unwrap() < 1e-6);
        }
    }

    #[test]
    fn pde_residual_rejects_bad_step() {
        let x = build(FamilySpec::Bernoulli { p: 0.7 });
        assert!(pde_residual(&x, 0.5, 0.0, 0.0, 0.0, &cfg()).is_err());
        assert!(pde_residual(&x, 0.99, 0.0, 0.0, 0.05, &cfg()).is_err());
    }

    #[test]
    fn path_for_poisson_is_linear() {
        let lambda = 2.0;
        let x = build(FamilySpec::Poisson { lambda });
        let report = entropy_preserving_path(&x, &default_grid(), &cfg()).unwrap();
        for (&t, &f) in report.t_grid.iter().zip(&report.f_vals) {
            assert!((f - (1.0 - t) * lambda).abs() < 1e-8, "t={t}, f={f}");
        }
        assert!((report.f0_extrapolated - lambda).abs() < 1e-7);
        assert!((report.v_target - lambda).abs() < 1e-8);
    }

    #[test]
    fn path_for_binomial() {
        let x = build(FamilySpec::Binomial { n: 4, p: 0.3 });
        let report = entropy_preserving_path(&x, &default_grid(), &cfg()).unwrap();
        assert!((report.f0_extrapolated - entropy_power(&x, &cfg())).abs() < 1e-3);
        for hv in &report.h_vals {
            assert!((hv - report.h_target).abs() < 10.0 * cfg().tol_root);
        }
        assert!(report.f_vals.iter().all(|&f| f >= -1e-12));
        assert_eq!(*report.f_vals.last().unwrap(), 0.0);
    }

    #[test]
    fn path_u_is_non_increasing() {
        let x = build(FamilySpec::BernoulliSum { ps: vec![0.2, 0.3, 0.4] });
        let report = entropy_preserving_path(&x, &default_grid(), &cfg()).unwrap();
        for w in report.u_vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "{w:?}");
        }
    }

    #[test]
    fn path_rejects_negative_l() {
        let x = build(FamilySpec::Bernoulli { p: 0.9 });
        assert!(matches!(
            entropy_preserving_path(&x, &default_grid(), &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn isoperimetric_examples() {
        let p3 = isoperimetric_check(&build(FamilySpec::Poisson { lambda: 3.0 }), &cfg(), false).unwrap();
        assert!(p3.margin.abs() < 1e-8);
        let b = isoperimetric_check(&build(FamilySpec::Bernoulli { p: 0.9 }), &cfg(), false).unwrap();
        assert!(b.rhs < 0.0 && b.holds);
        let bin = isoperimetric_check(&build(FamilySpec::Binomial { n: 5, p: 0.2 }), &cfg(), false).unwrap();
        assert!(bin.holds && bin.margin > 0.0);
        let geo = build(FamilySpec::Geometric { mean: 1.0 });
        assert!(matches!(isoperimetric_check(&geo, &cfg(), false), Err(Error::Precondition(_))));
        assert!(!isoperimetric_check(&geo, &cfg(), true).unwrap().within_hypotheses);
    }
}
