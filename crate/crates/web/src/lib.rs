//! Browser bindings for the thinning demo.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`. Failures come back as `{"error": "..."}`.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use thinpower::{
    convolve, entropy, entropy_power, entropy_preserving_path, log_grid, thin, Checker, FinitePmf, PmfInput,
    ToleranceConfig,
};

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    let value = match result {
        Ok(v) => serde_json::to_value(v).unwrap_or_else(|e| json!({ "error": e.to_string() })),
        Err(e) => json!({ "error": e }),
    };
    value.to_string()
}

fn parse_pmf(text: &str, tol: &ToleranceConfig) -> Result<FinitePmf, String> {
    let input: PmfInput = serde_json::from_str(text).map_err(|e| format!("bad pmf JSON: {e}"))?;
    input.resolve(tol).map_err(|e| e.to_string())
}

fn summary(p: &FinitePmf, tol: &ToleranceConfig) -> Value {
    let h = entropy(p);
    json!({
        "probs": p.probs(),
        "mean": p.mean(),
        "entropy_nats": h.nats,
        "entropy_bits": h.bits,
        "vpower": entropy_power(p, tol),
        "ulc": p.is_ulc(tol.tol_norm),
    })
}

/// Thins `pmf` by `alpha` and reports both laws with their entropy and V.
#[wasm_bindgen]
pub fn thin_explorer(pmf: &str, alpha: f64) -> String {
    let tol = ToleranceConfig::default();
    respond((|| {
        let x = parse_pmf(pmf, &tol)?;
        let y = thin(&x, alpha).map_err(|e| e.to_string())?;
        Ok(json!({ "alpha": alpha, "input": summary(&x, &tol), "thinned": summary(&y, &tol) }))
    })())
}

/// `V(T_a X + T_(1-a) Y)` against `a V(X) + (1-a) V(Y)` on `points` values
/// of `a` in (0, 1). Negative margins are violations of the thinned EPI.
#[wasm_bindgen]
pub fn tepi_curve(x: &str, y: &str, points: usize) -> String {
    let tol = ToleranceConfig::default();
    respond((|| {
        let x = parse_pmf(x, &tol)?;
        let y = parse_pmf(y, &tol)?;
        let n = points.clamp(3, 400);
        let (vx, vy) = (entropy_power(&x, &tol), entropy_power(&y, &tol));
        let mut alphas = Vec::with_capacity(n);
        let mut lhs = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        for i in 1..=n {
            let a = i as f64 / (n + 1) as f64;
            let mix = convolve(
                &thin(&x, a).map_err(|e| e.to_string())?,
                &thin(&y, 1.0 - a).map_err(|e| e.to_string())?,
            );
            alphas.push(a);
            lhs.push(entropy_power(&mix, &tol));
            rhs.push(a * vx + (1.0 - a) * vy);
        }
        let margin: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
        let within = x.is_ulc(tol.tol_norm) && y.is_ulc(tol.tol_norm);
        Ok(json!({
            "alphas": alphas,
            "lhs": lhs,
            "rhs": rhs,
            "margin": margin,
            "min_margin": margin.iter().copied().fold(f64::INFINITY, f64::min),
            "both_ulc": within,
        }))
    })())
}

/// Entropy-preserving path on `points` log-spaced times in `[t_min, 1]`,
/// plus the isoperimetric verdict for the input.
#[wasm_bindgen]
pub fn entropy_path(pmf: &str, t_min: f64, points: usize) -> String {
    let tol = ToleranceConfig::default();
    respond((|| {
        if !(t_min > 0.0 && t_min < 1.0) || points < 2 {
            return Err("t_min must lie in (0, 1) and points must be >= 2".to_string());
        }
        let x = parse_pmf(pmf, &tol)?;
        let path = entropy_preserving_path(&x, &log_grid(t_min, points.min(400)), &tol).map_err(|e| e.to_string())?;
        let isop = Checker::new(tol).isop(&x).map_err(|e| e.to_string())?;
        Ok(json!({ "path": path, "isop": isop }))
    })())
}
