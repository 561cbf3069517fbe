//! Finite-support probability mass functions on `{0, ..., N}` and the
//! parametric families used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_row, compensated_sum, poisson_weights};
use crate::tolerance::ToleranceConfig;

/// A probability mass function with support contained in `{0, ..., len-1}`.
///
/// Invariants: entries are nonnegative, sum to one, the last entry is
/// positive (trailing zeros are trimmed) and the vector is never empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinitePmf {
    probs: Vec<f64>,
}

impl FinitePmf {
    /// Validates `probs` as a pmf. Entries in `(-tol_norm, 0)` are clamped
    /// to zero; the sum must be within `tol_norm` of one and is then
    /// normalized exactly.
    pub fn new(probs: Vec<f64>, tol: &ToleranceConfig) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty probability vector".into()));
        }
        let probs = clamp_negatives(probs, tol.tol_norm)?;
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > tol.tol_norm {
            return Err(Error::InvalidPmf(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::normalized(probs, total))
    }

    /// Normalizes arbitrary nonnegative weights into a pmf.
    pub fn from_weights(weights: Vec<f64>, tol: &ToleranceConfig) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPmf("empty weight vector".into()));
        }
        let weights = clamp_negatives(weights, tol.tol_norm)?;
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Ok(Self::normalized(weights, total))
    }

    /// Point mass at `k`.
    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        FinitePmf { probs }
    }

    /// Internal constructor for vectors produced by exact operations
    /// (convolution, thinning): clamps rounding noise, trims and renormalizes.
    pub(crate) fn from_exact(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        if probs.is_empty() {
            probs.push(1.0);
        }
        let total = compensated_sum(probs.iter().copied());
        Self::normalized(probs, total)
    }

    fn normalized(mut probs: Vec<f64>, total: f64) -> Self {
        if total != 1.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        while probs.len() > 1 && *probs.last().unwrap() == 0.0 {
            probs.pop();
        }
        FinitePmf { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Support length; the support is contained in `{0, ..., len-1}`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `P(X = k)`, zero beyond the stored support.
    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> usize {
        self.probs.len() - 1
    }

    /// Smallest `k` with positive mass.
    pub fn min_value(&self) -> usize {
        self.probs.iter().position(|&p| p > 0.0).unwrap_or(0)
    }

    /// True when the pmf is a point mass (zero entropy).
    pub fn is_degenerate(&self) -> bool {
        self.probs.iter().filter(|&&p| p > 0.0).count() == 1
    }

    /// True when there is a zero strictly between two positive masses.
    pub fn has_interior_gap(&self) -> bool {
        let lo = self.min_value();
        self.probs[lo..].contains(&0.0)
    }

    /// `E[X]`, compensated.
    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(k, &p)| k as f64 * p))
    }

    /// Ultra log-concavity: `i P(i)^2 >= (i+1) P(i+1) P(i-1) - tol` for all
    /// interior `i`, and no zero mass between positive masses.
    pub fn is_ulc(&self, tol: f64) -> bool {
        if self.has_interior_gap() {
            return false;
        }
        let p = &self.probs;
        (1..p.len().saturating_sub(1)).all(|i| {
            let lhs = i as f64 * p[i] * p[i];
            let rhs = (i + 1) as f64 * p[i + 1] * p[i - 1];
            lhs >= rhs - tol
        })
    }

    /// Size-biased pmf `P#(x) = (x+1) P(x+1) / E[X]`.
    pub fn size_bias(&self) -> Result<FinitePmf> {
        let mean = self.mean();
        if mean <= 0.0 {
            return Err(Error::Domain("size-biasing needs a positive mean".into()));
        }
        if self.probs.len() == 1 {
            unreachable!("positive mean implies support beyond 0");
        }
        let probs = (0..self.probs.len() - 1)
            .map(|x| (x + 1) as f64 * self.probs[x + 1] / mean)
            .collect();
        Ok(FinitePmf::from_exact(probs))
    }

    /// Total variation distance over the union of supports.
    pub fn total_variation(&self, other: &FinitePmf) -> f64 {
        let n = self.len().max(other.len());
        0.5 * compensated_sum((0..n).map(|k| (self.get(k) - other.get(k)).abs()))
    }
}

fn clamp_negatives(mut probs: Vec<f64>, tol_norm: f64) -> Result<Vec<f64>> {
    for (k, p) in probs.iter_mut().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidPmf(format!("entry {k} is not finite")));
        }
        if *p < 0.0 {
            if *p > -tol_norm {
                *p = 0.0;
            } else {
                return Err(Error::InvalidPmf(format!("entry {k} is negative ({p})")));
            }
        }
    }
    Ok(probs)
}

/// Free-function form of [`FinitePmf::total_variation`].
pub fn total_variation(p: &FinitePmf, q: &FinitePmf) -> f64 {
    p.total_variation(q)
}

/// A parametric family (or raw vector) from which a [`FinitePmf`] is built.
///
/// JSON form: `{"family": "binomial", "n": 3, "p": 0.4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Delta { k: usize },
    Bernoulli { p: f64 },
    Binomial { n: usize, p: f64 },
    BernoulliSum { ps: Vec<f64> },
    Poisson { lambda: f64 },
    /// Geometric on `{0, 1, ...}` with the given mean, truncated at `tail_eps`.
    Geometric { mean: f64 },
    /// Arbitrary nonnegative weights, normalized.
    #[serde(alias = "mixture")]
    Raw { probs: Vec<f64> },
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {p} is outside [0, 1]")))
    }
}

impl FamilySpec {
    pub fn build(&self, tol: &ToleranceConfig) -> Result<FinitePmf> {
        construct(self, tol)
    }
}

/// Builds the pmf described by `spec`.
pub fn construct(spec: &FamilySpec, tol: &ToleranceConfig) -> Result<FinitePmf> {
    match spec {
        FamilySpec::Delta { k } => Ok(FinitePmf::point_mass(*k)),
        FamilySpec::Bernoulli { p } => {
            check_prob("p", *p)?;
            Ok(FinitePmf::from_exact(vec![1.0 - p, *p]))
        }
        FamilySpec::Binomial { n, p } => {
            check_prob("p", *p)?;
            Ok(FinitePmf::from_exact(binomial_row(*n, *p)))
        }
        FamilySpec::BernoulliSum { ps } => {
            for (i, p) in ps.iter().enumerate() {
                check_prob(&format!("ps[{i}]"), *p)?;
            }
            let mut acc = vec![1.0];
            for p in ps {
                let mut next = vec![0.0; acc.len() + 1];
                for (k, &a) in acc.iter().enumerate() {
                    next[k] += a * (1.0 - p);
                    next[k + 1] += a * p;
                }
                acc = next;
            }
            Ok(FinitePmf::from_exact(acc))
        }
        FamilySpec::Poisson { lambda } => {
            if !(lambda.is_finite() && *lambda >= 0.0) {
                return Err(Error::Parameter(format!("lambda = {lambda} must be >= 0")));
            }
            Ok(FinitePmf::from_exact(poisson_weights(*lambda, tol.tail_eps)))
        }
        FamilySpec::Geometric { mean } => {
            if !(mean.is_finite() && *mean >= 0.0) {
                return Err(Error::Parameter(format!("mean = {mean} must be >= 0")));
            }
            if *mean == 0.0 {
                return Ok(FinitePmf::point_mass(0));
            }
            let ratio = mean / (1.0 + mean);
            let first = 1.0 - ratio;
            // tail beyond k is ratio^(k+1)
            let last = (tol.tail_eps.ln() / ratio.ln()).ceil().max(2.0) as usize;
            let probs = (0..=last).map(|k| first * ratio.powi(k as i32)).collect();
            Ok(FinitePmf::from_exact(probs))
        }
        FamilySpec::Raw { probs } => FinitePmf::from_weights(probs.clone(), tol),
    }
}

/// `{"probs": [...]}` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfDocument {
    pub probs: Vec<f64>,
}

impl From<&FinitePmf> for PmfDocument {
    fn from(p: &FinitePmf) -> Self {
        PmfDocument { probs: p.probs.clone() }
    }
}

/// Either a raw pmf document or a family spec; the shared CLI input format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PmfInput {
    Family(FamilySpec),
    Pmf(PmfDocument),
}

impl PmfInput {
    pub fn resolve(&self, tol: &ToleranceConfig) -> Result<FinitePmf> {
        match self {
            PmfInput::Family(spec) => construct(spec, tol),
            PmfInput::Pmf(doc) => FinitePmf::new(doc.probs.clone(), tol),
        }
    }
}
