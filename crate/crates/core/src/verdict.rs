use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::pmf::{FinitePmf, PmfDocument};

/// Units of the two sides of a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    Nats,
    Bits,
    PoissonRate,
    /// Hessian quadratic forms and other derived quantities.
    Dimensionless,
}

/// One evaluation of an inequality `lhs >= rhs`.
///
/// `margin = lhs - rhs` and `holds` is tolerance gated:
/// `holds <=> margin >= -tol_ineq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub inputs: Value,
    pub units: Units,
    /// False when a hypothesis (e.g. ULC) was overridden for exploration.
    pub within_hypotheses: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityVerdict {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol_ineq: f64, units: Units, inputs: Value) -> Self {
        let margin = lhs - rhs;
        InequalityVerdict {
            name: name.into(),
            lhs,
            rhs,
            margin,
            holds: margin >= -tol_ineq,
            inputs,
            units,
            within_hypotheses: true,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Marks the verdict as computed outside the theorem's hypotheses.
    pub fn outside_hypotheses(mut self, why: &str) -> Self {
        self.within_hypotheses = false;
        self.note = Some(match self.note.take() {
            Some(n) => format!("outside theorem hypotheses ({why}); {n}"),
            None => format!("outside theorem hypotheses ({why})"),
        });
        self
    }
}

/// JSON echo of a pmf for verdict inputs.
pub(crate) fn echo(p: &FinitePmf) -> Value {
    serde_json::to_value(PmfDocument::from(p)).expect("pmf serializes")
}

pub(crate) fn echo_all(ps: &[FinitePmf]) -> Value {
    Value::Array(ps.iter().map(echo).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_is_tolerance_gated() {
        let v = InequalityVerdict::new("t", 1.0, 1.0 + 1e-10, 1e-9, Units::Nats, Value::Null);
        assert!(v.holds);
        assert!(v.margin < 0.0);
        let v = InequalityVerdict::new("t", 1.0, 1.0 + 1e-8, 1e-9, Units::Nats, Value::Null);
        assert!(!v.holds);
    }

    #[test]
    fn watermark() {
        let v = InequalityVerdict::new("t", 2.0, 1.0, 1e-9, Units::Bits, Value::Null).outside_hypotheses("X not ULC");
        assert!(!v.within_hypotheses);
        assert!(v.note.unwrap().contains("outside theorem hypotheses"));
    }
}
