//! Per-constraint slack reports returned by every region and feasibility check.

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::RatePoint;
use crate::rdlib::KaspiParams;
use crate::vqscheme::VqConfig;

/// Constraint slack (right-hand side minus left-hand side). Non-finite values
/// serialize as the strings `"inf"`, `"-inf"` and `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Slack(pub f64);

impl Serialize for Slack {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Slack {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Slack(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Slack(f64::INFINITY)),
                "-inf" => Ok(Slack(f64::NEG_INFINITY)),
                "nan" => Ok(Slack(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("bad slack `{other}`"))),
            },
        }
    }
}

/// Parameters that certify a feasibility verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Vector-quantizer scheme with a (possibly limited) conference link.
    Vq { config: VqConfig },
    /// Vector-quantizer scheme in its unlimited-conference form.
    VqUnlimited { r2: f64, rc: f64, beta: f64 },
    /// Distributed source code + conferencing MAC code.
    Sep1 { rates: RatePoint, beta1: f64, beta2: f64 },
    /// Conferencing source code + plain MAC code.
    Sep2 { params: KaspiParams, rates: RatePoint },
    /// Input-correlation parameter of the outer bound.
    Necessary { beta: f64 },
}

/// Slacks for a set of named constraints plus the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub slacks: IndexMap<String, Slack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl FeasibilityReport {
    pub fn slack(&self, name: &str) -> Option<f64> {
        self.slacks.get(name).map(|s| s.0)
    }

    /// Smallest slack, `+inf` when there are no constraints.
    pub fn min_slack(&self) -> f64 {
        self.slacks
            .values()
            .map(|s| s.0)
            .fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NEG_INFINITY } else { a.min(b) })
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }
}

/// Collects slacks and decides feasibility against a threshold.
#[derive(Debug, Default)]
pub(crate) struct ReportBuilder {
    slacks: IndexMap<String, Slack>,
    // Constraints that hold with equality by construction; never compared to the margin.
    exact: Vec<String>,
}

impl ReportBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(mut self, name: &str, slack: f64) -> Self {
        self.slacks.insert(name.to_string(), Slack(slack));
        self
    }

    pub fn push_exact(mut self, name: &str, slack: f64) -> Self {
        self.exact.push(name.to_string());
        self.push(name, slack)
    }

    /// Feasible iff every slack is `>= threshold` (NaN fails).
    pub fn finish(self, threshold: f64) -> FeasibilityReport {
        let feasible = self.slacks.iter().all(|(name, s)| {
            if self.exact.iter().any(|e| e == name) {
                s.0 >= 0.0
            } else {
                s.0 >= threshold
            }
        });
        FeasibilityReport {
            feasible,
            slacks: self.slacks,
            witness: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_slack_is_infeasible() {
        let r = ReportBuilder::new().push("a", 1.0).push("b", f64::NAN).finish(0.0);
        assert!(!r.feasible);
        assert_eq!(r.min_slack(), f64::NEG_INFINITY);
    }

    #[test]
    fn json_round_trip_keeps_infinities() {
        let r = ReportBuilder::new()
            .push("r1", 0.25)
            .push("c12", f64::INFINITY)
            .finish(0.0)
            .with_witness(Witness::Necessary { beta: 0.5 });
        let js = serde_json::to_string(&r).unwrap();
        assert!(js.contains("\"c12\":\"inf\""));
        let back: FeasibilityReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&back).unwrap(), js);
    }

    #[test]
    fn exact_constraints_ignore_margin() {
        let r = ReportBuilder::new().push_exact("rc", 0.0).push("r1", 0.5).finish(0.1);
        assert!(r.feasible);
        let r = ReportBuilder::new().push("rc", 0.0).finish(0.1);
        assert!(!r.feasible);
    }
}
