use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One side of a checked inequality: a single number or a per-case summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quantity {
    Scalar {
        value: f64,
    },
    Summary {
        min: f64,
        max: f64,
        mean: f64,
        count: usize,
    },
}

impl Quantity {
    pub fn scalar(value: f64) -> Self {
        Quantity::Scalar { value }
    }

    pub fn summary(values: &[f64]) -> Self {
        if values.is_empty() {
            return Quantity::Summary {
                min: f64::NAN,
                max: f64::NAN,
                mean: f64::NAN,
                count: 0,
            };
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Quantity::Summary {
            min,
            max,
            mean,
            count: values.len(),
        }
    }

    /// Representative value: the scalar itself or the summary maximum.
    pub fn value(&self) -> f64 {
        match *self {
            Quantity::Scalar { value } => value,
            Quantity::Summary { max, .. } => max,
        }
    }
}

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub claim: String,
    pub lhs: Quantity,
    pub rhs: Quantity,
    /// `rhs - lhs` in the check's own normalization; negative means violated.
    pub slack: f64,
    pub constant_measured: f64,
    pub pass: bool,
    pub tolerance_used: f64,
    pub inputs_digest: String,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub runtime_s: f64,
}

impl CheckReport {
    pub fn new(check_id: impl Into<String>, claim: impl Into<String>) -> Self {
        CheckReport {
            check_id: check_id.into(),
            claim: claim.into(),
            lhs: Quantity::scalar(f64::NAN),
            rhs: Quantity::scalar(f64::NAN),
            slack: f64::NAN,
            constant_measured: f64::NAN,
            pass: false,
            tolerance_used: f64::NAN,
            inputs_digest: String::new(),
            notes: Vec::new(),
            metrics: BTreeMap::new(),
            runtime_s: 0.0,
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Copy with the wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_runtime(&self) -> CheckReport {
        CheckReport {
            runtime_s: 0.0,
            ..self.clone()
        }
    }
}
