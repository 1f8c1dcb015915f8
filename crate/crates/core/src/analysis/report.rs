use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    Ghidaglia,
    Boundedness,
    Threshold,
    Contraction,
    Absorbing,
    WeakResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub label: String,
    pub t: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl Evidence {
    pub fn new(label: impl Into<String>, t: f64, value: f64, bound: Option<f64>) -> Self {
        Self {
            label: label.into(),
            t,
            value,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub value: f64,
    pub note: String,
}

/// Outcome of a verification probe. A failing report always carries a
/// witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub evidence: Vec<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl ProbeReport {
    pub fn new(kind: ProbeKind) -> Self {
        Self {
            kind,
            pass: false,
            measured: BTreeMap::new(),
            evidence: Vec::new(),
            witness: None,
        }
    }

    pub fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    pub fn passed(mut self) -> Self {
        self.pass = true;
        self.witness = None;
        self
    }

    pub fn failed(mut self, t: f64, value: f64, note: impl Into<String>) -> Self {
        self.pass = false;
        self.witness = Some(Witness {
            t,
            value,
            note: note.into(),
        });
        self
    }
}
