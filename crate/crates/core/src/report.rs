//! Named scalar results with Monte Carlo metadata, shared by the CLI, the
//! estimators and the Python bindings.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Formats a number for CSV output: 17 significant digits, `.` separator,
/// exact round trip through `str::parse::<f64>`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// One result. Failed computations keep their name and carry the error
/// text instead of a value, so one bad quantity does not void a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl NamedValue {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value: Some(value), mc_se: None, ess: None, error: None }
    }

    pub fn mc(name: impl Into<String>, value: f64, mc_se: f64, ess: f64) -> Self {
        Self { name: name.into(), value: Some(value), mc_se: Some(mc_se), ess: Some(ess), error: None }
    }

    pub fn failed(name: impl Into<String>, error: impl ToString) -> Self {
        Self { name: name.into(), value: None, mc_se: None, ess: None, error: Some(error.to_string()) }
    }
}

/// Results of one computation together with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CompatReport {
    /// What was computed, e.g. `beta-binomial` or `postmean-suite`.
    pub kind: String,
    /// How it was computed, e.g. `closed-form`, `quadrature`, `direct`.
    pub method: String,
    pub values: Vec<NamedValue>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CompatReport {
    pub fn new(kind: impl Into<String>, method: impl Into<String>) -> Self {
        Self { kind: kind.into(), method: method.into(), ..Default::default() }
    }

    pub fn push(&mut self, v: NamedValue) -> &mut Self {
        self.values.push(v);
        self
    }

    pub fn push_exact(&mut self, name: &str, value: f64) -> &mut Self {
        self.push(NamedValue::exact(name, value))
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metadata.insert(key.to_string(), v);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) -> &mut Self {
        self.warnings.push(msg.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&NamedValue> {
        self.values.iter().find(|v| v.name == name)
    }

    /// The value of `name`, if it was computed successfully.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)
    }

    /// `name,value,mc_se,ess,error` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value,mc_se,ess,error\n");
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for v in &self.values {
            let err = v.error.as_deref().unwrap_or("").replace('"', "'");
            let err = if err.is_empty() { err } else { format!("\"{err}\"") };
            out.push_str(&format!("{},{},{},{},{}\n", v.name, opt(v.value), opt(v.mc_se), opt(v.ess), err));
        }
        out
    }
}
