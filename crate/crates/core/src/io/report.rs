//! Machine-readable check results, one JSON object per line.

use std::fs;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub command: String,
    pub check: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    pub fn new(command: &str, check: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            command: command.into(),
            check: check.into(),
            passed,
            value: None,
            threshold: None,
            detail: detail.into(),
        }
    }

    pub fn measured(mut self, value: f64, threshold: f64) -> Self {
        self.value = value.is_finite().then_some(value);
        self.threshold = Some(threshold);
        self
    }

    /// Human-readable line for standard output.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        match (self.value, self.threshold) {
            (Some(v), Some(t)) => format!("[{tag}] {}: {} (value {v:.3e}, threshold {t:.3e})", self.check, self.detail),
            _ => format!("[{tag}] {}: {}", self.check, self.detail),
        }
    }
}

pub fn to_json_lines(results: &[CheckResult]) -> String {
    results
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain data serializes") + "\n")
        .collect()
}

pub fn write_report(path: &Path, results: &[CheckResult]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_json_lines(results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_object_per_line() {
        let rs = vec![
            CheckResult::new("verify", "a", true, "ok").measured(1e-13, 1e-12),
            CheckResult::new("verify", "b", false, "bad"),
        ];
        let text = to_json_lines(&rs);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(v["passed"], true);
        assert_eq!(v["threshold"], 1e-12);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert!(v.get("value").is_none());
        assert!(rs[1].line().starts_with("[FAIL] b"));
    }
}
