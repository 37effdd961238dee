use std::io::Write;
use std::path::Path;

use pentagon::identities::{FormVariant, IdentityId, VariantScore, VerificationReport};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";
pub const CSV_HEADER: [&str; 6] = ["seed", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_residual"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub precision: String,
    pub build_id: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            precision: "f64".into(),
            build_id: format!("pentagon-cli {} ({})", env!("CARGO_PKG_VERSION"), std::env::consts::ARCH),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub points: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub worst_rel_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: String,
    pub timestamp: String,
    pub command: String,
    pub identity: Option<IdentityId>,
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub form: Option<FormVariant>,
    pub reports: Vec<VerificationReport>,
    #[serde(default)]
    pub failures: Vec<SeedFailure>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_scan: Option<Vec<VariantScore>>,
    #[serde(default)]
    pub canonical_variant: Option<FormVariant>,
    #[serde(default)]
    pub discrepancies: Vec<String>,
    pub environment: Environment,
}

impl RunRecord {
    pub fn new(command: &str, identity: Option<IdentityId>, seeds: Vec<u64>, tolerance: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.into(),
            identity,
            seeds,
            tolerance,
            form: None,
            reports: Vec::new(),
            failures: Vec::new(),
            summary: Summary { points: 0, passed: 0, failed: 0, errors: 0, worst_rel_residual: None },
            variant_scan: None,
            canonical_variant: None,
            discrepancies: Vec::new(),
            environment: Environment::current(),
        }
    }

    pub fn summarize(&mut self) {
        let passed = self.reports.iter().filter(|r| r.passed).count();
        self.summary = Summary {
            points: self.reports.len() + self.failures.len(),
            passed,
            failed: self.reports.len() - passed,
            errors: self.failures.len(),
            worst_rel_residual: self.reports.iter().map(|r| r.rel_residual).reduce(f64::max),
        };
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Usage(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(CliError::Usage(format!("{}: unsupported schema_version {v}", path.display()))),
            None => return Err(CliError::Usage(format!("{}: missing schema_version", path.display()))),
        }
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Writes one row per report, in the order given.
pub fn write_table<W: Write>(out: W, seeds: &[u64], reports: &[VerificationReport]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for (seed, r) in seeds.iter().zip(reports) {
        w.write_record([
            seed.to_string(),
            r.lhs.re.to_string(),
            r.lhs.im.to_string(),
            r.rhs.re.to_string(),
            r.rhs.im.to_string(),
            r.rel_residual.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io("table".into(), e))
}
