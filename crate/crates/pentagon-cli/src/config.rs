use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Keys shared by the top level and the per-identity sections.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub identity: Option<String>,
    pub seed: Option<u64>,
    pub seeds: Option<String>,
    pub tol: Option<f64>,
    pub form: Option<String>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Settings {
    fn or(self, other: &Settings) -> Settings {
        Settings {
            identity: self.identity.or_else(|| other.identity.clone()),
            seed: self.seed.or(other.seed),
            seeds: self.seeds.or_else(|| other.seeds.clone()),
            tol: self.tol.or(other.tol),
            form: self.form.or_else(|| other.form.clone()),
            jobs: self.jobs.or(other.jobs),
            out: self.out.or_else(|| other.out.clone()),
        }
    }
}

/// Keys of the `[eval]` section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    pub b: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub z: Option<String>,
    pub a: Option<String>,
    pub q: Option<String>,
    pub m: Option<f64>,
    pub n: Option<i64>,
    pub method: Option<String>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub base: Settings,
    pub sections: BTreeMap<String, Settings>,
    pub eval: EvalSettings,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut scalars = toml::Table::new();
        let mut cfg = Config::default();
        for (key, value) in table {
            match value {
                toml::Value::Table(t) if key == "eval" => {
                    cfg.eval = EvalSettings::deserialize(toml::Value::Table(t)).map_err(|e| format!("[eval]: {e}"))?;
                }
                toml::Value::Table(t) => {
                    let s = Settings::deserialize(toml::Value::Table(t)).map_err(|e| format!("[{key}]: {e}"))?;
                    cfg.sections.insert(key.replace('_', "-").to_ascii_lowercase(), s);
                }
                other => {
                    scalars.insert(key, other);
                }
            }
        }
        cfg.base = Settings::deserialize(toml::Value::Table(scalars)).map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// Command-line values win over the identity section, which wins over the top level.
    pub fn resolve(&self, cli: Settings, identity: Option<&str>) -> Settings {
        let merged = cli.or(&Settings::default());
        let id = merged.identity.clone().or_else(|| self.base.identity.clone());
        let section = id
            .as_deref()
            .or(identity)
            .and_then(|i| self.sections.get(&i.replace('_', "-").to_ascii_lowercase()))
            .cloned()
            .unwrap_or_default();
        merged.or(&section).or(&self.base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let cfg = Config::parse(
            "tol = 1e-3\njobs = 2\n[s2s1-sqed]\ntol = 1e-7\nform = \"canonical\"\n[eval]\nb = \"1.0\"\n",
        )
        .unwrap();
        let cli = Settings { identity: Some("s2s1-sqed".into()), ..Default::default() };
        let r = cfg.resolve(cli, None);
        assert_eq!(r.tol, Some(1e-7));
        assert_eq!(r.jobs, Some(2));
        assert_eq!(r.form.as_deref(), Some("canonical"));
        let cli = Settings { identity: Some("s2s1-sqed".into()), tol: Some(1e-9), ..Default::default() };
        assert_eq!(cfg.resolve(cli, None).tol, Some(1e-9));
        assert_eq!(cfg.eval.b.as_deref(), Some("1.0"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("tolerance = 1\n").is_err());
        assert!(Config::parse("[s3b-sqed]\nbogus = 1\n").is_err());
    }
}
