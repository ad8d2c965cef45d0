//! Run configuration: a strict JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Keys accepted in a `--config` file. Paths are relative to the file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub shift: Option<PathBuf>,
    pub potential: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub truncate: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<Vec<u64>>,
    pub q: Option<Vec<u64>>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub log2: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
        })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.shift, &mut cfg.potential, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        RunConfig {
            preset: over.preset.or(self.preset),
            shift: over.shift.or(self.shift),
            potential: over.potential.or(self.potential),
            horizon: over.horizon.or(self.horizon),
            truncate: over.truncate.or(self.truncate),
            m: over.m.or(self.m),
            q: over.q.or(self.q),
            tol: over.tol.or(self.tol),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
            log2: over.log2.or(self.log2),
        }
    }
}

/// Where the system comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Preset(String),
    Files { shift: PathBuf, potential: Option<PathBuf> },
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub source: Option<SourceSpec>,
    pub horizon: usize,
    pub truncate: Option<usize>,
    pub m_list: Vec<u64>,
    pub q_list: Vec<u128>,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    pub log2: bool,
}

pub const DEFAULT_HORIZON: usize = 40;

impl Settings {
    pub fn resolve(cfg: RunConfig, default_horizon: usize) -> Result<Self, CliError> {
        let source = match (cfg.preset, cfg.shift, cfg.potential) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::Config("give either a preset or shift/potential files, not both".into()))
            }
            (Some(p), None, None) => Some(SourceSpec::Preset(p)),
            (None, Some(shift), potential) => Some(SourceSpec::Files { shift, potential }),
            (None, None, Some(_)) => return Err(CliError::Config("a potential file needs a shift file".into())),
            (None, None, None) => None,
        };
        let horizon = cfg.horizon.unwrap_or(default_horizon);
        if horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if cfg.truncate == Some(0) {
            return Err(CliError::Config("truncation length must be at least 1".into()));
        }
        let m_list = cfg.m.unwrap_or_else(|| vec![2, 4, 8]);
        if m_list.is_empty() || m_list.contains(&0) {
            return Err(CliError::Config("the M grid must be non-empty with entries >= 1".into()));
        }
        let q_list: Vec<u128> = cfg.q.unwrap_or_else(|| vec![1]).into_iter().map(u128::from).collect();
        if q_list.is_empty() || q_list.contains(&0) {
            return Err(CliError::Config("the q grid must be non-empty with entries >= 1".into()));
        }
        let tol = cfg.tol.unwrap_or(cms_core::thermo::TOL_FIT);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config("tolerance must be positive and finite".into()));
        }
        let formats = cfg.format.unwrap_or_else(|| vec![Format::Csv]);
        if formats.is_empty() {
            return Err(CliError::Config("at least one output format is needed".into()));
        }
        Ok(Settings {
            source,
            horizon,
            truncate: cfg.truncate,
            m_list,
            q_list,
            tol,
            out: cfg.out,
            formats,
            log2: cfg.log2.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(r#"{"preset": "sec52-entry", "horizn": 3}"#).is_err());
        let c = parse(r#"{"preset": "sec52-entry", "M": [2, 3], "format": ["csv", "json"]}"#).unwrap();
        assert_eq!(c.m, Some(vec![2, 3]));
    }

    #[test]
    fn invariants_are_enforced() {
        let base = RunConfig {
            preset: Some("sec52-entry".into()),
            ..Default::default()
        };
        assert!(Settings::resolve(base.clone(), DEFAULT_HORIZON).is_ok());
        let bad = [
            RunConfig { horizon: Some(0), ..base.clone() },
            RunConfig { m: Some(vec![]), ..base.clone() },
            RunConfig { q: Some(vec![0]), ..base.clone() },
            RunConfig { tol: Some(-1.0), ..base.clone() },
            RunConfig { shift: Some("x.json".into()), ..base.clone() },
        ];
        for cfg in bad {
            assert!(matches!(Settings::resolve(cfg, DEFAULT_HORIZON), Err(CliError::Config(_))));
        }
    }

    #[test]
    fn flags_override_the_file() {
        let file = RunConfig {
            horizon: Some(10),
            tol: Some(0.1),
            ..Default::default()
        };
        let flags = RunConfig {
            horizon: Some(20),
            ..Default::default()
        };
        let m = file.merge(flags);
        assert_eq!((m.horizon, m.tol), (Some(20), Some(0.1)));
    }
}
