//! Run configuration: a JSON file plus `key=value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use rsc_core::analysis::{GridMode, DEFAULT_F_GRID, DEFAULT_K_GRID, DEFAULT_SEED};
use rsc_core::{ModelId, ModelParams, Provenance, SolveOptions};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Which solution path(s) a command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSel {
    ClosedForm,
    Oracle,
    #[default]
    Both,
}

impl SourceSel {
    pub fn sources(self) -> Vec<Provenance> {
        match self {
            SourceSel::ClosedForm => vec![Provenance::ClosedForm],
            SourceSel::Oracle => vec![Provenance::Oracle],
            SourceSel::Both => vec![Provenance::ClosedForm, Provenance::Oracle],
        }
    }
}

impl FromStr for SourceSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed_form" => Ok(SourceSel::ClosedForm),
            "oracle" => Ok(SourceSel::Oracle),
            "both" => Ok(SourceSel::Both),
            other => Err(format!("unknown source `{other}` (expected closed_form, oracle or both)")),
        }
    }
}

impl fmt::Display for SourceSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceSel::ClosedForm => "closed_form",
            SourceSel::Oracle => "oracle",
            SourceSel::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub f: Vec<f64>,
    pub k: Vec<f64>,
    pub mode: GridMode,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            f: DEFAULT_F_GRID.to_vec(),
            k: DEFAULT_K_GRID.to_vec(),
            mode: GridMode::Zip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelId,
    pub source: SourceSel,
    pub params: ModelParams,
    pub options: SolveOptions,
    pub sweep: SweepGrid,
    /// Output directory.
    pub out: PathBuf,
    /// Seed of the random-draw property checks.
    pub seed: u64,
    /// Number of random draws.
    pub draws: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelId::V,
            source: SourceSel::Both,
            params: ModelParams::default(),
            options: SolveOptions::default(),
            sweep: SweepGrid::default(),
            out: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            draws: 100,
        }
    }
}

/// A configuration problem (bad file, key, value or invariant). Reported
/// with a usage exit code rather than a solver failure.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default()
}

/// Maps a possibly bare key onto its path in the config tree.
fn resolve(key: &str, defaults: &Value) -> Result<Vec<String>, ConfigError> {
    let path: Vec<String> = key.split('.').map(str::to_string).collect();
    if path.len() > 1 {
        return Ok(path);
    }
    let sections: [&[&str]; 4] = [&[], &["params"], &["params", "conventions"], &["options"]];
    for prefix in sections {
        let mut node = defaults;
        for p in prefix {
            node = &node[*p];
        }
        if keys(node).iter().any(|k| k == key) {
            return Ok(prefix.iter().map(|s| s.to_string()).chain([key.to_string()]).collect());
        }
    }
    Err(ConfigError(format!("unknown key `{key}`")))
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies one `key=value` override to a config tree.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{assignment}` is not of the form key=value")))?;
    let defaults = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    let path = resolve(key.trim(), &defaults)?;
    let mut node = tree;
    for (i, p) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("`{}` is not a section", path[..i].join("."))))?;
        if i + 1 == path.len() {
            obj.insert(p.clone(), parse_value(raw.trim()));
            return Ok(());
        }
        node = obj.entry(p.clone()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path is nonempty")
}

impl RunConfig {
    /// Reads a config file; a file holding only model parameters is taken
    /// as the `params` section.
    pub fn tree_from_file(path: &Path) -> anyhow::Result<Value> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: invalid JSON: {e}", path.display())))?;
        let Value::Object(obj) = v else {
            bail!(ConfigError(format!("{}: top level must be an object", path.display())));
        };
        let top = keys(&serde_json::to_value(RunConfig::default()).expect("serializes"));
        if !obj.is_empty() && obj.keys().all(|k| !top.contains(k)) {
            let mut m = Map::new();
            m.insert("params".into(), Value::Object(obj));
            return Ok(Value::Object(m));
        }
        Ok(Value::Object(obj))
    }

    /// Deserializes and validates a config tree.
    pub fn from_tree(tree: Value) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_value(tree).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Lists every violated invariant at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if let Err(e) = self.params.validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = self.options.validate() {
            errs.push(e.to_string());
        }
        let o = &self.options;
        let bounded = o.w_max.is_some() || o.p1_max.is_some() || o.p2_max.is_some();
        if bounded && self.model.is_competitive() && o.p2_max.is_none() {
            errs.push(format!(
                "options.p2_max: required for model {} when search bounds are given",
                self.model
            ));
        }
        if bounded && self.model.is_competitive() && o.p1_max.is_none() {
            errs.push(format!(
                "options.p1_max: required for model {} when search bounds are given",
                self.model
            ));
        }
        if self.draws == 0 {
            errs.push("draws must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::to_value(RunConfig::default()).unwrap()
    }

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::from_tree(base()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let empty = RunConfig::from_tree(Value::Object(Map::new())).unwrap();
        assert_eq!(empty, RunConfig::default());
    }

    #[test]
    fn bare_keys_find_their_section() {
        let mut t = base();
        apply_override(&mut t, "f=0").unwrap();
        apply_override(&mut t, "grid=11").unwrap();
        apply_override(&mut t, "model=\"II\"").unwrap();
        apply_override(&mut t, "source=oracle").unwrap();
        apply_override(&mut t, "transfer_on_deviation=own_type").unwrap();
        apply_override(&mut t, "params.mu=0.4").unwrap();
        let cfg = RunConfig::from_tree(t).unwrap();
        assert_eq!(cfg.params.f, 0.0);
        assert_eq!(cfg.params.mu, 0.4);
        assert_eq!(cfg.options.grid, 11);
        assert_eq!(cfg.model, ModelId::II);
        assert_eq!(cfg.source, SourceSel::Oracle);
        assert_eq!(cfg.params.conventions.transfer_on_deviation, rsc_core::TransferRule::OwnType);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut t = base();
        assert!(apply_override(&mut t, "bogus=1").is_err());
        assert!(apply_override(&mut t, "f").is_err());
        apply_override(&mut t, "params.bogus=1").unwrap();
        let e = RunConfig::from_tree(t).unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
    }

    #[test]
    fn every_violation_is_listed() {
        let mut t = base();
        apply_override(&mut t, "eps=2").unwrap();
        apply_override(&mut t, "mu=-1").unwrap();
        apply_override(&mut t, "grid=1").unwrap();
        let e = RunConfig::from_tree(t).unwrap_err().0;
        assert!(e.contains("eps") && e.contains("mu") && e.contains("grid"), "{e}");
    }

    #[test]
    fn competing_models_need_both_price_bounds() {
        let mut t = base();
        apply_override(&mut t, "model=III").unwrap();
        apply_override(&mut t, "w_max=10").unwrap();
        apply_override(&mut t, "p1_max=3").unwrap();
        let e = RunConfig::from_tree(t.clone()).unwrap_err().0;
        assert!(e.contains("p2_max"), "{e}");
        apply_override(&mut t, "p2_max=3").unwrap();
        RunConfig::from_tree(t.clone()).unwrap();
        apply_override(&mut t, "model=I").unwrap();
        apply_override(&mut t, "p2_max=null").unwrap();
        RunConfig::from_tree(t).unwrap();
    }

    #[test]
    fn params_only_file_is_wrapped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("params.json");
        std::fs::write(&p, r#"{"f": 0, "k": 1}"#).unwrap();
        let cfg = RunConfig::from_tree(RunConfig::tree_from_file(&p).unwrap()).unwrap();
        assert_eq!((cfg.params.f, cfg.params.k), (0.0, 1.0));
        std::fs::write(&p, r#"{"model": "I", "params": {"a": 4}}"#).unwrap();
        let cfg = RunConfig::from_tree(RunConfig::tree_from_file(&p).unwrap()).unwrap();
        assert_eq!((cfg.model, cfg.params.a), (ModelId::I, 4.0));
    }
}
