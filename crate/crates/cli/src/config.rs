//! Run configuration: built-in defaults, then the TOML file, then flags.
//!
//! Tables merge key by key, so a file that sets one quality threshold keeps
//! the other rules at their defaults. A quality rule set to `"off"` is
//! disabled.

use std::path::Path;

use curator_core::config::PipelineConfig;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};
use crate::io::read_to_string;

/// One flag override: a dotted key path and its value.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: String,
    pub value: Value,
}

impl Override {
    pub fn new(path: &str, value: impl Into<Value>) -> Self {
        Override {
            path: path.to_string(),
            value: value.into(),
        }
    }
}

/// Parses `key.path=value`. The value is read as a TOML value, falling back
/// to a bare string.
pub fn parse_override(s: &str) -> Result<Override, String> {
    let (path, raw) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(format!("invalid key `{path}`"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok(Override {
        path: path.to_string(),
        value,
    })
}

fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn set_path(root: &mut Table, path: &str, value: Value) -> CliResult<()> {
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().unwrap_or_default();
    let mut table = root;
    for key in keys {
        let entry = table.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::invalid(format!("config key `{key}` in `{path}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn drop_disabled_rules(root: &mut Table) {
    if let Some(Value::Table(quality)) = root.get_mut("scan").and_then(|s| s.get_mut("quality")) {
        quality.retain(|_, v| v.as_str() != Some("off"));
    }
}

pub fn load(file: Option<&Path>, overrides: &[Override]) -> CliResult<PipelineConfig> {
    let mut root = Table::try_from(PipelineConfig::default())
        .map_err(|e| CliError::invalid(format!("default configuration: {e}")))?;
    if let Some(path) = file {
        let text = read_to_string(path)?;
        let table: Table = text
            .parse()
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        merge(&mut root, table);
    }
    for o in overrides {
        set_path(&mut root, &o.path, o.value.clone())?;
    }
    drop_disabled_rules(&mut root);
    let config: PipelineConfig = Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::invalid(format!("configuration: {}", e.message())))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &PipelineConfig) -> CliResult<()> {
    let m = &config.pd.matching;
    if !(0.0..=1.0).contains(&m.threshold) || m.ambiguity_band < 0.0 {
        return Err(CliError::invalid("pd.matching.threshold must be in [0, 1] and ambiguity_band non-negative"));
    }
    if m.renewal_window_years.0 > m.renewal_window_years.1 {
        return Err(CliError::invalid("pd.matching.renewal_window_years must be [low, high]"));
    }
    let r = &config.pd.rules;
    if r.renewal_rule_years.0 > r.renewal_rule_years.1 {
        return Err(CliError::invalid("pd.rules.renewal_rule_years must be [first, last]"));
    }
    for (rule, threshold) in &config.scan.quality.0 {
        if !threshold.is_finite() || *threshold < 0.0 {
            return Err(CliError::invalid(format!("scan.quality.{rule} must be a non-negative number")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use curator_core::scanner::RuleId;

    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_without_file() {
        assert_eq!(load(None, &[]).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn file_merges_over_defaults() {
        let f = file("[scan.quality]\nmin-word-count = 80\nmin-alpha-fraction = \"off\"\n[gate]\nuser_agent = \"bot\"\n");
        let c = load(Some(f.path()), &[]).unwrap();
        assert_eq!(c.scan.quality.threshold(RuleId::MinWordCount), Some(80.0));
        assert_eq!(c.scan.quality.threshold(RuleId::MinAlphaFraction), None);
        assert_eq!(
            c.scan.quality.threshold(RuleId::MaxBulletLineFraction),
            Some(RuleId::MaxBulletLineFraction.default_threshold())
        );
        assert_eq!(c.gate.user_agent, "bot");
        assert_eq!(c.pd, PipelineConfig::default().pd);
    }

    #[test]
    fn flags_beat_file() {
        let f = file("[pd.matching]\nthreshold = 0.9\n[release]\nopen_access = true\n");
        let overrides = [
            parse_override("pd.matching.threshold=0.8").unwrap(),
            parse_override("release.dataset_name=books").unwrap(),
            parse_override("pd.matching.renewal_window_years=[20, 28]").unwrap(),
        ];
        let c = load(Some(f.path()), &overrides).unwrap();
        assert_eq!(c.pd.matching.threshold, 0.8);
        assert_eq!(c.pd.matching.renewal_window_years, (20, 28));
        assert_eq!(c.release.dataset_name, "books");
        assert!(c.release.open_access);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
        let unknown = [parse_override("scan.bogus=1").unwrap()];
        assert!(matches!(load(None, &unknown), Err(CliError::Invalid(_))));
        let f = file("[pd.matching\n");
        assert!(matches!(load(Some(f.path()), &[]), Err(CliError::Invalid(_))));
        let range = [parse_override("pd.matching.threshold=1.5").unwrap()];
        assert!(load(None, &range).is_err());
        let missing = load(Some(Path::new("/nonexistent/curator.toml")), &[]).unwrap_err();
        assert_eq!(missing.exit_code(), 2);
    }
}
