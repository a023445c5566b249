//! TOML configuration: `[section]` headers and `key = value` lines.
//!
//! ```text
//! # comment
//! [bias]
//! optical_power_uW = 6
//! [run]
//! scenario = "trace"
//! ```
//!
//! Values are numbers or strings. A key may also be written fully qualified
//! (`bias.optical_power_uW = 6`) outside any section.
//! Configuration is applied on top of a named preset; unknown keys, unit
//! mismatches and out-of-range values are rejected with their line number.

pub mod schema;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ParamBundle;
use crate::presets;
use schema::{resolve, Resolved, Slot, ENTRIES};
use toml::de::{DeTable, DeValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigErrorKind {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error(
        "unit mismatch for `{key}`: expected a unit compatible with `{expected}`, got `{got}`"
    )]
    UnitMismatch {
        key: String,
        expected: String,
        got: String,
    },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("key `{0}` set twice")]
    Duplicate(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("inconsistent parameters: {0}")]
    Inconsistent(String),
}

/// A configuration error and where it came from.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    /// e.g. `config line 4`, `--set #1`, `preset paper-1K line 9`.
    pub origin: String,
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.origin.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}: {}", self.origin, self.kind)
        }
    }
}

impl ConfigError {
    fn new(origin: impl Into<String>, line: Option<usize>, kind: ConfigErrorKind) -> Self {
        ConfigError {
            origin: origin.into(),
            line,
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Loadline,
    Powersweep,
    Vpisweep,
    Trace,
    Histogram,
    Budget,
    FitVpi,
    FitFp,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Loadline,
        Scenario::Powersweep,
        Scenario::Vpisweep,
        Scenario::Trace,
        Scenario::Histogram,
        Scenario::Budget,
        Scenario::FitVpi,
        Scenario::FitFp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Loadline => "loadline",
            Scenario::Powersweep => "powersweep",
            Scenario::Vpisweep => "vpisweep",
            Scenario::Trace => "trace",
            Scenario::Histogram => "histogram",
            Scenario::Budget => "budget",
            Scenario::FitVpi => "fit-vpi",
            Scenario::FitFp => "fit-fp",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ConfigErrorKind::UnknownScenario(s.to_string()))
    }
}

/// A validated scenario request.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset_name: String,
    pub params: ParamBundle,
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub output: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(String),
    Text(String),
}

/// One `key = value` assignment with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    value: Value,
    pub line: Option<usize>,
}

/// 1-based line of a byte offset.
fn line_at(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&c| c == b'\n')
        .count()
        + 1
}

fn flatten(
    table: &DeTable<'_>,
    prefix: &str,
    text: &str,
    origin: &str,
    out: &mut Vec<Assignment>,
) -> Result<(), ConfigError> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.get_ref().to_string()
        } else {
            format!("{prefix}.{}", k.get_ref())
        };
        let line = line_at(text, k.span().start);
        let value = match v.get_ref() {
            DeValue::Table(t) => {
                flatten(t, &key, text, origin, out)?;
                continue;
            }
            DeValue::String(s) => Value::Text(s.to_string()),
            DeValue::Float(f) => Value::Number(f.as_str().to_string()),
            DeValue::Integer(i) => match i64::from_str_radix(i.as_str(), i.radix()) {
                Ok(n) => Value::Number(n.to_string()),
                Err(_) => Value::Number(i.as_str().to_string()),
            },
            _ => {
                return Err(ConfigError::new(
                    format!("{origin} line {line}"),
                    Some(line),
                    ConfigErrorKind::Malformed(format!("`{key}` must be a number or a string")),
                ))
            }
        };
        out.push(Assignment {
            key,
            value,
            line: Some(line),
        });
    }
    Ok(())
}

/// Splits TOML config text into assignments with fully qualified keys, in
/// source order.
pub fn parse_assignments(text: &str, origin: &str) -> Result<Vec<Assignment>, ConfigError> {
    let doc = DeTable::parse(text).map_err(|e| {
        let line = e.span().map(|s| line_at(text, s.start));
        let at = match line {
            Some(l) => format!("{origin} line {l}"),
            None => origin.to_string(),
        };
        ConfigError::new(
            at,
            line,
            ConfigErrorKind::Malformed(e.message().to_string()),
        )
    })?;
    let mut out = Vec::new();
    flatten(doc.get_ref(), "", text, origin, &mut out)?;
    out.sort_by_key(|a| a.line);
    Ok(out)
}

/// Parses a `--set key=value` override; `value` is a TOML number or string.
pub fn parse_override(text: &str, index: usize) -> Result<Assignment, ConfigError> {
    let origin = format!("--set #{}", index + 1);
    let malformed =
        || ConfigError::new(&origin, None, ConfigErrorKind::Malformed(text.to_string()));
    let mut list = parse_assignments(text, &origin).map_err(|e| ConfigError {
        origin: origin.clone(),
        line: None,
        ..e
    })?;
    match (list.pop(), list.is_empty()) {
        (Some(a), true) if a.key.contains('.') => Ok(Assignment { line: None, ..a }),
        _ => Err(malformed()),
    }
}

/// Applies one assignment to the bundle, checking unit and range.
pub fn apply(bundle: &mut ParamBundle, a: &Assignment) -> Result<(), ConfigErrorKind> {
    let (entry, factor) = match resolve(&a.key) {
        Resolved::Found(e, f) => (e, f),
        Resolved::UnitMismatch { key, expected, got } => {
            return Err(ConfigErrorKind::UnitMismatch {
                key,
                expected: expected.to_string(),
                got,
            })
        }
        Resolved::Unknown => return Err(ConfigErrorKind::UnknownKey(a.key.clone())),
    };
    let invalid = |reason: String| ConfigErrorKind::InvalidValue {
        key: a.key.clone(),
        reason,
    };
    match (entry.slot, &a.value) {
        (
            Slot::Real {
                constraint, field, ..
            },
            Value::Number(n),
        ) => {
            let v: f64 = n
                .parse()
                .map_err(|_| invalid(format!("`{n}` is not a number")))?;
            constraint.check(v).map_err(|r| invalid(r.to_string()))?;
            *field(bundle) = schema::convert(v, factor.0, factor.1);
        }
        (Slot::Count { min, field }, Value::Number(n)) => {
            let v: u64 = n
                .parse()
                .map_err(|_| invalid(format!("`{n}` is not a non-negative integer")))?;
            if v < min {
                return Err(invalid(format!("must be >= {min}")));
            }
            *field(bundle) = v;
        }
        (Slot::Text { field }, Value::Text(s)) => *field(bundle) = s.clone(),
        (Slot::Text { field }, Value::Number(s)) => *field(bundle) = s.clone(),
        (_, Value::Text(s)) => return Err(invalid(format!("expected a number, got `{s}`"))),
    }
    Ok(())
}

/// Applies assignments in order, rejecting keys set twice within the list.
pub fn apply_all(
    bundle: &mut ParamBundle,
    list: &[Assignment],
    origin: &str,
) -> Result<(), ConfigError> {
    let mut seen: Vec<*const schema::Entry> = Vec::new();
    for (i, a) in list.iter().enumerate() {
        let where_ = match a.line {
            Some(l) => format!("{origin} line {l}"),
            None => format!("{origin} #{}", i + 1),
        };
        if let Resolved::Found(e, _) = resolve(&a.key) {
            let id = e as *const schema::Entry;
            if seen.contains(&id) {
                return Err(ConfigError::new(
                    where_,
                    a.line,
                    ConfigErrorKind::Duplicate(a.key.clone()),
                ));
            }
            seen.push(id);
        }
        apply(bundle, a).map_err(|k| ConfigError::new(where_, a.line, k))?;
    }
    Ok(())
}

/// Preset name requested inside the config text (`run.preset`), if any.
fn preset_in(list: &[Assignment]) -> Option<(String, Option<usize>)> {
    list.iter()
        .find(|a| a.key == "run.preset")
        .map(|a| match &a.value {
            Value::Text(s) | Value::Number(s) => (s.clone(), a.line),
        })
}

/// Builds a validated scenario config: preset defaults, then the config
/// text, then `--set` overrides. `preset` overrides a `run.preset` line.
pub fn parse_config(
    text: &str,
    preset: Option<&str>,
    overrides: &[String],
) -> Result<ScenarioConfig, ConfigError> {
    let mut list = parse_assignments(text, "config")?;
    let in_text = preset_in(&list);
    list.retain(|a| a.key != "run.preset");
    let (preset_name, preset_line) = match (preset, in_text) {
        (Some(p), _) => (p.to_string(), None),
        (None, Some((p, line))) => (p, line),
        (None, None) => (presets::DEFAULT_PRESET.to_string(), None),
    };
    let mut bundle = presets::load(&preset_name).ok_or_else(|| {
        ConfigError::new(
            "config",
            preset_line,
            ConfigErrorKind::UnknownPreset(preset_name.clone()),
        )
    })?;
    apply_all(&mut bundle, &list, "config")?;
    let sets: Vec<Assignment> = overrides
        .iter()
        .enumerate()
        .map(|(i, s)| parse_override(s, i))
        .collect::<Result<_, _>>()?;
    for (i, a) in sets.iter().enumerate() {
        apply(&mut bundle, a)
            .map_err(|k| ConfigError::new(format!("--set #{}", i + 1), None, k))?;
    }
    finish(preset_name, bundle)
}

fn finish(preset_name: String, params: ParamBundle) -> Result<ScenarioConfig, ConfigError> {
    params
        .validate()
        .map_err(|e| ConfigError::new("", None, ConfigErrorKind::Inconsistent(e.to_string())))?;
    let scenario = if params.run.scenario.is_empty() {
        None
    } else {
        Some(
            params
                .run
                .scenario
                .parse::<Scenario>()
                .map_err(|k| ConfigError::new("", None, k))?,
        )
    };
    Ok(ScenarioConfig {
        preset_name,
        scenario,
        seed: params.run.seed,
        output: PathBuf::from(if params.run.output.is_empty() {
            "."
        } else {
            &params.run.output
        }),
        threads: params.run.threads as usize,
        params,
    })
}

/// Renders every key of the bundle in the config format, one section per
/// group, values in canonical units.
pub fn render(bundle: &ParamBundle) -> String {
    let mut b = bundle.clone();
    let mut out = String::new();
    let mut section = "";
    for e in ENTRIES {
        if e.section != section {
            if !section.is_empty() {
                out.push('\n');
            }
            section = e.section;
            out.push_str(&format!("[{section}]\n"));
        }
        let name = e.key()[section.len() + 1..].to_string();
        let value = match e.slot {
            Slot::Real {
                canonical,
                stored,
                field,
                ..
            } => {
                let v = *field(&mut b);
                let v = match (canonical, stored) {
                    (Some(c), Some(s)) => {
                        schema::convert(v, schema::unit(s).unwrap().1, schema::unit(c).unwrap().1)
                    }
                    _ => v,
                };
                format!("{v:e}")
            }
            Slot::Count { field, .. } => field(&mut b).to_string(),
            Slot::Text { field } => toml::Value::String(field(&mut b).clone()).to_string(),
        };
        out.push_str(&format!("{name} = {value}\n"));
    }
    out
}
