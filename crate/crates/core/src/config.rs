//! Scenario configuration: a flat, sectioned key/value file (TOML syntax)
//! whose unspecified keys default to the 500-node, 400 m x 400 m reference
//! setup. Unknown keys and out-of-range values are rejected with the key
//! name and, when it comes from a file, the line.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::energy::{tx_energy, rx_energy, RadioParams};
use crate::field::FieldConfig;
use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: IoMessage },
    #[error("{origin}:{line}: {message}")]
    Syntax { origin: String, line: usize, message: String },
    #[error("{origin}{}: key `{key}`: {reason}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    OutOfRange { origin: String, key: String, line: Option<usize>, reason: String },
    #[error("override `{0}`: expected key=value")]
    MalformedOverride(String),
    #[error("override `{key}`: unknown key")]
    UnknownOverrideKey { key: String },
}

/// `std::io::Error` is not `Clone`; keep its rendered message.
#[derive(Debug, Clone, PartialEq)]
pub struct IoMessage(pub String);

impl fmt::Display for IoMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for IoMessage {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Proposed,
    Leach,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Proposed => "proposed",
            Protocol::Leach => "leach",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Protocol::Proposed),
            "leach" => Ok(Protocol::Leach),
            other => Err(format!("unknown protocol \"{other}\" (expected \"proposed\" or \"leach\")")),
        }
    }
}

impl Serialize for Protocol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Protocol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub width: f64,
    pub height: f64,
    /// Sample cell side in meters; 0 selects width / 200.
    pub grid_resolution: f64,
    /// Base station position; defaults to the field center.
    pub bs_x: Option<f64>,
    pub bs_y: Option<f64>,
    pub node_count: usize,
    pub sensing_range: f64,
    /// Radio range divided by sensing range.
    pub coverage_ratio: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            width: 400.0,
            height: 400.0,
            grid_resolution: 0.0,
            bs_x: None,
            bs_y: None,
            node_count: 500,
            sensing_range: 60.0,
            coverage_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    /// J/bit.
    pub e_elect: f64,
    /// J/bit/m^rho.
    pub e_amp: f64,
    pub rho: u32,
    pub header_bits: u32,
    pub data_packet_bits: u32,
    /// Initial battery per sensor, J.
    pub initial_energy: f64,
    /// Fraction of packets a link delivers; scales the delivery energy.
    pub delivery_ratio: f64,
    /// Per-node per-round energy cap, J; 0 selects the default cap.
    pub p_maximum: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioParams::default();
        Self {
            e_elect: r.e_elect,
            e_amp: r.e_amp,
            rho: r.rho,
            header_bits: r.header_bits,
            data_packet_bits: r.data_packet_bits,
            initial_energy: 5.0,
            delivery_ratio: 1.0,
            p_maximum: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub name: Protocol,
    pub rounds_max: u64,
    /// Competitive learning rate.
    pub mu: f64,
    /// Per-round multiplicative decay of `mu`.
    pub mu_decay: f64,
    /// Forwarding-table pruning factor.
    pub alpha: f64,
    /// LEACH desired head fraction.
    pub leach_p: f64,
    /// Fixed clusters of the proposed protocol; 0 selects the number of
    /// sensing disks needed to tile the field area.
    pub cluster_count: usize,
    /// Heads merge their members' readings into one upstream packet.
    pub aggregate: bool,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            name: Protocol::Proposed,
            rounds_max: 10_000,
            mu: 0.1,
            mu_decay: 1.0,
            alpha: 2.0,
            leach_p: 0.05,
            cluster_count: 0,
            aggregate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedSection {
    pub placement: u64,
    pub rng: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { placement: 1, rng: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Dotted config key varied by `sweep`, e.g. `field.coverage_ratio`.
    pub knob: String,
    pub values: Vec<f64>,
    /// Each seed sets both the placement and the round RNG seed.
    pub seeds: Vec<u64>,
    pub protocols: Vec<Protocol>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            knob: "field.coverage_ratio".to_string(),
            values: vec![1.0, 1.5, 2.0, 2.5],
            seeds: (1..=5).collect(),
            protocols: vec![Protocol::Proposed, Protocol::Leach],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub field: FieldSection,
    pub radio: RadioSection,
    pub protocol: ProtocolSection,
    pub seeds: SeedSection,
    pub sweep: SweepSection,
}

impl ScenarioConfig {
    /// Small profile: 100 nodes on 200 m x 200 m, sensing 30 m, radio 60 m, 0.5 J.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.field.width = 200.0;
        c.field.height = 200.0;
        c.field.node_count = 100;
        c.field.sensing_range = 30.0;
        c.field.coverage_ratio = 2.0;
        c.radio.initial_energy = 0.5;
        c
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol.name = protocol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.placement = seed;
        self.seeds.rng = seed;
        self
    }

    pub fn field_config(&self) -> FieldConfig {
        let f = &self.field;
        let grid_resolution = if f.grid_resolution > 0.0 { f.grid_resolution } else { f.width / 200.0 };
        FieldConfig {
            width: f.width,
            height: f.height,
            grid_resolution,
            bs_position: Point::new(f.bs_x.unwrap_or(f.width / 2.0), f.bs_y.unwrap_or(f.height / 2.0)),
        }
    }

    pub fn radio_params(&self) -> RadioParams {
        let r = &self.radio;
        RadioParams {
            e_elect: r.e_elect,
            e_amp: r.e_amp,
            rho: r.rho,
            header_bits: r.header_bits,
            data_packet_bits: r.data_packet_bits,
        }
    }

    pub fn radio_range(&self) -> f64 {
        self.field.sensing_range * self.field.coverage_ratio
    }

    pub fn cluster_count(&self) -> usize {
        if self.protocol.cluster_count > 0 {
            self.protocol.cluster_count
        } else {
            let disk = std::f64::consts::PI * self.field.sensing_range * self.field.sensing_range;
            ((self.field.width * self.field.height / disk).round() as usize).clamp(1, self.field.node_count)
        }
    }

    /// Per-node per-round energy cap: one data transmission across the field
    /// diagonal plus one data reception from every other node.
    pub fn p_maximum(&self) -> f64 {
        if self.radio.p_maximum > 0.0 {
            return self.radio.p_maximum;
        }
        let radio = self.radio_params();
        let bytes = radio.data_packet_bytes();
        tx_energy(&radio, self.field_config().diagonal(), bytes)
            + self.field.node_count.saturating_sub(1) as f64 * rx_energy(&radio, bytes)
    }

    /// Round at which alive counts are compared: 1500 rounds per 5 J of
    /// initial energy.
    pub fn checkpoint_round(&self) -> u64 {
        (1500.0 * self.radio.initial_energy / 5.0).round() as u64
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |key: &str, reason: &str| Err((key.to_string(), reason.to_string()));
        let f = &self.field;
        if !(f.width > 0.0) {
            return err("field.width", "must be > 0");
        }
        if !(f.height > 0.0) {
            return err("field.height", "must be > 0");
        }
        if f.grid_resolution < 0.0 || f.grid_resolution > f.width.min(f.height) / 10.0 {
            return err("field.grid_resolution", "must be 0 (auto) or in (0, min(width, height)/10]");
        }
        if let Some(x) = f.bs_x {
            if !(0.0..=f.width).contains(&x) {
                return err("field.bs_x", "base station must lie inside the field");
            }
        }
        if let Some(y) = f.bs_y {
            if !(0.0..=f.height).contains(&y) {
                return err("field.bs_y", "base station must lie inside the field");
            }
        }
        if f.node_count == 0 {
            return err("field.node_count", "must be >= 1");
        }
        if !(f.sensing_range > 0.0) {
            return err("field.sensing_range", "must be > 0");
        }
        if !(f.coverage_ratio >= 1.0) {
            return err("field.coverage_ratio", "must be >= 1");
        }
        let r = &self.radio;
        if !(r.e_elect > 0.0) {
            return err("radio.e_elect", "must be > 0");
        }
        if !(r.e_amp >= 0.0) {
            return err("radio.e_amp", "must be >= 0");
        }
        if r.rho != 2 && r.rho != 4 {
            return err("radio.rho", "must be 2 or 4");
        }
        if r.header_bits == 0 {
            return err("radio.header_bits", "must be > 0");
        }
        if r.data_packet_bits == 0 || r.data_packet_bits % 8 != 0 {
            return err("radio.data_packet_bits", "must be a positive multiple of 8");
        }
        if !(r.initial_energy > 0.0) {
            return err("radio.initial_energy", "must be > 0");
        }
        if !(r.delivery_ratio > 0.0 && r.delivery_ratio <= 1.0) {
            return err("radio.delivery_ratio", "must be in (0, 1]");
        }
        if !(r.p_maximum >= 0.0) {
            return err("radio.p_maximum", "must be >= 0 (0 selects the default)");
        }
        let p = &self.protocol;
        if !(0.0..=1.0).contains(&p.mu) {
            return err("protocol.mu", "must be in [0, 1]");
        }
        if !(p.mu_decay > 0.0 && p.mu_decay <= 1.0) {
            return err("protocol.mu_decay", "must be in (0, 1]");
        }
        if !(p.alpha >= 1.0) {
            return err("protocol.alpha", "must be >= 1");
        }
        if !(p.leach_p > 0.0 && p.leach_p < 1.0) {
            return err("protocol.leach_p", "must be in (0, 1)");
        }
        let s = &self.sweep;
        if s.knob.split_once('.').is_none() {
            return err("sweep.knob", "must be a dotted key such as field.coverage_ratio");
        }
        Ok(())
    }

    /// Returns a copy with the dotted `key` set to `value` (TOML syntax; bare
    /// words are taken as strings).
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(self).expect("config serializes");
        set_dotted(&mut table, key, value)?;
        finish(table, "--set", None)
    }
}

/// Reads and validates a config file; `overrides` are `key=value` strings.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: origin.clone(), source: IoMessage(e.to_string()) })?;
    parse_config_str(&text, &origin, overrides)
}

pub fn parse_config_str(text: &str, origin: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| syntax_error(&e, text, origin))?;
    // unknown keys and type errors are reported against the file, before overrides
    if let Err(e) = toml::from_str::<ScenarioConfig>(text) {
        return Err(syntax_error(&e, text, origin));
    }
    for o in overrides {
        let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::MalformedOverride(o.clone()))?;
        set_dotted(&mut table, key.trim(), value.trim())?;
    }
    finish(table, origin, Some(text))
}

fn finish(table: toml::Table, origin: &str, text: Option<&str>) -> Result<ScenarioConfig, ConfigError> {
    let config = ScenarioConfig::deserialize(table).map_err(|e| ConfigError::OutOfRange {
        origin: origin.to_string(),
        key: "--set".to_string(),
        line: None,
        reason: e.message().to_string(),
    })?;
    config.validate().map_err(|(key, reason)| ConfigError::OutOfRange {
        origin: origin.to_string(),
        line: text.and_then(|t| locate_key(t, &key)),
        key,
        reason,
    })?;
    Ok(config)
}

fn set_dotted(table: &mut toml::Table, key: &str, value: &str) -> Result<(), ConfigError> {
    let (section, name) = key.split_once('.').ok_or_else(|| ConfigError::UnknownOverrideKey { key: key.to_string() })?;
    let defaults = toml::Table::try_from(ScenarioConfig::default()).expect("config serializes");
    let known_section = defaults.get(section).and_then(|s| s.as_table());
    let known = match known_section {
        Some(s) => s.contains_key(name) || matches!((section, name), ("field", "bs_x") | ("field", "bs_y")),
        None => false,
    };
    if !known {
        return Err(ConfigError::UnknownOverrideKey { key: key.to_string() });
    }
    let parsed = parse_value(value);
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(section_table) = entry else {
        return Err(ConfigError::UnknownOverrideKey { key: key.to_string() });
    };
    section_table.insert(name.to_string(), coerce_like(parsed, defaults[section].get(name)));
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Integers given for float keys (e.g. `field.width=300`) become floats, and
/// integral floats given for integer keys become integers.
fn coerce_like(value: toml::Value, template: Option<&toml::Value>) -> toml::Value {
    match (value, template) {
        (toml::Value::Integer(i), Some(toml::Value::Float(_))) => toml::Value::Float(i as f64),
        (toml::Value::Integer(i), None) => toml::Value::Float(i as f64),
        (toml::Value::Float(f), Some(toml::Value::Integer(_))) if f.fract() == 0.0 => toml::Value::Integer(f as i64),
        (v, _) => v,
    }
}

fn syntax_error(e: &toml::de::Error, text: &str, origin: &str) -> ConfigError {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
    ConfigError::Syntax { origin: origin.to_string(), line, message: e.message().to_string() }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `section.key` in a sectioned file.
fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section && t.split('=').next().is_some_and(|k| k.trim() == key) {
            return Some(i + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let c = parse_config_str("", "empty", &[]).unwrap();
        assert_eq!(c.field.node_count, 500);
        assert_eq!((c.field.width, c.field.height), (400.0, 400.0));
        assert_eq!(c.field.sensing_range, 60.0);
        assert_eq!(c.radio_range(), 60.0);
        assert_eq!(c.radio.initial_energy, 5.0);
        assert_eq!(c.radio.data_packet_bits, 4096);
        assert_eq!(c.radio.header_bits, 20);
        assert_eq!(c.radio.e_elect, 70e-9);
        assert_eq!(c.radio.e_amp, 120e-12);
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn rho_override_from_file_and_flag() {
        let c = parse_config_str("[radio]\nrho = 4\n", "f", &[]).unwrap();
        assert_eq!(c.radio.rho, 4);
        let c = parse_config_str("", "f", &["radio.rho = 4".to_string()]).unwrap();
        assert_eq!(c.radio.rho, 4);
        let c = parse_config_str("", "f", &["protocol.name=leach".to_string(), "field.width=300".to_string()]).unwrap();
        assert_eq!(c.protocol.name, Protocol::Leach);
        assert_eq!(c.field.width, 300.0);
    }

    #[test]
    fn peach_is_rejected() {
        let err = parse_config_str("[protocol]\nname = \"peach\"\n", "f", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown protocol"), "{msg}");
        assert!(msg.contains(":2:"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_errors_with_line() {
        let err = parse_config_str("[field]\nwidth = 10.0\nwidht = 3.0\n", "f.ini", &[]).unwrap_err();
        match err {
            ConfigError::Syntax { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("widht"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_config_str("", "f", &["radio.nope=1".to_string()]).unwrap_err();
        assert_eq!(err, ConfigError::UnknownOverrideKey { key: "radio.nope".into() });
    }

    #[test]
    fn malformed_syntax_reports_line() {
        let err = parse_config_str("[field]\nwidth = = 1\n", "f", &[]).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn out_of_range_values_name_key_and_line() {
        let err = parse_config_str("[radio]\n\nrho = 3\n", "f", &[]).unwrap_err();
        assert_eq!(
            err,
            ConfigError::OutOfRange { origin: "f".into(), key: "radio.rho".into(), line: Some(3), reason: "must be 2 or 4".into() }
        );
        assert!(parse_config_str("[field]\ncoverage_ratio = 0.5\n", "f", &[]).is_err());
        assert!(parse_config_str("[field]\nnode_count = 0\n", "f", &[]).is_err());
    }

    #[test]
    fn missing_file() {
        let err = parse_config(Path::new("/nonexistent/cfg.toml"), &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/cfg.toml"));
    }

    #[test]
    fn with_override_roundtrips_through_the_schema() {
        let desk = ScenarioConfig::desk();
        let c = desk.with_override("field.coverage_ratio", "1.5").unwrap();
        assert_eq!(c.field.coverage_ratio, 1.5);
        assert_eq!(c.radio_range(), 45.0);
        assert!(desk.with_override("field.bogus", "1").is_err());
    }

    #[test]
    fn derived_quantities() {
        let desk = ScenarioConfig::desk();
        assert_eq!(desk.checkpoint_round(), 150);
        assert_eq!(desk.cluster_count(), 14);
        assert_eq!(ScenarioConfig::default().cluster_count(), 14);
        assert_eq!(desk.field_config().bs_position, Point::new(100.0, 100.0));
        assert_eq!(desk.field_config().grid_resolution, 1.0);
        assert!(desk.field_config().validate().is_ok());
    }
}
