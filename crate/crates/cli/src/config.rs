//! Scenario configuration (TOML) and its validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use ismd_core::channel::{ChannelProfile, Tier};
use ismd_core::compress::grid::WidthChoice;
use ismd_core::data::DataKind;
use ismd_core::library::{place, Dsi, ModelClass};
use ismd_core::linkbudget::{DEFAULT_PEAK_RATE_BPS, EXPERIENCED_RATE_BPS};
use ismd_core::model::TrainHyper;
use ismd_core::plan::{check_retention, SplitDepth, MAX_BITS, MIN_BITS};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DataKind,
    pub n: usize,
    pub num_classes: usize,
    pub noise: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl HyperConfig {
    pub fn with_seed(&self, seed: u64) -> TrainHyper {
        TrainHyper { epochs: self.epochs, batch_size: self.batch_size, learning_rate: self.learning_rate, seed }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub depths: Vec<SplitDepth>,
    pub retentions: Vec<f64>,
    pub widths: Vec<WidthChoice>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub rate_bps: f64,
    pub ber: f64,
    /// Defaults to the tier's propagation delay.
    pub prop_delay_s: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardConfig {
    pub id: String,
    pub task: String,
    pub class: ModelClass,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressiveConfig {
    pub depth: SplitDepth,
    pub widths: u8,
    /// Ascending; the first is downloaded in full, the rest as deltas.
    pub retentions: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub bers: Vec<f64>,
    /// Payload width for the depth and parameter techniques.
    pub payload_bits: u8,
    /// Size points of the bit technique.
    pub bit_widths: Vec<u8>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetConfig {
    #[serde(default = "default_peak")]
    pub peak_rate_bps: f64,
    #[serde(default = "default_experienced")]
    pub experienced_rate_bps: f64,
}

fn default_peak() -> f64 {
    DEFAULT_PEAK_RATE_BPS
}

fn default_experienced() -> f64 {
    EXPERIENCED_RATE_BPS
}

impl Default for LinkBudgetConfig {
    fn default() -> Self {
        Self { peak_rate_bps: DEFAULT_PEAK_RATE_BPS, experienced_rate_bps: EXPERIENCED_RATE_BPS }
    }
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub output: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: HyperConfig,
    pub exits: HyperConfig,
    pub finetune: HyperConfig,
    pub grid: GridConfig,
    pub channels: BTreeMap<Tier, ChannelConfig>,
    pub card: CardConfig,
    pub dsi: Dsi,
    pub progressive: Option<ProgressiveConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub linkbudget: LinkBudgetConfig,
}

/// A parsed config plus the SHA-256 of its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub hash: String,
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        config.validate()?;
        Ok(Self { config, hash: hash_text(text) })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn err<T>(path: &str, msg: impl std::fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError(format!("{path}: {msg}")))
}

fn check_hyper(path: &str, h: &HyperConfig) -> Result<(), ConfigError> {
    if h.epochs == 0 {
        return err(&format!("{path}.epochs"), "must be positive");
    }
    h.with_seed(0).validate().or_else(|e| err(path, e))
}

fn check_ber(path: &str, ber: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&ber) {
        return err(path, format!("ber {ber} outside [0, 1]"));
    }
    Ok(())
}

fn check_bits(path: &str, b: u8) -> Result<(), ConfigError> {
    if !(MIN_BITS..=MAX_BITS).contains(&b) {
        return err(path, format!("bit width {b} outside [{MIN_BITS}, {MAX_BITS}]"));
    }
    Ok(())
}

impl ScenarioConfig {
    /// Number of dense layers in the root.
    pub fn root_depth(&self) -> usize {
        self.model.hidden.len() + 1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return err("trials", "must be positive");
        }
        let d = &self.dataset;
        if d.num_classes < 2 {
            return err("dataset.num_classes", "need at least 2 classes");
        }
        if d.n < d.num_classes {
            return err("dataset.n", format!("{} samples cannot cover {} classes", d.n, d.num_classes));
        }
        if !(d.noise.is_finite() && d.noise >= 0.0) {
            return err("dataset.noise", "must be non-negative");
        }
        if self.model.hidden.is_empty() {
            return err("model.hidden", "need at least one hidden layer");
        }
        if let Some(i) = self.model.hidden.iter().position(|&w| w == 0) {
            return err(&format!("model.hidden[{i}]"), "width must be positive");
        }
        check_hyper("train", &self.train)?;
        check_hyper("exits", &self.exits)?;
        check_hyper("finetune", &self.finetune)?;
        let depth = self.root_depth();
        let g = &self.grid;
        for (field, empty) in [("depths", g.depths.is_empty()), ("retentions", g.retentions.is_empty()), ("widths", g.widths.is_empty())] {
            if empty {
                return err(&format!("grid.{field}"), "must not be empty");
            }
        }
        for (i, sd) in g.depths.iter().enumerate() {
            sd.resolve(depth).or_else(|e| err(&format!("grid.depths[{i}]"), e))?;
        }
        for (i, &r) in g.retentions.iter().enumerate() {
            check_retention(r).or_else(|e| err(&format!("grid.retentions[{i}]"), e))?;
        }
        for (i, w) in g.widths.iter().enumerate() {
            w.validate().or_else(|e| err(&format!("grid.widths[{i}]"), e))?;
        }
        for (tier, c) in &self.channels {
            let path = format!("channels.{tier}");
            self.channel(*tier, 0).validate().or_else(|e| err(&path, e))?;
            check_ber(&format!("{path}.ber"), c.ber)?;
        }
        let tier = place(self.card.class);
        if !self.channels.contains_key(&tier) {
            return err("channels", format!("card class {} is served from the {tier} tier, which has no channel", self.card.class));
        }
        if self.card.id.is_empty() || self.card.id.contains(['/', '\\']) {
            return err("card.id", "must be a non-empty file-name-safe string");
        }
        self.dsi.validate().or_else(|e| err("dsi", e))?;
        if let Some(p) = &self.progressive {
            p.depth.resolve(depth).or_else(|e| err("progressive.depth", e))?;
            check_bits("progressive.widths", p.widths)?;
            if p.retentions.is_empty() {
                return err("progressive.retentions", "must not be empty");
            }
            for (i, &r) in p.retentions.iter().enumerate() {
                check_retention(r).or_else(|e| err(&format!("progressive.retentions[{i}]"), e))?;
            }
            if p.retentions.windows(2).any(|w| w[0] >= w[1]) {
                return err("progressive.retentions", "must be strictly increasing");
            }
        }
        if let Some(s) = &self.sweep {
            if s.bers.is_empty() {
                return err("sweep.bers", "must not be empty");
            }
            for (i, &b) in s.bers.iter().enumerate() {
                check_ber(&format!("sweep.bers[{i}]"), b)?;
            }
            check_bits("sweep.payload_bits", s.payload_bits)?;
            for (i, &b) in s.bit_widths.iter().enumerate() {
                check_bits(&format!("sweep.bit_widths[{i}]"), b)?;
            }
        }
        let lb = &self.linkbudget;
        for (path, v) in [("linkbudget.peak_rate_bps", lb.peak_rate_bps), ("linkbudget.experienced_rate_bps", lb.experienced_rate_bps)] {
            if !(v.is_finite() && v > 0.0) {
                return err(path, "must be positive");
            }
        }
        Ok(())
    }

    /// Channel of `tier` with the given flip seed.
    pub fn channel(&self, tier: Tier, seed: u64) -> ChannelProfile {
        let c = &self.channels[&tier];
        ChannelProfile { rate_bps: c.rate_bps, ber: c.ber, prop_delay_s: c.prop_delay_s.unwrap_or(tier.default_prop_delay_s()), seed, tier }
    }
}
