//! Closed-form downlink requirements for full-size root models.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BITS_PER_PARAM: u32 = 32;
/// 6G experienced rate.
pub const EXPERIENCED_RATE_BPS: f64 = 1e9;
/// Assumed 6G peak rate; configurable.
pub const DEFAULT_PEAK_RATE_BPS: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootModelSpec {
    pub name: String,
    pub params: f64,
    #[serde(default = "default_bits")]
    pub bits_per_param: u32,
}

fn default_bits() -> u32 {
    DEFAULT_BITS_PER_PARAM
}

impl RootModelSpec {
    pub fn new(name: &str, params: f64) -> Self {
        Self { name: name.into(), params, bits_per_param: DEFAULT_BITS_PER_PARAM }
    }

    pub fn bits(&self) -> f64 {
        self.params * f64::from(self.bits_per_param)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.params.is_finite() && self.params > 0.0) || self.bits_per_param == 0 {
            return Err(Error::InvalidArgument(format!("root model {} needs positive counts", self.name)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppClass {
    pub name: String,
    pub latency_s: f64,
}

impl AppClass {
    pub fn new(name: &str, latency_s: f64) -> Self {
        Self { name: name.into(), latency_s }
    }
}

pub fn resnet50() -> RootModelSpec {
    RootModelSpec::new("ResNet-50", 23e6)
}

pub fn vgg16() -> RootModelSpec {
    RootModelSpec::new("VGG-16", 135e6)
}

pub fn vit_large() -> RootModelSpec {
    RootModelSpec::new("ViT-Large", 307e6)
}

pub fn resnet18() -> RootModelSpec {
    RootModelSpec::new("ResNet-18", 11.69e6)
}

pub fn default_roots() -> Vec<RootModelSpec> {
    vec![resnet50(), vgg16(), vit_large()]
}

pub fn default_apps() -> Vec<AppClass> {
    vec![
        AppClass::new("image-recognition", 1.0),
        AppClass::new("video-call", 0.2),
        AppClass::new("tactile", 1e-3),
    ]
}

pub fn default_rates() -> Vec<f64> {
    vec![EXPERIENCED_RATE_BPS, DEFAULT_PEAK_RATE_BPS]
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Rate that delivers `bits` within `latency_s`.
pub fn required_rate(bits: f64, latency_s: f64) -> Result<f64> {
    positive("bits", bits)?;
    positive("latency_s", latency_s)?;
    Ok(bits / latency_s)
}

/// Share of `root_bits` deliverable at `rate_bps` within `latency_s`, capped at 1.
pub fn feasible_fraction(root_bits: f64, rate_bps: f64, latency_s: f64) -> Result<f64> {
    positive("root_bits", root_bits)?;
    positive("rate_bps", rate_bps)?;
    positive("latency_s", latency_s)?;
    Ok((rate_bps * latency_s / root_bits).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetRow {
    pub model: String,
    pub app: String,
    pub rate_bps: f64,
    pub required_bps: f64,
    pub feasible_fraction: f64,
    /// The full model fits the latency at this rate.
    pub feasible: bool,
}

/// One row per (root, app, rate), in that nesting order.
pub fn figure4_report(roots: &[RootModelSpec], apps: &[AppClass], rates: &[f64]) -> Result<Vec<LinkBudgetRow>> {
    if roots.is_empty() || apps.is_empty() || rates.is_empty() {
        return Err(Error::InvalidArgument("link budget needs roots, apps and rates".into()));
    }
    let mut rows = Vec::new();
    for root in roots {
        root.validate()?;
        for app in apps {
            let required_bps = required_rate(root.bits(), app.latency_s)?;
            for &rate_bps in rates {
                rows.push(LinkBudgetRow {
                    model: root.name.clone(),
                    app: app.name.clone(),
                    rate_bps,
                    required_bps,
                    feasible_fraction: feasible_fraction(root.bits(), rate_bps, app.latency_s)?,
                    feasible: required_bps <= rate_bps,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV `model,app,rate_bps,required_bps,feasible_fraction,verdict` after `# ` comment lines.
pub fn write_report_csv<W: Write>(rows: &[LinkBudgetRow], mut w: W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "app", "rate_bps", "required_bps", "feasible_fraction", "verdict"])?;
    for r in rows {
        out.write_record([
            r.model.clone(),
            r.app.clone(),
            r.rate_bps.to_string(),
            r.required_bps.to_string(),
            r.feasible_fraction.to_string(),
            if r.feasible { "feasible" } else { "infeasible" }.to_owned(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
