//! Sub-model generation pipeline and the measured plan grid.
//!
//! A plan is realized as split → prune → fine-tune → quantize. The fine-tune
//! seed is derived from the plan's depth and retention, so a plan can be
//! regenerated on its own and yields the same container as inside a grid.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{self, Container};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{evaluate, ModelGraph, TrainHyper};
use crate::plan::{check_bits, BitWidths, CompressionPlan, PruneMask, SplitDepth};
use crate::rng;

use super::mixed::{allocate_bits, layer_sensitivity, tensor_costs};
use super::prune::{fine_tune_masked, magnitude_mask};
use super::split::split_at;

/// Bit-width dimension of a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum WidthChoice {
    Uniform(u8),
    /// Greedy allocation averaging `avg_bits` per kept parameter.
    Mixed { avg_bits: u8, choices: Vec<u8>, probe_bits: u8 },
}

pub const DEFAULT_MIXED_CHOICES: [u8; 3] = [2, 4, 8];
pub const DEFAULT_PROBE_BITS: u8 = 2;

impl WidthChoice {
    pub fn mixed(avg_bits: u8) -> Self {
        WidthChoice::Mixed { avg_bits, choices: DEFAULT_MIXED_CHOICES.to_vec(), probe_bits: DEFAULT_PROBE_BITS }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WidthChoice::Uniform(b) => check_bits(*b),
            WidthChoice::Mixed { avg_bits, choices, probe_bits } => {
                check_bits(*probe_bits)?;
                choices.iter().try_for_each(|&b| check_bits(b))?;
                if choices.first().is_none_or(|&lo| *avg_bits < lo) {
                    return Err(Error::InvalidArgument(format!("mixed average {avg_bits} below smallest choice")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for WidthChoice {
    /// `8`, or `mixed4` / `mixed4:2,4,8:2` (average, choices, probe bits).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthChoice::Uniform(b) => write!(f, "{b}"),
            WidthChoice::Mixed { avg_bits, choices, probe_bits } => {
                if choices[..] == DEFAULT_MIXED_CHOICES && *probe_bits == DEFAULT_PROBE_BITS {
                    write!(f, "mixed{avg_bits}")
                } else {
                    let c: Vec<String> = choices.iter().map(u8::to_string).collect();
                    write!(f, "mixed{avg_bits}:{}:{probe_bits}", c.join(","))
                }
            }
        }
    }
}

impl FromStr for WidthChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad width choice {s:?}"));
        if let Ok(b) = s.parse::<u8>() {
            let c = WidthChoice::Uniform(b);
            c.validate()?;
            return Ok(c);
        }
        let rest = s.strip_prefix("mixed").ok_or_else(bad)?;
        let mut parts = rest.split(':');
        let avg_bits = parts.next().and_then(|a| a.parse().ok()).ok_or_else(bad)?;
        let choice = match (parts.next(), parts.next(), parts.next()) {
            (None, _, _) => WidthChoice::mixed(avg_bits),
            (Some(c), Some(p), None) => WidthChoice::Mixed {
                avg_bits,
                choices: c.split(',').map(|v| v.parse().map_err(|_| bad())).collect::<Result<_>>()?,
                probe_bits: p.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        choice.validate()?;
        Ok(choice)
    }
}

impl Serialize for WidthChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WidthChoice::Uniform(b) => s.serialize_u8(*b),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for WidthChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u8),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(b) => b.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A generated sub-model and its encoding.
#[derive(Clone, Debug)]
pub struct SubModel {
    pub plan: CompressionPlan,
    pub mask: Option<PruneMask>,
    /// Fine-tuned model before quantization.
    pub model: ModelGraph,
    pub container: Container,
}

/// Realizes plans against one root.
#[derive(Clone, Debug)]
pub struct Generator<'a> {
    pub root: &'a ModelGraph,
    /// Fine-tuning and sensitivity probing.
    pub train: &'a Dataset,
    /// Accuracy measurement.
    pub test: &'a Dataset,
    pub finetune: TrainHyper,
}

impl<'a> Generator<'a> {
    pub fn new(root: &'a ModelGraph, train: &'a Dataset, test: &'a Dataset, finetune: TrainHyper) -> Self {
        Self { root, train, test, finetune }
    }

    /// Device part at `depth`, pruned to `rho` and fine-tuned. `rho = 1` skips both steps.
    pub fn pruned(&self, depth: SplitDepth, rho: f64) -> Result<(ModelGraph, Option<PruneMask>)> {
        let depth = depth.normalize(self.root.depth());
        let device = split_at(self.root, depth)?.device;
        if rho == 1.0 {
            return Ok((device, None));
        }
        let mask = magnitude_mask(&device, rho)?;
        let seed = rng::derive_seed(self.finetune.seed, &format!("{}/d={depth}/r={rho}", rng::tags::FINE_TUNE), 0);
        let (tuned, _) = fine_tune_masked(&device, &mask, self.train, &self.finetune.with_seed(seed))?;
        Ok((tuned, Some(mask)))
    }

    /// Concrete widths for `choice` on a (pruned) sub-model.
    pub fn resolve(&self, model: &ModelGraph, mask: Option<&PruneMask>, choice: &WidthChoice) -> Result<BitWidths> {
        match choice {
            WidthChoice::Uniform(b) => Ok(BitWidths::Uniform(*b)),
            WidthChoice::Mixed { avg_bits, choices, probe_bits } => {
                let sens = layer_sensitivity(model, self.train, *probe_bits)?;
                let costs = tensor_costs(model, mask, &sens);
                let kept: u64 = costs.iter().map(|c| c.params).sum();
                let widths = allocate_bits(&costs, kept * u64::from(*avg_bits), choices)?;
                Ok(BitWidths::PerTensor(widths))
            }
        }
    }

    pub fn generate(&self, plan: &CompressionPlan) -> Result<SubModel> {
        plan.validate()?;
        let mut plan = plan.clone();
        plan.depth = plan.depth.normalize(self.root.depth());
        let (model, mask) = self.pruned(plan.depth, plan.retention)?;
        let container = codec::encode(&model, &plan, mask.as_ref())?;
        Ok(SubModel { plan, mask, model, container })
    }

    /// Device-local test accuracy of a received container (decoded with clamping).
    pub fn accuracy(&self, container: &Container) -> Result<f64> {
        evaluate(&codec::decode(container, true)?.model, self.test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub plan: CompressionPlan,
    /// Container size in bits.
    pub bits: u64,
    pub accuracy: f64,
}

/// Measured accuracy of every plan generated from one root.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyProfile {
    pub root_id: String,
    pub dataset_id: String,
    pub seed: u64,
    pub rows: Vec<ProfileRow>,
}

pub const PROFILE_HEADER: [&str; 5] = ["depth", "retention", "widths", "bits", "accuracy"];

impl AccuracyProfile {
    /// CSV with a `# key=value` metadata line and any extra comment lines first.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "# root_id={} dataset_id={} seed={}", self.root_id, self.dataset_id, self.seed)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(PROFILE_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.plan.depth.to_string(),
                r.plan.retention.to_string(),
                r.plan.widths.to_string(),
                r.bits.to_string(),
                r.accuracy.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = (String::new(), String::new(), 0u64);
        let mut body = String::new();
        for line in r.lines() {
            let line = line?;
            if let Some(c) = line.strip_prefix('#') {
                for kv in c.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("root_id", v)) => meta.0 = v.to_owned(),
                        Some(("dataset_id", v)) => meta.1 = v.to_owned(),
                        Some(("seed", v)) => {
                            meta.2 = v.parse().map_err(|_| Error::Format(format!("bad seed {v:?}")))?
                        }
                        _ => {}
                    }
                }
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        if rdr.headers()?.iter().ne(PROFILE_HEADER) {
            return Err(Error::Format(format!("profile header must be {}", PROFILE_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let f = |e: &dyn fmt::Display| Error::Format(format!("profile row: {e}"));
            let plan = CompressionPlan::new(
                rec[0].parse()?,
                rec[1].parse().map_err(|e| f(&e))?,
                rec[2].parse()?,
            )?;
            rows.push(ProfileRow { plan, bits: rec[3].parse().map_err(|e| f(&e))?, accuracy: rec[4].parse().map_err(|e| f(&e))? });
        }
        Ok(Self { root_id: meta.0, dataset_id: meta.1, seed: meta.2, rows })
    }
}

/// Generates and measures every (depth, retention, width) combination, in that nesting order.
pub fn build_plan_grid(
    generator: &Generator<'_>,
    depths: &[SplitDepth],
    retentions: &[f64],
    widths: &[WidthChoice],
) -> Result<(Vec<ProfileRow>, Vec<SubModel>)> {
    let mut rows = Vec::new();
    let mut subs = Vec::new();
    for &depth in depths {
        let depth = depth.normalize(generator.root.depth());
        for &rho in retentions {
            let (model, mask) = generator.pruned(depth, rho)?;
            for choice in widths {
                let widths = generator.resolve(&model, mask.as_ref(), choice)?;
                let plan = CompressionPlan::new(depth, rho, widths)?;
                let container = codec::encode(&model, &plan, mask.as_ref())?;
                let accuracy = generator.accuracy(&container)?;
                rows.push(ProfileRow { plan: plan.clone(), bits: container.bit_len(), accuracy });
                subs.push(SubModel { plan, mask: mask.clone(), model: model.clone(), container });
            }
        }
    }
    Ok((rows, subs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_choice_text() {
        for s in ["8", "32", "mixed4", "mixed3:2,3,8:4"] {
            assert_eq!(s.parse::<WidthChoice>().unwrap().to_string(), s);
        }
        assert!("mixed1".parse::<WidthChoice>().is_err());
        assert!("40".parse::<WidthChoice>().is_err());
        assert!("wide".parse::<WidthChoice>().is_err());
    }

    #[test]
    fn profile_csv_round_trip() {
        let mut m = std::collections::BTreeMap::new();
        m.insert(crate::model::TensorId::Weight(1), 4u8);
        m.insert(crate::model::TensorId::Bias(1), 8u8);
        let p = AccuracyProfile {
            root_id: "abc".into(),
            dataset_id: "blobs".into(),
            seed: 7,
            rows: vec![
                ProfileRow { plan: CompressionPlan::full(), bits: 100, accuracy: 0.97 },
                ProfileRow {
                    plan: CompressionPlan::new(SplitDepth::At(1), 0.5, BitWidths::PerTensor(m)).unwrap(),
                    bits: 50,
                    accuracy: 1.0 / 3.0,
                },
            ],
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &["config_hash=x".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("depth,retention,widths,bits,accuracy\n"));
        assert_eq!(AccuracyProfile::read_csv(buf.as_slice()).unwrap(), p);
    }
}
