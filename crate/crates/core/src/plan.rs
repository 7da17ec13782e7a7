//! Compression plans and pruning masks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ModelGraph, TensorId};

pub const MIN_BITS: u8 = 2;
pub const MAX_BITS: u8 = 32;

pub fn check_bits(bits: u8) -> Result<()> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(Error::InvalidArgument(format!("bit width {bits} outside [{MIN_BITS}, {MAX_BITS}]")));
    }
    Ok(())
}

/// Where the root is cut. `Full` keeps every layer on the device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitDepth {
    At(usize),
    Full,
}

impl SplitDepth {
    /// Concrete depth for a root with `root_depth` dense layers.
    pub fn resolve(self, root_depth: usize) -> Result<usize> {
        match self {
            SplitDepth::Full => Ok(root_depth),
            SplitDepth::At(d) if d >= 1 && d <= root_depth => Ok(d),
            SplitDepth::At(d) => Err(Error::InvalidArgument(format!("split depth {d} outside 1..={root_depth}"))),
        }
    }

    /// `At(root_depth)` collapses to `Full`.
    pub fn normalize(self, root_depth: usize) -> Self {
        match self {
            SplitDepth::At(d) if d == root_depth => SplitDepth::Full,
            other => other,
        }
    }
}

impl fmt::Display for SplitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitDepth::Full => f.write_str("full"),
            SplitDepth::At(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for SplitDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(SplitDepth::Full);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .map(SplitDepth::At)
            .ok_or_else(|| Error::InvalidArgument(format!("bad split depth {s:?}")))
    }
}

impl serde::Serialize for SplitDepth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SplitDepth::At(d) => s.serialize_u64(*d as u64),
            SplitDepth::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for SplitDepth {
    /// A positive integer or `"full"`.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(v) => v.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-tensor bit widths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitWidths {
    Uniform(u8),
    PerTensor(BTreeMap<TensorId, u8>),
}

impl BitWidths {
    pub fn width(&self, id: TensorId) -> Result<u8> {
        match self {
            BitWidths::Uniform(b) => Ok(*b),
            BitWidths::PerTensor(map) => {
                map.get(&id).copied().ok_or_else(|| Error::InvalidArgument(format!("no bit width for tensor {id}")))
            }
        }
    }

    pub fn max_width(&self) -> u8 {
        match self {
            BitWidths::Uniform(b) => *b,
            BitWidths::PerTensor(map) => map.values().copied().max().unwrap_or(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BitWidths::Uniform(b) => check_bits(*b),
            BitWidths::PerTensor(map) => {
                if map.is_empty() {
                    return Err(Error::InvalidArgument("empty per-tensor width map".into()));
                }
                map.values().try_for_each(|&b| check_bits(b))
            }
        }
    }
}

impl fmt::Display for BitWidths {
    /// `8` for uniform widths, `L1.w:4;L1.b:8;...` per tensor.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitWidths::Uniform(b) => write!(f, "{b}"),
            BitWidths::PerTensor(map) => {
                let parts: Vec<String> = map.iter().map(|(id, b)| format!("{id}:{b}")).collect();
                f.write_str(&parts.join(";"))
            }
        }
    }
}

impl FromStr for BitWidths {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(b) = s.parse::<u8>() {
            return Ok(BitWidths::Uniform(b));
        }
        let mut map = BTreeMap::new();
        for part in s.split(';') {
            let (id, b) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("bad width entry {part:?}")))?;
            let b = b.parse::<u8>().map_err(|e| Error::InvalidArgument(format!("bad width {b:?}: {e}")))?;
            map.insert(id.parse()?, b);
        }
        Ok(BitWidths::PerTensor(map))
    }
}

/// One point of the sub-model space: split depth, retention ratio and bit widths.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionPlan {
    pub depth: SplitDepth,
    pub retention: f64,
    pub widths: BitWidths,
}

impl CompressionPlan {
    pub fn new(depth: SplitDepth, retention: f64, widths: BitWidths) -> Result<Self> {
        let plan = Self { depth, retention, widths };
        plan.validate()?;
        Ok(plan)
    }

    /// Whole root at 32 bits.
    pub fn full() -> Self {
        Self { depth: SplitDepth::Full, retention: 1.0, widths: BitWidths::Uniform(MAX_BITS) }
    }

    pub fn validate(&self) -> Result<()> {
        check_retention(self.retention)?;
        self.widths.validate()
    }

    /// Canonical identifier, e.g. `d=2|r=0.5|w=8`.
    pub fn id(&self) -> String {
        format!("d={}|r={}|w={}", self.depth, self.retention, self.widths)
    }

    /// Canonical plan order: depth, then retention, then widths.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.depth
            .cmp(&other.depth)
            .then(self.retention.total_cmp(&other.retention))
            .then_with(|| self.widths.cmp(&other.widths))
    }

    pub fn parse_id(id: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad plan id {id:?}"));
        let mut parts = id.splitn(3, '|');
        let mut field = |key: &str| -> Result<String> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(key))
                .map(str::to_owned)
                .ok_or_else(bad)
        };
        let depth = field("d=")?.parse()?;
        let retention = field("r=")?.parse::<f64>().map_err(|_| bad())?;
        let widths = field("w=")?.parse()?;
        CompressionPlan::new(depth, retention, widths)
    }
}

pub fn check_retention(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("retention {rho} outside (0, 1]")));
    }
    Ok(())
}

/// Number of parameters kept under retention `rho`: `floor(rho * total)`.
pub fn kept_count(rho: f64, total: usize) -> usize {
    (rho * total as f64).floor() as usize
}

/// Per-tensor keep flags in canonical flattened order.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneMask {
    keep: BTreeMap<TensorId, Vec<bool>>,
    retention: f64,
}

impl PruneMask {
    pub fn new(keep: BTreeMap<TensorId, Vec<bool>>, retention: f64) -> Self {
        Self { keep, retention }
    }

    /// Mask keeping every parameter of `model`.
    pub fn full(model: &ModelGraph) -> Self {
        let keep = model
            .tensor_ids()
            .into_iter()
            .map(|id| (id, vec![true; model.tensor(id).unwrap().len()]))
            .collect();
        Self { keep, retention: 1.0 }
    }

    /// Rebuilds a mask from alternating keep/drop run lengths over `shapes` (canonical order).
    pub fn from_runs(shapes: &[(TensorId, usize)], runs: &[usize], retention: f64) -> Result<Self> {
        let total: usize = shapes.iter().map(|s| s.1).sum();
        if runs.iter().sum::<usize>() != total {
            return Err(Error::Format(format!("mask runs cover {} of {total} parameters", runs.iter().sum::<usize>())));
        }
        let mut flat = Vec::with_capacity(total);
        for (i, &r) in runs.iter().enumerate() {
            flat.extend(std::iter::repeat_n(i % 2 == 0, r));
        }
        let mut keep = BTreeMap::new();
        let mut at = 0;
        for &(id, len) in shapes {
            keep.insert(id, flat[at..at + len].to_vec());
            at += len;
        }
        Ok(Self { keep, retention })
    }

    /// Alternating run lengths, starting with a (possibly empty) keep run.
    pub fn runs(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut cur = true;
        let mut len = 0usize;
        for &k in self.keep.values().flatten() {
            if k == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = k;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn retention(&self) -> f64 {
        self.retention
    }

    pub fn tensors(&self) -> &BTreeMap<TensorId, Vec<bool>> {
        &self.keep
    }

    pub fn get(&self, id: TensorId) -> Option<&[bool]> {
        self.keep.get(&id).map(Vec::as_slice)
    }

    pub fn total(&self) -> usize {
        self.keep.values().map(Vec::len).sum()
    }

    pub fn kept(&self) -> usize {
        self.keep.values().flatten().filter(|&&k| k).count()
    }

    pub fn kept_in(&self, id: TensorId) -> usize {
        self.keep.get(&id).map_or(0, |v| v.iter().filter(|&&k| k).count())
    }

    /// Retention actually achieved.
    pub fn achieved(&self) -> f64 {
        self.kept() as f64 / self.total().max(1) as f64
    }

    /// Whether every parameter kept here is also kept by `other`.
    pub fn is_subset_of(&self, other: &PruneMask) -> bool {
        self.keep.len() == other.keep.len()
            && self.keep.iter().zip(&other.keep).all(|((ia, a), (ib, b))| {
                ia == ib && a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| !x || y)
            })
    }

    /// Checks that the mask covers exactly the tensors of `model`.
    pub fn check_shape(&self, model: &ModelGraph) -> Result<()> {
        let ids = model.tensor_ids();
        if ids.len() != self.keep.len() {
            return Err(Error::Shape(format!("mask has {} tensors, model has {}", self.keep.len(), ids.len())));
        }
        for id in ids {
            let want = model.tensor(id).unwrap().len();
            match self.keep.get(&id) {
                Some(k) if k.len() == want => {}
                Some(k) => return Err(Error::Shape(format!("mask for {id} has {} entries, tensor has {want}", k.len()))),
                None => return Err(Error::Shape(format!("mask lacks tensor {id}"))),
            }
        }
        Ok(())
    }

    /// Restricts the mask to the tensors of `model` (e.g. a device part of the root it was built on).
    pub fn restrict_to(&self, model: &ModelGraph) -> Result<Self> {
        let mut keep = BTreeMap::new();
        for id in model.tensor_ids() {
            let k = self.keep.get(&id).ok_or_else(|| Error::Shape(format!("mask lacks tensor {id}")))?;
            keep.insert(id, k.clone());
        }
        let out = Self { keep, retention: self.retention };
        out.check_shape(model)?;
        Ok(out)
    }

    /// Zeroes every pruned coordinate of `model`.
    pub fn apply(&self, model: &ModelGraph) -> Result<ModelGraph> {
        self.check_shape(model)?;
        let mut out = model.clone();
        for (&id, keep) in &self.keep {
            for (v, &k) in out.tensor_mut(id).unwrap().iter_mut().zip(keep) {
                if !k {
                    *v = 0.0;
                }
            }
        }
        Ok(out)
    }
}
