//! The ISMD container: a reliable topology section and an error-prone,
//! bit-packed parameter section.
//!
//! Byte layout (all integers big-endian):
//!
//! ```text
//! "ISMD" | version u16 | topo_len u32 | topology JSON | topo_crc u32
//!        | param_bits u64 | packed codes (ceil(param_bits / 8) bytes) | param_crc u32
//! ```
//!
//! The topology is canonical JSON (sorted keys, no whitespace). Parameter
//! codes are written tensor by tensor in canonical order, row-major within a
//! tensor, skipping pruned coordinates. Each code is a two's-complement
//! integer at its tensor's bit width, most significant bit first. Padding
//! bits in the last byte are zero.
//!
//! A delta container uses the same envelope. Its topology describes the
//! target sub-model plus the base plan and base mask, and its payload holds
//! only the codes the target keeps but the base does not.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::compress::quant::{self, codes_for, on_grid, qmax};
use crate::error::{Error, Result};
use crate::model::{ContainerMeta, DenseParams, LayerSpec, ModelGraph, QuantTag, TensorId, TensorMeta};
use crate::plan::{check_bits, CompressionPlan, PruneMask};

pub const MAGIC: &[u8; 4] = b"ISMD";
pub const VERSION: u16 = 1;
pub const FILE_EXTENSION: &str = "ismd";

const KIND_MODEL: &str = "model";
const KIND_DELTA: &str = "delta";

/// Encoded sub-model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Container {
    bytes: Vec<u8>,
}

/// Encoded differential parameter set between two nested plans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaContainer {
    bytes: Vec<u8>,
}

macro_rules! envelope_accessors {
    ($t:ty) => {
        impl $t {
            pub fn from_bytes(bytes: Vec<u8>) -> Self {
                Self { bytes }
            }

            pub fn as_bytes(&self) -> &[u8] {
                &self.bytes
            }

            pub fn into_bytes(self) -> Vec<u8> {
                self.bytes
            }

            /// Total size on the wire, in bits.
            pub fn bit_len(&self) -> u64 {
                self.bytes.len() as u64 * 8
            }

            /// Number of meaningful bits in the parameter section.
            pub fn param_bit_len(&self) -> Result<u64> {
                Ok(Envelope::parse(&self.bytes)?.param_bits)
            }

            pub fn topology_len(&self) -> Result<usize> {
                Ok(Envelope::parse(&self.bytes)?.topology.len())
            }

            /// Byte range of the packed parameter codes and their bit count.
            pub fn param_section(&self) -> Result<(std::ops::Range<usize>, u64)> {
                let env = Envelope::parse(&self.bytes)?;
                Ok((env.param_offset..env.param_offset + env.params.len(), env.param_bits))
            }

            pub(crate) fn bytes_mut(&mut self) -> &mut [u8] {
                &mut self.bytes
            }
        }
    };
}

envelope_accessors!(Container);
envelope_accessors!(DeltaContainer);

struct Envelope<'a> {
    topology: &'a [u8],
    topo_crc: u32,
    param_bits: u64,
    params: &'a [u8],
    param_offset: usize,
    param_crc: u32,
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = at.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| Error::Format("truncated container".into()))?;
    let out = &bytes[*at..end];
    *at = end;
    Ok(out)
}

impl<'a> Envelope<'a> {
    fn parse(bytes: &'a [u8]) -> Result<Self> {
        let mut at = 0;
        if take(bytes, &mut at, 4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_be_bytes(take(bytes, &mut at, 2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let topo_len = u32::from_be_bytes(take(bytes, &mut at, 4)?.try_into().unwrap()) as usize;
        let topology = take(bytes, &mut at, topo_len)?;
        let topo_crc = u32::from_be_bytes(take(bytes, &mut at, 4)?.try_into().unwrap());
        let param_bits = u64::from_be_bytes(take(bytes, &mut at, 8)?.try_into().unwrap());
        let param_len = usize::try_from(param_bits.div_ceil(8)).map_err(|_| Error::Format("parameter section too large".into()))?;
        let param_offset = at;
        let params = take(bytes, &mut at, param_len)?;
        let param_crc = u32::from_be_bytes(take(bytes, &mut at, 4)?.try_into().unwrap());
        if at != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - at)));
        }
        Ok(Self { topology, topo_crc, param_bits, params, param_offset, param_crc })
    }

    /// Topology JSON after the reliable-section CRC check.
    fn checked_topology(&self) -> Result<Topology> {
        let found = crc32fast::hash(self.topology);
        if found != self.topo_crc {
            return Err(Error::TopologyCorrupt { expected: self.topo_crc, found });
        }
        serde_json::from_slice(self.topology).map_err(|e| Error::Format(format!("topology JSON: {e}")))
    }

    fn param_crc_ok(&self) -> bool {
        crc32fast::hash(self.params) == self.param_crc
    }
}

fn assemble(topology: &Topology, payload: &BitWriter) -> Vec<u8> {
    let json = canonical_json(topology);
    let mut out = Vec::with_capacity(json.len() + payload.bytes.len() + 26);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_be_bytes());
    out.extend_from_slice(&(json.len() as u32).to_be_bytes());
    out.extend_from_slice(json.as_bytes());
    out.extend_from_slice(&crc32fast::hash(json.as_bytes()).to_be_bytes());
    out.extend_from_slice(&payload.bit_len.to_be_bytes());
    out.extend_from_slice(&payload.bytes);
    out.extend_from_slice(&crc32fast::hash(&payload.bytes).to_be_bytes());
    out
}

/// Sorted keys, no whitespace.
fn canonical_json<T: Serialize>(value: &T) -> String {
    let v: Value = serde_json::to_value(value).expect("topology is plain data");
    serde_json::to_string(&v).expect("value serializes")
}

/// `[id, bits, scale, min, max]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorEntry(TensorId, u8, f64, f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Topology {
    kind: String,
    layers: Vec<String>,
    num_classes: usize,
    exits: Vec<usize>,
    tensors: Vec<TensorEntry>,
    /// Packed keep/drop runs (see [`pack_runs`]); `null` when everything is kept.
    mask: Option<String>,
    plan: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_mask: Option<String>,
}

fn layer_text(l: &LayerSpec) -> String {
    match *l {
        LayerSpec::Dense { in_width, out_width } => format!("dense:{in_width}:{out_width}"),
        LayerSpec::Relu { width } => format!("relu:{width}"),
        LayerSpec::SoftmaxOutput { width } => format!("softmax:{width}"),
    }
}

fn parse_layer(s: &str) -> Result<LayerSpec> {
    let bad = || Error::Format(format!("bad layer {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).ok_or_else(bad);
    match (parts.first().copied(), parts.len()) {
        (Some("dense"), 3) => Ok(LayerSpec::dense(num(1)?, num(2)?)),
        (Some("relu"), 2) => Ok(LayerSpec::relu(num(1)?)),
        (Some("softmax"), 2) => Ok(LayerSpec::softmax(num(1)?)),
        _ => Err(bad()),
    }
}

/// MSB-first bit packer.
#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u8) {
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            let pos = self.bit_len % 8;
            if pos == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                *self.bytes.last_mut().unwrap() |= 0x80 >> pos;
            }
            self.bit_len += 1;
        }
    }

    fn push_code(&mut self, code: i64, width: u8) {
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        self.push(code as u64 & mask, width);
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    limit: u64,
}

impl BitReader<'_> {
    fn read(&mut self, width: u8) -> Result<u64> {
        if self.pos + u64::from(width) > self.limit {
            return Err(Error::Format("parameter section shorter than topology requires".into()));
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            v = (v << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(v)
    }

    fn read_code(&mut self, width: u8) -> Result<i64> {
        let raw = self.read(width)?;
        let shift = 64 - u32::from(width);
        Ok(((raw << shift) as i64) >> shift)
    }
}

/// Quantized view of one tensor ready to be packed.
struct PreparedTensor {
    id: TensorId,
    bits: u8,
    scale: f64,
    codes: Vec<i64>,
    keep: Option<Vec<bool>>,
    bounds: (f64, f64),
}

impl PreparedTensor {
    fn kept(&self, i: usize) -> bool {
        self.keep.as_ref().is_none_or(|k| k[i])
    }
}

fn prepare(model: &ModelGraph, plan: &CompressionPlan, mask: Option<&PruneMask>) -> Result<Vec<PreparedTensor>> {
    plan.validate()?;
    if let Some(m) = mask {
        m.check_shape(model)?;
    }
    let mut out = Vec::new();
    for id in model.tensor_ids() {
        let bits = plan.widths.width(id)?;
        check_bits(bits)?;
        let values = model.tensor(id).unwrap();
        let recorded = model
            .meta()
            .and_then(|m| m.tensors.get(&id))
            .map(|t| t.quant)
            .filter(|q| q.bits == bits && on_grid(values, bits, q.scale));
        let scale = match recorded {
            Some(q) => q.scale,
            None => quant::quantize_uniform(values, bits)?.scale,
        };
        let codes = codes_for(values, bits, scale);
        let keep = mask.and_then(|m| m.get(id)).map(<[bool]>::to_vec);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &c) in codes.iter().enumerate() {
            let v = if keep.as_ref().is_none_or(|k| k[i]) { c as f64 * scale } else { 0.0 };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        out.push(PreparedTensor { id, bits, scale, codes, keep, bounds: (lo, hi) });
    }
    Ok(out)
}

/// Alternating keep/drop run lengths, each stored as Elias-gamma of `run + 1`,
/// packed MSB-first and base64-encoded.
fn pack_runs(runs: &[usize]) -> String {
    let mut w = BitWriter::default();
    for &r in runs {
        let n = r as u64 + 1;
        let len = 64 - n.leading_zeros() as u8;
        w.push(0, len - 1);
        w.push(n, len);
    }
    STANDARD.encode(&w.bytes)
}

/// Inverse of [`pack_runs`]; reads runs until they cover `total` parameters.
fn unpack_runs(text: &str, total: usize) -> Result<Vec<usize>> {
    let bytes = STANDARD.decode(text).map_err(|e| Error::Format(format!("mask encoding: {e}")))?;
    let mut r = BitReader { bytes: &bytes, pos: 0, limit: bytes.len() as u64 * 8 };
    let mut runs = Vec::new();
    let mut covered = 0usize;
    while covered < total {
        let mut zeros = 0u8;
        while r.read(1)? == 0 {
            zeros += 1;
            if zeros > 63 {
                return Err(Error::Format("mask run too long".into()));
            }
        }
        let n = (1u64 << zeros) | r.read(zeros)?;
        let run = (n - 1) as usize;
        covered = covered.saturating_add(run);
        runs.push(run);
    }
    Ok(runs)
}

fn mask_runs(mask: Option<&PruneMask>) -> Option<String> {
    mask.filter(|m| m.kept() < m.total()).map(|m| pack_runs(&m.runs()))
}

fn topology_for(model: &ModelGraph, plan: &CompressionPlan, mask: Option<&PruneMask>, prepared: &[PreparedTensor]) -> Topology {
    Topology {
        kind: KIND_MODEL.into(),
        layers: model.layers().iter().map(layer_text).collect(),
        num_classes: model.num_classes(),
        exits: model.exits().keys().copied().collect(),
        tensors: prepared.iter().map(|t| TensorEntry(t.id, t.bits, t.scale, t.bounds.0, t.bounds.1)).collect(),
        mask: mask_runs(mask),
        plan: plan.id(),
        base_plan: None,
        base_mask: None,
    }
}

/// Encodes `model` under `plan`. Coordinates outside `mask` are not transmitted.
pub fn encode(model: &ModelGraph, plan: &CompressionPlan, mask: Option<&PruneMask>) -> Result<Container> {
    let prepared = prepare(model, plan, mask)?;
    let mut payload = BitWriter::default();
    for t in &prepared {
        for (i, &c) in t.codes.iter().enumerate() {
            if t.kept(i) {
                payload.push_code(c, t.bits);
            }
        }
    }
    let topology = topology_for(model, plan, mask, &prepared);
    Ok(Container { bytes: assemble(&topology, &payload) })
}

/// Differential parameter set taking a `base` download to `target`.
pub fn encode_delta(
    model: &ModelGraph,
    base: &CompressionPlan,
    base_mask: Option<&PruneMask>,
    target: &CompressionPlan,
    target_mask: Option<&PruneMask>,
) -> Result<DeltaContainer> {
    let prepared = prepare(model, target, target_mask)?;
    for id in model.tensor_ids() {
        if base.widths.width(id)? != target.widths.width(id)? {
            return Err(Error::NotNested(format!("bit width of {id} differs between plans")));
        }
    }
    let nested = match (base_mask, target_mask) {
        (_, None) => true,
        (None, Some(t)) => t.kept() == t.total(),
        (Some(b), Some(t)) => b.is_subset_of(t),
    };
    if !nested {
        return Err(Error::NotNested(format!("{} is not contained in {}", base.id(), target.id())));
    }
    if let Some(b) = base_mask {
        b.check_shape(model)?;
    }
    let mut payload = BitWriter::default();
    for t in &prepared {
        let base_keep = base_mask.and_then(|m| m.get(t.id));
        for (i, &c) in t.codes.iter().enumerate() {
            let in_base = base_keep.is_none_or(|k| k[i]);
            if t.kept(i) && !in_base {
                payload.push_code(c, t.bits);
            }
        }
    }
    let mut topology = topology_for(model, target, target_mask, &prepared);
    topology.kind = KIND_DELTA.into();
    topology.base_plan = Some(base.id());
    topology.base_mask = mask_runs(base_mask);
    Ok(DeltaContainer { bytes: assemble(&topology, &payload) })
}

/// Result of decoding a container.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub model: ModelGraph,
    pub plan: CompressionPlan,
    pub mask: Option<PruneMask>,
    /// False when the parameter section no longer matches its CRC (expected under bit errors).
    pub param_crc_ok: bool,
    /// Number of values pulled back inside their tensor bounds.
    pub clamped: usize,
}

/// Structure described by a topology, with empty parameters.
struct Skeleton {
    layers: Vec<LayerSpec>,
    dense: Vec<DenseParams>,
    exits: BTreeMap<usize, DenseParams>,
    shapes: Vec<(TensorId, usize)>,
}

fn skeleton(topo: &Topology) -> Result<Skeleton> {
    let layers: Vec<LayerSpec> = topo.layers.iter().map(|l| parse_layer(l)).collect::<Result<_>>()?;
    let dense: Vec<DenseParams> = layers
        .iter()
        .filter_map(|l| match *l {
            LayerSpec::Dense { in_width, out_width } => Some(DenseParams::zeros(in_width, out_width)),
            _ => None,
        })
        .collect();
    let mut exits = BTreeMap::new();
    for &d in &topo.exits {
        let width = d
            .checked_sub(1)
            .and_then(|i| dense.get(i))
            .map(DenseParams::out_width)
            .ok_or_else(|| Error::Format(format!("exit depth {d} outside backbone")))?;
        exits.insert(d, DenseParams::zeros(width, topo.num_classes));
    }
    let mut shapes = Vec::new();
    for (k, p) in dense.iter().enumerate() {
        shapes.push((TensorId::Weight(k + 1), p.weights().len()));
        shapes.push((TensorId::Bias(k + 1), p.bias().len()));
    }
    for (&d, p) in &exits {
        shapes.push((TensorId::ExitWeight(d), p.weights().len()));
        shapes.push((TensorId::ExitBias(d), p.bias().len()));
    }
    if shapes.len() != topo.tensors.len() || shapes.iter().zip(&topo.tensors).any(|(s, t)| s.0 != t.0) {
        return Err(Error::Format("tensor table does not match layers".into()));
    }
    for t in &topo.tensors {
        check_bits(t.1).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(Skeleton { layers, dense, exits, shapes })
}

fn runs_to_mask(shapes: &[(TensorId, usize)], packed: &Option<String>, retention: f64) -> Result<Option<PruneMask>> {
    let total = shapes.iter().map(|s| s.1).sum();
    packed
        .as_deref()
        .map(|p| PruneMask::from_runs(shapes, &unpack_runs(p, total)?, retention))
        .transpose()
}

/// Builds the model from per-tensor codes and applies optional clamping.
fn materialize(
    sk: Skeleton,
    topo: &Topology,
    codes: Vec<Vec<i64>>,
    keep: Option<&PruneMask>,
    sanitize: bool,
) -> Result<(ModelGraph, usize)> {
    let Skeleton { layers, dense, exits, .. } = sk;
    let mut model = ModelGraph::from_parts(layers, dense, exits)?;
    let mut clamped = 0;
    let mut meta = BTreeMap::new();
    for (entry, codes) in topo.tensors.iter().zip(codes) {
        let TensorEntry(id, bits, scale, lo, hi) = *entry;
        let flags = keep.and_then(|m| m.get(id));
        let values = model.tensor_mut(id).unwrap();
        for (i, (v, c)) in values.iter_mut().zip(codes).enumerate() {
            if flags.is_none_or(|k| k[i]) {
                let mut x = c as f64 * scale;
                if sanitize && !(x >= lo && x <= hi) {
                    x = if x.is_nan() || x < lo { lo } else { hi };
                    clamped += 1;
                }
                *v = x;
            }
        }
        meta.insert(id, TensorMeta { bounds: (lo, hi), quant: QuantTag { bits, scale } });
    }
    model.set_meta(ContainerMeta { plan_id: topo.plan.clone(), tensors: meta });
    Ok((model, clamped))
}

/// Decodes a container. With `sanitize`, values outside their tensor's recorded bounds are clamped.
pub fn decode(container: &Container, sanitize: bool) -> Result<Decoded> {
    let env = Envelope::parse(&container.bytes)?;
    let topo = env.checked_topology()?;
    if topo.kind != KIND_MODEL {
        return Err(Error::Format(format!("expected a model container, found {:?}", topo.kind)));
    }
    let plan = CompressionPlan::parse_id(&topo.plan).map_err(|e| Error::Format(e.to_string()))?;
    let sk = skeleton(&topo)?;
    let mask = runs_to_mask(&sk.shapes, &topo.mask, plan.retention)?;
    let expected: u64 = sk
        .shapes
        .iter()
        .zip(&topo.tensors)
        .map(|(&(id, len), t)| u64::from(t.1) * mask.as_ref().map_or(len, |m| m.kept_in(id)) as u64)
        .sum();
    if expected != env.param_bits {
        return Err(Error::Format(format!("parameter section holds {} bits, topology needs {expected}", env.param_bits)));
    }
    let mut reader = BitReader { bytes: env.params, pos: 0, limit: env.param_bits };
    let mut codes = Vec::with_capacity(sk.shapes.len());
    for (&(id, len), t) in sk.shapes.iter().zip(&topo.tensors) {
        let flags = mask.as_ref().and_then(|m| m.get(id));
        let mut tc = vec![0i64; len];
        for (i, c) in tc.iter_mut().enumerate() {
            if flags.is_none_or(|k| k[i]) {
                *c = reader.read_code(t.1)?;
            }
        }
        codes.push(tc);
    }
    let (model, clamped) = materialize(sk, &topo, codes, mask.as_ref(), sanitize)?;
    Ok(Decoded { model, plan, mask, param_crc_ok: env.param_crc_ok(), clamped })
}

/// Merges a delta into the model decoded from its base container.
pub fn apply_delta(base: &ModelGraph, delta: &DeltaContainer, sanitize: bool) -> Result<Decoded> {
    let env = Envelope::parse(&delta.bytes)?;
    let topo = env.checked_topology()?;
    if topo.kind != KIND_DELTA {
        return Err(Error::Format(format!("expected a delta container, found {:?}", topo.kind)));
    }
    let expected = topo.base_plan.clone().unwrap_or_default();
    let found = base.meta().map_or_else(|| "<not decoded>".to_owned(), |m| m.plan_id.clone());
    if expected != found {
        return Err(Error::BaseMismatch { expected, found });
    }
    let plan = CompressionPlan::parse_id(&topo.plan).map_err(|e| Error::Format(e.to_string()))?;
    let base_plan = CompressionPlan::parse_id(&expected).map_err(|e| Error::Format(e.to_string()))?;
    let sk = skeleton(&topo)?;
    if sk.layers != base.layers() || topo.exits != base.exits().keys().copied().collect::<Vec<_>>() {
        return Err(Error::Shape("delta describes a different structure than the base model".into()));
    }
    let mask = runs_to_mask(&sk.shapes, &topo.mask, plan.retention)?;
    let base_mask = runs_to_mask(&sk.shapes, &topo.base_mask, base_plan.retention)?;
    let base_meta = &base.meta().unwrap().tensors;
    let mut reader = BitReader { bytes: env.params, pos: 0, limit: env.param_bits };
    let mut codes = Vec::with_capacity(sk.shapes.len());
    for (&(id, len), t) in sk.shapes.iter().zip(&topo.tensors) {
        let (bits, scale) = (t.1, t.2);
        match base_meta.get(&id) {
            Some(m) if m.quant.bits == bits && m.quant.scale == scale => {}
            _ => return Err(Error::NotNested(format!("quantizer of {id} differs between base and target"))),
        }
        let base_codes = codes_for(base.tensor(id).unwrap(), bits, scale);
        let in_target = mask.as_ref().and_then(|m| m.get(id));
        let in_base = base_mask.as_ref().and_then(|m| m.get(id));
        let mut tc = vec![0i64; len];
        for (i, c) in tc.iter_mut().enumerate() {
            if !in_target.is_none_or(|k| k[i]) {
                continue;
            }
            *c = if in_base.is_none_or(|k| k[i]) { base_codes[i] } else { reader.read_code(bits)? };
        }
        codes.push(tc);
    }
    if reader.pos != env.param_bits {
        return Err(Error::Format(format!("delta carries {} bits, merge consumed {}", env.param_bits, reader.pos)));
    }
    let (model, clamped) = materialize(sk, &topo, codes, mask.as_ref(), sanitize)?;
    Ok(Decoded { model, plan, mask, param_crc_ok: env.param_crc_ok(), clamped })
}

/// Debug rendering: envelope fields, parsed topology and per-tensor codes.
pub fn dump(bytes: &[u8]) -> Result<Value> {
    let env = Envelope::parse(bytes)?;
    let topo: Value = serde_json::from_slice(env.topology).map_err(|e| Error::Format(format!("topology JSON: {e}")))?;
    let mut out = serde_json::Map::new();
    out.insert("magic".into(), Value::from("ISMD"));
    out.insert("version".into(), Value::from(VERSION));
    out.insert("topology_bytes".into(), Value::from(env.topology.len()));
    out.insert("topology_crc_ok".into(), Value::from(crc32fast::hash(env.topology) == env.topo_crc));
    out.insert("param_bits".into(), Value::from(env.param_bits));
    out.insert("param_crc_ok".into(), Value::from(env.param_crc_ok()));
    if let Ok(parsed) = serde_json::from_value::<Topology>(topo.clone()) {
        if parsed.kind == KIND_MODEL {
            if let Ok(dec) = decode(&Container { bytes: bytes.to_vec() }, false) {
                let mut codes = serde_json::Map::new();
                for TensorEntry(id, bits, scale, _, _) in &parsed.tensors {
                    let values = dec.model.tensor(*id).unwrap();
                    let c: Vec<i64> = if *scale == 0.0 {
                        vec![0; values.len()]
                    } else {
                        values.iter().map(|v| (v / scale).round() as i64).map(|c| c.clamp(-qmax(*bits) - 1, qmax(*bits))).collect()
                    };
                    codes.insert(id.to_string(), Value::from(c));
                }
                out.insert("codes".into(), Value::Object(codes));
            }
        }
    }
    out.insert("topology".into(), topo);
    Ok(Value::Object(out))
}
