//! Dense feed-forward networks with optional early-exit heads.
//!
//! A [`ModelGraph`] is either *complete* (its layer list ends in a softmax
//! output) or a *prefix*: the first few dense layers of a complete network
//! whose deepest boundary carries an exit head. Prefixes are what a device
//! receives after a depth-level split; their classifier is that exit head.
//!
//! Depths are 1-based dense-layer boundaries. The feature at depth `d` is the
//! output of the `d`-th dense layer, after its ReLU when one follows it.
//!
//! Tensors are addressed by [`TensorId`] and always enumerated in canonical
//! order: backbone layers by depth (weight, then bias), then exit heads by
//! depth. Weight matrices are row-major `(out, in)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{self, tags};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Dense { in_width: usize, out_width: usize },
    Relu { width: usize },
    SoftmaxOutput { width: usize },
}

impl LayerSpec {
    pub fn dense(in_width: usize, out_width: usize) -> Self {
        LayerSpec::Dense { in_width, out_width }
    }

    pub fn relu(width: usize) -> Self {
        LayerSpec::Relu { width }
    }

    pub fn softmax(width: usize) -> Self {
        LayerSpec::SoftmaxOutput { width }
    }

    pub fn in_width(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_width, .. } => in_width,
            LayerSpec::Relu { width } | LayerSpec::SoftmaxOutput { width } => width,
        }
    }

    pub fn out_width(&self) -> usize {
        match *self {
            LayerSpec::Dense { out_width, .. } => out_width,
            LayerSpec::Relu { width } | LayerSpec::SoftmaxOutput { width } => width,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. })
    }
}

/// Builds the layer list `dense(in→h1), relu, ..., dense(hk→classes), softmax`.
pub fn mlp_spec(input: usize, hidden: &[usize], classes: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut width = input;
    for &h in hidden {
        layers.push(LayerSpec::dense(width, h));
        layers.push(LayerSpec::relu(h));
        width = h;
    }
    layers.push(LayerSpec::dense(width, classes));
    layers.push(LayerSpec::softmax(classes));
    layers
}

/// Checks layer-list rules. `complete` demands a trailing softmax output.
pub(crate) fn validate_layers(layers: &[LayerSpec], complete: bool) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Structure("empty layer list".into()));
    }
    if !layers[0].is_dense() {
        return Err(Error::Structure("first layer must be dense".into()));
    }
    for (i, l) in layers.iter().enumerate() {
        if l.in_width() == 0 || l.out_width() == 0 {
            return Err(Error::Structure(format!("layer {} has zero width", i + 1)));
        }
        if matches!(l, LayerSpec::SoftmaxOutput { .. }) && i + 1 != layers.len() {
            return Err(Error::Structure(format!("softmax output at layer {} is not last", i + 1)));
        }
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].out_width() != pair[1].in_width() {
            return Err(Error::Structure(format!("width mismatch at layer {}→{}", i + 1, i + 2)));
        }
    }
    let ends_softmax = matches!(layers.last(), Some(LayerSpec::SoftmaxOutput { .. }));
    if complete && !ends_softmax {
        return Err(Error::Structure("network must end in softmax-output".into()));
    }
    if !complete && ends_softmax {
        return Err(Error::Structure("prefix must not end in softmax-output".into()));
    }
    Ok(())
}

/// Weight matrix and bias vector of one dense layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    in_width: usize,
    out_width: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(in_width: usize, out_width: usize) -> Self {
        Self { in_width, out_width, weights: vec![0.0; in_width * out_width], bias: vec![0.0; out_width] }
    }

    /// Uniform(−1, 1) / sqrt(in_width) for every weight and bias, weights first.
    pub(crate) fn init<R: Rng>(in_width: usize, out_width: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (in_width as f64).sqrt();
        let weights = (0..in_width * out_width).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let bias = (0..out_width).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        Self { in_width, out_width, weights, bias }
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_width {
            let row = &self.weights[o * self.in_width..(o + 1) * self.in_width];
            let mut acc = self.bias[o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            out.push(acc);
        }
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Address of one parameter tensor. Depths are 1-based.
///
/// Ordering is canonical order: backbone before exits, then depth, then weight before bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TensorId {
    Weight(usize),
    Bias(usize),
    ExitWeight(usize),
    ExitBias(usize),
}

impl TensorId {
    pub fn is_bias(&self) -> bool {
        matches!(self, TensorId::Bias(_) | TensorId::ExitBias(_))
    }

    pub fn depth(&self) -> usize {
        match *self {
            TensorId::Weight(d) | TensorId::Bias(d) | TensorId::ExitWeight(d) | TensorId::ExitBias(d) => d,
        }
    }
}

impl TensorId {
    fn sort_key(&self) -> (u8, usize, u8) {
        match *self {
            TensorId::Weight(d) => (0, d, 0),
            TensorId::Bias(d) => (0, d, 1),
            TensorId::ExitWeight(d) => (1, d, 0),
            TensorId::ExitBias(d) => (1, d, 1),
        }
    }
}

impl Ord for TensorId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for TensorId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorId::Weight(d) => write!(f, "L{d}.w"),
            TensorId::Bias(d) => write!(f, "L{d}.b"),
            TensorId::ExitWeight(d) => write!(f, "X{d}.w"),
            TensorId::ExitBias(d) => write!(f, "X{d}.b"),
        }
    }
}

impl FromStr for TensorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad tensor id {s:?}"));
        let (head, kind) = s.split_once('.').ok_or_else(bad)?;
        let depth: usize = head.get(1..).and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        match (head.as_bytes().first(), kind) {
            (Some(b'L'), "w") => Ok(TensorId::Weight(depth)),
            (Some(b'L'), "b") => Ok(TensorId::Bias(depth)),
            (Some(b'X'), "w") => Ok(TensorId::ExitWeight(depth)),
            (Some(b'X'), "b") => Ok(TensorId::ExitBias(depth)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for TensorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TensorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Quantizer parameters a decoded tensor was reconstructed with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantTag {
    pub bits: u8,
    pub scale: f64,
}

/// Per-tensor metadata carried by models that came out of a container.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorMeta {
    /// (min, max) of the transmitted values.
    pub bounds: (f64, f64),
    pub quant: QuantTag,
}

/// What a decoded model remembers about the container it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainerMeta {
    pub plan_id: String,
    pub tensors: BTreeMap<TensorId, TensorMeta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelGraph {
    layers: Vec<LayerSpec>,
    dense: Vec<DenseParams>,
    exits: BTreeMap<usize, DenseParams>,
    num_classes: usize,
    meta: Option<ContainerMeta>,
}

/// Output of [`ModelGraph::forward`].
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Output of every entry of the layer list, one row per sample.
    pub activations: Vec<Matrix>,
    /// Class probabilities of the model's classifier.
    pub probs: Matrix,
}

/// Builds a complete network with seeded uniform initialization.
pub fn build_model(layers: &[LayerSpec], seed: u64) -> Result<ModelGraph> {
    validate_layers(layers, true)?;
    let mut rng = rng::stream(seed, tags::INIT, 0);
    let dense = layers
        .iter()
        .filter_map(|l| match *l {
            LayerSpec::Dense { in_width, out_width } => Some(DenseParams::init(in_width, out_width, &mut rng)),
            _ => None,
        })
        .collect();
    let num_classes = layers.last().map_or(0, LayerSpec::out_width);
    Ok(ModelGraph { layers: layers.to_vec(), dense, exits: BTreeMap::new(), num_classes, meta: None })
}

impl ModelGraph {
    /// Assembles a graph from parts, checking every structural invariant.
    pub fn from_parts(
        layers: Vec<LayerSpec>,
        dense: Vec<DenseParams>,
        exits: BTreeMap<usize, DenseParams>,
    ) -> Result<Self> {
        let complete = matches!(layers.last(), Some(LayerSpec::SoftmaxOutput { .. }));
        validate_layers(&layers, complete)?;
        let specs: Vec<(usize, usize)> = layers
            .iter()
            .filter_map(|l| match *l {
                LayerSpec::Dense { in_width, out_width } => Some((in_width, out_width)),
                _ => None,
            })
            .collect();
        if specs.len() != dense.len() {
            return Err(Error::Structure(format!(
                "{} dense layers but {} parameter blocks",
                specs.len(),
                dense.len()
            )));
        }
        for (k, (&(i, o), p)) in specs.iter().zip(&dense).enumerate() {
            check_block(p, i, o, &format!("L{}", k + 1))?;
        }
        let num_classes = if complete {
            layers.last().map_or(0, LayerSpec::out_width)
        } else {
            let deepest = dense.len();
            let head = exits.get(&deepest).ok_or_else(|| {
                Error::Structure(format!("prefix of depth {deepest} has no exit head at its last boundary"))
            })?;
            head.out_width
        };
        for (&d, head) in &exits {
            if d == 0 || d > dense.len() {
                return Err(Error::Structure(format!("exit depth {d} is not a dense boundary")));
            }
            check_block(head, dense[d - 1].out_width, num_classes, &format!("X{d}"))?;
        }
        let model = Self { layers, dense, exits, num_classes, meta: None };
        if model.tensor_ids().iter().any(|&id| model.tensor(id).unwrap().iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn dense(&self) -> &[DenseParams] {
        &self.dense
    }

    pub fn exits(&self) -> &BTreeMap<usize, DenseParams> {
        &self.exits
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width()
    }

    /// Number of dense layers in the backbone (or prefix).
    pub fn depth(&self) -> usize {
        self.dense.len()
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.layers.last(), Some(LayerSpec::SoftmaxOutput { .. }))
    }

    pub fn param_count(&self) -> usize {
        self.dense.iter().chain(self.exits.values()).map(DenseParams::param_count).sum()
    }

    pub fn meta(&self) -> Option<&ContainerMeta> {
        self.meta.as_ref()
    }

    pub(crate) fn set_meta(&mut self, meta: ContainerMeta) {
        self.meta = Some(meta);
    }

    pub fn clear_meta(&mut self) {
        self.meta = None;
    }

    pub fn tensor_ids(&self) -> Vec<TensorId> {
        let mut ids = Vec::with_capacity(2 * (self.dense.len() + self.exits.len()));
        for d in 1..=self.dense.len() {
            ids.push(TensorId::Weight(d));
            ids.push(TensorId::Bias(d));
        }
        for &d in self.exits.keys() {
            ids.push(TensorId::ExitWeight(d));
            ids.push(TensorId::ExitBias(d));
        }
        ids
    }

    pub fn tensor(&self, id: TensorId) -> Option<&[f64]> {
        match id {
            TensorId::Weight(d) => self.dense.get(d.checked_sub(1)?).map(|p| &p.weights[..]),
            TensorId::Bias(d) => self.dense.get(d.checked_sub(1)?).map(|p| &p.bias[..]),
            TensorId::ExitWeight(d) => self.exits.get(&d).map(|p| &p.weights[..]),
            TensorId::ExitBias(d) => self.exits.get(&d).map(|p| &p.bias[..]),
        }
    }

    /// Mutable access to a tensor. Drops container metadata, which no longer describes the values.
    pub fn tensor_mut(&mut self, id: TensorId) -> Option<&mut [f64]> {
        self.meta = None;
        match id {
            TensorId::Weight(d) => self.dense.get_mut(d.checked_sub(1)?).map(|p| &mut p.weights[..]),
            TensorId::Bias(d) => self.dense.get_mut(d.checked_sub(1)?).map(|p| &mut p.bias[..]),
            TensorId::ExitWeight(d) => self.exits.get_mut(&d).map(|p| &mut p.weights[..]),
            TensorId::ExitBias(d) => self.exits.get_mut(&d).map(|p| &mut p.bias[..]),
        }
    }

    /// All parameters in canonical order, as little-endian bytes.
    pub fn param_bytes(&self) -> Vec<u8> {
        self.tensor_ids()
            .into_iter()
            .flat_map(|id| self.tensor(id).unwrap().to_vec())
            .flat_map(f64::to_le_bytes)
            .collect()
    }

    /// Backbone parameters only (excludes exit heads), as little-endian bytes.
    pub fn backbone_bytes(&self) -> Vec<u8> {
        self.dense
            .iter()
            .flat_map(|p| p.weights.iter().chain(&p.bias))
            .flat_map(|v| v.to_le_bytes())
            .collect()
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth == 0 || depth > self.dense.len() {
            return Err(Error::InvalidArgument(format!(
                "depth {depth} is not a dense boundary (1..={})",
                self.dense.len()
            )));
        }
        Ok(())
    }

    /// Index into the layer list of the feature at `depth`.
    pub(crate) fn feature_layer(&self, depth: usize) -> usize {
        let mut seen = 0;
        for (i, l) in self.layers.iter().enumerate() {
            if l.is_dense() {
                seen += 1;
                if seen == depth {
                    return match self.layers.get(i + 1) {
                        Some(LayerSpec::Relu { .. }) => i + 1,
                        _ => i,
                    };
                }
            }
        }
        unreachable!("depth checked by caller")
    }

    pub fn feature_width(&self, depth: usize) -> Result<usize> {
        self.check_depth(depth)?;
        Ok(self.dense[depth - 1].out_width)
    }

    /// Runs `layers[..upto]` on one sample, recording each layer's output.
    fn run_layers(&self, x: &[f64], upto: usize, mut record: impl FnMut(usize, &[f64])) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let mut k = 0;
        for (i, layer) in self.layers[..upto].iter().enumerate() {
            match layer {
                LayerSpec::Dense { .. } => {
                    self.dense[k].apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                    k += 1;
                }
                LayerSpec::Relu { .. } => relu_in_place(&mut cur),
                LayerSpec::SoftmaxOutput { .. } => cur = softmax(&cur),
            }
            record(i, &cur);
        }
        cur
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_width() {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_width()
            )));
        }
        Ok(())
    }

    /// Per-layer activations and the classifier's class probabilities.
    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        self.check_batch(batch)?;
        let n = batch.rows();
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut probs = Vec::with_capacity(n * self.num_classes);
        for r in 0..n {
            let out = self.run_layers(batch.row(r), self.layers.len(), |i, a| acts[i].extend_from_slice(a));
            if self.is_complete() {
                probs.extend(out);
            } else {
                probs.extend(self.head_probs(self.depth(), &out));
            }
        }
        let activations = acts
            .into_iter()
            .zip(&self.layers)
            .map(|(data, l)| Matrix::new(n, l.out_width(), data))
            .collect::<Result<_>>()?;
        Ok(ForwardPass { activations, probs: Matrix::new(n, self.num_classes, probs)? })
    }

    /// Features at `depth` for one sample.
    pub fn features_at(&self, x: &[f64], depth: usize) -> Result<Vec<f64>> {
        self.check_depth(depth)?;
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!("sample has {} features, model expects {}", x.len(), self.input_width())));
        }
        Ok(self.run_layers(x, self.feature_layer(depth) + 1, |_, _| {}))
    }

    /// Features at `depth` for a whole batch.
    pub fn features_batch(&self, batch: &Matrix, depth: usize) -> Result<Matrix> {
        self.check_batch(batch)?;
        self.check_depth(depth)?;
        let upto = self.feature_layer(depth) + 1;
        let width = self.dense[depth - 1].out_width;
        let mut data = Vec::with_capacity(batch.rows() * width);
        for r in 0..batch.rows() {
            data.extend(self.run_layers(batch.row(r), upto, |_, _| {}));
        }
        Matrix::new(batch.rows(), width, data)
    }

    fn head_probs(&self, depth: usize, features: &[f64]) -> Vec<f64> {
        let mut logits = Vec::new();
        self.exits[&depth].apply(features, &mut logits);
        softmax(&logits)
    }

    /// Probabilities of the model's own classifier for one sample.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!("sample has {} features, model expects {}", x.len(), self.input_width())));
        }
        let out = self.run_layers(x, self.layers.len(), |_, _| {});
        Ok(if self.is_complete() { out } else { self.head_probs(self.depth(), &out) })
    }

    /// Dense blocks of the model's classifier path and whether a ReLU follows each.
    fn classifier_path(&self) -> (Vec<DenseParams>, Vec<bool>) {
        let mut relu_after = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            if l.is_dense() {
                relu_after.push(matches!(self.layers.get(i + 1), Some(LayerSpec::Relu { .. })));
            }
        }
        let mut blocks = self.dense.clone();
        if !self.is_complete() {
            blocks.push(self.exits[&self.depth()].clone());
            relu_after.push(false);
        }
        (blocks, relu_after)
    }

    /// Tensor ids of the classifier path, in block order (weight, bias).
    pub(crate) fn classifier_tensors(&self) -> Vec<(TensorId, TensorId)> {
        let mut ids: Vec<_> = (1..=self.depth()).map(|d| (TensorId::Weight(d), TensorId::Bias(d))).collect();
        if !self.is_complete() {
            ids.push((TensorId::ExitWeight(self.depth()), TensorId::ExitBias(self.depth())));
        }
        ids
    }

    fn store_path(&mut self, blocks: Vec<DenseParams>) {
        self.meta = None;
        let mut blocks = blocks.into_iter();
        for slot in self.dense.iter_mut() {
            *slot = blocks.next().expect("path length");
        }
        if let Some(head) = blocks.next() {
            let d = self.dense.len();
            self.exits.insert(d, head);
        }
    }

    /// Mean cross-entropy of the classifier on `ds`.
    pub fn loss(&self, ds: &Dataset) -> Result<f64> {
        self.check_data(ds)?;
        let (blocks, relu) = self.classifier_path();
        let mut total = 0.0;
        for i in 0..ds.len() {
            total += sample_loss(&blocks, &relu, ds.features().row(i), ds.labels()[i]);
        }
        Ok(total / ds.len() as f64)
    }

    /// Mean cross-entropy and its gradient with respect to every classifier-path tensor.
    pub fn loss_gradient(&self, ds: &Dataset) -> Result<(f64, BTreeMap<TensorId, Vec<f64>>)> {
        self.check_data(ds)?;
        let (blocks, relu) = self.classifier_path();
        let mut grads: Vec<DenseParams> = blocks.iter().map(|b| DenseParams::zeros(b.in_width, b.out_width)).collect();
        let idx: Vec<usize> = (0..ds.len()).collect();
        let loss = accumulate_batch(&blocks, &relu, ds, &idx, &mut grads);
        let n = ds.len() as f64;
        let mut out = BTreeMap::new();
        for ((wid, bid), g) in self.classifier_tensors().into_iter().zip(grads) {
            out.insert(wid, g.weights.iter().map(|v| v / n).collect());
            out.insert(bid, g.bias.iter().map(|v| v / n).collect());
        }
        Ok((loss / n, out))
    }

    fn check_data(&self, ds: &Dataset) -> Result<()> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if ds.dim() != self.input_width() {
            return Err(Error::Shape(format!("dataset has {} features, model expects {}", ds.dim(), self.input_width())));
        }
        if ds.num_classes() != self.num_classes {
            return Err(Error::Shape(format!(
                "dataset has {} classes, model outputs {}",
                ds.num_classes(),
                self.num_classes
            )));
        }
        Ok(())
    }
}

fn check_block(p: &DenseParams, i: usize, o: usize, name: &str) -> Result<()> {
    if p.in_width != i || p.out_width != o || p.weights.len() != i * o || p.bias.len() != o {
        return Err(Error::Structure(format!(
            "{name}: parameters {}x{} do not match declared {o}x{i}",
            p.out_width, p.in_width
        )));
    }
    Ok(())
}

fn forward_path(blocks: &[DenseParams], relu: &[bool], x: &[f64], acts: &mut Vec<Vec<f64>>) {
    acts.clear();
    acts.push(x.to_vec());
    let mut out = Vec::new();
    for (b, &r) in blocks.iter().zip(relu) {
        b.apply(acts.last().unwrap(), &mut out);
        if r {
            relu_in_place(&mut out);
        }
        acts.push(out.clone());
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn sample_loss(blocks: &[DenseParams], relu: &[bool], x: &[f64], y: usize) -> f64 {
    let mut acts = Vec::new();
    forward_path(blocks, relu, x, &mut acts);
    let logits = acts.last().unwrap();
    log_sum_exp(logits) - logits[y]
}

/// Adds the summed gradient of the batch `idx` into `grads`; returns the summed loss.
fn accumulate_batch(
    blocks: &[DenseParams],
    relu: &[bool],
    ds: &Dataset,
    idx: &[usize],
    grads: &mut [DenseParams],
) -> f64 {
    let mut acts = Vec::new();
    let mut loss = 0.0;
    for &i in idx {
        let y = ds.labels()[i];
        forward_path(blocks, relu, ds.features().row(i), &mut acts);
        let logits = acts.last().unwrap();
        loss += log_sum_exp(logits) - logits[y];
        let mut delta = softmax(logits);
        delta[y] -= 1.0;
        for k in (0..blocks.len()).rev() {
            let input = &acts[k];
            let (b, g) = (&blocks[k], &mut grads[k]);
            for o in 0..b.out_width {
                let d = delta[o];
                g.bias[o] += d;
                let row = &mut g.weights[o * b.in_width..(o + 1) * b.in_width];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; b.in_width];
                for o in 0..b.out_width {
                    let d = delta[o];
                    let row = &b.weights[o * b.in_width..(o + 1) * b.in_width];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                if relu[k - 1] {
                    for (p, a) in prev.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
                delta = prev;
            }
        }
    }
    loss
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train_acc: f64,
}

/// Coordinates SGD may change, per classifier block: (weights, bias).
pub(crate) type UpdateMask = Vec<(Vec<bool>, Vec<bool>)>;

/// Minibatch SGD on a block path. Coordinates outside `update` never change.
pub(crate) fn sgd(
    blocks: &mut [DenseParams],
    relu: &[bool],
    update: Option<&UpdateMask>,
    ds: &Dataset,
    hyper: &TrainHyper,
    stream_tag: &str,
) -> Result<()> {
    hyper.validate()?;
    let mut rng = rng::stream(hyper.seed, stream_tag, 0);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut grads: Vec<DenseParams> = blocks.iter().map(|b| DenseParams::zeros(b.in_width, b.out_width)).collect();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            for g in grads.iter_mut() {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.bias.iter_mut().for_each(|v| *v = 0.0);
            }
            let loss = accumulate_batch(blocks, relu, ds, batch, &mut grads) / batch.len() as f64;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            let step = hyper.learning_rate / batch.len() as f64;
            for (k, (b, g)) in blocks.iter_mut().zip(&grads).enumerate() {
                let mask = update.map(|m| &m[k]);
                for (j, (w, gw)) in b.weights.iter_mut().zip(&g.weights).enumerate() {
                    if mask.is_none_or(|m| m.0[j]) {
                        *w -= step * gw;
                    }
                }
                for (j, (v, gb)) in b.bias.iter_mut().zip(&g.bias).enumerate() {
                    if mask.is_none_or(|m| m.1[j]) {
                        *v -= step * gb;
                    }
                }
            }
            if blocks.iter().any(|b| b.weights.iter().chain(&b.bias).any(|v| !v.is_finite())) {
                return Err(Error::Diverged { epoch, loss: f64::NAN });
            }
        }
    }
    Ok(())
}

/// Trains the model's classifier path with cross-entropy loss.
pub fn train(model: &ModelGraph, ds: &Dataset, hyper: &TrainHyper) -> Result<(ModelGraph, TrainReport)> {
    train_masked(model, None, ds, hyper, tags::TRAIN)
}

pub(crate) fn train_masked(
    model: &ModelGraph,
    update: Option<&UpdateMask>,
    ds: &Dataset,
    hyper: &TrainHyper,
    stream_tag: &str,
) -> Result<(ModelGraph, TrainReport)> {
    hyper.validate()?;
    let initial_loss = model.loss(ds)?;
    if hyper.epochs == 0 {
        let train_acc = evaluate(model, ds)?;
        return Ok((model.clone(), TrainReport { initial_loss, final_loss: initial_loss, train_acc }));
    }
    let (mut blocks, relu) = model.classifier_path();
    sgd(&mut blocks, &relu, update, ds, hyper, stream_tag)?;
    let mut trained = model.clone();
    trained.store_path(blocks);
    let final_loss = trained.loss(ds)?;
    let train_acc = evaluate(&trained, ds)?;
    Ok((trained, TrainReport { initial_loss, final_loss, train_acc }))
}

/// Fraction of samples whose arg-max class matches the label.
pub fn evaluate(model: &ModelGraph, ds: &Dataset) -> Result<f64> {
    model.check_data(ds)?;
    let mut correct = 0usize;
    for i in 0..ds.len() {
        if argmax(&model.predict_proba(ds.features().row(i))?) == ds.labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Accuracy of the exit head at `depth` alone.
pub fn evaluate_exit(model: &ModelGraph, depth: usize, ds: &Dataset) -> Result<f64> {
    model.check_data(ds)?;
    if !model.exits.contains_key(&depth) {
        return Err(Error::InvalidArgument(format!("no exit head at depth {depth}")));
    }
    let feats = model.features_batch(ds.features(), depth)?;
    let mut correct = 0usize;
    for i in 0..ds.len() {
        if argmax(&model.head_probs(depth, feats.row(i))) == ds.labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Trains one exit head per depth on the frozen backbone's features.
pub fn attach_exits(model: &ModelGraph, depths: &[usize], ds: &Dataset, hyper: &TrainHyper) -> Result<ModelGraph> {
    if !model.is_complete() {
        return Err(Error::InvalidArgument("exits attach to a complete backbone".into()));
    }
    model.check_data(ds)?;
    hyper.validate()?;
    let mut out = model.clone();
    out.meta = None;
    for &d in depths {
        model.check_depth(d)?;
        let feats = model.features_batch(ds.features(), d)?;
        let head_ds = ds.with_features(feats);
        let mut rng = rng::stream(hyper.seed, tags::EXIT_HEAD, d as u64);
        let mut blocks = vec![DenseParams::init(model.dense[d - 1].out_width, model.num_classes, &mut rng)];
        sgd(&mut blocks, &[false], None, &head_ds, &hyper.with_seed(rng::derive_seed(hyper.seed, tags::EXIT_HEAD, d as u64)), tags::TRAIN)?;
        out.exits.insert(d, blocks.pop().unwrap());
    }
    Ok(out)
}

/// Classifies `x` at the shallowest exit whose top probability reaches `threshold`.
///
/// The candidates are the exit heads above the deepest boundary, then the
/// model's own classifier, which always answers. Returns `(label, depth)`.
pub fn early_exit_infer(model: &ModelGraph, x: &[f64], threshold: f64) -> Result<(usize, usize)> {
    if model.exits.is_empty() {
        return Err(Error::InvalidArgument("model has no exit heads".into()));
    }
    if !(0.0..=1.01).contains(&threshold) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} outside [0, 1.01]")));
    }
    if x.len() != model.input_width() {
        return Err(Error::Shape(format!("sample has {} features, model expects {}", x.len(), model.input_width())));
    }
    let last = model.depth();
    let mut cur = x.to_vec();
    let mut next = Vec::new();
    let mut depth = 0;
    for (i, layer) in model.layers.iter().enumerate() {
        match layer {
            LayerSpec::Dense { .. } => {
                model.dense[depth].apply(&cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
                depth += 1;
            }
            LayerSpec::Relu { .. } => relu_in_place(&mut cur),
            LayerSpec::SoftmaxOutput { .. } => cur = softmax(&cur),
        }
        let at_feature = layer.is_dense() && !matches!(model.layers.get(i + 1), Some(LayerSpec::Relu { .. }))
            || matches!(layer, LayerSpec::Relu { .. });
        if at_feature && depth < last && model.exits.contains_key(&depth) {
            let p = model.head_probs(depth, &cur);
            let best = argmax(&p);
            if p[best] >= threshold {
                return Ok((best, depth));
            }
        }
    }
    let p = if model.is_complete() { cur } else { model.head_probs(last, &cur) };
    Ok((argmax(&p), last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_dataset, DataKind, Split};

    fn tiny() -> Vec<LayerSpec> {
        vec![LayerSpec::dense(2, 3), LayerSpec::relu(3), LayerSpec::dense(3, 2), LayerSpec::softmax(2)]
    }

    #[test]
    fn param_count_of_tiny_net() {
        assert_eq!(build_model(&tiny(), 1).unwrap().param_count(), 17);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_model(&tiny(), 99).unwrap();
        let b = build_model(&tiny(), 99).unwrap();
        assert_eq!(a.param_bytes(), b.param_bytes());
        assert_ne!(a.param_bytes(), build_model(&tiny(), 100).unwrap().param_bytes());
    }

    #[test]
    fn init_scale_respected() {
        let m = build_model(&mlp_spec(4, &[9], 3), 3).unwrap();
        for p in m.dense() {
            let bound = 1.0 / (p.in_width() as f64).sqrt();
            assert!(p.weights().iter().chain(p.bias()).all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn width_mismatch_names_layer_pair() {
        let err = build_model(&[LayerSpec::dense(2, 3), LayerSpec::dense(4, 2), LayerSpec::softmax(2)], 0).unwrap_err();
        assert!(err.to_string().contains("width mismatch at layer 1→2"), "{err}");
    }

    #[test]
    fn structure_rules() {
        assert!(build_model(&[LayerSpec::dense(2, 3)], 0).is_err());
        assert!(build_model(&[LayerSpec::relu(2), LayerSpec::softmax(2)], 0).is_err());
        assert!(build_model(&[], 0).is_err());
        assert!(build_model(&[LayerSpec::dense(2, 2), LayerSpec::softmax(2), LayerSpec::relu(2)], 0).is_err());
    }

    #[test]
    fn zero_model_gives_uniform_probabilities() {
        let mut m = build_model(&mlp_spec(2, &[4], 3), 0).unwrap();
        for id in m.tensor_ids() {
            m.tensor_mut(id).unwrap().iter_mut().for_each(|v| *v = 0.0);
        }
        let batch = Matrix::from_rows(&[vec![3.0, -1.0], vec![0.5, 7.0]]).unwrap();
        let fp = m.forward(&batch).unwrap();
        for v in fp.probs.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_rows_sum_to_one_and_layers_recorded() {
        let m = build_model(&mlp_spec(2, &[8, 5], 4), 11).unwrap();
        let batch = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.25], vec![10.0, -10.0]]).unwrap();
        let fp = m.forward(&batch).unwrap();
        assert_eq!(fp.activations.len(), m.layers().len());
        for r in 0..batch.rows() {
            let s: f64 = fp.probs.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
        assert!(fp.activations.iter().all(|a| a.as_slice().iter().all(|v| v.is_finite())));
        assert!(m.forward(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn epochs_zero_returns_model_unchanged() {
        let (train_ds, _) = gen_dataset(DataKind::Blobs, 30, 3, 0.3, 1).unwrap();
        let m = build_model(&mlp_spec(2, &[4], 3), 5).unwrap();
        let hyper = TrainHyper { epochs: 0, batch_size: 4, learning_rate: 0.1, seed: 0 };
        let (t, _) = train(&m, &train_ds, &hyper).unwrap();
        assert_eq!(t, m);
    }

    #[test]
    fn divergence_is_reported() {
        let (train_ds, _) = gen_dataset(DataKind::Blobs, 60, 3, 0.3, 1).unwrap();
        let m = build_model(&mlp_spec(2, &[16, 16], 3), 5).unwrap();
        let hyper = TrainHyper { epochs: 5, batch_size: 60, learning_rate: 1e300, seed: 0 };
        assert!(matches!(train(&m, &train_ds, &hyper), Err(Error::Diverged { .. })));
    }

    #[test]
    fn evaluate_on_memorized_set_is_one() {
        // Two well-separated points per class; a trained model memorizes them.
        let feats = Matrix::from_rows(&[vec![5.0, 0.0], vec![-5.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let ds = Dataset::new(feats, vec![0, 1, 2], 3, Split::Train).unwrap();
        let m = build_model(&mlp_spec(2, &[8], 3), 2).unwrap();
        let hyper = TrainHyper { epochs: 300, batch_size: 3, learning_rate: 0.1, seed: 1 };
        let (t, rep) = train(&m, &ds, &hyper).unwrap();
        assert_eq!(evaluate(&t, &ds).unwrap(), 1.0);
        assert_eq!(rep.train_acc, 1.0);
    }

    #[test]
    fn uniform_model_scores_chance() {
        let (_, test) = gen_dataset(DataKind::Blobs, 300, 3, 0.3, 4).unwrap();
        let mut m = build_model(&mlp_spec(2, &[4], 3), 0).unwrap();
        for id in m.tensor_ids() {
            m.tensor_mut(id).unwrap().iter_mut().for_each(|v| *v = 0.0);
        }
        // Ties resolve to class 0, which holds a third of the balanced set.
        assert_eq!(evaluate(&m, &test).unwrap(), 100.0 / 300.0);
    }

    #[test]
    fn early_exit_requires_exits() {
        let m = build_model(&mlp_spec(2, &[4], 3), 0).unwrap();
        assert!(early_exit_infer(&m, &[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn tensor_id_text_round_trip() {
        for id in [TensorId::Weight(1), TensorId::Bias(3), TensorId::ExitWeight(2), TensorId::ExitBias(12)] {
            assert_eq!(id.to_string().parse::<TensorId>().unwrap(), id);
        }
        assert!("Q1.w".parse::<TensorId>().is_err());
        assert!("L.w".parse::<TensorId>().is_err());
    }

    #[test]
    fn tensor_ids_sort_canonically() {
        let mut m = build_model(&mlp_spec(2, &[3, 3], 2), 0).unwrap();
        m.exits.insert(1, DenseParams::zeros(3, 2));
        let ids = m.tensor_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }
}
