//! Depth-level splitting and the downlink/uplink trade-off.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{softmax, ContainerMeta, DenseParams, LayerSpec, ModelGraph};
use crate::plan::SplitDepth;

/// Layers after the split point; runs on the server.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerPart {
    layers: Vec<LayerSpec>,
    dense: Vec<DenseParams>,
}

impl ServerPart {
    /// True when no parameterized layer is left for the server.
    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.dense.iter().map(DenseParams::param_count).sum()
    }

    /// Class probabilities from uploaded device features.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let want = self.layers.first().map_or(0, LayerSpec::in_width);
        if features.len() != want {
            return Err(Error::Shape(format!("server expects {want} features, got {}", features.len())));
        }
        let mut cur = features.to_vec();
        let mut next = Vec::new();
        let mut k = 0;
        for layer in &self.layers {
            match layer {
                LayerSpec::Dense { .. } => {
                    self.dense[k].apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                    k += 1;
                }
                LayerSpec::Relu { .. } => cur.iter_mut().for_each(|v| *v = v.max(0.0)),
                LayerSpec::SoftmaxOutput { .. } => cur = softmax(&cur),
            }
        }
        Ok(cur)
    }
}

/// Device and server halves of a root model.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub depth: usize,
    /// Layers `1..=depth` with every exit head at or above `depth`.
    pub device: ModelGraph,
    pub server: ServerPart,
}

impl SplitPair {
    /// Features the device uploads for one sample.
    pub fn device_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.device.features_at(x, self.depth)
    }
}

/// Cuts `root` after dense layer `depth`.
///
/// The device part keeps all exit heads up to the cut so it can classify
/// locally; a cut above the last layer needs an exit head at the cut.
pub fn split_at(root: &ModelGraph, depth: SplitDepth) -> Result<SplitPair> {
    if !root.is_complete() {
        return Err(Error::InvalidArgument("only a complete root can be split".into()));
    }
    let d = depth.resolve(root.depth())?;
    let cut = root.feature_layer(d) + 1;
    let server = ServerPart { layers: root.layers()[cut..].to_vec(), dense: root.dense()[d..].to_vec() };
    if d == root.depth() {
        return Ok(SplitPair { depth: d, device: root.clone(), server });
    }
    if !root.exits().contains_key(&d) {
        return Err(Error::InvalidArgument(format!(
            "no exit head at depth {d}: the device could not classify locally"
        )));
    }
    let exits: BTreeMap<usize, DenseParams> =
        root.exits().range(..=d).map(|(&k, v)| (k, v.clone())).collect();
    let mut device = ModelGraph::from_parts(root.layers()[..cut].to_vec(), root.dense()[..d].to_vec(), exits)?;
    if let Some(meta) = root.meta() {
        let ids = device.tensor_ids();
        let tensors = meta.tensors.iter().filter(|(id, _)| ids.contains(id)).map(|(k, v)| (*k, *v)).collect();
        device.set_meta(ContainerMeta { plan_id: meta.plan_id.clone(), tensors });
    }
    Ok(SplitPair { depth: d, device, server })
}

/// Bits uploaded per sample when splitting at `depth`.
pub fn feature_bits_at(root: &ModelGraph, depth: usize, value_bits: u32) -> Result<u64> {
    Ok(root.feature_width(depth)? as u64 * u64::from(value_bits))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub depth: usize,
    /// Device-part parameters at `value_bits` each.
    pub downlink_bits: u64,
    /// `n_samples` feature uploads.
    pub uplink_bits: u64,
    pub total_bits: u64,
}

/// Downlink/uplink bit counts for every split depth of `root`.
pub fn tradeoff_table(root: &ModelGraph, value_bits: u32, n_samples: u64) -> Result<Vec<TradeoffRow>> {
    (1..=root.depth())
        .map(|d| {
            let pair = split_at(root, SplitDepth::At(d))?;
            let downlink_bits = pair.device.param_count() as u64 * u64::from(value_bits);
            let uplink_bits = n_samples * feature_bits_at(root, d, value_bits)?;
            Ok(TradeoffRow { depth: d, downlink_bits, uplink_bits, total_bits: downlink_bits + uplink_bits })
        })
        .collect()
}

/// Depth with the smallest total; ties go to the shallower depth.
pub fn best_depth(table: &[TradeoffRow]) -> Option<usize> {
    table.iter().min_by_key(|r| (r.total_bits, r.depth)).map(|r| r.depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_dataset, DataKind};
    use crate::model::{attach_exits, build_model, mlp_spec, TrainHyper};

    fn root_with_exits(hidden: &[usize]) -> ModelGraph {
        let (train, _) = gen_dataset(DataKind::Blobs, 30, 3, 0.3, 1).unwrap();
        let root = build_model(&mlp_spec(2, hidden, 3), 7).unwrap();
        let hyper = TrainHyper { epochs: 1, batch_size: 8, learning_rate: 0.05, seed: 3 };
        let depths: Vec<usize> = (1..=hidden.len()).collect();
        attach_exits(&root, &depths, &train, &hyper).unwrap()
    }

    #[test]
    fn full_split_keeps_everything_on_device() {
        let root = root_with_exits(&[8, 4]);
        let pair = split_at(&root, SplitDepth::Full).unwrap();
        assert!(pair.server.is_empty());
        assert_eq!(pair.device, root);
    }

    #[test]
    fn missing_exit_head_is_an_error() {
        let root = build_model(&mlp_spec(2, &[8, 4], 3), 7).unwrap();
        assert!(split_at(&root, SplitDepth::At(1)).is_err());
        assert!(split_at(&root, SplitDepth::At(9)).is_err());
    }

    #[test]
    fn composition_identity_is_exact() {
        let root = root_with_exits(&[8, 6]);
        for d in 1..=3 {
            let pair = split_at(&root, SplitDepth::At(d)).unwrap();
            for i in 0..20 {
                let x = [i as f64 * 0.37 - 3.0, 2.0 - i as f64 * 0.21];
                let full = root.predict_proba(&x).unwrap();
                let composed = pair.server.forward(&pair.device_features(&x).unwrap()).unwrap();
                assert_eq!(full, composed);
            }
        }
    }

    #[test]
    fn device_part_grows_with_depth() {
        let root = root_with_exits(&[16, 16]);
        let sizes: Vec<usize> =
            (1..=3).map(|d| split_at(&root, SplitDepth::At(d)).unwrap().device.param_count()).collect();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
    }

    #[test]
    fn feature_bits_example() {
        let root = build_model(&mlp_spec(64, &[32], 16), 0).unwrap();
        assert_eq!(feature_bits_at(&root, 1, 32).unwrap(), 1024);
        assert_eq!(feature_bits_at(&root, 2, 32).unwrap(), 512);
        assert!(feature_bits_at(&root, 3, 32).is_err());
    }

    #[test]
    fn zero_samples_prefers_shallowest() {
        let root = root_with_exits(&[32, 16, 8]);
        let table = tradeoff_table(&root, 32, 0).unwrap();
        assert_eq!(best_depth(&table), Some(1));
        let table = tradeoff_table(&root, 32, 1_000_000).unwrap();
        assert_eq!(best_depth(&table), Some(4));
    }
}
