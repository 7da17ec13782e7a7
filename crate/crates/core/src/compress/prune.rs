//! Global magnitude pruning, masked fine-tuning and nested subnet families.

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{train_masked, ModelGraph, TensorId, TrainHyper, TrainReport, UpdateMask};
use crate::plan::{check_retention, kept_count, PruneMask};
use crate::rng::tags;

/// Keeps the `keep` largest-magnitude entries among `prunable`; the rest are always kept.
///
/// Ties in magnitude go to the lower index. If `keep` is smaller than the
/// number of non-prunable entries, no prunable entry survives.
pub fn magnitude_keep(values: &[f64], prunable: &[bool], keep: usize) -> Vec<bool> {
    debug_assert_eq!(values.len(), prunable.len());
    let fixed = prunable.iter().filter(|&&p| !p).count();
    let budget = keep.saturating_sub(fixed);
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| prunable[i]).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut out: Vec<bool> = prunable.iter().map(|&p| !p).collect();
    for &i in order.iter().take(budget) {
        out[i] = true;
    }
    out
}

/// Mask keeping `floor(rho * N)` parameters of `model`, ranked globally by magnitude.
///
/// Biases are never pruned; they count towards the kept total.
pub fn magnitude_mask(model: &ModelGraph, rho: f64) -> Result<PruneMask> {
    check_retention(rho)?;
    let ids = model.tensor_ids();
    let mut values = Vec::new();
    let mut prunable = Vec::new();
    for &id in &ids {
        let t = model.tensor(id).unwrap();
        values.extend_from_slice(t);
        prunable.extend(std::iter::repeat_n(!id.is_bias(), t.len()));
    }
    let flat = magnitude_keep(&values, &prunable, kept_count(rho, values.len()));
    let mut keep = BTreeMap::new();
    let mut at = 0;
    for id in ids {
        let len = model.tensor(id).unwrap().len();
        keep.insert(id, flat[at..at + len].to_vec());
        at += len;
    }
    Ok(PruneMask::new(keep, rho))
}

fn update_mask(model: &ModelGraph, allowed: impl Fn(TensorId, usize) -> bool) -> UpdateMask {
    model
        .classifier_tensors()
        .into_iter()
        .map(|(w, b)| {
            let wl = model.tensor(w).unwrap().len();
            let bl = model.tensor(b).unwrap().len();
            ((0..wl).map(|i| allowed(w, i)).collect(), (0..bl).map(|i| allowed(b, i)).collect())
        })
        .collect()
}

/// Zeroes pruned coordinates and re-trains the rest; pruned coordinates stay exactly zero.
pub fn fine_tune_masked(model: &ModelGraph, mask: &PruneMask, ds: &Dataset, hyper: &TrainHyper) -> Result<(ModelGraph, TrainReport)> {
    let pruned = mask.apply(model)?;
    let update = update_mask(&pruned, |id, i| mask.get(id).is_some_and(|k| k[i]));
    train_masked(&pruned, Some(&update), ds, hyper, tags::TRAIN)
}

/// One model whose nested masks each select a fine-tuned subnet.
///
/// Values inside the smallest mask are fine-tuned first and then frozen; each
/// larger mask only trains the coordinates it adds. Encoding the model under
/// any of the masks therefore reproduces that level exactly, and a larger
/// level is the smaller one plus a differential parameter set.
#[derive(Clone, Debug)]
pub struct NestedFamily {
    pub model: ModelGraph,
    /// Ascending retention.
    pub levels: Vec<PruneMask>,
}

impl NestedFamily {
    pub fn level(&self, rho: f64) -> Option<&PruneMask> {
        self.levels.iter().find(|m| m.retention() == rho)
    }
}

pub fn build_nested_family(model: &ModelGraph, retentions: &[f64], ds: &Dataset, hyper: &TrainHyper) -> Result<NestedFamily> {
    let mut rhos = retentions.to_vec();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if rhos.is_empty() {
        return Err(Error::InvalidArgument("no retention levels".into()));
    }
    let masks: Vec<PruneMask> = rhos.iter().map(|&r| magnitude_mask(model, r)).collect::<Result<_>>()?;
    let mut current = masks[0].apply(model)?;
    let mut previous: Option<&PruneMask> = None;
    for (level, mask) in masks.iter().enumerate() {
        // Newly admitted coordinates restart from the source model's values.
        for (&id, keep) in mask.tensors() {
            let src = model.tensor(id).unwrap().to_vec();
            let was = previous.and_then(|p| p.get(id));
            let dst = current.tensor_mut(id).unwrap();
            for i in 0..keep.len() {
                if keep[i] && !was.is_some_and(|w| w[i]) {
                    dst[i] = src[i];
                }
            }
        }
        let update = update_mask(&current, |id, i| {
            mask.get(id).is_some_and(|k| k[i]) && !previous.and_then(|p| p.get(id)).is_some_and(|w| w[i])
        });
        let h = hyper.with_seed(crate::rng::derive_seed(hyper.seed, tags::NESTED, level as u64));
        current = train_masked(&current, Some(&update), ds, &h, tags::TRAIN)?.0;
        previous = Some(mask);
    }
    Ok(NestedFamily { model: current, levels: masks })
}
