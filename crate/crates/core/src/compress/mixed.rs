//! Per-tensor sensitivity and greedy mixed-precision bit allocation.

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{evaluate, ModelGraph, TensorId};
use crate::plan::{check_bits, PruneMask};

use super::quant::quantize_uniform;

/// Accuracy lost when only one tensor is quantized to `probe_bits`, per tensor.
pub fn layer_sensitivity(model: &ModelGraph, ds: &Dataset, probe_bits: u8) -> Result<BTreeMap<TensorId, f64>> {
    check_bits(probe_bits)?;
    let base = evaluate(model, ds)?;
    let mut out = BTreeMap::new();
    for id in model.tensor_ids() {
        let q = quantize_uniform(model.tensor(id).unwrap(), probe_bits)?.dequantize();
        let mut probe = model.clone();
        probe.tensor_mut(id).unwrap().copy_from_slice(&q);
        out.insert(id, base - evaluate(&probe, ds)?);
    }
    Ok(out)
}

/// Allocation input for one tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorCost {
    pub id: TensorId,
    /// Parameters transmitted for this tensor (kept after pruning).
    pub params: u64,
    pub sensitivity: f64,
}

/// Total payload bits of an assignment.
pub fn assignment_bits(tensors: &[TensorCost], widths: &BTreeMap<TensorId, u8>) -> u64 {
    tensors.iter().map(|t| t.params * u64::from(widths[&t.id])).sum()
}

fn check_choices(choices: &[u8]) -> Result<()> {
    if choices.is_empty() {
        return Err(Error::InvalidArgument("no bit-width choices".into()));
    }
    if choices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("choices {choices:?} must be strictly increasing")));
    }
    choices.iter().try_for_each(|&b| check_bits(b))
}

/// Greedy allocation under `budget_bits`.
///
/// Every tensor starts at the smallest choice. Each round upgrades, by one
/// step, the tensor with the highest sensitivity per added bit among those
/// whose upgrade still fits; ties go to the earlier tensor. Stops when no
/// upgrade fits.
pub fn allocate_bits(tensors: &[TensorCost], budget_bits: u64, choices: &[u8]) -> Result<BTreeMap<TensorId, u8>> {
    check_choices(choices)?;
    let mut level = vec![0usize; tensors.len()];
    let mut used: u64 = tensors.iter().map(|t| t.params * u64::from(choices[0])).sum();
    if used > budget_bits {
        return Err(Error::Infeasible(format!("budget {budget_bits} bits below minimal assignment of {used} bits")));
    }
    loop {
        let mut best: Option<(usize, f64, u64)> = None;
        for (i, t) in tensors.iter().enumerate() {
            let Some(&next) = choices.get(level[i] + 1) else { continue };
            let cost = t.params * u64::from(next - choices[level[i]]);
            if used + cost > budget_bits {
                continue;
            }
            let ratio = if cost == 0 { f64::INFINITY } else { t.sensitivity / cost as f64 };
            if best.is_none_or(|(_, r, _)| ratio > r) {
                best = Some((i, ratio, cost));
            }
        }
        match best {
            Some((i, _, cost)) => {
                level[i] += 1;
                used += cost;
            }
            None => break,
        }
    }
    Ok(tensors.iter().zip(level).map(|(t, l)| (t.id, choices[l])).collect())
}

/// Allocation inputs for `model`, counting only coordinates kept by `mask`.
pub fn tensor_costs(model: &ModelGraph, mask: Option<&PruneMask>, sensitivity: &BTreeMap<TensorId, f64>) -> Vec<TensorCost> {
    model
        .tensor_ids()
        .into_iter()
        .map(|id| TensorCost {
            id,
            params: mask.map_or_else(|| model.tensor(id).unwrap().len(), |m| m.kept_in(id)) as u64,
            sensitivity: sensitivity.get(&id).copied().unwrap_or(0.0),
        })
        .collect()
}
