#![allow(dead_code)]

use ismd_core::codec;
use ismd_core::compress::grid::Generator;
use ismd_core::data::{gen_dataset, DataKind, Dataset};
use ismd_core::model::{attach_exits, build_model, mlp_spec, train, ModelGraph, TrainHyper};
use ismd_core::plan::CompressionPlan;

pub const HIDDEN: [usize; 2] = [32, 32];

pub fn hyper(epochs: usize, lr: f64, seed: u64) -> TrainHyper {
    TrainHyper { epochs, batch_size: 16, learning_rate: lr, seed }
}

pub fn finetune(seed: u64) -> TrainHyper {
    hyper(20, 0.05, seed)
}

pub struct Reference {
    pub train: Dataset,
    pub test: Dataset,
    /// Trained root with exits at every depth, as decoded from its 32-bit container.
    pub root: ModelGraph,
}

impl Reference {
    pub fn generator(&self, seed: u64) -> Generator<'_> {
        Generator::new(&self.root, &self.train, &self.test, finetune(seed))
    }
}

/// Reference task: three blobs (noise 0.45, 300 samples per split) and a 2-32-32-3 MLP.
pub fn reference(seed: u64) -> Reference {
    let (train_ds, test_ds) = gen_dataset(DataKind::Blobs, 300, 3, 0.45, seed).unwrap();
    let init = build_model(&mlp_spec(2, &HIDDEN, 3), seed).unwrap();
    let (trained, _) = train(&init, &train_ds, &hyper(60, 0.1, seed)).unwrap();
    let with_exits = attach_exits(&trained, &[1, 2], &train_ds, &hyper(40, 0.1, seed)).unwrap();
    let root = codec::decode(&codec::encode(&with_exits, &CompressionPlan::full(), None).unwrap(), false).unwrap().model;
    Reference { train: train_ds, test: test_ds, root }
}
