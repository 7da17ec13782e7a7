//! Row-major matrices, labelled datasets and the synthetic generators.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tags};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Selects rows by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Labelled samples for classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    split: Split,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize, split: Split) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(Self { features, labels, num_classes, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows reordered (or subset) by `idx`.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            split: self.split,
        }
    }

    /// Same labels, different features (used to train exit heads on frozen activations).
    pub(crate) fn with_features(&self, features: Matrix) -> Self {
        debug_assert_eq!(features.rows(), self.len());
        Self { features, labels: self.labels.clone(), num_classes: self.num_classes, split: self.split }
    }

    /// Writes `f0,...,f{d-1},label` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads CSV written by [`Dataset::write_csv`]. The class count defaults to `max label + 1`.
    pub fn read_csv<R: Read>(r: R, split: Split, num_classes: Option<usize>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let d = header.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
            Error::Format("dataset CSV needs at least one feature column and a label".into())
        })?;
        if header.get(d) != Some("label") || (0..d).any(|j| header.get(j) != Some(&format!("f{j}"))) {
            return Err(Error::Format("dataset CSV header must be f0,...,fd-1,label".into()));
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for j in 0..d {
                let v = f64::from_str(&rec[j])
                    .map_err(|e| Error::Format(format!("feature {j}: {e}")))?;
                data.push(v);
            }
            labels.push(
                rec[d].parse::<usize>().map_err(|e| Error::Format(format!("label: {e}")))?,
            );
        }
        let c = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let rows = labels.len();
        Dataset::new(Matrix::new(rows, d, data)?, labels, c, split)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// Isotropic Gaussian clusters around points on the unit circle.
    Blobs,
    /// Concentric rings, class `k` at radius `k + 1`.
    Rings,
}

/// Arguments of [`gen_dataset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub kind: DataKind,
    pub n: usize,
    pub num_classes: usize,
    pub noise: f64,
    pub seed: u64,
}

/// Generates a balanced train split and an independent test split of `n` samples each.
///
/// Sample `i` of either split carries label `i % num_classes`. The two splits
/// are drawn from separate random streams.
pub fn gen_dataset(kind: DataKind, n: usize, num_classes: usize, noise: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if num_classes == 0 || n < num_classes {
        return Err(Error::InvalidArgument(format!(
            "need n >= num_classes > 0 (n = {n}, classes = {num_classes})"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    let train = gen_split(kind, n, num_classes, noise, seed, Split::Train)?;
    let test = gen_split(kind, n, num_classes, noise, seed, Split::Test)?;
    Ok((train, test))
}

impl DataSpec {
    pub fn generate(&self) -> Result<(Dataset, Dataset)> {
        gen_dataset(self.kind, self.n, self.num_classes, self.noise, self.seed)
    }
}

fn gen_split(kind: DataKind, n: usize, c: usize, noise: f64, seed: u64, split: Split) -> Result<Dataset> {
    let tag = match split {
        Split::Train => tags::DATA_TRAIN,
        Split::Test => tags::DATA_TEST,
    };
    let mut rng = rng::stream(seed, tag, 0);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % c;
        let (x, y) = match kind {
            DataKind::Blobs => {
                let angle = TAU * label as f64 / c as f64;
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                (angle.cos() + noise * dx, angle.sin() + noise * dy)
            }
            DataKind::Rings => {
                let angle = rng.gen_range(0.0..TAU);
                let dr: f64 = rng.sample(StandardNormal);
                let r = (label + 1) as f64 + noise * dr;
                (r * angle.cos(), r * angle.sin())
            }
        };
        data.push(x);
        data.push(y);
        labels.push(label);
    }
    Dataset::new(Matrix::new(n, 2, data)?, labels, c, split)
}
