//! Fully connected sigmoid network with quadratic one-hot loss, IDX parsing
//! and a training loop driven by the [`crate::optim`] steppers.
//!
//! Parameters live in one flat vector: layer by layer, each layer's weights
//! (row-major, `n_out x n_in`) followed by its biases.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::landscape::Landscape;
use crate::optim::{step, OptimConfig, OptimState};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let spec = Self {
            layer_sizes: layer_sizes.to_vec(),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(invalid("network needs at least an input and an output layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(invalid("layer sizes must be positive"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn layout(&self) -> MlpLayout {
        MlpLayout::new(&self.layer_sizes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub n_in: usize,
    pub n_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Offsets of every layer's weights and biases inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpLayout {
    pub layers: Vec<LayerShape>,
    pub len: usize,
    widest: usize,
}

impl MlpLayout {
    pub fn new(sizes: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(sizes.len().saturating_sub(1));
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            layers.push(LayerShape {
                n_in,
                n_out,
                weight_offset: offset,
                bias_offset: offset + n_in * n_out,
            });
            offset += n_in * n_out + n_out;
        }
        Self {
            layers,
            len: offset,
            widest: sizes.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layout: MlpLayout,
    pub flat: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layout = spec.layout();
        let flat = vec![0.0; layout.len];
        Self { layout, flat }
    }

    pub fn from_flat(spec: &MlpSpec, flat: Vec<f64>) -> Result<Self> {
        let layout = spec.layout();
        check_dim(layout.len, flat.len())?;
        Ok(Self { layout, flat })
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = &self.layout.layers[layer];
        &self.flat[s.weight_offset..s.bias_offset]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let s = &self.layout.layers[layer];
        &self.flat[s.bias_offset..s.bias_offset + s.n_out]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.layout.layers[layer];
        &mut self.flat[s.bias_offset..s.bias_offset + s.n_out]
    }

    pub fn unflatten(&self) -> Vec<LayerParams> {
        (0..self.layout.layers.len())
            .map(|l| LayerParams {
                weights: self.weights(l).to_vec(),
                biases: self.biases(l).to_vec(),
            })
            .collect()
    }

    pub fn flatten(spec: &MlpSpec, layers: &[LayerParams]) -> Result<Self> {
        let layout = spec.layout();
        check_dim(layout.layers.len(), layers.len())?;
        let mut flat = Vec::with_capacity(layout.len);
        for (shape, lp) in layout.layers.iter().zip(layers) {
            check_dim(shape.n_in * shape.n_out, lp.weights.len())?;
            check_dim(shape.n_out, lp.biases.len())?;
            flat.extend_from_slice(&lp.weights);
            flat.extend_from_slice(&lp.biases);
        }
        Ok(Self { layout, flat })
    }
}

/// Gaussian initialization: bias std 1, weight std `1/sqrt(fan_in)`.
///
/// Standard normals are drawn for the whole flat vector in storage order
/// (polar method, pairs filled consecutively), then weights are rescaled.
pub fn init_params(spec: &MlpSpec) -> Result<MlpParams> {
    spec.validate()?;
    let mut params = MlpParams::zeros(spec);
    SeededRng::new(spec.seed).fill_standard_normal(&mut params.flat);
    for shape in params.layout.layers.clone() {
        let scale = 1.0 / libm::sqrt(shape.n_in as f64);
        for w in &mut params.flat[shape.weight_offset..shape.bias_offset] {
            *w *= scale;
        }
    }
    Ok(params)
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

fn layer_forward(flat: &[f64], shape: &LayerShape, input: &[f64], out: &mut [f64]) {
    let w = &flat[shape.weight_offset..shape.bias_offset];
    let b = &flat[shape.bias_offset..shape.bias_offset + shape.n_out];
    for (j, o) in out.iter_mut().enumerate().take(shape.n_out) {
        let row = &w[j * shape.n_in..(j + 1) * shape.n_in];
        let z: f64 = row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>() + b[j];
        *o = sigmoid(z);
    }
}

/// Output activations, one row of `output_dim` per input row.
pub fn forward(params: &MlpParams, batch: &[f64]) -> Result<Vec<f64>> {
    forward_flat(&params.layout, &params.flat, batch)
}

pub fn forward_flat(layout: &MlpLayout, flat: &[f64], batch: &[f64]) -> Result<Vec<f64>> {
    check_dim(layout.len, flat.len())?;
    let n_in = layout.input_dim();
    if !batch.len().is_multiple_of(n_in) {
        return Err(Error::DimensionMismatch {
            expected: n_in,
            actual: batch.len(),
        });
    }
    let n = batch.len() / n_in;
    let n_out = layout.output_dim();
    let mut out = vec![0.0; n * n_out];
    let mut a = vec![0.0; layout.widest];
    let mut b = vec![0.0; layout.widest];
    for (x, o) in batch.chunks_exact(n_in).zip(out.chunks_exact_mut(n_out)) {
        a[..n_in].copy_from_slice(x);
        for shape in &layout.layers {
            layer_forward(flat, shape, &a[..shape.n_in], &mut b[..shape.n_out]);
            core::mem::swap(&mut a, &mut b);
        }
        o.copy_from_slice(&a[..n_out]);
    }
    Ok(out)
}

/// Images as `[0, 1]` reals and one-hot labels, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<f64>,
    pub labels: Vec<f64>,
    pub count: usize,
    pub image_dim: usize,
    pub classes: usize,
}

impl LabeledDataset {
    pub fn new(images: Vec<f64>, labels: Vec<f64>, image_dim: usize, classes: usize) -> Result<Self> {
        if image_dim == 0 || classes == 0 || !images.len().is_multiple_of(image_dim) {
            return Err(invalid("image buffer does not divide into rows"));
        }
        let count = images.len() / image_dim;
        check_dim(count * classes, labels.len())?;
        Ok(Self {
            images,
            labels,
            count,
            image_dim,
            classes,
        })
    }

    /// Builds from raw pixel bytes (scaled by 1/255) and class indices.
    pub fn from_bytes(pixels: &[u8], label_bytes: &[u8], image_dim: usize, classes: usize) -> Result<Self> {
        if pixels.len() != label_bytes.len() * image_dim {
            return Err(Error::CountMismatch {
                images: pixels.len() / image_dim.max(1),
                labels: label_bytes.len(),
            });
        }
        let images = pixels.iter().map(|&p| p as f64 / 255.0).collect();
        let mut labels = vec![0.0; label_bytes.len() * classes];
        for (i, &l) in label_bytes.iter().enumerate() {
            if l as usize >= classes {
                return Err(invalid(format!("label {l} at record {i} exceeds class count {classes}")));
            }
            labels[i * classes + l as usize] = 1.0;
        }
        Self::new(images, labels, image_dim, classes)
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * self.image_dim..(i + 1) * self.image_dim]
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i * self.classes..(i + 1) * self.classes]
    }

    pub fn class_of(&self, i: usize) -> usize {
        argmax(self.label(i))
    }

    /// The first `n` records (all of them if fewer).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.count);
        Self {
            images: self.images[..n * self.image_dim].to_vec(),
            labels: self.labels[..n * self.classes].to_vec(),
            count: n,
            image_dim: self.image_dim,
            classes: self.classes,
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let word = bytes.get(at..at + 4).ok_or(Error::TruncatedFile {
        needed: at + 4,
        available: bytes.len(),
    })?;
    Ok(u32::from_be_bytes([word[0], word[1], word[2], word[3]]))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Parses an IDX image file; `limit` keeps only the first records.
pub fn parse_idx_images(bytes: &[u8], limit: Option<usize>) -> Result<IdxImages> {
    check_magic(bytes, IDX_IMAGE_MAGIC)?;
    let declared = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let needed = 16 + declared * rows * cols;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            available: bytes.len(),
        });
    }
    let count = limit.map_or(declared, |l| l.min(declared));
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..16 + count * rows * cols].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8], limit: Option<usize>) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABEL_MAGIC)?;
    let declared = be_u32(bytes, 4)? as usize;
    let needed = 8 + declared;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            available: bytes.len(),
        });
    }
    let count = limit.map_or(declared, |l| l.min(declared));
    Ok(bytes[8..8 + count].to_vec())
}

/// Ten-class dataset from the bytes of an image file and a label file. The
/// declared record counts must agree even when `limit` truncates.
pub fn dataset_from_idx(image_bytes: &[u8], label_bytes: &[u8], limit: Option<usize>) -> Result<LabeledDataset> {
    let images = parse_idx_images(image_bytes, limit)?;
    let labels = parse_idx_labels(label_bytes, limit)?;
    let declared_images = be_u32(image_bytes, 4)? as usize;
    let declared_labels = be_u32(label_bytes, 4)? as usize;
    if declared_images != declared_labels {
        return Err(Error::CountMismatch {
            images: declared_images,
            labels: declared_labels,
        });
    }
    LabeledDataset::from_bytes(&images.pixels, &labels, images.rows * images.cols, 10)
}

fn check_data(layout: &MlpLayout, data: &LabeledDataset) -> Result<()> {
    check_dim(layout.input_dim(), data.image_dim)?;
    check_dim(layout.output_dim(), data.classes)
}

/// Per-sample scratch for backpropagation.
struct Backprop {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Backprop {
    fn new(layout: &MlpLayout) -> Self {
        let mut activations = vec![vec![0.0; layout.input_dim()]];
        activations.extend(layout.layers.iter().map(|s| vec![0.0; s.n_out]));
        Self {
            activations,
            delta: vec![0.0; layout.widest],
            delta_prev: vec![0.0; layout.widest],
        }
    }

    /// Adds this sample's gradient into `grad`; returns its loss.
    fn accumulate(&mut self, layout: &MlpLayout, flat: &[f64], x: &[f64], y: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.activations[0].copy_from_slice(x);
        for (l, shape) in layout.layers.iter().enumerate() {
            let (head, tail) = self.activations.split_at_mut(l + 1);
            layer_forward(flat, shape, &head[l], &mut tail[0]);
        }
        let out = &self.activations[layout.layers.len()];
        let loss = 0.5 * out.iter().zip(y).map(|(a, t)| (a - t) * (a - t)).sum::<f64>();
        let Some(grad) = grad else {
            return loss;
        };
        for (j, (&a, &t)) in out.iter().zip(y).enumerate() {
            self.delta[j] = (a - t) * a * (1.0 - a);
        }
        for (l, shape) in layout.layers.iter().enumerate().rev() {
            let input = &self.activations[l];
            let delta = &self.delta[..shape.n_out];
            for (j, &d) in delta.iter().enumerate() {
                let row = &mut grad[shape.weight_offset + j * shape.n_in..shape.weight_offset + (j + 1) * shape.n_in];
                for (gw, &a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
                grad[shape.bias_offset + j] += d;
            }
            if l == 0 {
                break;
            }
            let w = &flat[shape.weight_offset..shape.bias_offset];
            let prev = &mut self.delta_prev[..shape.n_in];
            prev.fill(0.0);
            for (j, &d) in delta.iter().enumerate() {
                for (p, &wji) in prev.iter_mut().zip(&w[j * shape.n_in..(j + 1) * shape.n_in]) {
                    *p += wji * d;
                }
            }
            for (p, &a) in prev.iter_mut().zip(input) {
                *p *= a * (1.0 - a);
            }
            core::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
        loss
    }
}

/// Mean of `||a - y||^2 / 2` over the selected records, and optionally its
/// gradient (written into `grad`, overwriting it).
pub fn loss_and_grad_flat(
    layout: &MlpLayout,
    flat: &[f64],
    data: &LabeledDataset,
    indices: Option<&[usize]>,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    check_dim(layout.len, flat.len())?;
    check_data(layout, data)?;
    let n = indices.map_or(data.count, |ix| ix.len());
    if n == 0 {
        return Err(invalid("empty batch"));
    }
    if let Some(g) = grad.as_deref_mut() {
        check_dim(layout.len, g.len())?;
        g.fill(0.0);
    }
    let mut bp = Backprop::new(layout);
    let mut total = 0.0;
    for k in 0..n {
        let i = indices.map_or(k, |ix| ix[k]);
        total += bp.accumulate(layout, flat, data.image(i), data.label(i), grad.as_deref_mut());
    }
    let inv = 1.0 / n as f64;
    if let Some(g) = grad {
        for v in g.iter_mut() {
            *v *= inv;
        }
    }
    Ok(total * inv)
}

pub fn loss_and_grad(params: &MlpParams, data: &LabeledDataset, indices: Option<&[usize]>) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.layout.len];
    let loss = loss_and_grad_flat(&params.layout, &params.flat, data, indices, Some(&mut grad))?;
    Ok((loss, grad))
}

/// Test loss and accuracy (argmax agreement) over a whole dataset.
pub fn evaluate(layout: &MlpLayout, flat: &[f64], data: &LabeledDataset) -> Result<(f64, f64)> {
    check_data(layout, data)?;
    let out = forward_flat(layout, flat, &data.images)?;
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (i, row) in out.chunks_exact(data.classes).enumerate() {
        let y = data.label(i);
        loss += 0.5 * row.iter().zip(y).map(|(a, t)| (a - t) * (a - t)).sum::<f64>();
        if argmax(row) == argmax(y) {
            hits += 1;
        }
    }
    let n = data.count.max(1) as f64;
    Ok((loss / n, hits as f64 / n))
}

/// The network loss over fixed data as a function of the flat parameters.
#[derive(Debug, Clone, Copy)]
pub struct MlpLandscape<'a> {
    layout: &'a MlpLayout,
    data: &'a LabeledDataset,
    indices: Option<&'a [usize]>,
}

pub fn as_landscape<'a>(layout: &'a MlpLayout, data: &'a LabeledDataset, indices: Option<&'a [usize]>) -> Result<MlpLandscape<'a>> {
    check_data(layout, data)?;
    if let Some(ix) = indices {
        if ix.is_empty() {
            return Err(invalid("empty batch"));
        }
        if let Some(&bad) = ix.iter().find(|&&i| i >= data.count) {
            return Err(invalid(format!("record index {bad} out of range")));
        }
    }
    Ok(MlpLandscape { layout, data, indices })
}

impl Landscape for MlpLandscape<'_> {
    fn dim(&self) -> usize {
        self.layout.len
    }

    fn value(&self, theta: &[f64]) -> f64 {
        loss_and_grad_flat(self.layout, theta, self.data, self.indices, None).unwrap_or(f64::NAN)
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        if loss_and_grad_flat(self.layout, theta, self.data, self.indices, Some(out)).is_err() {
            out.fill(f64::NAN);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BatchSize {
    Full,
    Mini(usize),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub optim: OptimConfig,
    pub batch: BatchSize,
    pub epochs: usize,
    pub shuffle_seed: u64,
    /// Also evaluate the loss on the training set each epoch.
    pub record_train_loss: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub spec: MlpSpec,
    pub config: TrainConfig,
    pub seed: u64,
    /// Set when a step produced non-finite parameters; records stop at the
    /// last completed epoch.
    pub aborted: Option<String>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

fn record(layout: &MlpLayout, theta: &[f64], epoch: usize, train: &LabeledDataset, test: &LabeledDataset, with_train: bool) -> Result<EpochRecord> {
    let (test_loss, test_accuracy) = evaluate(layout, theta, test)?;
    let train_loss = if with_train {
        Some(evaluate(layout, theta, train)?.0)
    } else {
        None
    };
    Ok(EpochRecord {
        epoch,
        test_loss,
        test_accuracy,
        train_loss,
    })
}

/// Trains from [`init_params`] and records test metrics before the first
/// epoch (epoch 0) and after each epoch. Momentum and second-moment
/// accumulators carry over across minibatches and epochs.
pub fn train(spec: &MlpSpec, train_set: &LabeledDataset, test_set: &LabeledDataset, config: &TrainConfig) -> Result<TrainHistory> {
    let params = init_params(spec)?;
    train_from(spec, params, train_set, test_set, config)
}

pub fn train_from(
    spec: &MlpSpec,
    params: MlpParams,
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.optim.validate()?;
    if config.epochs == 0 {
        return Err(invalid("epochs must be positive"));
    }
    if let BatchSize::Mini(0) = config.batch {
        return Err(invalid("batch size must be positive"));
    }
    if params.layout != spec.layout() {
        return Err(invalid("parameters do not match the network spec"));
    }
    let layout = params.layout;
    check_data(&layout, train_set)?;
    check_data(&layout, test_set)?;
    if train_set.count == 0 {
        return Err(invalid("empty training set"));
    }

    let mut state = OptimState::new(params.flat);
    let mut history = TrainHistory {
        records: vec![record(&layout, &state.theta, 0, train_set, test_set, config.record_train_loss)?],
        spec: spec.clone(),
        config: config.clone(),
        seed: config.shuffle_seed,
        aborted: None,
    };
    let mut rng = SeededRng::new(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train_set.count).collect();

    'epochs: for epoch in 1..=config.epochs {
        match config.batch {
            BatchSize::Full => {
                let landscape = as_landscape(&layout, train_set, None)?;
                if let Err(e) = step(&mut state, &landscape, &config.optim) {
                    history.aborted = Some(format!("{e}"));
                    break 'epochs;
                }
            }
            BatchSize::Mini(size) => {
                rng.shuffle(&mut order);
                for batch in order.chunks(size) {
                    let landscape = as_landscape(&layout, train_set, Some(batch))?;
                    if let Err(e) = step(&mut state, &landscape, &config.optim) {
                        history.aborted = Some(format!("{e}"));
                        break 'epochs;
                    }
                }
            }
        }
        history
            .records
            .push(record(&layout, &state.theta, epoch, train_set, test_set, config.record_train_loss)?);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::finite_diff_gradient;

    fn toy_data(n: usize, dim: usize, classes: usize, seed: u64) -> LabeledDataset {
        let mut rng = SeededRng::new(seed);
        let images = (0..n * dim).map(|_| rng.uniform_open()).collect();
        let mut labels = vec![0.0; n * classes];
        for i in 0..n {
            labels[i * classes + (rng.uniform_open() * classes as f64) as usize % classes] = 1.0;
        }
        LabeledDataset::new(images, labels, dim, classes).unwrap()
    }

    #[test]
    fn layout_lengths() {
        let spec = MlpSpec::new(&[784, 30, 10], 0).unwrap();
        assert_eq!(spec.layout().len, 784 * 30 + 30 + 30 * 10 + 10);
        assert!(MlpSpec::new(&[5], 0).is_err());
        assert!(MlpSpec::new(&[5, 0, 2], 0).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let spec = MlpSpec::new(&[4, 3, 2], 9).unwrap();
        let p = init_params(&spec).unwrap();
        let back = MlpParams::flatten(&spec, &p.unflatten()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.unflatten()[1].weights.len(), 6);
    }

    #[test]
    fn init_statistics() {
        let spec = MlpSpec::new(&[784, 30, 10], 42).unwrap();
        let p = init_params(&spec).unwrap();
        let std = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            libm::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64)
        };
        let w = std(p.weights(0));
        assert!((w * 28.0 - 1.0).abs() < 0.05, "{w}");
        let biases: Vec<f64> = p.biases(0).iter().chain(p.biases(1)).copied().collect();
        // only 40 biases in this net: check a larger draw of the same stream instead
        let big = init_params(&MlpSpec::new(&[2, 4000], 42).unwrap()).unwrap();
        assert!((std(big.biases(0)) - 1.0).abs() < 0.05);
        assert_eq!(biases.len(), 40);
        assert_eq!(init_params(&spec).unwrap(), p);
    }

    #[test]
    fn zero_network_outputs_half() {
        let spec = MlpSpec::new(&[3, 4, 2], 0).unwrap();
        let out = forward(&MlpParams::zeros(&spec), &[0.1, 0.2, 0.3, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(out, vec![0.5; 4]);
        assert!(forward(&MlpParams::zeros(&spec), &[0.0; 4]).is_err());
    }

    #[test]
    fn output_bias_monotone() {
        let spec = MlpSpec::new(&[3, 4, 2], 5).unwrap();
        let mut p = init_params(&spec).unwrap();
        let x = [0.3, 0.6, 0.9];
        let before = forward(&p, &x).unwrap();
        p.biases_mut(1)[1] += 0.5;
        let after = forward(&p, &x).unwrap();
        assert!(after[1] > before[1]);
        assert_eq!(after[0], before[0]);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let spec = MlpSpec::new(&[4, 3, 2], 11).unwrap();
        let p = init_params(&spec).unwrap();
        let data = toy_data(5, 4, 2, 3);
        let (_, grad) = loss_and_grad(&p, &data, None).unwrap();
        let l = as_landscape(&p.layout, &data, None).unwrap();
        let fd = finite_diff_gradient(&l, &p.flat, 1e-5).unwrap();
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (a, b) in grad.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn perfect_outputs_have_zero_loss() {
        // saturating biases make the outputs exactly 0 or 1 in floating point
        let spec = MlpSpec::new(&[2, 2], 0).unwrap();
        let mut p = MlpParams::zeros(&spec);
        p.biases_mut(0).copy_from_slice(&[800.0, -800.0]);
        let data = LabeledDataset::new(vec![0.5, 0.5], vec![1.0, 0.0], 2, 2).unwrap();
        let (loss, grad) = loss_and_grad(&p, &data, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn batch_loss_is_mean() {
        let spec = MlpSpec::new(&[4, 3, 2], 1).unwrap();
        let p = init_params(&spec).unwrap();
        let data = toy_data(6, 4, 2, 8);
        let (full, _) = loss_and_grad(&p, &data, None).unwrap();
        let mean: f64 = (0..6).map(|i| loss_and_grad(&p, &data, Some(&[i])).unwrap().0).sum::<f64>() / 6.0;
        assert!((full - mean).abs() < 1e-12);
    }

    #[test]
    fn minibatch_gradients_average_to_full() {
        let spec = MlpSpec::new(&[4, 3, 2], 2).unwrap();
        let p = init_params(&spec).unwrap();
        let data = toy_data(6, 4, 2, 9);
        let (_, full) = loss_and_grad(&p, &data, None).unwrap();
        let (_, a) = loss_and_grad(&p, &data, Some(&[0, 1, 2])).unwrap();
        let (_, b) = loss_and_grad(&p, &data, Some(&[3, 4, 5])).unwrap();
        for i in 0..full.len() {
            assert!((full[i] - 0.5 * (a[i] + b[i])).abs() < 1e-14);
        }
        let l = as_landscape(&p.layout, &data, None).unwrap();
        let mut g = vec![0.0; p.layout.len];
        l.gradient(&p.flat, &mut g);
        assert_eq!(g, full);
    }

    fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for w in [IDX_IMAGE_MAGIC, count, rows, cols] {
            v.extend_from_slice(&w.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    #[test]
    fn idx_round_trip() {
        let mut pixels = vec![0u8; 2 * 784];
        pixels[0] = 255;
        pixels[784 + 5] = 51;
        let ds = dataset_from_idx(&idx_images(2, 28, 28, &pixels), &idx_labels(&[7, 0]), None).unwrap();
        assert_eq!((ds.count, ds.image_dim), (2, 784));
        assert_eq!(ds.images[0], 1.0);
        assert!((ds.image(1)[5] - 0.2).abs() < 1e-15);
        assert_eq!(ds.label(0), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(ds.class_of(1), 0);
        let one = dataset_from_idx(&idx_images(2, 28, 28, &pixels), &idx_labels(&[7, 0]), Some(1)).unwrap();
        assert_eq!(one.count, 1);
    }

    #[test]
    fn idx_errors() {
        let pixels = vec![0u8; 2 * 4];
        let imgs = idx_images(2, 2, 2, &pixels);
        let mut bad = imgs.clone();
        bad[3] = 0x01;
        assert!(matches!(parse_idx_images(&bad, None), Err(Error::BadMagic { found: 0x801, .. })));
        assert!(matches!(parse_idx_images(&imgs[..20], None), Err(Error::TruncatedFile { .. })));
        assert!(matches!(parse_idx_images(&imgs[..2], None), Err(Error::TruncatedFile { .. })));
        assert!(matches!(parse_idx_labels(&idx_labels(&[1, 2])[..9], None), Err(Error::TruncatedFile { .. })));
        assert!(matches!(
            dataset_from_idx(&imgs, &idx_labels(&[1, 2, 3]), None),
            Err(Error::CountMismatch { images: 2, labels: 3 })
        ));
        assert!(dataset_from_idx(&imgs, &idx_labels(&[1, 12]), None).is_err());
    }

    fn train_cfg(sigma: f64, batch: BatchSize, epochs: usize) -> TrainConfig {
        TrainConfig {
            optim: OptimConfig::momentum(0.5, 0.9, sigma),
            batch,
            epochs,
            shuffle_seed: 4,
            record_train_loss: true,
        }
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let spec = MlpSpec::new(&[6, 5, 3], 3).unwrap();
        let train_set = toy_data(40, 6, 3, 1);
        let test_set = toy_data(10, 6, 3, 2);
        let cfg = train_cfg(1.0, BatchSize::Mini(7), 5);
        let a = train(&spec, &train_set, &test_set, &cfg).unwrap();
        let b = train(&spec, &train_set, &test_set, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 6);
        assert!(a.records.iter().all(|r| (0.0..=1.0).contains(&r.test_accuracy)));
        let full = train(&spec, &train_set, &test_set, &train_cfg(1.0, BatchSize::Full, 3)).unwrap();
        assert!(full.records[1].train_loss.unwrap() < full.records[0].train_loss.unwrap());
    }

    #[test]
    fn non_finite_training_aborts_with_history() {
        let spec = MlpSpec::new(&[3, 2], 0).unwrap();
        let train_set = toy_data(4, 3, 2, 1);
        let mut cfg = train_cfg(0.0, BatchSize::Full, 5);
        cfg.optim.eta = 1e300;
        let h = train(&spec, &train_set, &train_set, &cfg).unwrap();
        assert!(h.aborted.is_some());
        assert_eq!(h.records.len(), 1);
    }
}
