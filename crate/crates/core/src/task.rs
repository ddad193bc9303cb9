//! Compact trainable classifier standing in for a large vision pipeline:
//! a two-layer tanh encoder, binary quantizer, and two-layer softmax decoder
//! over synthetic Gaussian-cluster data.
//!
//! The decoder path is smooth, so the gradient of the target-class
//! probability with respect to the dequantized feature input is available in
//! closed form; that gradient feeds the importance analyzer.
//!
//! Training runs mini-batch gradient descent on cross-entropy with a
//! straight-through estimator at the quantizer. Channel damage is injected
//! while training: each bit flips independently with `train_bitflip_prob`
//! and each feature channel is zero-masked with `train_mask_drop_prob`, so
//! the decoder learns to tolerate both bit errors and untransmitted
//! channels. All randomness derives from the config seed; identical config
//! and data reproduce bit-identical parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{ChannelMask, FeatureShape, SemanticFeature};
use crate::seed::{self, domain};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Distance between the closest pair of class means, in units of the unit
/// within-class standard deviation.
pub const MEAN_SEPARATION: f64 = 4.5;

/// Bit-flip probability of the default training channel: the closed-form
/// Rayleigh BER at 0 dB.
pub fn default_train_bitflip_prob() -> f64 {
    0.5 * (1.0 - 0.5f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskModelConfig {
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden_dim: usize,
    pub shape: FeatureShape,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_bitflip_prob: f64,
    pub train_mask_drop_prob: f64,
    pub seed: u64,
}

impl TaskModelConfig {
    /// Desk-scale defaults: trains in seconds and leaves room for a
    /// meaningful importance spread across 16 channels.
    pub fn desk_default(seed: u64) -> Self {
        Self {
            input_dim: 32,
            num_classes: 10,
            hidden_dim: 64,
            shape: FeatureShape {
                length: 8,
                channels: 16,
                bits_per_element: 1,
            },
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 64,
            train_bitflip_prob: default_train_bitflip_prob(),
            train_mask_drop_prob: 0.3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.num_classes == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidArgument(
                "all model dimensions must be >= 1".into(),
            ));
        }
        FeatureShape::new(
            self.shape.length,
            self.shape.channels,
            self.shape.bits_per_element,
        )?;
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be >= 1".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.train_bitflip_prob) {
            return Err(Error::InvalidArgument(format!(
                "train_bitflip_prob must lie in [0, 0.5], got {}",
                self.train_bitflip_prob
            )));
        }
        if !(0.0..=1.0).contains(&self.train_mask_drop_prob) {
            return Err(Error::InvalidArgument(format!(
                "train_mask_drop_prob must lie in [0, 1], got {}",
                self.train_mask_drop_prob
            )));
        }
        Ok(())
    }

    fn feature_elements(&self) -> usize {
        self.shape.length * self.shape.channels
    }
}

/// One labeled sample of the synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Decoder output for one feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Softmax probabilities over the K classes.
    pub probabilities: Vec<f64>,
    /// Argmax class; ties break toward the lowest index.
    pub predicted_class: usize,
    /// Probability at the reference class (the argmax when no reference was
    /// given).
    pub target_prob: f64,
}

/// Encoder/decoder parameters. Immutable once trained; inference and
/// gradient calls are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    config: TaskModelConfig,
    // Encoder: input -> hidden -> L*C, tanh after each affine layer.
    pub(crate) enc_w1: Vec<f64>, // hidden x input, row-major
    pub(crate) enc_b1: Vec<f64>,
    pub(crate) enc_w2: Vec<f64>, // (L*C) x hidden
    pub(crate) enc_b2: Vec<f64>,
    // Decoder: L*C -> hidden (tanh) -> K (softmax).
    pub(crate) dec_w1: Vec<f64>, // hidden x (L*C)
    pub(crate) dec_b1: Vec<f64>,
    pub(crate) dec_w2: Vec<f64>, // K x hidden
    pub(crate) dec_b2: Vec<f64>,
}

/// `y = W x + b` for a row-major `rows x cols` matrix.
fn affine(w: &[f64], b: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut y = b.to_vec();
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        y[r] += acc;
    }
    y
}

/// `g_in = W^T g_out` for a row-major `rows x cols` matrix.
fn affine_backward(w: &[f64], g_out: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut g_in = vec![0.0; cols];
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let g = g_out[r];
        for c in 0..cols {
            g_in[c] += row[c] * g;
        }
    }
    g_in
}

fn tanh_inplace(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.tanh();
    }
}

/// Numerically stable softmax.
fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax_lowest_tie(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl TaskModel {
    pub fn config(&self) -> &TaskModelConfig {
        &self.config
    }

    pub fn shape(&self) -> FeatureShape {
        self.config.shape
    }

    /// Glorot-uniform initialization; biases start at zero.
    fn init(config: &TaskModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let f = config.feature_elements();
        let (d, h, k) = (config.input_dim, config.hidden_dim, config.num_classes);
        let mut layer = |rows: usize, cols: usize| -> Vec<f64> {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect()
        };
        Self {
            config: *config,
            enc_w1: layer(h, d),
            enc_b1: vec![0.0; h],
            enc_w2: layer(f, h),
            enc_b2: vec![0.0; f],
            dec_w1: layer(h, f),
            dec_b1: vec![0.0; h],
            dec_w2: layer(k, h),
            dec_b2: vec![0.0; k],
        }
    }

    /// Continuous semantic feature for one sample: an L*C grid in (-1, 1),
    /// channel-major (`[channel * L + position]`).
    pub fn encode(&self, sample: &DataSample) -> Result<Vec<f64>> {
        let cfg = &self.config;
        if sample.features.len() != cfg.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "sample has {} features, model wants {}",
                sample.features.len(),
                cfg.input_dim
            )));
        }
        let mut hidden = affine(
            &self.enc_w1,
            &self.enc_b1,
            &sample.features,
            cfg.hidden_dim,
            cfg.input_dim,
        );
        tanh_inplace(&mut hidden);
        let mut out = affine(
            &self.enc_w2,
            &self.enc_b2,
            &hidden,
            cfg.feature_elements(),
            cfg.hidden_dim,
        );
        tanh_inplace(&mut out);
        Ok(out)
    }

    /// Task prediction from a dequantized feature grid.
    ///
    /// `reference_class` selects which probability lands in `target_prob`;
    /// when absent the argmax class is used (the transmitter-side choice
    /// when no label is available).
    pub fn decode(&self, feature: &[f64], reference_class: Option<usize>) -> Result<Prediction> {
        let cfg = &self.config;
        if feature.len() != cfg.feature_elements() {
            return Err(Error::DimensionMismatch(format!(
                "feature has {} elements, model wants {}",
                feature.len(),
                cfg.feature_elements()
            )));
        }
        if let Some(r) = reference_class {
            if r >= cfg.num_classes {
                return Err(Error::InvalidArgument(format!(
                    "reference class {r} out of range 0..{}",
                    cfg.num_classes
                )));
            }
        }
        let mut hidden = affine(
            &self.dec_w1,
            &self.dec_b1,
            feature,
            cfg.hidden_dim,
            cfg.feature_elements(),
        );
        tanh_inplace(&mut hidden);
        let logits = affine(
            &self.dec_w2,
            &self.dec_b2,
            &hidden,
            cfg.num_classes,
            cfg.hidden_dim,
        );
        let probabilities = softmax(&logits);
        let predicted_class = argmax_lowest_tie(&probabilities);
        let target_prob = probabilities[reference_class.unwrap_or(predicted_class)];
        Ok(Prediction {
            probabilities,
            predicted_class,
            target_prob,
        })
    }

    /// Exact gradient of the reference-class probability with respect to the
    /// decoder's feature input, channel-major like the feature itself.
    ///
    /// With `p = softmax(W2 tanh(W1 f + b1) + b2)` and target index `r`:
    /// `dp_r/dz2 = p_r (e_r - p)`, then back through the tanh layer.
    pub fn gradient_wrt_feature(
        &self,
        feature: &[f64],
        reference_class: usize,
    ) -> Result<Vec<f64>> {
        let cfg = &self.config;
        if feature.len() != cfg.feature_elements() {
            return Err(Error::DimensionMismatch(format!(
                "feature has {} elements, model wants {}",
                feature.len(),
                cfg.feature_elements()
            )));
        }
        if reference_class >= cfg.num_classes {
            return Err(Error::InvalidArgument(format!(
                "reference class {reference_class} out of range 0..{}",
                cfg.num_classes
            )));
        }
        let (h, f, k) = (cfg.hidden_dim, cfg.feature_elements(), cfg.num_classes);
        let mut hidden = affine(&self.dec_w1, &self.dec_b1, feature, h, f);
        tanh_inplace(&mut hidden);
        let logits = affine(&self.dec_w2, &self.dec_b2, &hidden, k, h);
        let probs = softmax(&logits);

        let pr = probs[reference_class];
        let g_logits: Vec<f64> = (0..k)
            .map(|j| {
                let indicator = if j == reference_class { 1.0 } else { 0.0 };
                pr * (indicator - probs[j])
            })
            .collect();
        let g_hidden = affine_backward(&self.dec_w2, &g_logits, k, h);
        let g_pre: Vec<f64> = g_hidden
            .iter()
            .zip(&hidden)
            .map(|(g, t)| g * (1.0 - t * t))
            .collect();
        Ok(affine_backward(&self.dec_w1, &g_pre, h, f))
    }

    /// Clean-channel inference: encode, quantize, dequantize with every
    /// channel selected, decode.
    pub fn infer_clean(
        &self,
        sample: &DataSample,
        reference_class: Option<usize>,
    ) -> Result<Prediction> {
        let continuous = self.encode(sample)?;
        let quantized = quantize(&continuous, self.config.shape)?;
        let full = ChannelMask::full(self.config.shape.channels);
        let restored = dequantize(&quantized, &full)?;
        self.decode(&restored, reference_class)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: self.config,
            enc_w1: self.enc_w1.clone(),
            enc_b1: self.enc_b1.clone(),
            enc_w2: self.enc_w2.clone(),
            enc_b2: self.enc_b2.clone(),
            dec_w1: self.dec_w1.clone(),
            dec_b1: self.dec_b1.clone(),
            dec_w2: self.dec_w2.clone(),
            dec_b2: self.dec_b2.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::MalformedDocument(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        file.config.validate()?;
        let cfg = &file.config;
        let f = cfg.feature_elements();
        let (d, h, k) = (cfg.input_dim, cfg.hidden_dim, cfg.num_classes);
        let expect = [
            (file.enc_w1.len(), h * d, "enc_w1"),
            (file.enc_b1.len(), h, "enc_b1"),
            (file.enc_w2.len(), f * h, "enc_w2"),
            (file.enc_b2.len(), f, "enc_b2"),
            (file.dec_w1.len(), h * f, "dec_w1"),
            (file.dec_b1.len(), h, "dec_b1"),
            (file.dec_w2.len(), k * h, "dec_w2"),
            (file.dec_b2.len(), k, "dec_b2"),
        ];
        for (got, want, name) in expect {
            if got != want {
                return Err(Error::MalformedDocument(format!(
                    "{name} has {got} values, config wants {want}"
                )));
            }
        }
        Ok(Self {
            config: file.config,
            enc_w1: file.enc_w1,
            enc_b1: file.enc_b1,
            enc_w2: file.enc_w2,
            enc_b2: file.enc_b2,
            dec_w1: file.dec_w1,
            dec_b1: file.dec_b1,
            dec_w2: file.dec_w2,
            dec_b2: file.dec_b2,
        })
    }
}

/// On-disk model layout: config plus flat parameter arrays in layer order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    config: TaskModelConfig,
    enc_w1: Vec<f64>,
    enc_b1: Vec<f64>,
    enc_w2: Vec<f64>,
    enc_b2: Vec<f64>,
    dec_w1: Vec<f64>,
    dec_b1: Vec<f64>,
    dec_w2: Vec<f64>,
    dec_b2: Vec<f64>,
}

/// Binary quantization: symbol 1 where the continuous value is >= 0, else 0.
pub fn quantize(continuous: &[f64], shape: FeatureShape) -> Result<SemanticFeature> {
    if shape.bits_per_element != 1 {
        return Err(Error::InvalidArgument(format!(
            "quantizer implements b = 1 (binary symbols), shape has b = {}",
            shape.bits_per_element
        )));
    }
    if continuous.len() != shape.elements() {
        return Err(Error::DimensionMismatch(format!(
            "continuous grid has {} elements, shape wants {}",
            continuous.len(),
            shape.elements()
        )));
    }
    let values = continuous.iter().map(|&a| u32::from(a >= 0.0)).collect();
    SemanticFeature::new(shape, values)
}

/// Maps symbols back to +/-1 on selected channels and 0.0 on masked ones.
pub fn dequantize(x: &SemanticFeature, mask: &ChannelMask) -> Result<Vec<f64>> {
    let shape = x.shape();
    if shape.bits_per_element != 1 {
        return Err(Error::InvalidArgument(format!(
            "dequantizer implements b = 1 (binary symbols), shape has b = {}",
            shape.bits_per_element
        )));
    }
    if mask.channels() != shape.channels {
        return Err(Error::DimensionMismatch(format!(
            "mask covers {} channels, feature has {}",
            mask.channels(),
            shape.channels
        )));
    }
    let mut out = vec![0.0; shape.elements()];
    for k in 0..shape.channels {
        if !mask.is_selected(k) {
            continue;
        }
        for i in 0..shape.length {
            out[k * shape.length + i] = if x.get(i, k) == 1 { 1.0 } else { -1.0 };
        }
    }
    Ok(out)
}

/// K Gaussian class clusters in `input_dim` dimensions with unit
/// within-class standard deviation and minimum class-mean separation of 4.
/// Labels are assigned round-robin, so counts balance to within one.
///
/// The cluster means are a property of the task and derive from
/// `config.seed` alone; the call seed drives only the per-sample noise.
/// Datasets drawn with different call seeds are therefore fresh draws from
/// the same classification problem and can serve as train/test/eval splits
/// for one model.
pub fn generate_dataset(n: usize, config: &TaskModelConfig, seed: u64) -> Result<Vec<DataSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be >= 1".into()));
    }
    config.validate()?;
    let d = config.input_dim;
    let k = config.num_classes;
    let mut means_rng = seed::rng_from(config.seed, &[domain::DATASET, 0]);
    let mut rng = seed::rng_from(seed, &[domain::DATASET, 1]);

    let mut means: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| standard_normal(&mut means_rng)).collect())
        .collect();
    // Rescale so the closest pair of means sits exactly MEAN_SEPARATION
    // sigma apart. Randomly drawn means in high dimension land far apart,
    // which would make the task trivially easy and saturate every accuracy
    // curve; pinning the worst-case margin keeps difficulty stable across
    // task seeds while honoring the >= 4 sigma separation floor.
    let mut min_dist = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let dist: f64 = means[i]
                .iter()
                .zip(&means[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            min_dist = min_dist.min(dist);
        }
    }
    if min_dist.is_finite() && min_dist > 0.0 {
        let scale = MEAN_SEPARATION / min_dist;
        for mean in &mut means {
            for v in mean.iter_mut() {
                *v *= scale;
            }
        }
    }

    let samples = (0..n)
        .map(|j| {
            let label = j % k;
            let features = means[label]
                .iter()
                .map(|&mu| mu + standard_normal(&mut rng))
                .collect();
            DataSample { features, label }
        })
        .collect();
    Ok(samples)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, cosine branch only; the dataset generator is not on a hot
    // path, so half the pair is discarded for simplicity.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Dataset as CSV: `f0..f{D-1},label` header, one row per sample.
pub fn dataset_to_csv(samples: &[DataSample]) -> String {
    let d = samples.first().map_or(0, |s| s.features.len());
    let mut out = String::new();
    for i in 0..d {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for s in samples {
        for v in &s.features {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", s.label));
    }
    out
}

pub fn dataset_from_csv(text: &str) -> Result<Vec<DataSample>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedDocument("empty dataset file".into()))?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    if columns.last() != Some(&"label") || columns.len() < 2 {
        return Err(Error::MalformedDocument(
            "dataset header must be f0..fN,label".into(),
        ));
    }
    let d = columns.len() - 1;
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::MalformedDocument(format!(
                "row {row} has {} fields, expected {}",
                fields.len(),
                d + 1
            )));
        }
        let features = fields[..d]
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::MalformedDocument(format!("row {row}: {e}")))?;
        let label = fields[d]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::MalformedDocument(format!("row {row} label: {e}")))?;
        samples.push(DataSample { features, label });
    }
    Ok(samples)
}

struct Gradients {
    enc_w1: Vec<f64>,
    enc_b1: Vec<f64>,
    enc_w2: Vec<f64>,
    enc_b2: Vec<f64>,
    dec_w1: Vec<f64>,
    dec_b1: Vec<f64>,
    dec_w2: Vec<f64>,
    dec_b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(model: &TaskModel) -> Self {
        Self {
            enc_w1: vec![0.0; model.enc_w1.len()],
            enc_b1: vec![0.0; model.enc_b1.len()],
            enc_w2: vec![0.0; model.enc_w2.len()],
            enc_b2: vec![0.0; model.enc_b2.len()],
            dec_w1: vec![0.0; model.dec_w1.len()],
            dec_b1: vec![0.0; model.dec_b1.len()],
            dec_w2: vec![0.0; model.dec_w2.len()],
            dec_b2: vec![0.0; model.dec_b2.len()],
        }
    }
}

/// `acc[r * cols + c] += g[r] * x[c]`.
fn outer_accumulate(acc: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        let row = &mut acc[r * cols..(r + 1) * cols];
        for c in 0..cols {
            row[c] += gr * x[c];
        }
    }
}

fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d -= scale * s;
    }
}

/// Trains a model on the dataset with the config's optimizer settings.
/// Deterministic: the same config and data give bit-identical parameters.
pub fn train(config: &TaskModelConfig, dataset: &[DataSample]) -> Result<TaskModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    for (i, s) in dataset.iter().enumerate() {
        if s.features.len() != config.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} has {} features, config wants {}",
                s.features.len(),
                config.input_dim
            )));
        }
        if s.label >= config.num_classes {
            return Err(Error::InvalidArgument(format!(
                "sample {i} label {} out of range 0..{}",
                s.label, config.num_classes
            )));
        }
    }

    let mut rng = seed::rng_from(config.seed, &[domain::TRAIN]);
    let mut model = TaskModel::init(config, &mut rng);
    let (d, h, k) = (config.input_dim, config.hidden_dim, config.num_classes);
    let f = config.feature_elements();
    let (length, channels) = (config.shape.length, config.shape.channels);

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..config.epochs {
        // Fisher-Yates driven by the training stream.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(&model);
            let mut batch_loss = 0.0;
            for &idx in batch {
                let sample = &dataset[idx];

                // Forward with channel damage.
                let mut h1 = affine(&model.enc_w1, &model.enc_b1, &sample.features, h, d);
                tanh_inplace(&mut h1);
                let mut a = affine(&model.enc_w2, &model.enc_b2, &h1, f, h);
                tanh_inplace(&mut a);

                // Quantize to +/-1, flip bits, drop channels. `pass[e]` is
                // the straight-through factor from the damaged feature back
                // to the continuous one.
                let mut damaged = vec![0.0; f];
                let mut pass = vec![0.0; f];
                let flips: Vec<f64> = (0..f)
                    .map(|_| {
                        if rng.gen::<f64>() < config.train_bitflip_prob {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                let keep: Vec<f64> = (0..channels)
                    .map(|_| {
                        if rng.gen::<f64>() < config.train_mask_drop_prob {
                            0.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                for (ch, &keep_ch) in keep.iter().enumerate() {
                    for pos in 0..length {
                        let e = ch * length + pos;
                        let symbol = if a[e] >= 0.0 { 1.0 } else { -1.0 };
                        let factor = keep_ch * flips[e];
                        damaged[e] = factor * symbol;
                        pass[e] = factor;
                    }
                }

                let mut h3 = affine(&model.dec_w1, &model.dec_b1, &damaged, h, f);
                tanh_inplace(&mut h3);
                let logits = affine(&model.dec_w2, &model.dec_b2, &h3, k, h);
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_sum: f64 = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
                batch_loss += log_sum - logits[sample.label];
                let probs: Vec<f64> = logits.iter().map(|z| (z - log_sum).exp()).collect();

                // Backward.
                let mut g_logits = probs;
                g_logits[sample.label] -= 1.0;
                outer_accumulate(&mut grads.dec_w2, &g_logits, &h3);
                for (gb, g) in grads.dec_b2.iter_mut().zip(&g_logits) {
                    *gb += g;
                }
                let g_h3 = affine_backward(&model.dec_w2, &g_logits, k, h);
                let g_z3: Vec<f64> = g_h3
                    .iter()
                    .zip(&h3)
                    .map(|(g, t)| g * (1.0 - t * t))
                    .collect();
                outer_accumulate(&mut grads.dec_w1, &g_z3, &damaged);
                for (gb, g) in grads.dec_b1.iter_mut().zip(&g_z3) {
                    *gb += g;
                }
                let g_damaged = affine_backward(&model.dec_w1, &g_z3, h, f);
                // Straight-through at the quantizer; the mask and flips are
                // plain multiplicative factors.
                let g_a: Vec<f64> = g_damaged.iter().zip(&pass).map(|(g, p)| g * p).collect();
                let g_z2: Vec<f64> = g_a.iter().zip(&a).map(|(g, t)| g * (1.0 - t * t)).collect();
                outer_accumulate(&mut grads.enc_w2, &g_z2, &h1);
                for (gb, g) in grads.enc_b2.iter_mut().zip(&g_z2) {
                    *gb += g;
                }
                let g_h1 = affine_backward(&model.enc_w2, &g_z2, f, h);
                let g_z1: Vec<f64> = g_h1
                    .iter()
                    .zip(&h1)
                    .map(|(g, t)| g * (1.0 - t * t))
                    .collect();
                outer_accumulate(&mut grads.enc_w1, &g_z1, &sample.features);
                for (gb, g) in grads.enc_b1.iter_mut().zip(&g_z1) {
                    *gb += g;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            let scale = config.learning_rate / batch.len() as f64;
            axpy(&mut model.enc_w1, &grads.enc_w1, scale);
            axpy(&mut model.enc_b1, &grads.enc_b1, scale);
            axpy(&mut model.enc_w2, &grads.enc_w2, scale);
            axpy(&mut model.enc_b2, &grads.enc_b2, scale);
            axpy(&mut model.dec_w1, &grads.dec_w1, scale);
            axpy(&mut model.dec_b1, &grads.dec_b1, scale);
            axpy(&mut model.dec_w2, &grads.dec_w2, scale);
            axpy(&mut model.dec_b2, &grads.dec_b2, scale);
        }
    }
    Ok(model)
}

/// Fraction of samples the clean pipeline classifies correctly.
pub fn clean_accuracy(model: &TaskModel, samples: &[DataSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let mut correct = 0usize;
    for s in samples {
        if model.infer_clean(s, None)?.predicted_class == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// A model with freshly initialized (untrained) parameters; gradient and
/// inference checks use this to sample random networks.
pub fn random_model(config: &TaskModelConfig) -> Result<TaskModel> {
    config.validate()?;
    let mut rng = seed::rng_from(config.seed, &[domain::TRAIN]);
    Ok(TaskModel::init(config, &mut rng))
}
