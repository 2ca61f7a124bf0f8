//! Inference-accuracy proxy for approximate multipliers.
//!
//! Runs a small pretrained classifier with the approximate multiplier
//! injected into the bfloat16 MAC path, measures the accuracy drop against
//! exact arithmetic, and selects the most area-efficient multiplier whose
//! drop stays within a threshold. Only the mantissa multiplication is
//! approximated; accumulation, bias addition and activations run in plain
//! 32-bit float, and every per-sample reduction follows a fixed index order
//! so results are identical across runs and platforms.
//!
//! # File formats
//!
//! The model is a JSON document (see [`TinyModel`]): input shape, the
//! exact-arithmetic accuracy recorded at training time, and an ordered
//! layer list. Convolution weights flatten `[out_ch][in_ch][kh][kw]` and
//! dense weights `[out][in]`, row-major; weights apply as bfloat16 (values
//! truncate at each multiply), biases add in f32. Layer activations feed
//! the next layer through the same bfloat16 truncation.
//!
//! The evaluation set is two flat binaries plus a JSON sidecar
//! ([`DatasetMeta`]): `count * channels * height * width` sample bytes
//! (pixel intensities 0..=255, scaled to [0, 1] on load) and `count` label
//! bytes.

mod bf16;

pub use bf16::{bf16_approx_product, Bf16};

use serde::{Deserialize, Serialize};

use crate::approxmul::{MultiplierRecord, MultiplierSpec};
use crate::error::{Error, Result};

/// Per-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    None,
    Relu,
}

impl Activation {
    fn apply(self, x: f32) -> f32 {
        match self {
            Activation::None => x,
            Activation::Relu => x.max(0.0),
        }
    }
}

/// One model layer. Weights are stored as 32-bit floats and truncated to
/// bfloat16 at each multiplication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelLayer {
    /// 2D convolution; weights laid out `[out_ch][in_ch][kh][kw]`.
    Conv {
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    /// Fully connected over the flattened input; weights `[out][in]`.
    Dense {
        out_features: usize,
        activation: Activation,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
}

/// A small feed-forward classifier; the final class is the argmax of the
/// last layer's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TinyModel {
    pub name: String,
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    /// Accuracy on the bundled evaluation set with the EXACT multiplier,
    /// recorded when the model was trained.
    pub exact_accuracy: f64,
    pub layers: Vec<ModelLayer>,
}

impl TinyModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let model: TinyModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    /// Checks layer shape chaining and weight finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config(format!("model `{}` has no layers", self.name)));
        }
        let mut shape = (self.input_channels, self.input_height, self.input_width);
        for (idx, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| Error::Config(format!("model `{}` layer {idx}: {msg}", self.name));
            match layer {
                ModelLayer::Conv {
                    out_channels,
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                    weights,
                    bias,
                    ..
                } => {
                    let (c, h, w) = shape;
                    if *stride == 0 || *kernel_h == 0 || *kernel_w == 0 || *out_channels == 0 {
                        return Err(bad("zero-sized convolution parameter".into()));
                    }
                    let h_span = h + 2 * padding;
                    let w_span = w + 2 * padding;
                    if h_span < *kernel_h || w_span < *kernel_w {
                        return Err(bad("kernel larger than padded input".into()));
                    }
                    let oh = (h_span - kernel_h) / stride + 1;
                    let ow = (w_span - kernel_w) / stride + 1;
                    if weights.len() != out_channels * c * kernel_h * kernel_w {
                        return Err(bad(format!(
                            "weight count {} does not match {out_channels}x{c}x{kernel_h}x{kernel_w}",
                            weights.len()
                        )));
                    }
                    if bias.len() != *out_channels {
                        return Err(bad("bias length mismatch".into()));
                    }
                    shape = (*out_channels, oh, ow);
                }
                ModelLayer::Dense {
                    out_features,
                    weights,
                    bias,
                    ..
                } => {
                    let in_features = shape.0 * shape.1 * shape.2;
                    if weights.len() != out_features * in_features {
                        return Err(bad(format!(
                            "weight count {} does not match {out_features}x{in_features}",
                            weights.len()
                        )));
                    }
                    if bias.len() != *out_features {
                        return Err(bad("bias length mismatch".into()));
                    }
                    shape = (*out_features, 1, 1);
                }
            }
            let finite = match layer {
                ModelLayer::Conv { weights, bias, .. } | ModelLayer::Dense { weights, bias, .. } => {
                    weights.iter().chain(bias).all(|v| v.is_finite())
                }
            };
            if !finite {
                return Err(bad("non-finite weight or bias".into()));
            }
        }
        Ok(())
    }

    /// Number of output classes (size of the last layer).
    pub fn num_classes(&self) -> usize {
        match self.layers.last() {
            Some(ModelLayer::Conv { out_channels, .. }) => *out_channels,
            Some(ModelLayer::Dense { out_features, .. }) => *out_features,
            None => 0,
        }
    }
}

/// Flat evaluation set: byte-valued samples plus one label byte each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

/// Sidecar metadata describing the flat sample/label binaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub count: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
}

impl Dataset {
    /// Assembles a dataset from its metadata document and the two flat
    /// binaries (`count * c * h * w` sample bytes, `count` label bytes).
    pub fn from_parts(meta_json: &str, pixels: &[u8], labels: &[u8]) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_str(meta_json)?;
        let expected = meta.count * meta.channels * meta.height * meta.width;
        if pixels.len() != expected {
            return Err(Error::Config(format!(
                "dataset sample file holds {} bytes, metadata implies {expected}",
                pixels.len()
            )));
        }
        if labels.len() != meta.count {
            return Err(Error::Config(format!(
                "dataset label file holds {} labels, metadata says {}",
                labels.len(),
                meta.count
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= meta.classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {} classes",
                meta.classes
            )));
        }
        Ok(Dataset {
            channels: meta.channels,
            height: meta.height,
            width: meta.width,
            classes: meta.classes,
            pixels: pixels.to_vec(),
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sample `i` as floats in [0, 1].
    pub fn input(&self, i: usize) -> Vec<f32> {
        let stride = self.channels * self.height * self.width;
        self.pixels[i * stride..(i + 1) * stride]
            .iter()
            .map(|&p| p as f32 / 255.0)
            .collect()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }
}

/// Accuracy comparison of one multiplier against exact arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub multiplier_id: String,
    pub exact_accuracy: f64,
    pub approx_accuracy: f64,
    /// `exact_accuracy - approx_accuracy`, in absolute accuracy points.
    /// Negative when the approximation happens to help.
    pub delta_a: f64,
}

fn layer_forward(
    layer: &ModelLayer,
    spec: &MultiplierSpec,
    shape: (usize, usize, usize),
    data: &[f32],
) -> Result<((usize, usize, usize), Vec<f32>)> {
    let mul = |a: f32, b: f32| bf16_approx_product(spec, Bf16::from_f32(a), Bf16::from_f32(b));
    match layer {
        ModelLayer::Conv {
            out_channels,
            kernel_h,
            kernel_w,
            stride,
            padding,
            activation,
            weights,
            bias,
        } => {
            let (c_in, h, w) = shape;
            let oh = (h + 2 * padding - kernel_h) / stride + 1;
            let ow = (w + 2 * padding - kernel_w) / stride + 1;
            let mut out = vec![0.0f32; out_channels * oh * ow];
            for k in 0..*out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = 0.0f32;
                        for c in 0..c_in {
                            for ky in 0..*kernel_h {
                                for kx in 0..*kernel_w {
                                    let iy = (oy * stride + ky) as isize - *padding as isize;
                                    let ix = (ox * stride + kx) as isize - *padding as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    let x = data[(c * h + iy as usize) * w + ix as usize];
                                    let wt = weights
                                        [((k * c_in + c) * kernel_h + ky) * kernel_w + kx];
                                    acc += mul(x, wt)?;
                                }
                            }
                        }
                        out[(k * oh + oy) * ow + ox] = activation.apply(acc + bias[k]);
                    }
                }
            }
            Ok(((*out_channels, oh, ow), out))
        }
        ModelLayer::Dense {
            out_features,
            activation,
            weights,
            bias,
        } => {
            let in_features = shape.0 * shape.1 * shape.2;
            let mut out = vec![0.0f32; *out_features];
            for o in 0..*out_features {
                let mut acc = 0.0f32;
                for i in 0..in_features {
                    acc += mul(data[i], weights[o * in_features + i])?;
                }
                out[o] = activation.apply(acc + bias[o]);
            }
            Ok(((*out_features, 1, 1), out))
        }
    }
}

/// Runs one input through the model with the given significand multiplier
/// and returns the predicted class (lowest index wins ties).
pub fn forward_inference(model: &TinyModel, input: &[f32], spec: &MultiplierSpec) -> Result<usize> {
    let mut shape = (model.input_channels, model.input_height, model.input_width);
    let expected = shape.0 * shape.1 * shape.2;
    if input.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "input has {} elements, model `{}` expects {expected}",
            input.len(),
            model.name
        )));
    }
    let mut data = input.to_vec();
    for layer in &model.layers {
        let (next_shape, next) = layer_forward(layer, spec, shape, &data)?;
        shape = next_shape;
        data = next;
    }
    let mut best = 0usize;
    for (i, &v) in data.iter().enumerate() {
        if v > data[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Classification accuracy of the model over the dataset with the given
/// multiplier.
pub fn measure_accuracy(model: &TinyModel, dataset: &Dataset, spec: &MultiplierSpec) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let mut correct = 0usize;
    for i in 0..dataset.len() {
        if forward_inference(model, &dataset.input(i), spec)? == dataset.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Measures accuracy drops against a cached exact-arithmetic baseline.
pub struct AccuracyEvaluator<'a> {
    model: &'a TinyModel,
    dataset: &'a Dataset,
    exact_spec: MultiplierSpec,
    exact_accuracy: f64,
}

impl<'a> AccuracyEvaluator<'a> {
    /// Evaluates the exact baseline once for the (model, dataset) pair.
    pub fn new(model: &'a TinyModel, dataset: &'a Dataset, width: u32) -> Result<Self> {
        if model.input_channels != dataset.channels
            || model.input_height != dataset.height
            || model.input_width != dataset.width
        {
            return Err(Error::InvalidArgument(format!(
                "dataset shape {}x{}x{} does not match model input {}x{}x{}",
                dataset.channels,
                dataset.height,
                dataset.width,
                model.input_channels,
                model.input_height,
                model.input_width
            )));
        }
        let exact_spec = MultiplierSpec::exact(width)?;
        let exact_accuracy = measure_accuracy(model, dataset, &exact_spec)?;
        Ok(AccuracyEvaluator {
            model,
            dataset,
            exact_spec,
            exact_accuracy,
        })
    }

    pub fn exact_accuracy(&self) -> f64 {
        self.exact_accuracy
    }

    /// Accuracy drop of one multiplier. The exact spec reuses the cached
    /// baseline without a second pass.
    pub fn accuracy_drop(&self, spec: &MultiplierSpec) -> Result<AccuracyRecord> {
        let approx_accuracy = if *spec == self.exact_spec {
            self.exact_accuracy
        } else {
            measure_accuracy(self.model, self.dataset, spec)?
        };
        Ok(AccuracyRecord {
            multiplier_id: spec.id(),
            exact_accuracy: self.exact_accuracy,
            approx_accuracy,
            delta_a: self.exact_accuracy - approx_accuracy,
        })
    }
}

/// One-shot accuracy drop for a single spec.
pub fn accuracy_drop(
    model: &TinyModel,
    dataset: &Dataset,
    spec: &MultiplierSpec,
) -> Result<AccuracyRecord> {
    AccuracyEvaluator::new(model, dataset, spec.width)?.accuracy_drop(spec)
}

/// Measures the whole library on one workload, filling each record's
/// `accuracy_drop` entry and returning the per-multiplier records in
/// library order.
pub fn measure_library(
    model: &TinyModel,
    dataset: &Dataset,
    library: &mut [MultiplierRecord],
    workload_name: &str,
) -> Result<Vec<AccuracyRecord>> {
    let width = library
        .first()
        .map(|r| r.spec.width)
        .ok_or_else(|| Error::InvalidArgument("multiplier library is empty".into()))?;
    let eval = AccuracyEvaluator::new(model, dataset, width)?;
    let mut records = Vec::with_capacity(library.len());
    for rec in library.iter_mut() {
        let acc = eval.accuracy_drop(&rec.spec)?;
        rec.accuracy_drop
            .insert(workload_name.to_string(), acc.delta_a);
        records.push(acc);
    }
    Ok(records)
}

/// Selects the smallest-area multiplier whose measured accuracy drop for
/// `workload_name` stays within `delta`, breaking area ties by
/// lexicographically smallest id. Every record must carry a drop entry for
/// the workload and an area for `node_name`.
pub fn select_multiplier<'a>(
    library: &'a [MultiplierRecord],
    workload_name: &str,
    node_name: &str,
    delta: f64,
) -> Result<&'a MultiplierRecord> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "accuracy delta must be >= 0, got {delta}"
        )));
    }
    let mut best: Option<(&MultiplierRecord, f64)> = None;
    for rec in library {
        let drop = rec.accuracy_drop_for(workload_name)?;
        let area = rec.area_at(node_name)?;
        if drop > delta {
            continue;
        }
        let better = match best {
            None => true,
            Some((cur, cur_area)) => {
                area < cur_area || (area == cur_area && rec.id < cur.id)
            }
        };
        if better {
            best = Some((rec, area));
        }
    }
    best.map(|(rec, _)| rec).ok_or_else(|| {
        Error::Config(format!(
            "no multiplier in the library satisfies delta <= {delta} for workload `{workload_name}`"
        ))
    })
}

/// Renders accuracy records as CSV sorted by ascending area at `node_name`:
/// `multiplier_id,workload,exact_acc,approx_acc,delta_a`.
pub fn accuracy_table_csv(
    library: &[MultiplierRecord],
    records: &[AccuracyRecord],
    workload_name: &str,
    node_name: &str,
) -> Result<String> {
    let mut rows: Vec<(f64, &str, &AccuracyRecord)> = Vec::with_capacity(records.len());
    for acc in records {
        let rec = library
            .iter()
            .find(|r| r.id == acc.multiplier_id)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "accuracy record for `{}` has no library entry",
                    acc.multiplier_id
                ))
            })?;
        rows.push((rec.area_at(node_name)?, rec.id.as_str(), acc));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
    let mut out = String::from("multiplier_id,workload,exact_acc,approx_acc,delta_a\n");
    for (_, _, acc) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            acc.multiplier_id,
            workload_name,
            acc.exact_accuracy,
            acc.approx_accuracy,
            acc.delta_a
        ));
    }
    Ok(out)
}
