//! Regenerates the bundled assets: the synthetic 8x8 digit evaluation set,
//! the pretrained proxy classifier, and the regression golden files.
//!
//! Everything is seeded, so reruns are byte-stable:
//!
//! ```text
//! cargo run --release -p greenstack --example gen_assets
//! ```

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use greenstack::accproxy::{
    accuracy_table_csv, measure_accuracy, measure_library, Activation, Dataset, ModelLayer,
    TinyModel,
};
use greenstack::approxmul::{build_library, default_spec_set, library_to_csv, MultiplierSpec};
use greenstack::area::AreaConfig;
use greenstack::assets;
use greenstack::dse::{GaConfig, GeneDomains};
use greenstack::experiments::{run_sweep, sweep_csv};

const DATASET_SEED: u64 = 0x8d1_715;
const TRAIN_SEED: u64 = 3;
/// Seed of the GA run behind the golden sweep file.
pub const GOLDEN_SWEEP_SEED: u64 = 42;

const TEMPLATES: [[&str; 8]; 10] = [
    [
        "..####..", ".#....#.", "#......#", "#......#", "#......#", "#......#", ".#....#.",
        "..####..",
    ],
    [
        "...##...", "..###...", ".#.##...", "...##...", "...##...", "...##...", "...##...",
        ".######.",
    ],
    [
        "..####..", ".#....#.", "......#.", ".....#..", "....#...", "..##....", ".#......",
        ".######.",
    ],
    [
        "..####..", ".#....#.", "......#.", "...###..", "......#.", "......#.", ".#....#.",
        "..####..",
    ],
    [
        "....##..", "...#.#..", "..#..#..", ".#...#..", "#....#..", "########", ".....#..",
        ".....#..",
    ],
    [
        ".######.", ".#......", ".#......", ".#####..", "......#.", "......#.", ".#....#.",
        "..####..",
    ],
    [
        "..####..", ".#......", "#.......", "#.####..", "##....#.", "#......#", ".#....#.",
        "..####..",
    ],
    [
        "########", "......#.", ".....#..", "....#...", "...#....", "...#....", "..#.....",
        "..#.....",
    ],
    [
        "..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", "#......#", ".#....#.",
        "..####..",
    ],
    [
        "..####..", ".#....#.", "#......#", ".#.....#", "..######", ".......#", "......#.",
        "..####..",
    ],
];

fn render_digit(digit: usize, rng: &mut ChaCha8Rng) -> [u8; 64] {
    let template = &TEMPLATES[digit];
    let dx = rng.gen_range(-1i32..=1);
    let dy = rng.gen_range(-1i32..=1);
    let intensity = rng.gen_range(0.58..=1.0);
    let mut out = [0u8; 64];
    for y in 0..8i32 {
        for x in 0..8i32 {
            let (sy, sx) = (y - dy, x - dx);
            let on = (0..8).contains(&sy)
                && (0..8).contains(&sx)
                && template[sy as usize].as_bytes()[sx as usize] == b'#';
            let base: f64 = if on { 182.0 * intensity } else { 0.0 };
            let noise: f64 = rng.gen_range(if on { -78.0..=78.0 } else { 0.0..=72.0 });
            out[(y * 8 + x) as usize] = (base + noise).clamp(0.0, 255.0) as u8;
        }
    }
    out
}

struct Split {
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

fn generate_split(count: usize, rng: &mut ChaCha8Rng) -> Split {
    let mut pixels = Vec::with_capacity(count * 64);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let digit = i % 10;
        pixels.extend_from_slice(&render_digit(digit, rng));
        labels.push(digit as u8);
    }
    Split { pixels, labels }
}

// ---------------------------------------------------------------------------
// Plain f32 training (the shipped library has no training loop).
// ---------------------------------------------------------------------------

const CONV_OUT: usize = 4;
const CONV_K: usize = 3;
const FEAT: usize = CONV_OUT * 6 * 6;
const CLASSES: usize = 10;

struct TrainState {
    conv_w: Vec<f32>,
    conv_b: Vec<f32>,
    dense_w: Vec<f32>,
    dense_b: Vec<f32>,
}

impl TrainState {
    fn init(rng: &mut ChaCha8Rng) -> Self {
        let mut rand_vec = |n: usize, scale: f32| -> Vec<f32> {
            (0..n).map(|_| (rng.gen::<f32>() - 0.5) * 2.0 * scale).collect()
        };
        TrainState {
            conv_w: rand_vec(CONV_OUT * CONV_K * CONV_K, 0.3),
            conv_b: vec![0.0; CONV_OUT],
            dense_w: rand_vec(CLASSES * FEAT, 0.1),
            dense_b: vec![0.0; CLASSES],
        }
    }

    fn forward(&self, input: &[f32]) -> (Vec<f32>, Vec<f32>) {
        let mut feat = vec![0.0f32; FEAT];
        for k in 0..CONV_OUT {
            for oy in 0..6 {
                for ox in 0..6 {
                    let mut acc = self.conv_b[k];
                    for ky in 0..CONV_K {
                        for kx in 0..CONV_K {
                            acc += input[(oy + ky) * 8 + ox + kx]
                                * self.conv_w[(k * CONV_K + ky) * CONV_K + kx];
                        }
                    }
                    feat[(k * 6 + oy) * 6 + ox] = acc.max(0.0);
                }
            }
        }
        let mut logits = vec![0.0f32; CLASSES];
        for (o, logit) in logits.iter_mut().enumerate() {
            let mut acc = self.dense_b[o];
            for (i, f) in feat.iter().enumerate() {
                acc += f * self.dense_w[o * FEAT + i];
            }
            *logit = acc;
        }
        (feat, logits)
    }

    fn train_step(&mut self, input: &[f32], label: usize, lr: f32) {
        let (feat, logits) = self.forward(input);
        // Softmax cross-entropy gradient.
        let max = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let exps: Vec<f32> = logits.iter().map(|&l| (l - max).exp()).collect();
        let sum: f32 = exps.iter().sum();
        let mut dlogits: Vec<f32> = exps.iter().map(|&e| e / sum).collect();
        dlogits[label] -= 1.0;

        let mut dfeat = vec![0.0f32; FEAT];
        for (o, dlogit) in dlogits.iter().enumerate() {
            self.dense_b[o] -= lr * dlogit;
            for i in 0..FEAT {
                dfeat[i] += dlogit * self.dense_w[o * FEAT + i];
                self.dense_w[o * FEAT + i] -= lr * dlogit * feat[i];
            }
        }
        for k in 0..CONV_OUT {
            for oy in 0..6 {
                for ox in 0..6 {
                    let idx = (k * 6 + oy) * 6 + ox;
                    if feat[idx] <= 0.0 {
                        continue; // ReLU gate
                    }
                    let g = dfeat[idx];
                    self.conv_b[k] -= lr * g;
                    for ky in 0..CONV_K {
                        for kx in 0..CONV_K {
                            self.conv_w[(k * CONV_K + ky) * CONV_K + kx] -=
                                lr * g * input[(oy + ky) * 8 + ox + kx];
                        }
                    }
                }
            }
        }
    }
}

fn to_model(state: &TrainState, exact_accuracy: f64) -> TinyModel {
    TinyModel {
        name: "digits_mlc".into(),
        input_channels: 1,
        input_height: 8,
        input_width: 8,
        exact_accuracy,
        layers: vec![
            ModelLayer::Conv {
                out_channels: CONV_OUT,
                kernel_h: CONV_K,
                kernel_w: CONV_K,
                stride: 1,
                padding: 0,
                activation: Activation::Relu,
                weights: state.conv_w.clone(),
                bias: state.conv_b.clone(),
            },
            ModelLayer::Dense {
                out_features: CLASSES,
                activation: Activation::None,
                weights: state.dense_w.clone(),
                bias: state.dense_b.clone(),
            },
        ],
    }
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    fs::create_dir_all(root.join("golden")).expect("assets dir");
    fs::create_dir_all(root.join("workloads")).expect("workloads dir");

    // Dataset: a training split for the offline fit and the bundled
    // evaluation split.
    let mut data_rng = ChaCha8Rng::seed_from_u64(DATASET_SEED);
    let train = generate_split(1200, &mut data_rng);
    let eval = generate_split(400, &mut data_rng);
    let meta = "{\"count\":400,\"channels\":1,\"height\":8,\"width\":8,\"classes\":10}";
    fs::write(root.join("digits.bin"), &eval.pixels).unwrap();
    fs::write(root.join("digits_labels.bin"), &eval.labels).unwrap();
    fs::write(root.join("dataset.json"), meta).unwrap();
    let dataset = Dataset::from_parts(meta, &eval.pixels, &eval.labels).unwrap();

    // Offline training in plain f32.
    let mut rng = ChaCha8Rng::seed_from_u64(TRAIN_SEED);
    let mut state = TrainState::init(&mut rng);
    let inputs: Vec<Vec<f32>> = (0..train.labels.len())
        .map(|i| train.pixels[i * 64..(i + 1) * 64].iter().map(|&p| p as f32 / 255.0).collect())
        .collect();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..16 {
        // Deterministic shuffle.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let lr = 0.05 * 0.95f32.powi(epoch);
        for &i in &order {
            state.train_step(&inputs[i], train.labels[i] as usize, lr);
        }
    }

    // Record the accuracy the shipped inference path reproduces: exact
    // bfloat16 arithmetic over the bundled evaluation split.
    let probe = to_model(&state, 0.0);
    let exact_spec = MultiplierSpec::exact(8).unwrap();
    let exact_accuracy = measure_accuracy(&probe, &dataset, &exact_spec).unwrap();
    let model = to_model(&state, exact_accuracy);
    fs::write(root.join("model.json"), model.to_json()).unwrap();
    println!("model: exact bf16 accuracy {exact_accuracy:.4} on {} samples", dataset.len());
    assert!(exact_accuracy >= 0.85, "proxy model trained poorly");

    // Golden files. The characterization golden freezes the exhaustive
    // error metrics and the unit-gate areas of the default width-8 set.
    let table = assets::builtin_tech_table().unwrap();
    let mut library = build_library(&default_spec_set(8).unwrap(), &table).unwrap();
    fs::write(
        root.join("golden/characterization_w8.csv"),
        library_to_csv(&library, &table),
    )
    .unwrap();

    // Accuracy golden: the default library measured on the proxy, recorded
    // under the default workload's name.
    let workload = assets::builtin_workload("vgg_toy").unwrap();
    let records = measure_library(&model, &dataset, &mut library, &workload.name).unwrap();
    let accuracy_csv = accuracy_table_csv(&library, &records, &workload.name, "45nm").unwrap();
    fs::write(root.join("golden/accuracy_w8.csv"), &accuracy_csv).unwrap();
    for r in &records {
        println!(
            "  {:<14} approx_acc {:.4} delta {:+.4}",
            r.multiplier_id, r.approx_accuracy, r.delta_a
        );
    }

    // Sweep golden: 14nm, 3% threshold, vgg_toy, seeded GA.
    let ga = GaConfig {
        rng_seed: GOLDEN_SWEEP_SEED,
        ..GaConfig::default()
    };
    let outcome = run_sweep(
        table.get("14nm").unwrap(),
        &workload,
        &library,
        0.03,
        None,
        &ga,
        &GeneDomains::default(),
        &AreaConfig::default(),
    )
    .unwrap();
    fs::write(root.join("golden/sweep_14nm_d3.csv"), sweep_csv(&outcome.rows)).unwrap();
    println!(
        "sweep golden: selected multiplier {}, GA best {}",
        outcome.selected_multiplier, outcome.ga_result.best.chromosome
    );
    println!("assets regenerated under {}", root.display());
}
