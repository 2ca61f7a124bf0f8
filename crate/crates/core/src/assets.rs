//! Bundled reference data: technology tables, toy workloads, the proxy
//! model and dataset, and regression golden files.
//!
//! Everything is embedded in the binary so `builtin` resources work from
//! any working directory. The files live under `crates/core/assets/` and
//! can be regenerated with the `gen_assets` example.

use crate::accproxy::{Dataset, TinyModel};
use crate::error::{Error, Result};
use crate::perf::Workload;
use crate::techlib::TechTable;

const NODES_JSON: &str = include_str!("../assets/nodes.json");
const MODEL_JSON: &str = include_str!("../assets/model.json");
const DATASET_META_JSON: &str = include_str!("../assets/dataset.json");
const DATASET_SAMPLES: &[u8] = include_bytes!("../assets/digits.bin");
const DATASET_LABELS: &[u8] = include_bytes!("../assets/digits_labels.bin");
const WORKLOAD_VGG: &str = include_str!("../assets/workloads/vgg_toy.json");
const WORKLOAD_RESNET: &str = include_str!("../assets/workloads/resnet_toy.json");
const WORKLOAD_DENSE: &str = include_str!("../assets/workloads/dense_toy.json");
/// Golden exhaustive characterization of the default width-8 spec set.
pub const GOLDEN_CHARACTERIZATION_CSV: &str =
    include_str!("../assets/golden/characterization_w8.csv");
/// Golden accuracy table of the default library on the bundled proxy.
pub const GOLDEN_ACCURACY_CSV: &str = include_str!("../assets/golden/accuracy_w8.csv");
/// Golden comparison sweep: 14nm, vgg_toy, 3% accuracy threshold, GA seed 42.
pub const GOLDEN_SWEEP_CSV: &str = include_str!("../assets/golden/sweep_14nm_d3.csv");

/// Raw JSON text of the bundled technology table.
pub fn builtin_nodes_json() -> &'static str {
    NODES_JSON
}

/// The bundled 45/14/7 nm technology table.
pub fn builtin_tech_table() -> Result<TechTable> {
    TechTable::from_json(NODES_JSON)
}

/// The bundled proxy classifier (trained offline; weights ship with the
/// crate).
pub fn builtin_model() -> Result<TinyModel> {
    TinyModel::from_json(MODEL_JSON)
}

/// The bundled 8x8 digit-style evaluation set.
pub fn builtin_dataset() -> Result<Dataset> {
    Dataset::from_parts(DATASET_META_JSON, DATASET_SAMPLES, DATASET_LABELS)
}

/// Names of the bundled toy workloads.
pub const BUILTIN_WORKLOADS: [&str; 3] = ["vgg_toy", "resnet_toy", "dense_toy"];

/// Loads a bundled workload by name.
pub fn builtin_workload(name: &str) -> Result<Workload> {
    let text = match name {
        "vgg_toy" => WORKLOAD_VGG,
        "resnet_toy" => WORKLOAD_RESNET,
        "dense_toy" => WORKLOAD_DENSE,
        other => {
            return Err(Error::Config(format!(
                "unknown builtin workload `{other}` (available: {})",
                BUILTIN_WORKLOADS.join(", ")
            )))
        }
    };
    Workload::from_json(text)
}
