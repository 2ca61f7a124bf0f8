//! Analytical delay model: layer-by-layer mapping of a DNN onto the
//! Px x Py PE array with delay-optimized tiling.
//!
//! The dataflow is output-stationary: output channels map spatially across
//! `Py`, output pixels across `Px`, and input channels tile temporally.
//! For one layer with canonical dimensions N (batch), K (output channels),
//! C (input channels), P (output pixels) and an R x S kernel, a tiling
//! (Kt, Pt, Ct) runs the loop nest
//!
//! ```text
//! for n          | for ko in ceil(K/Kt) | for po in ceil(P/Pt)
//!   for co in ceil(C/Ct):
//!     broadcast weight tile (Kt*Ct*R*S words) and input tile
//!     compute Ct*R*S MACs per PE          // Kt*Pt PEs in parallel
//!   write back the Kt*Pt output tile       // output-stationary
//! ```
//!
//! so `compute_cycles = N * ceil(K/Kt) * ceil(P/Pt) * ceil(C/Ct) * Ct*R*S`.
//! DRAM traffic is each operand's unique footprint times a reload factor:
//! outputs are written once; weights reload once per output-pixel tile
//! unless a whole Kt row of weights (or the full tensor) persists in the
//! global buffer; inputs reload once per output-channel tile unless the
//! whole input feature map persists. On-chip traffic adds the per-step
//! tile broadcasts from the global SRAM into the array. Compute and both
//! transfer streams overlap under double buffering, so a layer costs the
//! maximum of the three, with on-chip bandwidth `Px` columns wide (NoC rate
//! in 2D, vertical-bonding rate in 3D).
//!
//! Candidate tile sizes are the divisors of each dimension plus the
//! dimension itself and the hardware cap; enumeration order is fixed and
//! the first strictly-best candidate wins, so scheduling is deterministic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dse::ArchChromosome;
use crate::error::{Error, Result};
use crate::techlib::{Dims, TechNode};

/// Data width of every operand stream (bfloat16).
pub const BYTES_PER_WORD: u64 = 2;

/// One DNN layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Layer {
    Conv {
        batch: u64,
        in_channels: u64,
        out_channels: u64,
        height: u64,
        width: u64,
        kernel_h: u64,
        kernel_w: u64,
        stride: u64,
        padding: u64,
    },
    Fc {
        batch: u64,
        in_features: u64,
        out_features: u64,
    },
}

impl Layer {
    pub fn validate(&self) -> Result<()> {
        match self {
            Layer::Conv {
                batch,
                in_channels,
                out_channels,
                height,
                width,
                kernel_h,
                kernel_w,
                stride,
                ..
            } => {
                for (name, v) in [
                    ("batch", *batch),
                    ("in_channels", *in_channels),
                    ("out_channels", *out_channels),
                    ("height", *height),
                    ("width", *width),
                    ("kernel_h", *kernel_h),
                    ("kernel_w", *kernel_w),
                    ("stride", *stride),
                ] {
                    if v == 0 {
                        return Err(Error::Config(format!("conv layer: {name} must be >= 1")));
                    }
                }
                let (oh, ow) = self.out_hw();
                if oh == 0 || ow == 0 {
                    return Err(Error::Config(
                        "conv layer: kernel larger than padded input".into(),
                    ));
                }
            }
            Layer::Fc {
                batch,
                in_features,
                out_features,
            } => {
                if *batch == 0 || *in_features == 0 || *out_features == 0 {
                    return Err(Error::Config("fc layer: all dims must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Output spatial size; (1, 1) for fully connected layers.
    pub fn out_hw(&self) -> (u64, u64) {
        match self {
            Layer::Conv {
                height,
                width,
                kernel_h,
                kernel_w,
                stride,
                padding,
                ..
            } => {
                let span_h = height + 2 * padding;
                let span_w = width + 2 * padding;
                if span_h < *kernel_h || span_w < *kernel_w {
                    return (0, 0);
                }
                ((span_h - kernel_h) / stride + 1, (span_w - kernel_w) / stride + 1)
            }
            Layer::Fc { .. } => (1, 1),
        }
    }

    /// Canonical mapping dimensions (n, k, c, p, r, s, input plane size).
    pub(crate) fn canonical(&self) -> CanonicalDims {
        match self {
            Layer::Conv {
                batch,
                in_channels,
                out_channels,
                height,
                width,
                kernel_h,
                kernel_w,
                ..
            } => {
                let (oh, ow) = self.out_hw();
                CanonicalDims {
                    n: *batch,
                    k: *out_channels,
                    c: *in_channels,
                    p: oh * ow,
                    r: *kernel_h,
                    s: *kernel_w,
                    in_plane: height * width,
                }
            }
            Layer::Fc {
                batch,
                in_features,
                out_features,
            } => CanonicalDims {
                n: *batch,
                k: *out_features,
                c: *in_features,
                p: 1,
                r: 1,
                s: 1,
                in_plane: 1,
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv { .. } => "conv",
            Layer::Fc { .. } => "fc",
        }
    }
}

/// Canonical per-layer dimensions fed to the tiler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CanonicalDims {
    pub n: u64,
    pub k: u64,
    pub c: u64,
    pub p: u64,
    pub r: u64,
    pub s: u64,
    /// Input feature-map pixels per channel.
    pub in_plane: u64,
}

/// Multiply-accumulate count of one layer.
pub fn layer_macs(layer: &Layer) -> u64 {
    let d = layer.canonical();
    d.n * d.k * d.c * d.p * d.r * d.s
}

/// An ordered, shape-chained list of layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub name: String,
    pub layers: Vec<Layer>,
}

impl Workload {
    pub fn from_json(text: &str) -> Result<Self> {
        let w: Workload = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    /// Checks per-layer validity and that consecutive layer shapes chain:
    /// a layer's input channel/feature count must match its predecessor's
    /// output (convolution outputs flatten to `K * H_out * W_out` features
    /// before a fully connected layer).
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config(format!(
                "workload `{}` has no layers",
                self.name
            )));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        for (idx, pair) in self.layers.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            let (oh, ow) = prev.out_hw();
            let (out_c, out_features) = match prev {
                Layer::Conv { out_channels, .. } => (*out_channels, out_channels * oh * ow),
                Layer::Fc { out_features, .. } => (*out_features, *out_features),
            };
            let ok = match next {
                Layer::Conv {
                    in_channels,
                    height,
                    width,
                    ..
                } => *in_channels == out_c && *height == oh && *width == ow,
                Layer::Fc { in_features, .. } => *in_features == out_features,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "workload `{}`: layer {} does not chain onto layer {idx}",
                    self.name,
                    idx + 1
                )));
            }
        }
        Ok(())
    }

    /// Total MAC count over all layers.
    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(layer_macs).sum()
    }
}

/// The architecture cannot schedule a layer (local buffer too small for
/// even a single-channel weight slice, or the global buffer cannot hold a
/// minimal working set). Consumed by the design-space search as an
/// infeasible-architecture signal rather than an error.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasible {
    pub layer_index: usize,
    pub reason: String,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "infeasible architecture at layer {}: {}",
            self.layer_index, self.reason
        )
    }
}

/// Which resource bounds a layer's runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Compute,
    Dram,
    Onchip,
}

/// The chosen tiling of one layer and its cost components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSchedule {
    /// Output channels mapped spatially (<= Py).
    pub kt: u64,
    /// Output pixels mapped spatially (<= Px).
    pub pt: u64,
    /// Input channels per temporal tile.
    pub ct: u64,
    pub compute_cycles: u64,
    pub dram_bytes: u64,
    pub onchip_bytes: u64,
    pub bound: BoundKind,
}

/// Happy path of scheduling, distinguishing infeasibility (data) from
/// hard errors.
pub type ScheduleResult<T> = std::result::Result<T, Infeasible>;

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Divisors of `dim` up to `cap`, plus `min(dim, cap)`.
fn tile_candidates(dim: u64, cap: u64) -> Vec<u64> {
    let cap = cap.min(dim);
    let mut out: Vec<u64> = (1..=dim).filter(|d| dim.is_multiple_of(*d) && *d <= cap).collect();
    if !out.contains(&cap) {
        out.push(cap);
        out.sort_unstable();
    }
    out
}

/// Byte cost of one tiling's working set and traffic. Shared between the
/// analytical scheduler and its tests.
#[derive(Debug, Clone, Copy)]
struct TileCost {
    compute_cycles: u64,
    dram_bytes: u64,
    onchip_bytes: u64,
}

fn input_tile_words(d: &CanonicalDims, pt: u64) -> u64 {
    d.in_plane.min(pt * d.r * d.s)
}

fn tile_cost(d: &CanonicalDims, kt: u64, pt: u64, ct: u64, b_global: u64) -> Option<TileCost> {
    let w_tile = kt * ct * d.r * d.s * BYTES_PER_WORD;
    let i_tile = ct * input_tile_words(d, pt) * BYTES_PER_WORD;
    let o_tile = kt * pt * BYTES_PER_WORD;
    if w_tile + i_tile + o_tile > b_global {
        return None;
    }
    let k_tiles = ceil_div(d.k, kt);
    let p_tiles = ceil_div(d.p, pt);
    let c_tiles = ceil_div(d.c, ct);
    let steps = d.n * k_tiles * p_tiles * c_tiles;
    let compute_cycles = steps * ct * d.r * d.s;

    let unique_w = d.k * d.c * d.r * d.s * BYTES_PER_WORD;
    let unique_i = d.n * d.c * d.in_plane * BYTES_PER_WORD;
    let unique_o = d.n * d.k * d.p * BYTES_PER_WORD;

    // Weight reloads: the full tensor persisting beats a Kt-row persisting
    // beats streaming once per output-pixel tile.
    let w_row = kt * d.c * d.r * d.s * BYTES_PER_WORD;
    let full_w = d.k * d.c * d.r * d.s * BYTES_PER_WORD;
    let f_w = if full_w + i_tile + o_tile <= b_global {
        1
    } else if w_row + i_tile + o_tile <= b_global {
        d.n
    } else {
        d.n * p_tiles
    };
    // Input reloads: the whole feature map persists across the K loop or
    // streams once per output-channel tile.
    let full_i = d.c * d.in_plane * BYTES_PER_WORD;
    let f_i = if full_i + w_tile + o_tile <= b_global {
        1
    } else {
        k_tiles
    };

    let dram_bytes = unique_w * f_w + unique_i * f_i + unique_o;
    let broadcast = steps * (w_tile + i_tile) + d.n * k_tiles * p_tiles * o_tile;
    Some(TileCost {
        compute_cycles,
        dram_bytes,
        onchip_bytes: dram_bytes + broadcast,
    })
}

fn transfer_cycles(bytes: u64, bandwidth: f64) -> u64 {
    if bytes == 0 {
        0
    } else {
        (bytes as f64 / bandwidth).ceil() as u64
    }
}

fn onchip_bandwidth(px: u64, node: &TechNode, dims: Dims) -> f64 {
    px as f64
        * match dims {
            Dims::D2 => node.noc_bw_2d,
            Dims::D3 => node.vertical_bw_3d,
        }
}

fn cost_cycles(cost: &TileCost, px: u64, node: &TechNode, dims: Dims) -> (u64, BoundKind) {
    let dram = transfer_cycles(cost.dram_bytes, node.dram_bw_bytes_per_cycle);
    let onchip = transfer_cycles(cost.onchip_bytes, onchip_bandwidth(px, node, dims));
    let cycles = cost.compute_cycles.max(dram).max(onchip);
    let bound = if cycles == cost.compute_cycles {
        BoundKind::Compute
    } else if cycles == dram {
        BoundKind::Dram
    } else {
        BoundKind::Onchip
    };
    (cycles, bound)
}

/// Picks the tiling that minimizes the layer's cycle count under the
/// double-buffering overlap model. Enumeration order is fixed (ascending
/// Kt, Pt, Ct) and only a strictly better candidate displaces the
/// incumbent, so the choice is deterministic.
pub fn schedule_layer(
    layer: &Layer,
    chrom: &ArchChromosome,
    node: &TechNode,
    dims: Dims,
) -> ScheduleResult<LayerSchedule> {
    schedule_canonical(&layer.canonical(), 0, chrom, node, dims)
}

fn schedule_canonical(
    d: &CanonicalDims,
    layer_index: usize,
    chrom: &ArchChromosome,
    node: &TechNode,
    dims: Dims,
) -> ScheduleResult<LayerSchedule> {
    let slice_bytes = d.r * d.s * BYTES_PER_WORD;
    let ct_cap = if slice_bytes > chrom.b_local {
        0
    } else {
        (chrom.b_local / slice_bytes).min(d.c)
    };
    if ct_cap == 0 {
        return Err(Infeasible {
            layer_index,
            reason: format!(
                "local buffer of {} B cannot hold a single {}-byte weight slice",
                chrom.b_local, slice_bytes
            ),
        });
    }
    let mut best: Option<(u64, LayerSchedule)> = None;
    for &kt in &tile_candidates(d.k, chrom.py as u64) {
        for &pt in &tile_candidates(d.p, chrom.px as u64) {
            for &ct in &tile_candidates(d.c, ct_cap) {
                let Some(cost) = tile_cost(d, kt, pt, ct, chrom.b_global) else {
                    continue;
                };
                let (cycles, bound) = cost_cycles(&cost, chrom.px as u64, node, dims);
                if best.as_ref().is_none_or(|(b, _)| cycles < *b) {
                    best = Some((
                        cycles,
                        LayerSchedule {
                            kt,
                            pt,
                            ct,
                            compute_cycles: cost.compute_cycles,
                            dram_bytes: cost.dram_bytes,
                            onchip_bytes: cost.onchip_bytes,
                            bound,
                        },
                    ));
                }
            }
        }
    }
    match best {
        Some((_, schedule)) => Ok(schedule),
        None => Err(Infeasible {
            layer_index,
            reason: format!(
                "global buffer of {} B cannot hold any tile working set",
                chrom.b_global
            ),
        }),
    }
}

/// Cycle count of a scheduled layer: the slowest of compute, DRAM transfer
/// and on-chip transfer under double buffering. On-chip bandwidth is `Px`
/// array columns wide.
pub fn layer_cycles(schedule: &LayerSchedule, px: u64, node: &TechNode, dims: Dims) -> u64 {
    let cost = TileCost {
        compute_cycles: schedule.compute_cycles,
        dram_bytes: schedule.dram_bytes,
        onchip_bytes: schedule.onchip_bytes,
    };
    cost_cycles(&cost, px, node, dims).0
}

/// End-to-end delay of one workload on one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub total_cycles: u64,
    /// Task delay in seconds (`total_cycles / clock`).
    pub d_task_s: f64,
    /// Frames per second at batch 1 (`1 / d_task_s`).
    pub fps: f64,
    pub dims: Dims,
    pub schedules: Vec<LayerSchedule>,
}

/// Schedules every layer and sums their cycles.
pub fn network_delay(
    workload: &Workload,
    chrom: &ArchChromosome,
    node: &TechNode,
    dims: Dims,
) -> ScheduleResult<PerfReport> {
    let mut total_cycles = 0u64;
    let mut schedules = Vec::with_capacity(workload.layers.len());
    for (idx, layer) in workload.layers.iter().enumerate() {
        let schedule = schedule_canonical(&layer.canonical(), idx, chrom, node, dims)?;
        total_cycles += layer_cycles(&schedule, chrom.px as u64, node, dims);
        schedules.push(schedule);
    }
    let d_task_s = total_cycles as f64 / node.clock_hz;
    Ok(PerfReport {
        total_cycles,
        d_task_s,
        fps: 1.0 / d_task_s,
        dims,
        schedules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn conv(batch: u64, c: u64, k: u64, hw: u64, kernel: u64, stride: u64, padding: u64) -> Layer {
        Layer::Conv {
            batch,
            in_channels: c,
            out_channels: k,
            height: hw,
            width: hw,
            kernel_h: kernel,
            kernel_w: kernel,
            stride,
            padding,
        }
    }

    fn node() -> crate::techlib::TechNode {
        assets::builtin_tech_table().unwrap().get("14nm").unwrap().clone()
    }

    #[test]
    fn mac_counting() {
        assert_eq!(layer_macs(&conv(1, 1, 1, 1, 1, 1, 0)), 1);
        let fc = Layer::Fc {
            batch: 1,
            in_features: 10,
            out_features: 10,
        };
        assert_eq!(layer_macs(&fc), 100);
        // 8 out-channels, 3 in-channels, 3x3 kernel, 8x8 padded-same output.
        assert_eq!(layer_macs(&conv(1, 3, 8, 8, 3, 1, 1)), 13_824);
    }

    #[test]
    fn out_hw_respects_stride_and_padding() {
        assert_eq!(conv(1, 1, 1, 16, 3, 1, 1).out_hw(), (16, 16));
        assert_eq!(conv(1, 1, 1, 16, 3, 2, 1).out_hw(), (8, 8));
        assert_eq!(conv(1, 1, 1, 8, 3, 1, 0).out_hw(), (6, 6));
    }

    #[test]
    fn workload_chaining_checked() {
        let good = Workload {
            name: "ok".into(),
            layers: vec![
                conv(1, 3, 8, 8, 3, 1, 1),
                Layer::Fc {
                    batch: 1,
                    in_features: 8 * 8 * 8,
                    out_features: 10,
                },
            ],
        };
        good.validate().unwrap();
        let bad = Workload {
            name: "bad".into(),
            layers: vec![
                conv(1, 3, 8, 8, 3, 1, 1),
                Layer::Fc {
                    batch: 1,
                    in_features: 100,
                    out_features: 10,
                },
            ],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_mac_on_single_pe_is_one_cycle() {
        let layer = conv(1, 1, 1, 1, 1, 1, 0);
        let chrom = ArchChromosome::new(1, 1, 4096, 1 << 20);
        let s = schedule_layer(&layer, &chrom, &node(), Dims::D3).unwrap();
        assert_eq!(s.compute_cycles, 1);
        assert_eq!((s.kt, s.pt, s.ct), (1, 1, 1));
    }

    #[test]
    fn full_reuse_fetches_exact_footprint() {
        // Everything fits: every reload factor is 1.
        let layer = conv(1, 3, 8, 8, 3, 1, 1);
        let chrom = ArchChromosome::new(8, 8, 4096, 1 << 23);
        let s = schedule_layer(&layer, &chrom, &node(), Dims::D3).unwrap();
        let unique_w = 8 * 3 * 9 * 2;
        let unique_i = 3 * 64 * 2;
        let unique_o = 8 * 64 * 2;
        assert_eq!(s.dram_bytes, unique_w + unique_i + unique_o);
    }

    #[test]
    fn tight_local_buffer_signals_infeasible() {
        let layer = conv(1, 3, 8, 8, 3, 1, 1);
        // 3x3 kernel slice needs 18 B; an 8 B local buffer cannot hold it.
        let chrom = ArchChromosome::new(4, 4, 8, 1 << 20);
        let err = schedule_layer(&layer, &chrom, &node(), Dims::D3).unwrap_err();
        assert_eq!(err.layer_index, 0);
        assert!(err.reason.contains("local buffer"));
    }

    #[test]
    fn vertical_bandwidth_never_slower() {
        let layer = conv(1, 16, 32, 16, 3, 1, 1);
        let chrom = ArchChromosome::new(8, 8, 256, 1 << 16);
        let n = node();
        let s2 = schedule_layer(&layer, &chrom, &n, Dims::D2).unwrap();
        let s3 = schedule_layer(&layer, &chrom, &n, Dims::D3).unwrap();
        let c2 = layer_cycles(&s2, chrom.px as u64, &n, Dims::D2);
        let c3 = layer_cycles(&s3, chrom.px as u64, &n, Dims::D3);
        assert!(c3 <= c2);
    }

    #[test]
    fn network_delay_sums_layers() {
        let n = node();
        let layer = conv(1, 4, 4, 8, 3, 1, 1);
        let single = Workload {
            name: "one".into(),
            layers: vec![layer.clone()],
        };
        let double = Workload {
            name: "two".into(),
            layers: vec![layer.clone(), conv(1, 4, 4, 8, 3, 1, 1)],
        };
        let chrom = ArchChromosome::new(4, 4, 256, 1 << 17);
        let r1 = network_delay(&single, &chrom, &n, Dims::D3).unwrap();
        let r2 = network_delay(&double, &chrom, &n, Dims::D3).unwrap();
        assert_eq!(r2.total_cycles, 2 * r1.total_cycles);
        assert!((r1.fps * r1.d_task_s - 1.0).abs() < 1e-12);
        assert!((r1.d_task_s - r1.total_cycles as f64 / n.clock_hz).abs() < 1e-18);
    }

    #[test]
    fn builtin_workloads_load_and_chain() {
        for name in assets::BUILTIN_WORKLOADS {
            let w = assets::builtin_workload(name).unwrap();
            assert!(!w.layers.is_empty());
            assert!(w.total_macs() > 0);
        }
    }

    #[test]
    fn larger_arrays_never_slow_a_layer() {
        let n = node();
        let layer = conv(1, 8, 16, 16, 3, 1, 1);
        let base = ArchChromosome::new(4, 4, 128, 1 << 15);
        let sb = schedule_layer(&layer, &base, &n, Dims::D3).unwrap();
        let cb = layer_cycles(&sb, base.px as u64, &n, Dims::D3);
        for bigger in [
            ArchChromosome::new(8, 4, 128, 1 << 15),
            ArchChromosome::new(4, 8, 128, 1 << 15),
            ArchChromosome::new(4, 4, 256, 1 << 15),
            ArchChromosome::new(4, 4, 128, 1 << 16),
        ] {
            let s = schedule_layer(&layer, &bigger, &n, Dims::D3).unwrap();
            let c = layer_cycles(&s, bigger.px as u64, &n, Dims::D3);
            assert!(c <= cb, "{bigger:?}: {c} > {cb}");
        }
    }
}
