//! Silicon area models: SRAM and register-file blocks, bfloat16 MAC units,
//! PEs, logic and memory dies, and the package footprint.
//!
//! Memory macros use a linear bit-area model (`bits * bit_area * array
//! overhead`), adders a ripple unit-gate model (`9 NAND2 per bit`), and the
//! remaining knobs are capacity-independent overhead factors collected in
//! [`AreaConfig`]. In a 2D organization the global SRAM sits on a second
//! die on the same package and the PE array pays for a NoC; in 3D the
//! memory die stacks on top and the vertical links are carried by the
//! bonding interface instead of logic-die area.

use serde::{Deserialize, Serialize};

use crate::approxmul::MultiplierRecord;
use crate::dse::ArchChromosome;
use crate::error::Result;
use crate::techlib::{self, Dims, TechNode};

/// Memory block flavor, selecting the bit-cell area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryKind {
    GlobalSram,
    RegisterFile,
}

/// Overridable area-model constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    /// Placement/routing overhead multiplier on the PE array.
    pub layout_overhead: f64,
    /// Control-logic overhead fraction added to the MAC datapath.
    pub control_overhead: f64,
    /// Periphery fraction added to the memory die.
    pub memory_periphery: f64,
    /// Package outline margin over the die footprint.
    pub package_margin: f64,
    /// Per-PE NoC router cost in NAND2-equivalent gates (2D only).
    pub noc_gates_per_pe: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig {
            layout_overhead: 1.15,
            control_overhead: 0.10,
            memory_periphery: 0.05,
            package_margin: 1.2,
            noc_gates_per_pe: 120.0,
        }
    }
}

/// Area decomposition of one accelerator configuration (all mm^2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub logic_die: f64,
    pub memory_die: f64,
    pub package: f64,
    pub per_pe: f64,
    pub mac: f64,
    pub local_buffer: f64,
    /// NoC area on the logic die; zero for 3D organizations.
    pub noc: f64,
    pub wasted_logic: f64,
    pub wasted_memory: f64,
}

/// Area of a memory block of `capacity` bytes (mm^2). Linear in capacity,
/// zero at zero capacity.
pub fn sram_area(node: &TechNode, capacity_bytes: u64, kind: MemoryKind) -> f64 {
    let bit_area = match kind {
        MemoryKind::GlobalSram => node.sram_bit_area_mm2,
        MemoryKind::RegisterFile => node.regfile_bit_area_mm2,
    };
    capacity_bytes as f64 * 8.0 * bit_area * node.memory_array_overhead
}

/// Ripple-adder area for an N-bit adder (mm^2): 9 NAND2-equivalents per bit.
pub fn adder_area(bits: u32, node: &TechNode) -> f64 {
    bits as f64 * 9.0 * node.gate_area_mm2
}

/// Area of one bfloat16 MAC unit (mm^2): the mantissa multiplier, two 8-bit
/// exponent adders and the 24-bit accumulator adder, plus the control
/// overhead fraction.
pub fn mac_area(node: &TechNode, mult: &MultiplierRecord, cfg: &AreaConfig) -> Result<f64> {
    let datapath = mult.area_at(&node.name)? + 2.0 * adder_area(8, node) + adder_area(24, node);
    Ok(datapath * (1.0 + cfg.control_overhead))
}

/// NoC area on the logic die (mm^2); zero in 3D, where vertical links are
/// accounted by the bonding carbon instead.
pub fn noc_area(node: &TechNode, chrom: &ArchChromosome, dims: Dims, cfg: &AreaConfig) -> f64 {
    match dims {
        Dims::D2 => chrom.pe_count() as f64 * cfg.noc_gates_per_pe * node.gate_area_mm2,
        Dims::D3 => 0.0,
    }
}

/// Logic-die area (mm^2): the Px x Py PE array (MAC plus register-file
/// local buffer each) under the layout overhead, plus NoC area for 2D.
pub fn logic_die_area(
    node: &TechNode,
    chrom: &ArchChromosome,
    mult: &MultiplierRecord,
    dims: Dims,
    cfg: &AreaConfig,
) -> Result<f64> {
    let pe = mac_area(node, mult, cfg)? + sram_area(node, chrom.b_local, MemoryKind::RegisterFile);
    Ok(chrom.pe_count() as f64 * pe * cfg.layout_overhead + noc_area(node, chrom, dims, cfg))
}

/// Memory-die area (mm^2): the global SRAM plus a fixed periphery fraction.
pub fn memory_die_area(node: &TechNode, b_global: u64, cfg: &AreaConfig) -> f64 {
    sram_area(node, b_global, MemoryKind::GlobalSram) * (1.0 + cfg.memory_periphery)
}

/// Package footprint (mm^2): the stacked footprint (3D) or side-by-side sum
/// (2D) of the two dies under the package margin.
pub fn package_area(logic: f64, memory: f64, dims: Dims, cfg: &AreaConfig) -> f64 {
    match dims {
        Dims::D3 => logic.max(memory) * cfg.package_margin,
        Dims::D2 => (logic + memory) * cfg.package_margin,
    }
}

/// Computes the full area decomposition of a configuration, including the
/// wafer-packing waste attributed to each die.
pub fn area_breakdown(
    node: &TechNode,
    chrom: &ArchChromosome,
    mult: &MultiplierRecord,
    dims: Dims,
    cfg: &AreaConfig,
) -> Result<AreaBreakdown> {
    let mac = mac_area(node, mult, cfg)?;
    let local_buffer = sram_area(node, chrom.b_local, MemoryKind::RegisterFile);
    let per_pe = mac + local_buffer;
    let noc = noc_area(node, chrom, dims, cfg);
    let logic_die = chrom.pe_count() as f64 * per_pe * cfg.layout_overhead + noc;
    let memory_die = memory_die_area(node, chrom.b_global, cfg);
    let package = package_area(logic_die, memory_die, dims, cfg);
    let wasted = |area: f64| -> Result<f64> {
        if area == 0.0 {
            Ok(0.0)
        } else {
            techlib::wasted_area_per_die(node, area)
        }
    };
    Ok(AreaBreakdown {
        logic_die,
        memory_die,
        package,
        per_pe,
        mac,
        local_buffer,
        noc,
        wasted_logic: wasted(logic_die)?,
        wasted_memory: wasted(memory_die)?,
    })
}
