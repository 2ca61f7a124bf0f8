//! Technology-node parameter tables, yield and wafer-packing geometry.
//!
//! A [`TechNode`] bundles every per-node constant the area and carbon models
//! consume: fabrication carbon coefficients, defect statistics, bit-cell and
//! gate areas, clock frequency and the bandwidth figures that distinguish a
//! 2D network-on-chip from 3D vertical interconnect. Tables load from a JSON
//! document; unknown keys are rejected so typos in coefficient names cannot
//! silently fall back to defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical organization: two dies side by side on the package (2D) or
/// memory stacked on logic with vertical interconnect (3D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dims {
    #[serde(rename = "2d")]
    D2,
    #[serde(rename = "3d")]
    D3,
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dims::D2 => "2d",
            Dims::D3 => "3d",
        })
    }
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Ok(Dims::D2),
            "3d" => Ok(Dims::D3),
            other => Err(Error::Config(format!(
                "unknown dimensionality `{other}` (expected 2d or 3d)"
            ))),
        }
    }
}

/// Optional per-memory-die overrides of the CFPA numerator coefficients.
///
/// By default the memory die shares the logic die's fabrication
/// coefficients; a table may override any subset for the memory die only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryCfpaOverride {
    /// Fab carbon intensity (gCO2/kWh).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_fab: Option<f64>,
    /// Manufacturing energy per area (kWh/mm^2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epa: Option<f64>,
    /// Direct greenhouse-gas emissions per area (gCO2/mm^2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_gas: Option<f64>,
    /// Raw-material procurement carbon per area (gCO2/mm^2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_material: Option<f64>,
}

/// All per-node fabrication, yield, geometry, frequency and bandwidth
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechNode {
    /// Node name, e.g. "45nm".
    pub name: String,
    /// Feature size (nm). Informational.
    pub feature_size_nm: f64,
    /// Clock frequency (Hz).
    pub clock_hz: f64,
    /// Fab carbon intensity (gCO2/kWh).
    pub ci_fab: f64,
    /// Manufacturing energy per area (kWh/mm^2).
    pub epa: f64,
    /// Direct greenhouse-gas emissions per area (gCO2/mm^2).
    pub c_gas: f64,
    /// Raw-material procurement carbon per area (gCO2/mm^2).
    pub c_material: f64,
    /// Carbon charged to wasted (diced-away) silicon (gCO2/mm^2).
    pub cfpa_si_waste: f64,
    /// Die-to-die bonding carbon per bonded area (gCO2/mm^2).
    pub cfpa_bonding: f64,
    /// Packaging carbon per package area (gCO2/mm^2).
    pub cfpa_packaging: f64,
    /// Defect density (defects/mm^2) for the negative-binomial yield model.
    pub defect_density: f64,
    /// Defect clustering parameter (dimensionless, > 0).
    pub cluster_alpha: f64,
    /// Fixed per-node yield in (0, 1]. When present it is returned verbatim
    /// and the area-dependent model is bypassed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_yield: Option<f64>,
    /// Wafer diameter (mm).
    pub wafer_diameter_mm: f64,
    /// Global-SRAM bit-cell area (mm^2/bit).
    pub sram_bit_area_mm2: f64,
    /// Register-file bit-cell area (mm^2/bit).
    pub regfile_bit_area_mm2: f64,
    /// NAND2-equivalent gate area (mm^2).
    pub gate_area_mm2: f64,
    /// Off-chip DRAM bandwidth (bytes/cycle).
    pub dram_bw_bytes_per_cycle: f64,
    /// 2D NoC bandwidth (bytes/cycle per array column).
    pub noc_bw_2d: f64,
    /// 3D vertical (hybrid-bonding) bandwidth (bytes/cycle per array column).
    pub vertical_bw_3d: f64,
    /// Array overhead multiplier for memory macros (>= 1).
    pub memory_array_overhead: f64,
    /// Optional memory-die CFPA coefficient overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cfpa: Option<MemoryCfpaOverride>,
}

impl TechNode {
    /// Validates the node's invariants.
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("feature_size_nm", self.feature_size_nm),
            ("ci_fab", self.ci_fab),
            ("epa", self.epa),
            ("c_gas", self.c_gas),
            ("c_material", self.c_material),
            ("cfpa_si_waste", self.cfpa_si_waste),
            ("cfpa_bonding", self.cfpa_bonding),
            ("cfpa_packaging", self.cfpa_packaging),
            ("defect_density", self.defect_density),
            ("sram_bit_area_mm2", self.sram_bit_area_mm2),
            ("regfile_bit_area_mm2", self.regfile_bit_area_mm2),
            ("gate_area_mm2", self.gate_area_mm2),
            ("dram_bw_bytes_per_cycle", self.dram_bw_bytes_per_cycle),
            ("noc_bw_2d", self.noc_bw_2d),
            ("vertical_bw_3d", self.vertical_bw_3d),
        ];
        for (field, value) in nonneg {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!(
                    "node `{}`: {field} must be finite and >= 0, got {value}",
                    self.name
                )));
            }
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::Config(format!(
                "node `{}`: clock_hz must be > 0",
                self.name
            )));
        }
        if !(self.wafer_diameter_mm.is_finite() && self.wafer_diameter_mm > 0.0) {
            return Err(Error::Config(format!(
                "node `{}`: wafer_diameter_mm must be > 0",
                self.name
            )));
        }
        if !(self.cluster_alpha.is_finite() && self.cluster_alpha > 0.0) {
            return Err(Error::Config(format!(
                "node `{}`: cluster_alpha must be > 0",
                self.name
            )));
        }
        if let Some(y) = self.fixed_yield {
            if !(y.is_finite() && y > 0.0 && y <= 1.0) {
                return Err(Error::Config(format!(
                    "node `{}`: fixed_yield must lie in (0, 1], got {y}",
                    self.name
                )));
            }
        }
        if self.vertical_bw_3d < self.noc_bw_2d {
            return Err(Error::Config(format!(
                "node `{}`: vertical_bw_3d ({}) must be >= noc_bw_2d ({})",
                self.name, self.vertical_bw_3d, self.noc_bw_2d
            )));
        }
        if !(self.memory_array_overhead.is_finite() && self.memory_array_overhead >= 1.0) {
            return Err(Error::Config(format!(
                "node `{}`: memory_array_overhead must be >= 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Wafer radius (mm).
    pub fn wafer_radius_mm(&self) -> f64 {
        self.wafer_diameter_mm / 2.0
    }

    /// Usable wafer area (mm^2).
    pub fn wafer_area_mm2(&self) -> f64 {
        let r = self.wafer_radius_mm();
        std::f64::consts::PI * r * r
    }
}

/// An ordered collection of technology nodes keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechTable {
    pub nodes: Vec<TechNode>,
}

impl TechTable {
    /// Builds a table from nodes, checking name uniqueness and node
    /// invariants.
    pub fn new(nodes: Vec<TechNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("technology table is empty".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            node.validate()?;
            if nodes[..i].iter().any(|n| n.name == node.name) {
                return Err(Error::Config(format!(
                    "duplicate node name `{}` in technology table",
                    node.name
                )));
            }
        }
        Ok(TechTable { nodes })
    }

    /// Parses a table from a JSON document. Unknown keys are rejected with a
    /// diagnostic naming the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let table: TechTable = serde_json::from_str(text)?;
        TechTable::new(table.nodes)
    }

    /// Looks a node up by name.
    pub fn get(&self, name: &str) -> Result<&TechNode> {
        self.nodes.iter().find(|n| n.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
            Error::Config(format!(
                "unknown node `{name}` (available: {})",
                known.join(", ")
            ))
        })
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }
}

/// Fabrication yield of a die of `die_area` mm^2.
///
/// With `fixed_yield` set the node's constant is returned regardless of
/// area; otherwise the negative-binomial model
/// `Y = (1 + A * d0 / alpha)^(-alpha)` applies. The result lies in (0, 1]
/// and is non-increasing in area.
pub fn yield_for_area(node: &TechNode, die_area: f64) -> Result<f64> {
    if !die_area.is_finite() || die_area < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "die area must be finite and >= 0, got {die_area}"
        )));
    }
    if let Some(y) = node.fixed_yield {
        return Ok(y);
    }
    Ok((1.0 + die_area * node.defect_density / node.cluster_alpha).powf(-node.cluster_alpha))
}

/// Whole dies obtainable from one wafer.
///
/// Standard packing estimate: `floor(pi r^2 / A) - floor(pi d / sqrt(2 A))`,
/// the gross die count minus the edge loss, clamped at zero.
pub fn dies_per_wafer(node: &TechNode, die_area: f64) -> Result<u64> {
    if !die_area.is_finite() || die_area <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "die area must be finite and > 0, got {die_area}"
        )));
    }
    let gross = (node.wafer_area_mm2() / die_area).floor();
    let edge = (std::f64::consts::PI * node.wafer_diameter_mm / (2.0 * die_area).sqrt()).floor();
    Ok((gross - edge).max(0.0) as u64)
}

/// Unusable wafer silicon amortized per die (mm^2).
///
/// `(pi r^2 - N * A) / N` with `N = dies_per_wafer(node, A)`.
pub fn wasted_area_per_die(node: &TechNode, die_area: f64) -> Result<f64> {
    let n = dies_per_wafer(node, die_area)?;
    if n == 0 {
        return Err(Error::NoFeasibleDie {
            die_area_mm2: die_area,
        });
    }
    let n = n as f64;
    Ok((node.wafer_area_mm2() - n * die_area) / n)
}
