//! Embodied-carbon model and the carbon-delay product.
//!
//! Per die, fabrication carbon is `CFPA * A_die + CFPA_Si * A_wasted`,
//! where the carbon footprint per unit area divides the yield:
//! `CFPA = (CI_fab * EPA + C_gas + C_material) / Y`. Bonding carbon applies
//! to the bonded interface (taken as the smaller of the two stacked dies,
//! 3D only) and packaging carbon to the package outline. The memory die
//! shares the logic die's CFPA coefficients unless the node carries
//! explicit overrides.

use serde::{Deserialize, Serialize};

use crate::area::AreaBreakdown;
use crate::error::{Error, Result};
use crate::techlib::{self, Dims, TechNode};

/// Which die's CFPA coefficients to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DieKind {
    Logic,
    Memory,
}

/// Embodied-carbon components of one configuration (all gCO2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonBreakdown {
    pub c_die_logic: f64,
    pub c_die_memory: f64,
    /// Zero for 2D designs.
    pub c_bonding: f64,
    pub c_packaging: f64,
    pub total: f64,
}

impl CarbonBreakdown {
    fn new(c_die_logic: f64, c_die_memory: f64, c_bonding: f64, c_packaging: f64) -> Self {
        CarbonBreakdown {
            c_die_logic,
            c_die_memory,
            c_bonding,
            c_packaging,
            total: c_die_logic + c_die_memory + c_bonding + c_packaging,
        }
    }
}

fn cfpa_numerator(node: &TechNode, kind: DieKind) -> f64 {
    let (ci, epa, gas, mat) = match (kind, &node.memory_cfpa) {
        (DieKind::Memory, Some(ov)) => (
            ov.ci_fab.unwrap_or(node.ci_fab),
            ov.epa.unwrap_or(node.epa),
            ov.c_gas.unwrap_or(node.c_gas),
            ov.c_material.unwrap_or(node.c_material),
        ),
        _ => (node.ci_fab, node.epa, node.c_gas, node.c_material),
    };
    ci * epa + gas + mat
}

/// Yield-adjusted carbon footprint per unit area for a die of the given
/// size (gCO2/mm^2), using the selected die kind's coefficients.
pub fn cfpa_for_die_kind(node: &TechNode, die_area: f64, kind: DieKind) -> Result<f64> {
    let y = techlib::yield_for_area(node, die_area)?;
    if y <= 0.0 {
        return Err(Error::Guard(format!(
            "yield model returned {y} for area {die_area}"
        )));
    }
    Ok(cfpa_numerator(node, kind) / y)
}

/// Yield-adjusted carbon footprint per unit area (gCO2/mm^2) with the
/// shared (logic) coefficients.
pub fn cfpa_for_die(node: &TechNode, die_area: f64) -> Result<f64> {
    cfpa_for_die_kind(node, die_area, DieKind::Logic)
}

/// Fabrication carbon of one die (gCO2): processed area at CFPA plus the
/// per-die share of wasted wafer silicon at the silicon-waste rate.
pub fn die_carbon_kind(node: &TechNode, die_area: f64, kind: DieKind) -> Result<f64> {
    let cfpa = cfpa_for_die_kind(node, die_area, kind)?;
    let wasted = techlib::wasted_area_per_die(node, die_area)?;
    Ok(cfpa * die_area + node.cfpa_si_waste * wasted)
}

/// Fabrication carbon of one die (gCO2) with shared coefficients.
pub fn die_carbon(node: &TechNode, die_area: f64) -> Result<f64> {
    die_carbon_kind(node, die_area, DieKind::Logic)
}

/// Die-bonding carbon (gCO2), proportional to the bonded interface area.
pub fn bonding_carbon(node: &TechNode, bonded_area: f64) -> f64 {
    node.cfpa_bonding * bonded_area
}

/// Packaging carbon (gCO2), proportional to the package area.
pub fn packaging_carbon(node: &TechNode, package_area: f64) -> f64 {
    node.cfpa_packaging * package_area
}

/// Total embodied carbon of a configuration: both dies, bonding (3D only,
/// over the smaller die) and packaging. A zero-area die contributes
/// nothing (no die is fabricated).
pub fn embodied_carbon(
    node: &TechNode,
    areas: &AreaBreakdown,
    dims: Dims,
) -> Result<CarbonBreakdown> {
    let die = |area: f64, kind: DieKind| -> Result<f64> {
        if area == 0.0 {
            Ok(0.0)
        } else {
            die_carbon_kind(node, area, kind)
        }
    };
    let c_logic = die(areas.logic_die, DieKind::Logic)?;
    let c_memory = die(areas.memory_die, DieKind::Memory)?;
    let c_bonding = match dims {
        Dims::D3 => bonding_carbon(node, areas.logic_die.min(areas.memory_die)),
        Dims::D2 => 0.0,
    };
    let c_packaging = packaging_carbon(node, areas.package);
    Ok(CarbonBreakdown::new(c_logic, c_memory, c_bonding, c_packaging))
}

/// The scalar objective: embodied carbon times task delay (gCO2 * s).
pub fn carbon_delay_product(carbon_g: f64, delay_s: f64) -> f64 {
    debug_assert!(carbon_g >= 0.0 && delay_s >= 0.0);
    carbon_g * delay_s
}

/// Header of the carbon report CSV.
pub const REPORT_CSV_HEADER: &str =
    "config_id,node,dims,c_logic,c_memory,c_bonding,c_packaging,c_total,delay_s,cdp";

/// One carbon report CSV row.
pub fn report_csv_row(
    config_id: &str,
    node: &str,
    dims: Dims,
    carbon: &CarbonBreakdown,
    delay_s: f64,
    cdp: f64,
) -> String {
    format!(
        "{config_id},{node},{dims},{},{},{},{},{},{delay_s},{cdp}",
        carbon.c_die_logic, carbon.c_die_memory, carbon.c_bonding, carbon.c_packaging, carbon.total
    )
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::techlib::{MemoryCfpaOverride, TechNode};

    fn node_with(ci: f64, epa: f64, gas: f64, mat: f64) -> TechNode {
        TechNode {
            name: "unit".into(),
            feature_size_nm: 45.0,
            clock_hz: 1.0e9,
            ci_fab: ci,
            epa,
            c_gas: gas,
            c_material: mat,
            cfpa_si_waste: 0.0,
            cfpa_bonding: 0.0,
            cfpa_packaging: 0.0,
            defect_density: 0.0,
            cluster_alpha: 3.0,
            fixed_yield: None,
            wafer_diameter_mm: 300.0,
            sram_bit_area_mm2: 1e-7,
            regfile_bit_area_mm2: 2e-7,
            gate_area_mm2: 1e-7,
            dram_bw_bytes_per_cycle: 16.0,
            noc_bw_2d: 4.0,
            vertical_bw_3d: 16.0,
            memory_array_overhead: 1.25,
            memory_cfpa: None,
        }
    }

    fn breakdown(logic: f64, memory: f64, package: f64) -> AreaBreakdown {
        AreaBreakdown {
            logic_die: logic,
            memory_die: memory,
            package,
            per_pe: 0.0,
            mac: 0.0,
            local_buffer: 0.0,
            noc: 0.0,
            wasted_logic: 0.0,
            wasted_memory: 0.0,
        }
    }

    #[test]
    fn cfpa_direct_substitution() {
        // Y = 1 (zero defects): (500 * 0.02 + 2 + 3) = 15.
        let node = node_with(500.0, 0.02, 2.0, 3.0);
        assert_eq!(cfpa_for_die(&node, 100.0).unwrap(), 15.0);
    }

    #[test]
    fn halving_yield_doubles_cfpa() {
        let mut node = node_with(500.0, 0.02, 2.0, 3.0);
        node.fixed_yield = Some(1.0);
        let full = cfpa_for_die(&node, 10.0).unwrap();
        node.fixed_yield = Some(0.5);
        assert_eq!(cfpa_for_die(&node, 10.0).unwrap(), 2.0 * full);
    }

    #[test]
    fn die_carbon_substitution() {
        // CFPA 15, area 10, no waste charge -> 150.
        let node = node_with(500.0, 0.02, 2.0, 3.0);
        let c = die_carbon(&node, 10.0).unwrap();
        assert!((c - 150.0).abs() < 1e-12);
        // Zero-coefficient node -> 0 regardless of area.
        let zero = node_with(0.0, 0.0, 0.0, 0.0);
        assert_eq!(die_carbon(&zero, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn waste_term_charged_at_si_rate() {
        let mut node = node_with(0.0, 0.0, 0.0, 0.0);
        node.cfpa_si_waste = 0.5;
        // 100 mm^2 die on a 300 mm wafer wastes ~10.4466 mm^2 per die.
        let c = die_carbon(&node, 100.0).unwrap();
        assert!((c - 0.5 * 10.44661672776616854).abs() < 1e-10, "c = {c}");
    }

    #[test]
    fn bonding_and_packaging_substitution() {
        let mut node = node_with(0.0, 0.0, 0.0, 0.0);
        assert_eq!(bonding_carbon(&node, 50.0), 0.0);
        node.cfpa_bonding = 0.3;
        assert!((bonding_carbon(&node, 50.0) - 15.0).abs() < 1e-12);
        node.cfpa_packaging = 0.2;
        assert!((packaging_carbon(&node, 60.0) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_give_zero_breakdown() {
        let node = node_with(0.0, 0.0, 0.0, 0.0);
        let b = embodied_carbon(&node, &breakdown(10.0, 20.0, 36.0), Dims::D3).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(
            (b.c_die_logic, b.c_die_memory, b.c_bonding, b.c_packaging),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn dims_differ_only_in_bonding_and_package_terms() {
        let mut node = node_with(500.0, 0.02, 2.0, 3.0);
        node.cfpa_bonding = 0.3;
        node.cfpa_packaging = 0.15;
        let logic = 10.0;
        let memory = 20.0;
        let b3 = embodied_carbon(&node, &breakdown(logic, memory, 24.0), Dims::D3).unwrap();
        let b2 = embodied_carbon(&node, &breakdown(logic, memory, 36.0), Dims::D2).unwrap();
        assert_eq!(b3.c_die_logic, b2.c_die_logic);
        assert_eq!(b3.c_die_memory, b2.c_die_memory);
        assert_eq!(b2.c_bonding, 0.0);
        assert!((b3.c_bonding - 0.3 * 10.0).abs() < 1e-12);
        let diff = (b3.total - b2.total) - (b3.c_bonding + b3.c_packaging - b2.c_packaging);
        assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn components_sum_to_total_exactly() {
        let mut node = node_with(450.0, 0.015, 1.2, 0.8);
        node.cfpa_bonding = 1.0;
        node.cfpa_packaging = 0.1;
        node.cfpa_si_waste = 0.25;
        node.defect_density = 0.002;
        let b = embodied_carbon(&node, &breakdown(37.5, 81.25, 97.5), Dims::D3).unwrap();
        assert_eq!(
            b.total,
            b.c_die_logic + b.c_die_memory + b.c_bonding + b.c_packaging
        );
    }

    #[test]
    fn memory_override_changes_memory_die_only() {
        let mut node = node_with(500.0, 0.02, 2.0, 3.0);
        node.memory_cfpa = Some(MemoryCfpaOverride {
            epa: Some(0.01),
            ..Default::default()
        });
        let logic = cfpa_for_die_kind(&node, 10.0, DieKind::Logic).unwrap();
        let memory = cfpa_for_die_kind(&node, 10.0, DieKind::Memory).unwrap();
        assert_eq!(logic, 15.0);
        assert_eq!(memory, 10.0);
    }

    #[test]
    fn bundled_14nm_cfpa_spot_value() {
        // (500 * 0.015 + 1.2 + 1.0) / (1 + 50 * 0.0015 / 3)^-3, evaluated
        // independently in high precision.
        let table = crate::assets::builtin_tech_table().unwrap();
        let node = table.get("14nm").unwrap();
        let cfpa = cfpa_for_die(node, 50.0).unwrap();
        assert!((cfpa - 10.4458390625).abs() < 1e-10, "cfpa = {cfpa}");
    }

    #[test]
    fn cdp_is_a_plain_product() {
        assert_eq!(carbon_delay_product(0.0, 5.0), 0.0);
        assert_eq!(carbon_delay_product(100.0, 0.05), 5.0);
        // Scaling carbon by c and delay by 1/c preserves the product.
        let base = carbon_delay_product(40.0, 0.25);
        let scaled = carbon_delay_product(40.0 * 8.0, 0.25 / 8.0);
        assert!((base - scaled).abs() < 1e-12);
    }
}
