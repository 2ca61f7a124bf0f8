//! Composed experiment flows: single-design reports and the
//! four-approach comparison sweep over a PE-count ladder.

use serde::{Deserialize, Serialize};

use crate::approxmul::MultiplierRecord;
use crate::area::{area_breakdown, AreaBreakdown, AreaConfig};
use crate::carbon::{carbon_delay_product, embodied_carbon, CarbonBreakdown};
use crate::dse::{evolve, ArchChromosome, DseResult, EvalContext, GaConfig, GeneDomains};
use crate::error::{Error, Result};
use crate::perf::{network_delay, Infeasible, PerfReport, Workload};
use crate::techlib::{Dims, TechNode};

/// Area, carbon and delay of one fully specified design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub chromosome: ArchChromosome,
    pub node: String,
    pub dims: Dims,
    pub multiplier_id: String,
    pub areas: AreaBreakdown,
    pub carbon: CarbonBreakdown,
    pub perf: PerfReport,
    pub cdp: f64,
}

/// A design either evaluates cleanly or is architecturally infeasible.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignOutcome {
    Ok(Box<DesignReport>),
    Infeasible(Infeasible),
}

/// Evaluates one explicit configuration end to end.
pub fn report_design(
    chrom: &ArchChromosome,
    node: &TechNode,
    dims: Dims,
    workload: &Workload,
    multiplier: &MultiplierRecord,
    area_config: &AreaConfig,
) -> Result<DesignOutcome> {
    let areas = area_breakdown(node, chrom, multiplier, dims, area_config)?;
    let carbon = embodied_carbon(node, &areas, dims)?;
    match network_delay(workload, chrom, node, dims) {
        Ok(perf) => {
            let cdp = carbon_delay_product(carbon.total, perf.d_task_s);
            Ok(DesignOutcome::Ok(Box::new(DesignReport {
                chromosome: *chrom,
                node: node.name.clone(),
                dims,
                multiplier_id: multiplier.id.clone(),
                areas,
                carbon,
                perf,
                cdp,
            })))
        }
        Err(inf) => Ok(DesignOutcome::Infeasible(inf)),
    }
}

/// The fixed PE ladder of the comparison sweep with square-ish Px x Py
/// factorizations.
pub const SWEEP_PE_LADDER: [(u64, (u32, u32)); 6] = [
    (64, (8, 8)),
    (128, (16, 8)),
    (256, (16, 16)),
    (512, (32, 16)),
    (1024, (32, 32)),
    (2048, (64, 32)),
];

/// Buffer scaling of the ladder: `B_local = 64 B * (max array dim / 8)`,
/// `B_global = 128 KiB * (pe_count / 64)`.
pub fn sweep_chromosome(pe_count: u64, px: u32, py: u32) -> ArchChromosome {
    let dim = px.max(py) as u64;
    ArchChromosome {
        px,
        py,
        b_local: 64 * dim / 8,
        b_global: 128 * 1024 * pe_count / 64,
    }
}

/// One sweep CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub approach: String,
    pub pe_count: u64,
    pub node: String,
    pub carbon_total: f64,
    pub carbon_per_mm2: f64,
    pub delay_s: f64,
    pub fps: f64,
    pub cdp: f64,
}

/// Comparison approaches, in output order.
pub const SWEEP_APPROACHES: [&str; 4] = ["2D-Exact", "3D-Exact", "3D-Appx", "GA-APPX-CDP"];

fn row_from_report(approach: &str, report: &DesignReport) -> SweepRow {
    SweepRow {
        approach: approach.to_string(),
        pe_count: report.chromosome.pe_count(),
        node: report.node.clone(),
        carbon_total: report.carbon.total,
        carbon_per_mm2: report.carbon.total / report.areas.package,
        delay_s: report.perf.d_task_s,
        fps: report.perf.fps,
        cdp: report.cdp,
    }
}

/// Outcome of a full sweep: the rows plus the GA run behind the
/// `GA-APPX-CDP` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub ga_result: DseResult,
    pub selected_multiplier: String,
}

/// Runs the four-approach comparison on one node and workload.
///
/// The three ladder approaches evaluate every PE count with fixed,
/// proportionally scaled buffers: exact multipliers in 2D and 3D, then the
/// delta-selected approximate multiplier in 3D. `GA-APPX-CDP` runs the
/// genetic algorithm over `domains` with the same approximate multiplier
/// and contributes one row at its chosen design.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    node: &TechNode,
    workload: &Workload,
    library: &[MultiplierRecord],
    delta: f64,
    fps_target: Option<f64>,
    ga: &GaConfig,
    domains: &GeneDomains,
    area_config: &AreaConfig,
) -> Result<SweepOutcome> {
    let exact = library
        .iter()
        .find(|r| r.spec.family == crate::approxmul::MulFamily::Exact)
        .ok_or_else(|| Error::Config("library has no exact multiplier".into()))?;
    let approx = crate::accproxy::select_multiplier(library, &workload.name, &node.name, delta)?;

    let mut rows = Vec::new();
    let ladder: [(&str, Dims, &MultiplierRecord); 3] = [
        ("2D-Exact", Dims::D2, exact),
        ("3D-Exact", Dims::D3, exact),
        ("3D-Appx", Dims::D3, approx),
    ];
    for (approach, dims, mult) in ladder {
        for (pe, (px, py)) in SWEEP_PE_LADDER {
            let chrom = sweep_chromosome(pe, px, py);
            match report_design(&chrom, node, dims, workload, mult, area_config)? {
                DesignOutcome::Ok(report) => rows.push(row_from_report(approach, &report)),
                DesignOutcome::Infeasible(inf) => {
                    return Err(Error::Config(format!(
                        "sweep ladder config {chrom} is unschedulable: {inf}"
                    )))
                }
            }
        }
    }

    let ctx = EvalContext {
        node,
        dims: Dims::D3,
        workload,
        multiplier: approx,
        fps_target,
        area_config,
    };
    let ga_result = evolve(ga, &ctx, domains)?;
    match report_design(
        &ga_result.best.chromosome,
        node,
        Dims::D3,
        workload,
        approx,
        area_config,
    )? {
        DesignOutcome::Ok(report) => rows.push(row_from_report("GA-APPX-CDP", &report)),
        DesignOutcome::Infeasible(inf) => {
            return Err(Error::Guard(format!(
                "GA returned an unschedulable best design: {inf}"
            )))
        }
    }

    Ok(SweepOutcome {
        rows,
        ga_result,
        selected_multiplier: approx.id.clone(),
    })
}

/// Sweep CSV: `approach,pe_count,node,carbon_total,carbon_per_mm2,delay_s,fps,cdp`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("approach,pe_count,node,carbon_total,carbon_per_mm2,delay_s,fps,cdp\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.approach, r.pe_count, r.node, r.carbon_total, r.carbon_per_mm2, r.delay_s, r.fps, r.cdp
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_buffers_scale_with_array() {
        let c64 = sweep_chromosome(64, 8, 8);
        assert_eq!((c64.b_local, c64.b_global), (64, 128 * 1024));
        let c2048 = sweep_chromosome(2048, 64, 32);
        assert_eq!((c2048.b_local, c2048.b_global), (512, 4 * 1024 * 1024));
    }

    #[test]
    fn ladder_factorizations_multiply_out() {
        for (pe, (px, py)) in SWEEP_PE_LADDER {
            assert_eq!(px as u64 * py as u64, pe);
        }
    }
}
