//! Subcommand implementations: shared loading helpers plus the five
//! pipeline entry points.

use std::fs;
use std::path::Path;

use greenstack::accproxy::{accuracy_table_csv, measure_library, select_multiplier};
use greenstack::approxmul::{
    build_library, default_spec_set, library_to_csv, MulFamily, MultiplierRecord, MultiplierSpec,
};
use greenstack::assets;
use greenstack::carbon::{report_csv_row, REPORT_CSV_HEADER};
use greenstack::dse::{convergence_csv, evolve, ArchChromosome, EvalContext};
use greenstack::error::{Error, Result};
use greenstack::experiments::{report_design, run_sweep, sweep_csv, DesignOutcome, DesignReport};
use greenstack::perf::Workload;
use greenstack::techlib::TechTable;

use crate::config::RunConfig;
use crate::CliError;

fn load_table(cfg: &RunConfig) -> Result<TechTable> {
    match &cfg.nodes_table {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read node table {}: {e}", path.display()))
            })?;
            TechTable::from_json(&text)
        }
        None => assets::builtin_tech_table(),
    }
}

fn load_workload(cfg: &RunConfig) -> Result<Workload> {
    match cfg.workload.strip_prefix("builtin:") {
        Some(name) => assets::builtin_workload(name),
        None => {
            let path = Path::new(&cfg.workload);
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read workload {}: {e}", path.display()))
            })?;
            Workload::from_json(&text)
        }
    }
}

fn load_specs(cfg: &RunConfig) -> Result<Vec<MultiplierSpec>> {
    if cfg.multiplier_library == "builtin" {
        return default_spec_set(cfg.mantissa_width);
    }
    let path = Path::new(&cfg.multiplier_library);
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Config(format!(
            "cannot read multiplier library {}: {e}",
            path.display()
        ))
    })?;
    let specs: Vec<MultiplierSpec> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("multiplier library {}: {e}", path.display())))?;
    if specs.is_empty() {
        return Err(Error::Config("multiplier library is empty".into()));
    }
    Ok(specs)
}

/// Builds the library and measures accuracy drops for the workload on the
/// bundled proxy model and dataset.
fn measured_library(
    cfg: &RunConfig,
    table: &TechTable,
    workload_name: &str,
) -> Result<Vec<MultiplierRecord>> {
    let specs = load_specs(cfg)?;
    let mut library = build_library(&specs, table)?;
    let model = assets::builtin_model()?;
    let dataset = assets::builtin_dataset()?;
    measure_library(&model, &dataset, &mut library, workload_name)?;
    Ok(library)
}

fn write_out(cfg: &RunConfig, file: &str, contents: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(file);
    fs::write(&path, contents)?;
    Ok(path)
}

fn print_design(report: &DesignReport) {
    println!("configuration   {}", report.chromosome);
    println!("node / dims     {} / {}", report.node, report.dims);
    println!("multiplier      {}", report.multiplier_id);
    println!(
        "area            logic {:.4} mm^2, memory {:.4} mm^2, package {:.4} mm^2",
        report.areas.logic_die, report.areas.memory_die, report.areas.package
    );
    println!(
        "carbon          {:.4} gCO2 (logic {:.4}, memory {:.4}, bonding {:.4}, packaging {:.4})",
        report.carbon.total,
        report.carbon.c_die_logic,
        report.carbon.c_die_memory,
        report.carbon.c_bonding,
        report.carbon.c_packaging
    );
    println!(
        "delay           {:.6e} s ({} cycles, {:.1} fps)",
        report.perf.d_task_s, report.perf.total_cycles, report.perf.fps
    );
    println!("cdp             {:.6e} gCO2*s", report.cdp);
}

pub fn characterize(
    cfg: &RunConfig,
    width: Option<u32>,
    families: Option<&str>,
) -> std::result::Result<(), CliError> {
    let width = width.unwrap_or(cfg.mantissa_width);
    let table = load_table(cfg)?;
    let mut specs = default_spec_set(width)?;
    if let Some(families) = families {
        let wanted: Vec<MulFamily> = families
            .split(',')
            .map(|f| f.trim().parse())
            .collect::<Result<_>>()?;
        specs.retain(|s| wanted.contains(&s.family));
        if specs.is_empty() {
            return Err(Error::Config(format!("no specs match families `{families}`")).into());
        }
    }
    let library = build_library(&specs, &table)?;
    let path = write_out(cfg, "characterization.csv", &library_to_csv(&library, &table))?;
    println!(
        "characterized {} multipliers at width {width} -> {}",
        library.len(),
        path.display()
    );
    Ok(())
}

pub fn accuracy(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let table = load_table(cfg)?;
    table.get(&cfg.node)?;
    let workload = load_workload(cfg)?;
    let specs = load_specs(cfg)?;
    let mut library = build_library(&specs, &table)?;
    let model = assets::builtin_model()?;
    let dataset = assets::builtin_dataset()?;
    let records = measure_library(&model, &dataset, &mut library, &workload.name)?;
    let csv = accuracy_table_csv(&library, &records, &workload.name, &cfg.node)?;
    let path = write_out(cfg, "accuracy.csv", &csv)?;
    println!(
        "measured {} multipliers on `{}` ({} samples, exact accuracy {:.4}) -> {}",
        records.len(),
        model.name,
        dataset.len(),
        records[0].exact_accuracy,
        path.display()
    );
    Ok(())
}

pub fn report(
    cfg: &RunConfig,
    px: u32,
    py: u32,
    b_local: u64,
    b_global: u64,
) -> std::result::Result<(), CliError> {
    let table = load_table(cfg)?;
    let node = table.get(&cfg.node)?;
    let workload = load_workload(cfg)?;
    let library = measured_library(cfg, &table, &workload.name)?;
    let mult = select_multiplier(&library, &workload.name, &cfg.node, cfg.accuracy_delta)?;
    let chrom = ArchChromosome::new(px, py, b_local, b_global);
    match report_design(&chrom, node, cfg.dims, &workload, mult, &cfg.area)? {
        DesignOutcome::Ok(design) => {
            print_design(&design);
            let row = report_csv_row(
                &chrom.config_id(),
                &cfg.node,
                cfg.dims,
                &design.carbon,
                design.perf.d_task_s,
                design.cdp,
            );
            let path = write_out(cfg, "report.csv", &format!("{REPORT_CSV_HEADER}\n{row}\n"))?;
            println!("report -> {}", path.display());
            Ok(())
        }
        DesignOutcome::Infeasible(inf) => Err(CliError::Infeasible(inf.to_string())),
    }
}

pub fn optimize(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let table = load_table(cfg)?;
    let node = table.get(&cfg.node)?;
    let workload = load_workload(cfg)?;
    let library = measured_library(cfg, &table, &workload.name)?;
    let mult = select_multiplier(&library, &workload.name, &cfg.node, cfg.accuracy_delta)?;
    println!(
        "selected multiplier {} (delta <= {})",
        mult.id, cfg.accuracy_delta
    );
    let ctx = EvalContext {
        node,
        dims: cfg.dims,
        workload: &workload,
        multiplier: mult,
        fps_target: cfg.fps_target,
        area_config: &cfg.area,
    };
    let result = evolve(&cfg.ga, &ctx, &cfg.domains)?;
    let conv_path = write_out(cfg, "convergence.csv", &convergence_csv(&result))?;

    let best = &result.best;
    let row = report_csv_row(
        &best.chromosome.config_id(),
        &cfg.node,
        cfg.dims,
        &best.carbon,
        best.delay_s,
        best.cdp,
    );
    let best_path = write_out(cfg, "best.csv", &format!("{REPORT_CSV_HEADER}\n{row}\n"))?;
    println!(
        "GA: {} generations, {} evaluations, best {}",
        result.history.len(),
        result.evaluations,
        best.chromosome
    );
    println!("convergence -> {}", conv_path.display());
    println!("best design -> {}", best_path.display());

    if !best.feasible {
        return Err(CliError::Infeasible(format!(
            "no design meets the FPS target; closest is {} with shortfall {:.3} fps",
            best.chromosome, best.violation
        )));
    }
    println!(
        "best: carbon {:.4} gCO2, delay {:.6e} s ({:.1} fps), cdp {:.6e}",
        best.carbon.total, best.delay_s, best.fps, best.cdp
    );
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let table = load_table(cfg)?;
    let node = table.get(&cfg.node)?;
    let workload = load_workload(cfg)?;
    let library = measured_library(cfg, &table, &workload.name)?;
    let outcome = run_sweep(
        node,
        &workload,
        &library,
        cfg.accuracy_delta,
        cfg.fps_target,
        &cfg.ga,
        &cfg.domains,
        &cfg.area,
    )?;
    let path = write_out(cfg, "sweep.csv", &sweep_csv(&outcome.rows))?;
    println!(
        "sweep on {} / `{}`: {} rows, approximate multiplier {}, GA best {}",
        cfg.node,
        workload.name,
        outcome.rows.len(),
        outcome.selected_multiplier,
        outcome.ga_result.best.chromosome
    );
    println!("sweep -> {}", path.display());
    Ok(())
}
