//! CLI acceptance: seeded determinism of `optimize` (byte-identical output
//! files), validity under a different seed, and the exit-code contract.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_greenstack"))
}

fn run_optimize(out: &Path, seed: u64) -> std::process::Output {
    bin()
        .args([
            "--node",
            "14nm",
            "--dims",
            "3d",
            "--delta",
            "0.03",
            "--seed",
            &seed.to_string(),
            "--out",
            out.to_str().unwrap(),
            "--workload",
            "builtin:dense_toy",
            "optimize",
        ])
        .output()
        .expect("spawn greenstack")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn criterion_8_optimize_determinism() {
    let start = Instant::now();
    let tmp = std::env::temp_dir().join(format!("greenstack-accept-{}", std::process::id()));
    let (a, b, c) = (tmp.join("a"), tmp.join("b"), tmp.join("c"));

    let out_a = run_optimize(&a, 1234);
    assert!(out_a.status.success(), "run a failed: {out_a:?}");
    let out_b = run_optimize(&b, 1234);
    assert!(out_b.status.success(), "run b failed: {out_b:?}");

    // Same seed: byte-identical CSVs.
    assert_eq!(
        read(&a.join("convergence.csv")),
        read(&b.join("convergence.csv")),
        "convergence CSVs differ between identical seeded runs"
    );
    assert_eq!(read(&a.join("best.csv")), read(&b.join("best.csv")));

    // Different seed: a valid result upholding the invariants.
    let out_c = run_optimize(&c, 99);
    assert!(out_c.status.success(), "run c failed: {out_c:?}");
    let convergence = read(&c.join("convergence.csv"));
    let mut lines = convergence.lines();
    assert_eq!(
        lines.next().unwrap(),
        "generation,best_cdp,median_cdp,best_px,best_py,best_blocal,best_bglobal,feasible_count"
    );
    let mut prev_best = f64::INFINITY;
    let mut generations = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 8, "bad row: {line}");
        let best: f64 = fields[1].parse().unwrap();
        let median: f64 = fields[2].parse().unwrap();
        assert!(best <= prev_best, "best cdp rose at generation {}", fields[0]);
        assert!(median >= best);
        let feasible: usize = fields[7].parse().unwrap();
        assert!(feasible <= 64);
        prev_best = best;
        generations += 1;
    }
    assert_eq!(generations, 100);

    let best_csv = read(&c.join("best.csv"));
    let row: Vec<&str> = best_csv.lines().nth(1).unwrap().split(',').collect();
    let (c_logic, c_memory, c_bond, c_pack, c_total): (f64, f64, f64, f64, f64) = (
        row[3].parse().unwrap(),
        row[4].parse().unwrap(),
        row[5].parse().unwrap(),
        row[6].parse().unwrap(),
        row[7].parse().unwrap(),
    );
    let delay: f64 = row[8].parse().unwrap();
    let cdp: f64 = row[9].parse().unwrap();
    assert!((c_logic + c_memory + c_bond + c_pack - c_total).abs() <= 1e-12 * c_total.max(1.0));
    assert!((c_total * delay - cdp).abs() <= 1e-12 * cdp.max(1.0));
    assert_eq!(prev_best, cdp, "reported best must equal the final history best");

    std::fs::remove_dir_all(&tmp).ok();
    println!(
        "[PASS] criterion 8 (optimize determinism): byte-identical seeded reruns, valid alternate seed, {:?}",
        start.elapsed()
    );
}

#[test]
fn exit_codes_follow_the_contract() {
    // 0: success.
    let ok = bin()
        .args(["characterize", "--out", "/tmp/greenstack-exitcodes"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));

    // 2: configuration errors (width guard, unknown node).
    let width = bin()
        .args(["characterize", "--width", "13", "--out", "/tmp/greenstack-exitcodes"])
        .output()
        .unwrap();
    assert_eq!(width.status.code(), Some(2));
    let node = bin()
        .args(["--node", "3nm", "report", "--px", "4", "--py", "4", "--b-local", "64", "--b-global", "32768"])
        .output()
        .unwrap();
    assert_eq!(node.status.code(), Some(2));

    // 3: infeasible explicit configuration (local buffer below one slice).
    let infeasible = bin()
        .args([
            "--out",
            "/tmp/greenstack-exitcodes",
            "report",
            "--px",
            "4",
            "--py",
            "4",
            "--b-local",
            "8",
            "--b-global",
            "32768",
        ])
        .output()
        .unwrap();
    assert_eq!(infeasible.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&infeasible.stderr);
    assert!(stderr.contains("infeasible"), "stderr: {stderr}");

    std::fs::remove_dir_all("/tmp/greenstack-exitcodes").ok();
}

#[test]
fn characterize_row_counts_follow_the_spec_set() {
    let tmp = std::env::temp_dir().join(format!("greenstack-char-{}", std::process::id()));
    let out = bin()
        .args(["characterize", "--out", tmp.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = read(&tmp.join("characterization.csv"));
    // Header plus the 19 default width-8 specs.
    assert_eq!(csv.lines().count(), 20);
    assert!(csv.starts_with("id,family,width,param,mre,med,wce,er,gate_count,"));

    // An exact-only request characterizes a single zero-error row.
    let out = bin()
        .args(["characterize", "--families", "exact", "--out", tmp.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = read(&tmp.join("characterization.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("exact_w8,exact,8,0,0,0,0,0,600,"));
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn config_file_and_env_var_are_honored() {
    let tmp = std::env::temp_dir().join(format!("greenstack-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let cfg_path = tmp.join("run.json");
    std::fs::write(
        &cfg_path,
        format!(
            "{{\"node\":\"7nm\",\"workload\":\"builtin:dense_toy\",\"out_dir\":\"{}\"}}",
            tmp.join("cfg-out").display()
        ),
    )
    .unwrap();

    // Explicit --config flag.
    let out = bin()
        .args(["--config", cfg_path.to_str().unwrap(), "accuracy"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(tmp.join("cfg-out/accuracy.csv").exists());

    // Environment variable fallback, with a flag override on top.
    let out = bin()
        .env("GREENSTACK_CONFIG", cfg_path.to_str().unwrap())
        .args(["--out", tmp.join("env-out").to_str().unwrap(), "accuracy"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(tmp.join("env-out/accuracy.csv").exists());

    // A config referencing a missing workload file is a configuration error.
    std::fs::write(&cfg_path, "{\"workload\":\"/nonexistent/w.json\"}").unwrap();
    let out = bin()
        .args(["--config", cfg_path.to_str().unwrap(), "accuracy"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn sweep_emits_the_four_approach_table() {
    let tmp = std::env::temp_dir().join(format!("greenstack-sweep-{}", std::process::id()));
    let out = bin()
        .args([
            "--node",
            "45nm",
            "--delta",
            "0.03",
            "--seed",
            "42",
            "--workload",
            "builtin:dense_toy",
            "--out",
            tmp.to_str().unwrap(),
            "sweep",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let csv = read(&tmp.join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "approach,pe_count,node,carbon_total,carbon_per_mm2,delay_s,fps,cdp"
    );
    let rows: Vec<&str> = lines.collect();
    // Three six-point ladders plus one GA row.
    assert_eq!(rows.len(), 19);
    for approach in ["2D-Exact", "3D-Exact", "3D-Appx"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(approach)).count(), 6);
    }
    assert_eq!(rows.iter().filter(|r| r.starts_with("GA-APPX-CDP")).count(), 1);
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn unsatisfiable_fps_target_reports_min_violation_and_exits_3() {
    let tmp = std::env::temp_dir().join(format!("greenstack-fps-{}", std::process::id()));
    let out = bin()
        .args([
            "--node",
            "14nm",
            "--fps",
            "1e12",
            "--seed",
            "5",
            "--out",
            tmp.to_str().unwrap(),
            "--workload",
            "builtin:dense_toy",
            "optimize",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("shortfall"), "stderr: {stderr}");
    // The convergence history and closest design are still written.
    assert!(tmp.join("convergence.csv").exists());
    assert!(tmp.join("best.csv").exists());
    std::fs::remove_dir_all(&tmp).ok();
}
