//! Parametric approximate unsigned-integer multiplier families.
//!
//! Four families with bit-exact behavioral semantics:
//!
//! * `EXACT` — the reference product `a * b`.
//! * `TRUNC(k)` — exact product with the `k` least-significant bits forced
//!   to zero.
//! * `PERF(j)` — partial-product perforation: rows `0..j` (the rows gated by
//!   the `j` low bits of `b`) are omitted, i.e. `a * (b & !((1 << j) - 1))`.
//! * `LOA(k)` — lower-part OR combination: split both operands at bit `k`;
//!   every partial product except the low-by-low block `a_lo * b_lo` is
//!   summed exactly, and the low block's partial-product rows
//!   `(a_lo * bit_i(b_lo)) << i` are combined with bitwise OR instead of
//!   addition. Since `x | y <= x + y`, the result never exceeds the exact
//!   product.
//!
//! Area comes from a unit-gate model over an N x N array multiplier:
//! `N^2` AND cells (2 NAND2-equivalents each), `N (N - 2)` full adders
//! (9 each) and `N` half adders (5 each). The canonical cell placement puts
//! partial product `(i, j)` in column `i + j` and one adder row per partial
//! product row beyond the first, with the top cell of each adder row and the
//! column-1 cell of the first row as half adders. `TRUNC` deletes every cell
//! whose outputs feed only zeroed columns, `PERF` deletes whole rows, and
//! `LOA` charges each approximated column one OR cell (1 NAND2) in place of
//! a half-adder-equivalent (5 NAND2) of summation logic, a net 4-gate saving
//! per column.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::techlib::{TechNode, TechTable};

/// Maximum operand width for exhaustive characterization (2^(2w) pairs).
pub const MAX_CHARACTERIZE_WIDTH: u32 = 12;

/// Multiplier family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MulFamily {
    Exact,
    Trunc,
    Perf,
    Loa,
}

impl fmt::Display for MulFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MulFamily::Exact => "exact",
            MulFamily::Trunc => "trunc",
            MulFamily::Perf => "perf",
            MulFamily::Loa => "loa",
        };
        f.write_str(s)
    }
}

impl FromStr for MulFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MulFamily::Exact),
            "trunc" => Ok(MulFamily::Trunc),
            "perf" => Ok(MulFamily::Perf),
            "loa" => Ok(MulFamily::Loa),
            other => Err(Error::Config(format!(
                "unknown multiplier family `{other}` (expected exact, trunc, perf or loa)"
            ))),
        }
    }
}

/// A single parametric multiplier configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub family: MulFamily,
    /// Operand width in bits (2..=16).
    pub width: u32,
    /// Family parameter: zeroed product bits (TRUNC), omitted rows (PERF)
    /// or OR-combined low bits (LOA). Ignored and normalized to 0 for EXACT.
    pub param: u32,
}

impl MultiplierSpec {
    /// Builds and validates a spec. The EXACT family's param is normalized
    /// to zero so equal behavior implies equal identity.
    pub fn new(family: MulFamily, width: u32, param: u32) -> Result<Self> {
        let param = if family == MulFamily::Exact { 0 } else { param };
        let spec = MultiplierSpec {
            family,
            width,
            param,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exact(width: u32) -> Result<Self> {
        Self::new(MulFamily::Exact, width, 0)
    }

    fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.width) {
            return Err(Error::InvalidArgument(format!(
                "multiplier width must lie in 2..=16, got {}",
                self.width
            )));
        }
        let cap = match self.family {
            MulFamily::Exact => 0,
            MulFamily::Trunc => 2 * self.width,
            MulFamily::Perf | MulFamily::Loa => self.width,
        };
        if self.param > cap {
            return Err(Error::InvalidArgument(format!(
                "param {} out of range for {} at width {} (max {cap})",
                self.param, self.family, self.width
            )));
        }
        Ok(())
    }

    /// Stable identifier, a deterministic function of (family, width, param).
    pub fn id(&self) -> String {
        match self.family {
            MulFamily::Exact => format!("exact_w{}", self.width),
            _ => format!("{}_w{}_p{}", self.family, self.width, self.param),
        }
    }
}

/// Exhaustive error statistics of one multiplier against the exact product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Mean of |approx - exact| / exact over pairs with nonzero exact
    /// product.
    pub mean_relative_error: f64,
    /// Mean of |approx - exact| over all operand pairs.
    pub mean_error_distance: f64,
    /// Max of |approx - exact| over all operand pairs.
    pub worst_case_error: f64,
    /// Fraction of operand pairs with approx != exact.
    pub error_rate: f64,
}

impl ErrorMetrics {
    pub const ZERO: ErrorMetrics = ErrorMetrics {
        mean_relative_error: 0.0,
        mean_error_distance: 0.0,
        worst_case_error: 0.0,
        error_rate: 0.0,
    };
}

/// One library entry: behavior, error statistics, area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierRecord {
    pub id: String,
    pub spec: MultiplierSpec,
    pub metrics: ErrorMetrics,
    /// NAND2-equivalent gate count of the unit-gate model.
    pub gate_count: u64,
    /// Silicon area per technology node (mm^2), keyed by node name.
    pub area_by_node: BTreeMap<String, f64>,
    /// Measured inference accuracy drop per workload, filled by the
    /// accuracy proxy. Empty until measured.
    #[serde(default)]
    pub accuracy_drop: BTreeMap<String, f64>,
}

impl MultiplierRecord {
    /// Area at a given node.
    pub fn area_at(&self, node: &str) -> Result<f64> {
        self.area_by_node
            .get(node)
            .copied()
            .ok_or_else(|| Error::IncompleteRecord {
                id: self.id.clone(),
                node: node.to_string(),
            })
    }

    /// Accuracy drop for a workload.
    pub fn accuracy_drop_for(&self, workload: &str) -> Result<f64> {
        self.accuracy_drop
            .get(workload)
            .copied()
            .ok_or_else(|| Error::IncompleteLibrary {
                id: self.id.clone(),
                workload: workload.to_string(),
            })
    }
}

/// Applies the multiplier's bit-exact semantics to one operand pair.
pub fn approx_multiply(spec: &MultiplierSpec, a: u64, b: u64) -> Result<u64> {
    let limit = 1u64 << spec.width;
    if a >= limit || b >= limit {
        return Err(Error::InvalidArgument(format!(
            "operands ({a}, {b}) out of range for width {}",
            spec.width
        )));
    }
    Ok(match spec.family {
        MulFamily::Exact => a * b,
        MulFamily::Trunc => (a * b) & !((1u64 << spec.param) - 1),
        MulFamily::Perf => a * (b & !((1u64 << spec.param) - 1)),
        MulFamily::Loa => {
            let mask = (1u64 << spec.param) - 1;
            let (a_lo, b_lo) = (a & mask, b & mask);
            let (a_hi, b_hi) = (a - a_lo, b - b_lo);
            // Everything except the low-by-low block, computed exactly.
            let exact_part = a_hi * b + a * b_hi - a_hi * b_hi;
            // Low block rows combined with OR instead of addition.
            let mut or_fold = 0u64;
            for i in 0..spec.param {
                if (b_lo >> i) & 1 == 1 {
                    or_fold |= a_lo << i;
                }
            }
            exact_part + or_fold
        }
    })
}

const GATES_AND: u64 = 2;
const GATES_FA: u64 = 9;
const GATES_HA: u64 = 5;
const GATES_OR: u64 = 1;

fn exact_gate_count(width: u64) -> u64 {
    GATES_AND * width * width + GATES_FA * width * (width - 2) + GATES_HA * width
}

/// Adder cells of the canonical array placement: (column, is_half_adder).
/// Row `i` (1..width) holds cells at columns `i..i + width`; the top cell of
/// each row is a half adder, as is the column-1 cell of row 1.
fn adder_cells(width: u64) -> impl Iterator<Item = (u64, bool)> {
    (1..width).flat_map(move |i| {
        (0..width).map(move |j| {
            let col = i + j;
            let is_ha = j == width - 1 || (i == 1 && col == 1);
            (col, is_ha)
        })
    })
}

/// NAND2-equivalent gate count of the unit-gate model.
pub fn gate_count(spec: &MultiplierSpec) -> u64 {
    let n = spec.width as u64;
    let p = spec.param as u64;
    match spec.family {
        MulFamily::Exact => exact_gate_count(n),
        MulFamily::Trunc => {
            // Remove every cell whose outputs feed only columns < p. An AND
            // cell feeds its own column; an adder cell at column c feeds c
            // (sum) and c + 1 (carry).
            let mut gates = 0u64;
            for i in 0..n {
                for j in 0..n {
                    if i + j >= p {
                        gates += GATES_AND;
                    }
                }
            }
            for (col, is_ha) in adder_cells(n) {
                if col + 1 >= p {
                    gates += if is_ha { GATES_HA } else { GATES_FA };
                }
            }
            gates
        }
        MulFamily::Perf => {
            // p whole partial-product rows removed, together with the adder
            // rows they would have required.
            let remaining = n - p;
            match remaining {
                0 => 0,
                1 => GATES_AND * n,
                r => {
                    let fa = n * (r - 1) - r;
                    GATES_AND * n * r + GATES_FA * fa + GATES_HA * r
                }
            }
        }
        MulFamily::Loa => {
            // One OR cell replaces a half-adder-equivalent of summation
            // logic per approximated column.
            exact_gate_count(n) - p * (GATES_HA - GATES_OR)
        }
    }
}

/// Silicon area of one multiplier at a node (mm^2).
pub fn estimate_multiplier_area(spec: &MultiplierSpec, node: &TechNode) -> f64 {
    gate_count(spec) as f64 * node.gate_area_mm2
}

/// Exhaustively enumerates all `2^(2 width)` operand pairs and reports the
/// error statistics. Deterministic; rejects widths above
/// [`MAX_CHARACTERIZE_WIDTH`].
pub fn characterize_errors(spec: &MultiplierSpec) -> Result<ErrorMetrics> {
    if spec.width > MAX_CHARACTERIZE_WIDTH {
        return Err(Error::UnsupportedWidth { width: spec.width });
    }
    let limit = 1u64 << spec.width;
    let mut sum_ed: u64 = 0;
    let mut sum_rel: f64 = 0.0;
    let mut rel_count: u64 = 0;
    let mut wce: u64 = 0;
    let mut mismatches: u64 = 0;
    for a in 0..limit {
        for b in 0..limit {
            let exact = a * b;
            let approx = approx_multiply(spec, a, b)?;
            let ed = exact.abs_diff(approx);
            sum_ed += ed;
            if ed > 0 {
                mismatches += 1;
                if ed > wce {
                    wce = ed;
                }
            }
            if exact != 0 {
                sum_rel += ed as f64 / exact as f64;
                rel_count += 1;
            }
        }
    }
    let pairs = (limit * limit) as f64;
    Ok(ErrorMetrics {
        mean_relative_error: if rel_count == 0 {
            0.0
        } else {
            sum_rel / rel_count as f64
        },
        mean_error_distance: sum_ed as f64 / pairs,
        worst_case_error: wce as f64,
        error_rate: mismatches as f64 / pairs,
    })
}

/// The default bundled spec set at a given width: EXACT, TRUNC with
/// `k in 1..=w`, PERF with `j in 1..=w/2` and LOA with `k in 1..=3w/4`.
/// At width 8 this yields 19 specs.
pub fn default_spec_set(width: u32) -> Result<Vec<MultiplierSpec>> {
    let mut specs = vec![MultiplierSpec::exact(width)?];
    for k in 1..=width {
        specs.push(MultiplierSpec::new(MulFamily::Trunc, width, k)?);
    }
    for j in 1..=width / 2 {
        specs.push(MultiplierSpec::new(MulFamily::Perf, width, j)?);
    }
    for k in 1..=3 * width / 4 {
        specs.push(MultiplierSpec::new(MulFamily::Loa, width, k)?);
    }
    Ok(specs)
}

/// Characterizes every spec and fills in per-node areas, producing a
/// multiplier library. Accuracy drops stay empty until measured.
pub fn build_library(specs: &[MultiplierSpec], table: &TechTable) -> Result<Vec<MultiplierRecord>> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument(
            "multiplier spec list is empty".into(),
        ));
    }
    let mut records: Vec<MultiplierRecord> = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let id = spec.id();
        if records.iter().any(|r| r.id == id) {
            return Err(Error::DuplicateId(id));
        }
        let metrics = characterize_errors(spec)?;
        let area_by_node = table
            .nodes
            .iter()
            .map(|n| (n.name.clone(), estimate_multiplier_area(spec, n)))
            .collect();
        records.push(MultiplierRecord {
            id,
            spec: *spec,
            metrics,
            gate_count: gate_count(spec),
            area_by_node,
            accuracy_drop: BTreeMap::new(),
        });
    }
    Ok(records)
}

/// Renders a library as CSV:
/// `id,family,width,param,mre,med,wce,er,gate_count,area_<node>...`
/// with one area column per node in table order.
pub fn library_to_csv(records: &[MultiplierRecord], table: &TechTable) -> String {
    let mut out = String::from("id,family,width,param,mre,med,wce,er,gate_count");
    for node in &table.nodes {
        out.push_str(&format!(",area_{}", node.name));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            r.id,
            r.spec.family,
            r.spec.width,
            r.spec.param,
            r.metrics.mean_relative_error,
            r.metrics.mean_error_distance,
            r.metrics.worst_case_error,
            r.metrics.error_rate,
            r.gate_count
        ));
        for node in &table.nodes {
            match r.area_by_node.get(&node.name) {
                Some(a) => out.push_str(&format!(",{a}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn spec(family: MulFamily, width: u32, param: u32) -> MultiplierSpec {
        MultiplierSpec::new(family, width, param).unwrap()
    }

    #[test]
    fn exact_semantics() {
        let s = spec(MulFamily::Exact, 4, 0);
        assert_eq!(approx_multiply(&s, 15, 15).unwrap(), 225);
        assert_eq!(approx_multiply(&s, 0, 9).unwrap(), 0);
    }

    #[test]
    fn zero_param_is_identity() {
        for family in [MulFamily::Trunc, MulFamily::Perf, MulFamily::Loa] {
            let s = spec(family, 6, 0);
            for a in 0..64 {
                for b in 0..64 {
                    assert_eq!(approx_multiply(&s, a, b).unwrap(), a * b);
                }
            }
        }
    }

    #[test]
    fn perf_row_omission_matches_bit_oracle() {
        // Summing rows 1..7 equals a * (b with bit 0 cleared).
        let s = spec(MulFamily::Perf, 8, 1);
        assert_eq!(approx_multiply(&s, 255, 255).unwrap(), 64770);
        for (a, b) in [(7, 9), (128, 255), (33, 66)] {
            assert_eq!(approx_multiply(&s, a, b).unwrap(), a * (b & !1));
        }
    }

    #[test]
    fn operand_range_checked() {
        let s = spec(MulFamily::Exact, 8, 0);
        assert!(approx_multiply(&s, 256, 0).is_err());
        assert!(approx_multiply(&s, 0, 256).is_err());
    }

    #[test]
    fn param_bounds_enforced() {
        assert!(MultiplierSpec::new(MulFamily::Trunc, 8, 16).is_ok());
        assert!(MultiplierSpec::new(MulFamily::Trunc, 8, 17).is_err());
        assert!(MultiplierSpec::new(MulFamily::Perf, 8, 8).is_ok());
        assert!(MultiplierSpec::new(MulFamily::Perf, 8, 9).is_err());
        assert!(MultiplierSpec::new(MulFamily::Loa, 8, 9).is_err());
        assert!(MultiplierSpec::new(MulFamily::Exact, 1, 0).is_err());
        assert!(MultiplierSpec::new(MulFamily::Exact, 17, 0).is_err());
    }

    #[test]
    fn exact_width8_characterizes_to_zero() {
        let m = characterize_errors(&spec(MulFamily::Exact, 8, 0)).unwrap();
        assert_eq!(m, ErrorMetrics::ZERO);
    }

    #[test]
    fn trunc2_width2_hand_enumeration() {
        // 16 pairs by hand: total error distance 16, worst 3 (3x3: 9 -> 8
        // loses 1, but 2x3: 6 -> 4 and 1x3: 3 -> 0 lose 2 and 3), 8 mismatches,
        // relative error sum 52/9 over 9 nonzero-product pairs.
        let m = characterize_errors(&spec(MulFamily::Trunc, 2, 2)).unwrap();
        assert_eq!(m.mean_error_distance, 1.0);
        assert_eq!(m.worst_case_error, 3.0);
        assert_eq!(m.error_rate, 0.5);
        assert!((m.mean_relative_error - 52.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn perf2_width8_frozen_metrics() {
        // Frozen from an independent brute-force enumeration over 65536 pairs.
        let m = characterize_errors(&spec(MulFamily::Perf, 8, 2)).unwrap();
        assert_eq!(m.mean_error_distance, 191.25);
        assert_eq!(m.worst_case_error, 765.0);
        assert_eq!(m.error_rate, 765.0 / 1024.0);
        assert!((m.mean_relative_error - 0.03565999766895756).abs() < 1e-12);
    }

    #[test]
    fn trunc3_and_loa4_width8_frozen_metrics() {
        let t = characterize_errors(&spec(MulFamily::Trunc, 8, 3)).unwrap();
        assert_eq!(t.mean_error_distance, 2.75);
        assert_eq!(t.worst_case_error, 7.0);
        assert_eq!(t.error_rate, 0.6875);
        assert!((t.mean_relative_error - 0.0017187769813434154).abs() < 1e-12);

        let l = characterize_errors(&spec(MulFamily::Loa, 8, 4)).unwrap();
        assert_eq!(l.mean_error_distance, 8.09375);
        assert_eq!(l.worst_case_error, 98.0);
        assert_eq!(l.error_rate, 0.37109375);
        assert!((l.mean_relative_error - 0.002119957414193784).abs() < 1e-12);
    }

    #[test]
    fn characterize_rejects_wide_operands() {
        let err = characterize_errors(&spec(MulFamily::Exact, 13, 0)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedWidth { width: 13 }));
    }

    #[test]
    fn exact_gate_counts() {
        assert_eq!(gate_count(&spec(MulFamily::Exact, 8, 0)), 600);
        assert_eq!(gate_count(&spec(MulFamily::Exact, 2, 0)), 18);
    }

    #[test]
    fn trunc_gate_counts_width2_hand_derived() {
        let counts: Vec<u64> = (0..=4)
            .map(|k| gate_count(&spec(MulFamily::Trunc, 2, k)))
            .collect();
        assert_eq!(counts, vec![18, 16, 12, 5, 0]);
    }

    #[test]
    fn perf_gate_counts_endpoints() {
        assert_eq!(gate_count(&spec(MulFamily::Perf, 8, 0)), 600);
        assert_eq!(gate_count(&spec(MulFamily::Perf, 8, 8)), 0);
        assert_eq!(gate_count(&spec(MulFamily::Perf, 2, 1)), 4);
    }

    #[test]
    fn loa_gate_counts_linear() {
        for k in 0..=8 {
            assert_eq!(gate_count(&spec(MulFamily::Loa, 8, k)), 600 - 4 * k as u64);
        }
    }

    #[test]
    fn gate_count_strictly_decreasing_in_param() {
        for width in [2u32, 3, 4, 8, 12, 16] {
            for (family, cap) in [
                (MulFamily::Trunc, 2 * width),
                (MulFamily::Perf, width),
                (MulFamily::Loa, width),
            ] {
                let mut prev = gate_count(&spec(family, width, 0));
                for p in 1..=cap {
                    let g = gate_count(&spec(family, width, p));
                    assert!(
                        g < prev,
                        "{family} w{width}: gate count not strictly decreasing at p={p} ({g} !< {prev})"
                    );
                    prev = g;
                }
            }
        }
    }

    #[test]
    fn area_scales_with_node_gate_area() {
        let table = assets::builtin_tech_table().unwrap();
        let s = spec(MulFamily::Exact, 8, 0);
        let a45 = estimate_multiplier_area(&s, table.get("45nm").unwrap());
        let a7 = estimate_multiplier_area(&s, table.get("7nm").unwrap());
        assert!(a7 < a45);
        assert!((a45 - 600.0 * 8.0e-7).abs() < 1e-18);
    }

    #[test]
    fn default_set_has_19_records_at_width8() {
        let table = assets::builtin_tech_table().unwrap();
        let specs = default_spec_set(8).unwrap();
        assert_eq!(specs.len(), 19);
        let lib = build_library(&specs, &table).unwrap();
        assert_eq!(lib.len(), 19);
        let exact = lib.iter().find(|r| r.id == "exact_w8").unwrap();
        assert_eq!(exact.metrics, ErrorMetrics::ZERO);
        // Every approximate record is no larger than EXACT.
        for r in &lib {
            assert!(r.gate_count <= exact.gate_count);
        }
    }

    #[test]
    fn build_library_rejects_duplicates_and_empty() {
        let table = assets::builtin_tech_table().unwrap();
        assert!(build_library(&[], &table).is_err());
        let s = spec(MulFamily::Trunc, 8, 3);
        let err = build_library(&[s, s], &table).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn metrics_monotone_in_param_on_bundled_set() {
        for (family, cap) in [(MulFamily::Trunc, 8), (MulFamily::Perf, 4), (MulFamily::Loa, 6)] {
            let mut prev = ErrorMetrics::ZERO;
            for p in 0..=cap {
                let m = characterize_errors(&spec(family, 8, p)).unwrap();
                assert!(m.mean_relative_error >= prev.mean_relative_error);
                assert!(m.mean_error_distance >= prev.mean_error_distance);
                assert!(m.worst_case_error >= prev.worst_case_error);
                assert!(m.error_rate >= prev.error_rate);
                assert!(m.worst_case_error >= m.mean_error_distance);
                prev = m;
            }
        }
    }

    #[test]
    fn csv_header_lists_nodes_in_table_order() {
        let table = assets::builtin_tech_table().unwrap();
        let lib = build_library(&[spec(MulFamily::Exact, 8, 0)], &table).unwrap();
        let csv = library_to_csv(&lib, &table);
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "id,family,width,param,mre,med,wce,er,gate_count,area_45nm,area_14nm,area_7nm"
        );
        assert_eq!(csv.lines().count(), 2);
    }
}
