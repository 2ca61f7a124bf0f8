//! Property tests for the module-level invariants.

use proptest::prelude::*;

use greenstack::approxmul::{approx_multiply, gate_count, MulFamily, MultiplierSpec};
use greenstack::area::{package_area, sram_area, AreaConfig, MemoryKind};
use greenstack::assets;
use greenstack::carbon::carbon_delay_product;
use greenstack::dse::{crossover, mutate, sample_chromosome, ArchChromosome, GeneDomains};
use greenstack::techlib::{dies_per_wafer, wasted_area_per_die, Dims, TechNode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn test_node() -> TechNode {
    assets::builtin_tech_table().unwrap().get("45nm").unwrap().clone()
}

fn family_strategy() -> impl Strategy<Value = MulFamily> {
    prop_oneof![
        Just(MulFamily::Trunc),
        Just(MulFamily::Perf),
        Just(MulFamily::Loa),
    ]
}

proptest! {
    // TRUNC and PERF never overshoot the exact product, and a nonzero
    // parameter always disagrees with EXACT somewhere.
    #[test]
    fn trunc_and_perf_never_exceed_exact(
        family in prop_oneof![Just(MulFamily::Trunc), Just(MulFamily::Perf)],
        width in 2u32..=10,
        param_seed in 0u32..32,
        a_seed in 0u64..1024,
        b_seed in 0u64..1024,
    ) {
        let cap = match family {
            MulFamily::Trunc => 2 * width,
            _ => width,
        };
        let spec = MultiplierSpec::new(family, width, param_seed % (cap + 1))?;
        let limit = 1u64 << width;
        let (a, b) = (a_seed % limit, b_seed % limit);
        let approx = approx_multiply(&spec, a, b).unwrap();
        prop_assert!(approx <= a * b);
    }

    #[test]
    fn nonzero_param_differs_somewhere(
        family in family_strategy(),
        width in 2u32..=8,
        param_seed in 1u32..32,
    ) {
        let cap = match family {
            MulFamily::Trunc => 2 * width,
            _ => width,
        };
        // LOA(1) is behaviorally exact by construction (a single partial
        // product needs no OR combination), so start it at 2.
        let min_param = if family == MulFamily::Loa { 2 } else { 1 };
        let param = min_param + param_seed % (cap - min_param + 1).max(1);
        if param > cap {
            return Ok(());
        }
        let spec = MultiplierSpec::new(family, width, param)?;
        let limit = 1u64 << width;
        let mut any_diff = false;
        'outer: for a in 0..limit {
            for b in 0..limit {
                if approx_multiply(&spec, a, b).unwrap() != a * b {
                    any_diff = true;
                    break 'outer;
                }
            }
        }
        prop_assert!(any_diff, "{} behaves exactly", spec.id());
    }

    // Gate counts stay within the exact multiplier's budget.
    #[test]
    fn gate_count_bounded_by_exact(
        family in family_strategy(),
        width in 2u32..=16,
        param_seed in 0u32..33,
    ) {
        let cap = match family {
            MulFamily::Trunc => 2 * width,
            _ => width,
        };
        let spec = MultiplierSpec::new(family, width, param_seed % (cap + 1))?;
        let exact = MultiplierSpec::exact(width)?;
        prop_assert!(gate_count(&spec) <= gate_count(&exact));
    }

    // Wafer packing: placed dies never exceed the wafer and per-die waste
    // is non-negative wherever at least one die fits.
    #[test]
    fn wafer_packing_is_conservative(area in 0.5f64..80_000.0) {
        let node = test_node();
        let dies = dies_per_wafer(&node, area).unwrap();
        prop_assert!(dies as f64 * area <= node.wafer_area_mm2());
        if dies > 0 {
            prop_assert!(wasted_area_per_die(&node, area).unwrap() >= 0.0);
        }
    }

    // Stacking never needs a larger package than side-by-side placement.
    #[test]
    fn package_3d_no_larger_than_2d(logic in 0.0f64..1e4, memory in 0.0f64..1e4) {
        let cfg = AreaConfig::default();
        prop_assert!(
            package_area(logic, memory, Dims::D3, &cfg)
                <= package_area(logic, memory, Dims::D2, &cfg)
        );
    }

    // Memory area is linear: splitting a capacity changes nothing.
    #[test]
    fn sram_area_is_additive(cap_a in 0u64..(1 << 22), cap_b in 0u64..(1 << 22)) {
        let node = test_node();
        let whole = sram_area(&node, cap_a + cap_b, MemoryKind::GlobalSram);
        let split = sram_area(&node, cap_a, MemoryKind::GlobalSram)
            + sram_area(&node, cap_b, MemoryKind::GlobalSram);
        prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1e-30));
    }

    // CDP is scale-compensating: (c*k) * (d/k) = c * d.
    #[test]
    fn cdp_scale_invariance(carbon in 0.0f64..1e6, delay in 0.0f64..1e3, k in 0.001f64..1e3) {
        let base = carbon_delay_product(carbon, delay);
        let scaled = carbon_delay_product(carbon * k, delay / k);
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1e-30));
    }

    // Genetic operators keep every gene inside its domain.
    #[test]
    fn genetic_operators_stay_in_domain(seed in 0u64..1u64 << 48, rate in 0.0f64..=1.0) {
        let domains = GeneDomains::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample_chromosome(&mut rng, &domains);
        let b = sample_chromosome(&mut rng, &domains);
        let (ca, cb) = crossover(&a, &b, &mut rng, rate);
        for c in [ca, cb] {
            let m = mutate(&c, &mut rng, rate, &domains);
            for chrom in [c, m] {
                prop_assert!(domains.px.contains(&chrom.px));
                prop_assert!(domains.py.contains(&chrom.py));
                prop_assert!(domains.b_local.contains(&chrom.b_local));
                prop_assert!(domains.b_global.contains(&chrom.b_global));
            }
        }
    }

    // The chromosome id round-trips its fields.
    #[test]
    fn config_id_is_injective(
        px in 1u32..=64, py in 1u32..=64,
        bl in 64u64..=4096, bg in (1u64 << 15)..=(1 << 23),
    ) {
        let a = ArchChromosome::new(px, py, bl, bg);
        let b = ArchChromosome::new(px + 1, py, bl, bg);
        prop_assert_ne!(a.config_id(), b.config_id());
    }
}
