//! Genetic-algorithm search for the configuration minimizing the
//! carbon-delay product, plus an exhaustive baseline for small spaces.
//!
//! Chromosomes are `{Px, Py, B_local, B_global}` with each gene drawn from
//! a finite domain. Fitness runs the area, carbon and performance models;
//! infeasibility (unschedulable architecture or a missed FPS target) is
//! data, not an error, and selection uses feasibility dominance: any
//! feasible record beats any infeasible one, feasible records compare by
//! CDP, infeasible ones by constraint violation, and remaining ties go to
//! the earlier-evaluated record. Every random draw happens on the single
//! driver RNG in a fixed order, so a seed pins the whole run.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approxmul::MultiplierRecord;
use crate::area::{area_breakdown, AreaConfig};
use crate::carbon::{carbon_delay_product, embodied_carbon, CarbonBreakdown};
use crate::error::{Error, Result};
use crate::perf::{network_delay, Workload};
use crate::techlib::{Dims, TechNode};

/// The search genome: PE array shape and the two buffer capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchChromosome {
    pub px: u32,
    pub py: u32,
    /// Local (per-PE register file) buffer size in bytes.
    pub b_local: u64,
    /// Global SRAM capacity in bytes.
    pub b_global: u64,
}

impl ArchChromosome {
    pub fn new(px: u32, py: u32, b_local: u64, b_global: u64) -> Self {
        ArchChromosome {
            px,
            py,
            b_local,
            b_global,
        }
    }

    pub fn pe_count(&self) -> u64 {
        self.px as u64 * self.py as u64
    }

    /// Stable identifier used in report files.
    pub fn config_id(&self) -> String {
        format!(
            "px{}_py{}_bl{}_bg{}",
            self.px, self.py, self.b_local, self.b_global
        )
    }

    fn lex_key(&self) -> (u32, u32, u64, u64) {
        (self.px, self.py, self.b_local, self.b_global)
    }
}

impl fmt::Display for ArchChromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} PEs, {} B local, {} B global",
            self.px, self.py, self.b_local, self.b_global
        )
    }
}

/// Finite per-gene value domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneDomains {
    pub px: Vec<u32>,
    pub py: Vec<u32>,
    pub b_local: Vec<u64>,
    pub b_global: Vec<u64>,
}

impl Default for GeneDomains {
    /// Px, Py in {1, 2, 4, ..., 64}; B_local 64 B..4 KiB and B_global
    /// 32 KiB..8 MiB in powers of two.
    fn default() -> Self {
        GeneDomains {
            px: (0..=6).map(|e| 1u32 << e).collect(),
            py: (0..=6).map(|e| 1u32 << e).collect(),
            b_local: (6..=12).map(|e| 1u64 << e).collect(),
            b_global: (15..=23).map(|e| 1u64 << e).collect(),
        }
    }
}

impl GeneDomains {
    pub fn validate(&self) -> Result<()> {
        if self.px.is_empty()
            || self.py.is_empty()
            || self.b_local.is_empty()
            || self.b_global.is_empty()
        {
            return Err(Error::Config("every gene domain must be non-empty".into()));
        }
        Ok(())
    }

    /// Total number of chromosomes in the domain product.
    pub fn space_size(&self) -> u64 {
        self.px.len() as u64
            * self.py.len() as u64
            * self.b_local.len() as u64
            * self.b_global.len() as u64
    }

    /// The defaults truncated to the first few values of each gene, for
    /// small oracle-checkable spaces.
    pub fn truncated(px: usize, py: usize, b_local: usize, b_global: usize) -> Self {
        let d = GeneDomains::default();
        GeneDomains {
            px: d.px.into_iter().take(px).collect(),
            py: d.py.into_iter().take(py).collect(),
            b_local: d.b_local.into_iter().take(b_local).collect(),
            b_global: d.b_global.into_iter().take(b_global).collect(),
        }
    }
}

/// Genetic-algorithm parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 64,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            tournament_size: 3,
            elitism_count: 2,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be >= 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be >= 1".into()));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.tournament_size < 1 {
            return Err(Error::Config("tournament_size must be >= 1".into()));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::Config(
                "elitism_count must be smaller than population_size".into(),
            ));
        }
        Ok(())
    }
}

/// Everything fitness evaluation needs besides the chromosome.
pub struct EvalContext<'a> {
    pub node: &'a TechNode,
    pub dims: Dims,
    pub workload: &'a Workload,
    pub multiplier: &'a MultiplierRecord,
    pub fps_target: Option<f64>,
    pub area_config: &'a AreaConfig,
}

/// Evaluated fitness of one chromosome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub chromosome: ArchChromosome,
    /// Carbon-delay product; infinite for unschedulable configurations.
    pub cdp: f64,
    pub carbon: CarbonBreakdown,
    pub delay_s: f64,
    pub fps: f64,
    pub feasible: bool,
    /// FPS shortfall (0 when feasible, infinite when unschedulable).
    pub violation: f64,
    /// Evaluation order, used as the final ordering tie-break.
    pub index: u64,
}

/// Ranks two records: feasibility first, then CDP (feasible) or violation
/// (infeasible), then evaluation order. `Less` means better.
pub fn fitness_order(a: &FitnessRecord, b: &FitnessRecord) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a
            .cdp
            .partial_cmp(&b.cdp)
            .unwrap_or(Ordering::Equal)
            .then(a.index.cmp(&b.index)),
        (false, false) => a
            .violation
            .partial_cmp(&b.violation)
            .unwrap_or(Ordering::Equal)
            .then(a.index.cmp(&b.index)),
    }
}

/// Runs the area, carbon and performance models for one chromosome.
/// Unschedulable or unmanufacturable designs come back as infeasible
/// records with an infinite violation, never as errors.
pub fn evaluate_fitness(
    chrom: &ArchChromosome,
    ctx: &EvalContext<'_>,
    index: u64,
) -> Result<FitnessRecord> {
    let zero_carbon = CarbonBreakdown {
        c_die_logic: 0.0,
        c_die_memory: 0.0,
        c_bonding: 0.0,
        c_packaging: 0.0,
        total: 0.0,
    };
    let areas = match area_breakdown(ctx.node, chrom, ctx.multiplier, ctx.dims, ctx.area_config) {
        Ok(a) => a,
        Err(Error::NoFeasibleDie { .. }) => {
            return Ok(FitnessRecord {
                chromosome: *chrom,
                cdp: f64::INFINITY,
                carbon: zero_carbon,
                delay_s: f64::INFINITY,
                fps: 0.0,
                feasible: false,
                violation: f64::INFINITY,
                index,
            })
        }
        Err(e) => return Err(e),
    };
    let carbon = embodied_carbon(ctx.node, &areas, ctx.dims)?;
    match network_delay(ctx.workload, chrom, ctx.node, ctx.dims) {
        Ok(report) => {
            let cdp = carbon_delay_product(carbon.total, report.d_task_s);
            let violation = match ctx.fps_target {
                Some(target) => (target - report.fps).max(0.0),
                None => 0.0,
            };
            Ok(FitnessRecord {
                chromosome: *chrom,
                cdp,
                carbon,
                delay_s: report.d_task_s,
                fps: report.fps,
                feasible: violation == 0.0,
                violation,
                index,
            })
        }
        Err(_) => Ok(FitnessRecord {
            chromosome: *chrom,
            cdp: f64::INFINITY,
            carbon,
            delay_s: f64::INFINITY,
            fps: 0.0,
            feasible: false,
            violation: f64::INFINITY,
            index,
        }),
    }
}

/// Draws one chromosome uniformly from the gene domains.
pub fn sample_chromosome(rng: &mut ChaCha8Rng, domains: &GeneDomains) -> ArchChromosome {
    ArchChromosome {
        px: domains.px[rng.gen_range(0..domains.px.len())],
        py: domains.py[rng.gen_range(0..domains.py.len())],
        b_local: domains.b_local[rng.gen_range(0..domains.b_local.len())],
        b_global: domains.b_global[rng.gen_range(0..domains.b_global.len())],
    }
}

/// Tournament selection: `k` uniform draws with replacement, best wins.
pub fn tournament_select<'a>(
    population: &'a [FitnessRecord],
    rng: &mut ChaCha8Rng,
    k: usize,
) -> &'a FitnessRecord {
    assert!(!population.is_empty() && k >= 1);
    let mut best = &population[rng.gen_range(0..population.len())];
    for _ in 1..k {
        let contender = &population[rng.gen_range(0..population.len())];
        if fitness_order(contender, best) == std::cmp::Ordering::Less {
            best = contender;
        }
    }
    best
}

/// Uniform crossover: with probability `rate`, each gene independently
/// swaps between the two children with probability one half; otherwise the
/// children are plain copies. Children's genes always come from a parent,
/// so they stay in-domain.
pub fn crossover(
    parent_a: &ArchChromosome,
    parent_b: &ArchChromosome,
    rng: &mut ChaCha8Rng,
    rate: f64,
) -> (ArchChromosome, ArchChromosome) {
    let mut a = *parent_a;
    let mut b = *parent_b;
    if rng.gen::<f64>() < rate {
        if rng.gen::<bool>() {
            std::mem::swap(&mut a.px, &mut b.px);
        }
        if rng.gen::<bool>() {
            std::mem::swap(&mut a.py, &mut b.py);
        }
        if rng.gen::<bool>() {
            std::mem::swap(&mut a.b_local, &mut b.b_local);
        }
        if rng.gen::<bool>() {
            std::mem::swap(&mut a.b_global, &mut b.b_global);
        }
    }
    (a, b)
}

/// Per-gene mutation: each gene independently resamples uniformly from its
/// domain with probability `rate`.
pub fn mutate(
    chrom: &ArchChromosome,
    rng: &mut ChaCha8Rng,
    rate: f64,
    domains: &GeneDomains,
) -> ArchChromosome {
    let mut out = *chrom;
    if rng.gen::<f64>() < rate {
        out.px = domains.px[rng.gen_range(0..domains.px.len())];
    }
    if rng.gen::<f64>() < rate {
        out.py = domains.py[rng.gen_range(0..domains.py.len())];
    }
    if rng.gen::<f64>() < rate {
        out.b_local = domains.b_local[rng.gen_range(0..domains.b_local.len())];
    }
    if rng.gen::<f64>() < rate {
        out.b_global = domains.b_global[rng.gen_range(0..domains.b_global.len())];
    }
    out
}

/// Per-generation population summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_cdp: f64,
    pub median_cdp: f64,
    pub best_chromosome: ArchChromosome,
    pub feasible_count: usize,
}

/// Outcome of one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DseResult {
    /// Best record over every evaluation performed, not just the final
    /// population.
    pub best: FitnessRecord,
    pub history: Vec<GenerationStats>,
    /// Distinct chromosome evaluations performed (repeat visits hit a
    /// cache).
    pub evaluations: u64,
    pub seed: u64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn population_stats(generation: usize, population: &[FitnessRecord]) -> GenerationStats {
    let best = population
        .iter()
        .min_by(|a, b| fitness_order(a, b))
        .expect("population is non-empty");
    let mut cdps: Vec<f64> = population.iter().map(|r| r.cdp).collect();
    cdps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    GenerationStats {
        generation,
        best_cdp: best.cdp,
        median_cdp: median(&cdps),
        best_chromosome: best.chromosome,
        feasible_count: population.iter().filter(|r| r.feasible).count(),
    }
}

/// Generational GA with elitism.
///
/// Each generation is evaluated and recorded, then bred into the next:
/// elites carry over unchanged and the rest of the population comes from
/// tournament selection, uniform crossover and per-gene mutation. History
/// has exactly `generations` entries; with elitism the per-generation best
/// CDP is non-increasing. Fitness values are memoized per chromosome, so
/// revisits cost nothing and share one evaluation index.
pub fn evolve(
    config: &GaConfig,
    ctx: &EvalContext<'_>,
    domains: &GeneDomains,
) -> Result<DseResult> {
    config.validate()?;
    domains.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut cache: HashMap<ArchChromosome, FitnessRecord> = HashMap::new();
    let mut evaluations = 0u64;

    let eval = |chrom: ArchChromosome,
                    cache: &mut HashMap<ArchChromosome, FitnessRecord>,
                    evaluations: &mut u64|
     -> Result<FitnessRecord> {
        if let Some(hit) = cache.get(&chrom) {
            return Ok(hit.clone());
        }
        let rec = evaluate_fitness(&chrom, ctx, *evaluations)?;
        *evaluations += 1;
        cache.insert(chrom, rec.clone());
        Ok(rec)
    };

    let mut population = Vec::with_capacity(config.population_size);
    for _ in 0..config.population_size {
        let chrom = sample_chromosome(&mut rng, domains);
        population.push(eval(chrom, &mut cache, &mut evaluations)?);
    }

    let mut best_overall = population
        .iter()
        .min_by(|a, b| fitness_order(a, b))
        .expect("population is non-empty")
        .clone();
    let mut history = Vec::with_capacity(config.generations);

    for generation in 1..=config.generations {
        if let Some(gen_best) = population.iter().min_by(|a, b| fitness_order(a, b)) {
            if fitness_order(gen_best, &best_overall) == std::cmp::Ordering::Less {
                best_overall = gen_best.clone();
            }
        }
        history.push(population_stats(generation, &population));
        if generation == config.generations {
            break;
        }

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitness_order(&population[a], &population[b]));
        let mut next: Vec<FitnessRecord> = ranked
            .iter()
            .take(config.elitism_count)
            .map(|&i| population[i].clone())
            .collect();

        while next.len() < config.population_size {
            let pa = tournament_select(&population, &mut rng, config.tournament_size).chromosome;
            let pb = tournament_select(&population, &mut rng, config.tournament_size).chromosome;
            let (ca, cb) = crossover(&pa, &pb, &mut rng, config.crossover_rate);
            let ca = mutate(&ca, &mut rng, config.mutation_rate, domains);
            next.push(eval(ca, &mut cache, &mut evaluations)?);
            if next.len() < config.population_size {
                let cb = mutate(&cb, &mut rng, config.mutation_rate, domains);
                next.push(eval(cb, &mut cache, &mut evaluations)?);
            }
        }
        population = next;
    }

    Ok(DseResult {
        best: best_overall,
        history,
        evaluations,
        seed: config.rng_seed,
    })
}

/// Upper bound on the exhaustive baseline's search space.
pub const EXHAUSTIVE_GUARD: u64 = 100_000;

/// Evaluates every chromosome in the domain product and returns the global
/// optimum under the same feasibility-dominance ordering as selection,
/// with ties broken by lexicographic chromosome order so the result is
/// independent of enumeration order.
pub fn exhaustive_baseline(domains: &GeneDomains, ctx: &EvalContext<'_>) -> Result<FitnessRecord> {
    domains.validate()?;
    let size = domains.space_size();
    if size > EXHAUSTIVE_GUARD {
        return Err(Error::Guard(format!(
            "exhaustive baseline over {size} configurations exceeds the {EXHAUSTIVE_GUARD} limit"
        )));
    }
    let mut best: Option<FitnessRecord> = None;
    let mut index = 0u64;
    for &px in &domains.px {
        for &py in &domains.py {
            for &b_local in &domains.b_local {
                for &b_global in &domains.b_global {
                    let chrom = ArchChromosome::new(px, py, b_local, b_global);
                    let rec = evaluate_fitness(&chrom, ctx, index)?;
                    index += 1;
                    let replace = match &best {
                        None => true,
                        Some(cur) => {
                            let mut a = rec.clone();
                            let mut b = cur.clone();
                            // Neutralize the index tie-break in favor of
                            // lexicographic chromosome order.
                            a.index = 0;
                            b.index = 0;
                            match fitness_order(&a, &b) {
                                std::cmp::Ordering::Less => true,
                                std::cmp::Ordering::Greater => false,
                                std::cmp::Ordering::Equal => {
                                    rec.chromosome.lex_key() < cur.chromosome.lex_key()
                                }
                            }
                        }
                    };
                    if replace {
                        best = Some(rec);
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::Config("empty gene domains".into()))
}

/// Convergence history CSV:
/// `generation,best_cdp,median_cdp,best_px,best_py,best_blocal,best_bglobal,feasible_count`.
pub fn convergence_csv(result: &DseResult) -> String {
    let mut out = String::from(
        "generation,best_cdp,median_cdp,best_px,best_py,best_blocal,best_bglobal,feasible_count\n",
    );
    for s in &result.history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.generation,
            s.best_cdp,
            s.median_cdp,
            s.best_chromosome.px,
            s.best_chromosome.py,
            s.best_chromosome.b_local,
            s.best_chromosome.b_global,
            s.feasible_count
        ));
    }
    out
}
