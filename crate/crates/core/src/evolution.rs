//! Genetic and memetic algorithms over colourings.
//!
//! One engine covers both: a GA is an [`EaConfig`] whose improver is
//! [`Improver::None`], an MA applies LS or RLS to every initial member and
//! to every offspring after mutation. Each offspring draws from its own
//! stream derived from `(seed, generation, index)`, so results do not depend
//! on how rayon schedules the work.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::{self, DEFAULT_RLS_PASSES};
use crate::instance::Instance;
use crate::metrics::{happy_count, Colouring};
use crate::seeds::{self, tag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("crossover needs at least 2 parents, got {0}")]
    TooFewParents(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seeding {
    Rnd,
    Lmc,
    Ls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Improver {
    None,
    Ls,
    Rls,
}

/// The six standard (seeding, improver) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    GaRnd,
    GaLmc,
    GaLs,
    MaRnd,
    MaLmc,
    MaRlsLs,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::GaRnd, Variant::GaLmc, Variant::GaLs, Variant::MaRnd, Variant::MaLmc, Variant::MaRlsLs];

    pub fn name(self) -> &'static str {
        match self {
            Variant::GaRnd => "GA(Rnd)",
            Variant::GaLmc => "GA(LMC)",
            Variant::GaLs => "GA(LS)",
            Variant::MaRnd => "MA(Rnd)",
            Variant::MaLmc => "MA(LMC)",
            Variant::MaRlsLs => "MA+RLS(LS)",
        }
    }

    pub fn parts(self) -> (Seeding, Improver) {
        match self {
            Variant::GaRnd => (Seeding::Rnd, Improver::None),
            Variant::GaLmc => (Seeding::Lmc, Improver::None),
            Variant::GaLs => (Seeding::Ls, Improver::None),
            Variant::MaRnd => (Seeding::Rnd, Improver::Ls),
            Variant::MaLmc => (Seeding::Lmc, Improver::Ls),
            Variant::MaRlsLs => (Seeding::Ls, Improver::Rls),
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EaConfig {
    pub pop_size: usize,
    pub mute_factor: f64,
    pub crossover_p: f64,
    /// Wall-clock budget in seconds. `None` disables it.
    pub time_limit_secs: Option<f64>,
    /// Generation budget. `None` disables it.
    pub max_generations: Option<u64>,
    /// The time limit cannot end a run before this many generations.
    pub min_generations: u64,
    pub seeding: Seeding,
    pub improver: Improver,
    pub rls_passes: usize,
    pub seed: u64,
    /// Evaluate offspring on the rayon pool. Does not affect results.
    pub parallel: bool,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            pop_size: 20,
            mute_factor: 0.005,
            crossover_p: 0.5,
            time_limit_secs: Some(600.0),
            max_generations: None,
            min_generations: 3,
            seeding: Seeding::Rnd,
            improver: Improver::None,
            rls_passes: DEFAULT_RLS_PASSES,
            seed: 0,
            parallel: true,
        }
    }
}

impl EaConfig {
    pub fn variant(v: Variant) -> Self {
        let (seeding, improver) = v.parts();
        EaConfig { seeding, improver, ..Default::default() }
    }

    /// Generation-terminated configuration; fully reproducible.
    pub fn with_generations(mut self, generations: u64) -> Self {
        self.max_generations = Some(generations);
        self.time_limit_secs = None;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.pop_size < 3 {
            return bad(format!("pop_size={} leaves fewer than two parents", self.pop_size));
        }
        if !(0.0..=1.0).contains(&self.mute_factor) {
            return bad(format!("mute_factor={} outside [0,1]", self.mute_factor));
        }
        if !(self.crossover_p > 0.0 && self.crossover_p < 1.0) {
            return bad(format!("crossover_p={} outside (0,1)", self.crossover_p));
        }
        if self.time_limit_secs.is_none() && self.max_generations.is_none() {
            return bad("no termination budget: set a time limit or a generation cap".into());
        }
        if let Some(t) = self.time_limit_secs {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("time limit {t} is not a finite non-negative number"));
            }
        }
        Ok(())
    }

    pub fn parent_count(&self) -> usize {
        self.pop_size.div_ceil(2)
    }

    /// 𝔪: free vertices redrawn per offspring, `mute_factor · |free|` rounded half up.
    pub fn mutation_count(&self, free: usize) -> usize {
        (self.mute_factor * free as f64 + 0.5).floor() as usize
    }
}

/// Population with cached fitness and the incumbent σ̃.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Colouring>,
    pub scores: Vec<usize>,
    pub best: Colouring,
    pub best_score: usize,
}

fn score_all(inst: &Instance, members: &[Colouring], rho: f64, parallel: bool) -> Vec<usize> {
    let g = inst.graph();
    if parallel {
        members.par_iter().map(|c| happy_count(g, c.as_slice(), rho)).collect()
    } else {
        members.iter().map(|c| happy_count(g, c.as_slice(), rho)).collect()
    }
}

/// Index of the first member holding the maximum score.
fn argmax(scores: &[usize]) -> usize {
    let max = *scores.iter().max().expect("non-empty population");
    scores.iter().position(|&s| s == max).unwrap()
}

impl Population {
    pub fn new(inst: &Instance, members: Vec<Colouring>, rho: f64, parallel: bool) -> Self {
        let scores = score_all(inst, &members, rho, parallel);
        let i = argmax(&scores);
        Population { best: members[i].clone(), best_score: scores[i], members, scores }
    }

    /// Replace the members, rescore, and take the new maximum as incumbent
    /// only if it strictly beats the current one. Returns whether it did.
    fn replace(&mut self, inst: &Instance, members: Vec<Colouring>, rho: f64, parallel: bool) -> bool {
        self.scores = score_all(inst, &members, rho, parallel);
        self.members = members;
        let i = argmax(&self.scores);
        if self.scores[i] > self.best_score {
            self.best_score = self.scores[i];
            self.best = self.members[i].clone();
            true
        } else {
            false
        }
    }

    pub fn mean_score(&self) -> f64 {
        self.scores.iter().sum::<usize>() as f64 / self.scores.len() as f64
    }
}

fn improve(inst: &Instance, c: Colouring, rho: f64, cfg: &EaConfig, seed: u64) -> Colouring {
    let mut rng = seeds::rng(seed);
    match cfg.improver {
        Improver::None => c,
        Improver::Ls => {
            let mut c = c;
            heuristics::ls_pass(inst, &mut c, rho, &mut rng);
            c
        }
        Improver::Rls => heuristics::rls_with(inst, c, rho, &mut rng, cfg.rls_passes).colouring,
    }
}

fn seed_member(inst: &Instance, rho: f64, cfg: &EaConfig, i: usize) -> Colouring {
    let mut rng = seeds::derived_rng(cfg.seed, &[tag::INIT, i as u64]);
    let raw = match cfg.seeding {
        Seeding::Rnd => heuristics::random_completion_with(inst, &mut rng),
        Seeding::Lmc => heuristics::lmc_with(inst, &mut rng).colouring,
        Seeding::Ls => {
            let start = heuristics::random_completion_with(inst, &mut rng);
            let mut c = start;
            heuristics::ls_pass(inst, &mut c, rho, &mut rng);
            c
        }
    };
    improve(inst, raw, rho, cfg, seeds::derive(cfg.seed, &[tag::IMPROVE_INIT, i as u64]))
}

/// Initial population: `pop_size` members from the seeding heuristic, each
/// passed through the improver when one is configured.
pub fn seed_population(inst: &Instance, rho: f64, cfg: &EaConfig) -> Population {
    let members: Vec<Colouring> = if cfg.parallel {
        (0..cfg.pop_size).into_par_iter().map(|i| seed_member(inst, rho, cfg, i)).collect()
    } else {
        (0..cfg.pop_size).map(|i| seed_member(inst, rho, cfg, i)).collect()
    };
    Population::new(inst, members, rho, cfg.parallel)
}

/// The ⌈|P|/2⌉ fittest members, best first; equal scores keep index order.
pub fn select_parents(pop: &Population) -> Vec<Colouring> {
    let mut order: Vec<usize> = (0..pop.members.len()).collect();
    order.sort_by(|&a, &b| pop.scores[b].cmp(&pop.scores[a]));
    order.truncate(pop.members.len().div_ceil(2));
    order.into_iter().map(|i| pop.members[i].clone()).collect()
}

fn cross_one<R: Rng>(parents: &[Colouring], inst: &Instance, p: f64, rng: &mut R) -> Colouring {
    let a = rng.gen_range(0..parents.len());
    let mut b = rng.gen_range(0..parents.len() - 1);
    if b >= a {
        b += 1;
    }
    let (first, second) = (&parents[a], &parents[b]);
    let mut child = first.clone();
    let out = child.as_mut_slice();
    for &v in inst.free_vertices() {
        if !rng.gen_bool(p) {
            out[v] = second[v];
        }
    }
    child
}

fn mutate_one<R: Rng>(c: &mut Colouring, inst: &Instance, count: usize, rng: &mut R) {
    let free = inst.free_vertices();
    let k = inst.k() as u32;
    let colours = c.as_mut_slice();
    for i in index::sample(rng, free.len(), count.min(free.len())) {
        colours[free[i]] = rng.gen_range(0..k);
    }
}

fn offspring_seed(cfg: &EaConfig, generation: u64, j: usize, stage: u64) -> u64 {
    seeds::derive(cfg.seed, &[tag::OFFSPRING, generation, j as u64, stage])
}

/// `pop_size − |parents|` offspring. Each picks two distinct parents
/// uniformly and takes every free vertex from the first with probability
/// `crossover_p`, else from the second.
pub fn crossover(
    parents: &[Colouring],
    inst: &Instance,
    cfg: &EaConfig,
    generation: u64,
) -> Result<Vec<Colouring>, EngineError> {
    if parents.len() < 2 {
        return Err(EngineError::TooFewParents(parents.len()));
    }
    let count = cfg.pop_size.saturating_sub(parents.len());
    let make = |j: usize| cross_one(parents, inst, cfg.crossover_p, &mut seeds::rng(offspring_seed(cfg, generation, j, 0)));
    Ok(if cfg.parallel {
        (0..count).into_par_iter().map(make).collect()
    } else {
        (0..count).map(make).collect()
    })
}

/// Redraw 𝔪 distinct free vertices of every offspring with uniform colours
/// (possibly the same colour again).
pub fn mutate(offspring: &mut [Colouring], inst: &Instance, cfg: &EaConfig, generation: u64) {
    let count = cfg.mutation_count(inst.free_vertices().len());
    if count == 0 {
        return;
    }
    let apply = |(j, c): (usize, &mut Colouring)| {
        mutate_one(c, inst, count, &mut seeds::rng(offspring_seed(cfg, generation, j, 1)))
    };
    if cfg.parallel {
        offspring.par_iter_mut().enumerate().for_each(apply);
    } else {
        offspring.iter_mut().enumerate().for_each(apply);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat {
    pub generation: u64,
    pub best: usize,
    pub mean: f64,
    pub elapsed_ms: u128,
    /// Incumbent replaced in this generation.
    pub improved: bool,
    /// Improver invocations in this generation.
    pub improver_calls: usize,
}

#[derive(Debug, Clone)]
pub struct EaOutcome {
    pub best: Colouring,
    pub best_score: usize,
    /// Main-loop iterations completed.
    pub generations: u64,
    pub elapsed: Duration,
    /// Generation 0 is the initial population.
    pub trace: Vec<GenerationStat>,
}

/// Run the GA or MA described by `cfg` until a budget is exhausted or every
/// vertex is ρ-happy.
pub fn run(inst: &Instance, rho: f64, cfg: &EaConfig) -> Result<EaOutcome, EngineError> {
    cfg.validate()?;
    let start = Instant::now();
    let n = inst.n();
    let mut pop = seed_population(inst, rho, cfg);
    let initial_calls = if cfg.improver == Improver::None { 0 } else { cfg.pop_size };
    let mut trace = vec![GenerationStat {
        generation: 0,
        best: pop.best_score,
        mean: pop.mean_score(),
        elapsed_ms: start.elapsed().as_millis(),
        improved: false,
        improver_calls: initial_calls,
    }];
    let time_limit = cfg.time_limit_secs.map(Duration::from_secs_f64);

    let mut generation = 0u64;
    loop {
        if pop.best_score >= n {
            break;
        }
        if cfg.max_generations.is_some_and(|g| generation >= g) {
            break;
        }
        if generation >= cfg.min_generations && time_limit.is_some_and(|t| start.elapsed() >= t) {
            break;
        }
        generation += 1;

        let parents = select_parents(&pop);
        let mut offspring = crossover(&parents, inst, cfg, generation)?;
        mutate(&mut offspring, inst, cfg, generation);
        let improver_calls = if cfg.improver == Improver::None {
            0
        } else {
            let fix = |(j, c): (usize, Colouring)| {
                improve(inst, c, rho, cfg, seeds::derive(cfg.seed, &[tag::IMPROVE, generation, j as u64]))
            };
            let count = offspring.len();
            offspring = if cfg.parallel {
                offspring.into_par_iter().enumerate().map(fix).collect()
            } else {
                offspring.into_iter().enumerate().map(fix).collect()
            };
            count
        };

        let mut members = parents;
        members.extend(offspring);
        let improved = pop.replace(inst, members, rho, cfg.parallel);
        trace.push(GenerationStat {
            generation,
            best: pop.best_score,
            mean: pop.mean_score(),
            elapsed_ms: start.elapsed().as_millis(),
            improved,
            improver_calls,
        });
    }

    Ok(EaOutcome {
        best: pop.best,
        best_score: pop.best_score,
        generations: generation,
        elapsed: start.elapsed(),
        trace,
    })
}

/// [`run`] restricted to configurations without an improver.
pub fn run_ga(inst: &Instance, rho: f64, cfg: &EaConfig) -> Result<EaOutcome, EngineError> {
    if cfg.improver != Improver::None {
        return Err(EngineError::Config("a GA has no improver".into()));
    }
    run(inst, rho, cfg)
}

/// [`run`] restricted to configurations with an LS or RLS improver.
pub fn run_ma(inst: &Instance, rho: f64, cfg: &EaConfig) -> Result<EaOutcome, EngineError> {
    if cfg.improver == Improver::None {
        return Err(EngineError::Config("an MA needs an improver".into()));
    }
    run(inst, rho, cfg)
}
