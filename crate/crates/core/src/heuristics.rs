//! Construction and improvement heuristics: random completion, Local
//! Maximal Colouring (LMC), Local Search (LS) and Repeated Local Search
//! (RLS).
//!
//! All of them keep precoloured vertices fixed and are deterministic given
//! their seed. Each run counts the adjacency entries it reads so the
//! linear-time contract can be checked directly.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::Instance;
use crate::metrics::{vertex_happy, Colouring};
use crate::seeds;

/// Pass cap for [`rls`] when the caller does not choose one.
pub const DEFAULT_RLS_PASSES: usize = 50;

const UNCOLOURED: u32 = u32::MAX;

/// Scratch counters for picking the most frequent colour around a vertex.
struct Majority {
    counts: Vec<u32>,
    touched: Vec<u32>,
}

impl Majority {
    fn new(k: usize) -> Self {
        Majority { counts: vec![0; k], touched: Vec::with_capacity(k) }
    }

    fn add(&mut self, c: u32) {
        let slot = &mut self.counts[c as usize];
        if *slot == 0 {
            self.touched.push(c);
        }
        *slot += 1;
    }

    /// Colour with the highest count, ties broken uniformly. Resets the
    /// counters. `None` when nothing was added.
    fn take<R: Rng>(&mut self, rng: &mut R) -> Option<u32> {
        let mut best = None;
        let mut best_count = 0;
        let mut ties = 0u32;
        for &c in &self.touched {
            let cnt = self.counts[c as usize];
            if cnt > best_count {
                best_count = cnt;
                best = Some(c);
                ties = 1;
            } else if cnt == best_count {
                ties += 1;
                if rng.gen_range(0..ties) == 0 {
                    best = Some(c);
                }
            }
        }
        for &c in &self.touched {
            self.counts[c as usize] = 0;
        }
        self.touched.clear();
        best
    }
}

/// Precolouring kept, every free vertex an independent uniform colour.
pub fn random_completion(inst: &Instance, seed: u64) -> Colouring {
    random_completion_with(inst, &mut seeds::rng(seed))
}

pub fn random_completion_with<R: Rng>(inst: &Instance, rng: &mut R) -> Colouring {
    let k = inst.k() as u32;
    Colouring::from_raw(
        inst.precolour()
            .iter()
            .map(|p| p.unwrap_or_else(|| rng.gen_range(0..k)))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmcOutcome {
    pub colouring: Colouring,
    /// Adjacency entries read.
    pub inspections: u64,
    /// Vertices the frontier never reached (components with no precoloured
    /// vertex); they were given uniform random colours.
    pub unreached: usize,
}

pub fn lmc(inst: &Instance, seed: u64) -> Colouring {
    lmc_with(inst, &mut seeds::rng(seed)).colouring
}

/// Local Maximal Colouring.
///
/// Keeps a frontier of uncoloured vertices adjacent to a coloured one, picks
/// a frontier vertex uniformly, gives it the colour most frequent among its
/// coloured neighbours and pushes its uncoloured neighbours. Every
/// adjacency list is read once, so at most 2m entries are inspected.
pub fn lmc_with<R: Rng>(inst: &Instance, rng: &mut R) -> LmcOutcome {
    let g = inst.graph();
    let n = g.n();
    let mut colours: Vec<u32> = inst.precolour().iter().map(|p| p.unwrap_or(UNCOLOURED)).collect();
    let mut in_frontier = vec![false; n];
    let mut frontier: Vec<usize> = Vec::new();
    let mut inspections = 0u64;

    for &v in inst.precoloured_vertices() {
        inspections += g.degree(v) as u64;
        for &u in g.adj(v) {
            if colours[u] == UNCOLOURED && !in_frontier[u] {
                in_frontier[u] = true;
                frontier.push(u);
            }
        }
    }

    let mut majority = Majority::new(inst.k());
    while !frontier.is_empty() {
        let v = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        inspections += g.degree(v) as u64;
        for &u in g.adj(v) {
            let c = colours[u];
            if c != UNCOLOURED {
                majority.add(c);
            } else if !in_frontier[u] {
                in_frontier[u] = true;
                frontier.push(u);
            }
        }
        colours[v] = majority.take(rng).expect("frontier vertex has a coloured neighbour");
    }

    let k = inst.k() as u32;
    let mut unreached = 0;
    for c in colours.iter_mut().filter(|c| **c == UNCOLOURED) {
        *c = rng.gen_range(0..k);
        unreached += 1;
    }
    if unreached > 0 {
        log::warn!("LMC: {unreached} vertices unreachable from any precoloured vertex were coloured at random");
    }
    LmcOutcome { colouring: Colouring::from_raw(colours), inspections, unreached }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassStats {
    /// |U| at the start of the pass.
    pub candidates: usize,
    pub changed: usize,
    pub inspections: u64,
}

/// ρ-unhappy free vertices of `colours`, ascending.
fn unhappy_free(inst: &Instance, colours: &[u32], rho: f64, inspections: &mut u64) -> Vec<usize> {
    let g = inst.graph();
    inst.free_vertices()
        .iter()
        .copied()
        .filter(|&v| {
            *inspections += g.degree(v) as u64;
            !vertex_happy(g, colours, v, rho)
        })
        .collect()
}

/// One LS pass in place: collect U, visit it in random order and move each
/// vertex to its current neighbourhood-majority colour.
pub fn ls_pass<R: Rng>(inst: &Instance, sigma: &mut Colouring, rho: f64, rng: &mut R) -> PassStats {
    let mut stats = PassStats::default();
    let mut targets = unhappy_free(inst, sigma.as_slice(), rho, &mut stats.inspections);
    stats.candidates = targets.len();
    targets.shuffle(rng);

    let g = inst.graph();
    let colours = sigma.as_mut_slice();
    let mut majority = Majority::new(inst.k());
    for v in targets {
        stats.inspections += g.degree(v) as u64;
        for &u in g.adj(v) {
            majority.add(colours[u]);
        }
        // Unhappy vertices always have neighbours (degree 0 needs 0 matches).
        if let Some(c) = majority.take(rng) {
            if colours[v] != c {
                colours[v] = c;
                stats.changed += 1;
            }
        }
    }
    stats
}

pub fn ls(inst: &Instance, sigma: &Colouring, rho: f64, seed: u64) -> Colouring {
    let mut out = sigma.clone();
    ls_pass(inst, &mut out, rho, &mut seeds::rng(seed));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlsStop {
    /// U was empty: every free vertex is ρ-happy.
    NoUnhappy,
    /// A full pass changed nothing.
    NoChange,
    /// Pass budget exhausted.
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlsOutcome {
    pub colouring: Colouring,
    pub passes: usize,
    pub stop: RlsStop,
    pub inspections: u64,
}

pub fn rls(inst: &Instance, sigma: &Colouring, rho: f64, seed: u64, budget: usize) -> Colouring {
    rls_with(inst, sigma.clone(), rho, &mut seeds::rng(seed), budget).colouring
}

/// Repeated LS: refill U after each pass until it is empty, a pass changes
/// nothing, or `budget` passes have run.
pub fn rls_with<R: Rng>(inst: &Instance, mut sigma: Colouring, rho: f64, rng: &mut R, budget: usize) -> RlsOutcome {
    let mut passes = 0;
    let mut inspections = 0;
    let mut stop = RlsStop::Budget;
    while passes < budget.max(1) {
        let s = ls_pass(inst, &mut sigma, rho, rng);
        passes += 1;
        inspections += s.inspections;
        if s.candidates == 0 {
            stop = RlsStop::NoUnhappy;
            break;
        }
        if s.changed == 0 {
            stop = RlsStop::NoChange;
            break;
        }
    }
    RlsOutcome { colouring: sigma, passes, stop, inspections }
}
