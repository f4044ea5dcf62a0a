//! Partially coloured graphs from the simplified stochastic block model
//! 𝒢(n, k, p, q).
//!
//! Vertices are split into `k` contiguous blocks whose sizes differ by at
//! most one (the first `n mod k` blocks get the extra vertex). Each
//! intra-block pair becomes an edge with probability `p`, each inter-block
//! pair with probability `q`. From every block `pcc` vertices are chosen
//! uniformly without replacement and precoloured with the block id.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::instance::{GeneratorMeta, Instance};
use crate::seeds;

/// Number of full resamples attempted before components are joined by hand.
pub const CONNECT_RESAMPLES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("graph still disconnected after {attempts} attempts")]
    Disconnected { attempts: usize },
    #[error("infeasible parameter ranges: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub pcc: usize,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::Params(m));
        if self.k < 2 {
            return bad(format!("k={} must be at least 2", self.k));
        }
        if self.k > self.n {
            return bad(format!("k={} exceeds n={}", self.k, self.n));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p={} outside (0,1]", self.p));
        }
        if !(self.q > 0.0 && self.q <= self.p / 2.0) {
            return bad(format!("q={} outside (0, p/2]", self.q));
        }
        if self.pcc < 1 || self.pcc > self.n / self.k {
            return bad(format!("pcc={} outside 1..={}", self.pcc, self.n / self.k));
        }
        Ok(())
    }
}

/// Whether a disconnected sample may be repaired by adding bridge edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// Resample, then join the remaining components with random bridges.
    Repair,
    /// Resample only; fail if every attempt is disconnected.
    ResampleOnly,
    /// Keep whatever the first draw produced.
    Ignore,
}

/// Block id of every vertex.
pub fn block_labels(n: usize, k: usize) -> Vec<u32> {
    let (base, extra) = (n / k, n % k);
    (0..k)
        .flat_map(|b| std::iter::repeat_n(b as u32, base + usize::from(b < extra)))
        .collect()
}

/// Draw each vertex pair once; `keep(same_block)` decides whether it is an edge.
fn sample_edges(community: &[u32], mut keep: impl FnMut(bool) -> bool) -> Vec<(usize, usize)> {
    let n = community.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if keep(community[u] == community[v]) {
                edges.push((u, v));
            }
        }
    }
    edges
}

fn bernoulli_edges(rng: &mut ChaCha8Rng, community: &[u32], p: f64, q: f64) -> Vec<(usize, usize)> {
    sample_edges(community, |same| rng.gen_bool(if same { p } else { q }))
}

/// Join components by one random edge between consecutive components.
/// Returns the number of edges added.
fn bridge_components(rng: &mut ChaCha8Rng, n: usize, edges: &mut Vec<(usize, usize)>) -> usize {
    let g = Graph::from_canonical_unchecked(n, edges.clone());
    let comps = g.components();
    for pair in comps.windows(2) {
        let u = pair[0][rng.gen_range(0..pair[0].len())];
        let v = pair[1][rng.gen_range(0..pair[1].len())];
        edges.push((u.min(v), u.max(v)));
    }
    comps.len().saturating_sub(1)
}

/// Sample one instance, repairing connectivity if needed.
pub fn sample_instance(params: &SbmParams) -> Result<Instance, GenError> {
    sample_instance_with(params, Connectivity::Repair)
}

pub fn sample_instance_with(params: &SbmParams, policy: Connectivity) -> Result<Instance, GenError> {
    params.validate()?;
    let mut rng = seeds::rng(params.seed);
    let community = block_labels(params.n, params.k);

    let attempts = match policy {
        Connectivity::Ignore => 1,
        _ => CONNECT_RESAMPLES,
    };
    let mut edges = Vec::new();
    let mut connected = false;
    for _ in 0..attempts {
        edges = bernoulli_edges(&mut rng, &community, params.p, params.q);
        if Graph::from_canonical_unchecked(params.n, edges.clone()).is_connected() {
            connected = true;
            break;
        }
    }
    let bridges = match (connected, policy) {
        (true, _) | (false, Connectivity::Ignore) => None,
        (false, Connectivity::ResampleOnly) => return Err(GenError::Disconnected { attempts }),
        (false, Connectivity::Repair) => Some(bridge_components(&mut rng, params.n, &mut edges)),
    };

    let mut precolour = vec![None; params.n];
    let mut start = 0;
    for b in 0..params.k {
        let size = community[start..].iter().take_while(|&&c| c as usize == b).count();
        for i in index::sample(&mut rng, size, params.pcc) {
            precolour[start + i] = Some(b as u32);
        }
        start += size;
    }

    // (0, 1]
    let rho = 1.0 - rng.gen::<f64>();
    let meta = GeneratorMeta {
        p: Some(params.p),
        q: Some(params.q),
        pcc: Some(params.pcc),
        seed: Some(params.seed),
        rho: Some(rho),
        bridges,
    };
    let graph = Graph::from_canonical_unchecked(params.n, edges);
    Ok(Instance::new(graph, params.k, precolour, Some(community), meta)
        .expect("generator output satisfies instance invariants"))
}

/// Inclusive integer ranges from which batch parameters are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRanges {
    pub n: (usize, usize),
    pub k: (usize, usize),
    pub pcc: (usize, usize),
    /// When set, instance `i` gets `n = n.0 + i / per_n` instead of a uniform draw.
    pub per_n: Option<usize>,
}

impl BatchRanges {
    /// The full standard protocol: 200 ≤ n < 3000, ten graphs per n,
    /// k ∈ 2..=20, pcc ∈ 1..=10 (28,000 instances).
    pub fn standard() -> Self {
        BatchRanges { n: (200, 2999), k: (2, 20), pcc: (1, 10), per_n: Some(10) }
    }

    /// Same k and pcc ranges on a smaller vertex range.
    pub fn desk(n_lo: usize, n_hi: usize) -> Self {
        BatchRanges { n: (n_lo, n_hi), k: (2, 20), pcc: (1, 10), per_n: None }
    }

    pub fn standard_count() -> usize {
        (2999 - 200 + 1) * 10
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::Config(m));
        for (name, (lo, hi)) in [("n", self.n), ("k", self.k), ("pcc", self.pcc)] {
            if lo > hi {
                return bad(format!("{name} range {lo}..={hi} is empty"));
            }
        }
        if self.k.0 < 2 {
            return bad("k must be at least 2".into());
        }
        if self.k.0 > self.n.0 {
            return bad(format!("k lower bound {} exceeds smallest n {}", self.k.0, self.n.0));
        }
        if self.pcc.0 < 1 {
            return bad("pcc must be at least 1".into());
        }
        // pcc ≤ ⌊n/k⌋ must be attainable for the worst (n, k) combination.
        let k_cap = self.k.1.min(self.n.0);
        if self.pcc.0 > self.n.0 / k_cap {
            return bad(format!(
                "pcc lower bound {} exceeds n/k = {}/{}",
                self.pcc.0, self.n.0, k_cap
            ));
        }
        if self.per_n == Some(0) {
            return bad("per_n must be positive".into());
        }
        Ok(())
    }
}

/// Parameters of the `index`-th instance of a batch; pure in `(ranges, seed, index)`.
pub fn batch_params(ranges: &BatchRanges, seed: u64, index: usize) -> SbmParams {
    let inst_seed = seeds::derive(seed, &[seeds::tag::INSTANCE, index as u64]);
    let mut rng = seeds::derived_rng(inst_seed, &[seeds::tag::SEED_STRATEGY]);
    let n = match ranges.per_n {
        Some(per) => (ranges.n.0 + index / per).min(ranges.n.1),
        None => rng.gen_range(ranges.n.0..=ranges.n.1),
    };
    let k = rng.gen_range(ranges.k.0..=ranges.k.1.min(n));
    let pcc = rng.gen_range(ranges.pcc.0..=ranges.pcc.1.min(n / k));
    let p = 1.0 - rng.gen::<f64>();
    let q = (1.0 - rng.gen::<f64>()) * p / 2.0;
    SbmParams { n, k, p, q, pcc, seed: inst_seed }
}

pub fn sample_batch(ranges: &BatchRanges, count: usize, seed: u64) -> Result<Vec<Instance>, GenError> {
    use rayon::prelude::*;
    ranges.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| sample_instance(&batch_params(ranges, seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, k: usize, p: f64, q: f64, pcc: usize, seed: u64) -> SbmParams {
        SbmParams { n, k, p, q, pcc, seed }
    }

    #[test]
    fn block_sizes_near_equal() {
        assert_eq!(block_labels(4, 2), vec![0, 0, 1, 1]);
        assert_eq!(block_labels(7, 3), vec![0, 0, 0, 1, 1, 2, 2]);
        for n in 2..60 {
            for k in 2..=n.min(12) {
                let labels = block_labels(n, k);
                let sizes: Vec<usize> =
                    (0..k as u32).map(|b| labels.iter().filter(|&&c| c == b).count()).collect();
                assert!(sizes.iter().all(|&s| s == n / k || s == n.div_ceil(k)));
                assert_eq!(sizes.iter().sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn forced_accept_gives_complete_graph() {
        let comm = block_labels(4, 2);
        let edges = sample_edges(&comm, |_| true);
        let g = Graph::from_edges(4, edges).unwrap();
        assert_eq!(g.m(), 6);
        assert_eq!(comm, vec![0, 0, 1, 1]);
    }

    #[test]
    fn p_one_forces_intra_edges() {
        let inst = sample_instance(&params(30, 3, 1.0, 0.05, 1, 9)).unwrap();
        let comm = inst.community().unwrap();
        for u in 0..30 {
            for v in u + 1..30 {
                if comm[u] == comm[v] {
                    assert!(inst.graph().adj(u).contains(&v));
                }
            }
        }
    }

    #[test]
    fn precolour_protocol_counts() {
        let inst = sample_instance(&params(200, 4, 0.3, 0.05, 3, 1)).unwrap();
        let comm = inst.community().unwrap();
        assert_eq!(inst.precoloured_vertices().len(), 12);
        for b in 0..4u32 {
            let in_block = inst
                .precoloured_vertices()
                .iter()
                .filter(|&&v| comm[v] == b)
                .count();
            assert_eq!(in_block, 3);
        }
        for &v in inst.precoloured_vertices() {
            assert_eq!(inst.precolour()[v], Some(comm[v]));
        }
    }

    #[test]
    fn empirical_edge_densities() {
        // Over 200 samples, intra and inter pair frequencies match p and q.
        let (n, mut intra_pairs, mut intra_edges, mut inter_pairs, mut inter_edges) =
            (100usize, 0u64, 0u64, 0u64, 0u64);
        for s in 0..200 {
            let inst =
                sample_instance_with(&params(n, 2, 0.5, 0.1, 1, s), Connectivity::Ignore).unwrap();
            let comm = inst.community().unwrap();
            let g = inst.graph();
            for u in 0..n {
                for v in u + 1..n {
                    let e = g.adj(u).binary_search(&v).is_ok() as u64;
                    if comm[u] == comm[v] {
                        intra_pairs += 1;
                        intra_edges += e;
                    } else {
                        inter_pairs += 1;
                        inter_edges += e;
                    }
                }
            }
        }
        let intra = intra_edges as f64 / intra_pairs as f64;
        let inter = inter_edges as f64 / inter_pairs as f64;
        assert!((intra - 0.5).abs() < 0.03, "intra {intra}");
        assert!((inter - 0.1).abs() < 0.03, "inter {inter}");
    }

    #[test]
    fn sparse_graphs_are_repaired() {
        let p = params(80, 4, 0.02, 0.001, 1, 3);
        let inst = sample_instance(&p).unwrap();
        assert!(inst.graph().is_connected());
        assert!(inst.meta().bridges.unwrap() > 0);
        assert_eq!(
            sample_instance_with(&p, Connectivity::ResampleOnly),
            Err(GenError::Disconnected { attempts: CONNECT_RESAMPLES })
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(60, 3, 0.4, 0.1, 2, 77);
        assert_eq!(sample_instance(&p).unwrap(), sample_instance(&p).unwrap());
        let other = SbmParams { seed: 78, ..p };
        assert_ne!(sample_instance(&other).unwrap().graph(), sample_instance(&params(60, 3, 0.4, 0.1, 2, 77)).unwrap().graph());
    }

    #[test]
    fn invalid_params_rejected() {
        for bad in [
            params(10, 1, 0.5, 0.1, 1, 0),
            params(3, 4, 0.5, 0.1, 1, 0),
            params(10, 2, 0.0, 0.0, 1, 0),
            params(10, 2, 0.5, 0.3, 1, 0),
            params(10, 2, 0.5, 0.1, 6, 0),
            params(10, 2, 0.5, 0.1, 0, 0),
        ] {
            assert!(matches!(sample_instance(&bad), Err(GenError::Params(_))), "{bad:?}");
        }
    }

    #[test]
    fn batch_edge_cases() {
        let r = BatchRanges::desk(20, 40);
        assert!(sample_batch(&r, 0, 1).unwrap().is_empty());
        let infeasible = BatchRanges { n: (5, 10), k: (6, 8), pcc: (1, 1), per_n: None };
        assert!(matches!(sample_batch(&infeasible, 3, 1), Err(GenError::Config(_))));
        assert_eq!(BatchRanges::standard_count(), 28_000);
        let standard = BatchRanges::standard();
        assert_eq!(batch_params(&standard, 5, 0).n, 200);
        assert_eq!(batch_params(&standard, 5, 27_999).n, 2999);
    }
}
