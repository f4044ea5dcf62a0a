//! Batch runner over (instance, algorithm) pairs.

use std::collections::HashSet;
use std::path::Path;
use std::sync::mpsc;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{ResultsStore, RunRecord};
use super::HarnessError;
use crate::evolution::{self, EaConfig, Variant};
use crate::instance::{parse_instance, Instance};
use crate::metrics::{self, Colouring, Thresholds};
use crate::seeds::{self, stable_hash, tag};

/// A named engine configuration. The config's own `seed` is ignored; each
/// pair gets a seed derived from the campaign seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSpec {
    pub name: String,
    #[serde(flatten)]
    pub config: EaConfig,
}

impl AlgoSpec {
    pub fn variant(v: Variant, base: &EaConfig) -> Self {
        let (seeding, improver) = v.parts();
        AlgoSpec { name: v.name().to_string(), config: EaConfig { seeding, improver, ..base.clone() } }
    }

    /// The six standard variants sharing `base`'s parameters.
    pub fn all_variants(base: &EaConfig) -> Vec<AlgoSpec> {
        Variant::ALL.iter().map(|&v| AlgoSpec::variant(v, base)).collect()
    }

    /// Stable fingerprint of the configuration (name included).
    pub fn config_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("config serialises");
        stable_hash(json.as_bytes())
    }
}

#[derive(Debug, Deserialize)]
struct AlgoFile {
    #[serde(rename = "algo")]
    algos: Vec<AlgoSpec>,
}

/// Parse a TOML list of `[[algo]]` tables.
///
/// ```toml
/// [[algo]]
/// name = "MA(LMC)"
/// seeding = "lmc"
/// improver = "ls"
/// max_generations = 200
/// ```
pub fn parse_algo_file(text: &str) -> Result<Vec<AlgoSpec>, HarnessError> {
    let file: AlgoFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut names = HashSet::new();
    for a in &file.algos {
        a.config.validate().map_err(|e| HarnessError::Config(format!("{}: {e}", a.name)))?;
        if !names.insert(a.name.clone()) {
            return Err(HarnessError::Config(format!("duplicate algorithm name `{}`", a.name)));
        }
    }
    if file.algos.is_empty() {
        return Err(HarnessError::Config("no [[algo]] entries".into()));
    }
    Ok(file.algos)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoPolicy {
    /// Same ρ on every instance.
    Fixed(f64),
    /// ρ uniform on (0, 1], drawn per instance from the campaign seed.
    Uniform,
    /// The ρ suggested in the instance metadata; uniform when absent.
    FromInstance,
}

#[derive(Debug, Clone)]
pub struct CampaignInstance {
    pub id: String,
    pub instance: Result<Arc<Instance>, String>,
}

impl CampaignInstance {
    pub fn new(id: impl Into<String>, instance: Instance) -> Self {
        CampaignInstance { id: id.into(), instance: Ok(Arc::new(instance)) }
    }
}

/// Every `*.col` / `*.txt` / `*.dimacs` file in `dir`, sorted by name; the
/// id is the file stem. Unreadable or invalid files become failed entries.
pub fn load_instance_dir(dir: &Path) -> Result<Vec<CampaignInstance>, HarnessError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(p.extension().and_then(|e| e.to_str()), Some("col" | "txt" | "dimacs"))
        })
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let instance = std::fs::read_to_string(&p)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_instance(&text).map_err(|e| e.to_string()))
                .map(Arc::new);
            CampaignInstance { id, instance }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub workers: usize,
    pub seed: u64,
    pub rho: RhoPolicy,
    pub epsilon: f64,
    /// Write `wall_ms = 0` so results are byte-reproducible.
    pub omit_timing: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            workers: 1,
            seed: 0,
            rho: RhoPolicy::Uniform,
            epsilon: metrics::DEFAULT_EPSILON,
            omit_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedPair {
    pub instance_id: String,
    pub algo: String,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct CampaignReport {
    /// Records produced by this invocation (not those found in the store).
    pub records: Vec<RunRecord>,
    pub skipped: usize,
    pub failures: Vec<FailedPair>,
}

pub fn pair_seed(master: u64, instance_id: &str, algo: &str) -> u64 {
    seeds::derive(master, &[tag::PAIR, stable_hash(instance_id.as_bytes()), stable_hash(algo.as_bytes())])
}

pub fn campaign_rho(policy: RhoPolicy, master: u64, id: &str, inst: &Instance) -> f64 {
    let uniform = || 1.0 - seeds::derived_rng(master, &[tag::RHO, stable_hash(id.as_bytes())]).gen::<f64>();
    match policy {
        RhoPolicy::Fixed(r) => r,
        RhoPolicy::Uniform => uniform(),
        RhoPolicy::FromInstance => inst.meta().rho.unwrap_or_else(uniform),
    }
}

/// Build the record for a finished run.
#[allow(clippy::too_many_arguments)]
pub fn make_record(
    id: &str,
    algo: &str,
    seed: u64,
    inst: &Instance,
    rho: f64,
    epsilon: f64,
    best: &Colouring,
    generations: u64,
    wall_ms: u64,
) -> RunRecord {
    let report = metrics::evaluate(inst, best, rho, epsilon);
    let th: Option<Thresholds> = report.thresholds;
    let acd_exact = inst
        .community()
        .is_some_and(|c| c.iter().zip(best.as_slice()).all(|(g, col)| g == col));
    RunRecord {
        instance_id: id.to_string(),
        algo: algo.to_string(),
        seed,
        n: inst.n(),
        k: inst.k(),
        p: inst.meta().p,
        q: inst.meta().q,
        pcc: inst.meta().pcc,
        rho,
        mu: th.map(|t| t.mu),
        xi: th.map(|t| t.xi),
        xi_tilde: th.map(|t| t.xi_tilde),
        regime_mu_xitilde: report.regime.map(|r| r.mu),
        regime_xi: report.regime.map(|r| r.xi),
        alpha: report.alpha,
        acd: report.acd,
        complete: report.complete,
        acd_exact,
        generations,
        wall_ms,
    }
}

fn run_pair(ci: &CampaignInstance, algo: &AlgoSpec, opts: &CampaignOptions) -> Result<RunRecord, FailedPair> {
    let fail = |error: String| FailedPair { instance_id: ci.id.clone(), algo: algo.name.clone(), error };
    let inst = ci.instance.as_ref().map_err(|e| fail(e.clone()))?;
    let seed = pair_seed(opts.seed, &ci.id, &algo.name);
    let rho = campaign_rho(opts.rho, opts.seed, &ci.id, inst);
    let cfg = EaConfig { seed, ..algo.config.clone() };
    let out = evolution::run(inst, rho, &cfg).map_err(|e| fail(e.to_string()))?;
    let wall_ms = if opts.omit_timing { 0 } else { out.elapsed.as_millis() as u64 };
    Ok(make_record(&ci.id, &algo.name, seed, inst, rho, opts.epsilon, &out.best, out.generations, wall_ms))
}

/// Run every (instance, algorithm) pair not already present in `store`.
///
/// Pairs run on a pool of `opts.workers` threads; completed records are
/// handed to a single writer that appends them to the store as they arrive.
pub fn run_campaign(
    instances: &[CampaignInstance],
    algos: &[AlgoSpec],
    opts: &CampaignOptions,
    store: Option<&Path>,
) -> Result<CampaignReport, HarnessError> {
    if instances.is_empty() || algos.is_empty() {
        return Err(HarnessError::Config("campaign needs at least one instance and one algorithm".into()));
    }
    let (mut store, done): (Option<ResultsStore>, HashSet<(String, String)>) = match store {
        Some(path) => {
            let (s, existing) = ResultsStore::open(path)?;
            (Some(s), existing.iter().map(RunRecord::key).collect())
        }
        None => (None, HashSet::new()),
    };

    let pairs: Vec<(&CampaignInstance, &AlgoSpec)> = instances
        .iter()
        .flat_map(|ci| algos.iter().map(move |a| (ci, a)))
        .filter(|(ci, a)| !done.contains(&(ci.id.clone(), a.name.clone())))
        .collect();
    let skipped = instances.len() * algos.len() - pairs.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<Result<RunRecord, FailedPair>>();
    let mut report = CampaignReport { skipped, ..Default::default() };
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        let producer = scope.spawn(move || {
            pool.install(|| {
                pairs.par_iter().for_each_with(tx, |tx, (ci, algo)| {
                    let _ = tx.send(run_pair(ci, algo, opts));
                })
            })
        });
        for result in rx {
            match result {
                Ok(rec) => {
                    if let Some(s) = store.as_mut() {
                        s.append(&rec)?;
                    }
                    report.records.push(rec);
                }
                Err(f) => {
                    log::warn!("pair ({}, {}) failed: {}", f.instance_id, f.algo, f.error);
                    report.failures.push(f);
                }
            }
        }
        producer.join().expect("campaign worker panicked");
        Ok(())
    })?;
    Ok(report)
}

/// Campaign description saved next to the results CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub rho: RhoPolicy,
    pub epsilon: f64,
    pub omit_timing: bool,
    pub algos: Vec<ManifestAlgo>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestAlgo {
    pub config_hash: String,
    #[serde(flatten)]
    pub spec: AlgoSpec,
}

impl Manifest {
    pub fn new(algos: &[AlgoSpec], opts: &CampaignOptions) -> Self {
        Manifest {
            seed: opts.seed,
            rho: opts.rho,
            epsilon: opts.epsilon,
            omit_timing: opts.omit_timing,
            algos: algos
                .iter()
                .map(|a| ManifestAlgo { config_hash: format!("{:016x}", a.config_hash()), spec: a.clone() })
                .collect(),
        }
    }
}
