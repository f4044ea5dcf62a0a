use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use softhappy_core::evolution::{self, EaConfig, Improver, Seeding};
use softhappy_core::generator::{sample_batch, BatchRanges};
use softhappy_core::harness::aggregate::{self, Grouping, Metric};
use softhappy_core::harness::campaign::{
    self, load_instance_dir, make_record, parse_algo_file, AlgoSpec, CampaignOptions, Manifest, RhoPolicy,
};
use softhappy_core::harness::plotdata::{self, Axis};
use softhappy_core::harness::record::read_records;
use softhappy_core::metrics::{self, Colouring, EvalReport, DEFAULT_EPSILON};
use softhappy_core::{heuristics, parse_colouring, parse_instance, write_colouring, write_instance, Instance};

#[derive(Parser)]
#[command(name = "softhappy", version, about = "Soft happy colouring: instances, heuristics, GA/MA and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample SBM instances into a directory, with a manifest CSV.
    Generate(GenerateArgs),
    /// Evaluate a colouring of an instance.
    Eval(EvalArgs),
    /// Colour an instance with a heuristic or an evolutionary algorithm.
    Solve(SolveArgs),
    /// Run every algorithm on every instance of a directory.
    Bench(BenchArgs),
    /// Welch t-tests between algorithms of a results file.
    Stats(StatsArgs),
    /// Per-algorithm, per-regime summary of a results file.
    Summary(SummaryArgs),
    /// Binned series and α histograms for plotting.
    Plotdata(PlotdataArgs),
}

/// Inclusive integer range written `LO-HI`, `LO..HI`, `LO..=HI` or `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Range(usize, usize);

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad range bound `{x}`"));
        let (lo, hi) = if let Some((a, b)) = s.split_once("..=") {
            (parse(a)?, parse(b)?)
        } else if let Some((a, b)) = s.split_once("..") {
            (parse(a)?, parse(b)?)
        } else if let Some((a, b)) = s.split_once('-') {
            (parse(a)?, parse(b)?)
        } else {
            let v = parse(s)?;
            (v, v)
        };
        if lo > hi {
            return Err(format!("empty range {lo}..={hi}"));
        }
        Ok(Range(lo, hi))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "200-2999")]
    n_range: Range,
    #[arg(long, default_value = "2-20")]
    k_range: Range,
    #[arg(long, default_value = "1-10")]
    pcc_range: Range,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Assign n sequentially, this many graphs per n, instead of uniformly.
    #[arg(long)]
    per_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct EvalArgs {
    instance: PathBuf,
    /// One `vertex colour` pair per line, 1-based.
    colouring: PathBuf,
    /// Defaults to the instance's suggested ρ.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Algo {
    Rnd,
    Lmc,
    Ls,
    Rls,
    Ga,
    Ma,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedingArg {
    Rnd,
    Lmc,
    Ls,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImproverArg {
    None,
    Ls,
    Rls,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_enum, default_value = "rnd")]
    seeding: SeedingArg,
    /// MA improver; defaults to ls for `--algo ma`. GA ignores it.
    #[arg(long, value_enum)]
    improver: Option<ImproverArg>,
    #[arg(long, default_value_t = 20)]
    pop_size: usize,
    #[arg(long, default_value_t = 0.005)]
    mute_factor: f64,
    #[arg(long, default_value_t = 0.5)]
    crossover_p: f64,
    /// Seconds; ignored when --max-generations is given.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long)]
    max_generations: Option<u64>,
    #[arg(long, default_value_t = heuristics::DEFAULT_RLS_PASSES)]
    rls_passes: usize,
    /// Defaults to the instance's suggested ρ.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Colouring output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a RunRecord JSON here.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Per-generation trace CSV (GA/MA only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    instances: PathBuf,
    /// TOML file of `[[algo]]` tables; the six standard variants when absent.
    #[arg(long)]
    algos: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// `uniform`, `instance`, or a fixed value.
    #[arg(long, default_value = "uniform")]
    rho: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Generation budget for the default variants (disables their time limit).
    #[arg(long)]
    max_generations: Option<u64>,
    /// Time limit in seconds for the default variants.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Record wall_ms as 0 so reruns are byte-identical.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    results: PathBuf,
    /// `all`, or comma-separated `A:B` pairs.
    #[arg(long, default_value = "all")]
    pairs: String,
    #[arg(long, default_value = "alpha")]
    metric: Metric,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "mu-xitilde")]
    grouping: Grouping,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "n")]
    axis: Axis,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Series CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write α histograms here.
    #[arg(long)]
    hist_out: Option<PathBuf>,
    #[arg(long, default_value_t = plotdata::HISTOGRAM_BINS)]
    hist_bins: usize,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn resolve_rho(rho: Option<f64>, inst: &Instance) -> Result<f64> {
    match rho.or(inst.meta().rho) {
        Some(r) if (0.0..=1.0).contains(&r) => Ok(r),
        Some(r) => bail!("ρ = {r} outside [0, 1]"),
        None => bail!("instance suggests no ρ; pass --rho"),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let ranges = BatchRanges { n: (a.n_range.0, a.n_range.1), k: (a.k_range.0, a.k_range.1), pcc: (a.pcc_range.0, a.pcc_range.1), per_n: a.per_n };
    let instances = sample_batch(&ranges, a.count, a.seed)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let width = a.count.saturating_sub(1).to_string().len().max(4);
    let mut manifest = csv::Writer::from_path(a.out_dir.join("manifest.csv"))?;
    manifest.write_record(["filename", "n", "k", "p", "q", "pcc", "rho_suggested", "seed"])?;
    for (i, inst) in instances.iter().enumerate() {
        let name = format!("sbm-{i:0width$}.col");
        fs::write(a.out_dir.join(&name), write_instance(inst))?;
        let m = inst.meta();
        let opt = |x: Option<String>| x.unwrap_or_default();
        manifest.write_record([
            name,
            inst.n().to_string(),
            inst.k().to_string(),
            opt(m.p.map(|v| v.to_string())),
            opt(m.q.map(|v| v.to_string())),
            opt(m.pcc.map(|v| v.to_string())),
            opt(m.rho.map(|v| v.to_string())),
            opt(m.seed.map(|v| v.to_string())),
        ])?;
    }
    manifest.flush()?;
    log::info!("wrote {} instances to {}", instances.len(), a.out_dir.display());
    Ok(())
}

fn print_report(r: &EvalReport, format: Format) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string(r)?),
        Format::Table => {
            let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
            println!("n          {}", r.n);
            println!("rho        {}", r.rho);
            println!("happy      {}", r.happy_count);
            println!("alpha      {:.6}", r.alpha);
            println!("complete   {}", r.complete);
            println!("acd        {}", opt(r.acd));
            if let Some(t) = &r.thresholds {
                println!("mu         {:.6}", t.mu);
                println!("xi         {:.6}", t.xi);
                println!("xi_tilde   {:.6}", t.xi_tilde);
            }
            if let Some(reg) = &r.regime {
                println!("regime     {} / {}", reg.mu.label(), reg.xi.label());
            }
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let text = fs::read_to_string(&a.colouring).with_context(|| format!("reading {}", a.colouring.display()))?;
    let sigma = parse_colouring(&inst, &text).with_context(|| format!("parsing {}", a.colouring.display()))?;
    let rho = resolve_rho(a.rho, &inst)?;
    print_report(&metrics::evaluate(&inst, &sigma, rho, a.epsilon), a.format)
}

/// Record name: `LMC`, `GA(LS)`, `MA+RLS(Rnd)`, ...
fn algo_name(a: &SolveArgs) -> String {
    let seeding = match a.seeding {
        SeedingArg::Rnd => "Rnd",
        SeedingArg::Lmc => "LMC",
        SeedingArg::Ls => "LS",
    };
    match a.algo {
        Algo::Rnd => "Rnd".into(),
        Algo::Lmc => "LMC".into(),
        Algo::Ls => "LS".into(),
        Algo::Rls => "RLS".into(),
        Algo::Ga => format!("GA({seeding})"),
        Algo::Ma => match a.improver {
            Some(ImproverArg::Rls) => format!("MA+RLS({seeding})"),
            Some(ImproverArg::None) => format!("GA({seeding})"),
            _ => format!("MA({seeding})"),
        },
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let rho = resolve_rho(a.rho, &inst)?;
    let start = std::time::Instant::now();
    let (sigma, generations, trace): (Colouring, u64, Option<Vec<evolution::GenerationStat>>) = match a.algo {
        Algo::Rnd => (heuristics::random_completion(&inst, a.seed), 0, None),
        Algo::Lmc => (heuristics::lmc(&inst, a.seed), 0, None),
        Algo::Ls => {
            let start = heuristics::random_completion(&inst, a.seed);
            (heuristics::ls(&inst, &start, rho, a.seed.wrapping_add(1)), 0, None)
        }
        Algo::Rls => {
            let start = heuristics::random_completion(&inst, a.seed);
            (heuristics::rls(&inst, &start, rho, a.seed.wrapping_add(1), a.rls_passes), 0, None)
        }
        Algo::Ga | Algo::Ma => {
            let improver = match (a.algo, a.improver) {
                (Algo::Ga, _) => Improver::None,
                (_, Some(ImproverArg::Rls)) => Improver::Rls,
                (_, Some(ImproverArg::None)) => Improver::None,
                _ => Improver::Ls,
            };
            let seeding = match a.seeding {
                SeedingArg::Rnd => Seeding::Rnd,
                SeedingArg::Lmc => Seeding::Lmc,
                SeedingArg::Ls => Seeding::Ls,
            };
            let cfg = EaConfig {
                pop_size: a.pop_size,
                mute_factor: a.mute_factor,
                crossover_p: a.crossover_p,
                time_limit_secs: if a.max_generations.is_some() { None } else { Some(a.time_limit) },
                max_generations: a.max_generations,
                seeding,
                improver,
                rls_passes: a.rls_passes,
                seed: a.seed,
                ..EaConfig::default()
            };
            let out = evolution::run(&inst, rho, &cfg)?;
            (out.best, out.generations, Some(out.trace))
        }
    };
    let wall_ms = start.elapsed().as_millis() as u64;

    let mut w = output(a.out.as_deref())?;
    w.write_all(write_colouring(&sigma).as_bytes())?;
    w.flush()?;
    let id = a.instance.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let record = make_record(&id, &algo_name(&a), a.seed, &inst, rho, a.epsilon, &sigma, generations, wall_ms);
    if let Some(path) = &a.record {
        fs::write(path, serde_json::to_string_pretty(&record)?)?;
    }
    if let (Some(path), Some(trace)) = (&a.trace, &trace) {
        let mut t = csv::Writer::from_path(path)?;
        t.write_record(["generation", "best", "mean", "elapsed_ms"])?;
        for g in trace {
            t.write_record([g.generation.to_string(), g.best.to_string(), g.mean.to_string(), g.elapsed_ms.to_string()])?;
        }
        t.flush()?;
    }
    eprintln!("{}: alpha {:.6}, complete {}", record.algo, record.alpha, record.complete);
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let instances = load_instance_dir(&a.instances)?;
    if instances.is_empty() {
        bail!("no instance files in {}", a.instances.display());
    }
    let algos = match &a.algos {
        Some(path) => parse_algo_file(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => {
            let mut base = EaConfig::default();
            if let Some(t) = a.time_limit {
                base.time_limit_secs = Some(t);
            }
            if let Some(g) = a.max_generations {
                base = base.with_generations(g);
            }
            AlgoSpec::all_variants(&base)
        }
    };
    let rho = match a.rho.as_str() {
        "uniform" => RhoPolicy::Uniform,
        "instance" => RhoPolicy::FromInstance,
        fixed => RhoPolicy::Fixed(fixed.parse().with_context(|| format!("--rho: expected uniform, instance or a number, got `{fixed}`"))?),
    };
    let opts = CampaignOptions { workers: a.workers, seed: a.seed, rho, epsilon: a.epsilon, omit_timing: a.omit_timing };
    let manifest_path = a.out.with_extension("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&Manifest::new(&algos, &opts))?)?;

    let report = campaign::run_campaign(&instances, &algos, &opts, Some(&a.out))?;
    for f in &report.failures {
        eprintln!("failed: {} / {}: {}", f.instance_id, f.algo, f.error);
    }
    eprintln!(
        "{} runs, {} already present, {} failed; results in {}",
        report.records.len(),
        report.skipped,
        report.failures.len(),
        a.out.display()
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let records = read_records(&a.results)?;
    let pairs = if a.pairs == "all" {
        aggregate::all_pairs(&records)
    } else {
        a.pairs
            .split(',')
            .map(|p| match p.split_once(':') {
                Some((x, y)) => Ok((x.trim().to_string(), y.trim().to_string())),
                None => bail!("bad pair `{p}`; expected A:B"),
            })
            .collect::<Result<_>>()?
    };
    let tests = aggregate::pairwise_welch(&records, &pairs, a.metric);
    aggregate::write_pair_tests_csv(output(a.out.as_deref())?, &tests)?;
    Ok(())
}

fn summary(a: SummaryArgs) -> Result<()> {
    let records = read_records(&a.results)?;
    let s = aggregate::aggregate(&records, a.grouping);
    aggregate::write_summary_csv(output(a.out.as_deref())?, &s)?;
    for (group, count) in aggregate::group_totals(&s) {
        eprintln!("total {group}: {count}");
    }
    Ok(())
}

fn plot(a: PlotdataArgs) -> Result<()> {
    let records = read_records(&a.results)?;
    if records.is_empty() {
        bail!("{} holds no records", a.results.display());
    }
    plotdata::write_series_csv(output(a.out.as_deref())?, &plotdata::binned_series(&records, a.axis, a.bins))?;
    if let Some(path) = &a.hist_out {
        plotdata::write_histograms_csv(output(Some(path))?, &plotdata::alpha_histograms(&records, a.hist_bins))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Eval(a) => eval(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Stats(a) => stats(a),
        Command::Summary(a) => summary(a),
        Command::Plotdata(a) => plot(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_syntax() {
        assert_eq!("200-600".parse::<Range>(), Ok(Range(200, 600)));
        assert_eq!("2..=20".parse::<Range>(), Ok(Range(2, 20)));
        assert_eq!("2..20".parse::<Range>(), Ok(Range(2, 20)));
        assert_eq!("7".parse::<Range>(), Ok(Range(7, 7)));
        assert!("9-3".parse::<Range>().is_err());
        assert!("a-3".parse::<Range>().is_err());
    }

    #[test]
    fn cli_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
