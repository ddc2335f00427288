use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avgstretch::construct::{build, Params, RepresentativeRule, Variant};
use avgstretch::evaluate::{average_stretch_exact, average_stretch_sampled, stretch_histogram};
use avgstretch::fairsplit::k_partition;
use avgstretch_workbench::error::{Error, Result};
use avgstretch_workbench::experiment::{run_experiment, ExperimentSpec};
use avgstretch_workbench::fit::fit_slope;
use avgstretch_workbench::generators::{generate, Kind};
use avgstretch_workbench::io::{self, Report};
use avgstretch_workbench::props::{random_probes, summarize};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "avgstretch", version, about = "Sparse geometric graphs with low average stretch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set
    Gen(GenArgs),
    /// Build the graph on a point set
    Build(BuildArgs),
    /// Evaluate the stretch of a graph
    Eval(EvalArgs),
    /// Check k-partition properties on a point set
    Props(PropsArgs),
    /// Run an experiment spec
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of points (number of grids for exp-grids)
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points per grid for exp-grids
    #[arg(long, default_value_t = 64)]
    grid_k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "sampled")]
    variant: Variant,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value = "earliest-dense")]
    rule: RepresentativeRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Evaluate every pair
    #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
    exact: bool,
    /// Number of random pairs
    #[arg(long)]
    sample: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a stretch histogram CSV (exact evaluation only)
    #[arg(long, requires = "exact")]
    histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    buckets: usize,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Partition capacity; defaults to the sampled-variant choice
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 500)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the partition as CSV
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Core(_) | Error::InvalidInput(_) => 3,
        Error::Io { .. } => 4,
        Error::Parse { .. } => 5,
        Error::Spec(_) => 6,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn gen(a: GenArgs) -> Result<()> {
    let points = generate(a.kind, a.n, a.d, a.seed, a.grid_k)?;
    io::write_points(&a.out, &points)?;
    println!("wrote {} points to {}", points.len(), a.out.display());
    Ok(())
}

fn build_cmd(a: BuildArgs) -> Result<()> {
    let points = io::read_points(&a.input)?;
    let mut params = Params::select(points.len(), points.dim(), a.variant)?;
    if let Some(k) = a.k {
        params.k = k;
    }
    if let Some(c) = a.c {
        params.c = c;
    }
    if let Some(e) = a.epsilon {
        params.epsilon = e;
    }
    if let Some(g) = a.gamma {
        params.gamma = g;
    }
    params.rule = a.rule;
    params.seed = a.seed;
    let construction = build(&points, &params)?;
    let r = &construction.report;
    let t = &r.timings;
    let meta: Vec<(String, String)> = [
        ("input", a.input.display().to_string()),
        ("n", r.n.to_string()),
        ("d", r.dim.to_string()),
        ("variant", params.variant.name().into()),
        ("rule", params.rule.name().into()),
        ("seed", params.seed.to_string()),
        ("k", params.k.to_string()),
        ("c", params.c.to_string()),
        ("epsilon", params.epsilon.to_string()),
        ("gamma", params.gamma.to_string()),
        ("clusters", r.clusters.to_string()),
        ("threshold", r.threshold.to_string()),
        ("dense_regions", r.dense_regions.to_string()),
        ("road_edges", r.road_edges.to_string()),
        ("highway_edges", r.highway_edges.to_string()),
        ("representative_edges", r.representative_edges.to_string()),
        ("total_edges", r.total_edges.to_string()),
        ("seconds_partition", t.partition.to_string()),
        ("seconds_roads", t.roads.to_string()),
        ("seconds_highways", t.highways.to_string()),
        ("seconds_covers", t.covers.to_string()),
        ("seconds_representatives", t.representatives.to_string()),
        ("seconds_assemble", t.assemble.to_string()),
        ("seconds_total", t.total().to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    for (k, v) in &meta {
        println!("{k}: {v}");
    }
    if let Some(path) = &a.graph_out {
        io::write_graph(path, &construction.graph)?;
    }
    if let Some(path) = &a.report_out {
        io::write_report(path, &Report { meta, ..Default::default() })?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let points = io::read_points(&a.points)?;
    let graph = io::read_graph(&a.graph, &points)?;
    let report = match a.sample {
        Some(m) => average_stretch_sampled(&graph, &points, m, &mut ChaCha8Rng::seed_from_u64(a.seed))?,
        None => average_stretch_exact(&graph, &points)?,
    };
    println!("n: {}", points.len());
    println!("edges: {}", graph.edge_count());
    println!("pairs: {}", report.pair_count);
    println!("asf: {}", report.asf);
    println!("stderr: {}", report.stderr.unwrap_or(0.0));
    if let Some(s) = report.strf {
        println!("strf: {s}");
    }
    if let Some(path) = &a.histogram {
        write_text(path, &stretch_histogram(&graph, &points, a.buckets)?.to_csv())?;
    }
    Ok(())
}

fn props(a: PropsArgs) -> Result<()> {
    let points = io::read_points(&a.input)?;
    let k = match a.k {
        Some(k) => k,
        None => Params::select(points.len(), points.dim(), Variant::Sampled)?.k,
    };
    let partition = k_partition(&points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let probes = random_probes(&partition, &points, a.probes, &mut rng);
    let s = summarize(&partition, &points, &probes)?;
    println!("n: {}\nk: {}\nballs: {}\ncount_ratio: {}", s.n, s.k, s.balls, s.count_ratio);
    println!("outside_assigned_ball: {}\noverfull_balls: {}\nsorted: {}", s.outside, s.overfull, !s.unsorted);
    println!("probes: {}\nmax_overlap: {}\nmax_density: {}", probes.len(), s.max_overlap, s.max_density);
    if let Some(path) = &a.dump {
        write_text(path, &partition.to_csv())?;
    }
    if !s.exact_properties_hold() {
        return Err(Error::InvalidInput("partition violates its exact properties".into()));
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| Error::Io { path: a.spec.clone(), source: e })?;
    let spec = ExperimentSpec::from_toml(&text)?;
    let result = run_experiment(&spec)?;
    let mut meta = vec![
        ("spec".to_string(), a.spec.display().to_string()),
        ("generator".into(), spec.generator.name().into()),
        ("variant".into(), spec.variant.name().into()),
        ("runs".into(), result.records.len().to_string()),
        ("failures".into(), result.failures.len().to_string()),
    ];
    if spec.sizes.len() >= 2 {
        match fit_slope(&result.records) {
            Ok(f) => {
                meta.push(("slope".into(), f.slope.to_string()));
                meta.push(("intercept".into(), f.intercept.to_string()));
                meta.push(("r2".into(), f.r2.to_string()));
            }
            Err(e) => log::warn!("no slope fit: {e}"),
        }
    }
    for (k, v) in &meta {
        println!("{k}: {v}");
    }
    print!("{}", io::records_csv(&result.records));
    for f in &result.failures {
        eprintln!("run n={} seed={} failed: {}", f.n, f.seed, f.message);
    }
    if let Some(path) = &spec.outputs.csv {
        io::write_csv(path, &result.records)?;
    }
    if let Some(path) = &spec.outputs.report {
        io::write_report(path, &Report { meta, result })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Props(a) => props(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
