//! Experiment specs and the run loop: generate, build, evaluate, record.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use avgstretch::construct::{build, Params, RepresentativeRule, Variant};
use avgstretch::evaluate::{average_stretch_exact, average_stretch_sampled, Method};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::generators::{generate, Kind};

pub const DEFAULT_EXACT_LIMIT: usize = 4096;
pub const DEFAULT_SAMPLE_FACTOR: u64 = 200;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub generator: Kind,
    pub d: usize,
    /// Points per grid for `exp-grids`, whose sizes count grids.
    pub grid_k: usize,
    pub sizes: Vec<usize>,
    pub variant: Variant,
    pub rule: RepresentativeRule,
    pub seeds: Vec<u64>,
    /// Largest n evaluated exactly; larger runs sample pairs.
    pub exact_limit: usize,
    /// Sampled runs draw `sample_factor * n` pairs.
    pub sample_factor: u64,
    pub outputs: Outputs,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    generator: Kind,
    #[serde(default = "two")]
    d: usize,
    #[serde(default)]
    grid_k: usize,
    sizes: Vec<usize>,
    #[serde(default = "sampled")]
    variant: String,
    #[serde(default)]
    rule: Option<String>,
    seeds: Vec<u64>,
    #[serde(default)]
    exact_limit: Option<usize>,
    #[serde(default)]
    sample_factor: Option<u64>,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
}

fn two() -> usize {
    2
}

fn sampled() -> String {
    "sampled".into()
}

impl ExperimentSpec {
    pub fn new(generator: Kind, sizes: Vec<usize>, variant: Variant, seeds: Vec<u64>) -> Self {
        ExperimentSpec {
            generator,
            d: 2,
            grid_k: 0,
            sizes,
            variant,
            rule: RepresentativeRule::default(),
            seeds,
            exact_limit: DEFAULT_EXACT_LIMIT,
            sample_factor: DEFAULT_SAMPLE_FACTOR,
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text)?;
        let spec = ExperimentSpec {
            generator: raw.generator,
            d: raw.d,
            grid_k: raw.grid_k,
            sizes: raw.sizes,
            variant: raw.variant.parse()?,
            rule: raw.rule.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
            seeds: raw.seeds,
            exact_limit: raw.exact_limit.unwrap_or(DEFAULT_EXACT_LIMIT),
            sample_factor: raw.sample_factor.unwrap_or(DEFAULT_SAMPLE_FACTOR),
            outputs: Outputs { report: raw.outputs.report, csv: raw.outputs.csv },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid("spec lists no sizes"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sizes must be strictly ascending"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("spec lists no seeds"));
        }
        if self.d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if self.generator == Kind::ExpGrids && self.grid_k == 0 {
            return Err(Error::invalid("exp-grids needs grid_k"));
        }
        if self.sample_factor == 0 {
            return Err(Error::invalid("sample_factor must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one (size, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub generator: Kind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub variant: Variant,
    pub rule: RepresentativeRule,
    pub k: usize,
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub road_edges: usize,
    pub highway_edges: usize,
    pub representative_edges: usize,
    pub total_edges: usize,
    pub asf: f64,
    pub stderr: f64,
    pub strf: Option<f64>,
    /// Pairs evaluated; all `n(n-1)/2` when `exact`.
    pub pairs: u64,
    pub exact: bool,
    pub build_seconds: f64,
    pub eval_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub n: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

pub(crate) const RECORD_FIELDS: [&str; 21] = [
    "generator",
    "n",
    "d",
    "seed",
    "variant",
    "rule",
    "k",
    "c",
    "epsilon",
    "gamma",
    "road_edges",
    "highway_edges",
    "representative_edges",
    "total_edges",
    "asf",
    "stderr",
    "strf",
    "pairs",
    "exact",
    "build_seconds",
    "eval_seconds",
];

impl RunRecord {
    /// Field values in [`RECORD_FIELDS`] order; floats print losslessly.
    pub fn values(&self) -> Vec<String> {
        vec![
            self.generator.name().into(),
            self.n.to_string(),
            self.d.to_string(),
            self.seed.to_string(),
            self.variant.name().into(),
            self.rule.name().into(),
            self.k.to_string(),
            self.c.to_string(),
            self.epsilon.to_string(),
            self.gamma.to_string(),
            self.road_edges.to_string(),
            self.highway_edges.to_string(),
            self.representative_edges.to_string(),
            self.total_edges.to_string(),
            self.asf.to_string(),
            self.stderr.to_string(),
            self.strf.map_or_else(|| "none".into(), |s| s.to_string()),
            self.pairs.to_string(),
            self.exact.to_string(),
            self.build_seconds.to_string(),
            self.eval_seconds.to_string(),
        ]
    }

    pub fn from_fields(fields: &HashMap<String, String>) -> Result<Self> {
        fn get<T: std::str::FromStr>(f: &HashMap<String, String>, key: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            let raw = f.get(key).ok_or_else(|| Error::invalid(format!("record lacks field {key:?}")))?;
            raw.parse().map_err(|e| Error::invalid(format!("field {key:?} = {raw:?}: {e}")))
        }
        let generator: String = get(fields, "generator")?;
        let generator = [Kind::Uniform, Kind::ExpGrids, Kind::TwoColumns, Kind::ClusterTrap]
            .into_iter()
            .find(|k| k.name() == generator)
            .ok_or_else(|| Error::invalid(format!("unknown generator {generator:?}")))?;
        let strf: String = get(fields, "strf")?;
        let strf = match strf.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|e| Error::invalid(format!("field \"strf\" = {s:?}: {e}")))?),
        };
        Ok(RunRecord {
            generator,
            n: get(fields, "n")?,
            d: get(fields, "d")?,
            seed: get(fields, "seed")?,
            variant: get::<String>(fields, "variant")?.parse()?,
            rule: get::<String>(fields, "rule")?.parse()?,
            k: get(fields, "k")?,
            c: get(fields, "c")?,
            epsilon: get(fields, "epsilon")?,
            gamma: get(fields, "gamma")?,
            road_edges: get(fields, "road_edges")?,
            highway_edges: get(fields, "highway_edges")?,
            representative_edges: get(fields, "representative_edges")?,
            total_edges: get(fields, "total_edges")?,
            asf: get(fields, "asf")?,
            stderr: get(fields, "stderr")?,
            strf,
            pairs: get(fields, "pairs")?,
            exact: get(fields, "exact")?,
            build_seconds: get(fields, "build_seconds")?,
            eval_seconds: get(fields, "eval_seconds")?,
        })
    }
}

/// Seeds for the generator, the construction and the evaluator of one run,
/// drawn from a stream of `seed` selected by `n`.
pub fn run_seeds(seed: u64, n: usize) -> [u64; 3] {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    master.set_stream(n as u64);
    [master.next_u64(), master.next_u64(), master.next_u64()]
}

/// One run of `spec` at size `n` with `seed`.
pub fn run_one(spec: &ExperimentSpec, n: usize, seed: u64) -> Result<RunRecord> {
    let [gen_seed, build_seed, eval_seed] = run_seeds(seed, n);
    let points = generate(spec.generator, n, spec.d, gen_seed, spec.grid_k)?;
    let count = points.len();
    let mut params = Params::select(count, points.dim(), spec.variant)?;
    params.seed = build_seed;
    params.rule = spec.rule;

    let start = Instant::now();
    let construction = build(&points, &params)?;
    let build_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let stretch = if count <= spec.exact_limit {
        average_stretch_exact(&construction.graph, &points)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
        average_stretch_sampled(&construction.graph, &points, spec.sample_factor * count as u64, &mut rng)?
    };
    let eval_seconds = start.elapsed().as_secs_f64();

    let report = &construction.report;
    Ok(RunRecord {
        generator: spec.generator,
        n: count,
        d: points.dim(),
        seed,
        variant: spec.variant,
        rule: spec.rule,
        k: params.k,
        c: params.c,
        epsilon: params.epsilon,
        gamma: params.gamma,
        road_edges: report.road_edges,
        highway_edges: report.highway_edges,
        representative_edges: report.representative_edges,
        total_edges: report.total_edges,
        asf: stretch.asf,
        stderr: stretch.stderr.unwrap_or(0.0),
        strf: stretch.strf,
        pairs: stretch.pair_count,
        exact: stretch.method == Method::Exact,
        build_seconds,
        eval_seconds,
    })
}

/// Runs every (size, seed) pair of `spec`. A failing run is recorded and the
/// rest continue.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut result = ExperimentResult::default();
    for &n in &spec.sizes {
        for &seed in &spec.seeds {
            match run_one(spec, n, seed) {
                Ok(record) => {
                    log::info!("n={} seed={seed}: asf={} ({:.2}s build)", record.n, record.asf, record.build_seconds);
                    result.records.push(record);
                }
                Err(e) => {
                    log::warn!("n={n} seed={seed} failed: {e}");
                    result.failures.push(RunFailure { n, seed, message: e.to_string() });
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(sizes: Vec<usize>, seeds: Vec<u64>) -> ExperimentSpec {
        ExperimentSpec::new(Kind::Uniform, sizes, Variant::Sampled, seeds)
    }

    #[test]
    fn one_size_one_seed() {
        let r = run_experiment(&tiny(vec![64], vec![1])).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(r.failures.is_empty());
        let rec = &r.records[0];
        assert!(rec.exact && rec.asf >= 1.0 && rec.strf.is_some());
        assert_eq!(rec.pairs, 64 * 63 / 2);
        assert!(rec.total_edges <= rec.road_edges + rec.highway_edges + rec.representative_edges);
        assert!(rec.total_edges >= rec.road_edges);
    }

    #[test]
    fn grid_of_runs_uses_distinct_streams() {
        let r = run_experiment(&tiny(vec![32, 48, 64], vec![1, 2, 3, 4, 5])).unwrap();
        assert_eq!(r.records.len(), 15);
        let mut seeds: Vec<[u64; 3]> = [32, 48, 64]
            .iter()
            .flat_map(|&n| (1..=5).map(move |s| run_seeds(s, n)))
            .collect();
        let all: std::collections::HashSet<u64> = seeds.iter().flatten().copied().collect();
        assert_eq!(all.len(), 45);
        seeds.dedup();
        assert_eq!(seeds.len(), 15);
        let again = run_experiment(&tiny(vec![32, 48, 64], vec![1, 2, 3, 4, 5])).unwrap();
        let untimed = |r: &ExperimentResult| -> Vec<RunRecord> {
            r.records
                .iter()
                .map(|x| RunRecord { build_seconds: 0.0, eval_seconds: 0.0, ..x.clone() })
                .collect()
        };
        assert_eq!(untimed(&again), untimed(&r));
    }

    #[test]
    fn large_runs_are_sampled() {
        let mut spec = tiny(vec![300], vec![7]);
        spec.exact_limit = 100;
        spec.sample_factor = 10;
        let rec = &run_experiment(&spec).unwrap().records[0];
        assert!(!rec.exact);
        assert_eq!(rec.pairs, 3000);
        assert!(rec.strf.is_none() && rec.stderr > 0.0);
    }

    #[test]
    fn failures_do_not_stop_the_run() {
        let mut spec = ExperimentSpec::new(Kind::TwoColumns, vec![2, 7, 16], Variant::Sampled, vec![1]);
        spec.rule = RepresentativeRule::Omit;
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.failures.len(), 2);
        assert_eq!(r.records[0].representative_edges, 0);
        assert!(r.failures.iter().any(|f| f.n == 7 && f.message.contains("even")));
    }

    #[test]
    fn spec_parsing() {
        let spec = ExperimentSpec::from_toml(
            r#"
            generator = "exp-grids"
            grid_k = 16
            sizes = [4, 6]
            variant = "exhaustive"
            rule = "densest"
            seeds = [3]
            [outputs]
            report = "out/report.txt"
            "#,
        )
        .unwrap();
        assert_eq!(spec.generator, Kind::ExpGrids);
        assert_eq!(spec.variant, Variant::Exhaustive);
        assert_eq!(spec.rule, RepresentativeRule::Densest);
        assert_eq!(spec.exact_limit, DEFAULT_EXACT_LIMIT);
        assert_eq!(spec.outputs.report, Some(PathBuf::from("out/report.txt")));
        assert_eq!(spec.outputs.csv, None);

        for bad in [
            "generator = \"uniform\"\nsizes = [8, 4]\nseeds = [1]",
            "generator = \"uniform\"\nsizes = [8]\nseeds = []",
            "generator = \"uniform\"\nsizes = [8]\nseeds = [1]\nvariant = \"slow\"",
            "generator = \"exp-grids\"\nsizes = [8]\nseeds = [1]",
            "generator = \"blobs\"\nsizes = [8]\nseeds = [1]",
            "generator = \"uniform\"\nsizes = [8]\nseeds = [1]\nextra = 1",
        ] {
            assert!(ExperimentSpec::from_toml(bad).is_err(), "{bad}");
        }
    }
}
