//! Assembly of the low average stretch graph: roads over all points,
//! highways over cluster hubs, and representative edges that wire each
//! cluster to a dense nearby cover region.

use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fairsplit::{k_partition, KPartition};
use crate::geometry::{AABox, Ball, PointSet};
use crate::graph::Graph;
use crate::kdtree::KdTree;
use crate::rangetree::{BoxOrder, CountMinTree, DualBoxTree};
use crate::spanners::{build_spanner, hub_gamma};

/// Key for points outside every qualifying cover region.
const UNCOVERED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Ball regions, every point tried as a cover centre.
    Exhaustive,
    /// Box regions found by random sampling against a counting tree.
    Sampled,
    /// Sampled, with densities estimated on a Bernoulli subsample and
    /// representatives drawn from a second subsample.
    Fast,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Exhaustive => "exhaustive",
            Variant::Sampled => "sampled",
            Variant::Fast => "fast",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Variant::Exhaustive),
            "sampled" => Ok(Variant::Sampled),
            "fast" => Ok(Variant::Fast),
            _ => Err(Error::InvalidInput(format!("unknown variant {s:?}"))),
        }
    }
}

/// How the representative of each cover region is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RepresentativeRule {
    /// Point of the region lying in the earliest dense region.
    #[default]
    EarliestDense,
    /// Centre point of the densest candidate region, ignoring other regions.
    Densest,
    /// No representative edges at all.
    Omit,
}

impl RepresentativeRule {
    pub fn name(self) -> &'static str {
        match self {
            RepresentativeRule::EarliestDense => "earliest-dense",
            RepresentativeRule::Densest => "densest",
            RepresentativeRule::Omit => "omit",
        }
    }
}

impl std::str::FromStr for RepresentativeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earliest-dense" => Ok(RepresentativeRule::EarliestDense),
            "densest" => Ok(RepresentativeRule::Densest),
            "omit" => Ok(RepresentativeRule::Omit),
            _ => Err(Error::InvalidInput(format!("unknown representative rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Cluster capacity.
    pub k: usize,
    /// Scale between a cluster ball and its search and cover regions.
    pub c: f64,
    /// Fraction of `n` a cover region must hold to count as dense.
    pub epsilon: f64,
    /// Highway slack: hubs are joined by a `(1 + gamma)`-spanner.
    pub gamma: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Multiplier on the number of random samples.
    pub alpha_samples: f64,
    pub rule: RepresentativeRule,
}

pub const DEFAULT_ALPHA_SAMPLES: f64 = 3.0;

/// Default density exponent: `epsilon = ln^kappa n / k`.
pub fn default_kappa(variant: Variant, d: usize) -> u32 {
    match variant {
        Variant::Fast => d.saturating_sub(1) as u32,
        _ => 0,
    }
}

impl Params {
    /// Asymptotically tuned parameters for `n` points in `d` dimensions.
    pub fn select(n: usize, d: usize, variant: Variant) -> Result<Self> {
        Self::select_with_kappa(n, d, variant, default_kappa(variant, d))
    }

    /// As [`Params::select`], with `epsilon = ln^kappa n / k` for the
    /// sampled and fast variants.
    pub fn select_with_kappa(n: usize, d: usize, variant: Variant, kappa: u32) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidInput(format!("parameter selection needs n >= 4, got {n}")));
        }
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let nf = n as f64;
        let ln = nf.ln();
        let df = d as f64;
        let (k_raw, c_raw) = match variant {
            Variant::Exhaustive => {
                let base = nf / ln;
                (base.powf((df - 1.0) / (2.0 * df + 1.0)), base.powf(1.0 / (2.0 * df + 1.0)))
            }
            Variant::Sampled | Variant::Fast if d <= 2 => {
                let v = (nf / ln).powf(0.2);
                (v, v)
            }
            Variant::Sampled | Variant::Fast => (nf.powf(0.25), (ln / nf.powf(0.75)).powf(-1.0 / (df + 2.0))),
        };
        let k = (k_raw.round() as usize).max(2);
        let c = c_raw.round().max(3.0);
        let epsilon = match variant {
            Variant::Exhaustive => (k as f64 / nf).powf(1.0 / 3.0),
            _ => ln.powi(kappa as i32) / k as f64,
        };
        let gamma = hub_gamma(k, d, n, variant == Variant::Fast)?;
        Ok(Params {
            k,
            c,
            epsilon: epsilon.clamp(f64::MIN_POSITIVE, 1.0),
            gamma,
            variant,
            seed: 0,
            alpha_samples: DEFAULT_ALPHA_SAMPLES,
            rule: RepresentativeRule::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.k < 2 {
            return bad(format!("k = {} must be at least 2", self.k));
        }
        if !(self.c > 2.0) || !self.c.is_finite() {
            return bad(format!("c = {} must exceed 2", self.c));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1]", self.epsilon));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma = {} must be positive", self.gamma));
        }
        if !(self.alpha_samples > 0.0) || !self.alpha_samples.is_finite() {
            return bad(format!("alpha_samples = {} must be positive", self.alpha_samples));
        }
        Ok(())
    }

    /// Points a cover region must hold to be dense: `max(1, ceil(epsilon n))`.
    pub fn threshold(&self, n: usize) -> usize {
        ((self.epsilon * n as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Ball(Ball),
    Box(AABox),
}

impl Region {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Ball(b) => b.contains_unchecked(p),
            Region::Box(b) => b.contains_unchecked(p),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Ball(b) => b.center.clone(),
            Region::Box(b) => b.center(),
        }
    }
}

/// Search and cover regions attached to one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverRegion {
    /// Cluster region scaled up by `c`.
    pub scaled: Region,
    /// Dense region of size `1/c` of the cluster that the cluster is wired to.
    pub cover: Region,
    /// Input point the cover is centred on, if any.
    pub anchor: Option<usize>,
    /// Points in `cover` (an estimate for the fast variant).
    pub density: f64,
    pub representative: Option<usize>,
    /// Zero-size cluster: no cover search and no representative.
    pub degenerate: bool,
}

impl CoverRegion {
    fn degenerate(center: &[f64], boxes: bool) -> Self {
        let region = if boxes {
            Region::Box(AABox::square(center, 0.0))
        } else {
            Region::Ball(Ball { center: center.to_vec(), radius: 0.0 })
        };
        CoverRegion {
            scaled: region.clone(),
            cover: region,
            anchor: None,
            density: 0.0,
            representative: None,
            degenerate: true,
        }
    }
}

/// One hub per cluster: its lowest point index.
pub fn choose_hubs(partition: &KPartition) -> Vec<usize> {
    partition
        .members
        .iter()
        .map(|m| *m.iter().min().expect("clusters of a k-partition are nonempty"))
        .collect()
}

fn index_tree(points: &PointSet) -> KdTree {
    let keys: Vec<u64> = (0..points.len() as u64).collect();
    KdTree::new(points.dim(), points.coords(), &keys)
}

fn exhaustive_cover(i: usize, partition: &KPartition, points: &PointSet, kd: &KdTree, c: f64) -> CoverRegion {
    let ball = &partition.balls[i];
    let r = ball.radius;
    if !(r > 0.0) {
        return CoverRegion::degenerate(&ball.center, false);
    }
    let small = r / c;
    let mut candidates = Vec::new();
    kd.for_each_in_ball(&ball.center, c * r + small, |w| candidates.push(w));
    candidates.sort_unstable();
    let mut best: Option<(usize, usize)> = None;
    for &w in &candidates {
        let count = kd.count_ball(points.point(w), small);
        if best.map_or(true, |(_, b)| count > b) {
            best = Some((w, count));
        }
    }
    let (center, anchor, density) = match best {
        Some((w, count)) => (points.point(w).to_vec(), Some(w), count),
        None => (ball.center.clone(), None, kd.count_ball(&ball.center, small)),
    };
    CoverRegion {
        scaled: Region::Ball(Ball { center: ball.center.clone(), radius: c * r }),
        cover: Region::Ball(Ball { center, radius: small }),
        anchor,
        density: density as f64,
        representative: None,
        degenerate: false,
    }
}

/// Ball cover regions for every cluster: among balls of radius `r/c`
/// centred at input points near the cluster, the one holding most points.
pub fn find_covers_exhaustive(partition: &KPartition, points: &PointSet, c: f64) -> Vec<CoverRegion> {
    let kd = index_tree(points);
    (0..partition.len())
        .into_par_iter()
        .map(|i| exhaustive_cover(i, partition, points, &kd, c))
        .collect()
}

/// Number of random samples per cluster in the sampled search.
pub fn sample_count(n: usize, params: &Params) -> usize {
    (params.alpha_samples * (n.max(2) as f64).ln() / params.epsilon).ceil() as usize
}

/// Box cover region for cluster `i` by random sampling. `counter` counts
/// points of `V` (or of a subsample, with `scale` the inverse sampling rate).
pub fn find_cover_sampled<R: Rng + ?Sized>(
    i: usize,
    partition: &KPartition,
    points: &PointSet,
    counter: &CountMinTree,
    scale: f64,
    params: &Params,
    rng: &mut R,
) -> Result<CoverRegion> {
    let bbox = &partition.boxes[i];
    let center = bbox.center();
    let (_, side) = bbox.longest_side();
    if !(side > 0.0) {
        return Ok(CoverRegion::degenerate(&center, true));
    }
    let c = params.c;
    let small = side / c;
    let search = AABox::square(&center, (c + 1.0 / (2.0 * c)) * side);
    let n = points.len();
    let mut best: Option<(usize, usize)> = None;
    for _ in 0..sample_count(n, params) {
        let u = rng.gen_range(0..n);
        let p = points.point(u);
        if !search.contains_unchecked(p) {
            continue;
        }
        let count = counter.count(&AABox::square(p, small))?;
        let better = match best {
            None => true,
            Some((w, b)) => count > b || (count == b && u < w),
        };
        if better {
            best = Some((u, count));
        }
    }
    let (cover, anchor, count) = match best {
        Some((u, count)) => (AABox::square(points.point(u), small), Some(u), count),
        None => {
            let b = AABox::square(&center, small);
            let count = counter.count(&b)?;
            (b, None, count)
        }
    };
    Ok(CoverRegion {
        scaled: Region::Box(AABox::square(&center, c * side)),
        cover: Region::Box(cover),
        anchor,
        density: count as f64 * scale,
        representative: None,
        degenerate: false,
    })
}

fn ball_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 + i as u64);
    rng
}

/// Sampled cover regions for every cluster, each with its own RNG stream.
pub fn find_covers_sampled(
    partition: &KPartition,
    points: &PointSet,
    counter: &CountMinTree,
    scale: f64,
    params: &Params,
) -> Result<Vec<CoverRegion>> {
    (0..partition.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = ball_rng(params.seed, i);
            find_cover_sampled(i, partition, points, counter, scale, params, &mut rng)
        })
        .collect()
}

fn pack(level: u32, w: usize) -> u64 {
    (u64::from(level) << 32) | w as u64
}

fn unpack(key: u64) -> usize {
    (key & 0xffff_ffff) as usize
}

/// Lowest-index point in a cover region.
fn lowest_in(region: &Region, kd: &KdTree) -> Option<usize> {
    match region {
        Region::Box(b) => kd.min_key_in_box(b.lo(), b.hi()).map(|(_, w)| w),
        Region::Ball(b) => {
            let mut best = None::<usize>;
            kd.for_each_in_ball(&b.center, b.radius, |w| best = Some(best.map_or(w, |x| x.min(w))));
            best
        }
    }
}

/// Picks the representative of every cover region and returns how many
/// regions were dense.
///
/// A point's level is the smallest index of a dense region containing it.
/// Under [`RepresentativeRule::EarliestDense`] each region takes its point
/// of lowest level, ties and all-uncovered regions by lowest index.
pub fn assign_representatives(covers: &mut [CoverRegion], points: &PointSet, params: &Params) -> Result<usize> {
    let n = points.len();
    let threshold = params.threshold(n) as f64;
    let dense: Vec<usize> = (0..covers.len())
        .filter(|&i| !covers[i].degenerate && covers[i].density >= threshold)
        .collect();
    let kd = index_tree(points);

    match params.rule {
        RepresentativeRule::Omit => {
            covers.iter_mut().for_each(|c| c.representative = None);
            return Ok(dense.len());
        }
        RepresentativeRule::Densest => {
            for cover in covers.iter_mut().filter(|c| !c.degenerate) {
                cover.representative = cover.anchor.or_else(|| lowest_in(&cover.cover, &kd));
            }
            return Ok(dense.len());
        }
        RepresentativeRule::EarliestDense => {}
    }

    match params.variant {
        Variant::Exhaustive => {
            let mut level = vec![UNCOVERED; n];
            for &i in &dense {
                if let Region::Ball(b) = &covers[i].cover {
                    kd.for_each_in_ball(&b.center, b.radius, |w| {
                        if level[w] == UNCOVERED {
                            level[w] = i as u32;
                        }
                    });
                }
            }
            covers.par_iter_mut().filter(|c| !c.degenerate).for_each(|cover| {
                let mut best = None::<u64>;
                if let Region::Ball(b) = &cover.cover {
                    kd.for_each_in_ball(&b.center, b.radius, |w| {
                        let key = pack(level[w], w);
                        best = Some(best.map_or(key, |x| x.min(key)));
                    });
                }
                cover.representative = best.map(unpack);
            });
        }
        Variant::Sampled | Variant::Fast => {
            let dual_boxes: Vec<(AABox, usize)> = dense
                .iter()
                .filter_map(|&i| match &covers[i].cover {
                    Region::Box(b) => Some((b.clone(), i)),
                    Region::Ball(_) => None,
                })
                .collect();
            let dual = DualBoxTree::build(&dual_boxes, BoxOrder::ByIndex)?;
            let candidates: Vec<usize> = if params.variant == Variant::Fast {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(1);
                let size = representative_sample_size(n, points.dim());
                let mut chosen = index::sample(&mut rng, n, size).into_vec();
                chosen.sort_unstable();
                chosen
            } else {
                (0..n).collect()
            };
            let keys = candidates
                .par_iter()
                .map(|&w| {
                    let level = dual.smallest_containing_box(points.point(w))?;
                    Ok(pack(level.map_or(UNCOVERED, |i| i as u32), w))
                })
                .collect::<Result<Vec<u64>>>()?;
            let keyed = CountMinTree::build_keyed(&points.subset(&candidates), keys);
            let reps = covers
                .par_iter()
                .map(|cover| {
                    if cover.degenerate {
                        return Ok(None);
                    }
                    let Region::Box(b) = &cover.cover else { return Ok(None) };
                    Ok(match keyed.min_key(b)? {
                        Some(key) => Some(unpack(key)),
                        None => lowest_in(&cover.cover, &kd),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for (cover, rep) in covers.iter_mut().zip(reps) {
                cover.representative = rep;
            }
        }
    }
    Ok(dense.len())
}

/// Size of the representative subsample of the fast variant:
/// `ceil(n / ln^(d-1) n)`, capped at `n`.
pub fn representative_sample_size(n: usize, d: usize) -> usize {
    let ln = (n.max(2) as f64).ln().max(1.0);
    ((n as f64 / ln.powi(d as i32 - 1)).ceil() as usize).clamp(n.min(1), n)
}

/// Inclusion probability of the density subsample of the fast variant.
pub fn density_sample_rate(n: usize, d: usize, alpha: f64) -> f64 {
    let ln = (n.max(2) as f64).ln();
    (alpha / ln.powi(d as i32 - 2)).min(1.0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub partition: f64,
    pub roads: f64,
    pub highways: f64,
    pub covers: f64,
    pub representatives: f64,
    pub assemble: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.partition + self.roads + self.highways + self.covers + self.representatives + self.assemble
    }
}

/// Summary of one construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub n: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Minimum points of a dense cover region.
    pub threshold: usize,
    pub dense_regions: usize,
    pub road_edges: usize,
    pub highway_edges: usize,
    pub representative_edges: usize,
    pub total_edges: usize,
    /// Density of each cover region, by cluster.
    pub densities: Vec<f64>,
    /// Wall-clock seconds per phase.
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub graph: Graph,
    pub report: BuildReport,
    pub partition: Option<KPartition>,
    pub hubs: Vec<usize>,
    pub covers: Vec<CoverRegion>,
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Builds the graph on `points` with the given parameters.
pub fn build(points: &PointSet, params: &Params) -> Result<Construction> {
    params.validate()?;
    let n = points.len();
    let d = points.dim();
    if n < 2 {
        log::warn!("{n} point(s): returning the trivial graph");
        return Ok(Construction {
            graph: Graph::from_edges(points, []),
            report: BuildReport { n, dim: d, clusters: n, ..Default::default() },
            partition: None,
            hubs: (0..n).collect(),
            covers: Vec::new(),
        });
    }
    points.check_distinct()?;
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let partition = k_partition(points, params.k)?;
    let hubs = choose_hubs(&partition);
    timings.partition = seconds(t);

    let t = Instant::now();
    let roads = build_spanner(points, 2.0)?;
    timings.roads = seconds(t);

    let t = Instant::now();
    let highways = build_spanner(&points.subset(&hubs), 1.0 + params.gamma)?;
    timings.highways = seconds(t);

    let t = Instant::now();
    let mut covers = match params.variant {
        Variant::Exhaustive => find_covers_exhaustive(&partition, points, params.c),
        Variant::Sampled => find_covers_sampled(&partition, points, &CountMinTree::build(points), 1.0, params)?,
        Variant::Fast => {
            let p = density_sample_rate(n, d, params.alpha_samples);
            let counter = if p >= 1.0 {
                CountMinTree::build(points)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(0);
                let kept: Vec<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
                CountMinTree::build(&points.subset(&kept))
            };
            find_covers_sampled(&partition, points, &counter, 1.0 / p, params)?
        }
    };
    timings.covers = seconds(t);

    let t = Instant::now();
    let dense_regions = assign_representatives(&mut covers, points, params)?;
    timings.representatives = seconds(t);

    let t = Instant::now();
    let mut representative = Vec::new();
    for (cover, members) in covers.iter().zip(&partition.members) {
        if let Some(w) = cover.representative {
            representative.extend(members.iter().filter(|&&v| v != w).map(|&v| (v.min(w), v.max(w))));
        }
    }
    representative.sort_unstable();
    representative.dedup();
    let edges = roads
        .edges()
        .map(|(u, w, _)| (u, w))
        .chain(highways.edges().map(|(a, b, _)| (hubs[a], hubs[b])))
        .chain(representative.iter().copied());
    let graph = Graph::from_edges(points, edges);
    timings.assemble = seconds(t);

    let report = BuildReport {
        n,
        dim: d,
        clusters: partition.len(),
        threshold: params.threshold(n),
        dense_regions,
        road_edges: roads.edge_count(),
        highway_edges: highways.edge_count(),
        representative_edges: representative.len(),
        total_edges: graph.edge_count(),
        densities: covers.iter().map(|c| c.density).collect(),
        timings,
    };
    Ok(Construction { graph, report, partition: Some(partition), hubs, covers })
}
