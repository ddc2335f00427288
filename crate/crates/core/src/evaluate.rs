//! Average and worst-case stretch factors.
//!
//! The stretch of a pair `{u, w}` is the shortest-path length between them
//! divided by their Euclidean distance. Exact evaluation runs one Dijkstra
//! per source; sampled evaluation draws distinct unordered pairs uniformly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dist, PointSet};
use crate::graph::Graph;
use crate::kdtree::KdTree;

/// Above this many vertices exact evaluation must be requested explicitly.
pub const EXACT_VERTEX_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Sampled { pairs: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StretchReport {
    /// Average stretch factor (exact or estimated).
    pub asf: f64,
    /// Standard error of the estimate; zero for exact evaluation.
    pub stderr: Option<f64>,
    /// Worst-case stretch factor when every pair was examined.
    pub strf: Option<f64>,
    pub pair_count: u64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub buckets: Vec<Bucket>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// `bucket_lo,bucket_hi,count` lines.
    pub fn to_csv(&self) -> String {
        self.buckets
            .iter()
            .map(|b| format!("{},{},{}\n", b.lo, b.hi, b.count))
            .collect()
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Adjacency relabelled for locality, with split neighbour and weight arrays.
struct SearchGraph {
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    len: Vec<f64>,
    /// Search label of each original vertex.
    label: Vec<u32>,
}

impl SearchGraph {
    fn new(graph: &Graph, points: Option<&PointSet>) -> Self {
        let n = graph.vertex_count();
        let order: Vec<u32> = match points {
            Some(p) if p.len() == n => {
                KdTree::new(p.dim(), p.coords(), &vec![0; n]).spatial_order().to_vec()
            }
            _ => (0..n as u32).collect(),
        };
        let mut label = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            label[old as usize] = new as u32;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbr = Vec::with_capacity(2 * graph.edge_count());
        let mut len = Vec::with_capacity(2 * graph.edge_count());
        offsets.push(0);
        for &old in &order {
            for &(w, l) in graph.neighbors(old as usize) {
                nbr.push(label[w as usize]);
                len.push(l);
            }
            offsets.push(nbr.len());
        }
        Self { offsets, nbr, len, label }
    }

    fn vertex_count(&self) -> usize {
        self.label.len()
    }
}

/// Reusable Dijkstra state over search labels.
struct Dijkstra {
    dist: Vec<f64>,
    touched: Vec<u32>,
    wanted: Vec<bool>,
    // non-negative floats order like their bit patterns
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl Dijkstra {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            touched: Vec::new(),
            wanted: vec![false; n],
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v as usize] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Distance to the vertex with search label `v` after the last run.
    #[inline]
    fn dist_to(&self, v: u32) -> f64 {
        self.dist[v as usize]
    }

    /// Runs from `source`; stops early once every vertex in `targets` is
    /// settled (all vertices when `targets` is `None`). Vertices are search labels.
    fn run(&mut self, graph: &SearchGraph, source: u32, targets: Option<&[u32]>) {
        self.reset();
        let mut remaining = usize::MAX;
        if let Some(ts) = targets {
            remaining = 0;
            for &t in ts {
                if !self.wanted[t as usize] {
                    self.wanted[t as usize] = true;
                    remaining += 1;
                }
            }
        }
        self.dist[source as usize] = 0.0;
        self.touched.push(source);
        self.heap.push(Reverse((0, source)));
        while let Some(Reverse((bits, v))) = self.heap.pop() {
            let d = f64::from_bits(bits);
            let v = v as usize;
            if d > self.dist[v] {
                continue;
            }
            if self.wanted[v] {
                self.wanted[v] = false;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            let range = graph.offsets[v]..graph.offsets[v + 1];
            for (&w, &l) in graph.nbr[range.clone()].iter().zip(&graph.len[range]) {
                let nd = d + l;
                let slot = &mut self.dist[w as usize];
                if nd < *slot {
                    if slot.is_infinite() {
                        self.touched.push(w);
                    }
                    *slot = nd;
                    self.heap.push(Reverse((nd.to_bits(), w)));
                }
            }
        }
        if let Some(ts) = targets {
            for &t in ts {
                self.wanted[t as usize] = false;
            }
        }
    }
}

/// Shortest-path distances from `source`; unreachable vertices are infinite.
pub fn shortest_paths_from(graph: &Graph, source: usize) -> Vec<f64> {
    let sg = SearchGraph::new(graph, None);
    let mut dj = Dijkstra::new(sg.vertex_count());
    dj.run(&sg, source as u32, None);
    dj.dist
}

fn check_inputs(graph: &Graph, points: &PointSet) -> Result<()> {
    if graph.vertex_count() != points.len() {
        return Err(Error::InvalidInput(format!(
            "graph has {} vertices but there are {} points",
            graph.vertex_count(),
            points.len()
        )));
    }
    if points.len() < 2 {
        return Err(Error::InvalidInput("stretch needs at least two points".into()));
    }
    Ok(())
}

#[inline]
fn pair_ratio(points: &PointSet, graph_dist: f64, u: usize, w: usize) -> Result<f64> {
    if graph_dist.is_infinite() {
        return Err(Error::Disconnected { from: u, to: w });
    }
    let euclid = dist(points.point(u), points.point(w));
    if euclid == 0.0 {
        return Err(Error::DuplicatePoint {
            first: u.min(w),
            second: u.max(w),
        });
    }
    Ok(graph_dist / euclid)
}

/// Runs `per_pair` on every unordered pair `(u, w)`, `u < w`, grouped by
/// source `u`, in parallel over sources. Returns per-source results in order.
fn for_all_pairs<T: Send>(
    graph: &Graph,
    points: &PointSet,
    init: impl Fn() -> T + Sync,
    per_pair: impl Fn(&mut T, f64) + Sync,
) -> Result<Vec<T>> {
    let n = points.len();
    let sg = SearchGraph::new(graph, Some(points));
    (0..n - 1)
        .into_par_iter()
        .map_init(
            || Dijkstra::new(n),
            |dj, u| {
                dj.run(&sg, sg.label[u], None);
                let mut acc = init();
                for w in u + 1..n {
                    per_pair(&mut acc, pair_ratio(points, dj.dist_to(sg.label[w]), u, w)?);
                }
                Ok(acc)
            },
        )
        .collect()
}

/// Exact average stretch over all `n(n-1)/2` pairs, plus the worst case.
pub fn average_stretch_exact(graph: &Graph, points: &PointSet) -> Result<StretchReport> {
    if points.len() > EXACT_VERTEX_LIMIT {
        return Err(Error::InvalidInput(format!(
            "exact evaluation of {} vertices exceeds the limit of {EXACT_VERTEX_LIMIT}; \
             sample pairs or request an unbounded run",
            points.len()
        )));
    }
    average_stretch_exact_unbounded(graph, points)
}

/// [`average_stretch_exact`] without the vertex limit.
pub fn average_stretch_exact_unbounded(graph: &Graph, points: &PointSet) -> Result<StretchReport> {
    check_inputs(graph, points)?;
    let per_source = for_all_pairs(
        graph,
        points,
        || (CompensatedSum::default(), 1.0f64),
        |(sum, max), r| {
            sum.add(r);
            *max = max.max(r);
        },
    )?;
    let mut total = CompensatedSum::default();
    let mut strf = f64::NEG_INFINITY;
    for (s, m) in &per_source {
        total.add(s.sum);
        total.add(s.comp);
        strf = strf.max(*m);
    }
    let n = points.len() as u64;
    let pairs = n * (n - 1) / 2;
    Ok(StretchReport {
        asf: total.value() / pairs as f64,
        stderr: Some(0.0),
        strf: Some(strf),
        pair_count: pairs,
        method: Method::Exact,
    })
}

/// Maximum pair stretch.
pub fn worst_stretch(graph: &Graph, points: &PointSet) -> Result<f64> {
    check_inputs(graph, points)?;
    let per_source = for_all_pairs(graph, points, || f64::NEG_INFINITY, |m, r| *m = m.max(r))?;
    Ok(per_source.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Estimates the average stretch from `m` distinct unordered pairs drawn
/// uniformly at random. Falls back to exact evaluation when `m` covers
/// every pair.
pub fn average_stretch_sampled<R: Rng + ?Sized>(
    graph: &Graph,
    points: &PointSet,
    m: u64,
    rng: &mut R,
) -> Result<StretchReport> {
    check_inputs(graph, points)?;
    if m == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let n = points.len();
    let total = (n as u64) * (n as u64 - 1) / 2;
    if m >= total {
        return average_stretch_exact_unbounded(graph, points);
    }
    let mut picks = rand::seq::index::sample(rng, total as usize, m as usize).into_vec();
    picks.sort_unstable();

    // Pair index t enumerates (u, w), u < w, row by row.
    let row_start = |u: usize| -> usize { u * (2 * n - u - 1) / 2 };
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut u = 0usize;
    for t in picks {
        while row_start(u + 1) <= t {
            u += 1;
        }
        let w = u + 1 + (t - row_start(u));
        match groups.last_mut() {
            Some((src, ts)) if *src == u => ts.push(w),
            _ => groups.push((u, vec![w])),
        }
    }

    let sg = SearchGraph::new(graph, Some(points));
    let per_source: Vec<Vec<f64>> = groups
        .par_iter()
        .map_init(
            || (Dijkstra::new(n), Vec::new()),
            |(dj, labels), (src, targets)| {
                labels.clear();
                labels.extend(targets.iter().map(|&w| sg.label[w]));
                dj.run(&sg, sg.label[*src], Some(labels));
                targets
                    .iter()
                    .map(|&w| pair_ratio(points, dj.dist_to(sg.label[w]), *src, w))
                    .collect::<Result<Vec<f64>>>()
            },
        )
        .collect::<Result<_>>()?;

    let mut sum = CompensatedSum::default();
    for r in per_source.iter().flatten() {
        sum.add(*r);
    }
    let mean = sum.value() / m as f64;
    let mut sq = CompensatedSum::default();
    for r in per_source.iter().flatten() {
        sq.add((r - mean) * (r - mean));
    }
    let stderr = if m > 1 {
        (sq.value() / (m - 1) as f64 / m as f64).sqrt()
    } else {
        0.0
    };
    Ok(StretchReport {
        asf: mean,
        stderr: Some(stderr),
        strf: None,
        pair_count: m,
        method: Method::Sampled { pairs: m },
    })
}

/// Counts of pair stretches in `buckets` equal-width buckets over `[1, strf]`.
pub fn stretch_histogram(graph: &Graph, points: &PointSet, buckets: usize) -> Result<Histogram> {
    if buckets == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bucket".into()));
    }
    let max = worst_stretch(graph, points)?.max(1.0);
    let width = (max - 1.0) / buckets as f64;
    let per_source = for_all_pairs(
        graph,
        points,
        || vec![0u64; buckets],
        |counts, r| {
            let b = if width > 0.0 {
                (((r - 1.0) / width).floor().max(0.0) as usize).min(buckets - 1)
            } else {
                0
            };
            counts[b] += 1;
        },
    )?;
    let mut counts = vec![0u64; buckets];
    for c in per_source {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
    }
    Ok(Histogram {
        buckets: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| Bucket {
                lo: 1.0 + width * i as f64,
                hi: 1.0 + width * (i + 1) as f64,
                count,
            })
            .collect(),
    })
}
