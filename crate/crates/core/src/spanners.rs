//! Worst-case t-spanners: a Yao graph thinned by a greedy pass.
//!
//! Directions are partitioned into cones by projecting onto the faces of
//! the cube `[-1, 1]^d` and cutting each face into an `m^(d-1)` grid. Every
//! point is joined to its nearest neighbour in each cone. When any two
//! directions in a cone are at most `theta < pi/3` apart, the result is a
//! `1 / (1 - 2 sin(theta/2))`-spanner.
//!
//! A `t`-spanner is a Yao graph with stretch `t1` whose edges are then
//! scanned shortest first, keeping an edge only when the kept graph has no
//! path within `t / t1` of its length. Every Yao edge is then stretched at
//! most `t / t1`, so every pair at most `t`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::evaluate;
use crate::geometry::{dist as dist_to, PointSet};
use crate::graph::Graph;
use crate::kdtree::KdTree;

/// Cone partition of the directions in R^d.
#[derive(Debug, Clone)]
pub struct Cones {
    dim: usize,
    /// Grid cells per face axis.
    m: usize,
}

impl Cones {
    /// Finest partition needed for a `t`-spanner.
    pub fn for_stretch(dim: usize, t: f64) -> Result<Self> {
        if !(t > 1.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("stretch bound t = {t} must exceed 1")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if dim == 1 {
            return Ok(Self { dim, m: 1 });
        }
        let mut m = 1;
        while !(Self { dim, m }).guarantees(t) {
            m += 1;
        }
        Ok(Self { dim, m })
    }

    pub fn count(&self) -> usize {
        2 * self.dim * self.m.pow(self.dim as u32 - 1)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    /// Upper bound on the angle between two directions of the same cone.
    pub fn angular_diameter(&self) -> f64 {
        if self.dim == 1 {
            return 0.0;
        }
        // a face cell has diameter 2 sqrt(d-1) / m at distance >= 1 from the origin
        2.0 * ((self.dim as f64 - 1.0).sqrt() / self.m as f64).atan()
    }

    /// Proven worst-case stretch of the Yao graph on these cones.
    pub fn stretch_bound(&self) -> f64 {
        let theta = self.angular_diameter();
        if theta >= std::f64::consts::FRAC_PI_3 {
            return f64::INFINITY;
        }
        1.0 / (1.0 - 2.0 * (theta / 2.0).sin())
    }

    fn guarantees(&self, t: f64) -> bool {
        self.stretch_bound() <= t
    }

    /// Cone containing direction `v != 0`.
    pub fn cone_of(&self, v: &[f64]) -> usize {
        let d = self.dim;
        let mut j = 0;
        for a in 1..d {
            if v[a].abs() > v[j].abs() {
                j = a;
            }
        }
        let s = usize::from(v[j] < 0.0);
        let scale = v[j].abs();
        let mut cell = 0;
        for a in 0..d {
            if a == j {
                continue;
            }
            let u = v[a] / scale;
            let c = (((u + 1.0) * 0.5 * self.m as f64).floor().max(0.0) as usize).min(self.m - 1);
            cell = cell * self.m + c;
        }
        (j * 2 + s) * self.m.pow(d as u32 - 1) + cell
    }

    /// Linear constraints `a . v >= 0` describing the closed cone.
    fn facets(&self, cone: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        let per_face = self.m.pow(d as u32 - 1);
        let face = cone / per_face;
        let mut cell = cone % per_face;
        let (j, sign) = (face / 2, if face % 2 == 0 { 1.0 } else { -1.0 });
        let mut cells = vec![0usize; d];
        for a in (0..d).rev() {
            if a == j {
                continue;
            }
            cells[a] = cell % self.m;
            cell /= self.m;
        }
        let mut out = Vec::with_capacity(2 * d - 1);
        let mut axis = vec![0.0; d];
        axis[j] = sign;
        out.push(axis);
        for a in 0..d {
            if a == j {
                continue;
            }
            let lo = -1.0 + 2.0 * cells[a] as f64 / self.m as f64;
            let hi = -1.0 + 2.0 * (cells[a] + 1) as f64 / self.m as f64;
            // v_a - lo * sign * v_j >= 0
            let mut f = vec![0.0; d];
            f[a] = 1.0;
            f[j] = -lo * sign;
            out.push(f);
            // hi * sign * v_j - v_a >= 0
            let mut g = vec![0.0; d];
            g[a] = -1.0;
            g[j] = hi * sign;
            out.push(g);
        }
        out
    }
}

/// Whether some point of the box `[lo, hi]` might lie in the cone at `apex`.
fn box_may_meet_cone(facets: &[Vec<f64>], apex: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    facets.iter().all(|f| {
        let mut best = 0.0;
        for a in 0..apex.len() {
            let x = if f[a] > 0.0 { hi[a] } else { lo[a] };
            best += f[a] * (x - apex[a]);
        }
        best >= 0.0
    })
}

/// Sparse spanner of `points` with stretch at most `t`.
pub fn build_spanner(points: &PointSet, t: f64) -> Result<Graph> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("stretch bound t = {t} must exceed 1")));
    }
    let yao_stretch = 1.0 + 0.5 * (t - 1.0);
    let yao = build_yao(points, yao_stretch)?;
    Ok(greedy_filter(points, &yao, t / yao_stretch))
}

/// Yao graph of `points` with stretch at most `t`.
pub fn build_yao(points: &PointSet, t: f64) -> Result<Graph> {
    let cones = Cones::for_stretch(points.dim(), t)?;
    let n = points.len();
    if n < 2 {
        return Ok(Graph::from_edges(points, []));
    }
    let dim = points.dim();
    let keys: Vec<u64> = (0..n as u64).collect();
    let kd = KdTree::new(dim, points.coords(), &keys);
    let facets: Vec<Vec<Vec<f64>>> = (0..cones.count()).map(|c| cones.facets(c)).collect();

    let mut edges = Vec::with_capacity(n * cones.count().min(n));
    for u in 0..n {
        let q = points.point(u);
        for (c, fc) in facets.iter().enumerate() {
            let found = kd.nearest_where(
                q,
                |lo, hi| box_may_meet_cone(fc, q, lo, hi),
                |w, p| {
                    if w == u {
                        return false;
                    }
                    let mut buf = [0.0f64; 8];
                    if dim <= buf.len() {
                        for a in 0..dim {
                            buf[a] = p[a] - q[a];
                        }
                        cones.cone_of(&buf[..dim]) == c
                    } else {
                        let dir: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
                        cones.cone_of(&dir) == c
                    }
                },
            );
            if let Some((w, _)) = found {
                edges.push((u, w));
            }
        }
    }
    Ok(Graph::from_edges(points, edges))
}

/// Subgraph of `graph` in which every edge of `graph` has stretch at most `t`.
pub fn greedy_filter(points: &PointSet, graph: &Graph, t: f64) -> Graph {
    let n = graph.vertex_count();
    let mut candidates: Vec<(usize, usize, f64)> = graph.edges().collect();
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut dist = vec![f64::INFINITY; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut kept = Vec::new();
    for (u, w, len) in candidates {
        let limit = t * len;
        for &v in &touched {
            dist[v as usize] = f64::INFINITY;
        }
        touched.clear();
        heap.clear();
        dist[u] = 0.0;
        touched.push(u as u32);
        heap.push(Reverse((len.to_bits(), u as u32)));
        // A* towards w; straight-line distance never overestimates
        let target = points.point(w);
        let mut reached = false;
        while let Some(Reverse((bits, v))) = heap.pop() {
            let f = f64::from_bits(bits);
            let v = v as usize;
            if v == w {
                reached = true;
                break;
            }
            if f > dist[v] + dist_to(points.point(v), target) {
                continue;
            }
            let d = dist[v];
            for &(x, l) in &adj[v] {
                let nd = d + l;
                let slot = &mut dist[x as usize];
                if nd < *slot {
                    let fx = nd + dist_to(points.point(x as usize), target);
                    if fx > limit {
                        continue;
                    }
                    if slot.is_infinite() {
                        touched.push(x);
                    }
                    *slot = nd;
                    heap.push(Reverse((fx.to_bits(), x)));
                }
            }
        }
        if !reached {
            adj[u].push((w as u32, len));
            adj[w].push((u as u32, len));
            kept.push((u, w));
        }
    }
    Graph::from_edges(points, kept)
}

/// Highway slack `gamma` for cluster capacity `k` among `n` points:
/// `1 / k^(1/(d-1))`, or `(ln^(d-2) n / k)^(1/(d-1))` for the fast variant.
pub fn hub_gamma(k: usize, d: usize, n: usize, fast: bool) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if d < 2 {
        // cones in one dimension are exact
        return Ok(1.0 / k as f64);
    }
    let exponent = 1.0 / (d as f64 - 1.0);
    let numerator = if fast {
        (n.max(2) as f64).ln().powi(d as i32 - 2)
    } else {
        1.0
    };
    Ok((numerator / k as f64).powf(exponent))
}

/// Spanner of the hubs with stretch `1 + hub_gamma(k, d, n, fast)`.
pub fn build_hub_spanner(hubs: &PointSet, k: usize, d: usize, n: usize, fast: bool) -> Result<Graph> {
    crate::error::check_dim(d, hubs.dim())?;
    build_spanner(hubs, 1.0 + hub_gamma(k, d, n, fast)?)
}

/// Worst pair stretch of `graph`; infinite when it is disconnected.
pub fn verify_stretch(graph: &Graph, points: &PointSet) -> Result<f64> {
    match evaluate::worst_stretch(graph, points) {
        Err(Error::Disconnected { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSet::new(d, (0..n * d).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn cone_partition_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=4 {
            for m in 1..=5 {
                let cones = Cones { dim: d, m };
                let facets: Vec<_> = (0..cones.count()).map(|c| cones.facets(c)).collect();
                for _ in 0..2000 {
                    let v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                    let c = cones.cone_of(&v);
                    assert!(c < cones.count());
                    // the closed cone contains its own directions
                    for f in &facets[c] {
                        let dot: f64 = f.iter().zip(&v).map(|(a, b)| a * b).sum();
                        assert!(dot >= -1e-12, "d={d} m={m} v={v:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn angular_diameter_bounds_sampled_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 2..=3 {
            let cones = Cones { dim: d, m: 4 };
            let theta = cones.angular_diameter();
            let mut by_cone: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cones.count()];
            for _ in 0..20000 {
                let v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
                by_cone[cones.cone_of(&v)].push(v);
            }
            for dirs in &by_cone {
                for a in dirs.iter().take(40) {
                    for b in dirs.iter().take(40) {
                        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                        assert!(dot.clamp(-1.0, 1.0).acos() <= theta + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_inputs() {
        let one = PointSet::from_points(2, &[[0.5, 0.5]]).unwrap();
        assert_eq!(build_spanner(&one, 2.0).unwrap().edge_count(), 0);
        let two = PointSet::from_points(2, &[[0.0, 0.0], [1.0, 2.0]]).unwrap();
        let g = build_spanner(&two, 2.0).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(verify_stretch(&g, &two).unwrap(), 1.0);
        assert!(build_spanner(&two, 1.0).is_err());
        assert!(build_spanner(&two, f64::NAN).is_err());
    }

    #[test]
    fn verify_stretch_examples() {
        let sq = PointSet::from_points(2, &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let cycle = Graph::from_edges(&sq, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((verify_stretch(&cycle, &sq).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(verify_stretch(&Graph::complete(&sq), &sq).unwrap(), 1.0);
        let line = PointSet::from_points(2, &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(verify_stretch(&Graph::from_edges(&line, [(0, 1), (1, 2)]), &line).unwrap(), 1.0);
        let broken = Graph::from_edges(&line, [(0, 1)]);
        assert_eq!(verify_stretch(&broken, &line).unwrap(), f64::INFINITY);
    }

    #[test]
    fn gamma_formulas() {
        assert_eq!(hub_gamma(16, 2, 1000, false).unwrap(), 1.0 / 16.0);
        assert_eq!(hub_gamma(16, 2, 1000, true).unwrap(), 1.0 / 16.0);
        assert_eq!(hub_gamma(16, 3, 1000, false).unwrap(), 0.25);
        // (ln 1024 / 16)^(1/2) = (6.931472 / 16)^(1/2)
        let g = hub_gamma(16, 3, 1024, true).unwrap();
        assert!((g - 0.658_192).abs() < 1e-6, "{g}");
    }

    #[test]
    fn spanners_meet_their_bound() {
        for (d, n, t) in [(2, 300, 2.0), (2, 300, 1.25), (3, 200, 2.0), (1, 50, 1.01)] {
            for seed in 0..3 {
                let p = uniform(n, d, seed);
                let g = build_spanner(&p, t).unwrap();
                assert!(g.is_connected());
                let s = verify_stretch(&g, &p).unwrap();
                assert!(s <= t + 1e-9, "d={d} t={t} stretch={s}");
                let yao = build_yao(&p, t).unwrap();
                assert!(verify_stretch(&yao, &p).unwrap() <= t + 1e-9);
                let cones = Cones::for_stretch(d, t).unwrap();
                assert!(yao.edge_count() <= cones.count() * n);
                let candidates = build_yao(&p, 1.0 + 0.5 * (t - 1.0)).unwrap();
                assert!(g.edges().all(|(a, b, _)| candidates.has_edge(a, b)));
            }
        }
    }

    #[test]
    fn greedy_filter_keeps_every_edge_within_bound() {
        let p = uniform(250, 2, 5);
        let full = Graph::complete(&p);
        for t in [1.05, 1.5, 3.0] {
            let g = greedy_filter(&p, &full, t);
            assert!(verify_stretch(&g, &p).unwrap() <= t + 1e-9);
            assert!(g.edge_count() < full.edge_count());
            for (a, b, len) in full.edges() {
                let d = crate::evaluate::shortest_paths_from(&g, a)[b];
                assert!(d <= t * len * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn spanner_size_per_point_is_bounded() {
        // record the per-point edge constant at two sizes
        let small = build_spanner(&uniform(500, 2, 1), 2.0).unwrap().edge_count() as f64 / 500.0;
        let large = build_spanner(&uniform(4000, 2, 1), 2.0).unwrap().edge_count() as f64 / 4000.0;
        assert!(small < 4.0 && large < 4.0, "{small} {large}");
        assert!((large / small - 1.0).abs() < 0.2);
    }

    #[test]
    fn hub_spanner_checks_dimension() {
        let p = uniform(20, 2, 0);
        assert!(build_hub_spanner(&p, 4, 3, 100, false).is_err());
        assert!(build_hub_spanner(&p, 4, 2, 100, false).unwrap().is_connected());
    }
}
