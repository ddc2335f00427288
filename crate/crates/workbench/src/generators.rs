//! Point-set generators: uniform clouds and the structured instances used
//! to probe the construction.

use std::collections::HashSet;
use std::f64::consts::PI;

use avgstretch::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Uniform,
    ExpGrids,
    TwoColumns,
    ClusterTrap,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Uniform => "uniform",
            Kind::ExpGrids => "exp-grids",
            Kind::TwoColumns => "two-columns",
            Kind::ClusterTrap => "cluster-trap",
        }
    }
}

/// Runs generator `kind` at size `n`. For `ExpGrids`, `n` is the number of
/// grids and `grid_k` the points per grid; `d` and `seed` only affect
/// `Uniform`.
pub fn generate(kind: Kind, n: usize, d: usize, seed: u64, grid_k: usize) -> Result<PointSet> {
    match kind {
        Kind::Uniform => gen_uniform(n, d, seed),
        Kind::ExpGrids => gen_exp_grids(grid_k, n),
        Kind::TwoColumns => gen_two_columns(n),
        Kind::ClusterTrap => gen_cluster_trap(n),
    }
}

/// `n` independent uniform points in `[0,1]^d`; coincident points are redrawn.
pub fn gen_uniform(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("uniform generator needs n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(n);
    let mut coords = Vec::with_capacity(n * d);
    while seen.len() < n {
        let p: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        if seen.insert(p.iter().map(|x| x.to_bits()).collect()) {
            coords.extend_from_slice(&p);
        }
    }
    Ok(PointSet::new(d, coords)?)
}

/// `count` square grids of `k` points each; grid `i` has side `2^i` and is
/// centred at `(2^(i+1) - 1, 0)`.
pub fn gen_exp_grids(k: usize, count: usize) -> Result<PointSet> {
    let s = (k as f64).sqrt().round() as usize;
    if k == 0 || s * s != k {
        return Err(Error::invalid(format!("grid size {k} is not a positive perfect square")));
    }
    if count == 0 {
        return Err(Error::invalid("need at least one grid"));
    }
    // 2^(i+1) - 1 must stay exact
    if count > 52 {
        return Err(Error::invalid(format!("{count} grids overflow double precision (at most 52)")));
    }
    let mut pts = Vec::with_capacity(count * k);
    for i in 0..count {
        let side = (1u64 << i) as f64;
        let cx = ((1u64 << (i + 1)) - 1) as f64;
        if s == 1 {
            pts.push([cx, 0.0]);
            continue;
        }
        let step = side / (s - 1) as f64;
        for a in 0..s {
            for b in 0..s {
                pts.push([cx - side / 2.0 + a as f64 * step, -side / 2.0 + b as f64 * step]);
            }
        }
    }
    Ok(PointSet::from_points(2, &pts)?)
}

/// Two facing columns `{(0,i)}` and `{(n/2,i)}`, `i = 1..n/2`.
pub fn gen_two_columns(n: usize) -> Result<PointSet> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::invalid(format!("two-columns needs an even n >= 2, got {n}")));
    }
    let h = n / 2;
    let mut pts = Vec::with_capacity(n);
    for x in [0.0, h as f64] {
        pts.extend((1..=h).map(|i| [x, i as f64]));
    }
    Ok(PointSet::from_points(2, &pts)?)
}

/// An instance on which the densest cover region of far clusters is not
/// centred on the dense part of the input.
///
/// Layout, in index order:
/// - `ceil(n/2)` points on a sunflower spiral in the unit disc at the origin;
/// - per level `t`, three far points at scale `R = 16 * 64^t` on the positive
///   x side, `(R, ±R/2)` and `(3R/2, 0)`, each with a helper point near the
///   midpoint of its segment to the origin, offset sideways by `0.2 R`.
///   A path through the helper is about 8% longer than the straight line, so
///   spanner thinning drops the direct edges and the far points reach the
///   disc only with a small detour;
/// - the rest on narrow arcs (half-angle 0.4 rad) around the negative x axis
///   at radii `2, 4, 8, ...` up to the outermost level.
///
/// A cover region of a far cluster is large enough to hold the whole disc.
/// Shifting it towards the arcs picks up the next arc without losing
/// anything, so the densest such region is centred on an arc point beyond
/// the disc. Linking the far cluster there routes its paths to the disc
/// through a detour, while the region of smallest index holding the disc
/// keeps the representative inside it.
pub fn gen_cluster_trap(n: usize) -> Result<PointSet> {
    if n < 8 {
        return Err(Error::invalid(format!("cluster-trap needs n >= 8, got {n}")));
    }
    let disc = n.div_ceil(2);
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    for i in 0..disc {
        let r = ((i as f64 + 0.5) / disc as f64).sqrt();
        let a = i as f64 * golden;
        pts.push([r * a.cos(), r * a.sin()]);
    }

    let log_n = (n as f64).log2().ceil() as usize;
    let levels = log_n.saturating_sub(4).clamp(1, 40).min((n - disc) / 12);
    const BASE: f64 = 16.0;
    const SCALE: f64 = 64.0;
    for t in 0..levels {
        let r = BASE * SCALE.powi(t as i32);
        for q in [[r, -0.5 * r], [r, 0.5 * r], [1.5 * r, 0.0]] {
            pts.push(q);
            pts.push([q[0] / 2.0 - 0.2 * q[1], q[1] / 2.0 + 0.2 * q[0]]);
        }
    }

    let rest = n - pts.len();
    let outer = BASE * SCALE.powi(levels as i32);
    let arcs = (outer / 2.0).log2().ceil().max(1.0) as usize;
    let arcs = arcs.min(rest);
    for j in 0..rest {
        let arc = j % arcs;
        let slot = j / arcs;
        let per = (rest - arc).div_ceil(arcs);
        let r = 2.0 * 2f64.powi(arc as i32);
        let theta = PI + 0.4 * (2.0 * (slot as f64 + 0.5) / per as f64 - 1.0);
        pts.push([r * theta.cos(), r * theta.sin()]);
    }
    Ok(PointSet::from_points(2, &pts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_seeded_and_in_unit_cube() {
        let a = gen_uniform(500, 3, 9).unwrap();
        let b = gen_uniform(500, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_uniform(500, 3, 10).unwrap());
        assert!(a.coords().iter().all(|&x| (0.0..1.0).contains(&x)));
        a.check_distinct().unwrap();
        assert_eq!(gen_uniform(1, 4, 0).unwrap().len(), 1);
        assert!(gen_uniform(0, 2, 0).is_err());
        assert!(gen_uniform(3, 0, 0).is_err());
    }

    #[test]
    fn uniform_grid_counts_are_multinomial() {
        let n = 10_000;
        let p = gen_uniform(n, 2, 4).unwrap();
        let mut cells = [0usize; 100];
        for q in p.iter() {
            let (a, b) = ((q[0] * 10.0) as usize, (q[1] * 10.0) as usize);
            cells[a * 10 + b] += 1;
        }
        let mean = n as f64 / 100.0;
        let sigma = (n as f64 * 0.01 * 0.99).sqrt();
        for (i, &c) in cells.iter().enumerate() {
            assert!((c as f64 - mean).abs() <= 4.0 * sigma, "cell {i}: {c}");
        }
    }

    #[test]
    fn exp_grids_layout() {
        let one = gen_exp_grids(1, 1).unwrap();
        assert_eq!(one.coords(), &[1.0, 0.0]);

        let two = gen_exp_grids(4, 2).unwrap();
        assert_eq!(two.len(), 8);
        let g1: Vec<&[f64]> = (4..8).map(|i| two.point(i)).collect();
        for corner in [[2.0, -1.0], [2.0, 1.0], [4.0, -1.0], [4.0, 1.0]] {
            assert!(g1.contains(&&corner[..]), "missing {corner:?}");
        }

        let many = gen_exp_grids(64, 12).unwrap();
        assert_eq!(many.len(), 12 * 64);
        many.check_distinct().unwrap();
        assert!(gen_exp_grids(5, 2).is_err());
        assert!(gen_exp_grids(4, 0).is_err());
        assert!(gen_exp_grids(4, 60).is_err());
    }

    #[test]
    fn two_columns_layout() {
        let p = gen_two_columns(4).unwrap();
        assert_eq!(p.coords(), &[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 2.0, 2.0]);
        let p = gen_two_columns(8).unwrap();
        let left = p.iter().filter(|q| q[0] == 0.0).count();
        let right = p.iter().filter(|q| q[0] == 4.0).count();
        assert_eq!((left, right), (4, 4));
        assert!(p.iter().all(|q| (1.0..=4.0).contains(&q[1])));
        assert!(gen_two_columns(7).is_err());
        assert!(gen_two_columns(0).is_err());
    }

    #[test]
    fn cluster_trap_counts() {
        for n in [8, 9, 100, 1001, 4096] {
            let p = gen_cluster_trap(n).unwrap();
            assert_eq!(p.len(), n);
            p.check_distinct().unwrap();
            let in_disc = p.iter().filter(|q| q[0].hypot(q[1]) <= 1.0).count();
            assert_eq!(in_disc, n.div_ceil(2));
        }
        assert!(gen_cluster_trap(7).is_err());
    }

    #[test]
    fn generate_dispatches() {
        assert_eq!(generate(Kind::TwoColumns, 6, 2, 0, 0).unwrap().len(), 6);
        assert_eq!(generate(Kind::ExpGrids, 3, 2, 0, 9).unwrap().len(), 27);
        assert_eq!(generate(Kind::Uniform, 6, 3, 0, 0).unwrap().dim(), 3);
    }
}
