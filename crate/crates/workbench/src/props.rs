//! Partition property checks behind the `props` command.

use avgstretch::fairsplit::{probe_properties, KPartition};
use avgstretch::geometry::ball_contains;
use avgstretch::PointSet;
use rand::Rng;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSummary {
    pub n: usize,
    pub k: usize,
    pub balls: usize,
    /// `balls * k / n`.
    pub count_ratio: f64,
    /// Points outside their assigned ball.
    pub outside: usize,
    /// Balls holding more than `k` points.
    pub overfull: usize,
    pub unsorted: bool,
    pub max_overlap: usize,
    pub max_density: f64,
}

impl PartitionSummary {
    pub fn exact_properties_hold(&self) -> bool {
        self.outside == 0 && self.overfull == 0 && !self.unsorted
    }
}

/// `count` probes centred on random input points, each with the radius of
/// a random partition ball.
pub fn random_probes<R: Rng + ?Sized>(
    partition: &KPartition,
    points: &PointSet,
    count: usize,
    rng: &mut R,
) -> Vec<(Vec<f64>, f64)> {
    if points.is_empty() || partition.is_empty() {
        return Vec::new();
    }
    let positive: Vec<f64> = partition.balls.iter().map(|b| b.radius).filter(|&r| r > 0.0).collect();
    (0..count)
        .map(|_| {
            let c = points.point(rng.gen_range(0..points.len())).to_vec();
            let r = if positive.is_empty() { 1.0 } else { positive[rng.gen_range(0..positive.len())] };
            (c, r)
        })
        .collect()
}

pub fn summarize(partition: &KPartition, points: &PointSet, probes: &[(Vec<f64>, f64)]) -> Result<PartitionSummary> {
    let n = points.len();
    let mut load = vec![0usize; partition.len()];
    let mut outside = 0;
    for (p, &b) in partition.assignment.iter().enumerate() {
        load[b] += 1;
        if !ball_contains(&partition.balls[b], points.point(p))? {
            outside += 1;
        }
    }
    let report = probe_properties(partition, points, probes)?;
    Ok(PartitionSummary {
        n,
        k: partition.k,
        balls: partition.len(),
        count_ratio: partition.count_ratio(),
        outside,
        overfull: load.iter().filter(|&&l| l > partition.k).count(),
        unsorted: partition.balls.windows(2).any(|w| w[0].radius > w[1].radius),
        max_overlap: report.max_overlap,
        max_density: report.max_density,
    })
}
