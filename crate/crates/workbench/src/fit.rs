//! Log-log fits of `asf - 1` against `n`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::experiment::RunRecord;

/// Records with `asf - 1` at or below this are left out of fits.
pub const MIN_EXCESS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Distinct `x` values used.
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn least_squares(xy: &[(f64, f64)]) -> Result<Fit> {
    if xy.len() < 2 {
        return Err(Error::invalid(format!("a line needs at least 2 points, got {}", xy.len())));
    }
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).max(0.0) } else { 1.0 };
    Ok(Fit { slope, intercept, r2, points: xy.len() })
}

/// Seed-averaged `asf` per `n`, skipping records with `asf <= 1 + MIN_EXCESS`.
pub fn mean_asf_by_n(records: &[RunRecord]) -> BTreeMap<usize, f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.asf - 1.0 <= MIN_EXCESS || !r.asf.is_finite() {
            log::warn!("n={} seed={}: asf {} too close to 1, left out of the fit", r.n, r.seed, r.asf);
            continue;
        }
        groups.entry(r.n).or_default().push(r.asf);
    }
    groups.into_iter().map(|(n, v)| (n, v.iter().sum::<f64>() / v.len() as f64)).collect()
}

/// Fits `ln(asf - 1) = slope * ln n + intercept` over seed-averaged records.
pub fn fit_slope(records: &[RunRecord]) -> Result<Fit> {
    let means = mean_asf_by_n(records);
    if means.is_empty() {
        return Err(Error::invalid("no record has asf above 1"));
    }
    let xy: Vec<(f64, f64)> = means.iter().map(|(&n, &a)| ((n as f64).ln(), (a - 1.0).ln())).collect();
    least_squares(&xy)
}
