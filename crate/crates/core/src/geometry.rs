//! Points, axis-aligned boxes and balls in R^d.
//!
//! Containment and intersection are closed: boundary points count as inside.

use crate::error::{check_dim, Error, Result};

/// An indexed set of points in R^d stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from `dim`-strided coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point {} has a non-finite coordinate",
                pos / dim
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The sub-point-set made of `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, coords }
    }

    /// Rejects point sets containing two points with identical coordinates.
    pub fn check_distinct(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)).then(a.cmp(&b)));
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(Error::DuplicatePoint {
                    first: w[0].min(w[1]),
                    second: w[0].max(w[1]),
                });
            }
        }
        Ok(())
    }

    /// Minimal axis-aligned box containing every point. `None` when empty.
    pub fn bounding_box(&self) -> Option<AABox> {
        AABox::bounding(self.dim, self.iter())
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Euclidean distance, without a dimension check.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(dist(a, b))
}

/// Closed axis-aligned box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AABox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AABox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidInput("box dimension must be at least 1".into()));
        }
        for (axis, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l > h {
                return Err(Error::InvalidInput(format!(
                    "box side {axis} has lo {l} > hi {h}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Square box of side `side` centered at `center`.
    pub fn square(center: &[f64], side: f64) -> Self {
        let half = 0.5 * side;
        Self {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub(crate) fn bounding<'a>(dim: usize, mut pts: impl Iterator<Item = &'a [f64]>) -> Option<Self> {
        let first = pts.next()?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for p in pts {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some(Self { lo, hi })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    #[inline]
    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Longest side length and the lowest axis achieving it.
    pub fn longest_side(&self) -> (usize, f64) {
        let mut best = (0, self.side(0));
        for a in 1..self.dim() {
            let s = self.side(a);
            if s > best.1 {
                best = (a, s);
            }
        }
        best
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn is_square(&self) -> bool {
        // centred construction rounds each side independently
        let s = self.side(0);
        (1..self.dim()).all(|a| (self.side(a) - s).abs() <= 1e-12 * s.abs().max(f64::MIN_POSITIVE))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, p: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p)
            .all(|((l, h), x)| *l <= *x && *x <= *h)
    }
}

/// Closed ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius {radius} is not a nonnegative real")));
        }
        Ok(Self { center, radius })
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, p: &[f64]) -> bool {
        dist2(&self.center, p) <= self.radius * self.radius
    }
}

/// Smallest ball containing `b`: centered at the midpoint, radius half the
/// diagonal, rounded up so that every point of `b` tests as inside.
pub fn enclosing_ball(b: &AABox) -> Ball {
    let center = b.center();
    let far2: f64 = center
        .iter()
        .zip(b.lo.iter().zip(&b.hi))
        .map(|(c, (l, h))| ((c - l) * (c - l)).max((c - h) * (c - h)))
        .sum();
    let mut radius = far2.sqrt();
    while radius * radius < far2 {
        radius = radius.next_up();
    }
    Ball { center, radius }
}

pub fn box_contains(b: &AABox, p: &[f64]) -> Result<bool> {
    check_dim(b.dim(), p.len())?;
    Ok(b.contains_unchecked(p))
}

pub fn ball_contains(ball: &Ball, p: &[f64]) -> Result<bool> {
    check_dim(ball.center.len(), p.len())?;
    Ok(ball.contains_unchecked(p))
}

pub fn boxes_intersect(a: &AABox, b: &AABox) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    Ok((0..a.dim()).all(|i| a.lo[i] <= b.hi[i] && b.lo[i] <= a.hi[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(lo: &[f64], hi: &[f64]) -> AABox {
        AABox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        // sum of squares oracle: 1 + 1
        let d = distance(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            distance(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn enclosing_ball_examples() {
        let b = enclosing_ball(&bx(&[0.0, 0.0], &[4.0, 3.0]));
        assert_eq!(b.center, vec![2.0, 1.5]);
        assert_eq!(b.radius, 2.5);

        let b = enclosing_ball(&bx(&[1.0, 1.0], &[1.0, 1.0]));
        assert_eq!(b.center, vec![1.0, 1.0]);
        assert_eq!(b.radius, 0.0);

        let b = enclosing_ball(&bx(&[0.0; 3], &[1.0; 3]));
        assert!((b.radius - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn containment_examples() {
        let unit = bx(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(box_contains(&unit, &[1.0, 1.0]).unwrap());
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(ball_contains(&ball, &[0.0, 1.0]).unwrap());
        assert!(!ball_contains(&ball, &[1.0, 1.0]).unwrap());
        assert!(box_contains(&unit, &[1.0]).is_err());
        assert!(ball_contains(&ball, &[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn intersection_examples() {
        let unit = bx(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(boxes_intersect(&unit, &bx(&[1.0, 1.0], &[2.0, 2.0])).unwrap());
        assert!(!boxes_intersect(&unit, &bx(&[1.5, 1.5], &[2.0, 2.0])).unwrap());
        assert!(boxes_intersect(&bx(&[0.0, 0.0], &[3.0, 3.0]), &bx(&[1.0, 1.0], &[2.0, 2.0])).unwrap());
        assert!(boxes_intersect(&unit, &bx(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(PointSet::new(0, vec![]).is_err());
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointSet::new(2, vec![1.0, f64::NAN]).is_err());
        assert!(AABox::new(vec![1.0], vec![0.0]).is_err());
        assert!(Ball::new(vec![0.0], -1.0).is_err());
        let dup = PointSet::new(2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(dup.check_distinct(), Err(Error::DuplicatePoint { first: 0, second: 2 }));
    }

    #[test]
    fn enclosing_ball_is_minimal_on_corners() {
        // Any center other than the midpoint is farther from some corner.
        let b = bx(&[0.0, -1.0], &[3.0, 2.5]);
        let ball = enclosing_ball(&b);
        let corners: Vec<[f64; 2]> = vec![[0.0, -1.0], [0.0, 2.5], [3.0, -1.0], [3.0, 2.5]];
        for c in &corners {
            assert!(dist(&ball.center, c) <= ball.radius + 1e-12);
        }
        for dx in [-0.1, -0.01, 0.0, 0.01, 0.1] {
            for dy in [-0.1, -0.01, 0.0, 0.01, 0.1] {
                if dx == 0.0 && dy == 0.0 {
                    continue;
                }
                let c = [ball.center[0] + dx, ball.center[1] + dy];
                let needed = corners.iter().map(|q| dist(&c, q)).fold(0.0, f64::max);
                assert!(needed > ball.radius);
            }
        }
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in prop::array::uniform3(-1e3f64..1e3),
                               b in prop::array::uniform3(-1e3f64..1e3),
                               c in prop::array::uniform3(-1e3f64..1e3)) {
            let ab = dist(&a, &b);
            let bc = dist(&b, &c);
            let ac = dist(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert_eq!(ab, dist(&b, &a));
        }

        #[test]
        fn containment_matches_coordinate_oracle(
            lo in prop::array::uniform2(-1.0f64..1.0),
            ext in prop::array::uniform2(0.0f64..1.0),
            p in prop::array::uniform2(-2.0f64..2.0),
            r in 0.0f64..2.0,
        ) {
            let hi = [lo[0] + ext[0], lo[1] + ext[1]];
            let b = bx(&lo, &hi);
            let inside = lo[0] <= p[0] && p[0] <= hi[0] && lo[1] <= p[1] && p[1] <= hi[1];
            prop_assert_eq!(box_contains(&b, &p).unwrap(), inside);
            let ball = Ball::new(lo.to_vec(), r).unwrap();
            let d2 = (p[0] - lo[0]).powi(2) + (p[1] - lo[1]).powi(2);
            prop_assert_eq!(ball_contains(&ball, &p).unwrap(), d2 <= r * r);
        }

        #[test]
        fn enclosing_ball_holds_box_points(
            lo in prop::array::uniform3(-1e3f64..1e3),
            ext in prop::array::uniform3(0.0f64..1e2),
            t in prop::array::uniform3(0.0f64..=1.0),
        ) {
            let hi: Vec<f64> = (0..3).map(|a| lo[a] + ext[a]).collect();
            let b = bx(&lo, &hi);
            let ball = enclosing_ball(&b);
            for corner in 0..8 {
                let q: Vec<f64> = (0..3).map(|a| if corner >> a & 1 == 1 { hi[a] } else { lo[a] }).collect();
                prop_assert!(ball_contains(&ball, &q).unwrap());
            }
            let q: Vec<f64> = (0..3).map(|a| (lo[a] + t[a] * ext[a]).min(hi[a])).collect();
            prop_assert!(ball_contains(&ball, &q).unwrap());
        }
    }
}
