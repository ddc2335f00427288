//! Orthogonal range structures.
//!
//! [`CountMinTree`] is a layered range tree: a balanced tree on the first
//! coordinate whose nodes carry a tree on the remaining coordinates, down
//! to sorted arrays with a min-key segment tree on the last coordinate.
//! Counting and min-key queries both run over the same canonical nodes.
//!
//! [`DualBoxTree`] answers "which stored square box containing `p` has the
//! smallest key" by storing each box as the point `(lo, hi)` one level up
//! and asking a dominance query `lo <= p <= hi`.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{AABox, PointSet};
use crate::kdtree::KdTree;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct LastLevel {
    vals: Vec<f64>,
    /// Bottom-up segment tree of `(key, item)`, size `2 * vals.len()`.
    seg: Vec<(u64, u32)>,
}

impl LastLevel {
    fn new(items: &mut [u32], axis: usize, dim: usize, coords: &[f64], keys: &[u64]) -> Self {
        items.sort_by(|&a, &b| coords[a as usize * dim + axis].total_cmp(&coords[b as usize * dim + axis]));
        let m = items.len();
        let vals = items.iter().map(|&j| coords[j as usize * dim + axis]).collect();
        let mut seg = vec![(u64::MAX, NONE); 2 * m];
        for (i, &j) in items.iter().enumerate() {
            seg[m + i] = (keys[j as usize], j);
        }
        for i in (1..m).rev() {
            seg[i] = seg[2 * i].min(seg[2 * i + 1]);
        }
        Self { vals, seg }
    }

    fn range(&self, lo: f64, hi: f64) -> (usize, usize) {
        (
            self.vals.partition_point(|&v| v < lo),
            self.vals.partition_point(|&v| v <= hi),
        )
    }

    fn count(&self, lo: f64, hi: f64) -> usize {
        let (a, b) = self.range(lo, hi);
        b.saturating_sub(a)
    }

    fn min(&self, lo: f64, hi: f64) -> (u64, u32) {
        let (a, b) = self.range(lo, hi);
        let m = self.vals.len();
        let (mut l, mut r) = (a + m, b + m);
        let mut best = (u64::MAX, NONE);
        while l < r {
            if l & 1 == 1 {
                best = best.min(self.seg[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                best = best.min(self.seg[r]);
            }
            l >>= 1;
            r >>= 1;
        }
        best
    }
}

#[derive(Debug, Clone)]
struct TreeNode {
    lo: f64,
    hi: f64,
    left: u32,
    right: u32,
    /// Single item for leaves.
    item: u32,
    assoc: Option<Box<Level>>,
}

#[derive(Debug, Clone)]
struct TreeLevel {
    axis: usize,
    nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone)]
enum Level {
    Tree(TreeLevel),
    Last(LastLevel),
}

struct Ctx<'a> {
    dim: usize,
    coords: &'a [f64],
    keys: &'a [u64],
}

impl Ctx<'_> {
    #[inline]
    fn coord(&self, item: u32, axis: usize) -> f64 {
        self.coords[item as usize * self.dim + axis]
    }

    fn build_level(&self, items: &mut [u32], axis: usize) -> Level {
        if axis + 1 == self.dim {
            return Level::Last(LastLevel::new(items, axis, self.dim, self.coords, self.keys));
        }
        items.sort_by(|&a, &b| self.coord(a, axis).total_cmp(&self.coord(b, axis)));
        let mut level = TreeLevel {
            axis,
            nodes: Vec::with_capacity(2 * items.len()),
        };
        self.build_node(&mut level, items, axis);
        Level::Tree(level)
    }

    /// `items` sorted by `axis`.
    fn build_node(&self, level: &mut TreeLevel, items: &mut [u32], axis: usize) -> u32 {
        let id = level.nodes.len();
        level.nodes.push(TreeNode {
            lo: self.coord(items[0], axis),
            hi: self.coord(items[items.len() - 1], axis),
            left: NONE,
            right: NONE,
            item: NONE,
            assoc: None,
        });
        if items.len() == 1 {
            level.nodes[id].item = items[0];
            return id as u32;
        }
        let mut copy = items.to_vec();
        let assoc = self.build_level(&mut copy, axis + 1);
        level.nodes[id].assoc = Some(Box::new(assoc));
        let mid = items.len() / 2;
        let (a, b) = items.split_at_mut(mid);
        let l = self.build_node(level, a, axis);
        let r = self.build_node(level, b, axis);
        level.nodes[id].left = l;
        level.nodes[id].right = r;
        id as u32
    }
}

/// Layered range tree over an indexed point set answering closed-box
/// count and minimum-key queries.
#[derive(Debug, Clone)]
pub struct CountMinTree {
    dim: usize,
    coords: Vec<f64>,
    keys: Vec<u64>,
    root: Option<Level>,
}

impl CountMinTree {
    /// Keys are the point indices.
    pub fn build(points: &PointSet) -> Self {
        let keys: Vec<u64> = (0..points.len() as u64).collect();
        Self::build_keyed(points, keys)
    }

    /// Stores `points` with caller-chosen keys, e.g. `(rank << 32) | index`.
    pub fn build_keyed(points: &PointSet, keys: Vec<u64>) -> Self {
        assert_eq!(points.len(), keys.len(), "one key per point");
        let dim = points.dim();
        let coords = points.coords().to_vec();
        let root = if keys.is_empty() {
            None
        } else {
            let ctx = Ctx {
                dim,
                coords: &coords,
                keys: &keys,
            };
            let mut items: Vec<u32> = (0..keys.len() as u32).collect();
            Some(ctx.build_level(&mut items, 0))
        };
        Self {
            dim,
            coords,
            keys,
            root,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn item_in(&self, item: u32, b: &AABox) -> bool {
        b.contains_unchecked(&self.coords[item as usize * self.dim..(item as usize + 1) * self.dim])
    }

    /// Number of stored points in the closed box.
    pub fn count(&self, b: &AABox) -> Result<usize> {
        check_dim(self.dim, b.dim())?;
        Ok(self.root.as_ref().map_or(0, |l| self.count_level(l, b)))
    }

    fn count_level(&self, level: &Level, b: &AABox) -> usize {
        match level {
            Level::Last(last) => last.count(b.lo()[self.dim - 1], b.hi()[self.dim - 1]),
            Level::Tree(t) => self.count_node(t, 0, b),
        }
    }

    fn count_node(&self, t: &TreeLevel, id: u32, b: &AABox) -> usize {
        let node = &t.nodes[id as usize];
        let (qlo, qhi) = (b.lo()[t.axis], b.hi()[t.axis]);
        if node.hi < qlo || node.lo > qhi {
            return 0;
        }
        if node.item != NONE {
            return self.item_in(node.item, b) as usize;
        }
        if qlo <= node.lo && node.hi <= qhi {
            return self.count_level(node.assoc.as_ref().expect("internal"), b);
        }
        self.count_node(t, node.left, b) + self.count_node(t, node.right, b)
    }

    /// Smallest key among stored points in the closed box.
    pub fn min_key(&self, b: &AABox) -> Result<Option<u64>> {
        check_dim(self.dim, b.dim())?;
        let best = self.root.as_ref().map_or((u64::MAX, NONE), |l| self.min_level(l, b));
        Ok((best.1 != NONE).then_some(best.0))
    }

    /// Smallest stored point index in the closed box (keys are indices
    /// when built with [`CountMinTree::build`]).
    pub fn min_index(&self, b: &AABox) -> Result<Option<usize>> {
        Ok(self.min_key(b)?.map(|k| k as usize))
    }

    fn min_level(&self, level: &Level, b: &AABox) -> (u64, u32) {
        match level {
            Level::Last(last) => last.min(b.lo()[self.dim - 1], b.hi()[self.dim - 1]),
            Level::Tree(t) => self.min_node(t, 0, b),
        }
    }

    fn min_node(&self, t: &TreeLevel, id: u32, b: &AABox) -> (u64, u32) {
        let node = &t.nodes[id as usize];
        let (qlo, qhi) = (b.lo()[t.axis], b.hi()[t.axis]);
        if node.hi < qlo || node.lo > qhi {
            return (u64::MAX, NONE);
        }
        if node.item != NONE {
            return if self.item_in(node.item, b) {
                (self.keys[node.item as usize], node.item)
            } else {
                (u64::MAX, NONE)
            };
        }
        if qlo <= node.lo && node.hi <= qhi {
            return self.min_level(node.assoc.as_ref().expect("internal"), b);
        }
        self.min_node(t, node.left, b).min(self.min_node(t, node.right, b))
    }
}

/// How [`DualBoxTree`] ranks boxes containing a query point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxOrder {
    /// Smallest side length, then smallest box index.
    BySide,
    /// Smallest box index.
    ByIndex,
}

/// Square boxes stored as dual points `(lo, hi)` in R^{2d}.
#[derive(Debug, Clone)]
pub struct DualBoxTree {
    dim: usize,
    kd: KdTree,
    /// Box index for each stored box slot.
    index_of: Vec<usize>,
}

impl DualBoxTree {
    /// Stores `(square box, box index)` pairs.
    pub fn build(boxes: &[(AABox, usize)], order: BoxOrder) -> Result<Self> {
        let dim = boxes.first().map_or(1, |(b, _)| b.dim());
        let mut coords = Vec::with_capacity(boxes.len() * 2 * dim);
        for (b, idx) in boxes {
            check_dim(dim, b.dim())?;
            if !b.is_square() {
                return Err(Error::InvalidInput(format!("box {idx} is not square")));
            }
            coords.extend_from_slice(b.lo());
            coords.extend_from_slice(b.hi());
        }
        let mut slots: Vec<usize> = (0..boxes.len()).collect();
        let keys: Vec<u64> = match order {
            BoxOrder::ByIndex => boxes.iter().map(|(_, i)| *i as u64).collect(),
            BoxOrder::BySide => {
                slots.sort_by(|&a, &b| {
                    boxes[a].0.side(0).total_cmp(&boxes[b].0.side(0)).then(boxes[a].1.cmp(&boxes[b].1))
                });
                let mut rank = vec![0u64; boxes.len()];
                for (r, &s) in slots.iter().enumerate() {
                    rank[s] = r as u64;
                }
                rank
            }
        };
        let index_of = boxes.iter().map(|(_, i)| *i).collect();
        Ok(Self {
            dim,
            kd: KdTree::new(2 * dim, &coords, &keys),
            index_of,
        })
    }

    pub fn len(&self) -> usize {
        self.index_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_of.is_empty()
    }

    /// Index of the best-ranked stored box containing `p`.
    pub fn smallest_containing_box(&self, p: &[f64]) -> Result<Option<usize>> {
        if self.is_empty() {
            return Ok(None);
        }
        check_dim(self.dim, p.len())?;
        let mut lo = vec![f64::NEG_INFINITY; 2 * self.dim];
        let mut hi = vec![f64::INFINITY; 2 * self.dim];
        hi[..self.dim].copy_from_slice(p);
        lo[self.dim..].copy_from_slice(p);
        Ok(self.kd.min_key_in_box(&lo, &hi).map(|(_, slot)| self.index_of[slot]))
    }
}
