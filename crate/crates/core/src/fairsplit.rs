//! Fair-split trees and the k-partitions derived from them.
//!
//! The tree repeatedly bisects the minimal bounding box of a point subset
//! through the middle of its longest side. Cutting the tree into connected
//! pieces of at most `k` nodes and taking the smallest ball around the box
//! of each piece's top node yields the clustering used by the construction.

use crate::error::{Error, Result};
use crate::geometry::{enclosing_ball, AABox, Ball, PointSet};
use crate::kdtree::KdTree;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct FstNode {
    /// Minimal bounding box of the node's points.
    pub bbox: AABox,
    pub parent: Option<NodeId>,
    /// Lower and upper child; `None` for leaves.
    pub children: Option<(NodeId, NodeId)>,
    /// Split axis and coordinate of internal nodes.
    pub split: Option<(usize, f64)>,
    pub depth: usize,
    /// Range into [`FairSplitTree::order`].
    pub start: usize,
    pub end: usize,
}

impl FstNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn size(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairSplitTree {
    nodes: Vec<FstNode>,
    /// Point indices permuted so that every node covers a contiguous range.
    order: Vec<usize>,
}

impl FairSplitTree {
    /// Builds the tree. Points on a split hyperplane go to the lower child;
    /// ties among longest sides split the lowest axis.
    pub fn build(points: &PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("fair-split tree needs at least one point".into()));
        }
        points.check_distinct()?;
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes: Vec<FstNode> = Vec::with_capacity(2 * n - 1);
        let mut scratch = Vec::new();

        let root_box = points.bounding_box().expect("nonempty");
        nodes.push(FstNode {
            bbox: root_box,
            parent: None,
            children: None,
            split: None,
            depth: 0,
            start: 0,
            end: n,
        });
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let (start, end) = (nodes[id].start, nodes[id].end);
            if end - start == 1 {
                continue;
            }
            let (axis, len) = nodes[id].bbox.longest_side();
            let lo = nodes[id].bbox.lo()[axis];
            let hi = nodes[id].bbox.hi()[axis];
            let mut mid = lo + 0.5 * len;
            // sides of a few ulps can round the midpoint onto `hi`
            if mid >= hi {
                mid = lo;
            }

            // stable partition: coordinate <= mid first
            scratch.clear();
            let mut w = start;
            for r in start..end {
                let p = order[r];
                if points.point(p)[axis] <= mid {
                    order[w] = p;
                    w += 1;
                } else {
                    scratch.push(p);
                }
            }
            order[w..end].copy_from_slice(&scratch);
            debug_assert!(w > start && w < end);

            let depth = nodes[id].depth + 1;
            let child = |s: usize, e: usize, nodes: &mut Vec<FstNode>| {
                let bbox = AABox::bounding(points.dim(), order[s..e].iter().map(|&p| points.point(p)))
                    .expect("nonempty child");
                nodes.push(FstNode {
                    bbox,
                    parent: Some(id),
                    children: None,
                    split: None,
                    depth,
                    start: s,
                    end: e,
                });
                nodes.len() - 1
            };
            let lower = child(start, w, &mut nodes);
            let upper = child(w, end, &mut nodes);
            nodes[id].children = Some((lower, upper));
            nodes[id].split = Some((axis, mid));
            stack.push(upper);
            stack.push(lower);
        }
        debug_assert_eq!(nodes.len(), 2 * n - 1);
        Ok(Self { nodes, order })
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &FstNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[FstNode] {
        &self.nodes
    }

    /// Point indices below `id`.
    pub fn points_of(&self, id: NodeId) -> &[usize] {
        let n = &self.nodes[id];
        &self.order[n.start..n.end]
    }

    /// The point stored at a leaf.
    pub fn leaf_point(&self, id: NodeId) -> Option<usize> {
        let n = &self.nodes[id];
        n.is_leaf().then(|| self.order[n.start])
    }
}

/// Cuts tree edges until every connected piece has at most `k` nodes.
/// Returns the top node of every piece, in increasing node order.
///
/// A piece of `k' > k` nodes is split at the edge whose lower side is
/// largest among edges leaving both sides with at most `ceil(2k'/3)` nodes.
pub fn partition_components(tree: &FairSplitTree, k: usize) -> Result<Vec<NodeId>> {
    if k == 0 {
        return Err(Error::InvalidInput("component capacity k must be positive".into()));
    }
    let mut is_root = vec![false; tree.len()];
    is_root[tree.root()] = true;
    let mut work = vec![tree.root()];
    let mut members = Vec::new();
    let mut sub = vec![0usize; tree.len()];

    while let Some(top) = work.pop() {
        // preorder of the piece rooted at `top`
        members.clear();
        members.push(top);
        let mut i = 0;
        while i < members.len() {
            if let Some((a, b)) = tree.node(members[i]).children {
                for c in [a, b] {
                    if !is_root[c] {
                        members.push(c);
                    }
                }
            }
            i += 1;
        }
        let size = members.len();
        if size <= k {
            continue;
        }
        for &v in members.iter().rev() {
            let mut s = 1;
            if let Some((a, b)) = tree.node(v).children {
                for c in [a, b] {
                    if !is_root[c] {
                        s += sub[c];
                    }
                }
            }
            sub[v] = s;
        }
        let bound = (2 * size).div_ceil(3);
        let mut best: Option<NodeId> = None;
        for &v in &members[1..] {
            let s = sub[v];
            if s <= bound && size - s <= bound {
                let better = match best {
                    None => true,
                    Some(b) => s > sub[b] || (s == sub[b] && v < b),
                };
                if better {
                    best = Some(v);
                }
            }
        }
        let cut = best.unwrap_or_else(|| {
            // not reachable for binary trees; keep the most balanced edge
            *members[1..]
                .iter()
                .min_by_key(|&&v| (sub[v].max(size - sub[v]), v))
                .expect("piece with more than one node")
        });
        is_root[cut] = true;
        work.push(top);
        work.push(cut);
    }
    Ok((0..tree.len()).filter(|&v| is_root[v]).collect())
}

/// Clustering of the points into balls of nondecreasing radius, each
/// holding at most `k` assigned points.
#[derive(Debug, Clone, PartialEq)]
pub struct KPartition {
    pub k: usize,
    /// Balls sorted by radius; ties keep component order.
    pub balls: Vec<Ball>,
    /// Bounding box of each ball's component top node.
    pub boxes: Vec<AABox>,
    /// Component top node of each ball.
    pub roots: Vec<NodeId>,
    /// Points assigned to each ball, in increasing index order.
    pub members: Vec<Vec<usize>>,
    /// Ball index assigned to each point.
    pub assignment: Vec<usize>,
}

impl KPartition {
    pub fn from_tree(tree: &FairSplitTree, k: usize) -> Result<Self> {
        let roots = partition_components(tree, k)?;
        let mut is_root = vec![false; tree.len()];
        for &r in &roots {
            is_root[r] = true;
        }
        // components that contain at least one leaf
        let mut comps: Vec<(NodeId, Vec<usize>)> = Vec::with_capacity(roots.len());
        let mut stack = Vec::new();
        for &r in &roots {
            let mut pts = Vec::new();
            stack.push(r);
            while let Some(v) = stack.pop() {
                match tree.node(v).children {
                    None => pts.push(tree.leaf_point(v).expect("leaf")),
                    Some((a, b)) => {
                        for c in [a, b] {
                            if !is_root[c] {
                                stack.push(c);
                            }
                        }
                    }
                }
            }
            if !pts.is_empty() {
                pts.sort_unstable();
                comps.push((r, pts));
            }
        }
        let mut with_balls: Vec<(Ball, NodeId, Vec<usize>)> = comps
            .into_iter()
            .map(|(r, pts)| (enclosing_ball(&tree.node(r).bbox), r, pts))
            .collect();
        // stable sort keeps component order among equal radii
        with_balls.sort_by(|a, b| a.0.radius.total_cmp(&b.0.radius));

        let n = tree.points_of(tree.root()).len();
        let mut assignment = vec![usize::MAX; n];
        let mut balls = Vec::with_capacity(with_balls.len());
        let mut boxes = Vec::with_capacity(with_balls.len());
        let mut roots = Vec::with_capacity(with_balls.len());
        let mut members = Vec::with_capacity(with_balls.len());
        for (i, (ball, r, pts)) in with_balls.into_iter().enumerate() {
            for &p in &pts {
                assignment[p] = i;
            }
            balls.push(ball);
            boxes.push(tree.node(r).bbox.clone());
            roots.push(r);
            members.push(pts);
        }
        debug_assert!(assignment.iter().all(|&a| a != usize::MAX));
        Ok(Self {
            k,
            balls,
            boxes,
            roots,
            members,
            assignment,
        })
    }

    /// Number of balls.
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// `n' * k / n`, the achieved constant in the ball-count bound.
    pub fn count_ratio(&self) -> f64 {
        self.len() as f64 * self.k as f64 / self.assignment.len() as f64
    }

    /// One line per ball: `ball_index,center...,radius,assigned_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, ball) in self.balls.iter().enumerate() {
            out.push_str(&i.to_string());
            for c in &ball.center {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push_str(&format!(",{},{}\n", ball.radius, self.members[i].len()));
        }
        out
    }
}

/// Builds the fair-split tree of `points` and its k-partition.
pub fn k_partition(points: &PointSet, k: usize) -> Result<KPartition> {
    let tree = FairSplitTree::build(points)?;
    KPartition::from_tree(&tree, k)
}

/// Overlap and density statistics of a k-partition at one probe ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    /// Partition balls with radius in `[r, 2r)` that contain the probe center.
    pub overlap: usize,
    /// Points inside the probe ball assigned to balls of radius at least `r`, divided by `k`.
    pub density: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub probes: Vec<ProbeResult>,
    pub max_overlap: usize,
    pub max_density: f64,
}

/// Evaluates the bounded-overlap and bounded-density statistics at each
/// probe `(center, radius)`.
pub fn probe_properties(
    partition: &KPartition,
    points: &PointSet,
    probes: &[(Vec<f64>, f64)],
) -> Result<PropertyReport> {
    let mut report = PropertyReport::default();
    if probes.is_empty() {
        return Ok(report);
    }
    let keys: Vec<u64> = (0..points.len() as u64).collect();
    let kd = KdTree::new(points.dim(), points.coords(), &keys);
    let radii: Vec<f64> = partition.balls.iter().map(|b| b.radius).collect();
    for (center, r) in probes {
        crate::error::check_dim(points.dim(), center.len())?;
        let r = *r;
        let first = radii.partition_point(|&x| x < r);
        let last = radii.partition_point(|&x| x < 2.0 * r);
        let overlap = (first..last)
            .filter(|&i| partition.balls[i].contains_unchecked(center))
            .count();
        let mut dense = 0usize;
        kd.for_each_in_ball(center, r, |p| {
            if radii[partition.assignment[p]] >= r {
                dense += 1;
            }
        });
        let density = dense as f64 / partition.k as f64;
        report.max_overlap = report.max_overlap.max(overlap);
        report.max_density = report.max_density.max(density);
        report.probes.push(ProbeResult { overlap, density });
    }
    Ok(report)
}
