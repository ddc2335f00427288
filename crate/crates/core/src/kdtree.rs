//! Static kd-tree over points in R^m with per-node bounding boxes,
//! counts and minimum keys.

const LEAF_SIZE: usize = 8;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    min_key: u64,
    min_item: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct KdTree {
    dim: usize,
    /// Permuted coordinates, `dim` per slot.
    coords: Vec<f64>,
    /// Original item id for each slot.
    ids: Vec<u32>,
    keys: Vec<u64>,
    nodes: Vec<Node>,
    /// `2 * dim` floats per node: lo then hi.
    bounds: Vec<f64>,
}

impl KdTree {
    /// Items are `coords.len() / dim` points; item `j` has key `keys[j]`.
    pub(crate) fn new(dim: usize, coords: &[f64], keys: &[u64]) -> Self {
        let n = keys.len();
        debug_assert_eq!(coords.len(), n * dim);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            coords: Vec::new(),
            ids: Vec::new(),
            keys: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            bounds: Vec::new(),
        };
        if n == 0 {
            return tree;
        }
        // (node id, start, end) with node already allocated
        tree.alloc_node(0, n);
        let mut stack = vec![(0usize, 0usize, n)];
        while let Some((id, start, end)) = stack.pop() {
            let slice = &mut order[start..end];
            // bounding box
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for &j in slice.iter() {
                let p = &coords[j as usize * dim..(j as usize + 1) * dim];
                for a in 0..dim {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            tree.bounds[id * 2 * dim..id * 2 * dim + dim].copy_from_slice(&lo);
            tree.bounds[id * 2 * dim + dim..(id + 1) * 2 * dim].copy_from_slice(&hi);
            if end - start <= LEAF_SIZE {
                continue;
            }
            let mut axis = 0;
            for a in 1..dim {
                if hi[a] - lo[a] > hi[axis] - lo[axis] {
                    axis = a;
                }
            }
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&x, &y| {
                coords[x as usize * dim + axis].total_cmp(&coords[y as usize * dim + axis])
            });
            let left = tree.alloc_node(start, start + mid);
            let right = tree.alloc_node(start + mid, end);
            tree.nodes[id].left = left as u32;
            tree.nodes[id].right = right as u32;
            stack.push((right, start + mid, end));
            stack.push((left, start, start + mid));
        }
        tree.coords = Vec::with_capacity(n * dim);
        for &j in &order {
            tree.coords
                .extend_from_slice(&coords[j as usize * dim..(j as usize + 1) * dim]);
        }
        tree.keys = order.iter().map(|&j| keys[j as usize]).collect();
        tree.ids = order;
        // min keys, children have larger ids than parents
        for id in (0..tree.nodes.len()).rev() {
            let node = &tree.nodes[id];
            let (mk, mi) = if node.left == NONE {
                let mut best = (u64::MAX, NONE);
                for s in node.start..node.end {
                    if tree.keys[s as usize] < best.0 || best.1 == NONE {
                        best = (tree.keys[s as usize], s);
                    }
                }
                best
            } else {
                let l = &tree.nodes[node.left as usize];
                let r = &tree.nodes[node.right as usize];
                if l.min_key <= r.min_key {
                    (l.min_key, l.min_item)
                } else {
                    (r.min_key, r.min_item)
                }
            };
            tree.nodes[id].min_key = mk;
            tree.nodes[id].min_item = mi;
        }
        tree
    }

    fn alloc_node(&mut self, start: usize, end: usize) -> usize {
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            left: NONE,
            right: NONE,
            min_key: u64::MAX,
            min_item: NONE,
        });
        self.bounds.extend(std::iter::repeat(0.0).take(2 * self.dim));
        self.nodes.len() - 1
    }

    /// Items in leaf order; nearby items end up close together.
    pub(crate) fn spatial_order(&self) -> &[u32] {
        &self.ids
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    fn point(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    #[inline]
    fn node_lo(&self, id: usize) -> &[f64] {
        &self.bounds[id * 2 * self.dim..id * 2 * self.dim + self.dim]
    }

    #[inline]
    fn node_hi(&self, id: usize) -> &[f64] {
        &self.bounds[id * 2 * self.dim + self.dim..(id + 1) * 2 * self.dim]
    }

    fn min_dist2(&self, id: usize, q: &[f64]) -> f64 {
        let lo = self.node_lo(id);
        let hi = self.node_hi(id);
        let mut s = 0.0;
        for a in 0..self.dim {
            let d = if q[a] < lo[a] {
                lo[a] - q[a]
            } else if q[a] > hi[a] {
                q[a] - hi[a]
            } else {
                0.0
            };
            s += d * d;
        }
        s
    }

    fn max_dist2(&self, id: usize, q: &[f64]) -> f64 {
        let lo = self.node_lo(id);
        let hi = self.node_hi(id);
        let mut s = 0.0;
        for a in 0..self.dim {
            let d = (q[a] - lo[a]).abs().max((hi[a] - q[a]).abs());
            s += d * d;
        }
        s
    }

    fn node_in_box(&self, id: usize, lo: &[f64], hi: &[f64]) -> bool {
        let nl = self.node_lo(id);
        let nh = self.node_hi(id);
        (0..self.dim).all(|a| lo[a] <= nl[a] && nh[a] <= hi[a])
    }

    fn node_meets_box(&self, id: usize, lo: &[f64], hi: &[f64]) -> bool {
        let nl = self.node_lo(id);
        let nh = self.node_hi(id);
        (0..self.dim).all(|a| lo[a] <= nh[a] && nl[a] <= hi[a])
    }

    fn slot_in_box(&self, slot: usize, lo: &[f64], hi: &[f64]) -> bool {
        let p = self.point(slot);
        (0..self.dim).all(|a| lo[a] <= p[a] && p[a] <= hi[a])
    }

    /// Number of items in the closed ball.
    pub(crate) fn count_ball(&self, center: &[f64], radius: f64) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let r2 = radius * radius;
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if self.min_dist2(id, center) > r2 {
                continue;
            }
            let node = &self.nodes[id];
            if self.max_dist2(id, center) <= r2 {
                count += (node.end - node.start) as usize;
            } else if node.left == NONE {
                count += (node.start..node.end)
                    .filter(|&s| crate::geometry::dist2(self.point(s as usize), center) <= r2)
                    .count();
            } else {
                stack.push(node.left as usize);
                stack.push(node.right as usize);
            }
        }
        count
    }

    /// Calls `f(item)` for every item in the closed ball.
    pub(crate) fn for_each_in_ball(&self, center: &[f64], radius: f64, mut f: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if self.min_dist2(id, center) > r2 {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NONE || self.max_dist2(id, center) <= r2 {
                for s in node.start..node.end {
                    let s = s as usize;
                    if crate::geometry::dist2(self.point(s), center) <= r2 {
                        f(self.ids[s] as usize);
                    }
                }
            } else {
                stack.push(node.left as usize);
                stack.push(node.right as usize);
            }
        }
    }

    /// Minimum `(key, item)` among items in the closed box.
    pub(crate) fn min_key_in_box(&self, lo: &[f64], hi: &[f64]) -> Option<(u64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(u64, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if let Some((bk, _)) = best {
                if node.min_key >= bk {
                    continue;
                }
            }
            if !self.node_meets_box(id, lo, hi) {
                continue;
            }
            if self.node_in_box(id, lo, hi) {
                best = Some((node.min_key, node.min_item as usize));
            } else if node.left == NONE {
                for s in node.start..node.end {
                    let s = s as usize;
                    if self.slot_in_box(s, lo, hi) && best.map_or(true, |(bk, _)| self.keys[s] < bk) {
                        best = Some((self.keys[s], s));
                    }
                }
            } else {
                // visit the child with smaller min key first
                let (a, b) = (node.left as usize, node.right as usize);
                if self.nodes[a].min_key <= self.nodes[b].min_key {
                    stack.push(b);
                    stack.push(a);
                } else {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        best.map(|(k, slot)| (k, self.ids[slot] as usize))
    }

    /// Nearest item to `q` (ties by lower item id) among those accepted by
    /// `accept_point`, pruning subtrees for which `may_contain(lo, hi)` is false.
    pub(crate) fn nearest_where(
        &self,
        q: &[f64],
        may_contain: impl Fn(&[f64], &[f64]) -> bool,
        accept_point: impl Fn(usize, &[f64]) -> bool,
    ) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut stack: Vec<(usize, f64)> = vec![(0, self.min_dist2(0, q))];
        while let Some((id, md)) = stack.pop() {
            if let Some((bd, _)) = best {
                if md > bd {
                    continue;
                }
            }
            if !may_contain(self.node_lo(id), self.node_hi(id)) {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NONE {
                for s in node.start..node.end {
                    let s = s as usize;
                    let item = self.ids[s] as usize;
                    let p = self.point(s);
                    let d2 = crate::geometry::dist2(p, q);
                    let better = match best {
                        None => true,
                        Some((bd, bi)) => d2 < bd || (d2 == bd && item < bi),
                    };
                    if better && accept_point(item, p) {
                        best = Some((d2, item));
                    }
                }
            } else {
                let (l, r) = (node.left as usize, node.right as usize);
                let (dl, dr) = (self.min_dist2(l, q), self.min_dist2(r, q));
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        best.map(|(d2, i)| (i, d2.sqrt()))
    }
}
