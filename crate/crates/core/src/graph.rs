use crate::geometry::{dist, PointSet};

/// Simple undirected geometric graph in compressed adjacency form.
/// Edge weights are the Euclidean lengths of their endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    adj: Vec<(u32, f64)>,
}

impl Graph {
    /// Graph on `points` with the given edges. Self-loops are dropped and
    /// parallel edges merged.
    pub fn from_edges(points: &PointSet, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = points.len();
        let mut list: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|&(u, w)| u != w)
            .map(|(u, w)| {
                assert!(u < n && w < n, "edge ({u}, {w}) out of range for {n} vertices");
                (u.min(w) as u32, u.max(w) as u32)
            })
            .collect();
        list.sort_unstable();
        list.dedup();

        let mut degree = vec![0usize; n + 1];
        for &(u, w) in &list {
            degree[u as usize] += 1;
            degree[w as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0.0f64); 2 * list.len()];
        for &(u, w) in &list {
            let len = dist(points.point(u as usize), points.point(w as usize));
            adj[fill[u as usize]] = (w, len);
            fill[u as usize] += 1;
            adj[fill[w as usize]] = (u, len);
            fill[w as usize] += 1;
        }
        Self { offsets, adj }
    }

    /// Complete graph on `points`.
    pub fn complete(points: &PointSet) -> Self {
        let n = points.len();
        Self::from_edges(points, (0..n).flat_map(move |u| (u + 1..n).map(move |w| (u, w))))
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[(u32, f64)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Each edge once as `(u, w, weight)` with `u < w`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&(w, _)| (w as usize) > u)
                .map(move |&(w, len)| (u, w as usize, len))
        })
    }

    pub fn has_edge(&self, u: usize, w: usize) -> bool {
        self.neighbors(u).iter().any(|&(x, _)| x as usize == w)
    }

    pub fn total_length(&self) -> f64 {
        self.edges().map(|(_, _, len)| len).sum()
    }

    /// Whether every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w as usize);
                }
            }
        }
        count == n
    }
}
