//! Exact k-d tree under the max-norm.
//!
//! Supports the two queries the KSG estimators need: the distance to the
//! k-th nearest point and the number of points strictly inside a radius.
//! Both are exact; pruning only uses bounding-box distances, which are
//! monotone bounds on the per-point distances in floating point.

/// Row-major point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    /// Interleaves column slices into rows. All columns must share a length.
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let dim = columns.len();
        assert!(dim > 0, "point set needs at least one coordinate");
        let n = columns[0].len();
        let mut data = Vec::with_capacity(n * dim);
        for t in 0..n {
            for c in columns {
                data.push(c[t]);
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        assert!(dim > 0, "point set needs at least one coordinate");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        let d = (x - y).abs();
        if d > m {
            d
        } else {
            m
        }
    })
}

const LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    /// Index of the left child; the right child follows its subtree. `0` marks a leaf.
    left: usize,
    right: usize,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    /// Points permuted into node order.
    coords: Vec<f64>,
    nodes: Vec<Node>,
    /// `2 * dim` per node: lower corner then upper corner.
    bounds: Vec<f64>,
    /// Original index of the point in each slot.
    order: Vec<usize>,
}

/// Dispatches to a copy of `$f` whose dimension is a compile-time constant
/// for the common small dimensions (`0` falls back to the runtime value).
macro_rules! by_dim {
    ($self:expr, $f:ident($($arg:expr),*)) => {
        match $self.dim {
            1 => $self.$f::<1>($($arg),*),
            2 => $self.$f::<2>($($arg),*),
            3 => $self.$f::<3>($($arg),*),
            4 => $self.$f::<4>($($arg),*),
            5 => $self.$f::<5>($($arg),*),
            6 => $self.$f::<6>($($arg),*),
            _ => $self.$f::<0>($($arg),*),
        }
    };
}

impl KdTree {
    pub fn new(points: &PointSet) -> Self {
        let dim = points.dim;
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut tree = Self {
            dim,
            coords: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            bounds: Vec::with_capacity((2 * n / LEAF_SIZE + 1) * 2 * dim),
            order: Vec::new(),
        };
        if n > 0 {
            tree.build(points, &mut order, 0, n);
        }
        tree.coords = order
            .iter()
            .flat_map(|&i| points.point(i).iter().copied())
            .collect();
        tree.order = order;
        tree
    }

    /// Original indices in slot order. Consecutive slots are spatially close,
    /// so querying the tree's own points in this order keeps caches warm.
    pub fn slot_order(&self) -> &[usize] {
        &self.order
    }

    #[inline(always)]
    fn d<const D: usize>(&self) -> usize {
        if D == 0 {
            self.dim
        } else {
            D
        }
    }

    fn build(&mut self, points: &PointSet, order: &mut [usize], start: usize, end: usize) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: 0,
            right: 0,
        });
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &order[start..end] {
            for (d, v) in points.point(i).iter().enumerate() {
                lo[d] = lo[d].min(*v);
                hi[d] = hi[d].max(*v);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start > LEAF_SIZE {
            let split_dim = (0..dim)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            if hi[split_dim] > lo[split_dim] {
                let mid = (end - start) / 2;
                order[start..end].select_nth_unstable_by(mid, |&a, &b| {
                    points.point(a)[split_dim].total_cmp(&points.point(b)[split_dim])
                });
                let left = self.build(points, order, start, start + mid);
                let right = self.build(points, order, start + mid, end);
                self.nodes[id].left = left;
                self.nodes[id].right = right;
            }
        }
        id
    }

    #[inline(always)]
    fn point<const D: usize>(&self, slot: usize) -> &[f64] {
        let d = self.d::<D>();
        &self.coords[slot * d..(slot + 1) * d]
    }

    #[inline(always)]
    fn dist<const D: usize>(&self, slot: usize, q: &[f64]) -> f64 {
        let p = self.point::<D>(slot);
        let mut m = 0.0f64;
        for k in 0..self.d::<D>() {
            let v = (p[k] - q[k]).abs();
            if v > m {
                m = v;
            }
        }
        m
    }

    /// Smallest max-norm distance from `q` to the node's box.
    #[inline(always)]
    fn min_dist<const D: usize>(&self, node: usize, q: &[f64]) -> f64 {
        let d = self.d::<D>();
        let b = &self.bounds[node * 2 * d..(node + 1) * 2 * d];
        let (lo, hi) = b.split_at(d);
        let mut m = 0.0f64;
        for k in 0..d {
            let v = if q[k] < lo[k] {
                lo[k] - q[k]
            } else if q[k] > hi[k] {
                q[k] - hi[k]
            } else {
                0.0
            };
            if v > m {
                m = v;
            }
        }
        m
    }

    /// Largest max-norm distance from `q` to any point of the node's box.
    #[inline(always)]
    fn max_dist<const D: usize>(&self, node: usize, q: &[f64]) -> f64 {
        let d = self.d::<D>();
        let b = &self.bounds[node * 2 * d..(node + 1) * 2 * d];
        let (lo, hi) = b.split_at(d);
        let mut m = 0.0f64;
        for k in 0..d {
            let v = (q[k] - lo[k]).abs().max((hi[k] - q[k]).abs());
            if v > m {
                m = v;
            }
        }
        m
    }

    /// Distance from `q` to its `k`-th nearest tree point (the point itself
    /// counts if it belongs to the tree).
    pub fn kth_distance(&self, q: &[f64], k: usize) -> f64 {
        assert!(k >= 1 && k <= self.len(), "k out of range");
        assert_eq!(q.len(), self.dim, "query dimension");
        let mut best = vec![f64::INFINITY; k];
        by_dim!(self, knn_rec(0, q, &mut best));
        best[k - 1]
    }

    fn knn_rec<const D: usize>(&self, node: usize, q: &[f64], best: &mut [f64]) {
        let n = &self.nodes[node];
        let worst = best.len() - 1;
        if n.left == 0 {
            for slot in n.start..n.end {
                let d = self.dist::<D>(slot, q);
                if d < best[worst] {
                    let mut i = worst;
                    while i > 0 && best[i - 1] > d {
                        best[i] = best[i - 1];
                        i -= 1;
                    }
                    best[i] = d;
                }
            }
            return;
        }
        let (l, r) = (n.left, n.right);
        let dl = self.min_dist::<D>(l, q);
        let dr = self.min_dist::<D>(r, q);
        let (first, df, second, ds) = if dl <= dr { (l, dl, r, dr) } else { (r, dr, l, dl) };
        if df < best[worst] {
            self.knn_rec::<D>(first, q, best);
        }
        if ds < best[worst] {
            self.knn_rec::<D>(second, q, best);
        }
    }

    /// Number of tree points at max-norm distance strictly below `radius`.
    pub fn count_within(&self, q: &[f64], radius: f64) -> usize {
        if self.nodes.is_empty() || !(radius > 0.0) {
            return 0;
        }
        assert_eq!(q.len(), self.dim, "query dimension");
        by_dim!(self, count_rec(0, q, radius))
    }

    fn count_rec<const D: usize>(&self, node: usize, q: &[f64], radius: f64) -> usize {
        if self.min_dist::<D>(node, q) >= radius {
            return 0;
        }
        let n = &self.nodes[node];
        if self.max_dist::<D>(node, q) < radius {
            return n.end - n.start;
        }
        if n.left == 0 {
            return (n.start..n.end)
                .filter(|&slot| self.dist::<D>(slot, q) < radius)
                .count();
        }
        self.count_rec::<D>(n.left, q, radius) + self.count_rec::<D>(n.right, q, radius)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}
