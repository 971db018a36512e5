use nalgebra::Vector3;

use crate::scalar::Real;

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, index: usize, left: usize, right: usize },
}

/// Static 3-d tree over a point set for exact nearest-neighbor queries.
pub struct KdTree<T: Real> {
    points: Vec<Vector3<T>>,
    /// Point indices, permuted so every subtree owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 8;

impl<T: Real> KdTree<T> {
    pub fn new(points: &[Vector3<T>]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len(), 0);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end).unwrap_or(depth % 3);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |a, b| {
            points[*a][axis].partial_cmp(&points[*b][axis]).unwrap_or(std::cmp::Ordering::Equal)
        });
        self.nodes.push(Node::Split {
            axis,
            index: self.order[mid],
            left: 0,
            right: 0,
        });
        let left = self.build(start, mid, depth + 1);
        let right = self.build(mid + 1, end, depth + 1);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> Option<usize> {
        let mut lo = self.points[self.order[start]];
        let mut hi = lo;
        for i in &self.order[start..end] {
            let p = &self.points[*i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = hi - lo;
        (0..3).max_by(|a, b| extent[*a].partial_cmp(&extent[*b]).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Index of and squared distance to the point nearest `query`. Ties go to
    /// whichever equidistant point is visited first.
    pub fn nearest(&self, query: &Vector3<T>) -> Option<(usize, T)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, T::lit(f64::INFINITY));
        self.search(0, query, &mut best);
        Some(best)
    }

    fn visit(&self, i: usize, query: &Vector3<T>, best: &mut (usize, T)) {
        let d = (self.points[i] - query).norm_squared();
        if d < best.1 {
            *best = (i, d);
        }
    }

    fn search(&self, node: usize, query: &Vector3<T>, best: &mut (usize, T)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for k in start..end {
                    self.visit(self.order[k], query, best);
                }
            }
            Node::Split { axis, index, left, right } => {
                self.visit(index, query, best);
                let delta = query[axis] - self.points[index][axis];
                let (near, far) = if delta < T::zero() { (left, right) } else { (right, left) };
                self.search(near, query, best);
                if delta * delta <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}
