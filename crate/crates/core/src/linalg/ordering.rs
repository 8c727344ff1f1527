//! Fill-reducing symmetric ordering by recursive level-set nested dissection.
//!
//! The graph of `A + A^T` is bisected with a breadth-first level structure
//! rooted at a pseudo-peripheral vertex. The middle level (trimmed to the
//! vertices that actually touch the far side) is the separator and is
//! numbered after both halves.

use std::collections::VecDeque;

/// Subgraphs at or below this size are numbered in BFS order.
const LEAF_SIZE: usize = 64;

/// Symmetric adjacency (no self loops) of the pattern of `A + A^T`, given
/// CSR row pointers and column indices of `A`.
pub fn symmetric_adjacency(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    /// Subgraph stamp of each vertex; only vertices carrying the current
    /// stamp are visible to a traversal.
    owner: Vec<usize>,
    level: Vec<usize>,
    next_stamp: usize,
    order: Vec<usize>,
}

impl<'a> Dissector<'a> {
    fn stamp(&mut self, verts: &[usize]) -> usize {
        self.next_stamp += 1;
        for &v in verts {
            self.owner[v] = self.next_stamp;
        }
        self.next_stamp
    }

    /// BFS restricted to `stamp`; returns visit order and fills `level`.
    fn bfs(&mut self, root: usize, stamp: usize) -> Vec<usize> {
        let mut seen = Vec::new();
        let mut queue = VecDeque::new();
        self.level[root] = 0;
        // Mark visited by bumping the owner out of the stamp range.
        self.owner[root] = usize::MAX;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            seen.push(v);
            for &w in &self.adj[v] {
                if self.owner[w] == stamp {
                    self.owner[w] = usize::MAX;
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for &v in &seen {
            self.owner[v] = stamp;
        }
        seen
    }

    fn dissect(&mut self, verts: Vec<usize>) {
        if verts.is_empty() {
            return;
        }
        let stamp = self.stamp(&verts);
        let first = self.bfs(verts[0], stamp);
        if first.len() < verts.len() {
            // Disconnected: split off the component just found.
            let rest: Vec<usize> = {
                let mut in_comp = std::collections::HashSet::with_capacity(first.len());
                in_comp.extend(first.iter().copied());
                verts.into_iter().filter(|v| !in_comp.contains(v)).collect()
            };
            self.dissect(first);
            self.dissect(rest);
            return;
        }
        if verts.len() <= LEAF_SIZE {
            self.order.extend(first);
            return;
        }
        // Two sweeps towards a pseudo-peripheral root.
        let far = *first.last().unwrap();
        let second = self.bfs(far, stamp);
        let root = *second.last().unwrap();
        let levels_order = self.bfs(root, stamp);
        let depth = self.level[*levels_order.last().unwrap()];
        if depth < 2 {
            self.order.extend(levels_order);
            return;
        }
        // Middle level by vertex count.
        let mut count = vec![0usize; depth + 1];
        for &v in &levels_order {
            count[self.level[v]] += 1;
        }
        let half = verts.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, &c) in count.iter().enumerate() {
            acc += c;
            if acc >= half {
                mid = l.clamp(1, depth - 1);
                break;
            }
        }
        let mut near = Vec::new();
        let mut far_side = Vec::new();
        let mut sep = Vec::new();
        for &v in &levels_order {
            let l = self.level[v];
            if l < mid {
                near.push(v);
            } else if l > mid {
                far_side.push(v);
            } else {
                let touches_far = self.adj[v]
                    .iter()
                    .any(|&w| self.owner[w] == stamp && self.level[w] == mid + 1);
                if touches_far {
                    sep.push(v);
                } else {
                    near.push(v);
                }
            }
        }
        self.dissect(near);
        self.dissect(far_side);
        self.order.extend(sep);
    }
}

/// Returns a permutation `perm` (new position -> old index).
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut d = Dissector {
        adj,
        owner: vec![0; n],
        level: vec![0; n],
        next_stamp: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    debug_assert_eq!(d.order.len(), n);
    d.order
}
