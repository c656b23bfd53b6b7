//! Exact nearest-neighbor queries over 2-D points with incremental insertion.
//!
//! An unbalanced k-d tree alternating split axes by depth. Queries accept a
//! filter over node ids so callers can hide entries (invalidated tree nodes)
//! without rebuilding. Distances are compared squared and ties are broken by
//! the smaller id, which makes results independent of insertion order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{distance_sq, Point};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEntry {
    pub node_id: NodeId,
    pub position: Point,
}

#[derive(Debug, Clone)]
struct KdNode {
    entry: IndexEntry,
    axis: u8,
    left: Option<u32>,
    right: Option<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct KdIndex {
    nodes: Vec<KdNode>,
    ids: HashSet<NodeId>,
}

/// Ordering key for a candidate: squared distance, then id.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    slot: u32,
    id: NodeId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn insert(&mut self, e: IndexEntry) -> Result<()> {
        if !self.ids.insert(e.node_id) {
            return Err(Error::DuplicateId(e.node_id));
        }
        let slot = self.nodes.len() as u32;
        let mut axis = 0u8;
        if !self.nodes.is_empty() {
            let mut cur = 0usize;
            loop {
                let node = &self.nodes[cur];
                let a = node.axis as usize;
                let go_left = e.position.coord(a) < node.entry.position.coord(a);
                let next = if go_left { node.left } else { node.right };
                match next {
                    Some(n) => cur = n as usize,
                    None => {
                        axis = 1 - node.axis;
                        let node = &mut self.nodes[cur];
                        if go_left {
                            node.left = Some(slot);
                        } else {
                            node.right = Some(slot);
                        }
                        break;
                    }
                }
            }
        }
        self.nodes.push(KdNode {
            entry: e,
            axis,
            left: None,
            right: None,
        });
        Ok(())
    }

    /// The closest entry passing `filter`.
    pub fn nearest<F>(&self, q: Point, filter: F) -> Result<IndexEntry>
    where
        F: Fn(NodeId) -> bool,
    {
        self.k_nearest(q, 1, filter)
            .into_iter()
            .next()
            .ok_or(Error::EmptyAfterFilter)
    }

    /// Up to `k` entries passing `filter`, ascending by distance then id.
    pub fn k_nearest<F>(&self, q: Point, k: usize, filter: F) -> Vec<IndexEntry>
    where
        F: Fn(NodeId) -> bool,
    {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        // (slot, lower bound on squared distance of anything in the subtree)
        let mut stack: Vec<(u32, f64)> = vec![(0, 0.0)];
        while let Some((slot, bound)) = stack.pop() {
            if best.len() == k && bound > best.peek().map_or(f64::INFINITY, |c| c.d2) {
                continue;
            }
            let node = &self.nodes[slot as usize];
            let e = node.entry;
            if filter(e.node_id) {
                let c = Candidate {
                    d2: distance_sq(e.position, q),
                    slot,
                    id: e.node_id,
                };
                if best.len() < k {
                    best.push(c);
                } else if c < *best.peek().unwrap() {
                    best.pop();
                    best.push(c);
                }
            }
            let a = node.axis as usize;
            let diff = q.coord(a) - e.position.coord(a);
            let plane = diff * diff;
            let (near, far) = if diff < 0.0 {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            // far side first on the stack so the near side is searched first
            if let Some(f) = far {
                stack.push((f, bound.max(plane)));
            }
            if let Some(n) = near {
                stack.push((n, bound));
            }
        }
        let mut out = best.into_vec();
        out.sort_unstable();
        out.into_iter()
            .map(|c| self.nodes[c.slot as usize].entry)
            .collect()
    }
}
