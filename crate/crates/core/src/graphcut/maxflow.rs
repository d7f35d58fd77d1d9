//! Boykov-Kolmogorov augmenting-path max-flow on integer capacities.
//!
//! Two search trees grow from the terminals; when they touch, the path is
//! augmented and the saturated edges orphan their subtrees, which are then
//! re-adopted or freed. Distance/timestamp marks keep adoption cheap.

use std::collections::VecDeque;

const NO_PARENT: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INFINITE_DISTANCE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

/// Directed graph with paired residual arcs and terminal links.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    // Arcs grouped by tail; node i owns arcs first[i]..first[i + 1].
    first: Vec<u32>,
    head: Vec<u32>,
    sister: Vec<u32>,
    residual: Vec<i64>,
    // Positive: residual capacity from the source; negative: to the sink.
    terminal: Vec<i64>,
    flow: i64,
}

impl FlowGraph {
    /// Builds a graph with the given terminal capacities and undirected
    /// `(p, q, capacity)` edges, each usable in both directions.
    pub fn new(source_cap: &[i64], sink_cap: &[i64], edges: &[(usize, usize, i64)]) -> Self {
        let n = source_cap.len();
        assert_eq!(n, sink_cap.len());
        let mut degree = vec![0u32; n + 1];
        for &(p, q, _) in edges {
            degree[p] += 1;
            degree[q] += 1;
        }
        let mut first = vec![0u32; n + 1];
        for i in 0..n {
            first[i + 1] = first[i] + degree[i];
        }
        let m = first[n] as usize;
        let mut fill = first.clone();
        let mut head = vec![0u32; m];
        let mut sister = vec![0u32; m];
        let mut residual = vec![0i64; m];
        for &(p, q, c) in edges {
            let a = fill[p] as usize;
            fill[p] += 1;
            let b = fill[q] as usize;
            fill[q] += 1;
            head[a] = q as u32;
            head[b] = p as u32;
            sister[a] = b as u32;
            sister[b] = a as u32;
            residual[a] = c;
            residual[b] = c;
        }
        let mut flow = 0i64;
        let terminal = source_cap
            .iter()
            .zip(sink_cap)
            .map(|(&s, &t)| {
                flow += s.min(t);
                s - t
            })
            .collect();
        Self {
            first,
            head,
            sister,
            residual,
            terminal,
            flow,
        }
    }

    pub fn node_count(&self) -> usize {
        self.terminal.len()
    }

    /// Runs max-flow. Returns the flow value (including the trivially
    /// saturated `min(source, sink)` part of each terminal pair) and the
    /// source-side membership of every node.
    pub fn solve(mut self) -> (i64, Vec<bool>) {
        let tree = Solver::new(&mut self).run();
        (self.flow, tree.into_iter().map(|t| t == Tree::Source).collect())
    }
}

struct Solver<'g> {
    g: &'g mut FlowGraph,
    tree: Vec<Tree>,
    parent: Vec<u32>,
    timestamp: Vec<u32>,
    distance: Vec<u32>,
    in_queue: Vec<bool>,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u32,
}

impl<'g> Solver<'g> {
    fn new(g: &'g mut FlowGraph) -> Self {
        let n = g.node_count();
        let mut s = Self {
            g,
            tree: vec![Tree::Free; n],
            parent: vec![NO_PARENT; n],
            timestamp: vec![0; n],
            distance: vec![0; n],
            in_queue: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
        };
        for i in 0..n {
            let t = s.g.terminal[i];
            if t != 0 {
                s.tree[i] = if t > 0 { Tree::Source } else { Tree::Sink };
                s.parent[i] = TERMINAL;
                s.distance[i] = 1;
                s.set_active(i as u32);
            }
        }
        s
    }

    #[inline]
    fn arcs(&self, i: usize) -> std::ops::Range<usize> {
        self.g.first[i] as usize..self.g.first[i + 1] as usize
    }

    fn set_active(&mut self, i: u32) {
        if !self.in_queue[i as usize] {
            self.in_queue[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.in_queue[i as usize] = false;
            if self.parent[i as usize] != NO_PARENT {
                return Some(i as usize);
            }
        }
        None
    }

    fn run(mut self) -> Vec<Tree> {
        let mut current: Option<usize> = None;
        loop {
            let i = match current.filter(|&c| self.parent[c] != NO_PARENT) {
                Some(c) => c,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let bridge = self.grow(i);
            self.time += 1;
            match bridge {
                Some(a) => {
                    current = Some(i);
                    self.augment(a);
                    self.adopt_orphans();
                }
                None => current = None,
            }
        }
        self.tree
    }

    /// Extends the tree of `i` by one layer. Returns an arc leading from the
    /// source tree into the sink tree if the trees touch.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let from_source = self.tree[i] == Tree::Source;
        for a in self.arcs(i) {
            let j = self.g.head[a] as usize;
            let sis = self.g.sister[a] as usize;
            // Capacity in the direction flow would travel.
            let cap = if from_source {
                self.g.residual[a]
            } else {
                self.g.residual[sis]
            };
            if cap == 0 {
                continue;
            }
            if self.parent[j] == NO_PARENT {
                self.tree[j] = self.tree[i];
                self.parent[j] = sis as u32;
                self.timestamp[j] = self.timestamp[i];
                self.distance[j] = self.distance[i] + 1;
                self.set_active(j as u32);
            } else if self.tree[j] != self.tree[i] {
                return Some(if from_source { a } else { sis });
            } else if self.timestamp[j] <= self.timestamp[i] && self.distance[j] > self.distance[i] {
                self.parent[j] = sis as u32;
                self.timestamp[j] = self.timestamp[i];
                self.distance[j] = self.distance[i] + 1;
            }
        }
        None
    }

    fn set_orphan(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_back(i as u32);
    }

    /// Pushes the bottleneck along source -> ... -> bridge -> ... -> sink.
    fn augment(&mut self, bridge: usize) {
        let g = &*self.g;
        let tail = g.head[g.sister[bridge] as usize] as usize;
        let head = g.head[bridge] as usize;

        let mut bottleneck = g.residual[bridge];
        let mut u = tail;
        loop {
            let a = self.parent[u];
            if a == TERMINAL {
                bottleneck = bottleneck.min(g.terminal[u]);
                break;
            }
            let a = a as usize;
            bottleneck = bottleneck.min(g.residual[g.sister[a] as usize]);
            u = g.head[a] as usize;
        }
        let mut u = head;
        loop {
            let a = self.parent[u];
            if a == TERMINAL {
                bottleneck = bottleneck.min(-g.terminal[u]);
                break;
            }
            let a = a as usize;
            bottleneck = bottleneck.min(g.residual[a]);
            u = g.head[a] as usize;
        }
        debug_assert!(bottleneck > 0);

        let sis = self.g.sister[bridge] as usize;
        self.g.residual[bridge] -= bottleneck;
        self.g.residual[sis] += bottleneck;

        let mut u = tail;
        loop {
            let a = self.parent[u];
            if a == TERMINAL {
                self.g.terminal[u] -= bottleneck;
                if self.g.terminal[u] == 0 {
                    self.set_orphan(u);
                }
                break;
            }
            let a = a as usize;
            let s = self.g.sister[a] as usize;
            self.g.residual[a] += bottleneck;
            self.g.residual[s] -= bottleneck;
            let next = self.g.head[a] as usize;
            if self.g.residual[s] == 0 {
                self.set_orphan(u);
            }
            u = next;
        }
        let mut u = head;
        loop {
            let a = self.parent[u];
            if a == TERMINAL {
                self.g.terminal[u] += bottleneck;
                if self.g.terminal[u] == 0 {
                    self.set_orphan(u);
                }
                break;
            }
            let a = a as usize;
            let s = self.g.sister[a] as usize;
            self.g.residual[s] += bottleneck;
            self.g.residual[a] -= bottleneck;
            let next = self.g.head[a] as usize;
            if self.g.residual[a] == 0 {
                self.set_orphan(u);
            }
            u = next;
        }
        self.g.flow += bottleneck;
    }

    fn adopt_orphans(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i as usize);
        }
    }

    fn process_orphan(&mut self, i: usize) {
        let in_source = self.tree[i] == Tree::Source;
        let mut best_arc = NO_PARENT;
        let mut best_distance = INFINITE_DISTANCE;

        for a0 in self.arcs(i) {
            let s0 = self.g.sister[a0] as usize;
            let cap = if in_source {
                self.g.residual[s0]
            } else {
                self.g.residual[a0]
            };
            if cap == 0 {
                continue;
            }
            let j = self.g.head[a0] as usize;
            if self.tree[j] != self.tree[i] || self.parent[j] == NO_PARENT {
                continue;
            }
            // Walk to the root to check that j still hangs off a terminal.
            let mut d = 0u32;
            let mut k = j;
            loop {
                if self.timestamp[k] == self.time {
                    d += self.distance[k];
                    break;
                }
                let a = self.parent[k];
                d += 1;
                if a == TERMINAL {
                    self.timestamp[k] = self.time;
                    self.distance[k] = 1;
                    break;
                }
                if a == ORPHAN {
                    d = INFINITE_DISTANCE;
                    break;
                }
                k = self.g.head[a as usize] as usize;
            }
            if d == INFINITE_DISTANCE {
                continue;
            }
            if d < best_distance {
                best_arc = a0 as u32;
                best_distance = d;
            }
            let mut k = j;
            let mut dk = d;
            while self.timestamp[k] != self.time {
                self.timestamp[k] = self.time;
                self.distance[k] = dk;
                dk -= 1;
                k = self.g.head[self.parent[k] as usize] as usize;
            }
        }

        if best_arc != NO_PARENT {
            self.parent[i] = best_arc;
            self.timestamp[i] = self.time;
            self.distance[i] = best_distance + 1;
            return;
        }

        // No valid parent: free the node, wake neighbours that could regrow
        // into it, and orphan its children.
        for a0 in self.arcs(i) {
            let j = self.g.head[a0] as usize;
            if self.tree[j] != self.tree[i] || self.parent[j] == NO_PARENT {
                continue;
            }
            let s0 = self.g.sister[a0] as usize;
            let cap = if in_source {
                self.g.residual[s0]
            } else {
                self.g.residual[a0]
            };
            if cap > 0 {
                self.set_active(j as u32);
            }
            let pj = self.parent[j];
            if pj != TERMINAL && pj != ORPHAN && self.g.head[pj as usize] as usize == i {
                self.set_orphan(j);
            }
        }
        self.tree[i] = Tree::Free;
        self.parent[i] = NO_PARENT;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_chain() {
        // s -5-> 0 -3- 1 -4-> t
        let g = FlowGraph::new(&[5, 0], &[0, 4], &[(0, 1, 3)]);
        let (flow, side) = g.solve();
        assert_eq!(flow, 3);
        assert_eq!(side, vec![true, false]);
    }

    #[test]
    fn terminal_pairs_count_towards_flow() {
        let g = FlowGraph::new(&[7, 2], &[3, 9], &[]);
        let (flow, side) = g.solve();
        assert_eq!(flow, 5);
        assert_eq!(side, vec![true, false]);
    }

    #[test]
    fn classic_diamond() {
        // Undirected edges; max flow limited by the middle cut.
        let g = FlowGraph::new(
            &[10, 10, 0, 0],
            &[0, 0, 10, 10],
            &[(0, 2, 4), (1, 3, 3), (0, 1, 1), (2, 3, 1)],
        );
        let (flow, side) = g.solve();
        assert_eq!(flow, 7);
        assert_eq!(side, vec![true, true, false, false]);
    }
}
