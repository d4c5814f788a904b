//! Network-flow helpers: real-capacity max-flow (Dinic) for Strassen
//! feasibility and integer min-cost flow for transport problems.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// Residual capacities below this are treated as saturated.
const CAP_EPS: f64 = 1e-18;

struct Arc {
    to: usize,
    cap: f64,
}

pub(crate) struct MaxFlow {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            next: vec![0; nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap > CAP_EPS && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let a = self.adj[u][self.next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > CAP_EPS && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.arcs[a].cap -= got;
                    self.arcs[a ^ 1].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    pub fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual network.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap > CAP_EPS && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

struct CostArc {
    to: usize,
    cap: u64,
    cost: i64,
}

/// Minimum total cost of moving `supply` onto `demand` (equal totals) with
/// per-unit cost `cost(i, j) >= 0`. Successive shortest paths with
/// Dijkstra potentials; exact on integers.
pub(crate) fn min_cost_transport(
    supply: &[u64],
    demand: &[u64],
    cost: impl Fn(usize, usize) -> i64,
) -> u128 {
    let (na, nb) = (supply.len(), demand.len());
    let s = na + nb;
    let t = s + 1;
    let nodes = t + 1;
    let mut arcs: Vec<CostArc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |arcs: &mut Vec<CostArc>, u: usize, v: usize, cap: u64, c: i64| {
        adj[u].push(arcs.len());
        arcs.push(CostArc { to: v, cap, cost: c });
        adj[v].push(arcs.len());
        arcs.push(CostArc {
            to: u,
            cap: 0,
            cost: -c,
        });
    };
    for (i, &a) in supply.iter().enumerate() {
        if a > 0 {
            add(&mut arcs, s, i, a, 0);
        }
    }
    for (j, &b) in demand.iter().enumerate() {
        if b > 0 {
            add(&mut arcs, na + j, t, b, 0);
        }
    }
    for (i, &a) in supply.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for (j, &b) in demand.iter().enumerate() {
            if b > 0 {
                add(&mut arcs, i, na + j, u64::MAX, cost(i, j));
            }
        }
    }

    let mut potential = vec![0i64; nodes];
    let mut total: u128 = 0;
    let mut dist = vec![i64::MAX; nodes];
    let mut via = vec![usize::MAX; nodes];
    loop {
        dist.iter_mut().for_each(|d| *d = i64::MAX);
        dist[s] = 0;
        let mut heap = BinaryHeap::from([Reverse((0i64, s))]);
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &a in &adj[u] {
                let arc = &arcs[a];
                if arc.cap == 0 {
                    continue;
                }
                let nd = d + arc.cost + potential[u] - potential[arc.to];
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    via[arc.to] = a;
                    heap.push(Reverse((nd, arc.to)));
                }
            }
        }
        if dist[t] == i64::MAX {
            break;
        }
        for v in 0..nodes {
            if dist[v] < i64::MAX {
                potential[v] += dist[v];
            }
        }
        let mut push = u64::MAX;
        let mut v = t;
        while v != s {
            let a = via[v];
            push = push.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = t;
        let mut path_cost: i64 = 0;
        while v != s {
            let a = via[v];
            arcs[a].cap -= push;
            if arcs[a ^ 1].cap != u64::MAX {
                arcs[a ^ 1].cap += push;
            }
            path_cost += arcs[a].cost;
            v = arcs[a ^ 1].to;
        }
        total += push as u128 * path_cost as u128;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_flow_small() {
        let mut f = MaxFlow::new(4);
        f.add_edge(0, 1, 0.5);
        f.add_edge(0, 2, 0.5);
        f.add_edge(1, 3, 0.3);
        f.add_edge(2, 3, 1.0);
        f.add_edge(1, 2, f64::INFINITY);
        assert!((f.run(0, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transport_matches_hand_solutions() {
        // identical laws cost nothing
        assert_eq!(min_cost_transport(&[3, 5], &[3, 5], |i, j| (i != j) as i64), 0);
        // two points swapped with unit cost
        assert_eq!(min_cost_transport(&[4, 0], &[0, 4], |i, j| (i != j) as i64), 4);
        // needs a rerouting through a reverse arc
        let c = [[1, 2], [1, 10]];
        assert_eq!(
            min_cost_transport(&[1, 1], &[1, 1], |i, j| c[i][j]),
            2 + 1
        );
    }
}
