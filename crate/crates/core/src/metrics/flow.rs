//! Small dense flow solvers on real capacities.

const EPS: f64 = 1e-15;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Residual graph shared by the max-flow and min-cost-flow routines.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph { edges: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0.0, cost: -cost });
    }

    fn nodes(&self) -> usize {
        self.adj.len()
    }

    /// Dinic's algorithm. Residuals below `tol` count as saturated.
    pub fn max_flow(&mut self, s: usize, t: usize, tol: f64) -> f64 {
        let n = self.nodes();
        let mut total = 0.0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.adj[u] {
                    let Edge { to, cap, .. } = self.edges[e];
                    if cap > tol && level[to] == usize::MAX {
                        level[to] = level[u] + 1;
                        queue.push_back(to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.dfs(s, t, f64::INFINITY, &level, &mut it, tol);
                if f <= tol {
                    break;
                }
                total += f;
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: f64, level: &[usize], it: &mut [usize], tol: f64) -> f64 {
        if u == t {
            return limit;
        }
        while it[u] < self.adj[u].len() {
            let e = self.adj[u][it[u]];
            let Edge { to, cap, .. } = self.edges[e];
            if cap > tol && level[to] == level[u] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap), level, it, tol);
                if pushed > tol {
                    self.edges[e].cap -= pushed;
                    self.edges[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    /// Successive shortest paths with Johnson potentials and a dense Dijkstra.
    /// All original costs must be nonnegative. Returns `(flow, cost)`.
    pub fn min_cost_flow(&mut self, s: usize, t: usize, demand: f64) -> (f64, f64) {
        let n = self.nodes();
        let mut pot = vec![0.0f64; n];
        let mut flow = 0.0;
        let mut cost = 0.0;
        let tol = EPS * demand.max(1.0) * 16.0;
        while flow < demand - tol {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev = vec![usize::MAX; n];
            let mut done = vec![false; n];
            dist[s] = 0.0;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..n {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    let Edge { to, cap, cost: c } = self.edges[e];
                    if cap > tol && !done[to] {
                        // float drift can make reduced costs marginally negative
                        let reduced = (c + pot[u] - pot[to]).max(0.0);
                        if dist[u] + reduced < dist[to] {
                            dist[to] = dist[u] + reduced;
                            prev[to] = e;
                        }
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            let mut push = demand - flow;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                cost += push * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
        }
        (flow, cost)
    }
}

/// Optimal transport cost between weight vectors `a` and `b` (equal totals) under `cost[i][j]`.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let s = m + n;
    let t = s + 1;
    let mut g = FlowGraph::new(m + n + 2);
    for (i, &w) in a.iter().enumerate() {
        g.add_edge(s, i, w, 0.0);
    }
    for (j, &w) in b.iter().enumerate() {
        g.add_edge(m + j, t, w, 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            g.add_edge(i, m + j, f64::INFINITY, cost(i, j));
        }
    }
    let demand = a.iter().sum::<f64>().min(b.iter().sum());
    g.min_cost_flow(s, t, demand).1
}

/// Largest mass of `a` that can be matched into `b` along the allowed pairs.
pub fn bipartite_max_flow(a: &[f64], b: &[f64], allowed: &dyn Fn(usize, usize) -> bool) -> f64 {
    let (m, n) = (a.len(), b.len());
    let s = m + n;
    let t = s + 1;
    let mut g = FlowGraph::new(m + n + 2);
    for (i, &w) in a.iter().enumerate() {
        g.add_edge(s, i, w, 0.0);
    }
    for (j, &w) in b.iter().enumerate() {
        g.add_edge(m + j, t, w, 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            if allowed(i, j) {
                g.add_edge(i, m + j, f64::INFINITY, 0.0);
            }
        }
    }
    let scale = a.iter().chain(b).fold(0.0f64, |acc, w| acc.max(*w));
    g.max_flow(s, t, EPS * scale.max(1e-300) * 16.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_on_a_line() {
        // 1-d optimum is the monotone coupling
        let a = [0.5, 0.5];
        let b = [0.25, 0.75];
        let xa = [0.0f64, 1.0];
        let xb = [0.5, 2.0];
        let c = transport_cost(&a, &b, &|i, j| (xa[i] - xb[j]).abs());
        assert!((c - (0.25 * 0.5 + 0.25 * 2.0 + 0.5 * 1.0)).abs() < 1e-14);
    }

    #[test]
    fn transport_assignment() {
        // brute force over the 6 permutations
        let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms.iter().map(|p| (0..3).map(|i| cost[i][p[i]]).sum::<f64>()).fold(f64::INFINITY, f64::min);
        let c = transport_cost(&[1.0; 3], &[1.0; 3], &|i, j| cost[i][j]);
        assert!((c - best).abs() < 1e-12);
    }

    #[test]
    fn max_flow_deficiency() {
        let m = bipartite_max_flow(&[0.5, 0.5], &[1.0, 0.0], &|i, j| i == j);
        assert!((m - 0.5).abs() < 1e-15);
    }
}
