//! Feasibility of a transportation problem with forbidden arcs, by max-flow
//! (Dinic) on `s → sources → targets → t`.

use std::collections::VecDeque;

use crate::error::InfeasibilityCut;

struct Edge {
    to: usize,
    cap: f64,
}

struct Dinic {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
    eps: f64,
}

impl Dinic {
    fn new(n: usize, eps: f64) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
            eps,
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if self.edges[e].cap > self.eps && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: f64) -> f64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.adj[u].len() {
            let e = self.adj[u][self.iter[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > self.eps && self.level[u] < self.level[v] {
                let d = self.dfs(v, t, f.min(self.edges[e].cap));
                if d > 0.0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// `Ok(())` when all supply can be routed over `admissible` arcs; otherwise
/// the residual-reachable cut as a Hall-type witness.
pub(crate) fn check_feasible(
    supply: &[f64],
    demand: &[f64],
    admissible: &[(usize, usize)],
    tol: f64,
) -> Result<(), InfeasibilityCut> {
    let n = supply.len();
    let m = demand.len();
    let s = n + m;
    let t = s + 1;
    let total: f64 = supply.iter().sum();
    let mut g = Dinic::new(n + m + 2, 1e-15 * total);
    for (i, &a) in supply.iter().enumerate() {
        g.add_edge(s, i, a);
    }
    for &(i, j) in admissible {
        g.add_edge(i, n + j, f64::INFINITY);
    }
    for (j, &b) in demand.iter().enumerate() {
        g.add_edge(n + j, t, b);
    }
    let f = g.max_flow(s, t);
    if f >= total - tol {
        return Ok(());
    }
    g.bfs(s);
    let sources: Vec<usize> = (0..n).filter(|&i| g.level[i] >= 0).collect();
    let reachable_targets: Vec<usize> = (0..m).filter(|&j| g.level[n + j] >= 0).collect();
    let deficit = sources.iter().map(|&i| supply[i]).sum::<f64>()
        - reachable_targets.iter().map(|&j| demand[j]).sum::<f64>();
    Err(InfeasibilityCut {
        sources,
        reachable_targets,
        deficit,
    })
}
