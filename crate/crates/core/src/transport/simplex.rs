//! Primal network simplex for uncapacitated bipartite transportation
//! problems.
//!
//! - Initial basis: an artificial root with arcs `source → root` and
//!   `root → target` carrying the supplies, priced at a big-M cost large
//!   enough that any feasible problem drives them to zero flow.
//! - Pricing: block search over a fixed arc order, resumed where the previous
//!   search stopped. Fully deterministic.
//! - Leaving arc: strongly feasible tree rule (first blocking arc on the
//!   source side, last on the target side), which prevents cycling under
//!   degeneracy.
//! - Flows are exact: masses are mapped to `i128` fixed point with 2^-100
//!   resolution (exact for any `f64` mass >= 2^-47), so degenerate ties and
//!   zero flows involve no rounding.
//! - Potentials follow `y_v = y_u - c` on tree arcs `u → v`, so the reduced
//!   cost of `u → v` is `c - y_u + y_v`.

/// Bipartite arc `source → target` with finite cost.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Arc {
    pub source: usize,
    pub target: usize,
    pub cost: f64,
}

pub(crate) struct SimplexOutput {
    /// Flow per input arc.
    pub flow: Vec<f64>,
    /// Whether the input arc ended in the basis.
    pub basic: Vec<bool>,
    /// Node potentials: sources `0..n`, targets `n..n+m`.
    pub potential: Vec<f64>,
    /// Flow left on artificial arcs (zero iff feasible).
    pub artificial_flow: f64,
    pub pivots: usize,
}

const NONE: usize = usize::MAX;

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `pred` arc points from the node up to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

pub(crate) fn solve(supply: &[f64], demand: &[f64], arcs: &[Arc]) -> SimplexOutput {
    let n = supply.len();
    let m = demand.len();
    let root = n + m;
    let nodes = n + m + 1;
    let real = arcs.len();

    let cmax = arcs.iter().map(|a| a.cost.abs()).fold(0.0, f64::max);
    let big_m = (cmax + 1.0) * nodes as f64;
    let supply_fx: Vec<i128> = supply.iter().map(|&s| to_fixed(s)).collect();
    let mut demand_fx: Vec<i128> = demand.iter().map(|&d| to_fixed(d)).collect();
    // absorb the sub-tolerance imbalance into the largest demand
    let imbalance = supply_fx.iter().sum::<i128>() - demand_fx.iter().sum::<i128>();
    if let Some(big) = (0..m).max_by_key(|&j| demand_fx[j]) {
        demand_fx[big] += imbalance;
    }
    let cost_eps = 1e-12 * (1.0 + cmax);

    let mut src = Vec::with_capacity(real + n + m);
    let mut dst = Vec::with_capacity(real + n + m);
    let mut cost = Vec::with_capacity(real + n + m);
    for a in arcs {
        src.push(a.source);
        dst.push(n + a.target);
        cost.push(a.cost);
    }
    let mut flow = vec![0i128; real + n + m];
    let mut in_tree = vec![false; real + n + m];
    let mut tree = Tree {
        parent: vec![NONE; nodes],
        pred: vec![NONE; nodes],
        up: vec![false; nodes],
        depth: vec![0; nodes],
        pot: vec![0.0; nodes],
        adj: vec![Vec::new(); nodes],
    };
    for (i, &s) in supply_fx.iter().enumerate() {
        let e = src.len();
        src.push(i);
        dst.push(root);
        cost.push(big_m);
        flow[e] = s;
        in_tree[e] = true;
        tree.adj[i].push(e);
        tree.adj[root].push(e);
    }
    for (j, &d) in demand_fx.iter().enumerate() {
        let e = src.len();
        src.push(root);
        dst.push(n + j);
        cost.push(big_m);
        flow[e] = d;
        in_tree[e] = true;
        tree.adj[n + j].push(e);
        tree.adj[root].push(e);
    }
    let narcs = src.len();
    tree.depth[root] = 0;
    tree.pot[root] = 0.0;
    hang(&mut tree, root, &src, &dst, &cost);

    let block = ((narcs as f64).sqrt().ceil() as usize).max(10);
    let mut next = 0usize;
    let mut pivots = 0usize;

    loop {
        // block search pricing
        let mut entering = NONE;
        let mut best = -cost_eps;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        while scanned < narcs {
            let e = next;
            next += 1;
            if next == narcs {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            if !in_tree[e] {
                let r = cost[e] - tree.pot[src[e]] + tree.pot[dst[e]];
                if r < best {
                    best = r;
                    entering = e;
                }
            }
            if in_block == block {
                if entering != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        if entering == NONE {
            break;
        }
        pivots += 1;

        let first = src[entering];
        let second = dst[entering];
        let join = {
            let (mut u, mut v) = (first, second);
            while u != v {
                if tree.depth[u] > tree.depth[v] {
                    u = tree.parent[u];
                } else if tree.depth[v] > tree.depth[u] {
                    v = tree.parent[v];
                } else {
                    u = tree.parent[u];
                    v = tree.parent[v];
                }
            }
            u
        };

        // ratio test; flow runs join → first → second → join
        let mut delta = i128::MAX;
        let mut u_out = NONE;
        let mut out_on_first = true;
        let mut u = first;
        while u != join {
            if tree.up[u] {
                let d = flow[tree.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    out_on_first = true;
                }
            }
            u = tree.parent[u];
        }
        let mut u = second;
        while u != join {
            if !tree.up[u] {
                let d = flow[tree.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    out_on_first = false;
                }
            }
            u = tree.parent[u];
        }
        assert!(u_out != NONE, "transportation problem cannot be unbounded");

        // augment
        if delta > 0 {
            flow[entering] += delta;
            let mut u = first;
            while u != join {
                let e = tree.pred[u];
                if tree.up[u] {
                    flow[e] -= delta;
                } else {
                    flow[e] += delta;
                }
                u = tree.parent[u];
            }
            let mut u = second;
            while u != join {
                let e = tree.pred[u];
                if tree.up[u] {
                    flow[e] += delta;
                } else {
                    flow[e] -= delta;
                }
                u = tree.parent[u];
            }
        }
        let leaving = tree.pred[u_out];
        debug_assert_eq!(flow[leaving], 0);

        // swap arcs and re-hang the detached subtree under the entering arc
        in_tree[leaving] = false;
        in_tree[entering] = true;
        let (a, b) = (src[leaving], dst[leaving]);
        tree.adj[a].retain(|&x| x != leaving);
        tree.adj[b].retain(|&x| x != leaving);
        tree.adj[first].push(entering);
        tree.adj[second].push(entering);
        let (start, new_parent) = if out_on_first {
            (first, second)
        } else {
            (second, first)
        };
        attach(&mut tree, start, new_parent, entering, &src, &dst, &cost);
    }

    let artificial_flow = from_fixed(flow[real..].iter().sum());
    let flow = flow[..real].iter().map(|&f| from_fixed(f)).collect();
    in_tree.truncate(real);
    let mut potential = tree.pot;
    potential.truncate(n + m);
    SimplexOutput {
        flow,
        basic: in_tree,
        potential,
        artificial_flow,
        pivots,
    }
}

const FIXED_SCALE: f64 = (1u128 << 100) as f64;

fn to_fixed(x: f64) -> i128 {
    (x * FIXED_SCALE).round() as i128
}

fn from_fixed(x: i128) -> f64 {
    x as f64 / FIXED_SCALE
}

fn attach(
    tree: &mut Tree,
    start: usize,
    parent: usize,
    arc: usize,
    src: &[usize],
    dst: &[usize],
    cost: &[f64],
) {
    tree.parent[start] = parent;
    tree.pred[start] = arc;
    tree.up[start] = src[arc] == start;
    tree.depth[start] = tree.depth[parent] + 1;
    tree.pot[start] = if tree.up[start] {
        tree.pot[parent] + cost[arc]
    } else {
        tree.pot[parent] - cost[arc]
    };
    hang(tree, start, src, dst, cost);
}

/// Recompute parent links, depths, and potentials below `top`, whose own
/// fields are already set.
fn hang(tree: &mut Tree, top: usize, src: &[usize], dst: &[usize], cost: &[f64]) {
    let mut stack = vec![top];
    while let Some(u) = stack.pop() {
        for k in 0..tree.adj[u].len() {
            let e = tree.adj[u][k];
            if e == tree.pred[u] {
                continue;
            }
            let v = if src[e] == u { dst[e] } else { src[e] };
            tree.parent[v] = u;
            tree.pred[v] = e;
            tree.up[v] = src[e] == v;
            tree.depth[v] = tree.depth[u] + 1;
            tree.pot[v] = if tree.up[v] {
                tree.pot[u] + cost[e]
            } else {
                tree.pot[u] - cost[e]
            };
            stack.push(v);
        }
    }
}
