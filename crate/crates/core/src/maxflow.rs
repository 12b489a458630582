//! Exact minimal cutsets on cylinder graphs via max-flow.
//!
//! Two solves share one Dinic core: `min_open_cut` minimizes the number of
//! open edges in a cutset (capacity `1{open}`), and `min_cardinality_min_cut`
//! breaks ties by total edge count through composite capacities
//! `M * 1{open} + 1` with `M = |edges| + 1`, so the optimum decomposes
//! uniquely as `M * tau + N`.

use serde::{Deserialize, Serialize};

use crate::cylinder::CylinderInstance;
use crate::error::{Error, Result};
use crate::lattice::PercConfig;

/// Minimal cutset data. `tau` is the open-edge count of the cut (the
/// p-capacity), `cardinality` its total edge count, and `flow_value` the
/// max-flow certificate, always equal to `tau`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutResult {
    pub tau: u64,
    pub cut_edges: Vec<usize>,
    pub cardinality: usize,
    pub flow_value: u64,
}

struct Dinic {
    to: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); nodes],
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Arc pair (a -> b, reverse b -> a) with the given capacities. Returns
    /// the forward arc index; the reverse is `index ^ 1`.
    fn add_arc_pair(&mut self, a: usize, b: usize, cap_fwd: u64, cap_rev: u64) -> usize {
        let idx = self.to.len();
        self.to.push(b);
        self.cap.push(cap_fwd);
        self.adj[a].push(idx);
        self.to.push(a);
        self.cap.push(cap_rev);
        self.adj[b].push(idx + 1);
        idx
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::from([s]);
        self.level[s] = 0;
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let w = self.to[a];
                if self.cap[a] > 0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, limit: u64) -> u64 {
        if v == t {
            return limit;
        }
        while self.iter[v] < self.adj[v].len() {
            let a = self.adj[v][self.iter[v]];
            let w = self.to[a];
            if self.cap[a] > 0 && self.level[w] == self.level[v] + 1 {
                let pushed = self.dfs(w, t, limit.min(self.cap[a]));
                if pushed > 0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0u64;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let pushed = self.dfs(s, t, u64::MAX);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }

    /// Source side of the residual graph after a max-flow run.
    fn min_cut_side(&self, s: usize) -> Vec<bool> {
        let mut side = vec![false; self.adj.len()];
        let mut stack = vec![s];
        side[s] = true;
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                let w = self.to[a];
                if self.cap[a] > 0 && !side[w] {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        side
    }
}

fn check_same_region(instance: &CylinderInstance, config: &PercConfig) -> Result<()> {
    if !std::sync::Arc::ptr_eq(&instance.region, &config.region)
        && *instance.region != *config.region
    {
        return Err(Error::geometry(
            "configuration region does not match the cylinder region",
        ));
    }
    Ok(())
}

/// Solve with per-lattice-edge capacity `weight(e)`; terminals are joined to
/// `C'_1` / `C'_2` by artificial arcs whose capacity exceeds any finite cut.
/// Returns `(flow, crossing lattice edges)`.
fn solve_with_weights(
    instance: &CylinderInstance,
    weight: impl Fn(usize) -> u64,
    inf: u64,
) -> (u64, Vec<usize>) {
    let region = &instance.region;
    let n = region.vertex_count();
    let (s, t) = (n, n + 1);
    let mut net = Dinic::new(n + 2);
    for e in 0..region.edge_count() {
        let [a, b] = region.edge_ends(e);
        let w = weight(e);
        net.add_arc_pair(a, b, w, w);
    }
    for &v in &instance.c1 {
        net.add_arc_pair(s, v, inf, 0);
    }
    for &v in &instance.c2 {
        net.add_arc_pair(v, t, inf, 0);
    }
    let flow = net.max_flow(s, t);
    let side = net.min_cut_side(s);
    let cut: Vec<usize> = (0..region.edge_count())
        .filter(|&e| {
            let [a, b] = region.edge_ends(e);
            side[a] != side[b]
        })
        .collect();
    (flow, cut)
}

/// Exact minimum open-edge capacity over all cutsets separating `C'_1` from
/// `C'_2` in the cylinder, with a cut achieving it.
pub fn min_open_cut(instance: &CylinderInstance, config: &PercConfig) -> Result<CutResult> {
    check_same_region(instance, config)?;
    let m = instance.region.edge_count() as u64;
    let (flow, cut) =
        solve_with_weights(instance, |e| config.is_open(e) as u64, m + 1);
    let tau = cut.iter().filter(|&&e| config.is_open(e)).count() as u64;
    debug_assert_eq!(tau, flow, "duality: open edges crossing == max flow");
    Ok(CutResult { tau, cardinality: cut.len(), cut_edges: cut, flow_value: flow })
}

/// Among cutsets achieving the minimum open capacity, one of minimal total
/// cardinality: composite capacities make the solver lexicographic.
pub fn min_cardinality_min_cut(
    instance: &CylinderInstance,
    config: &PercConfig,
) -> Result<CutResult> {
    check_same_region(instance, config)?;
    let m = instance.region.edge_count() as u64 + 1;
    let inf = m
        .checked_mul(m)
        .and_then(|x| x.checked_add(m))
        .ok_or_else(|| Error::parameter("instance too large for composite capacities"))?;
    let (flow, cut) = solve_with_weights(
        instance,
        |e| m * config.is_open(e) as u64 + 1,
        inf,
    );
    let (tau, n_edges) = (flow / m, flow % m);
    debug_assert_eq!(n_edges as usize, cut.len());
    debug_assert_eq!(tau, cut.iter().filter(|&&e| config.is_open(e)).count() as u64);
    Ok(CutResult {
        tau,
        cardinality: cut.len(),
        cut_edges: cut,
        flow_value: tau,
    })
}

/// NDJSON record for a cut; edge indices refer to the region's canonical
/// edge order.
#[derive(Debug, Serialize, Deserialize)]
pub struct CutRecord {
    pub n: u32,
    pub v: Vec<f64>,
    pub p: f64,
    pub seed: u64,
    pub tau: u64,
    pub cardinality: usize,
    pub cut_edges: Vec<usize>,
}

impl CutRecord {
    pub fn new(instance: &CylinderInstance, p: f64, seed: u64, cut: &CutResult) -> Self {
        CutRecord {
            n: instance.n,
            v: instance.v.clone(),
            p,
            seed,
            tau: cut.tau,
            cardinality: cut.cardinality,
            cut_edges: cut.cut_edges.clone(),
        }
    }
}
