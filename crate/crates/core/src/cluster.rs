//! Open-cluster labeling and the box-event detectors of the renormalization
//! argument: crossing clusters, second-cluster diameters, and the disjoint /
//! blocked properties whose union is the atypical event. Also finite-volume
//! estimation of the percolation probability theta.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{sample_uniform_field, PercConfig, Region, Vertex};
use crate::par::par_map_indexed;
use crate::rng::{derive, stream};

const UNLABELED: usize = usize::MAX;

/// Axis-aligned lattice box `[lo_i, hi_i]` (inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        LatticeBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.0.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn volume(&self) -> u64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as u64)
            .product()
    }

    /// Centered box `[-m, m]^d`.
    pub fn centered(d: usize, m: i64) -> Self {
        LatticeBox { lo: vec![-m; d], hi: vec![m; d] }
    }
}

/// Per-cluster summary: vertex count and coordinate extremes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterStats {
    pub size: usize,
    pub min: Vec<i64>,
    pub max: Vec<i64>,
}

/// Labeling of the open subgraph into connected clusters. When restricted to
/// a box, only vertices inside the box are labeled and only open edges with
/// both endpoints inside contribute.
#[derive(Debug)]
pub struct ClusterLabeling {
    pub region: Arc<Region>,
    labels: Vec<usize>,
    stats: Vec<ClusterStats>,
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), size: vec![1; n] }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

impl ClusterLabeling {
    /// Label the open clusters of the full region.
    pub fn compute(config: &PercConfig) -> ClusterLabeling {
        Self::compute_filtered(config, None)
    }

    /// Label the open clusters of the subgraph induced on `bbox`.
    pub fn compute_in(config: &PercConfig, bbox: &LatticeBox) -> ClusterLabeling {
        Self::compute_filtered(config, Some(bbox))
    }

    fn compute_filtered(config: &PercConfig, bbox: Option<&LatticeBox>) -> ClusterLabeling {
        let region = Arc::clone(&config.region);
        let n = region.vertex_count();
        let inside =
            |id: usize| bbox.map_or(true, |b| b.contains(region.vertex(id)));
        let mut dsu = Dsu::new(n);
        for e in 0..region.edge_count() {
            if !config.is_open(e) {
                continue;
            }
            let [a, b] = region.edge_ends(e);
            if inside(a) && inside(b) {
                dsu.union(a, b);
            }
        }
        // Contiguous ids in order of first appearance: deterministic.
        let mut labels = vec![UNLABELED; n];
        let mut root_to_id = vec![UNLABELED; n];
        let mut stats: Vec<ClusterStats> = Vec::new();
        let d = region.dim();
        for v in 0..n {
            if !inside(v) {
                continue;
            }
            let root = dsu.find(v);
            let id = if root_to_id[root] == UNLABELED {
                let id = stats.len();
                root_to_id[root] = id;
                stats.push(ClusterStats {
                    size: 0,
                    min: vec![i64::MAX; d],
                    max: vec![i64::MIN; d],
                });
                id
            } else {
                root_to_id[root]
            };
            labels[v] = id;
            let s = &mut stats[id];
            s.size += 1;
            for k in 0..d {
                let x = region.vertex(v).0[k];
                s.min[k] = s.min[k].min(x);
                s.max[k] = s.max[k].max(x);
            }
        }
        ClusterLabeling { region, labels, stats }
    }

    pub fn label_of(&self, vertex_id: usize) -> Option<usize> {
        match self.labels[vertex_id] {
            UNLABELED => None,
            l => Some(l),
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self, id: usize) -> Option<&ClusterStats> {
        self.stats.get(id)
    }

    pub fn all_stats(&self) -> &[ClusterStats] {
        &self.stats
    }
}

/// Max over axes of the coordinate spread of cluster `id`.
pub fn diameter(labeling: &ClusterLabeling, id: usize) -> Result<i64> {
    let s = labeling
        .stats(id)
        .ok_or_else(|| Error::lookup(format!("unknown cluster id {id}")))?;
    Ok(s.min.iter().zip(&s.max).map(|(lo, hi)| hi - lo).max().unwrap_or(0))
}

fn crossing_ids(labeling: &ClusterLabeling, bbox: &LatticeBox) -> Vec<usize> {
    labeling
        .all_stats()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.min == bbox.lo && s.max == bbox.hi)
        .map(|(id, _)| id)
        .collect()
}

/// True iff one open cluster joins the two opposite faces of `bbox` in every
/// axis direction by paths inside the box.
pub fn has_crossing_cluster(config: &PercConfig, bbox: &LatticeBox) -> bool {
    let labeling = ClusterLabeling::compute_in(config, bbox);
    !crossing_ids(&labeling, bbox).is_empty()
}

/// Diagnostic single-axis variant: some cluster joins the two opposite faces
/// along `axis` only. Never used by the atypical-event logic.
pub fn has_axis_crossing(config: &PercConfig, bbox: &LatticeBox, axis: usize) -> bool {
    let labeling = ClusterLabeling::compute_in(config, bbox);
    labeling
        .all_stats()
        .iter()
        .any(|s| s.min[axis] == bbox.lo[axis] && s.max[axis] == bbox.hi[axis])
}

/// Event T: `bbox` has a crossing cluster and contains some other open
/// cluster of diameter at least `m`.
pub fn event_t(config: &PercConfig, bbox: &LatticeBox, m: i64) -> bool {
    debug_assert!(m > 0);
    let labeling = ClusterLabeling::compute_in(config, bbox);
    let crossing = crossing_ids(&labeling, bbox);
    if crossing.is_empty() {
        return false;
    }
    // Top two diameters among all clusters in the box.
    let (mut top1, mut top2) = ((-1i64, UNLABELED), (-1i64, UNLABELED));
    for id in 0..labeling.cluster_count() {
        let dia = diameter(&labeling, id).expect("id enumerated from labeling");
        if dia > top1.0 {
            top2 = top1;
            top1 = (dia, id);
        } else if dia > top2.0 {
            top2 = (dia, id);
        }
    }
    crossing.iter().any(|&c| {
        let best_other = if top1.1 != c { top1.0 } else { top2.0 };
        best_other >= m
    })
}

/// Partition of Z^d into boxes of side `t`: `B_t(u) = prod [u_k t, (u_k+1)t - 1]`,
/// with the enlarged box the union of the 3^d boxes *-adjacent to `u`.
#[derive(Debug, Clone, Copy)]
pub struct BoxGrid {
    pub d: usize,
    pub t: i64,
}

impl BoxGrid {
    pub fn new(d: usize, t: i64) -> Result<Self> {
        if t < 1 {
            return Err(Error::parameter(format!("box scale must be >= 1, got {t}")));
        }
        Ok(BoxGrid { d, t })
    }

    pub fn cell(&self, u: &[i64]) -> LatticeBox {
        let lo: Vec<i64> = u.iter().map(|&c| c * self.t).collect();
        let hi: Vec<i64> = u.iter().map(|&c| (c + 1) * self.t - 1).collect();
        LatticeBox::new(lo, hi)
    }

    pub fn enlarged(&self, u: &[i64]) -> LatticeBox {
        let lo: Vec<i64> = u.iter().map(|&c| (c - 1) * self.t).collect();
        let hi: Vec<i64> = u.iter().map(|&c| (c + 2) * self.t - 1).collect();
        LatticeBox::new(lo, hi)
    }

    /// Index of the sub-cube (one of 3^d) of the enlarged box of `u`
    /// containing vertex `v`.
    fn subcube_index(&self, u: &[i64], v: &Vertex) -> usize {
        let mut idx = 0usize;
        for k in 0..self.d {
            let cell = v.0[k].div_euclid(self.t) - (u[k] - 1);
            debug_assert!((0..3).contains(&cell));
            idx = idx * 3 + cell as usize;
        }
        idx
    }

    pub fn subcube_count(&self) -> usize {
        3usize.pow(self.d as u32)
    }
}

fn check_enlarged_in_region(config: &PercConfig, enlarged: &LatticeBox) -> Result<()> {
    let present = config
        .region
        .vertices()
        .iter()
        .filter(|v| enlarged.contains(v))
        .count() as u64;
    if present != enlarged.volume() {
        return Err(Error::geometry(
            "enlarged box exceeds the configuration region".to_string(),
        ));
    }
    Ok(())
}

/// Cluster sides relevant to the disjoint/blocked properties: who touches the
/// core box and who touches the boundary of the enlarged box.
struct BoxClusterView {
    labeling: ClusterLabeling,
    core: Vec<bool>,
    boundary: Vec<bool>,
}

fn box_cluster_view(config: &PercConfig, grid: &BoxGrid, u: &[i64]) -> Result<BoxClusterView> {
    let core_box = grid.cell(u);
    let enlarged = grid.enlarged(u);
    check_enlarged_in_region(config, &enlarged)?;
    let labeling = ClusterLabeling::compute_in(config, &enlarged);
    let nc = labeling.cluster_count();
    let (mut core, mut boundary) = (vec![false; nc], vec![false; nc]);
    for vid in 0..config.region.vertex_count() {
        if let Some(l) = labeling.label_of(vid) {
            let v = config.region.vertex(vid);
            if core_box.contains(v) {
                core[l] = true;
            }
            if v.0
                .iter()
                .zip(enlarged.lo.iter().zip(&enlarged.hi))
                .any(|(x, (lo, hi))| x == lo || x == hi)
            {
                boundary[l] = true;
            }
        }
    }
    Ok(BoxClusterView { labeling, core, boundary })
}

/// Disjoint property: two disconnected open clusters in the enlarged box,
/// both with vertices in the core box and on the enlarged-box boundary.
pub fn has_disjoint_property(config: &PercConfig, grid: &BoxGrid, u: &[i64]) -> Result<bool> {
    let view = box_cluster_view(config, grid, u)?;
    let qualifying = view
        .core
        .iter()
        .zip(&view.boundary)
        .filter(|(&c, &b)| c && b)
        .count();
    Ok(qualifying >= 2)
}

/// Blocked property: an open cluster with vertices in the core box and on the
/// enlarged-box boundary that misses some t-sub-cube of the enlarged box.
pub fn has_blocked_property(config: &PercConfig, grid: &BoxGrid, u: &[i64]) -> Result<bool> {
    let view = box_cluster_view(config, grid, u)?;
    let nc = view.labeling.cluster_count();
    if nc == 0 {
        return Ok(false);
    }
    // Distinct (cluster, sub-cube) incidences.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for vid in 0..config.region.vertex_count() {
        if let Some(l) = view.labeling.label_of(vid) {
            if view.core[l] && view.boundary[l] {
                pairs.push((l, grid.subcube_index(u, config.region.vertex(vid))));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut touched = vec![0usize; nc];
    for (l, _) in pairs {
        touched[l] += 1;
    }
    let full = grid.subcube_count();
    Ok((0..nc).any(|l| view.core[l] && view.boundary[l] && touched[l] < full))
}

/// Atypical event: disjoint property or blocked property.
pub fn atypical_event(config: &PercConfig, grid: &BoxGrid, u: &[i64]) -> Result<bool> {
    Ok(has_disjoint_property(config, grid, u)? || has_blocked_property(config, grid, u)?)
}

/// Indicator of the finite-volume proxy for `0 in C_p`: the origin is joined
/// to the boundary of `[-m, m]^d` by open edges inside that box. The region
/// must contain the box.
pub fn theta_indicator(config: &PercConfig, m: i64) -> bool {
    let region = &config.region;
    let origin = match region.vertex_id(&Vertex(vec![0; region.dim()])) {
        Some(id) => id,
        None => return false,
    };
    let inf_norm =
        |v: &Vertex| v.0.iter().map(|x| x.abs()).max().expect("nonempty coords");
    let mut seen = vec![false; region.vertex_count()];
    let mut stack = vec![origin];
    seen[origin] = true;
    while let Some(v) = stack.pop() {
        let r = inf_norm(region.vertex(v));
        if r == m {
            return true;
        }
        if r > m {
            continue;
        }
        for &(e, w) in region.incident(v) {
            if config.is_open(e) && !seen[w] && inf_norm(region.vertex(w)) <= m {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// One Monte-Carlo frequency row; shared CSV schema for the theta and decay
/// experiments (`t_or_m` holds the box scale t or the proxy radius m).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreqRow {
    pub d: usize,
    pub p: f64,
    pub t_or_m: i64,
    pub replicas: u64,
    pub successes: u64,
    pub frequency: f64,
    pub stderr: f64,
    pub seed: u64,
}

fn binomial_stderr(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let f = successes as f64 / n as f64;
    (f * (1.0 - f) / n as f64).sqrt()
}

/// Finite-volume estimate of theta_p via the boundary-connection proxy.
pub fn estimate_theta(d: usize, p: f64, m: i64, replicas: u64, seed: u64) -> Result<FreqRow> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::parameter(format!("p must lie in (0, 1], got {p}")));
    }
    if m < 1 || replicas < 1 {
        return Err(Error::parameter("theta proxy needs m >= 1 and replicas >= 1"));
    }
    let region = Region::lattice_box(&vec![-m; d], &vec![m; d])?;
    let hits: Vec<bool> = par_map_indexed(replicas as usize, |i| {
        let rep_seed = derive(&[seed, stream::REPLICA, i as u64]);
        let config = sample_uniform_field(&region, rep_seed)
            .open_at(p)
            .expect("p validated above");
        theta_indicator(&config, m)
    });
    let successes = hits.iter().filter(|&&b| b).count() as u64;
    Ok(FreqRow {
        d,
        p,
        t_or_m: m,
        replicas,
        successes,
        frequency: successes as f64 / replicas as f64,
        stderr: binomial_stderr(successes, replicas),
        seed,
    })
}

/// Fitted log-linear decay slope for one parameter value of the scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySlope {
    pub p: f64,
    /// Least-squares slope of ln(frequency) against t over rows with
    /// positive frequency; absent when fewer than two such rows exist.
    pub slope: Option<f64>,
    pub points_used: usize,
}

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub rows: Vec<FreqRow>,
    pub slopes: Vec<DecaySlope>,
}

/// Frequency of the atypical event in `B_t(0)` over a `(p, t)` grid.
pub fn scan_decay(
    d: usize,
    p_grid: &[f64],
    t_grid: &[i64],
    replicas: u64,
    seed: u64,
) -> Result<ScanTable> {
    if p_grid.is_empty() || t_grid.is_empty() || replicas < 1 {
        return Err(Error::parameter("scan needs nonempty grids and replicas >= 1"));
    }
    let mut rows = Vec::new();
    for (pi, &p) in p_grid.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::parameter(format!("p must lie in (0, 1], got {p}")));
        }
        for (ti, &t) in t_grid.iter().enumerate() {
            let grid = BoxGrid::new(d, t)?;
            let origin = vec![0i64; d];
            let enlarged = grid.enlarged(&origin);
            let region = Region::lattice_box(&enlarged.lo, &enlarged.hi)?;
            let hits: Vec<bool> = par_map_indexed(replicas as usize, |i| {
                let rep_seed = derive(&[
                    seed,
                    stream::TASK,
                    pi as u64,
                    ti as u64,
                    stream::REPLICA,
                    i as u64,
                ]);
                let config = sample_uniform_field(&region, rep_seed)
                    .open_at(p)
                    .expect("p validated above");
                atypical_event(&config, &grid, &origin)
                    .expect("enlarged box built to fit the region")
            });
            let successes = hits.iter().filter(|&&b| b).count() as u64;
            rows.push(FreqRow {
                d,
                p,
                t_or_m: t,
                replicas,
                successes,
                frequency: successes as f64 / replicas as f64,
                stderr: binomial_stderr(successes, replicas),
                seed,
            });
        }
    }
    let slopes = p_grid
        .iter()
        .map(|&p| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.p == p && r.frequency > 0.0)
                .map(|r| (r.t_or_m as f64, r.frequency.ln()))
                .collect();
            DecaySlope { p, slope: fit_slope(&pts), points_used: pts.len() }
        })
        .collect();
    Ok(ScanTable { rows, slopes })
}

/// Least-squares slope of y against x; `None` with fewer than two points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
