//! Finite regions of the Z^d nearest-neighbor lattice and the two couplings
//! from which parameter-indexed bond configurations derive.
//!
//! A [`Region`] owns a canonical, reproducible edge order: vertices sorted
//! lexicographically, and for each vertex its outgoing `+e_k` edges by
//! ascending axis. All per-edge randomness is keyed by `(seed, stream,
//! canonical edge index)`, so the same `(region, seed)` always regenerates
//! bit-identical fields.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// Lattice point in Z^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Nearest neighbor one step along `axis` in direction `step` (+1/-1).
    pub fn neighbor(&self, axis: usize, step: i64) -> Vertex {
        let mut c = self.0.clone();
        c[axis] += step;
        Vertex(c)
    }
}

/// Unordered nearest-neighbor pair, normalized so `a < b` lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: Vertex,
    pub b: Vertex,
}

impl Edge {
    pub fn new(x: Vertex, y: Vertex) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::parameter("edge endpoints of mixed dimension"));
        }
        let l1: i64 = x.0.iter().zip(&y.0).map(|(a, b)| (a - b).abs()).sum();
        if l1 != 1 {
            return Err(Error::parameter(format!(
                "edge endpoints must be nearest neighbors, got L1 distance {l1}"
            )));
        }
        if x <= y {
            Ok(Edge { a: x, b: y })
        } else {
            Ok(Edge { a: y, b: x })
        }
    }

    /// Axis along which the two endpoints differ.
    pub fn axis(&self) -> usize {
        self.a
            .0
            .iter()
            .zip(&self.b.0)
            .position(|(a, b)| a != b)
            .expect("degenerate edge")
    }
}

/// Finite vertex set with its induced nearest-neighbor edges in canonical
/// order (lexicographic on (min endpoint, axis)).
#[derive(Debug)]
pub struct Region {
    d: usize,
    verts: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    /// Edge endpoints as vertex ids, `edges[e] = [lo, hi]` with `lo < hi` lex.
    edges: Vec<[usize; 2]>,
    /// CSR adjacency: for vertex v, `adj[adj_off[v]..adj_off[v+1]]` lists
    /// `(edge id, other endpoint id)`.
    adj_off: Vec<usize>,
    adj: Vec<(usize, usize)>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.verts == other.verts
    }
}

impl Region {
    /// Region from an explicit vertex list (deduplicated, sorted).
    pub fn from_vertices(d: usize, mut verts: Vec<Vertex>) -> Result<Arc<Region>> {
        if d < 2 {
            return Err(Error::parameter("dimension must be at least 2"));
        }
        if verts.iter().any(|v| v.dim() != d) {
            return Err(Error::parameter("vertex dimension mismatch"));
        }
        verts.sort();
        verts.dedup();
        let index: HashMap<Vertex, usize> =
            verts.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();

        let mut edges = Vec::new();
        let mut half_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); verts.len()];
        for (i, v) in verts.iter().enumerate() {
            for axis in 0..d {
                if let Some(&j) = index.get(&v.neighbor(axis, 1)) {
                    let e = edges.len();
                    edges.push([i, j]);
                    half_adj[i].push((e, j));
                    half_adj[j].push((e, i));
                }
            }
        }
        let mut adj_off = Vec::with_capacity(verts.len() + 1);
        let mut adj = Vec::with_capacity(2 * edges.len());
        adj_off.push(0);
        for list in &half_adj {
            adj.extend_from_slice(list);
            adj_off.push(adj.len());
        }
        Ok(Arc::new(Region { d, verts, index, edges, adj_off, adj }))
    }

    /// Axis-aligned box `[lo_i, hi_i]` (inclusive) in Z^d.
    pub fn lattice_box(lo: &[i64], hi: &[i64]) -> Result<Arc<Region>> {
        let d = lo.len();
        if hi.len() != d {
            return Err(Error::parameter("box corner dimension mismatch"));
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(Error::geometry("empty box"));
        }
        let mut verts = Vec::new();
        let mut cur = lo.to_vec();
        loop {
            verts.push(Vertex(cur.clone()));
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] <= hi[axis] {
                    break;
                }
                cur[axis] = lo[axis];
                if axis == 0 {
                    return Region::from_vertices(d, verts);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn vertex(&self, id: usize) -> &Vertex {
        &self.verts[id]
    }
    pub fn vertices(&self) -> &[Vertex] {
        &self.verts
    }
    pub fn vertex_id(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }
    pub fn contains(&self, v: &Vertex) -> bool {
        self.index.contains_key(v)
    }
    /// Endpoint ids of edge `e`.
    pub fn edge_ends(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }
    pub fn edge(&self, e: usize) -> Edge {
        let [i, j] = self.edges[e];
        Edge { a: self.verts[i].clone(), b: self.verts[j].clone() }
    }
    /// `(edge id, neighbor vertex id)` pairs incident to vertex `v`.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_off[v]..self.adj_off[v + 1]]
    }

    /// Componentwise bounding box `(lo, hi)` of the vertex set.
    pub fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.d];
        let mut hi = vec![i64::MIN; self.d];
        for v in &self.verts {
            for k in 0..self.d {
                lo[k] = lo[k].min(v.0[k]);
                hi[k] = hi[k].max(v.0[k]);
            }
        }
        (lo, hi)
    }

    /// True if every lattice neighbor of vertex `id` lies in the region.
    pub fn is_interior(&self, id: usize) -> bool {
        self.incident(id).len() == 2 * self.d
    }
}

/// Per-edge randomness from which all parameter-indexed configurations of a
/// region derive: uniform values `u(e)` and, for the two-stage coupling,
/// auxiliary Bernoulli bits with recorded parameter `r`.
#[derive(Debug, Clone)]
pub struct CouplingField {
    region: Arc<Region>,
    seed: u64,
    u: Vec<f64>,
    aux: Option<AuxBits>,
}

#[derive(Debug, Clone)]
pub struct AuxBits {
    pub r: f64,
    bits: Vec<bool>,
}

/// Bond configuration: which region edges are open at parameter `p`.
#[derive(Debug, Clone)]
pub struct PercConfig {
    pub region: Arc<Region>,
    pub p: f64,
    open: Vec<bool>,
}

impl PercConfig {
    pub fn is_open(&self, edge: usize) -> bool {
        self.open[edge]
    }
    pub fn open_flags(&self) -> &[bool] {
        &self.open
    }
    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }
    pub fn open_edge_ids(&self) -> Vec<usize> {
        (0..self.open.len()).filter(|&e| self.open[e]).collect()
    }

    /// All-open / all-closed constructions for hand-built certificates.
    pub fn uniform(region: Arc<Region>, p: f64, open: bool) -> PercConfig {
        let m = region.edge_count();
        PercConfig { region, p, open: vec![open; m] }
    }

    /// Explicit open set, for hand-built certificates.
    pub fn from_open_edges(region: Arc<Region>, p: f64, open_edges: &[usize]) -> PercConfig {
        let mut open = vec![false; region.edge_count()];
        for &e in open_edges {
            open[e] = true;
        }
        PercConfig { region, p, open }
    }
}

/// Independent uniforms on `[0,1)` per edge, keyed by `(seed, edge index)`.
pub fn sample_uniform_field(region: &Arc<Region>, seed: u64) -> CouplingField {
    let u = (0..region.edge_count())
        .map(|e| rng::uniform_at(&[seed, stream::EDGE_UNIFORM, e as u64]))
        .collect();
    CouplingField { region: Arc::clone(region), seed, u, aux: None }
}

impl CouplingField {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn uniforms(&self) -> &[f64] {
        &self.u
    }
    pub fn aux(&self) -> Option<&AuxBits> {
        self.aux.as_ref()
    }

    /// Monotone coupling: edge open iff `u(e) < p`, so `p <= q` implies the
    /// p-open set is contained in the q-open set.
    pub fn open_at(&self, p: f64) -> Result<PercConfig> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::parameter(format!("p must lie in (0, 1], got {p}")));
        }
        let open = self.u.iter().map(|&u| u < p).collect();
        Ok(PercConfig { region: Arc::clone(&self.region), p, open })
    }

    fn with_aux(mut self, r: f64) -> Self {
        let bits = (0..self.region.edge_count())
            .map(|e| rng::uniform_at(&[self.seed, stream::EDGE_AUX, e as u64]) < r)
            .collect();
        self.aux = Some(AuxBits { r, bits });
        self
    }
}

impl AuxBits {
    pub fn bit(&self, edge: usize) -> bool {
        self.bits[edge]
    }
}

/// Output of the two-stage coupling at parameters `p <= q`.
///
/// Per edge, `U ~ Bernoulli(p)` and `V ~ Bernoulli((q-p)/(1-p))` are
/// independent; the edge is p-open iff `U = 1` and q-open iff `U = 1` or
/// `V = 1`, which makes the q-marginal Bernoulli(q) while the q-state of a
/// p-closed edge stays independent of the p-configuration.
#[derive(Debug, Clone)]
pub struct TwoStagePair {
    pub field: CouplingField,
    pub at_p: PercConfig,
    pub at_q: PercConfig,
}

impl TwoStagePair {
    /// Auxiliary V-bit of an edge.
    pub fn v_bit(&self, edge: usize) -> bool {
        self.field.aux().expect("two-stage field carries aux bits").bit(edge)
    }
}

pub fn sample_two_stage(
    region: &Arc<Region>,
    p: f64,
    q: f64,
    seed: u64,
) -> Result<TwoStagePair> {
    if !(p > 0.0 && p <= q && q < 1.0) {
        return Err(Error::parameter(format!(
            "two-stage coupling requires 0 < p <= q < 1, got p={p}, q={q}"
        )));
    }
    let r = (q - p) / (1.0 - p);
    let field = sample_uniform_field(region, seed).with_aux(r);
    let aux = field.aux.as_ref().expect("aux bits just attached");
    let open_p: Vec<bool> = field.u.iter().map(|&u| u < p).collect();
    let open_q: Vec<bool> =
        open_p.iter().zip(&aux.bits).map(|(&u1, &v1)| u1 || v1).collect();
    Ok(TwoStagePair {
        at_p: PercConfig { region: Arc::clone(region), p, open: open_p },
        at_q: PercConfig { region: Arc::clone(region), p: q, open: open_q },
        field,
    })
}

/// NDJSON record for a configuration. Edge indices refer to the canonical
/// order: lexicographic on (min endpoint coords, axis direction).
#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub d: usize,
    pub bounds: (Vec<i64>, Vec<i64>),
    pub seed: u64,
    pub p: f64,
    pub open_edges: Vec<usize>,
}

impl ConfigRecord {
    pub fn new(config: &PercConfig, seed: u64) -> Self {
        ConfigRecord {
            d: config.region.dim(),
            bounds: config.region.bounds(),
            seed,
            p: config.p,
            open_edges: config.open_edge_ids(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box2(n: i64) -> Arc<Region> {
        Region::lattice_box(&[-n, -n], &[n, n]).unwrap()
    }

    #[test]
    fn box_region_counts() {
        let r = box2(2);
        assert_eq!(r.vertex_count(), 25);
        // 2 * n * (n+1) edges on an (n+1)x(n+1) grid
        assert_eq!(r.edge_count(), 2 * 4 * 5);
    }

    #[test]
    fn canonical_edge_order_is_lex_min_endpoint_then_axis() {
        let r = Region::lattice_box(&[0, 0], &[1, 1]).unwrap();
        let got: Vec<(Vertex, usize)> =
            (0..r.edge_count()).map(|e| (r.edge(e).a.clone(), r.edge(e).axis())).collect();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(got, sorted);
        assert_eq!(r.edge_count(), 4);
    }

    #[test]
    fn edge_requires_nearest_neighbors() {
        let e = Edge::new(Vertex(vec![0, 0]), Vertex(vec![1, 1]));
        assert!(matches!(e, Err(Error::Parameter(_))));
        let e = Edge::new(Vertex(vec![1, 0]), Vertex(vec![0, 0])).unwrap();
        assert!(e.a < e.b);
    }

    #[test]
    fn same_region_seed_reproduces_field() {
        let r = box2(3);
        let f1 = sample_uniform_field(&r, 777);
        let f2 = sample_uniform_field(&r, 777);
        assert_eq!(f1.uniforms(), f2.uniforms());
    }

    #[test]
    fn zero_edge_region_gives_empty_field() {
        // Two vertices at distance 2: no induced edges.
        let r =
            Region::from_vertices(2, vec![Vertex(vec![0, 0]), Vertex(vec![2, 0])]).unwrap();
        assert_eq!(r.edge_count(), 0);
        let f = sample_uniform_field(&r, 1);
        assert!(f.uniforms().is_empty());
    }

    #[test]
    fn field_mean_within_lln_band() {
        // >= 10^4 edges: mean of u within 0.5 +/- 0.02 (4 sigma of
        // U(0,1) would be ~0.0115; the spec band is wider).
        let r = Region::lattice_box(&[0, 0], &[70, 70]).unwrap();
        assert!(r.edge_count() >= 10_000);
        let f = sample_uniform_field(&r, 2024);
        let mean = f.uniforms().iter().sum::<f64>() / f.uniforms().len() as f64;
        assert!((mean - 0.5).abs() <= 0.02, "mean {mean}");
    }

    #[test]
    fn open_at_p_one_opens_everything() {
        let r = box2(2);
        let cfg = sample_uniform_field(&r, 5).open_at(1.0).unwrap();
        assert_eq!(cfg.open_count(), r.edge_count());
    }

    #[test]
    fn open_at_rejects_bad_p() {
        let r = box2(1);
        let f = sample_uniform_field(&r, 5);
        assert!(f.open_at(0.0).is_err());
        assert!(f.open_at(1.5).is_err());
    }

    #[test]
    fn monotone_coupling_nested() {
        let r = box2(4);
        let f = sample_uniform_field(&r, 11);
        let lo = f.open_at(0.3).unwrap();
        let hi = f.open_at(0.8).unwrap();
        for e in 0..r.edge_count() {
            assert!(!lo.is_open(e) || hi.is_open(e));
        }
    }

    #[test]
    fn open_fraction_within_binomial_band() {
        // p = 0.7 on >= 10^4 edges, 4 sigma binomial interval.
        let r = Region::lattice_box(&[0, 0], &[70, 70]).unwrap();
        let m = r.edge_count() as f64;
        let cfg = sample_uniform_field(&r, 31).open_at(0.7).unwrap();
        let frac = cfg.open_count() as f64 / m;
        let sigma = (0.7 * 0.3 / m).sqrt();
        assert!((frac - 0.7).abs() <= 4.0 * sigma, "fraction {frac}");
    }

    #[test]
    fn two_stage_marginal_parameter() {
        // r = (q - p) / (1 - p); p=0.6, q=0.9 gives 0.75.
        let r = box2(2);
        let pair = sample_two_stage(&r, 0.6, 0.9, 3).unwrap();
        let aux = pair.field.aux().unwrap();
        assert!((aux.r - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_stage_p_equals_q_identical() {
        let r = box2(3);
        let pair = sample_two_stage(&r, 0.7, 0.7, 9).unwrap();
        assert_eq!(pair.at_p.open_flags(), pair.at_q.open_flags());
        assert_eq!(pair.field.aux().unwrap().r, 0.0);
    }

    #[test]
    fn two_stage_nested_and_q_marginal() {
        let r = Region::lattice_box(&[0, 0], &[70, 70]).unwrap();
        let m = r.edge_count() as f64;
        let pair = sample_two_stage(&r, 0.6, 0.8, 17).unwrap();
        for e in 0..r.edge_count() {
            assert!(!pair.at_p.is_open(e) || pair.at_q.is_open(e));
        }
        let frac = pair.at_q.open_count() as f64 / m;
        let sigma = (0.8 * 0.2 / m).sqrt();
        assert!((frac - 0.8).abs() <= 4.0 * sigma, "q fraction {frac}");
    }

    #[test]
    fn two_stage_rejects_bad_parameters() {
        let r = box2(1);
        assert!(sample_two_stage(&r, 0.8, 0.6, 0).is_err());
        assert!(sample_two_stage(&r, 0.6, 1.0, 0).is_err());
    }

    #[test]
    fn config_record_roundtrip() {
        let r = box2(1);
        let cfg = sample_uniform_field(&r, 4).open_at(0.5).unwrap();
        let rec = ConfigRecord::new(&cfg, 4);
        let line = serde_json::to_string(&rec).unwrap();
        let back: ConfigRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.open_edges, rec.open_edges);
        assert_eq!(back.bounds, (vec![-1, -1], vec![1, 1]));
    }
}
