//! Discretized cylinders `cyl(nS(v), n)`: the lattice region, a deterministic
//! orthonormal frame completing the axis direction, and the two anchored
//! boundary vertex sets the cutsets must separate.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};

/// Tolerance for membership ties on the continuous predicates.
pub const GEOM_TOL: f64 = 1e-9;

/// `B(n, v)`: lattice points of the cylinder with square cross-section
/// `[-n, n]^{d-1}` normal to `v` and height `2n`, together with the two
/// discrete boundary sets `C'_1` (positive `x . v` side) and `C'_2`.
#[derive(Debug, Clone)]
pub struct CylinderInstance {
    pub n: u32,
    pub v: Vec<f64>,
    /// Orthonormal completion of `v`: `d - 1` cross-section axes.
    pub frame: Vec<Vec<f64>>,
    pub region: Arc<Region>,
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Sign-canonical representative of the line spanned by `v`: first component
/// of magnitude above tolerance is positive. Keeps `frame(v) == frame(-v)`.
fn canonical_direction(v: &[f64]) -> Vec<f64> {
    let flip = v
        .iter()
        .find(|x| x.abs() > GEOM_TOL)
        .map_or(false, |x| *x < 0.0);
    if flip {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    }
}

/// Deterministic orthonormal completion of a unit vector: Gram-Schmidt over
/// the standard basis minus the largest-pivot axis, each result sign-fixed so
/// its first nonzero component is positive.
pub fn complete_frame(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let vc = canonical_direction(v);
    let pivot = (0..d)
        .max_by(|&i, &j| vc[i].abs().partial_cmp(&vc[j].abs()).expect("finite"))
        .expect("nonempty");
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for i in 0..d {
        if i == pivot {
            continue;
        }
        let mut f: Vec<f64> = (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
        let proj = dot(&f, &vc);
        for k in 0..d {
            f[k] -= proj * vc[k];
        }
        for prev in &frame {
            let proj = dot(&f, prev);
            for k in 0..d {
                f[k] -= proj * prev[k];
            }
        }
        let len = norm2(&f);
        debug_assert!(len > GEOM_TOL, "standard basis completion degenerate");
        for x in f.iter_mut() {
            *x /= len;
        }
        if f.iter().find(|x| x.abs() > GEOM_TOL).map_or(false, |x| *x < 0.0) {
            for x in f.iter_mut() {
                *x = -*x;
            }
        }
        frame.push(f);
    }
    frame
}

/// Build the lattice cylinder for side parameter `n >= 2` and unit vector `v`.
pub fn build_cylinder(n: u32, v: &[f64]) -> Result<CylinderInstance> {
    let d = v.len();
    if d < 2 {
        return Err(Error::parameter("direction must have dimension >= 2"));
    }
    if n < 2 {
        return Err(Error::parameter(format!("cylinder needs n >= 2, got {n}")));
    }
    if (norm2(v) - 1.0).abs() > 1e-12 {
        return Err(Error::parameter(format!(
            "direction must be a unit vector, |v| = {}",
            norm2(v)
        )));
    }
    let frame = complete_frame(v);
    let nf = n as f64;
    let inside = |x: &[f64]| -> bool {
        let axial = dot(x, v);
        if axial.abs() > nf + GEOM_TOL {
            return false;
        }
        frame.iter().all(|f| dot(x, f).abs() <= nf + GEOM_TOL)
    };

    // Any cylinder point has Euclidean norm at most n * sqrt(d).
    let radius = (nf * (d as f64).sqrt()).ceil() as i64 + 1;
    let mut verts = Vec::new();
    let mut cur = vec![-radius; d];
    'outer: loop {
        let xf: Vec<f64> = cur.iter().map(|&c| c as f64).collect();
        if inside(&xf) {
            verts.push(Vertex(cur.clone()));
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            cur[axis] += 1;
            if cur[axis] <= radius {
                break;
            }
            cur[axis] = -radius;
        }
    }
    let region = Region::from_vertices(d, verts)?;

    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for id in 0..region.vertex_count() {
        let x = region.vertex(id);
        let xf: Vec<f64> = x.0.iter().map(|&c| c as f64).collect();
        let axial = dot(&xf, v);
        if axial.abs() <= GEOM_TOL {
            continue; // on the base hyperrectangle, in neither half
        }
        let has_outside_neighbor = (0..d).any(|k| {
            [1i64, -1].iter().any(|&s| {
                let mut y = xf.clone();
                y[k] += s as f64;
                !inside(&y)
            })
        });
        if has_outside_neighbor {
            if axial > 0.0 {
                c1.push(id);
            } else {
                c2.push(id);
            }
        }
    }
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::geometry(format!(
            "cylinder n={n} too small for direction {v:?}: empty boundary set"
        )));
    }
    Ok(CylinderInstance { n, v: v.to_vec(), frame, region, c1, c2 })
}

impl CylinderInstance {
    /// Normalizing cross-section area `(2n)^{d-1}`.
    pub fn cross_section_area(&self) -> f64 {
        (2.0 * self.n as f64).powi(self.v.len() as i32 - 1)
    }

    /// The anchored trivial cutset: all region edges with an endpoint in
    /// `C'_1`. Its size is at most `2d 3^{d-1} n^{d-1}` (engineering bound,
    /// checked empirically in tests).
    pub fn trivial_cut(&self) -> Vec<usize> {
        let in_c1: HashSet<usize> = self.c1.iter().copied().collect();
        (0..self.region.edge_count())
            .filter(|&e| {
                let [a, b] = self.region.edge_ends(e);
                in_c1.contains(&a) || in_c1.contains(&b)
            })
            .collect()
    }

    /// True iff removing `edges` leaves no path from `C'_1` to `C'_2` inside
    /// the cylinder graph.
    pub fn verify_cutset(&self, edges: &[usize]) -> bool {
        let blocked: HashSet<usize> = edges.iter().copied().collect();
        let region = &self.region;
        let mut seen = vec![false; region.vertex_count()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in &self.c1 {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        let target: HashSet<usize> = self.c2.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if target.contains(&v) {
                return false;
            }
            for &(e, w) in region.incident(v) {
                if !blocked.contains(&e) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_square_counts() {
        let inst = build_cylinder(4, &[0.0, 1.0]).unwrap();
        // [-4,4]^2
        assert_eq!(inst.region.vertex_count(), 81);
        let (lo, hi) = inst.region.bounds();
        assert_eq!((lo, hi), (vec![-4, -4], vec![4, 4]));
    }

    #[test]
    fn axis_aligned_boundary_sets() {
        let inst = build_cylinder(4, &[0.0, 1.0]).unwrap();
        // C'_1 lives strictly in the upper half, contains the whole top row,
        // and is disjoint from C'_2.
        let top_row = (0..inst.region.vertex_count())
            .filter(|&id| inst.region.vertex(id).0[1] == 4)
            .collect::<Vec<_>>();
        for id in &inst.c1 {
            assert!(inst.region.vertex(*id).0[1] > 0);
        }
        for id in &top_row {
            assert!(inst.c1.contains(id));
        }
        for id in &inst.c2 {
            assert!(inst.region.vertex(*id).0[1] < 0);
            assert!(!inst.c1.contains(id));
        }
    }

    #[test]
    fn diagonal_cylinder_matches_predicate_oracle() {
        // Independent script: evaluate the continuous membership predicate
        // point by point with the explicit 2d rotation frame.
        let s = 1.0 / 2f64.sqrt();
        let v = [s, s];
        let inst = build_cylinder(6, &v).unwrap();
        let f = [s, -s]; // rotation of v by -90 degrees, first component positive
        let mut expected = Vec::new();
        for x in -10i64..=10 {
            for y in -10i64..=10 {
                let ax = x as f64 * v[0] + y as f64 * v[1];
                let cr = x as f64 * f[0] + y as f64 * f[1];
                if ax.abs() <= 6.0 + GEOM_TOL && cr.abs() <= 6.0 + GEOM_TOL {
                    expected.push(Vertex(vec![x, y]));
                }
            }
        }
        expected.sort();
        assert_eq!(inst.region.vertices(), &expected[..]);
    }

    #[test]
    fn frame_is_orthonormal_and_sign_fixed() {
        for v in [
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.6, 0.8],
            vec![1.0 / 3f64.sqrt(); 3],
            vec![0.0, 0.0, 1.0],
        ] {
            let frame = complete_frame(&v);
            assert_eq!(frame.len(), v.len() - 1);
            for (i, f) in frame.iter().enumerate() {
                assert!((norm2(f) - 1.0).abs() < 1e-12);
                assert!(dot(f, &v).abs() < 1e-12);
                for g in &frame[i + 1..] {
                    assert!(dot(f, g).abs() < 1e-12);
                }
                let first = f.iter().find(|x| x.abs() > GEOM_TOL).unwrap();
                assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn frame_identical_for_opposite_directions() {
        let v = vec![0.36, 0.48, 0.8];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(complete_frame(&v), complete_frame(&neg));
        let a = build_cylinder(3, &v).unwrap();
        let b = build_cylinder(3, &neg).unwrap();
        assert_eq!(a.region.vertices(), b.region.vertices());
        // The two sides swap.
        assert_eq!(a.c1, b.c2);
        assert_eq!(a.c2, b.c1);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_cylinder(1, &[0.0, 1.0]).is_err());
        assert!(build_cylinder(4, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn trivial_cut_is_a_cutset_and_linear_in_n() {
        let mut sizes = Vec::new();
        for n in [4u32, 8, 16] {
            let inst = build_cylinder(n, &[0.0, 1.0]).unwrap();
            let cut = inst.trivial_cut();
            assert!(inst.verify_cutset(&cut), "trivial cut must separate");
            let c_d = 2.0 * 2.0 * 3.0; // 2d 3^{d-1}, d = 2
            assert!((cut.len() as f64) <= c_d * n as f64);
            sizes.push((n as f64, cut.len() as f64));
        }
        // Linear growth: size(2n)/size(n) close to 2.
        let r1 = sizes[1].1 / sizes[0].1;
        let r2 = sizes[2].1 / sizes[1].1;
        assert!((r1 - 2.0).abs() < 0.35, "ratio {r1}");
        assert!((r2 - 2.0).abs() < 0.35, "ratio {r2}");
    }

    #[test]
    fn verify_cutset_degenerate_inputs() {
        let inst = build_cylinder(3, &[0.0, 1.0]).unwrap();
        assert!(!inst.verify_cutset(&[]), "empty set cannot cut a connected box");
        let all: Vec<usize> = (0..inst.region.edge_count()).collect();
        assert!(inst.verify_cutset(&all));
    }
}
