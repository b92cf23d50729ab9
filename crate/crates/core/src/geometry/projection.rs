//! Three-coordinate shadows of state and effect bodies.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hull::{hull2, hull3, polygon_area, principal_frame, volume, P2, P3};
use super::lp::{Lp, LpFailure};
use super::{HPolytope, VPolytope};
use crate::error::{Error, Result};
use crate::qutrit_ref::{gell_mann, sample_haar_ket, HermitianOp3};
use crate::rng::{substream, tag};

/// Relative hull tolerance for exact vertex data.
pub const VERTEX_TOL: f64 = 1e-9;
/// Relative hull tolerance for LP maximizers.
pub const LP_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection3D {
    pub axes: [usize; 3],
    pub points: Vec<P3>,
    /// Indices into `points`.
    pub hull_vertices: Vec<usize>,
    /// Outward triangles; a fan when the hull is planar.
    pub hull_facets: Vec<[usize; 3]>,
    /// 3 for a solid hull, less when degenerate.
    pub affine_dim: usize,
}

/// A planar cut of a projection, as a counter-clockwise polygon in the two
/// remaining coordinates.
pub type Section = Vec<P2>;

fn check_axes(axes: [usize; 3], dim: usize) -> Result<()> {
    if axes.iter().any(|&a| a >= dim) {
        return Err(Error::Argument(format!("axes {axes:?} out of range for dimension {dim}")));
    }
    if axes[0] == axes[1] || axes[0] == axes[2] || axes[1] == axes[2] {
        return Err(Error::Argument(format!("axes {axes:?} are not distinct")));
    }
    Ok(())
}

impl Projection3D {
    pub fn from_points(axes: [usize; 3], points: Vec<P3>, tol: f64) -> Self {
        let hull = hull3(&points, tol);
        Self {
            axes,
            points,
            hull_vertices: hull.vertices,
            hull_facets: hull.facets,
            affine_dim: hull.dim,
        }
    }

    pub fn extreme_points(&self) -> Vec<P3> {
        self.hull_vertices.iter().map(|&i| self.points[i]).collect()
    }

    /// Volume, area or length according to the affine dimension.
    pub fn measure(&self) -> f64 {
        match self.affine_dim {
            3 => volume(&self.points, &self.hull_facets),
            2 => self
                .hull_facets
                .iter()
                .map(|f| {
                    let p = f.map(|i| self.points[i]);
                    let a = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
                    let b = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
                    let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
                })
                .sum(),
            1 => {
                let (a, b) = (self.points[self.hull_vertices[0]], self.points[self.hull_vertices[1]]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            }
            _ => 0.0,
        }
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = if self.affine_dim >= 2 {
            self.hull_facets
                .iter()
                .flat_map(|f| (0..3).map(move |e| (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]))))
                .collect()
        } else {
            let v = &self.hull_vertices;
            (0..v.len())
                .flat_map(|a| (a + 1..v.len()).map(move |b| (v[a], v[b])))
                .collect()
        };
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Cut of the hull by the plane `coordinate[slot] = value`. Hull vertices
    /// within `tol` of the plane count as lying in it.
    pub fn section(&self, slot: usize, value: f64, tol: f64) -> Section {
        let keep: Vec<usize> = (0..3).filter(|&c| c != slot).collect();
        let flat = |p: &P3| [p[keep[0]], p[keep[1]]];
        let mut cut: Vec<P2> = self
            .hull_vertices
            .iter()
            .map(|&i| &self.points[i])
            .filter(|p| (p[slot] - value).abs() <= tol)
            .map(flat)
            .collect();
        for (a, b) in self.edges() {
            let (p, q) = (&self.points[a], &self.points[b]);
            let (da, db) = (p[slot] - value, q[slot] - value);
            if (da > tol && db < -tol) || (da < -tol && db > tol) {
                let t = da / (da - db);
                cut.push([
                    p[keep[0]] + t * (q[keep[0]] - p[keep[0]]),
                    p[keep[1]] + t * (q[keep[1]] - p[keep[1]]),
                ]);
            }
        }
        hull2(&cut, 1e-9).into_iter().map(|i| cut[i]).collect()
    }

    /// Distance-tolerant membership in the hull.
    pub fn contains(&self, p: &P3, tol: f64) -> bool {
        let pts = self.extreme_points();
        if pts.is_empty() {
            return false;
        }
        if self.affine_dim == 3 {
            let mut interior = [0.0; 3];
            for q in &pts {
                for c in 0..3 {
                    interior[c] += q[c] / pts.len() as f64;
                }
            }
            return self.hull_facets.iter().all(|f| {
                let [a, b, c] = f.map(|i| self.points[i]);
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                let side = |x: &P3| ((x[0] - a[0]) * n[0] + (x[1] - a[1]) * n[1] + (x[2] - a[2]) * n[2]) / len;
                let sign = if side(&interior) > 0.0 { -1.0 } else { 1.0 };
                sign * side(p) <= tol
            });
        }
        let frame = principal_frame(&pts);
        let local = |x: &P3| {
            let d = [x[0] - frame.center[0], x[1] - frame.center[1], x[2] - frame.center[2]];
            frame.axes.map(|ax| d[0] * ax[0] + d[1] * ax[1] + d[2] * ax[2])
        };
        let q = local(p);
        let d = self.affine_dim;
        if (d..3).any(|c| q[c].abs() > tol) {
            return false;
        }
        let flat: Vec<P2> = pts.iter().map(|x| {
            let l = local(x);
            [l[0], if d == 2 { l[1] } else { 0.0 }]
        }).collect();
        let ring: Vec<P2> = hull2(&flat, 1e-12).into_iter().map(|i| flat[i]).collect();
        super::hull::polygon_distance(&[q[0], if d == 2 { q[1] } else { 0.0 }], &ring) <= tol
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serializing projection: {e}")))
    }

    /// ASCII PLY with the hull vertices and facets.
    pub fn to_ply(&self) -> String {
        let mut remap = vec![usize::MAX; self.points.len()];
        for (k, &i) in self.hull_vertices.iter().enumerate() {
            remap[i] = k;
        }
        let mut out = String::new();
        let _ = writeln!(out, "ply\nformat ascii 1.0");
        let _ = writeln!(out, "comment axes {} {} {}", self.axes[0], self.axes[1], self.axes[2]);
        let _ = writeln!(out, "element vertex {}", self.hull_vertices.len());
        let _ = writeln!(out, "property double x\nproperty double y\nproperty double z");
        let _ = writeln!(out, "element face {}", self.hull_facets.len());
        let _ = writeln!(out, "property list uchar int vertex_indices\nend_header");
        for &i in &self.hull_vertices {
            let p = self.points[i];
            let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
        }
        for f in &self.hull_facets {
            let _ = writeln!(out, "3 {} {} {}", remap[f[0]], remap[f[1]], remap[f[2]]);
        }
        out
    }
}

fn pick(v: &DVector<f64>, axes: [usize; 3]) -> P3 {
    axes.map(|a| v[a])
}

pub fn project_vpolytope(body: &VPolytope, axes: [usize; 3]) -> Result<Projection3D> {
    project_vpolytope_with_tol(body, axes, VERTEX_TOL)
}

pub fn project_vpolytope_with_tol(body: &VPolytope, axes: [usize; 3], tol: f64) -> Result<Projection3D> {
    check_axes(axes, body.dim())?;
    let points = body.vertices().iter().map(|v| pick(v, axes)).collect();
    Ok(Projection3D::from_points(axes, points, tol))
}

/// The 26 nonzero directions of `{−1, 0, 1}³`, normalized.
pub fn lattice_directions() -> Vec<P3> {
    let mut out = Vec::with_capacity(26);
    for x in -1i32..=1 {
        for y in -1i32..=1 {
            for z in -1i32..=1 {
                if (x, y, z) == (0, 0, 0) {
                    continue;
                }
                let n = ((x * x + y * y + z * z) as f64).sqrt();
                out.push([x as f64 / n, y as f64 / n, z as f64 / n]);
            }
        }
    }
    out
}

fn support_directions(n_dirs: usize, seed: u64) -> Vec<P3> {
    let mut dirs = lattice_directions();
    dirs.truncate(n_dirs);
    let mut rng = substream(seed, &[tag::DIRECTIONS]);
    while dirs.len() < n_dirs {
        let g: P3 = [(); 3].map(|_| rng.sample::<f64, _>(StandardNormal));
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n > 1e-12 {
            dirs.push(g.map(|x| x / n));
        }
    }
    dirs
}

fn support_point(body: &HPolytope, axes: [usize; 3], d: &P3) -> Result<P3> {
    let dim = body.dim();
    let mut objective = vec![0.0; dim];
    for (slot, &a) in axes.iter().enumerate() {
        objective[a] = d[slot];
    }
    let mut lp = Lp::maximize(&objective, &vec![(f64::NEG_INFINITY, f64::INFINITY); dim]);
    for c in &body.inequalities {
        lp.range(c.a.as_slice(), c.lo, c.hi);
    }
    for c in &body.equalities {
        lp.equal(c.a.as_slice(), c.b);
    }
    match lp.solve() {
        Ok((_, x)) => Ok([x[axes[0]], x[axes[1]], x[axes[2]]]),
        Err(LpFailure::Infeasible) => Err(Error::Data("support LP is infeasible: empty body".into())),
        Err(LpFailure::Unbounded) => Err(Error::Data("support LP is unbounded: body is not bounded".into())),
        Err(LpFailure::Other(msg)) => Err(Error::Numerical(format!("support LP failed: {msg}"))),
    }
}

/// Inner approximation of the shadow of `body` from LP maximizers along
/// `n_dirs` directions (lattice directions first).
pub fn project_hpolytope(body: &HPolytope, axes: [usize; 3], n_dirs: usize, seed: u64) -> Result<Projection3D> {
    check_axes(axes, body.dim())?;
    if n_dirs == 0 {
        return Err(Error::Argument("need at least one support direction".into()));
    }
    let dirs = support_directions(n_dirs, seed);
    let points = dirs
        .par_iter()
        .map(|d| support_point(body, axes, d))
        .collect::<Result<Vec<P3>>>()?;
    Ok(Projection3D::from_points(axes, points, LP_TOL))
}

/// Doubles `n_dirs` from `start` until the hull measure changes by less than
/// 1%, up to `cap` directions. Returns the projection and the count used.
pub fn project_hpolytope_converged(
    body: &HPolytope,
    axes: [usize; 3],
    start: usize,
    cap: usize,
    seed: u64,
) -> Result<(Projection3D, usize)> {
    let mut n = start.max(1);
    let mut current = project_hpolytope(body, axes, n, seed)?;
    while n * 2 <= cap {
        let next = project_hpolytope(body, axes, n * 2, seed)?;
        let (a, b) = (current.measure(), next.measure());
        n *= 2;
        let settled = next.affine_dim == current.affine_dim && (b - a).abs() <= 0.01 * b.abs().max(f64::MIN_POSITIVE);
        current = next;
        if settled {
            break;
        }
    }
    Ok((current, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JnrKind {
    /// `A_0 = I`, `A_α = λ_α`.
    State,
    /// `B_0 = I/3`, `B_α = λ_α/2`, with complements, zero and unit.
    Effect,
}

fn jnr_operator(kind: JnrKind, index: usize) -> Result<HermitianOp3> {
    let op = gell_mann(index)?;
    Ok(match (kind, index) {
        (JnrKind::State, _) => op,
        (JnrKind::Effect, 0) => op.scale(1.0 / 3.0),
        (JnrKind::Effect, _) => op.scale(0.5),
    })
}

/// Hull of the joint numerical range of three operators over `n_samples`
/// Haar pure states.
pub fn sample_jnr(kind: JnrKind, axes: [usize; 3], n_samples: usize, seed: u64) -> Result<Projection3D> {
    check_axes(axes, 9)?;
    if n_samples < 4 {
        return Err(Error::Argument("joint numerical range needs at least 4 samples".into()));
    }
    let ops = [
        jnr_operator(kind, axes[0])?,
        jnr_operator(kind, axes[1])?,
        jnr_operator(kind, axes[2])?,
    ];
    let mut rng = substream(seed, &[tag::JNR]);
    let mut points = Vec::with_capacity(2 * n_samples + 2);
    let unit: P3 = axes.map(|a| if a == 0 { 1.0 } else { 0.0 });
    if kind == JnrKind::Effect {
        points.push([0.0; 3]);
        points.push(unit);
    }
    for _ in 0..n_samples {
        let psi = HermitianOp3::projector(&sample_haar_ket(&mut rng));
        let w: P3 = [0, 1, 2].map(|c| psi.trace_product(&ops[c]));
        points.push(w);
        if kind == JnrKind::Effect {
            points.push([0, 1, 2].map(|c| unit[c] - w[c]));
        }
    }
    Ok(Projection3D::from_points(axes, points, VERTEX_TOL))
}

/// Area of a section polygon.
pub fn section_area(section: &Section) -> f64 {
    polygon_area(section).abs()
}

#[cfg(test)]
mod tests {
    use super::super::{Ambient, Inequality};
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn box_corners_from_lattice_directions() {
        let ineq = (0..4)
            .map(|c| {
                let mut a = DVector::zeros(4);
                a[c] = 1.0;
                Inequality { a, lo: -1.0 - c as f64, hi: 1.0 + c as f64 }
            })
            .collect();
        let body = HPolytope::new(4, ineq, vec![]).unwrap();
        let p = project_hpolytope(&body, [0, 2, 3], 26, 0).unwrap();
        assert_eq!(p.affine_dim, 3);
        let mut corners = p.extreme_points();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        corners.dedup();
        assert_eq!(corners.len(), 8);
        for c in corners {
            assert!((c[0].abs() - 1.0).abs() < 1e-9);
            assert!((c[1].abs() - 3.0).abs() < 1e-9);
            assert!((c[2].abs() - 4.0).abs() < 1e-9);
        }
        assert!((p.measure() - 2.0 * 6.0 * 8.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_support_is_data_error() {
        let body = HPolytope::new(3, vec![Inequality { a: v(&[1.0, 0.0, 0.0]), lo: 0.0, hi: 1.0 }], vec![]).unwrap();
        assert!(matches!(project_hpolytope(&body, [0, 1, 2], 26, 0), Err(Error::Data(_))));
    }

    #[test]
    fn axes_are_validated() {
        let body = VPolytope::new(vec![v(&[1.0, 0.0, 0.0])], Ambient::StateSpace).unwrap();
        assert!(project_vpolytope(&body, [0, 0, 1]).is_err());
        assert!(project_vpolytope(&body, [0, 1, 3]).is_err());
        let p = project_vpolytope(&body, [0, 1, 2]).unwrap();
        assert_eq!(p.affine_dim, 0);
        assert_eq!(p.extreme_points(), vec![[1.0, 0.0, 0.0]]);
    }

    #[test]
    fn section_of_cube() {
        let mut pts = vec![];
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 2.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        let p = Projection3D::from_points([0, 1, 2], pts, 1e-9);
        let s = p.section(2, 0.5, 1e-12);
        assert_eq!(s.len(), 4);
        assert!((section_area(&s) - 1.0).abs() < 1e-12);
        let top = p.section(2, 2.0, 1e-9);
        assert!((section_area(&top) - 1.0).abs() < 1e-12);
        assert!(p.section(2, 3.0, 1e-9).is_empty());
        assert!(p.contains(&[0.5, 0.5, 1.0], 1e-12));
        assert!(!p.contains(&[0.5, 0.5, 2.1], 1e-12));
    }

    #[test]
    fn ply_lists_hull_only() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.1, 0.1, 0.1]];
        let p = Projection3D::from_points([1, 2, 3], pts, 1e-9);
        let ply = p.to_ply();
        assert!(ply.contains("element vertex 4"));
        assert!(ply.contains("element face 4"));
        let round: Projection3D = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn state_jnr_with_identity_is_flat() {
        let p = sample_jnr(JnrKind::State, [0, 2, 5], 500, 1).unwrap();
        assert!(p.points.iter().all(|w| (w[0] - 1.0).abs() < 1e-12));
        assert_eq!(p.affine_dim, 2);
    }

    #[test]
    fn effect_jnr_without_identity_is_centrally_symmetric() {
        let p = sample_jnr(JnrKind::Effect, [1, 4, 6], 300, 2).unwrap();
        for w in &p.points {
            let neg = [-w[0], -w[1], -w[2]];
            assert!(p.points.iter().any(|q| (0..3).all(|c| (q[c] - neg[c]).abs() < 1e-12)));
        }
        assert_eq!(sample_jnr(JnrKind::Effect, [0, 1, 2], 3, 0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn qubit_ball_projection() {
        let p = sample_jnr(JnrKind::State, [1, 2, 3], 4000, 3).unwrap();
        let r_max = p.points.iter().map(|w| (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()).fold(0.0, f64::max);
        assert!(r_max <= 1.0 + 1e-12);
        // the hull of the shadow fills most of the unit ball
        assert!(p.measure() > 0.9 * 4.0 / 3.0 * std::f64::consts::PI);
    }
}
