//! Realized and consistent convex bodies.
//!
//! The realized state (effect) space is the convex hull of the fitted state
//! (effect) vectors, held as a [`VPolytope`]. The consistent spaces are the
//! duals of the opposite realized space, held as an [`HPolytope`]. Bodies are
//! compared along rays from the center `(1, 0, …, 0)` of the normalized
//! states and through 3D projections.

pub mod hull;
mod lp;
mod projection;

pub use projection::{
    lattice_directions, project_hpolytope, project_hpolytope_converged, project_vpolytope,
    project_vpolytope_with_tol, sample_jnr, section_area, JnrKind, Projection3D, Section, LP_TOL,
    VERTEX_TOL,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qutrit_ref::{sample_haar_pure_state, state_to_bloch};
use crate::rng::{substream, tag};
use lp::{Lp, LpFailure};

/// Slack below which a point counts as outside a halfspace body.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ambient {
    StateSpace,
    EffectSpace,
}

/// Convex hull of a finite vertex list; interior points are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct VPolytope {
    vertices: Vec<DVector<f64>>,
    ambient: Ambient,
}

impl VPolytope {
    pub fn new(vertices: Vec<DVector<f64>>, ambient: Ambient) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::Argument("polytope needs at least one vertex".into()));
        };
        let dim = first.len();
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Argument("vertices differ in dimension".into()));
        }
        if ambient == Ambient::StateSpace && vertices.iter().any(|v| v[0] != 1.0) {
            return Err(Error::Argument("state-space vertices need leading component 1".into()));
        }
        Ok(Self { vertices, ambient })
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

/// `lo ≤ a · x ≤ hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub a: DVector<f64>,
    pub lo: f64,
    pub hi: f64,
}

/// `a · x = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equality {
    pub a: DVector<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    pub inequalities: Vec<Inequality>,
    pub equalities: Vec<Equality>,
    dim: usize,
}

impl HPolytope {
    pub fn new(dim: usize, inequalities: Vec<Inequality>, equalities: Vec<Equality>) -> Result<Self> {
        if inequalities.iter().any(|c| c.a.len() != dim) || equalities.iter().any(|c| c.a.len() != dim) {
            return Err(Error::Argument("constraint dimension mismatch".into()));
        }
        Ok(Self { inequalities, equalities, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest slack over all inequalities (negative when violated) and
    /// largest equality residual.
    pub fn slack(&self, x: &DVector<f64>) -> (f64, f64) {
        let ineq = self
            .inequalities
            .iter()
            .map(|c| {
                let v = c.a.dot(x);
                (v - c.lo).min(c.hi - v)
            })
            .fold(f64::INFINITY, f64::min);
        let eq = self
            .equalities
            .iter()
            .map(|c| (c.a.dot(x) - c.b).abs())
            .fold(0.0, f64::max);
        (ineq, eq)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let (ineq, eq) = self.slack(x);
        ineq >= -tol && eq <= tol
    }

    /// Projects `v` onto the directions allowed by the equalities.
    fn tangent(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.equalities.is_empty() {
            return v.clone();
        }
        let a = DMatrix::from_fn(self.equalities.len(), self.dim, |r, c| self.equalities[r].a[c]);
        let gram = &a * a.transpose();
        match gram.pseudo_inverse(1e-12) {
            Ok(pinv) => v - a.transpose() * (pinv * (&a * v)),
            Err(_) => v.clone(),
        }
    }

    /// Ray-shooting boundedness test from `origin` along `n_dirs` random
    /// directions tangent to the equalities.
    pub fn is_bounded(&self, origin: &DVector<f64>, n_dirs: usize, seed: u64) -> Result<bool> {
        let mut rng = substream(seed, &[tag::DIRECTIONS]);
        for _ in 0..n_dirs {
            let raw = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let d = self.tangent(&raw);
            if d.norm() < 1e-12 {
                continue;
            }
            if ray_shoot_h(self, origin, &d)?.is_infinite() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

/// Hull of the rows of `S_realized`, each divided by its leading component
/// (which must be within `1e-6` of one).
pub fn realized_state_space(s_realized: &DMatrix<f64>) -> Result<VPolytope> {
    if s_realized.nrows() == 0 {
        return Err(Error::Argument("no realized states".into()));
    }
    let mut rows = Vec::with_capacity(s_realized.nrows());
    for (i, row) in s_realized.row_iter().enumerate() {
        let lead = row[0];
        if (lead - 1.0).abs() > 1e-6 {
            return Err(Error::Data(format!("realized state {i} has leading component {lead}")));
        }
        let mut v = row.transpose() / lead;
        v[0] = 1.0;
        rows.push(v);
    }
    VPolytope::new(rows, Ambient::StateSpace)
}

fn unit_vector(dim: usize) -> DVector<f64> {
    let mut u = DVector::zeros(dim);
    u[0] = 1.0;
    u
}

/// Realized effects and their complements `u − e`; column 0 must be `u`.
pub fn realized_effect_space(e_realized: &DMatrix<f64>) -> Result<VPolytope> {
    let cols = columns(e_realized);
    let Some(first) = cols.first() else {
        return Err(Error::Argument("no realized effects".into()));
    };
    let u = unit_vector(first.len());
    if (first - &u).amax() > 1e-6 {
        return Err(Error::Data("column 0 of the effect matrix is not the unit effect".into()));
    }
    let mut vertices = Vec::with_capacity(2 * cols.len());
    vertices.push(u.clone());
    vertices.extend(cols.iter().skip(1).cloned());
    vertices.push(DVector::zeros(u.len()));
    vertices.extend(cols.iter().skip(1).map(|e| &u - e));
    VPolytope::new(vertices, Ambient::EffectSpace)
}

/// States scoring in `[0, 1]` on every realized effect, normalized by `u`.
pub fn consistent_state_space(e_realized: &DMatrix<f64>) -> Result<HPolytope> {
    let cols = columns(e_realized);
    let Some(first) = cols.first() else {
        return Err(Error::Argument("no realized effects".into()));
    };
    let dim = first.len();
    let inequalities = cols
        .into_iter()
        .map(|a| Inequality { a, lo: 0.0, hi: 1.0 })
        .collect();
    HPolytope::new(dim, inequalities, vec![Equality { a: unit_vector(dim), b: 1.0 }])
}

/// Effects scoring in `[0, 1]` on every realized state.
pub fn consistent_effect_space(s_realized: &DMatrix<f64>) -> Result<HPolytope> {
    if s_realized.nrows() == 0 {
        return Err(Error::Argument("no realized states".into()));
    }
    let inequalities = s_realized
        .row_iter()
        .map(|r| Inequality { a: r.transpose(), lo: 0.0, hi: 1.0 })
        .collect();
    HPolytope::new(s_realized.ncols(), inequalities, vec![])
}

/// Largest `t` with `origin + t · direction` in the body; `+∞` if no
/// inequality bounds the ray.
pub fn ray_shoot_h(body: &HPolytope, origin: &DVector<f64>, direction: &DVector<f64>) -> Result<f64> {
    if origin.len() != body.dim || direction.len() != body.dim {
        return Err(Error::Argument("ray dimension does not match the body".into()));
    }
    let (slack, eq) = body.slack(origin);
    if slack < -MEMBERSHIP_TOL || eq > MEMBERSHIP_TOL {
        return Err(Error::Argument(format!(
            "ray origin lies outside the body (slack {slack:e}, equality residual {eq:e})"
        )));
    }
    for c in &body.equalities {
        if c.a.dot(direction).abs() > 1e-9 * c.a.norm() * direction.norm() {
            return Err(Error::Argument("ray direction leaves the equality subspace".into()));
        }
    }
    let scale = direction.norm();
    let mut t_max = f64::INFINITY;
    for c in &body.inequalities {
        let rate = c.a.dot(direction);
        if rate.abs() <= 1e-14 * c.a.norm() * scale {
            continue;
        }
        let v = c.a.dot(origin);
        let bound = if rate > 0.0 { (c.hi - v) / rate } else { (c.lo - v) / rate };
        t_max = t_max.min(bound.max(0.0));
    }
    Ok(t_max)
}

/// Largest `t` with `origin + t · direction` a convex combination of the
/// vertices, by linear programming.
pub fn ray_shoot_v(body: &VPolytope, origin: &DVector<f64>, direction: &DVector<f64>) -> Result<f64> {
    let dim = body.dim();
    if origin.len() != dim || direction.len() != dim {
        return Err(Error::Argument("ray dimension does not match the body".into()));
    }
    let verts = body.vertices();
    let n = verts.len();
    // variables: convex weights, then t
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut bounds = vec![(0.0, f64::INFINITY); n + 1];
    if direction.norm() == 0.0 {
        bounds[n] = (0.0, 0.0);
    }
    let mut lp = Lp::maximize(&objective, &bounds);
    lp.equal(&[vec![1.0; n], vec![0.0]].concat(), 1.0);
    for c in 0..dim {
        let constant = verts.iter().all(|v| v[c] == verts[0][c]);
        if constant && direction[c] == 0.0 {
            if (origin[c] - verts[0][c]).abs() > MEMBERSHIP_TOL {
                return Err(Error::Argument("ray origin lies outside the hull".into()));
            }
            continue;
        }
        let mut row: Vec<f64> = verts.iter().map(|v| v[c]).collect();
        row.push(-direction[c]);
        lp.equal(&row, origin[c]);
    }
    match lp.solve() {
        Ok((t, _)) => Ok(t.max(0.0)),
        Err(LpFailure::Infeasible) => Err(Error::Argument("ray origin lies outside the hull".into())),
        Err(LpFailure::Unbounded) => Ok(f64::INFINITY),
        Err(LpFailure::Other(msg)) => Err(Error::Numerical(format!("ray LP failed: {msg}"))),
    }
}

/// One ray from the center of the normalized states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayProbe {
    /// Unit Bloch direction (components 1..=8).
    pub direction: Vec<f64>,
    pub t_realized: f64,
    pub t_consistent: f64,
    pub ratio: f64,
}

/// Unit Bloch directions of `n` Haar pure states, as 9-vectors with leading 0.
pub fn haar_bloch_directions(n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = substream(seed, &[tag::RAYS]);
    (0..n)
        .map(|_| {
            let s = state_to_bloch(&sample_haar_pure_state(&mut rng)).expect("pure states have unit trace");
            let mut d = DVector::from_row_slice(s.components());
            d[0] = 0.0;
            let len = d.norm();
            d / len
        })
        .collect()
}

fn center(dim: usize) -> DVector<f64> {
    unit_vector(dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySet {
    pub probes: Vec<RayProbe>,
    /// Rays unbounded in the consistent body, left out of the statistics.
    pub excluded: usize,
}

/// Shoots `n_rays` Haar-distributed rays through both state bodies.
pub fn probe_rays(s_real: &VPolytope, s_cons: &HPolytope, n_rays: usize, seed: u64) -> Result<RaySet> {
    let dim = s_real.dim();
    if dim != 9 || s_cons.dim() != 9 {
        return Err(Error::Argument("ray probes need 9-dimensional state bodies".into()));
    }
    let origin = center(dim);
    if !s_cons.contains(&origin, MEMBERSHIP_TOL) {
        return Err(Error::Data("center lies outside the consistent state space".into()));
    }
    if ray_shoot_v(s_real, &origin, &DVector::zeros(dim)).is_err() {
        return Err(Error::Data("center lies outside the realized state space".into()));
    }
    let dirs = haar_bloch_directions(n_rays, seed);
    let shots: Vec<Result<Option<RayProbe>>> = dirs
        .par_iter()
        .map(|d| {
            let t_c = ray_shoot_h(s_cons, &origin, d)?;
            if !t_c.is_finite() {
                return Ok(None);
            }
            let t_r = ray_shoot_v(s_real, &origin, d)?;
            Ok(Some(RayProbe {
                direction: d.iter().skip(1).cloned().collect(),
                t_realized: t_r,
                t_consistent: t_c,
                ratio: if t_c > 0.0 { t_r / t_c } else { 1.0 },
            }))
        })
        .collect();
    let mut probes = Vec::with_capacity(n_rays);
    let mut excluded = 0;
    for s in shots {
        match s? {
            Some(p) => probes.push(p),
            None => excluded += 1,
        }
    }
    Ok(RaySet { probes, excluded })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub mean: f64,
    pub std: f64,
    pub rays: RaySet,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn ratio_summary(rays: RaySet) -> RatioSummary {
    let ratios: Vec<f64> = rays.probes.iter().map(|p| p.ratio).collect();
    let (mean, std) = mean_std(&ratios);
    RatioSummary { mean, std, rays }
}

/// Mean and standard deviation of `t_realized / t_consistent` over Haar
/// rays.
pub fn linear_dimension_ratio(
    s_real: &VPolytope,
    s_cons: &HPolytope,
    n_rays: usize,
    seed: u64,
) -> Result<RatioSummary> {
    Ok(ratio_summary(probe_rays(s_real, s_cons, n_rays, seed)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Straddle {
    pub max_realized_norm: f64,
    pub min_consistent_norm: f64,
    pub straddles: bool,
}

/// Along unit Bloch directions the boundary points have Bloch norm `t`.
pub fn straddle_from_probes(probes: &[RayProbe]) -> Straddle {
    let max_realized_norm = probes.iter().map(|p| p.t_realized).fold(f64::NEG_INFINITY, f64::max);
    let min_consistent_norm = probes.iter().map(|p| p.t_consistent).fold(f64::INFINITY, f64::min);
    Straddle {
        max_realized_norm,
        min_consistent_norm,
        straddles: max_realized_norm <= min_consistent_norm,
    }
}

pub fn straddling_check(s_real: &VPolytope, s_cons: &HPolytope, n_rays: usize, seed: u64) -> Result<Straddle> {
    Ok(straddle_from_probes(&probe_rays(s_real, s_cons, n_rays, seed)?.probes))
}

/// Residual statistics of `D_realized − D_reference` over non-unit columns.
pub fn residual_stats(d_realized: &DMatrix<f64>, d_reference: &DMatrix<f64>) -> Result<(f64, f64)> {
    if d_realized.shape() != d_reference.shape() {
        return Err(Error::Argument("residual shapes differ".into()));
    }
    let diffs: Vec<f64> = (1..d_realized.ncols())
        .flat_map(|j| (0..d_realized.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| d_realized[(i, j)] - d_reference[(i, j)])
        .collect();
    Ok(mean_std(&diffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit_ref::{is_valid_state_vector, pure_state_norm, BlochStateVector};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn cube_h(dim: usize) -> HPolytope {
        let ineq = (0..dim)
            .map(|c| {
                let mut a = DVector::zeros(dim);
                a[c] = 1.0;
                Inequality { a, lo: -1.0, hi: 1.0 }
            })
            .collect();
        HPolytope::new(dim, ineq, vec![]).unwrap()
    }

    #[test]
    fn ray_h_cube_and_unbounded() {
        let cube = cube_h(3);
        let t = ray_shoot_h(&cube, &v(&[0.0, 0.0, 0.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(t, 1.0);
        let t = ray_shoot_h(&cube, &v(&[0.5, 0.0, 0.0]), &v(&[-1.0, 0.0, 0.0])).unwrap();
        assert_eq!(t, 1.5);
        let slab = HPolytope::new(2, vec![Inequality { a: v(&[1.0, 0.0]), lo: 0.0, hi: 1.0 }], vec![]).unwrap();
        assert!(ray_shoot_h(&slab, &v(&[0.5, 0.0]), &v(&[0.0, 1.0])).unwrap().is_infinite());
        assert!(ray_shoot_h(&cube, &v(&[2.0, 0.0, 0.0]), &v(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn ray_v_triangle_and_single_vertex() {
        let tri = VPolytope::new(
            vec![v(&[0.0, 0.0]), v(&[3.0, 0.0]), v(&[0.0, 3.0])],
            Ambient::EffectSpace,
        )
        .unwrap();
        let centroid = v(&[1.0, 1.0]);
        let dir = v(&[2.0, -1.0]).normalize();
        let t = ray_shoot_v(&tri, &centroid, &dir).unwrap();
        assert!((t - 5f64.sqrt()).abs() < 1e-9, "{t}");
        assert!(ray_shoot_v(&tri, &v(&[5.0, 5.0]), &dir).is_err());

        let point = VPolytope::new(vec![v(&[1.0, 0.2])], Ambient::StateSpace).unwrap();
        assert_eq!(ray_shoot_v(&point, &v(&[1.0, 0.2]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn realized_effect_space_adds_complements() {
        let u = DMatrix::from_column_slice(9, 1, &unit_vector(9).as_slice().to_vec());
        let body = realized_effect_space(&u).unwrap();
        assert_eq!(body.vertices().len(), 2);
        assert_eq!(body.vertices()[0], unit_vector(9));
        assert_eq!(body.vertices()[1], DVector::zeros(9));
        let bad = DMatrix::zeros(9, 1);
        assert!(realized_effect_space(&bad).is_err());
    }

    #[test]
    fn dual_of_unit_alone_is_unbounded() {
        let u = DMatrix::from_column_slice(9, 1, unit_vector(9).as_slice());
        let body = consistent_state_space(&u).unwrap();
        assert!(!body.is_bounded(&center(9), 20, 1).unwrap());
    }

    #[test]
    fn dual_of_center_is_slab() {
        let s = DMatrix::from_row_slice(1, 9, BlochStateVector::center().components());
        let body = consistent_effect_space(&s).unwrap();
        assert!(body.contains(&unit_vector(9), 1e-12));
        assert!(body.contains(&DVector::zeros(9), 1e-12));
        let mut e = DVector::zeros(9);
        e[0] = 1.2;
        assert!(!body.contains(&e, 1e-12));
    }

    #[test]
    fn realized_state_rows_are_renormalized() {
        let mut s = DMatrix::from_row_slice(1, 9, BlochStateVector::center().components());
        s[(0, 0)] = 1.0 + 1e-9;
        let body = realized_state_space(&s).unwrap();
        assert_eq!(body.vertices()[0][0], 1.0);
        s[(0, 0)] = 1.1;
        assert!(realized_state_space(&s).is_err());
    }

    #[test]
    fn identical_bodies_ratio_one() {
        // a 9D cross-polytope in the normalized hyperplane, both ways
        let r = 0.5;
        let mut verts = vec![];
        let mut ineqs = vec![];
        for c in 1..9 {
            for sgn in [-1.0, 1.0] {
                let mut x = unit_vector(9);
                x[c] = sgn * r;
                verts.push(x);
            }
        }
        for mask in 0..256u32 {
            let mut a = DVector::zeros(9);
            for c in 0..8 {
                a[c + 1] = if mask >> c & 1 == 1 { 1.0 } else { -1.0 };
            }
            // |Σ ± x_c| ≤ r written against the normalization
            a[0] = r;
            ineqs.push(Inequality { a: a / (2.0 * r), lo: 0.0, hi: 1.0 });
        }
        let vbody = VPolytope::new(verts, Ambient::StateSpace).unwrap();
        let hbody = HPolytope::new(9, ineqs, vec![Equality { a: unit_vector(9), b: 1.0 }]).unwrap();
        let summary = linear_dimension_ratio(&vbody, &hbody, 50, 3).unwrap();
        assert!((summary.mean - 1.0).abs() < 1e-7, "{}", summary.mean);
        for p in &summary.rays.probes {
            assert!((p.t_realized - p.t_consistent).abs() < 1e-7);
        }
        // along a single shared ray the two norms coincide
        let st = straddle_from_probes(&summary.rays.probes[..1]);
        assert!((st.max_realized_norm - st.min_consistent_norm).abs() < 1e-7);
    }

    #[test]
    fn haar_directions_are_unit_and_pure() {
        for d in haar_bloch_directions(20, 4) {
            assert_eq!(d[0], 0.0);
            assert!((d.norm() - 1.0).abs() < 1e-12);
            let mut s = [0.0; 8];
            for c in 0..8 {
                s[c] = d[c + 1] * pure_state_norm();
            }
            assert!(is_valid_state_vector(&BlochStateVector::from_bloch(s), 1e-9));
        }
    }
}
