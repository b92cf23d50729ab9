//! Canonical factorization and gauge fixing.
//!
//! A probability matrix only determines its factors up to `S Λ, Λ⁻¹ E`. The
//! initial factors come from a QR-then-SVD split of `D`; the gauge `Λ` is the
//! least-squares map that brings the states closest to a reference set of
//! Bloch vectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold above which `Λ` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeResult {
    #[serde(with = "crate::io::matrix_rows")]
    pub lambda: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub s_realized: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub e_realized: DMatrix<f64>,
    /// `||S_ref − S' Λ||²_F`.
    pub chi2_alignment: f64,
    pub condition_number: f64,
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// `S' = U √Σ`, `E' = √Σ Vᵀ` truncated to `k`, from the SVD of the `R` factor
/// of `D = Q R`.
pub fn initial_decomposition(d: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n) = d.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::Argument(format!("rank {k} impossible for a {m}×{n} matrix")));
    }
    let qr = d.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let svd = r.svd(true, true);
    let u_r = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = svd.singular_values[order[0]];
    let tol = top * f64::EPSILON * m.max(n) as f64;
    let numerical_rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
    if numerical_rank < k {
        return Err(Error::Numerical(format!(
            "matrix has numerical rank {numerical_rank}, below the requested {k}"
        )));
    }
    let u = q * u_r;
    let mut s = DMatrix::zeros(m, k);
    let mut e = DMatrix::zeros(k, n);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let root = svd.singular_values[idx].sqrt();
        s.set_column(c, &(u.column(idx) * root));
        e.set_row(c, &(v_t.row(idx) * root));
    }
    Ok((s, e))
}

fn solve_gauge(
    s_prime: &DMatrix<f64>,
    s_ref: &DMatrix<f64>,
    ridge: f64,
) -> Option<DMatrix<f64>> {
    let k = s_prime.ncols();
    let mut gram = s_prime.transpose() * s_prime;
    for i in 0..k {
        gram[(i, i)] += ridge;
    }
    let rhs = s_prime.transpose() * s_ref;
    gram.cholesky().map(|c| c.solve(&rhs))
}

fn finish(
    s_prime: &DMatrix<f64>,
    e_prime: &DMatrix<f64>,
    s_ref: &DMatrix<f64>,
    lambda: DMatrix<f64>,
) -> Result<GaugeResult> {
    let condition_number = condition(&lambda);
    if !(condition_number <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "gauge transformation is singular (condition number {condition_number:e}); \
             retry with a ridge term via fit_gauge_regularized"
        )));
    }
    let inv = lambda
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("gauge transformation is not invertible".into()))?;
    let s_realized = s_prime * &lambda;
    let e_realized = inv * e_prime;
    let chi2_alignment = (s_ref - &s_realized).norm_squared();
    Ok(GaugeResult {
        lambda,
        s_realized,
        e_realized,
        chi2_alignment,
        condition_number,
    })
}

fn check_shapes(s_prime: &DMatrix<f64>, e_prime: &DMatrix<f64>, s_ref: &DMatrix<f64>) -> Result<()> {
    if s_prime.shape() != s_ref.shape() {
        return Err(Error::Argument(format!(
            "state factor is {:?} but the reference is {:?}",
            s_prime.shape(),
            s_ref.shape()
        )));
    }
    if e_prime.nrows() != s_prime.ncols() {
        return Err(Error::Argument("effect factor rows must match the rank".into()));
    }
    Ok(())
}

/// Least-squares gauge `Λ = argmin ||S_ref − S' Λ||_F`, applied to both
/// factors. A rank-deficient Gram matrix falls back to a ridge of
/// `1e-10 · tr(S'ᵀS')`.
pub fn fit_gauge(
    s_prime: &DMatrix<f64>,
    e_prime: &DMatrix<f64>,
    s_ref: &DMatrix<f64>,
) -> Result<GaugeResult> {
    check_shapes(s_prime, e_prime, s_ref)?;
    let trace = (s_prime.transpose() * s_prime).trace();
    let lambda = solve_gauge(s_prime, s_ref, 0.0)
        .or_else(|| solve_gauge(s_prime, s_ref, 1e-10 * trace))
        .ok_or_else(|| Error::Numerical("state factor Gram matrix is singular".into()))?;
    finish(s_prime, e_prime, s_ref, lambda)
}

/// [`fit_gauge`] with an explicit ridge `ridge · I` on the Gram matrix.
pub fn fit_gauge_regularized(
    s_prime: &DMatrix<f64>,
    e_prime: &DMatrix<f64>,
    s_ref: &DMatrix<f64>,
    ridge: f64,
) -> Result<GaugeResult> {
    check_shapes(s_prime, e_prime, s_ref)?;
    let lambda = solve_gauge(s_prime, s_ref, ridge)
        .ok_or_else(|| Error::Numerical("regularized Gram matrix is singular".into()))?;
    finish(s_prime, e_prime, s_ref, lambda)
}

/// Initial decomposition of `d` at rank `k` followed by [`fit_gauge`].
pub fn gauge_fix(d: &DMatrix<f64>, k: usize, s_ref: &DMatrix<f64>) -> Result<GaugeResult> {
    let (s, e) = initial_decomposition(d, k)?;
    fit_gauge(&s, &e, s_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::build_haar_design;
    use crate::rng::substream;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, &[]);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn decomposition_reproduces_truncated_svd() {
        let d = random_matrix(12, 10, 1);
        let (s, e) = initial_decomposition(&d, 4).unwrap();
        let svd = d.clone().svd(true, true);
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let mut dk = DMatrix::zeros(12, 10);
        for &i in order.iter().take(4) {
            dk += u.column(i) * vt.row(i) * svd.singular_values[i];
        }
        assert!((&s * &e - dk).amax() < 1e-10);
    }

    #[test]
    fn wide_matrix_decomposes() {
        let d = random_matrix(5, 9, 2);
        let (s, e) = initial_decomposition(&d, 5).unwrap();
        assert!((s * e - d).amax() < 1e-10);
    }

    #[test]
    fn rank_one_ones() {
        let d = DMatrix::from_fn(4, 3, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let (s, _) = initial_decomposition(&d, 1).unwrap();
        let ratio = s[(0, 0)];
        assert!(s.iter().all(|v| (v - ratio).abs() < 1e-12));
        assert!(matches!(initial_decomposition(&d, 2), Err(Error::Numerical(_))));
    }

    #[test]
    fn identity_and_known_gauge() {
        let s_ref = random_matrix(20, 9, 3);
        let e = random_matrix(9, 15, 4);
        let r = fit_gauge(&s_ref, &e, &s_ref).unwrap();
        assert!((&r.lambda - DMatrix::identity(9, 9)).amax() < 1e-10);
        assert!(r.chi2_alignment < 1e-20);

        let m = random_matrix(9, 9, 5) + DMatrix::identity(9, 9) * 2.0;
        let s_prime = &s_ref * &m;
        let r = fit_gauge(&s_prime, &e, &s_ref).unwrap();
        let m_inv = m.try_inverse().unwrap();
        assert!((&r.lambda - m_inv).amax() < 1e-8);
        assert!(r.chi2_alignment < 1e-16);
        assert!((&r.s_realized * &r.e_realized - &s_prime * &e).amax() < 1e-9);
    }

    #[test]
    fn singular_gauge_is_reported() {
        let s_ref = random_matrix(10, 3, 6);
        let mut target = s_ref.clone();
        target.column_mut(2).fill(0.0);
        let e = random_matrix(3, 4, 7);
        assert!(matches!(fit_gauge(&s_ref, &e, &target), Err(Error::Numerical(_))));
    }

    #[test]
    fn exact_pipeline_recovers_bloch_vectors() {
        let design = build_haar_design(30, 30, &mut substream(8, &[])).unwrap();
        let d = design.probabilities(0.0);
        let s_ref = design.state_vectors().unwrap();
        let r = gauge_fix(&d, 9, &s_ref).unwrap();
        assert!((&r.s_realized - &s_ref).amax() < 1e-6);
        let e_ref = design.effect_vectors();
        assert!((&r.e_realized - &e_ref).amax() < 1e-6);
    }
}
