//! Quantum reference model for a qutrit.
//!
//! States are written in the generalized Bloch form `ρ = I/3 + ½ Σ s_α λ_α`
//! with GPT vector `s = (1, s_1, …, s_8)`, effects as `Q = e_0 I + Σ e_α λ_α`
//! with `e_0 = Tr[Q]/3` and `e_α = ½ Tr[Q λ_α]`. With these conventions the
//! probability rule is the plain dot product `Tr[ρ Q] = s · e` and the unit
//! effect is `u = (1, 0, …, 0)`.

use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<Complex64>;
pub type Ket3 = Vector3<Complex64>;

/// Default tolerance for the membership predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Bloch norm `||s̃||` of every pure state.
pub fn pure_state_norm() -> f64 {
    2.0 / 3f64.sqrt()
}

const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A 3×3 Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp3(Mat3);

impl HermitianOp3 {
    /// Wraps `m`, rejecting it if it differs from its adjoint by more than
    /// `1e-12` in any entry.
    pub fn new(m: Mat3) -> Result<Self> {
        let adj = m.adjoint();
        let dev = (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITIAN_TOL {
            return Err(Error::Argument(format!(
                "matrix is not Hermitian (max |A - A†| = {dev:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Projects onto the Hermitian part; for matrices that are Hermitian up to
    /// rounding by construction.
    pub(crate) fn symmetrized(m: Mat3) -> Self {
        Self((m + m.adjoint()) * c(0.5, 0.0))
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn zero() -> Self {
        Self(Mat3::zeros())
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`; the vector is normalized here.
    pub fn projector(psi: &Ket3) -> Self {
        let psi = psi.normalize();
        Self::symmetrized(psi * psi.adjoint())
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(d: [f64; 3]) -> Self {
        Self(Mat3::from_diagonal(&Vector3::new(
            c(d[0], 0.0),
            c(d[1], 0.0),
            c(d[2], 0.0),
        )))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Real part of `Tr[self · other]` (the imaginary part vanishes for two
    /// Hermitian operators).
    pub fn trace_product(&self, other: &HermitianOp3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += (self.0[(i, j)] * other.0[(j, i)]).re;
            }
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let eig = SymmetricEigen::new(self.0);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `I - self`.
    pub fn complement(&self) -> Self {
        Self(Mat3::identity() - self.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0 * c(factor, 0.0))
    }

    pub fn add(&self, other: &HermitianOp3) -> Self {
        Self(self.0 + other.0)
    }

    /// `(1 - ε) ρ + ε Tr[ρ] I/3`.
    pub fn depolarize(&self, epsilon: f64) -> Self {
        let mixed = Mat3::identity() * c(self.trace() / 3.0, 0.0);
        Self(self.0 * c(1.0 - epsilon, 0.0) + mixed * c(epsilon, 0.0))
    }

    /// Entries as `[re, im]` pairs, row-major.
    pub fn to_pairs(&self) -> [[[f64; 2]; 3]; 3] {
        let mut out = [[[0.0; 2]; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let z = self.0[(i, j)];
                *cell = [z.re, z.im];
            }
        }
        out
    }

    pub fn from_pairs(pairs: &[[[f64; 2]; 3]; 3]) -> Result<Self> {
        let m = Mat3::from_fn(|i, j| c(pairs[i][j][0], pairs[i][j][1]));
        Self::new(m)
    }
}

impl Serialize for HermitianOp3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianOp3 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = <[[[f64; 2]; 3]; 3]>::deserialize(deserializer)?;
        HermitianOp3::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

/// GPT state vector `(1, s_1, …, s_8)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochStateVector([f64; 9]);

impl BlochStateVector {
    /// Rejects vectors whose leading component is not 1.
    pub fn new(components: [f64; 9]) -> Result<Self> {
        if components[0] != 1.0 {
            return Err(Error::Domain(format!(
                "state vector must have s_0 = 1, got {}",
                components[0]
            )));
        }
        Ok(Self(components))
    }

    pub fn from_bloch(tilde: [f64; 8]) -> Self {
        let mut s = [0.0; 9];
        s[0] = 1.0;
        s[1..].copy_from_slice(&tilde);
        Self(s)
    }

    pub fn center() -> Self {
        Self::from_bloch([0.0; 8])
    }

    pub fn components(&self) -> &[f64; 9] {
        &self.0
    }

    pub fn tilde(&self) -> [f64; 8] {
        let mut t = [0.0; 8];
        t.copy_from_slice(&self.0[1..]);
        t
    }

    pub fn bloch_norm(&self) -> f64 {
        self.0[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, e: &BlochEffectVector) -> f64 {
        self.0.iter().zip(e.0.iter()).map(|(a, b)| a * b).sum()
    }
}

/// GPT effect vector `(e_0, e_1, …, e_8)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochEffectVector([f64; 9]);

impl BlochEffectVector {
    pub fn new(components: [f64; 9]) -> Self {
        Self(components)
    }

    /// The unit effect `u = (1, 0, …, 0)`.
    pub fn unit() -> Self {
        let mut e = [0.0; 9];
        e[0] = 1.0;
        Self(e)
    }

    pub fn components(&self) -> &[f64; 9] {
        &self.0
    }

    pub fn bloch_norm(&self) -> f64 {
        self.0[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `u - e`.
    pub fn complement(&self) -> Self {
        let mut out = self.0.map(|x| -x);
        out[0] += 1.0;
        Self(out)
    }
}

/// Completely symmetric SU(3) tensor `g_{αβγ}`, indices 1..=8.
#[derive(Clone, Debug)]
pub struct StructureTensor {
    g: [[[f64; 8]; 8]; 8],
}

impl StructureTensor {
    /// `g_{αβγ}` with each index in `1..=8`.
    pub fn g(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        self.g[alpha - 1][beta - 1][gamma - 1]
    }

    /// `Σ_{αβγ} g_{αβγ} v_α v_β v_γ` over an 8-component vector.
    pub fn cubic_form(&self, v: &[f64; 8]) -> f64 {
        let mut acc = 0.0;
        for a in 0..8 {
            if v[a] == 0.0 {
                continue;
            }
            for b in 0..8 {
                let vab = v[a] * v[b];
                if vab == 0.0 {
                    continue;
                }
                for (gc, vc) in self.g[a][b].iter().zip(v.iter()) {
                    acc += gc * vab * vc;
                }
            }
        }
        acc
    }
}

fn gell_mann_table() -> &'static [Mat3; 9] {
    static TABLE: OnceLock<[Mat3; 9]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        let r3 = 1.0 / 3f64.sqrt();
        let m = |rows: [[Complex64; 3]; 3]| Mat3::from_fn(|a, b| rows[a][b]);
        [
            Mat3::identity(),
            m([[z, one, z], [one, z, z], [z, z, z]]),
            m([[z, -i, z], [i, z, z], [z, z, z]]),
            m([[one, z, z], [z, -one, z], [z, z, z]]),
            m([[z, z, one], [z, z, z], [one, z, z]]),
            m([[z, z, -i], [z, z, z], [i, z, z]]),
            m([[z, z, z], [z, z, one], [z, one, z]]),
            m([[z, z, z], [z, z, -i], [z, i, z]]),
            m([[c(r3, 0.0), z, z], [z, c(r3, 0.0), z], [z, z, c(-2.0 * r3, 0.0)]]),
        ]
    })
}

/// Gell-Mann matrix `λ_index`; `λ_0` is the identity.
pub fn gell_mann(index: usize) -> Result<HermitianOp3> {
    gell_mann_table()
        .get(index)
        .map(|m| HermitianOp3(*m))
        .ok_or_else(|| Error::Argument(format!("Gell-Mann index {index} outside 0..=8")))
}

/// Structure tensor from `g_{αβγ} = ¼ Tr[{λ_α, λ_β} λ_γ]`, computed once.
pub fn structure_constants() -> &'static StructureTensor {
    static TENSOR: OnceLock<StructureTensor> = OnceLock::new();
    TENSOR.get_or_init(|| {
        let lam = gell_mann_table();
        let mut g = [[[0.0; 8]; 8]; 8];
        for a in 0..8 {
            for b in 0..8 {
                let anti = lam[a + 1] * lam[b + 1] + lam[b + 1] * lam[a + 1];
                for (cc, slot) in g[a][b].iter_mut().enumerate() {
                    let v = 0.25 * (anti * lam[cc + 1]).trace().re;
                    // exact zeros keep the cubic forms free of 1e-17 noise
                    *slot = if v.abs() < 1e-14 { 0.0 } else { v };
                }
            }
        }
        StructureTensor { g }
    })
}

/// `s_α = Tr[ρ λ_α]`; requires unit trace within `1e-9`.
pub fn state_to_bloch(rho: &HermitianOp3) -> Result<BlochStateVector> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("state must have unit trace, got {tr}")));
    }
    let lam = gell_mann_table();
    let mut s = [0.0; 9];
    s[0] = 1.0;
    for (a, slot) in s.iter_mut().enumerate().skip(1) {
        *slot = rho.trace_product(&HermitianOp3(lam[a]));
    }
    Ok(BlochStateVector(s))
}

/// `e_0 = Tr[Q]/3`, `e_α = ½ Tr[Q λ_α]`.
pub fn effect_to_bloch(q: &HermitianOp3) -> BlochEffectVector {
    let lam = gell_mann_table();
    let mut e = [0.0; 9];
    e[0] = q.trace() / 3.0;
    for (a, slot) in e.iter_mut().enumerate().skip(1) {
        *slot = 0.5 * q.trace_product(&HermitianOp3(lam[a]));
    }
    BlochEffectVector(e)
}

/// `ρ = I/3 + ½ Σ s_α λ_α`.
pub fn bloch_to_state(s: &BlochStateVector) -> HermitianOp3 {
    let lam = gell_mann_table();
    let mut m = Mat3::identity() * c(1.0 / 3.0, 0.0);
    for a in 1..9 {
        m += lam[a] * c(0.5 * s.0[a], 0.0);
    }
    HermitianOp3::symmetrized(m)
}

/// `Q = e_0 I + Σ e_α λ_α`.
pub fn bloch_to_effect(e: &BlochEffectVector) -> HermitianOp3 {
    let lam = gell_mann_table();
    let mut m = Mat3::identity() * c(e.0[0], 0.0);
    for a in 1..9 {
        m += lam[a] * c(e.0[a], 0.0);
    }
    HermitianOp3::symmetrized(m)
}

/// Closed-form positivity test for a state vector: the Bloch ball bound and
/// the cubic (determinant) condition, each with slack `tol`.
pub fn is_valid_state_vector(s: &BlochStateVector, tol: f64) -> bool {
    let t = s.tilde();
    let n2: f64 = t.iter().map(|x| x * x).sum();
    let g = structure_constants();
    let ball = n2.sqrt() <= pure_state_norm() + tol;
    let cubic = 2.0 / 9.0 - 0.5 * n2 + 0.5 * g.cubic_form(&t) >= -tol;
    ball && cubic
}

/// Closed-form test for `0 ⪯ Q ⪯ I`.
pub fn is_valid_effect_vector(e: &BlochEffectVector, tol: f64) -> bool {
    let e0 = e.0[0];
    let mut t = [0.0; 8];
    t.copy_from_slice(&e.0[1..]);
    let n2: f64 = t.iter().map(|x| x * x).sum();
    let n = n2.sqrt();
    let cub = structure_constants().cubic_form(&t);
    let range = e0 >= -tol && e0 <= 1.0 + tol;
    let cone = n <= 3f64.sqrt() * e0.min(1.0 - e0) + tol;
    let lower = e0.powi(3) - e0 * n2 + 2.0 / 3.0 * cub >= -tol;
    let f0 = 1.0 - e0;
    let upper = f0.powi(3) - f0 * n2 - 2.0 / 3.0 * cub >= -tol;
    range && cone && lower && upper
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let g = Mat3::from_fn(|_, _| c(draw(), draw()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..3 {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..3 {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// First column of a Haar-random unitary.
pub fn sample_haar_ket<R: Rng + ?Sized>(rng: &mut R) -> Ket3 {
    sample_haar_unitary(rng).column(0).into_owned()
}

/// `|ψ⟩⟨ψ|` for a Haar-random `ψ`.
pub fn sample_haar_pure_state<R: Rng + ?Sized>(rng: &mut R) -> HermitianOp3 {
    HermitianOp3::projector(&sample_haar_ket(rng))
}

/// `Tr[ρ Q]`, checked to lie in `[0, 1]` up to `1e-9`.
pub fn predict_probability(rho: &HermitianOp3, q: &HermitianOp3) -> Result<f64> {
    let p = rho.trace_product(q);
    if !(-DEFAULT_TOL..=1.0 + DEFAULT_TOL).contains(&p) {
        return Err(Error::Consistency(format!(
            "Tr[rho Q] = {p} is not a probability"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;

    fn brute_g(a: usize, b: usize, g: usize) -> f64 {
        let la = gell_mann(a).unwrap().0;
        let lb = gell_mann(b).unwrap().0;
        let lg = gell_mann(g).unwrap().0;
        0.25 * ((la * lb + lb * la) * lg).trace().re
    }

    #[test]
    fn gell_mann_three_and_identity() {
        assert_eq!(gell_mann(3).unwrap(), HermitianOp3::diagonal([1.0, -1.0, 0.0]));
        assert_eq!(gell_mann(0).unwrap(), HermitianOp3::identity());
        assert!(matches!(gell_mann(9), Err(Error::Argument(_))));
    }

    #[test]
    fn gell_mann_orthogonality_and_tracelessness() {
        for a in 1..9 {
            let la = gell_mann(a).unwrap();
            assert_abs_diff_eq!(la.trace(), 0.0, epsilon = 1e-12);
            for b in 1..9 {
                let lb = gell_mann(b).unwrap();
                let expect = if a == b { 2.0 } else { 0.0 };
                assert_abs_diff_eq!(la.trace_product(&lb), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn structure_tensor_matches_trace_oracle() {
        let g = structure_constants();
        // g_118 = 1/√3 from the explicit trace
        assert_abs_diff_eq!(brute_g(1, 1, 8), 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.g(1, 1, 8), brute_g(1, 1, 8), epsilon = 1e-14);
        for gamma in 1..9 {
            assert_abs_diff_eq!(g.g(1, 2, gamma), brute_g(1, 2, gamma), epsilon = 1e-14);
            assert_abs_diff_eq!(g.g(1, 2, gamma), 0.0, epsilon = 1e-14);
        }
        for a in 1..9 {
            for b in 1..9 {
                for cc in 1..9 {
                    let v = g.g(a, b, cc);
                    assert_eq!(v, g.g(b, a, cc));
                    assert_abs_diff_eq!(v, g.g(a, cc, b), epsilon = 1e-15);
                    assert_abs_diff_eq!(v, g.g(cc, b, a), epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn bloch_examples() {
        let center = state_to_bloch(&HermitianOp3::identity().scale(1.0 / 3.0)).unwrap();
        assert_eq!(center.components(), BlochStateVector::center().components());

        let ket0 = HermitianOp3::diagonal([1.0, 0.0, 0.0]);
        let s = state_to_bloch(&ket0).unwrap();
        let mut expect = [0.0; 9];
        expect[0] = 1.0;
        expect[3] = 1.0;
        expect[8] = 1.0 / 3f64.sqrt();
        for (a, b) in s.components().iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let back = bloch_to_state(&BlochStateVector::new(expect).unwrap());
        assert!((back.matrix() - ket0.matrix()).norm() < 1e-12);

        let e = effect_to_bloch(&ket0);
        assert_abs_diff_eq!(e.components()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.components()[3], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.components()[8], 0.5 / 3f64.sqrt(), epsilon = 1e-15);

        assert_eq!(effect_to_bloch(&HermitianOp3::identity()), BlochEffectVector::unit());
        assert_eq!(effect_to_bloch(&HermitianOp3::zero()).components(), &[0.0; 9]);
    }

    #[test]
    fn trace_and_leading_component_errors() {
        assert!(matches!(
            state_to_bloch(&HermitianOp3::identity()),
            Err(Error::Domain(_))
        ));
        let mut v = [0.0; 9];
        v[0] = 0.5;
        assert!(matches!(BlochStateVector::new(v), Err(Error::Domain(_))));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = Mat3::zeros();
        m[(0, 1)] = c(1.0, 0.0);
        assert!(HermitianOp3::new(m).is_err());
    }

    #[test]
    fn haar_states_are_pure_and_round_trip() {
        let mut rng = substream(11, &[1]);
        let g = structure_constants();
        for _ in 0..100 {
            let rho = sample_haar_pure_state(&mut rng);
            assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(rho.trace_product(&rho), 1.0, epsilon = 1e-9);
            let s = state_to_bloch(&rho).unwrap();
            assert_abs_diff_eq!(s.bloch_norm(), pure_state_norm(), epsilon = 1e-9);
            let t = s.tilde();
            let n2 = s.bloch_norm().powi(2);
            assert_abs_diff_eq!(2.0 / 9.0 - 0.5 * n2 + 0.5 * g.cubic_form(&t), 0.0, epsilon = 1e-9);
            let back = state_to_bloch(&bloch_to_state(&s)).unwrap();
            for (a, b) in back.components().iter().zip(s.components()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = substream(3, &[]);
        let u = sample_haar_unitary(&mut rng);
        assert!((u.adjoint() * u - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn predict_probability_examples() {
        let ket0 = HermitianOp3::diagonal([1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(predict_probability(&ket0, &ket0).unwrap(), 1.0, epsilon = 1e-15);
        let mixed = HermitianOp3::identity().scale(1.0 / 3.0);
        assert_abs_diff_eq!(predict_probability(&mixed, &ket0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);

        let mut rng = substream(5, &[]);
        for _ in 0..50 {
            let rho = sample_haar_pure_state(&mut rng);
            let q = sample_haar_pure_state(&mut rng).scale(0.7);
            let p = predict_probability(&rho, &q).unwrap();
            let s = state_to_bloch(&rho).unwrap();
            let e = effect_to_bloch(&q);
            assert_abs_diff_eq!(p, s.dot(&e), epsilon = 1e-12);
        }
        let too_big = HermitianOp3::identity().scale(2.0);
        assert!(predict_probability(&ket0, &too_big).is_err());
    }

    #[test]
    fn complement_is_linear() {
        let mut rng = substream(9, &[]);
        for _ in 0..20 {
            let q = sample_haar_pure_state(&mut rng).scale(0.4);
            let lhs = effect_to_bloch(&q.complement());
            let rhs = effect_to_bloch(&q).complement();
            for (a, b) in lhs.components().iter().zip(rhs.components()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn predicate_examples() {
        assert!(is_valid_state_vector(&BlochStateVector::center(), DEFAULT_TOL));
        let mut t = [0.0; 8];
        t[0] = 1.5;
        assert!(!is_valid_state_vector(&BlochStateVector::from_bloch(t), DEFAULT_TOL));
        assert!(is_valid_effect_vector(&BlochEffectVector::unit(), DEFAULT_TOL));
        assert!(is_valid_effect_vector(&BlochEffectVector::new([0.0; 9]), DEFAULT_TOL));
    }
}
