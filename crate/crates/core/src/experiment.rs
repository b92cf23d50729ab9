//! Experiment designs and Poissonian count simulation.
//!
//! A design lists preparations (density operators) and outcome-0 effects
//! `Q_j`. Frequency matrices carry a synthetic unit-effect column at index 0,
//! so they are `m × (n + 1)` while count tables are `m × n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qutrit_ref::{self, effect_to_bloch, state_to_bloch, HermitianOp3, Ket3};
use crate::rng::{derive_seed, substream, tag};

pub const FIDUCIAL_COUNT: usize = 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignKind {
    Haar { m: usize, n: usize },
    Fiducial { n_random: usize },
}

impl DesignKind {
    pub fn describe(&self) -> String {
        match self {
            DesignKind::Haar { m, n } => format!("haar({m},{n})"),
            DesignKind::Fiducial { n_random } => format!("fiducial({n_random})"),
        }
    }
}

/// Preparations, measurement effects and the probed-configuration mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub kind: DesignKind,
    pub preparations: Vec<HermitianOp3>,
    pub measurements: Vec<HermitianOp3>,
    /// `m × (n + 1)`, column 0 is the unit effect and always `true`.
    #[serde(with = "bool_matrix")]
    pub mask: DMatrix<bool>,
    pub includes_unit_column: bool,
}

impl Design {
    pub fn n_preparations(&self) -> usize {
        self.preparations.len()
    }

    pub fn n_measurements(&self) -> usize {
        self.measurements.len()
    }

    /// Number of probed state/effect pairings, not counting the unit column.
    pub fn probed_pairs(&self) -> usize {
        (1..self.mask.ncols())
            .map(|j| self.mask.column(j).iter().filter(|&&b| b).count())
            .sum()
    }

    /// `m × 9` matrix of GPT state vectors of the preparations.
    pub fn state_vectors(&self) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.n_preparations(), 9);
        for (i, rho) in self.preparations.iter().enumerate() {
            let s = state_to_bloch(rho)?;
            for (a, v) in s.components().iter().enumerate() {
                out[(i, a)] = *v;
            }
        }
        Ok(out)
    }

    /// `9 × (n + 1)` matrix of GPT effect vectors, unit effect first.
    pub fn effect_vectors(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(9, self.n_measurements() + 1);
        out[(0, 0)] = 1.0;
        for (j, q) in self.measurements.iter().enumerate() {
            let e = effect_to_bloch(q);
            for (a, v) in e.components().iter().enumerate() {
                out[(a, j + 1)] = *v;
            }
        }
        out
    }

    /// Probability matrix `Tr[ρ_i Q_j]` over every cell (probed or not), with
    /// preparations depolarized by `epsilon`; column 0 is all ones.
    pub fn probabilities(&self, epsilon: f64) -> DMatrix<f64> {
        let m = self.n_preparations();
        let n = self.n_measurements();
        let mut d = DMatrix::from_element(m, n + 1, 1.0);
        for (i, rho) in self.preparations.iter().enumerate() {
            let rho = rho.depolarize(epsilon);
            for (j, q) in self.measurements.iter().enumerate() {
                d[(i, j + 1)] = rho.trace_product(q).clamp(0.0, 1.0);
            }
        }
        d
    }
}

fn full_mask(m: usize, n: usize) -> DMatrix<bool> {
    DMatrix::from_element(m, n + 1, true)
}

/// `m` Haar pure states; the effects are the projectors onto the first `n`
/// of them, so `Q_i` responds to `ρ_i` with probability one.
pub fn build_haar_design<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Design> {
    if m == 0 || n == 0 {
        return Err(Error::Argument("haar design needs m, n >= 1".into()));
    }
    if n > m {
        return Err(Error::Argument(format!(
            "haar design pairs each measurement with a preparation: n = {n} > m = {m}"
        )));
    }
    let kets: Vec<Ket3> = (0..m).map(|_| qutrit_ref::sample_haar_ket(rng)).collect();
    let preparations: Vec<_> = kets.iter().map(HermitianOp3::projector).collect();
    let measurements = preparations[..n].to_vec();
    Ok(Design {
        kind: DesignKind::Haar { m, n },
        preparations,
        measurements,
        mask: full_mask(m, n),
        includes_unit_column: true,
    })
}

/// The Gell-Mann eigenvectors, eight matrices times three, in matrix order.
pub fn gell_mann_eigenvectors() -> Vec<Ket3> {
    let basis = |k: usize| {
        let mut v = Ket3::zeros();
        v[k] = Complex64::new(1.0, 0.0);
        v
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pair = |a: usize, b: usize, phase: Complex64| -> [Ket3; 2] {
        let mut plus = Ket3::zeros();
        plus[a] = Complex64::new(h, 0.0);
        plus[b] = phase * h;
        let mut minus = Ket3::zeros();
        minus[a] = Complex64::new(h, 0.0);
        minus[b] = -phase * h;
        [plus, minus]
    };
    let re = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(24);
    for (a, b, rest, phase) in [
        (0, 1, 2, re),
        (0, 1, 2, im),
        (usize::MAX, 0, 0, re),
        (0, 2, 1, re),
        (0, 2, 1, im),
        (1, 2, 0, re),
        (1, 2, 0, im),
        (usize::MAX, 0, 0, re),
    ] {
        if a == usize::MAX {
            out.extend((0..3).map(basis));
        } else {
            out.extend(pair(a, b, phase));
            out.push(basis(rest));
        }
    }
    out
}

/// The pairwise-distinct Gell-Mann eigenvectors (15 of the 24).
pub fn fiducial_kets() -> Vec<Ket3> {
    let mut distinct: Vec<Ket3> = Vec::new();
    for v in gell_mann_eigenvectors() {
        let dup = distinct
            .iter()
            .any(|w| (w.adjoint() * v)[(0, 0)].norm() > 1.0 - 1e-9);
        if !dup {
            distinct.push(v);
        }
    }
    distinct
}

/// 15 fiducial states and effects followed by `n_random` Haar ones. Only
/// pairings that involve a fiducial state or a fiducial effect are probed.
pub fn build_fiducial_design<R: Rng + ?Sized>(n_random: usize, rng: &mut R) -> Design {
    let mut preparations: Vec<HermitianOp3> =
        fiducial_kets().iter().map(HermitianOp3::projector).collect();
    let fid = preparations.len();
    for _ in 0..n_random {
        preparations.push(qutrit_ref::sample_haar_pure_state(rng));
    }
    let measurements = preparations.clone();
    let m = preparations.len();
    let mask = DMatrix::from_fn(m, m + 1, |i, j| j == 0 || i < fid || j - 1 < fid);
    Design {
        kind: DesignKind::Fiducial { n_random },
        preparations,
        measurements,
        mask,
        includes_unit_column: true,
    }
}

pub fn build_design<R: Rng + ?Sized>(kind: &DesignKind, rng: &mut R) -> Result<Design> {
    match *kind {
        DesignKind::Haar { m, n } => build_haar_design(m, n, rng),
        DesignKind::Fiducial { n_random } => Ok(build_fiducial_design(n_random, rng)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    /// Expected total counts per second.
    pub rate: f64,
    /// Integration time per configuration, in seconds.
    pub exposure: f64,
    /// Depolarizing level applied to the simulated preparations.
    pub epsilon: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            rate: 2000.0,
            exposure: 2.0,
            epsilon: 0.01,
        }
    }
}

impl SimulationParams {
    pub fn expected_total(&self) -> f64 {
        self.rate * self.exposure
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Argument(format!("rate must be positive, got {}", self.rate)));
        }
        if !(self.exposure.is_finite() && self.exposure >= 0.0) {
            return Err(Error::Argument(format!(
                "exposure must be nonnegative, got {}",
                self.exposure
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Argument(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Detector counts per probed configuration, `m × n` (no unit column).
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    pub counts0: DMatrix<u64>,
    pub counts1: DMatrix<u64>,
    pub counts2: DMatrix<u64>,
    pub exposure: f64,
    pub rate: f64,
}

impl CountTable {
    pub fn total(&self, i: usize, j: usize) -> u64 {
        self.counts0[(i, j)] + self.counts1[(i, j)] + self.counts2[(i, j)]
    }
}

/// Simulates one back-to-back run. Cell `(i, j)` draws from its own stream
/// derived from `(seed, i, j)`.
pub fn simulate_counts(design: &Design, params: &SimulationParams, seed: u64) -> Result<CountTable> {
    params.validate()?;
    let m = design.n_preparations();
    let n = design.n_measurements();
    let mean = params.expected_total();
    let noisy: Vec<HermitianOp3> = design
        .preparations
        .iter()
        .map(|rho| rho.depolarize(params.epsilon))
        .collect();
    let poisson = if mean > 0.0 {
        Some(Poisson::new(mean).map_err(|e| Error::Argument(e.to_string()))?)
    } else {
        None
    };

    let rows: Vec<Vec<[u64; 3]>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if !design.mask[(i, j + 1)] {
                        return [0; 3];
                    }
                    let Some(poisson) = &poisson else {
                        return [0; 3];
                    };
                    let mut rng = substream(seed, &[i as u64, j as u64]);
                    let total = poisson.sample(&mut rng) as u64;
                    let p0 = noisy[i].trace_product(&design.measurements[j]).clamp(0.0, 1.0);
                    let c0 = Binomial::new(total, p0).expect("p in [0,1]").sample(&mut rng);
                    let rest = total - c0;
                    let c1 = Binomial::new(rest, 0.5).expect("p in [0,1]").sample(&mut rng);
                    [c0, c1, rest - c1]
                })
                .collect()
        })
        .collect();

    let pick = |d: usize| DMatrix::from_fn(m, n, |i, j| rows[i][j][d]);
    Ok(CountTable {
        counts0: pick(0),
        counts1: pick(1),
        counts2: pick(2),
        exposure: params.exposure,
        rate: params.rate,
    })
}

/// Two independent runs (train, test) from sub-seeds of `seed`.
pub fn simulate_train_test(
    design: &Design,
    params: &SimulationParams,
    seed: u64,
) -> Result<(CountTable, CountTable)> {
    let train = simulate_counts(design, params, derive_seed(seed, &[tag::TRAIN]))?;
    let test = simulate_counts(design, params, derive_seed(seed, &[tag::TEST]))?;
    Ok((train, test))
}

/// Relative frequencies with per-entry uncertainty and the probe mask.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyMatrix {
    pub f: DMatrix<f64>,
    /// Zero on the unit column, `+∞` on unprobed cells.
    pub sigma: DMatrix<f64>,
    pub mask: DMatrix<bool>,
}

/// Binomial standard error `sqrt(f(1-f)/N)`, floored at `1/(2N)`.
pub fn binomial_sigma(f: f64, total: f64) -> f64 {
    (f * (1.0 - f) / total).sqrt().max(0.5 / total)
}

impl FrequencyMatrix {
    /// Builds a frequency matrix from probabilities and a uniform sigma.
    /// Column 0 of `probabilities` is overwritten with ones.
    pub fn from_probabilities(
        probabilities: &DMatrix<f64>,
        sigma: f64,
        mask: &DMatrix<bool>,
    ) -> Result<Self> {
        if probabilities.shape() != mask.shape() || probabilities.ncols() == 0 {
            return Err(Error::Argument("probability and mask shapes differ".into()));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
        }
        let (m, cols) = probabilities.shape();
        let mut f = DMatrix::zeros(m, cols);
        let mut s = DMatrix::zeros(m, cols);
        for i in 0..m {
            for j in 0..cols {
                if j == 0 {
                    f[(i, j)] = 1.0;
                } else if mask[(i, j)] {
                    f[(i, j)] = probabilities[(i, j)];
                    s[(i, j)] = sigma;
                } else {
                    s[(i, j)] = f64::INFINITY;
                }
            }
        }
        let mut mask = mask.clone();
        mask.column_mut(0).fill(true);
        Ok(Self { f, sigma: s, mask })
    }

    /// Frequencies equal to the expected detector fractions (no shot noise),
    /// with the sigma a Poissonian run of the same size would carry.
    pub fn expected(design: &Design, params: &SimulationParams) -> Result<Self> {
        params.validate()?;
        let total = params.expected_total();
        if total <= 0.0 {
            return Err(Error::Argument("expected counts must be positive".into()));
        }
        let d = design.probabilities(params.epsilon);
        let mut fm = Self::from_probabilities(&d, 1.0, &design.mask)?;
        for i in 0..fm.nrows() {
            for j in 1..fm.ncols() {
                if fm.mask[(i, j)] {
                    fm.sigma[(i, j)] = binomial_sigma(fm.f[(i, j)], total);
                }
            }
        }
        Ok(fm)
    }

    pub fn nrows(&self) -> usize {
        self.f.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.f.ncols()
    }

    /// Least-squares weight `1/σ²` of a non-unit cell; zero when unprobed.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if j == 0 || !self.mask[(i, j)] {
            0.0
        } else {
            1.0 / (self.sigma[(i, j)] * self.sigma[(i, j)])
        }
    }

    /// Probed cells outside the unit column.
    pub fn probed_cells(&self) -> usize {
        (0..self.nrows())
            .map(|i| (1..self.ncols()).filter(|&j| self.mask[(i, j)]).count())
            .sum()
    }

    /// Checks the unit column, value range and sigma conventions.
    pub fn validate(&self) -> Result<()> {
        if self.sigma.shape() != self.f.shape() || self.mask.shape() != self.f.shape() {
            return Err(Error::Data("frequency, sigma and mask shapes differ".into()));
        }
        for i in 0..self.nrows() {
            if self.f[(i, 0)] != 1.0 || self.sigma[(i, 0)] != 0.0 || !self.mask[(i, 0)] {
                return Err(Error::Data(format!("row {i}: unit column must be 1 with sigma 0")));
            }
            for j in 1..self.ncols() {
                if !self.mask[(i, j)] {
                    continue;
                }
                let (f, s) = (self.f[(i, j)], self.sigma[(i, j)]);
                if !(0.0..=1.0).contains(&f) || !(s.is_finite() && s > 0.0) {
                    return Err(Error::Data(format!(
                        "cell ({i}, {j}): frequency {f} / sigma {s} invalid"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `f = c0 / (c0 + c1 + c2)` with binomial uncertainty; prepends the unit
/// column.
pub fn counts_to_frequencies(table: &CountTable, design: &Design) -> Result<FrequencyMatrix> {
    let m = design.n_preparations();
    let n = design.n_measurements();
    if table.counts0.shape() != (m, n) {
        return Err(Error::Argument(format!(
            "count table is {:?}, design expects ({m}, {n})",
            table.counts0.shape()
        )));
    }
    let mut f = DMatrix::zeros(m, n + 1);
    let mut sigma = DMatrix::zeros(m, n + 1);
    for i in 0..m {
        f[(i, 0)] = 1.0;
        for j in 0..n {
            if !design.mask[(i, j + 1)] {
                sigma[(i, j + 1)] = f64::INFINITY;
                continue;
            }
            let total = table.total(i, j);
            if total == 0 {
                return Err(Error::Data(format!(
                    "probed cell (preparation {i}, measurement {j}) has zero total counts"
                )));
            }
            let nt = total as f64;
            let fr = table.counts0[(i, j)] as f64 / nt;
            f[(i, j + 1)] = fr;
            sigma[(i, j + 1)] = binomial_sigma(fr, nt);
        }
    }
    Ok(FrequencyMatrix {
        f,
        sigma,
        mask: design.mask.clone(),
    })
}

mod bool_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<bool>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<String> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| if m[(i, j)] { '1' } else { '0' }).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<bool>, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged mask"));
        }
        let bits: Vec<Vec<bool>> = rows.iter().map(|r| r.bytes().map(|b| b == b'1').collect()).collect();
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| bits[i][j]))
    }
}
