//! Weighted rank-constrained fit of frequency matrices.
//!
//! The model is `D = S E` with `S` of size `m × k` and `E` of size
//! `k × (n + 1)`. Column 0 of `E` is pinned to the first canonical basis
//! vector and column 0 of `S` to ones, so `S · u = 1` holds exactly. The
//! remaining entries are found by alternating weighted least squares where
//! every row/column update is solved exactly under `0 ≤ D_ij ≤ 1`, which keeps
//! each iterate feasible and the χ² non-increasing.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::FrequencyMatrix;
use crate::qp::BoxedLsq;
use crate::rng::{substream, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Stop when a sweep improves χ² by less than this fraction.
    pub rel_tol: f64,
    /// Stop when χ² falls below this value.
    pub abs_tol: f64,
    pub max_iters: usize,
    /// Perturbed restarts on top of the SVD start.
    pub n_restarts: usize,
    /// Relative size of the restart perturbations.
    pub restart_scale: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-24,
            max_iters: 3000,
            n_restarts: 5,
            restart_scale: 0.1,
            seed: 0,
        }
    }
}

/// Rank-`k` factorization of a probability matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GptModel {
    #[serde(with = "crate::io::matrix_rows")]
    pub s: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub e: DMatrix<f64>,
    pub rank: usize,
}

impl GptModel {
    pub fn new(s: DMatrix<f64>, e: DMatrix<f64>) -> Result<Self> {
        if s.ncols() != e.nrows() || s.ncols() == 0 {
            return Err(Error::Argument(format!(
                "factor shapes {:?} and {:?} do not compose",
                s.shape(),
                e.shape()
            )));
        }
        let rank = s.ncols();
        Ok(Self { s, e, rank })
    }

    pub fn predictions(&self) -> DMatrix<f64> {
        &self.s * &self.e
    }

    /// Largest distance of any predicted entry from `[0, 1]`.
    pub fn bound_violation(&self) -> f64 {
        self.predictions()
            .iter()
            .map(|&d| (-d).max(d - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the unit column of `D` from ones.
    pub fn unit_violation(&self) -> f64 {
        let ones = &self.s * self.e.column(0);
        ones.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rank: usize,
    pub chi2_train: f64,
    /// Filled in once the model is scored on test data.
    pub chi2_test: Option<f64>,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// χ² after each sweep of the winning run.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Weighted χ² of `d` against `f` over probed non-unit cells.
pub fn chi2(f: &FrequencyMatrix, d: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 1..f.ncols() {
        for i in 0..f.nrows() {
            let w = f.weight(i, j);
            if w > 0.0 {
                let r = f.f[(i, j)] - d[(i, j)];
                acc += w * r * r;
            }
        }
    }
    acc
}

/// Sweeps given to a start lifted from a lower rank. It only has to keep
/// χ² at or below the lower-rank value, which holds from the first sweep.
const WARM_ITERS: usize = 100;

/// Refill rounds of the SVD completion used to start the fit.
const IMPUTE_SWEEPS: usize = 50;

/// Top-`k` SVD split `(U √Σ, √Σ Vᵀ)`.
fn rank_k_factor(a: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, cols) = a.shape();
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut left = DMatrix::zeros(m, k);
    let mut right = DMatrix::zeros(k, cols);
    for (r, &idx) in order.iter().take(k).enumerate() {
        let root = svd.singular_values[idx].sqrt();
        left.set_column(r, &(u.column(idx) * root));
        right.set_row(r, &(vt.row(idx) * root));
    }
    (left, right)
}

struct Problem<'a> {
    f: &'a FrequencyMatrix,
    w: DMatrix<f64>,
    k: usize,
}

/// Factor state for one ALS run: `x` holds the free columns of `S`, `e` all
/// of `E`.
#[derive(Clone)]
struct Factors {
    x: DMatrix<f64>,
    e: DMatrix<f64>,
}

impl Factors {
    fn s(&self) -> DMatrix<f64> {
        let m = self.x.nrows();
        let k = self.e.nrows();
        DMatrix::from_fn(m, k, |i, a| if a == 0 { 1.0 } else { self.x[(i, a - 1)] })
    }

    fn predictions(&self) -> DMatrix<f64> {
        self.s() * &self.e
    }
}

enum Start {
    /// Effect matrix; states are solved and shrunk to feasibility.
    Effects(DMatrix<f64>),
    /// Feasible factors used as they are.
    Factors(Factors),
}

struct RunOutcome {
    factors: Factors,
    chi2: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(f: &'a FrequencyMatrix, k: usize) -> Result<Self> {
        let (m, cols) = f.f.shape();
        if k == 0 {
            return Err(Error::Argument("rank must be at least 1".into()));
        }
        let probed_cols = (0..cols)
            .filter(|&j| j == 0 || (0..m).any(|i| f.mask[(i, j)]))
            .count();
        if k > m.min(probed_cols) {
            return Err(Error::Argument(format!(
                "rank {k} exceeds min(rows = {m}, probed columns = {probed_cols})"
            )));
        }
        let w = DMatrix::from_fn(m, cols, |i, j| f.weight(i, j));
        Ok(Self { f, w, k })
    }

    fn m(&self) -> usize {
        self.f.nrows()
    }

    fn cols(&self) -> usize {
        self.f.ncols()
    }

    fn chi2(&self, fac: &Factors) -> f64 {
        chi2(self.f, &fac.predictions())
    }

    /// Right factor of a rank-`k` SVD. With at least `k` fully probed rows
    /// the SVD of those rows is used. Otherwise unprobed cells start at their
    /// column mean and are refilled from the rank-`k` reconstruction until
    /// the fill settles.
    fn svd_start(&self) -> DMatrix<f64> {
        let (m, cols) = (self.m(), self.cols());
        let k = self.k;
        let targets = self.column_targets();
        let mut filled = DMatrix::from_fn(m, cols, |i, j| {
            if j == 0 {
                1.0
            } else if self.f.mask[(i, j)] {
                self.f.f[(i, j)]
            } else {
                targets[j]
            }
        });
        let has_gaps = self.f.mask.iter().any(|&b| !b);
        let full_rows: Vec<usize> = (0..m)
            .filter(|&i| (0..cols).all(|j| self.f.mask[(i, j)]))
            .collect();
        let mut factor = if has_gaps && full_rows.len() >= k {
            // the fully probed rows alone span the effect row space
            let sub = DMatrix::from_fn(full_rows.len(), cols, |r, j| filled[(full_rows[r], j)]);
            (DMatrix::zeros(0, k), rank_k_factor(&sub, k).1)
        } else {
            rank_k_factor(&filled, k)
        };
        let sweeps = if has_gaps && full_rows.len() < k { IMPUTE_SWEEPS } else { 0 };
        for _ in 0..sweeps {
            let recon = &factor.0 * &factor.1;
            let mut change: f64 = 0.0;
            for j in 1..cols {
                for i in 0..m {
                    if !self.f.mask[(i, j)] {
                        let v = recon[(i, j)].clamp(0.0, 1.0);
                        change = change.max((v - filled[(i, j)]).abs());
                        filled[(i, j)] = v;
                    }
                }
            }
            factor = rank_k_factor(&filled, k);
            if change < 1e-6 {
                break;
            }
        }
        let b = factor.1;
        // gauge so that column 0 becomes the first basis vector: T e_0 = b_0
        let b0 = b.column(0).into_owned();
        let pivot = b0.iamax();
        let mut t = DMatrix::zeros(k, k);
        t.set_column(0, &b0);
        let mut next = 1;
        for q in 0..k {
            if q != pivot {
                t[(q, next)] = 1.0;
                next += 1;
            }
        }
        let mut e = match t.try_inverse() {
            Some(inv) if b0[pivot].abs() > 1e-12 => inv * b,
            _ => {
                let mut e = DMatrix::zeros(k, cols);
                e.row_mut(0).fill(0.5);
                e
            }
        };
        e.column_mut(0).fill(0.0);
        e[(0, 0)] = 1.0;
        e
    }

    fn column_targets(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|j| {
                if j == 0 {
                    return 1.0;
                }
                let (mut sw, mut swf) = (0.0, 0.0);
                for i in 0..self.m() {
                    sw += self.w[(i, j)];
                    swf += self.w[(i, j)] * self.f.f[(i, j)];
                }
                if sw > 0.0 {
                    (swf / sw).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }

    /// Unconstrained row solve from `e`, then a shrink toward the constant
    /// column profile until every entry of `D` is a probability.
    fn feasible_start(&self, e: DMatrix<f64>) -> Factors {
        let k = self.k;
        let m = self.m();
        let mut fac = Factors {
            x: DMatrix::zeros(m, k - 1),
            e,
        };
        for i in 0..m {
            let (h, b) = self.row_system(&fac, i);
            if k > 1 && h.trace() > 0.0 {
                let reg = h.clone() + DMatrix::identity(k - 1, k - 1) * (1e-12 * h.trace() / (k - 1) as f64);
                if let Some(chol) = reg.cholesky() {
                    fac.x.set_row(i, &chol.solve(&b).transpose());
                }
            }
        }
        let c = self.column_targets();
        let d = fac.predictions();
        let mut t: f64 = 1.0;
        for j in 1..self.cols() {
            for i in 0..m {
                let v = d[(i, j)];
                if v > 1.0 {
                    t = t.min((1.0 - c[j]) / (v - c[j]));
                } else if v < 0.0 {
                    t = t.min(c[j] / (c[j] - v));
                }
            }
        }
        if t < 1.0 {
            let t = (t * (1.0 - 1e-12)).max(0.0);
            fac.x *= t;
            for j in 1..self.cols() {
                fac.e[(0, j)] = (1.0 - t) * c[j] + t * fac.e[(0, j)];
            }
        }
        fac
    }

    fn row_system(&self, fac: &Factors, i: usize) -> (DMatrix<f64>, DVector<f64>) {
        let k1 = self.k - 1;
        let cols: Vec<usize> = (1..self.cols()).filter(|&j| self.w[(i, j)] > 0.0).collect();
        let mut a = DMatrix::zeros(k1, cols.len());
        let mut wa = DMatrix::zeros(k1, cols.len());
        let mut wt = DVector::zeros(cols.len());
        for (q, &j) in cols.iter().enumerate() {
            let w = self.w[(i, j)];
            wt[q] = w * (self.f.f[(i, j)] - fac.e[(0, j)]);
            for r in 0..k1 {
                a[(r, q)] = fac.e[(r + 1, j)];
                wa[(r, q)] = w * fac.e[(r + 1, j)];
            }
        }
        (&wa * a.transpose(), &a * wt)
    }

    fn update_rows(&self, fac: &mut Factors) {
        let k1 = self.k - 1;
        if k1 == 0 {
            return;
        }
        let cols = self.cols();
        // constraint normals are the free parts of the effect columns
        let c = DMatrix::from_fn(cols - 1, k1, |j, a| fac.e[(a + 1, j + 1)]);
        let lo: Vec<f64> = (1..cols).map(|j| -fac.e[(0, j)]).collect();
        let hi: Vec<f64> = (1..cols).map(|j| 1.0 - fac.e[(0, j)]).collect();
        let rows: Vec<DVector<f64>> = (0..self.m())
            .map(|i| {
                let x0 = fac.x.row(i).transpose();
                let (h, b) = self.row_system(fac, i);
                if h.trace() <= 0.0 {
                    return x0;
                }
                BoxedLsq { h: &h, b: &b, c: &c, lo: &lo, hi: &hi }.solve(&x0)
            })
            .collect();
        for (i, x) in rows.iter().enumerate() {
            fac.x.set_row(i, &x.transpose());
        }
    }

    fn update_columns(&self, fac: &mut Factors) {
        let k = self.k;
        let m = self.m();
        let s = fac.s();
        let lo = vec![0.0; m];
        let hi = vec![1.0; m];
        let mut ws = DMatrix::zeros(m, k);
        let mut wf = DVector::zeros(m);
        for j in 1..self.cols() {
            let mut any = false;
            for i in 0..m {
                let w = self.w[(i, j)];
                any |= w > 0.0;
                wf[i] = w * self.f.f[(i, j)];
                for a in 0..k {
                    ws[(i, a)] = w * s[(i, a)];
                }
            }
            if !any {
                continue;
            }
            let h = ws.transpose() * &s;
            let b = s.transpose() * &wf;
            let x0 = fac.e.column(j).into_owned();
            let x = BoxedLsq { h: &h, b: &b, c: &s, lo: &lo, hi: &hi }.solve(&x0);
            fac.e.set_column(j, &x);
        }
    }

    fn run(&self, start: Start, opts: &FitOptions) -> RunOutcome {
        let (mut fac, budget) = match start {
            Start::Effects(e0) => (self.feasible_start(e0), opts.max_iters),
            Start::Factors(f) => (f, opts.max_iters.min(WARM_ITERS)),
        };
        let mut current = self.chi2(&fac);
        let mut history = vec![current];
        let mut converged = current <= opts.abs_tol;
        let mut iterations = 0;
        while !converged && iterations < budget {
            let mut next = fac.clone();
            self.update_rows(&mut next);
            self.update_columns(&mut next);
            iterations += 1;
            let value = self.chi2(&next);
            if value > current {
                // block updates are exact, so a rise can only be rounding
                converged = true;
                break;
            }
            let gain = current - value;
            fac = next;
            current = value;
            history.push(current);
            converged = gain <= opts.rel_tol * current || current <= opts.abs_tol;
        }
        RunOutcome {
            factors: fac,
            chi2: current,
            iterations,
            converged,
            history,
        }
    }
}

/// Fits a rank-`k` model to `train`, keeping the best of an SVD start and
/// `opts.n_restarts` perturbed starts. Unprobed cells only enter through the
/// `[0, 1]` constraint.
pub fn fit_rank_k(train: &FrequencyMatrix, k: usize, opts: &FitOptions) -> Result<(GptModel, FitReport)> {
    fit_with_warm_start(train, k, opts, None)
}

/// Lifts a feasible lower-rank model to rank `k`: the new state columns are
/// zero, so the predictions and χ² are unchanged, and the new effect rows
/// are small random values that let the first row update leave the saddle.
fn lift(problem: &Problem, lower: &GptModel, k: usize, scale: f64, seed: u64) -> Option<Factors> {
    let (m, cols) = (problem.m(), problem.cols());
    let j = lower.rank;
    if j >= k || lower.s.shape() != (m, j) || lower.e.shape() != (j, cols) {
        return None;
    }
    let mut rng = substream(seed, &[tag::RESTART, k as u64, u64::MAX]);
    let x = DMatrix::from_fn(m, k - 1, |i, a| if a + 1 < j { lower.s[(i, a + 1)] } else { 0.0 });
    let e = DMatrix::from_fn(k, cols, |a, c| {
        if a < j {
            lower.e[(a, c)]
        } else if c == 0 {
            0.0
        } else {
            scale * rng.sample::<f64, _>(StandardNormal)
        }
    });
    Some(Factors { x, e })
}

fn fit_with_warm_start(
    train: &FrequencyMatrix,
    k: usize,
    opts: &FitOptions,
    warm: Option<&GptModel>,
) -> Result<(GptModel, FitReport)> {
    train.validate()?;
    let problem = Problem::new(train, k)?;
    let base = problem.svd_start();
    let scale = {
        let vals: Vec<f64> = (1..k)
            .flat_map(|a| (1..base.ncols()).map(move |j| (a, j)))
            .map(|(a, j)| base[(a, j)])
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt()
        }
    };
    let mut starts: Vec<Start> = (0..=opts.n_restarts)
        .map(|r| {
            let mut e = base.clone();
            if r > 0 {
                let mut rng = substream(opts.seed, &[tag::RESTART, k as u64, r as u64]);
                for a in 1..k {
                    for j in 1..e.ncols() {
                        let z: f64 = rng.sample(StandardNormal);
                        e[(a, j)] += opts.restart_scale * scale * z;
                    }
                }
            }
            Start::Effects(e)
        })
        .collect();
    if let Some(f) = warm.and_then(|w| lift(&problem, w, k, 1e-3 * scale.max(1e-3), opts.seed)) {
        starts.push(Start::Factors(f));
    }
    let runs: Vec<RunOutcome> = starts.into_par_iter().map(|e| problem.run(e, opts)).collect();
    let restarts_used = runs.len();
    let any_converged = runs.iter().any(|r| r.converged);
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.chi2.total_cmp(&b.1.chi2).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .expect("at least one run");
    let model = GptModel::new(best.factors.s(), best.factors.e.clone())?;
    let report = FitReport {
        rank: k,
        chi2_train: best.chi2,
        chi2_test: None,
        iterations: best.iterations,
        restarts_used,
        converged: best.converged || any_converged,
        history: best.history,
    };
    Ok((model, report))
}

/// Same fit as [`fit_rank_k`]; named for designs with unprobed blocks, where
/// the completed entries are constrained to be probabilities.
pub fn fit_masked(train: &FrequencyMatrix, k: usize, opts: &FitOptions) -> Result<(GptModel, FitReport)> {
    fit_rank_k(train, k, opts)
}

/// χ² of the model against test data over the test set's probed cells.
pub fn testing_error(model: &GptModel, test: &FrequencyMatrix) -> Result<f64> {
    let d = model.predictions();
    if d.shape() != test.f.shape() {
        return Err(Error::Argument(format!(
            "model predicts {:?} but test data is {:?}",
            d.shape(),
            test.f.shape()
        )));
    }
    Ok(chi2(test, &d))
}

#[derive(Clone, Debug)]
pub struct RankSweep {
    pub reports: Vec<FitReport>,
    pub models: Vec<GptModel>,
    pub selected_rank: usize,
}

impl RankSweep {
    pub fn model(&self, rank: usize) -> Option<&GptModel> {
        self.models.iter().find(|m| m.rank == rank)
    }

    pub fn selected_model(&self) -> &GptModel {
        self.model(self.selected_rank).expect("selected rank was fitted")
    }
}

/// Smallest rank whose test error is within 0.1% of the minimum.
pub fn select_rank(reports: &[FitReport]) -> Option<usize> {
    let best = reports
        .iter()
        .filter_map(|r| r.chi2_test)
        .fold(f64::INFINITY, f64::min);
    reports
        .iter()
        .filter(|r| r.chi2_test.is_some_and(|t| t <= best * (1.0 + 1e-3)))
        .map(|r| r.rank)
        .min()
}

/// Fits each rank on `train`, scores it on `test` and selects a rank.
pub fn rank_sweep(
    train: &FrequencyMatrix,
    test: &FrequencyMatrix,
    ranks: &[usize],
    opts: &FitOptions,
) -> Result<RankSweep> {
    if ranks.is_empty() || ranks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("ranks must be nonempty and strictly ascending".into()));
    }
    if train.f.shape() != test.f.shape() || train.mask != test.mask {
        return Err(Error::Argument("train and test shapes or masks differ".into()));
    }
    test.validate()?;
    let mut reports: Vec<FitReport> = Vec::with_capacity(ranks.len());
    let mut models: Vec<GptModel> = Vec::with_capacity(ranks.len());
    for &k in ranks {
        // the previous rank's fit seeds this one, so χ²_train never rises with k
        let (model, mut report) = fit_with_warm_start(train, k, opts, models.last())?;
        report.chi2_test = Some(testing_error(&model, test)?);
        reports.push(report);
        models.push(model);
    }
    let selected_rank = select_rank(&reports).expect("every report has a test score");
    Ok(RankSweep {
        reports,
        models,
        selected_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{build_fiducial_design, build_haar_design, FrequencyMatrix};
    use crate::rng::substream;

    fn exact(m: usize, seed: u64) -> (FrequencyMatrix, DMatrix<f64>) {
        let design = build_haar_design(m, m, &mut substream(seed, &[])).unwrap();
        let d = design.probabilities(0.0);
        (FrequencyMatrix::from_probabilities(&d, 1.0, &design.mask).unwrap(), d)
    }

    #[test]
    fn exact_rank_nine_is_recovered() {
        let (f, d) = exact(20, 1);
        let (model, report) = fit_rank_k(&f, 9, &FitOptions::default()).unwrap();
        assert!(report.chi2_train < 1e-6, "{}", report.chi2_train);
        assert!((model.predictions() - &d).amax() < 1e-6);
        assert!(model.unit_violation() < 1e-12);
    }

    #[test]
    fn rank_eight_cannot_fit_rank_nine_data() {
        let (f, d) = exact(20, 2);
        // singular values of the generator matrix: nine are nonzero
        let sv = d.singular_values();
        assert_eq!(sv.iter().filter(|&&v| v > 1e-9).count(), 9);
        let (_, report) = fit_rank_k(&f, 8, &FitOptions::default()).unwrap();
        assert!(report.chi2_train > 1e-4, "{}", report.chi2_train);
    }

    #[test]
    fn unit_column_only_single_row() {
        let f = FrequencyMatrix::from_probabilities(
            &DMatrix::from_element(1, 1, 1.0),
            1.0,
            &DMatrix::from_element(1, 1, true),
        )
        .unwrap();
        let (model, report) = fit_rank_k(&f, 1, &FitOptions::default()).unwrap();
        assert_eq!(report.chi2_train, 0.0);
        assert_eq!(model.predictions()[(0, 0)], 1.0);
    }

    #[test]
    fn rank_too_large_is_rejected() {
        let (f, _) = exact(4, 3);
        assert!(matches!(fit_rank_k(&f, 5, &FitOptions::default()), Err(Error::Argument(_))));
        assert!(matches!(fit_rank_k(&f, 0, &FitOptions::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn history_is_monotone_and_bounds_hold() {
        let design = build_haar_design(15, 15, &mut substream(4, &[])).unwrap();
        let params = crate::experiment::SimulationParams::default();
        let t = crate::experiment::simulate_counts(&design, &params, 5).unwrap();
        let f = crate::experiment::counts_to_frequencies(&t, &design).unwrap();
        for k in [3, 9, 11] {
            let (model, report) = fit_rank_k(&f, k, &FitOptions::default()).unwrap();
            for w in report.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "rank {k}: {} -> {}", w[0], w[1]);
            }
            assert!(model.bound_violation() <= 1e-9, "rank {k}: {}", model.bound_violation());
        }
    }

    #[test]
    fn full_mask_masked_fit_matches_plain_fit() {
        let (f, _) = exact(12, 6);
        let a = fit_rank_k(&f, 5, &FitOptions::default()).unwrap();
        let b = fit_masked(&f, 5, &FitOptions::default()).unwrap();
        assert_eq!(a.1.chi2_train, b.1.chi2_train);
    }

    #[test]
    fn testing_error_of_generator_is_zero() {
        let (f, d) = exact(10, 7);
        let design = build_haar_design(10, 10, &mut substream(7, &[])).unwrap();
        let s = design.state_vectors().unwrap();
        let e = design.effect_vectors();
        let model = GptModel::new(s, e).unwrap();
        assert!((model.predictions() - d).amax() < 1e-12);
        assert!(testing_error(&model, &f).unwrap() < 1e-20);
        let other = exact(11, 7).0;
        assert!(testing_error(&model, &other).is_err());
    }

    #[test]
    fn single_rank_sweep() {
        let design = build_fiducial_design(4, &mut substream(8, &[]));
        let d = design.probabilities(0.0);
        let f = FrequencyMatrix::from_probabilities(&d, 0.01, &design.mask).unwrap();
        let sweep = rank_sweep(&f, &f, &[9], &FitOptions::default()).unwrap();
        assert_eq!(sweep.selected_rank, 9);
        assert_eq!(sweep.reports.len(), 1);
        assert!(rank_sweep(&f, &f, &[9, 8], &FitOptions::default()).is_err());
    }

    #[test]
    fn tie_break_prefers_smaller_rank() {
        let mk = |rank, t| FitReport {
            rank,
            chi2_train: 0.0,
            chi2_test: Some(t),
            iterations: 0,
            restarts_used: 1,
            converged: true,
            history: vec![],
        };
        assert_eq!(select_rank(&[mk(8, 100.05), mk(9, 100.0), mk(10, 120.0)]), Some(8));
        assert_eq!(select_rank(&[mk(8, 130.0), mk(9, 100.0), mk(10, 100.0)]), Some(9));
    }
}
