//! Small dense convex QP used by the constrained least-squares updates.
//!
//! Minimizes `½ xᵀ H x − bᵀ x` subject to `lo_l ≤ c_l · x ≤ hi_l` with a
//! primal active-set method started from a feasible point, so the returned
//! point is feasible and never worse than the start.

use nalgebra::{DMatrix, DVector};

const FEAS_TOL: f64 = 1e-12;

pub(crate) struct BoxedLsq<'a> {
    pub h: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    /// One constraint normal per row.
    pub c: &'a DMatrix<f64>,
    pub lo: &'a [f64],
    pub hi: &'a [f64],
}

fn regularized(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let scale = h.trace().abs() / n.max(1) as f64;
    let mut out = h.clone();
    for i in 0..n {
        out[(i, i)] += 1e-13 * scale + 1e-300;
    }
    out
}

impl BoxedLsq<'_> {
    fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(self.h * x)) - self.b.dot(x)
    }

    fn feasible(&self, x: &DVector<f64>) -> bool {
        let cx = self.c * x;
        cx.iter()
            .zip(self.lo.iter().zip(self.hi))
            .all(|(v, (lo, hi))| *v >= lo - FEAS_TOL && *v <= hi + FEAS_TOL)
    }

    /// Normal sign and offset of the `a · x ≥ β` form of one side of a
    /// constraint: side `2l` is `c_l · x ≥ lo_l`, side `2l + 1` is
    /// `−c_l · x ≥ −hi_l`.
    fn side(&self, idx: usize) -> (f64, f64) {
        if idx % 2 == 0 {
            (1.0, self.lo[idx / 2])
        } else {
            (-1.0, -self.hi[idx / 2])
        }
    }

    pub fn solve(&self, x0: &DVector<f64>) -> DVector<f64> {
        let n = x0.len();
        if n == 0 {
            return x0.clone();
        }
        let h = regularized(self.h);
        let Some(chol) = h.clone().cholesky() else {
            return x0.clone();
        };
        let free = chol.solve(self.b);
        if self.feasible(&free) {
            return free;
        }

        let n_sides = 2 * self.c.nrows();
        let mut x = x0.clone();
        let mut working: Vec<usize> = Vec::new();
        let max_iter = 20 * (n + n_sides) + 50;
        for _ in 0..max_iter {
            let grad = &h * &x - self.b;
            let w = working.len();
            let mut kkt = DMatrix::zeros(n + w, n + w);
            kkt.view_mut((0, 0), (n, n)).copy_from(&h);
            for (r, &idx) in working.iter().enumerate() {
                let sign = self.side(idx).0;
                for q in 0..n {
                    let a = sign * self.c[(idx / 2, q)];
                    kkt[(n + r, q)] = a;
                    kkt[(q, n + r)] = a;
                }
            }
            let mut rhs = DVector::zeros(n + w);
            rhs.rows_mut(0, n).copy_from(&(-&grad));
            let Some(sol) = kkt.lu().solve(&rhs) else {
                break;
            };
            let p = sol.rows(0, n).into_owned();
            if p.norm() <= 1e-14 * (1.0 + x.norm()) {
                // multipliers of the a·x ≥ β sides are −ν
                let worst = (0..w)
                    .map(|r| (r, -sol[n + r]))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    Some((r, lambda)) if lambda < -1e-14 => {
                        working.remove(r);
                    }
                    _ => break,
                }
                continue;
            }
            let cx = self.c * &x;
            let cp = self.c * &p;
            let mut alpha = 1.0;
            let mut blocking = None;
            for idx in 0..n_sides {
                let (sign, beta) = self.side(idx);
                let ap = sign * cp[idx / 2];
                if ap < -1e-300 && !working.contains(&idx) {
                    let step = ((beta - sign * cx[idx / 2]) / ap).max(0.0);
                    if step < alpha {
                        alpha = step;
                        blocking = Some(idx);
                    }
                }
            }
            x += alpha * &p;
            if let Some(idx) = blocking {
                working.push(idx);
            }
        }
        if self.objective(&x) <= self.objective(x0) {
            x
        } else {
            x0.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_when_feasible() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let b = DVector::from_row_slice(&[1.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let qp = BoxedLsq { h: &h, b: &b, c: &c, lo: &[0.0], hi: &[5.0] };
        let x = qp.solve(&DVector::zeros(2));
        assert!((&x - DVector::from_row_slice(&[0.5, 0.5])).norm() < 1e-10);
    }

    #[test]
    fn binding_upper_bound() {
        // min (x-2)² + (y-2)² s.t. x + y ≤ 1 → (0.5, 0.5)
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let b = DVector::from_row_slice(&[4.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let qp = BoxedLsq { h: &h, b: &b, c: &c, lo: &[-10.0, -0.25], hi: &[1.0, 0.25] };
        let x = qp.solve(&DVector::zeros(2));
        assert!((&x - DVector::from_row_slice(&[0.5, 0.5])).norm() < 1e-9, "{x}");
    }

    #[test]
    fn two_active_sides() {
        // min (x-3)² + (y+3)² in the unit box → (1, 0)
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let b = DVector::from_row_slice(&[6.0, -6.0]);
        let c = DMatrix::identity(2, 2);
        let qp = BoxedLsq { h: &h, b: &b, c: &c, lo: &[0.0, 0.0], hi: &[1.0, 1.0] };
        let x = qp.solve(&DVector::from_row_slice(&[0.5, 0.5]));
        assert!((&x - DVector::from_row_slice(&[1.0, 0.0])).norm() < 1e-9, "{x}");
    }
}
