//! Thin wrapper over `microlp` for the dense LPs of ray shooting and support
//! functions.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpFailure {
    Infeasible,
    Unbounded,
    Other(String),
}

pub(crate) struct Lp {
    problem: Problem,
    vars: Vec<microlp::Variable>,
}

impl Lp {
    pub fn maximize(objective: &[f64], bounds: &[(f64, f64)]) -> Self {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars = objective
            .iter()
            .zip(bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        Self { problem, vars }
    }

    fn terms(&self, coeffs: &[f64]) -> Vec<(microlp::Variable, f64)> {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| (self.vars[i], c))
            .collect()
    }

    pub fn equal(&mut self, coeffs: &[f64], rhs: f64) {
        let t = self.terms(coeffs);
        self.problem.add_constraint(&t, ComparisonOp::Eq, rhs);
    }

    pub fn range(&mut self, coeffs: &[f64], lo: f64, hi: f64) {
        let t = self.terms(coeffs);
        if t.is_empty() {
            return;
        }
        if lo.is_finite() {
            self.problem.add_constraint(&t, ComparisonOp::Ge, lo);
        }
        if hi.is_finite() {
            self.problem.add_constraint(&t, ComparisonOp::Le, hi);
        }
    }

    pub fn solve(&self) -> Result<(f64, Vec<f64>), LpFailure> {
        match self.problem.solve() {
            Ok(outcome) => match outcome.into_solution() {
                Ok(sol) => {
                    let x = self.vars.iter().map(|&v| sol.var_value(v)).collect();
                    Ok((sol.objective(), x))
                }
                Err(e) => Err(LpFailure::Other(format!("{e:?}"))),
            },
            Err(microlp::Error::Infeasible) => Err(LpFailure::Infeasible),
            Err(microlp::Error::Unbounded) => Err(LpFailure::Unbounded),
            Err(e) => Err(LpFailure::Other(e.to_string())),
        }
    }
}
