use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

use super::graph::ConnectivityGraph;
use super::TOL;

/// The structural condition on `C` (or on the step size) that failed.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightCondition {
    Shape { rows: usize, cols: usize, agents: usize },
    NonFinite,
    StepSize,
    Asymmetric { k: usize, l: usize },
    RowSum { k: usize },
    NegativeOffDiagonal { k: usize, l: usize },
    Magnitude { k: usize, l: usize },
    OffEdgeSupport { k: usize, l: usize },
    MissingEdgeWeight { k: usize, l: usize },
    Positivity,
}

impl fmt::Display for WeightCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use WeightCondition::*;
        match *self {
            Shape { rows, cols, agents } => {
                write!(f, "C is {}x{} but the graph has {} agents", rows, cols, agents)
            }
            NonFinite => write!(f, "C has non-finite entries"),
            StepSize => write!(f, "step size must lie in (0, 1)"),
            Asymmetric { k, l } => write!(f, "symmetry: c[{}][{}] != c[{}][{}]", k, l, l, k),
            RowSum { k } => write!(f, "zero row sum: row {} does not sum to 0", k),
            NegativeOffDiagonal { k, l } => write!(f, "nonnegativity: c[{}][{}] < 0", k, l),
            Magnitude { k, l } => write!(f, "magnitude: |c[{}][{}]| > 1", k, l),
            OffEdgeSupport { k, l } => {
                write!(f, "support: c[{}][{}] > 0 but ({}, {}) is not an edge", k, l, k, l)
            }
            MissingEdgeWeight { k, l } => {
                write!(f, "support: ({}, {}) is an edge but c[{}][{}] = 0", k, l, k, l)
            }
            Positivity => write!(f, "positivity: eps * max|c_kk| exceeds 1"),
        }
    }
}

/// Row-stochastic combiner `W = I + eps * C`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    w: Matrix<T>,
}

impl<T: Real> WeightMatrix<T> {
    /// No cooperation: `W = I`.
    pub fn identity(num_agents: usize) -> Self {
        Self {
            w: Matrix::identity(num_agents),
        }
    }

    /// Validates `C` against `graph` and builds `W = I + eps * C`.
    ///
    /// The diagonal is stored as `1 - sum_{l != k} w_kl`, which equals
    /// `1 + eps * c_kk` under the zero-row-sum condition and keeps every
    /// row sum at 1 up to one rounding.
    pub fn new(graph: &ConnectivityGraph, c: &Matrix<T>, eps: T) -> Result<Self> {
        check_combination(graph, c, eps).map_err(Error::Weight)?;
        let k_n = graph.num_agents();
        let mut w = c.scaled(eps);
        for k in 0..k_n {
            let off: T = (0..k_n).filter(|&l| l != k).map(|l| w[(k, l)]).sum();
            w[(k, k)] = T::one() - off;
        }
        Ok(Self { w })
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn weight(&self, k: usize, l: usize) -> T {
        self.w[(k, l)]
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.w
    }

    /// `W * v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.num_agents())
            .map(|k| self.w.row(k).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        let n = self.num_agents();
        (0..n).all(|k| (0..n).all(|l| self.w[(k, l)] == if k == l { T::one() } else { T::zero() }))
    }
}

fn check_combination<T: Real>(
    graph: &ConnectivityGraph,
    c: &Matrix<T>,
    eps: T,
) -> std::result::Result<(), WeightCondition> {
    let n = graph.num_agents();
    if c.rows() != n || c.cols() != n {
        return Err(WeightCondition::Shape {
            rows: c.rows(),
            cols: c.cols(),
            agents: n,
        });
    }
    if !c.is_finite() {
        return Err(WeightCondition::NonFinite);
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(WeightCondition::StepSize);
    }
    let tol = T::lit(TOL);
    for k in 0..n {
        for l in 0..n {
            let ckl = c[(k, l)];
            if (ckl - c[(l, k)]).abs() > tol {
                return Err(WeightCondition::Asymmetric { k, l });
            }
            if ckl.abs() > T::one() + tol {
                return Err(WeightCondition::Magnitude { k, l });
            }
            if k == l {
                continue;
            }
            if ckl < -tol {
                return Err(WeightCondition::NegativeOffDiagonal { k, l });
            }
            let edge = graph.has_edge(k, l);
            if ckl > tol && !edge {
                return Err(WeightCondition::OffEdgeSupport { k, l });
            }
            if ckl <= tol && edge {
                return Err(WeightCondition::MissingEdgeWeight { k, l });
            }
        }
        let row: T = c.row(k).iter().copied().sum();
        if row.abs() > tol {
            return Err(WeightCondition::RowSum { k });
        }
    }
    let max_diag = (0..n).fold(T::zero(), |m, k| m.max(c[(k, k)].abs()));
    if eps * max_diag > T::one() {
        return Err(WeightCondition::Positivity);
    }
    Ok(())
}
