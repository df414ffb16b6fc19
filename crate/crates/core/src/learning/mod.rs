//! Regret matching with diffusion cooperation.
//!
//! Each round every agent (1) samples an action from a strategy built from
//! its fused regret matrix and its previous action, (2) moves its individual
//! regret matrix towards the instantaneous regret of the realized payoff and
//! (3) fuses the individual matrices of its closed neighborhood with the
//! weights `W = I + eps * C`.

mod sim;

pub use sim::{run_simulation, Simulation, SimulationTrace, StepRecord, Variant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{NormalFormGame, WeightMatrix};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Which matrices the fusion step combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionInput {
    /// Combine the freshly updated individual matrices `R^l_{n+1}`.
    #[default]
    Individual,
    /// Combine the previous fused matrices `Rbar^l_n`, ignoring the new
    /// observations (kept for reproducing the literal recursion).
    PreviousFused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig<T> {
    pub step_size: T,
    pub exploration: T,
    /// Per-agent inertia `mu^k`; `None` selects `1.1 * A * (u_max - u_min)`.
    pub inertia: Option<Vec<T>>,
    pub seed: u64,
    pub fusion: FusionInput,
}

impl<T: Real> LearnerConfig<T> {
    pub fn new(step_size: T, exploration: T, seed: u64) -> Self {
        Self {
            step_size,
            exploration,
            inertia: None,
            seed,
            fusion: FusionInput::Individual,
        }
    }

    /// Checks the parameters against `game` and returns the inertia of every
    /// agent.
    pub fn resolve_inertia(&self, game: &NormalFormGame<T>) -> Result<Vec<T>> {
        let open = |x: T| x > T::zero() && x < T::one();
        if !open(self.step_size) {
            return Err(Error::config("step size must lie in (0, 1)"));
        }
        if !open(self.exploration) {
            return Err(Error::config("exploration must lie in (0, 1)"));
        }
        let a = T::from_usize_lossy(game.num_actions());
        let floor: Vec<T> = (0..game.num_agents())
            .map(|k| {
                let (lo, hi) = game.utility_range(k);
                a * (hi - lo)
            })
            .collect();
        match &self.inertia {
            None => Ok(floor
                .into_iter()
                .map(|f| if f > T::zero() { T::lit(1.1) * f } else { T::one() })
                .collect()),
            Some(mu) => {
                if mu.len() != game.num_agents() {
                    return Err(Error::config(format!(
                        "{} inertia values for {} agents",
                        mu.len(),
                        game.num_agents()
                    )));
                }
                for (k, (&m, &f)) in mu.iter().zip(&floor).enumerate() {
                    if !(m > f) || !(m > T::zero()) {
                        return Err(Error::config(format!(
                            "inertia of agent {} must exceed A * (u_max - u_min) = {}",
                            k + 1,
                            f
                        )));
                    }
                }
                Ok(mu.clone())
            }
        }
    }
}

/// Per-agent belief: individual and fused regret matrices plus the action
/// played in the previous round.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretState<T> {
    pub individual: Matrix<T>,
    pub fused: Matrix<T>,
    pub prev_action: usize,
}

impl<T: Real> RegretState<T> {
    pub fn new(num_actions: usize, prev_action: usize) -> Self {
        Self {
            individual: Matrix::zeros(num_actions, num_actions),
            fused: Matrix::zeros(num_actions, num_actions),
            prev_action,
        }
    }
}

/// Upper bound on `|r(i, j)|` for agent `k`.
///
/// Every regret entry is a convex combination of instantaneous regrets,
/// whose magnitude is at most `U * A / delta` with `U` the largest absolute
/// utility; `U` is taken as at least the utility range.
pub fn regret_bound<T: Real>(game: &NormalFormGame<T>, agent: usize, exploration: T) -> T {
    let (lo, hi) = game.utility_range(agent);
    let u = lo.abs().max(hi.abs()).max(hi - lo);
    u * T::from_usize_lossy(game.num_actions()) / exploration + (hi - lo)
}

/// Decision strategy from the regrets of switching away from `prev`:
/// `p(i) = (1 - delta) min(|r(prev, i)|^+ / mu, 1/A) + delta/A` for `i != prev`,
/// with the remaining mass on `prev`.
pub fn strategy_from_regret<T: Real>(
    regret: &Matrix<T>,
    prev: usize,
    inertia: T,
    exploration: T,
) -> Result<Vec<T>> {
    let a_n = regret.rows();
    if regret.cols() != a_n || prev >= a_n {
        return Err(Error::input("regret matrix must be square and prev in range"));
    }
    if !(inertia > T::zero()) {
        return Err(Error::config("inertia must be positive"));
    }
    if !(exploration > T::zero() && exploration < T::one()) {
        return Err(Error::config("exploration must lie in (0, 1)"));
    }
    let a = T::from_usize_lossy(a_n);
    let uniform = T::one() / a;
    let mut p = vec![T::zero(); a_n];
    let mut rest = T::zero();
    for (i, slot) in p.iter_mut().enumerate() {
        if i != prev {
            let switch = (regret[(prev, i)].pos() / inertia).min(uniform);
            *slot = (T::one() - exploration) * switch + exploration / a;
            rest += *slot;
        }
    }
    p[prev] = T::one() - rest;
    Ok(p)
}

/// Inverse-CDF draw over actions in increasing index order.
pub fn sample_action<T: Real, R: Rng + ?Sized>(p: &[T], rng: &mut R) -> Result<usize> {
    let tol = T::lit(1e-9);
    if p.is_empty() || p.iter().any(|&x| !(x >= -tol)) {
        return Err(Error::input("probabilities must be nonnegative"));
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > tol {
        return Err(Error::input(format!("probabilities sum to {}", total)));
    }
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left u above the final partial sum.
    Ok(p.iter().rposition(|&x| x > T::zero()).unwrap_or(p.len() - 1))
}

/// `f_ij = p(i)/p(j) u I(a = j) - u I(a = i)`: nonzero only in column `a`
/// and row `a`, zero on the diagonal.
pub fn instantaneous_regret<T: Real>(action: usize, utility: T, p: &[T]) -> Matrix<T> {
    let a_n = p.len();
    let mut f = Matrix::zeros(a_n, a_n);
    for i in 0..a_n {
        if i != action {
            f[(i, action)] = p[i] / p[action] * utility;
            f[(action, i)] = -utility;
        }
    }
    f
}

/// `R = Rbar + eps (F - Rbar)`.
pub fn regret_update<T: Real>(fused: &Matrix<T>, instant: &Matrix<T>, step: T) -> Matrix<T> {
    fused.lerp(instant, step)
}

/// `sum_l w_kl R^l` over the closed neighborhood of `k` (the only nonzero
/// weights in row `k`).
pub fn fuse_regrets<T: Real>(matrices: &[Matrix<T>], weights: &WeightMatrix<T>, k: usize) -> Matrix<T> {
    let a_n = matrices[k].rows();
    let mut out = Matrix::zeros(a_n, a_n);
    for (l, m) in matrices.iter().enumerate() {
        let w = weights.weight(k, l);
        if w != T::zero() {
            out.add_scaled(m, w);
        }
    }
    out
}

/// `max_k || (R^k)^+ ||_F`.
pub fn distance_to_ce<'a, T: Real>(matrices: impl IntoIterator<Item = &'a Matrix<T>>) -> T {
    matrices
        .into_iter()
        .map(|m| m.as_slice().iter().map(|&r| r.pos() * r.pos()).sum::<T>().sqrt())
        .fold(T::zero(), T::max)
}
