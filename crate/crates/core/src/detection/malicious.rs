//! The malicious-agent game: agents spread effort `x^i(j)` over `m`
//! channels, gain from their share of the joint activity and from hiding
//! behind the authentication noise `beta`:
//!
//! ```text
//! u^i = ln( prod_j x^i(j) / prod_j S_j ) + sum_j ln(1 + x^i(j) / beta_j),
//! S_j = sum_l x^l(j).
//! ```
//!
//! For `m = 2` the first term is `ln[x^i(1) x^i(2) / sum_l sum_k x^l(1) x^k(2)]`.
//! Data are generated by maximizing `V = sum_i u^i` under the per-agent
//! budgets `p_t'x^i <= I_t^i`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::revealed::Dataset;
use crate::scalar::dot;

/// Lower bound on every action entry (keeps the logarithms finite).
pub const X_FLOOR: f64 = 1e-6;
/// Projected-gradient stopping tolerance on `||x - P(x + grad V)||`.
pub const GRAD_TOL: f64 = 1e-5;
pub const MAX_ITERATIONS: usize = 50_000;

/// Normal budget distribution; `variance`, not standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetDistribution {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaliciousGameSpec {
    pub num_agents: usize,
    pub probe_dim: usize,
    pub beta: Vec<f64>,
    pub budgets: Vec<BudgetDistribution>,
    /// Probe entries are drawn uniformly from `[lo, hi)`.
    pub probe_range: (f64, f64),
}

impl Default for MaliciousGameSpec {
    fn default() -> Self {
        Self {
            num_agents: 3,
            probe_dim: 2,
            beta: vec![0.03, 0.08],
            budgets: vec![
                BudgetDistribution { mean: 20.0, variance: 1.0 },
                BudgetDistribution { mean: 50.0, variance: 1.0 },
                BudgetDistribution { mean: 80.0, variance: 4.0 },
            ],
            probe_range: (1.0, 5.0),
        }
    }
}

impl MaliciousGameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 || self.probe_dim == 0 {
            return Err(Error::config("the game needs at least one agent and one channel"));
        }
        if self.beta.len() != self.probe_dim || self.beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::config("beta must hold probe_dim positive entries"));
        }
        if self.budgets.len() != self.num_agents {
            return Err(Error::config("one budget distribution per agent is required"));
        }
        for b in &self.budgets {
            if !(b.mean > 0.0 && b.mean.is_finite() && b.variance >= 0.0 && b.variance.is_finite()) {
                return Err(Error::config("budget means must be positive and variances non-negative"));
            }
        }
        let (lo, hi) = self.probe_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::config("probe range must satisfy 0 < lo < hi"));
        }
        Ok(())
    }

    pub fn draw_probe<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.probe_range;
        (0..self.probe_dim).map(|_| rng.random_range(lo..hi)).collect()
    }

    /// Budgets for one observation. A draw too small to afford the floor
    /// bundle at `probe` is redrawn.
    pub fn draw_budgets<R: Rng + ?Sized>(&self, probe: &[f64], rng: &mut R) -> Vec<f64> {
        let min = X_FLOOR * probe.iter().sum::<f64>();
        self.budgets
            .iter()
            .map(|b| {
                let dist = Normal::new(b.mean, b.variance.sqrt()).expect("validated budget");
                loop {
                    let v = dist.sample(rng);
                    if v > min {
                        break v;
                    }
                }
            })
            .collect()
    }
}

/// `u^i(x^i, x^{-i})` for one agent.
pub fn malicious_utility(own: &[f64], others: &[&[f64]], beta: &[f64]) -> Result<f64> {
    let m = own.len();
    if beta.len() != m || others.iter().any(|x| x.len() != m) {
        return Err(Error::input("action and beta lengths differ"));
    }
    if own.iter().chain(others.iter().flat_map(|x| x.iter())).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("malicious utility needs strictly positive actions".into()));
    }
    let mut u = 0.0;
    for j in 0..m {
        let total = own[j] + others.iter().map(|x| x[j]).sum::<f64>();
        u += own[j].ln() - total.ln() + (1.0 + own[j] / beta[j]).ln();
    }
    Ok(u)
}

/// `V = sum_i u^i` for the stacked actions `x[i * m + j]`.
pub fn potential(x: &[f64], n: usize, beta: &[f64]) -> f64 {
    let m = beta.len();
    let mut v = 0.0;
    for j in 0..m {
        let total: f64 = (0..n).map(|i| x[i * m + j]).sum();
        v -= n as f64 * total.ln();
        for i in 0..n {
            let xij = x[i * m + j];
            v += xij.ln() + (1.0 + xij / beta[j]).ln();
        }
    }
    v
}

/// `dV/dx^k(j) = 1/x^k(j) - n/S_j + 1/(beta_j + x^k(j))`.
pub fn potential_gradient(x: &[f64], n: usize, beta: &[f64], out: &mut [f64]) {
    let m = beta.len();
    for j in 0..m {
        let total: f64 = (0..n).map(|i| x[i * m + j]).sum();
        for i in 0..n {
            let xij = x[i * m + j];
            out[i * m + j] = 1.0 / xij - n as f64 / total + 1.0 / (beta[j] + xij);
        }
    }
}

/// Euclidean projection of `y` onto `{x >= floor, p'x <= budget}`.
///
/// When the budget binds, `x(theta) = max(floor, y - theta p)` and the
/// spending `p'x(theta)` is piecewise linear and decreasing in `theta`;
/// the breakpoints are visited in order and the active piece solved exactly.
pub fn project_budget(y: &[f64], p: &[f64], budget: f64, floor: f64) -> Vec<f64> {
    let clamped: Vec<f64> = y.iter().map(|&v| v.max(floor)).collect();
    if dot(p, &clamped) <= budget {
        return clamped;
    }
    let mut breaks: Vec<f64> = y
        .iter()
        .zip(p)
        .map(|(&v, &pj)| (v - floor) / pj)
        .filter(|&b| b > 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    let mut lo = 0.0;
    for &b in &breaks {
        let spend = |theta: f64| -> f64 { y.iter().zip(p).map(|(&v, &pj)| pj * (v - theta * pj).max(floor)).sum() };
        if spend(b) <= budget {
            // Entries with breakpoint above `lo` move with theta on [lo, b].
            let (mut fixed, mut lin, mut quad) = (0.0, 0.0, 0.0);
            for (&v, &pj) in y.iter().zip(p) {
                if (v - floor) / pj > lo {
                    lin += pj * v;
                    quad += pj * pj;
                } else {
                    fixed += pj * floor;
                }
            }
            let theta = ((lin + fixed - budget) / quad).clamp(lo, b);
            return y.iter().zip(p).map(|(&v, &pj)| (v - theta * pj).max(floor)).collect();
        }
        lo = b;
    }
    // Only reachable when the floor bundle itself exceeds the budget.
    vec![floor; y.len()]
}

fn project_all(y: &[f64], probe: &[f64], budgets: &[f64], out: &mut [f64]) {
    let m = probe.len();
    for (i, &b) in budgets.iter().enumerate() {
        let block = project_budget(&y[i * m..(i + 1) * m], probe, b, X_FLOOR);
        out[i * m..(i + 1) * m].copy_from_slice(&block);
    }
}

/// Maximizes `V` under `probe'x^i <= budgets[i]`, `x >= X_FLOOR` by
/// projected gradient ascent (Barzilai-Borwein trial steps, Armijo
/// backtracking). Returns the stacked optimizer `x[i * m + j]`.
///
/// Iterates well past [`GRAD_TOL`] while progress is possible, since the
/// objective is flat along the budget lines; only a projected-gradient
/// residual above [`GRAD_TOL`] after [`MAX_ITERATIONS`] is an error.
pub fn maximize_potential(probe: &[f64], budgets: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (budgets.len(), probe.len());
    if beta.len() != m {
        return Err(Error::input("beta and probe lengths differ"));
    }
    let nm = n * m;
    let target = GRAD_TOL * 1e-5;
    // Equal spending on every channel: interior and feasible.
    let mut x: Vec<f64> = (0..nm).map(|k| (budgets[k / m] / (m as f64 * probe[k % m])).max(X_FLOOR)).collect();
    let mut grad = vec![0.0; nm];
    let mut prev_x = x.clone();
    let mut prev_grad = vec![0.0; nm];
    let mut trial = vec![0.0; nm];
    let mut step_point = vec![0.0; nm];
    let mut alpha = 1.0f64;
    let mut residual = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        potential_gradient(&x, n, beta, &mut grad);
        for k in 0..nm {
            step_point[k] = x[k] + grad[k];
        }
        project_all(&step_point, probe, budgets, &mut trial);
        residual = x.iter().zip(&trial).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if residual <= target {
            return Ok(x);
        }
        if iter > 0 {
            // BB1 step for ascent: s's / -(s'y), y the gradient change.
            let (mut ss, mut sy) = (0.0, 0.0);
            for k in 0..nm {
                let s = x[k] - prev_x[k];
                ss += s * s;
                sy -= s * (grad[k] - prev_grad[k]);
            }
            alpha = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { (alpha * 2.0).min(1e10) };
        }
        let v0 = potential(&x, n, beta);
        loop {
            for k in 0..nm {
                step_point[k] = x[k] + alpha * grad[k];
            }
            project_all(&step_point, probe, budgets, &mut trial);
            let ascent: f64 = grad.iter().zip(trial.iter().zip(&x)).map(|(g, (t, x))| g * (t - x)).sum();
            if potential(&trial, n, beta) >= v0 + 1e-4 * ascent || alpha < 1e-14 {
                break;
            }
            alpha *= 0.5;
        }
        if trial == x {
            // No representable progress left.
            break;
        }
        prev_x.copy_from_slice(&x);
        prev_grad.copy_from_slice(&grad);
        x.copy_from_slice(&trial);
    }
    if residual <= GRAD_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
            iterate: x,
        })
    }
}

/// `T` observations of the potential maximizers at random probes and budgets.
pub fn generate_potential_game_data<R: Rng + ?Sized>(
    spec: &MaliciousGameSpec,
    num_obs: usize,
    rng: &mut R,
) -> Result<Dataset<f64>> {
    spec.validate()?;
    if num_obs == 0 {
        return Err(Error::input("T >= 1 required"));
    }
    let mut probes = Vec::with_capacity(num_obs * spec.probe_dim);
    let mut actions = Vec::with_capacity(num_obs * spec.num_agents * spec.probe_dim);
    for _ in 0..num_obs {
        let p = spec.draw_probe(rng);
        let budgets = spec.draw_budgets(&p, rng);
        actions.extend(maximize_potential(&p, &budgets, &spec.beta)?);
        probes.extend(p);
    }
    Dataset::from_flat(num_obs, spec.probe_dim, spec.num_agents, probes, actions)
}

/// Potential maximizers at the given probes (`T * m` entries, observation
/// major) with fresh budgets per observation.
pub fn potential_game_responses<R: Rng + ?Sized>(
    spec: &MaliciousGameSpec,
    probes: &[f64],
    rng: &mut R,
) -> Result<Dataset<f64>> {
    spec.validate()?;
    let m = spec.probe_dim;
    if probes.is_empty() || probes.len() % m != 0 {
        return Err(Error::input("probe length must be a positive multiple of probe_dim"));
    }
    if probes.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::input("probes must be strictly positive"));
    }
    let num_obs = probes.len() / m;
    let mut actions = Vec::with_capacity(num_obs * spec.num_agents * m);
    for p in probes.chunks(m) {
        let budgets = spec.draw_budgets(p, rng);
        actions.extend(maximize_potential(p, &budgets, &spec.beta)?);
    }
    Dataset::from_flat(num_obs, m, spec.num_agents, probes.to_vec(), actions)
}

/// Responses of agents that ignore the probe: every entry uniform on `[lo, hi)`.
pub fn generate_normal_agent_data<R: Rng + ?Sized>(
    probes: &[f64],
    probe_dim: usize,
    num_agents: usize,
    range: (f64, f64),
    rng: &mut R,
) -> Result<Dataset<f64>> {
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(Error::config("normal-agent action range must satisfy lo < hi"));
    }
    let num_obs = probes.len() / probe_dim.max(1);
    let actions = (0..num_obs * num_agents * probe_dim).map(|_| rng.random_range(lo..hi)).collect();
    Dataset::from_flat(num_obs, probe_dim, num_agents, probes.to_vec(), actions)
}
