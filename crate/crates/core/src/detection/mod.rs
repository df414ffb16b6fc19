//! Detecting Nash-rational play from noisy observations.
//!
//! The test statistic `phi*` is the smallest uniform slack that makes the
//! multi-agent Afriat inequalities feasible for the observed actions. Under
//! the null hypothesis (the clean actions are Nash rational) it is bounded
//! by `M = max_{t,s} sum_i |p_t'(w_t^i - w_s^i)|`, a function of the noise
//! alone, so the null is rejected when `phi*` lands in the upper `gamma` tail
//! of `M`'s distribution, which is estimated by Monte Carlo.
//!
//! [`malicious`] generates Nash-rational data from the malicious-agent game
//! and [`spsa`] tunes the probes to cut the Type-II error against agents
//! that respond at random.

pub mod malicious;
mod noise;
pub mod spsa;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::revealed::{is_rational_at, Dataset};
use crate::rng::{self, Domain};
use crate::scalar::dot;

pub use malicious::{
    generate_normal_agent_data, generate_potential_game_data, malicious_utility, potential_game_responses, BudgetDistribution,
    MaliciousGameSpec,
};
pub use noise::{NoiseModel, NoisyDataset};
pub use spsa::{spsa_cost, spsa_optimize, CostContext, SpsaConfig, SpsaTrace};

/// Absolute tolerance of the bisection on `phi`.
pub const PHI_TOL: f64 = 1e-6;
/// Default number of Monte Carlo draws of `M`.
pub const DEFAULT_M_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    AcceptH0,
    RejectH0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub phi_star: f64,
    /// Estimate of `P(M >= phi*)`.
    pub tail_probability: f64,
    pub decision: Decision,
    pub gamma: f64,
}

/// Whether the inequalities with slack `phi` are feasible for `data`.
pub fn rational_at(data: &Dataset<f64>, phi: f64) -> Result<bool> {
    is_rational_at(data, phi)
}

/// `max_{t,s} sum_i |p_t'(y_s^i - y_t^i)|`: the slack at which `v = 0`,
/// `lambda = 1` already solves the system.
pub fn phi_upper_bound(data: &Dataset<f64>) -> f64 {
    let (tn, n) = (data.num_obs(), data.num_agents());
    let mut hi = 0.0f64;
    for t in 0..tn {
        for s in 0..tn {
            let total: f64 = (0..n).map(|i| (data.cost(t, s, i) - data.budget(t, i)).abs()).sum();
            hi = hi.max(total);
        }
    }
    hi
}

/// `phi* = min { phi >= 0 : system feasible }`, by bisection to [`PHI_TOL`].
///
/// The returned value is always a feasible slack (the upper end of the
/// final bracket), and exactly zero when the data are rational as they stand.
pub fn test_statistic_phi(data: &Dataset<f64>) -> Result<f64> {
    if rational_at(data, 0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, phi_upper_bound(data));
    while hi - lo > PHI_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rational_at(data, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One draw of `M` for probes `probes` (`T x m`, flat) and `n` agents.
pub fn sample_m<R: rand::Rng + ?Sized>(
    probes: &[f64],
    probe_dim: usize,
    num_agents: usize,
    noise: &NoiseModel,
    rng: &mut R,
) -> f64 {
    let tn = probes.len() / probe_dim;
    let w: Vec<f64> = (0..tn * num_agents * probe_dim).map(|_| noise.sample(rng)).collect();
    let panel = |s: usize, i: usize| &w[(s * num_agents + i) * probe_dim..(s * num_agents + i + 1) * probe_dim];
    let mut best = 0.0f64;
    let mut own = vec![0.0; num_agents];
    for t in 0..tn {
        let p = &probes[t * probe_dim..(t + 1) * probe_dim];
        for (i, o) in own.iter_mut().enumerate() {
            *o = dot(p, panel(t, i));
        }
        for s in 0..tn {
            if s == t {
                continue;
            }
            let total: f64 = (0..num_agents).map(|i| (own[i] - dot(p, panel(s, i))).abs()).sum();
            best = best.max(total);
        }
    }
    best
}

/// Monte Carlo sample of `M`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MDistribution {
    samples: Vec<f64>,
}

impl MDistribution {
    /// `num_samples` independent draws; draw `j` uses its own stream of
    /// `seed`, so the result does not depend on the thread count.
    pub fn estimate(
        probes: &[f64],
        probe_dim: usize,
        num_agents: usize,
        noise: &NoiseModel,
        num_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        if num_samples == 0 {
            return Err(Error::input("at least one Monte Carlo sample of M is required"));
        }
        if probe_dim == 0 || probes.is_empty() || probes.len() % probe_dim != 0 || num_agents == 0 {
            return Err(Error::input("probe layout does not match its dimensions"));
        }
        let mut samples: Vec<f64> = (0..num_samples as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = rng::stream(seed, Domain::MSamples, j);
                sample_m(probes, probe_dim, num_agents, noise, &mut rng)
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Fraction of draws with `M >= phi`.
    pub fn tail(&self, phi: f64) -> f64 {
        let below = self.samples.partition_point(|&m| m < phi);
        (self.samples.len() - below) as f64 / self.samples.len() as f64
    }

    /// Largest `c` with `tail(c) > gamma`: the `k`-th largest draw,
    /// `k = floor(gamma N) + 1`. The test accepts exactly when `phi* <= c`.
    pub fn acceptance_threshold(&self, gamma: f64) -> f64 {
        let n = self.samples.len();
        let k = ((gamma * n as f64).floor() as usize + 1).min(n);
        self.samples[n - k]
    }
}

/// Fraction of `num_samples` draws of `M` with `M >= phi_star`.
pub fn estimate_m_tail(
    probes: &[f64],
    probe_dim: usize,
    num_agents: usize,
    noise: &NoiseModel,
    phi_star: f64,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(MDistribution::estimate(probes, probe_dim, num_agents, noise, num_samples, seed)?.tail(phi_star))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("significance level must lie in (0, 1), got {}", gamma)))
    }
}

/// Accept "the clean actions are Nash rational" iff `P(M >= phi*) > gamma`.
pub fn statistical_test(data: &NoisyDataset, gamma: f64, num_samples: usize, seed: u64) -> Result<TestOutcome> {
    check_gamma(gamma)?;
    let d = data.observed();
    let phi_star = test_statistic_phi(d)?;
    let dist = MDistribution::estimate(d.probes_flat(), d.probe_dim(), d.num_agents(), &data.noise(), num_samples, seed)?;
    let tail_probability = dist.tail(phi_star);
    let decision = if tail_probability > gamma {
        Decision::AcceptH0
    } else {
        Decision::RejectH0
    };
    Ok(TestOutcome {
        phi_star,
        tail_probability,
        decision,
        gamma,
    })
}

/// Accept/reject only, with one feasibility check at the acceptance
/// threshold instead of the bisection (same verdict, up to [`PHI_TOL`]).
pub fn accepts(data: &Dataset<f64>, dist: &MDistribution, gamma: f64) -> Result<bool> {
    check_gamma(gamma)?;
    rational_at(data, dist.acceptance_threshold(gamma))
}

#[cfg(test)]
mod tests;
