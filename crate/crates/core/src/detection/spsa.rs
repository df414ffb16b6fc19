//! Simultaneous-perturbation stochastic approximation over the probe
//! sequence, minimizing the estimated Type-II error of the statistical test
//! against agents that respond at random.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::malicious::generate_normal_agent_data;
use super::{accepts, MDistribution, NoiseModel, NoisyDataset, DEFAULT_M_SAMPLES};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Lower clamp applied to every probe entry.
pub const P_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    /// Perturbation size.
    pub sigma: f64,
    /// Gain of the gradient step.
    pub step: f64,
    pub iterations: usize,
    /// Noise panels per cost estimate.
    pub cost_samples: usize,
    pub seed: u64,
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("SPSA sigma must be positive"));
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(Error::config("SPSA step must be non-negative"));
        }
        if self.cost_samples == 0 {
            return Err(Error::config("SPSA needs at least one cost sample"));
        }
        Ok(())
    }
}

/// Everything the Type-II cost depends on besides the probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostContext {
    pub num_agents: usize,
    pub probe_dim: usize,
    pub noise: NoiseModel,
    pub gamma: f64,
    /// Random responders draw every action entry uniformly from this range.
    pub normal_range: (f64, f64),
    /// Monte Carlo size for the distribution of `M`.
    pub m_samples: usize,
}

impl Default for CostContext {
    fn default() -> Self {
        Self {
            num_agents: 3,
            probe_dim: 2,
            noise: NoiseModel::Uniform { kappa: 0.1 },
            gamma: 0.05,
            normal_range: (1.0, 50.0),
            m_samples: DEFAULT_M_SAMPLES,
        }
    }
}

/// Fraction of `k` random-responder datasets on which the test accepts
/// Nash rationality (a Type-II error).
///
/// Sample `j` draws its responses and noise from stream `j` of `seed`, so two
/// calls with the same seed see the same panels (common random numbers).
pub fn spsa_cost(probes: &[f64], ctx: &CostContext, k: usize, seed: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::input("at least one cost sample is required"));
    }
    if probes.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::input("probes must be strictly positive"));
    }
    let dist = MDistribution::estimate(probes, ctx.probe_dim, ctx.num_agents, &ctx.noise, ctx.m_samples, seed)?;
    let accepted = (0..k as u64)
        .into_par_iter()
        .map(|j| -> Result<usize> {
            let mut rng = rng::stream(seed, Domain::NormalAgents, j);
            let clean = generate_normal_agent_data(probes, ctx.probe_dim, ctx.num_agents, ctx.normal_range, &mut rng)?;
            let noisy = NoisyDataset::observe(&clean, ctx.noise, &mut rng)?;
            Ok(accepts(noisy.observed(), &dist, ctx.gamma)? as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(accepted as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaTrace {
    /// `probes[q]` is the iterate before update `q`; the last entry is final.
    pub probes: Vec<Vec<f64>>,
    /// Mean of the two perturbed cost evaluations at each iteration.
    pub costs: Vec<f64>,
}

impl SpsaTrace {
    pub fn final_probe(&self) -> &[f64] {
        self.probes.last().expect("trace holds the starting point")
    }

    /// Mean cost over the last `fraction` of iterations (at least one).
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let n = self.costs.len();
        let k = ((n as f64 * fraction).round() as usize).clamp(1, n.max(1));
        self.costs[n - k..].iter().sum::<f64>() / k as f64
    }
}

/// SPSA with `+-1` Bernoulli perturbations on an arbitrary noisy cost
/// `cost(p, seed)`; both evaluations of one iteration get the same seed.
pub fn spsa_minimize<F>(p0: &[f64], cfg: &SpsaConfig, mut cost: F) -> Result<SpsaTrace>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    cfg.validate()?;
    if p0.is_empty() || p0.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::input("initial probe must be strictly positive"));
    }
    let mut p = p0.to_vec();
    let mut trace = SpsaTrace {
        probes: vec![p.clone()],
        costs: Vec::with_capacity(cfg.iterations),
    };
    for q in 0..cfg.iterations as u64 {
        let mut rng = rng::stream(cfg.seed, Domain::Spsa, q);
        let delta: Vec<f64> = p.iter().map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let eval_seed: u64 = rng.random();
        let plus: Vec<f64> = p.iter().zip(&delta).map(|(&x, &d)| (x + cfg.sigma * d).max(P_FLOOR)).collect();
        let minus: Vec<f64> = p.iter().zip(&delta).map(|(&x, &d)| (x - cfg.sigma * d).max(P_FLOOR)).collect();
        let (jp, jm) = (cost(&plus, eval_seed)?, cost(&minus, eval_seed)?);
        for (x, &d) in p.iter_mut().zip(&delta) {
            let g = (jp - jm) / (2.0 * cfg.sigma * d);
            *x = (*x - cfg.step * g).max(P_FLOOR);
        }
        trace.costs.push(0.5 * (jp + jm));
        trace.probes.push(p.clone());
    }
    Ok(trace)
}

/// Probe optimization against the Type-II cost [`spsa_cost`].
pub fn spsa_optimize(p0: &[f64], cfg: &SpsaConfig, ctx: &CostContext) -> Result<SpsaTrace> {
    if p0.len() % ctx.probe_dim.max(1) != 0 {
        return Err(Error::input("probe length must be a multiple of probe_dim"));
    }
    spsa_minimize(p0, cfg, |p, seed| spsa_cost(p, ctx, cfg.cost_samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_cfg(step: f64) -> SpsaConfig {
        SpsaConfig {
            sigma: 0.1,
            step,
            iterations: 200,
            cost_samples: 1,
            seed: 3,
        }
    }

    #[test]
    fn converges_on_quadratic_surrogate() {
        let target = [2.0, 0.5, 3.0, 1.0];
        let p0 = [4.0, 4.0, 0.5, 2.5];
        let trace = spsa_minimize(&p0, &quad_cfg(0.05), |p, _| {
            Ok(p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum())
        })
        .unwrap();
        let dist = |p: &[f64]| -> f64 { p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() };
        assert!(dist(trace.final_probe()) < dist(&p0) / 10.0);
    }

    #[test]
    fn zero_step_keeps_the_probe() {
        let p0 = [1.5, 2.5];
        let trace = spsa_minimize(&p0, &quad_cfg(0.0), |p, _| Ok(p[0] * 3.0 - p[1])).unwrap();
        assert!(trace.probes.iter().all(|p| p == &p0));
    }

    #[test]
    fn iterates_respect_the_floor() {
        let trace = spsa_minimize(&[0.05, 0.02], &quad_cfg(1.0), |p, _| Ok(p.iter().sum())).unwrap();
        assert!(trace.probes.iter().flatten().all(|&x| x >= P_FLOOR));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(spsa_minimize(&[1.0, 0.0], &quad_cfg(0.1), |_, _| Ok(0.0)).is_err());
        let mut cfg = quad_cfg(0.1);
        cfg.sigma = 0.0;
        assert!(spsa_minimize(&[1.0], &cfg, |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn cost_is_a_probability_and_reproducible() {
        let ctx = CostContext {
            m_samples: 500,
            ..CostContext::default()
        };
        let probes: Vec<f64> = (0..12).map(|k| 1.0 + (k % 5) as f64).collect();
        let a = spsa_cost(&probes, &ctx, 5, 11).unwrap();
        let b = spsa_cost(&probes, &ctx, 5, 11).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }
}
