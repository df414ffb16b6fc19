use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GlobalBehavior, NormalFormGame, WeightMatrix};
use crate::matrix::Matrix;
use crate::rng::{self, Domain, StreamRng};
use crate::scalar::Real;

use super::{
    distance_to_ce, fuse_regrets, instantaneous_regret, regret_update, sample_action,
    strategy_from_regret, FusionInput, LearnerConfig, RegretState,
};

/// Cooperative agents, or the same learners with `W = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Diffusion,
    Isolated,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusion" => Ok(Variant::Diffusion),
            "isolated" => Ok(Variant::Isolated),
            other => Err(Error::input(format!("unknown variant {:?}", other))),
        }
    }
}

/// What one synchronous round produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub profile: usize,
    pub strategies: Vec<Vec<T>>,
    pub utilities: Vec<T>,
    /// Distance of the fused regrets to the negative orthant after the round.
    pub distance: T,
}

/// One run of the learning dynamics.
pub struct Simulation<'a, T> {
    game: &'a NormalFormGame<T>,
    weights: WeightMatrix<T>,
    step_size: T,
    exploration: T,
    fusion: FusionInput,
    inertia: Vec<T>,
    states: Vec<RegretState<T>>,
    rngs: Vec<StreamRng>,
    behavior: Option<GlobalBehavior<T>>,
    rounds: usize,
}

impl<'a, T: Real> Simulation<'a, T> {
    /// Zero regrets; each agent's "previous" action for the first round is
    /// drawn uniformly from its own stream `(run, agent)`.
    pub fn new(
        game: &'a NormalFormGame<T>,
        weights: WeightMatrix<T>,
        cfg: &LearnerConfig<T>,
        run: u64,
    ) -> Result<Self> {
        let inertia = cfg.resolve_inertia(game)?;
        if weights.num_agents() != game.num_agents() {
            return Err(Error::input(format!(
                "weight matrix is for {} agents, game has {}",
                weights.num_agents(),
                game.num_agents()
            )));
        }
        let a_n = game.num_actions();
        let uniform = vec![T::one() / T::from_usize_lossy(a_n); a_n];
        let mut rngs = Vec::with_capacity(game.num_agents());
        let mut states = Vec::with_capacity(game.num_agents());
        for k in 0..game.num_agents() {
            let mut r = rng::stream(cfg.seed, Domain::Learning, rng::run_agent_index(run, k));
            let prev = sample_action(&uniform, &mut r)?;
            states.push(RegretState::new(a_n, prev));
            rngs.push(r);
        }
        Ok(Self {
            game,
            weights,
            step_size: cfg.step_size,
            exploration: cfg.exploration,
            fusion: cfg.fusion,
            inertia,
            states,
            rngs,
            behavior: None,
            rounds: 0,
        })
    }

    pub fn states(&self) -> &[RegretState<T>] {
        &self.states
    }

    pub fn behavior(&self) -> Option<&GlobalBehavior<T>> {
        self.behavior.as_ref()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn distance(&self) -> T {
        distance_to_ce(self.states.iter().map(|s| &s.fused))
    }

    /// decide -> update individual regrets -> fuse.
    pub fn step(&mut self) -> Result<StepRecord<T>> {
        let k_n = self.game.num_agents();
        let mut actions = Vec::with_capacity(k_n);
        let mut strategies = Vec::with_capacity(k_n);
        for k in 0..k_n {
            let s = &self.states[k];
            let p = strategy_from_regret(&s.fused, s.prev_action, self.inertia[k], self.exploration)?;
            actions.push(sample_action(&p, &mut self.rngs[k])?);
            strategies.push(p);
        }
        let profile = self.game.encode(&actions)?;
        let utilities = self.game.utility_at(profile).to_vec();

        let updated: Vec<Matrix<T>> = (0..k_n)
            .map(|k| {
                let f = instantaneous_regret(actions[k], utilities[k], &strategies[k]);
                regret_update(&self.states[k].fused, &f, self.step_size)
            })
            .collect();
        let fused: Vec<Matrix<T>> = match self.fusion {
            FusionInput::Individual => (0..k_n).map(|k| fuse_regrets(&updated, &self.weights, k)).collect(),
            FusionInput::PreviousFused => {
                let previous: Vec<Matrix<T>> = self.states.iter().map(|s| s.fused.clone()).collect();
                (0..k_n).map(|k| fuse_regrets(&previous, &self.weights, k)).collect()
            }
        };
        for (k, (ind, fus)) in updated.into_iter().zip(fused).enumerate() {
            let s = &mut self.states[k];
            s.individual = ind;
            s.fused = fus;
            s.prev_action = actions[k];
        }

        match self.behavior.as_mut() {
            None => self.behavior = Some(GlobalBehavior::new(self.game.num_profiles(), profile, self.step_size)?),
            Some(z) => {
                z.record(profile)?;
                if self.rounds % 1024 == 0 {
                    z.renormalize();
                }
            }
        }
        self.rounds += 1;
        Ok(StepRecord {
            profile,
            strategies,
            utilities,
            distance: self.distance(),
        })
    }
}

/// Aggregated output of [`run_simulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T> {
    /// Mean over runs of `d_n`, `n = 1..=horizon`.
    pub mean_distance: Vec<T>,
    /// Sample standard deviation over runs (zero for a single run).
    pub std_distance: Vec<T>,
    /// Global behavior at the horizon, one per run.
    pub final_behavior: Vec<GlobalBehavior<T>>,
}

/// `runs` independent runs of `horizon` rounds. The isolated variant replaces
/// `weights` by the identity. Runs execute on the current rayon pool.
pub fn run_simulation<T: Real>(
    game: &NormalFormGame<T>,
    weights: &WeightMatrix<T>,
    cfg: &LearnerConfig<T>,
    horizon: usize,
    runs: usize,
    variant: Variant,
) -> Result<SimulationTrace<T>> {
    if horizon == 0 || runs == 0 {
        return Err(Error::input("horizon and number of runs must be positive"));
    }
    cfg.resolve_inertia(game)?;
    let w = match variant {
        Variant::Diffusion => weights.clone(),
        Variant::Isolated => WeightMatrix::identity(game.num_agents()),
    };
    let per_run: Vec<(Vec<T>, GlobalBehavior<T>)> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut sim = Simulation::new(game, w.clone(), cfg, run)?;
            let mut d = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                d.push(sim.step()?.distance);
            }
            let z = sim.behavior.take().expect("horizon >= 1");
            Ok((d, z))
        })
        .collect::<Result<_>>()?;

    let m = T::from_usize_lossy(runs);
    let mut mean = vec![T::zero(); horizon];
    let mut std = vec![T::zero(); horizon];
    for n in 0..horizon {
        let mu = per_run.iter().map(|(d, _)| d[n]).sum::<T>() / m;
        mean[n] = mu;
        if runs > 1 {
            let ss: T = per_run.iter().map(|(d, _)| (d[n] - mu) * (d[n] - mu)).sum();
            std[n] = (ss / (m - T::one())).sqrt();
        }
    }
    Ok(SimulationTrace {
        mean_distance: mean,
        std_distance: std,
        final_behavior: per_run.into_iter().map(|(_, z)| z).collect(),
    })
}
