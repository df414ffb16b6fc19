//! Normal-form games over a common action set, the agents' connectivity
//! graph, diffusion weight matrices and the correlated-equilibrium check.
//!
//! Actions and agents are 0-based in the library API. Game files on disk
//! use 1-based action labels.

mod behavior;
mod equilibrium;
mod graph;
mod weights;

pub use behavior::GlobalBehavior;
pub use equilibrium::{ce_epsilon_violation, pure_nash_profiles};
pub use graph::{ConnectivityGraph, NetworkFile};
pub use weights::{WeightCondition, WeightMatrix};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute tolerance for floating comparisons in this module.
pub const TOL: f64 = 1e-9;

/// Dense payoff tensor. Profile `a = (a^0, .., a^{K-1})` is stored at the
/// mixed-radix index `sum_k a^k * A^k`; each slot holds `K` utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame<T> {
    num_agents: usize,
    num_actions: usize,
    payoffs: Vec<T>,
    symmetric: bool,
}

impl<T: Real> NormalFormGame<T> {
    /// `payoffs` is laid out profile-major: `payoffs[idx * K + k]`.
    pub fn new(num_agents: usize, num_actions: usize, payoffs: Vec<T>) -> Result<Self> {
        if num_agents == 0 || num_actions == 0 {
            return Err(Error::input("a game needs at least one agent and one action"));
        }
        let profiles = num_actions
            .checked_pow(num_agents as u32)
            .ok_or_else(|| Error::input("action space too large"))?;
        if payoffs.len() != profiles * num_agents {
            return Err(Error::input(format!(
                "expected {} payoff entries ({} profiles x {} agents), got {}",
                profiles * num_agents,
                profiles,
                num_agents,
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|u| !u.is_finite()) {
            return Err(Error::input("payoffs must be finite"));
        }
        Ok(Self {
            num_agents,
            num_actions,
            payoffs,
            symmetric: false,
        })
    }

    /// Builds a game by evaluating `f(profile)` for every joint profile.
    pub fn from_fn(
        num_agents: usize,
        num_actions: usize,
        mut f: impl FnMut(&[usize]) -> Vec<T>,
    ) -> Result<Self> {
        if num_agents == 0 || num_actions == 0 {
            return Err(Error::input("a game needs at least one agent and one action"));
        }
        let profiles = num_actions.pow(num_agents as u32);
        let mut payoffs = Vec::with_capacity(profiles * num_agents);
        let mut profile = vec![0; num_agents];
        for idx in 0..profiles {
            decode_into(idx, num_actions, &mut profile);
            let u = f(&profile);
            if u.len() != num_agents {
                return Err(Error::input("utility vector length must equal the number of agents"));
            }
            payoffs.extend(u);
        }
        Self::new(num_agents, num_actions, payoffs)
    }

    /// Marks the game symmetric after checking the symmetry condition for
    /// every pair of agents.
    pub fn into_symmetric(mut self) -> Result<Self> {
        for k in 0..self.num_agents {
            for l in k + 1..self.num_agents {
                if !self.is_symmetric_pair(k, l) {
                    return Err(Error::input(format!(
                        "game flagged symmetric but agents {} and {} are not interchangeable",
                        k + 1,
                        l + 1
                    )));
                }
            }
        }
        self.symmetric = true;
        Ok(self)
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn num_profiles(&self) -> usize {
        self.payoffs.len() / self.num_agents
    }

    #[inline]
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn encode(&self, profile: &[usize]) -> Result<usize> {
        if profile.len() != self.num_agents {
            return Err(Error::input(format!(
                "profile has {} entries, game has {} agents",
                profile.len(),
                self.num_agents
            )));
        }
        let mut idx = 0;
        let mut radix = 1;
        for (k, &a) in profile.iter().enumerate() {
            if a >= self.num_actions {
                return Err(Error::input(format!(
                    "action {} of agent {} out of range 0..{}",
                    a, k, self.num_actions
                )));
            }
            idx += a * radix;
            radix *= self.num_actions;
        }
        Ok(idx)
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        let mut profile = vec![0; self.num_agents];
        decode_into(idx, self.num_actions, &mut profile);
        profile
    }

    /// Action of `agent` inside the encoded profile `idx`.
    #[inline]
    pub fn action_at(&self, idx: usize, agent: usize) -> usize {
        (idx / self.num_actions.pow(agent as u32)) % self.num_actions
    }

    /// Index of the profile obtained by letting `agent` switch to `action`.
    #[inline]
    pub fn deviate(&self, idx: usize, agent: usize, action: usize) -> usize {
        let radix = self.num_actions.pow(agent as u32);
        let current = (idx / radix) % self.num_actions;
        idx + action * radix - current * radix
    }

    /// Utility vector (one entry per agent) realized at `profile`.
    pub fn utility(&self, profile: &[usize]) -> Result<&[T]> {
        let idx = self.encode(profile)?;
        Ok(self.utility_at(idx))
    }

    #[inline]
    pub fn utility_at(&self, idx: usize) -> &[T] {
        &self.payoffs[idx * self.num_agents..(idx + 1) * self.num_agents]
    }

    #[inline]
    pub fn payoff(&self, idx: usize, agent: usize) -> T {
        self.payoffs[idx * self.num_agents + agent]
    }

    /// `(min, max)` of agent `k`'s utility over all profiles.
    pub fn utility_range(&self, agent: usize) -> (T, T) {
        (0..self.num_profiles()).fold((T::infinity(), T::neg_infinity()), |(lo, hi), idx| {
            let u = self.payoff(idx, agent);
            (lo.min(u), hi.max(u))
        })
    }

    /// Agents `k` and `l` are interchangeable: swapping their actions in any
    /// profile swaps their payoffs.
    pub fn is_symmetric_pair(&self, k: usize, l: usize) -> bool {
        let tol = T::lit(TOL);
        (0..self.num_profiles()).all(|idx| {
            let ak = self.action_at(idx, k);
            let al = self.action_at(idx, l);
            let swapped = self.deviate(self.deviate(idx, k, al), l, ak);
            (self.payoff(idx, k) - self.payoff(swapped, l)).abs() <= tol
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_agents).all(|k| (k + 1..self.num_agents).all(|l| self.is_symmetric_pair(k, l)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: GameFile = serde_json::from_str(&text)?;
        file.into_game()
    }

    pub fn to_file(&self) -> GameFile {
        let payoffs = (0..self.num_profiles())
            .map(|idx| {
                let profile = self.decode(idx).into_iter().map(|a| a + 1).collect();
                let utils = self.utility_at(idx).iter().map(|u| u.to_f64_lossy()).collect();
                (profile, utils)
            })
            .collect();
        GameFile {
            num_agents: self.num_agents,
            num_actions: self.num_actions,
            payoffs,
            symmetric: self.symmetric,
        }
    }
}

fn decode_into(mut idx: usize, num_actions: usize, out: &mut [usize]) {
    for slot in out.iter_mut() {
        *slot = idx % num_actions;
        idx /= num_actions;
    }
}

/// On-disk game description. Profiles use 1-based action labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub num_agents: usize,
    pub num_actions: usize,
    pub payoffs: Vec<(Vec<usize>, Vec<f64>)>,
    #[serde(default)]
    pub symmetric: bool,
}

impl GameFile {
    pub fn into_game<T: Real>(self) -> Result<NormalFormGame<T>> {
        let (k, a) = (self.num_agents, self.num_actions);
        if k == 0 || a == 0 {
            return Err(Error::input("a game needs at least one agent and one action"));
        }
        let profiles = a
            .checked_pow(k as u32)
            .ok_or_else(|| Error::input("action space too large"))?;
        let mut payoffs = vec![T::nan(); profiles * k];
        let mut seen = vec![false; profiles];
        for (n, (profile, utils)) in self.payoffs.iter().enumerate() {
            if profile.len() != k || utils.len() != k {
                return Err(Error::input(format!("payoff entry {} has the wrong arity", n + 1)));
            }
            if profile.iter().any(|&x| x == 0 || x > a) {
                return Err(Error::input(format!(
                    "payoff entry {}: actions are labelled 1..{}",
                    n + 1,
                    a
                )));
            }
            let idx = profile
                .iter()
                .rev()
                .fold(0, |acc, &x| acc * a + (x - 1));
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::input(format!("duplicate profile {:?}", profile)));
            }
            for (slot, &u) in payoffs[idx * k..(idx + 1) * k].iter_mut().zip(utils) {
                *slot = T::lit(u);
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            let mut profile = vec![0; k];
            decode_into(missing, a, &mut profile);
            let labels: Vec<usize> = profile.iter().map(|x| x + 1).collect();
            return Err(Error::input(format!("payoff missing for profile {:?}", labels)));
        }
        let game = NormalFormGame::new(k, a, payoffs)?;
        if self.symmetric {
            game.into_symmetric()
        } else {
            Ok(game)
        }
    }
}

/// The three-agent, two-action game with agents 1 and 2 interchangeable
/// used throughout the examples and tests.
pub fn table_one_game<T: Real>() -> NormalFormGame<T> {
    // (a1, a2, a3) -> (u1, u2, u3), 1-based labels.
    const TABLE: [([usize; 3], [f64; 3]); 8] = [
        ([1, 1, 1], [2.0, 2.0, 5.0]),
        ([1, 2, 1], [3.0, 6.0, 4.0]),
        ([2, 1, 1], [6.0, 3.0, 4.0]),
        ([2, 2, 1], [4.0, 4.0, 6.0]),
        ([1, 1, 2], [1.0, 1.0, 3.0]),
        ([1, 2, 2], [1.0, 4.0, 5.0]),
        ([2, 1, 2], [4.0, 1.0, 0.0]),
        ([2, 2, 2], [6.0, 6.0, 4.0]),
    ];
    GameFile {
        num_agents: 3,
        num_actions: 2,
        payoffs: TABLE.iter().map(|(p, u)| (p.to_vec(), u.to_vec())).collect(),
        symmetric: false,
    }
    .into_game()
    .expect("static table is complete")
}
