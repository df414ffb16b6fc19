use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Probes `p_t` (strictly positive, length `m`) and the actions `x_t^i`
/// (length `m`) of `n` agents over `T >= 1` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    num_obs: usize,
    probe_dim: usize,
    num_agents: usize,
    probes: Vec<T>,
    actions: Vec<T>,
}

impl<T: Real> Dataset<T> {
    /// `probes[t]` is `p_t`; `actions[t][i]` is `x_t^i`.
    pub fn new(probes: Vec<Vec<T>>, actions: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let num_obs = probes.len();
        if num_obs == 0 {
            return Err(Error::input("T >= 1 required"));
        }
        if actions.len() != num_obs {
            return Err(Error::input(format!(
                "{} probes but {} action rows",
                num_obs,
                actions.len()
            )));
        }
        let probe_dim = probes[0].len();
        let num_agents = actions[0].len();
        let mut flat_actions = Vec::with_capacity(num_obs * num_agents * probe_dim);
        for (t, row) in actions.iter().enumerate() {
            if row.len() != num_agents {
                return Err(Error::input(format!("observation {} has {} agents, expected {}", t, row.len(), num_agents)));
            }
            for x in row {
                if x.len() != probe_dim {
                    return Err(Error::input(format!("observation {}: action length {} != probe dimension {}", t, x.len(), probe_dim)));
                }
                flat_actions.extend_from_slice(x);
            }
        }
        Self::from_flat(num_obs, probe_dim, num_agents, probes.concat(), flat_actions)
    }

    /// Flat storage: `probes[t * m + j]`, `actions[(t * n + i) * m + j]`.
    pub fn from_flat(
        num_obs: usize,
        probe_dim: usize,
        num_agents: usize,
        probes: Vec<T>,
        actions: Vec<T>,
    ) -> Result<Self> {
        if num_obs == 0 {
            return Err(Error::input("T >= 1 required"));
        }
        if probe_dim == 0 || num_agents == 0 {
            return Err(Error::input("probe dimension and number of agents must be positive"));
        }
        if probes.len() != num_obs * probe_dim || actions.len() != num_obs * num_agents * probe_dim {
            return Err(Error::input("dataset storage does not match its dimensions"));
        }
        if let Some(pos) = probes.iter().position(|&p| !(p > T::zero() && p.is_finite())) {
            return Err(Error::input(format!(
                "probe entries must be strictly positive (observation {}, component {})",
                pos / probe_dim,
                pos % probe_dim
            )));
        }
        if actions.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("actions must be finite"));
        }
        Ok(Self {
            num_obs,
            probe_dim,
            num_agents,
            probes,
            actions,
        })
    }

    #[inline]
    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    #[inline]
    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    #[inline]
    pub fn probe(&self, t: usize) -> &[T] {
        &self.probes[t * self.probe_dim..(t + 1) * self.probe_dim]
    }

    #[inline]
    pub fn action(&self, t: usize, agent: usize) -> &[T] {
        let start = (t * self.num_agents + agent) * self.probe_dim;
        &self.actions[start..start + self.probe_dim]
    }

    pub fn probes_flat(&self) -> &[T] {
        &self.probes
    }

    pub fn actions_flat(&self) -> &[T] {
        &self.actions
    }

    /// `p_t' x_s^i`: cost of agent `i`'s action at `s` under the probe at `t`.
    #[inline]
    pub fn cost(&self, t: usize, s: usize, agent: usize) -> T {
        dot(self.probe(t), self.action(s, agent))
    }

    /// Observed budget `I_t^i = p_t' x_t^i`.
    #[inline]
    pub fn budget(&self, t: usize, agent: usize) -> T {
        self.cost(t, t, agent)
    }

    /// Single-agent dataset `{(p_t, x_t^i)}`.
    pub fn agent(&self, agent: usize) -> Self {
        let mut actions = Vec::with_capacity(self.num_obs * self.probe_dim);
        for t in 0..self.num_obs {
            actions.extend_from_slice(self.action(t, agent));
        }
        Self {
            num_obs: self.num_obs,
            probe_dim: self.probe_dim,
            num_agents: 1,
            probes: self.probes.clone(),
            actions,
        }
    }

    /// Same probes, new actions (flat layout as in [`from_flat`](Self::from_flat)).
    pub fn with_actions(&self, actions: Vec<T>) -> Result<Self> {
        Self::from_flat(self.num_obs, self.probe_dim, self.num_agents, self.probes.clone(), actions)
    }

    /// Same actions, new probes.
    pub fn with_probes(&self, probes: Vec<T>) -> Result<Self> {
        Self::from_flat(self.num_obs, self.probe_dim, self.num_agents, probes, self.actions.clone())
    }

    pub fn scale_probes(&self, c: T) -> Result<Self> {
        self.with_probes(self.probes.iter().map(|&p| p * c).collect())
    }

    pub fn scale_actions(&self, c: T) -> Result<Self> {
        self.with_actions(self.actions.iter().map(|&x| x * c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        assert!(Dataset::<f64>::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0, 0.0]], vec![vec![vec![1.0, 1.0]]]).is_err());
        assert!(Dataset::new(vec![vec![1.0, -1.0]], vec![vec![vec![1.0, 1.0]]]).is_err());
        assert!(Dataset::new(vec![vec![1.0, 1.0]], vec![vec![vec![1.0]]]).is_err());
        assert!(Dataset::new(vec![vec![1.0, 1.0]], vec![vec![vec![f64::NAN, 1.0]]]).is_err());
    }

    #[test]
    fn accessors() {
        let d = Dataset::new(
            vec![vec![1.0, 2.0], vec![3.0, 1.0]],
            vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![vec![2.0, 1.0], vec![0.0, 4.0]]],
        )
        .unwrap();
        assert_eq!(d.num_obs(), 2);
        assert_eq!(d.num_agents(), 2);
        assert_eq!(d.action(1, 1), &[0.0, 4.0]);
        assert_eq!(d.cost(0, 1, 1), 8.0);
        assert_eq!(d.budget(1, 0), 7.0);
        let a = d.agent(1);
        assert_eq!(a.num_agents(), 1);
        assert_eq!(a.action(0, 0), &[0.5, 0.5]);
    }
}
