use crate::error::{Error, Result};
use crate::scalar::Real;

use super::Dataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GarpOutcome {
    Pass,
    /// Observation indices `[t, .., s, t]`: each is revealed preferred to
    /// the next, and the final step is strict.
    Fail { cycle: Vec<usize> },
}

impl GarpOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, GarpOutcome::Pass)
    }
}

/// Generalized axiom of revealed preference for a single-agent dataset.
///
/// `x_t R0 x_s` iff `p_t'x_t >= p_t'x_s`; the revealed preference `R` is its
/// transitive closure (Warshall, `O(T^3)`). The data fail iff some
/// `x_t R x_s` while `p_s'x_s > p_s'x_t`.
pub fn garp_check<T: Real>(data: &Dataset<T>) -> Result<GarpOutcome> {
    if data.num_agents() != 1 {
        return Err(Error::input("GARP is checked one agent at a time"));
    }
    Ok(garp_for_agent(data, 0))
}

pub(crate) fn garp_for_agent<T: Real>(data: &Dataset<T>, agent: usize) -> GarpOutcome {
    let n = data.num_obs();
    let budget: Vec<T> = (0..n).map(|t| data.budget(t, agent)).collect();
    // cost[t][s] = p_t' x_s
    let cost: Vec<Vec<T>> = (0..n)
        .map(|t| (0..n).map(|s| data.cost(t, s, agent)).collect())
        .collect();

    let mut reach = vec![vec![false; n]; n];
    // via[t][s] = Some(k): the path t -> s was first found through k.
    let mut via: Vec<Vec<Option<usize>>> = vec![vec![None; n]; n];
    for t in 0..n {
        for s in 0..n {
            reach[t][s] = budget[t] >= cost[t][s];
        }
    }
    for k in 0..n {
        for t in 0..n {
            if !reach[t][k] {
                continue;
            }
            for s in 0..n {
                if reach[k][s] && !reach[t][s] {
                    reach[t][s] = true;
                    via[t][s] = Some(k);
                }
            }
        }
    }

    for t in 0..n {
        for s in 0..n {
            if reach[t][s] && budget[s] > cost[s][t] {
                let mut cycle = vec![t];
                expand(&via, t, s, &mut cycle);
                cycle.push(t);
                return GarpOutcome::Fail { cycle };
            }
        }
    }
    GarpOutcome::Pass
}

/// Appends the vertices after `from` on the recorded path to `to`.
fn expand(via: &[Vec<Option<usize>>], from: usize, to: usize, out: &mut Vec<usize>) {
    match via[from][to] {
        Some(k) => {
            expand(via, from, k, out);
            expand(via, k, to, out);
        }
        None => {
            if from != to {
                out.push(to);
            }
        }
    }
}
