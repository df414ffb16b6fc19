//! Revealed-preference tests: Afriat's theorem for a single utility
//! maximizer and its multi-agent analogue for Nash play of a game with a
//! concave potential.
//!
//! Both tests reduce to feasibility of linear inequalities
//!
//! ```text
//! v_s - v_t - sum_i lambda_t^i * (p_t'(x_s^i - x_t^i) + phi) <= 0   for t != s,
//! lambda_t^i >= 1,
//! ```
//!
//! with `phi = 0` for clean data. Strict positivity of the multipliers is
//! encoded as `lambda >= 1`, which loses nothing because the system is
//! invariant under joint positive scaling of `(v, lambda)`.

mod dataset;
mod garp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, Feasibility, LinearSystem, FEAS_TOL};
use crate::scalar::Real;

pub use dataset::Dataset;
pub use garp::{garp_check, GarpOutcome};

/// Ties between active hyperplanes closer than this are reported as kinks.
pub const KINK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<C> {
    Pass(C),
    Fail,
}

impl<C> Verdict<C> {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass(_))
    }

    pub fn certificate(&self) -> Option<&C> {
        match self {
            Verdict::Pass(c) => Some(c),
            Verdict::Fail => None,
        }
    }
}

/// Utility levels `u_t` and multipliers `lambda_t >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfriatCertificate<T> {
    pub utility: Vec<T>,
    pub lambda: Vec<T>,
}

/// Potential levels `v_t` and multipliers `lambda[t][i] >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCertificate<T> {
    pub potential: Vec<T>,
    pub lambda: Vec<Vec<T>>,
}

impl<T: Real> From<AfriatCertificate<T>> for PotentialCertificate<T> {
    fn from(c: AfriatCertificate<T>) -> Self {
        PotentialCertificate {
            potential: c.utility,
            lambda: c.lambda.into_iter().map(|l| vec![l]).collect(),
        }
    }
}

impl<T: Real> PotentialCertificate<T> {
    /// Largest violation of the inequality system (with slack `phi`) on `data`;
    /// zero when every constraint holds.
    pub fn max_violation(&self, data: &Dataset<T>, phi: T) -> Result<T> {
        self.check_shape(data)?;
        let (tn, n) = (data.num_obs(), data.num_agents());
        let mut worst = T::zero();
        for t in 0..tn {
            for i in 0..n {
                worst = worst.max(T::one() - self.lambda[t][i]);
            }
            for s in 0..tn {
                if s == t {
                    continue;
                }
                let mut lhs = self.potential[s] - self.potential[t];
                for i in 0..n {
                    lhs -= self.lambda[t][i] * (data.cost(t, s, i) - data.budget(t, i) + phi);
                }
                worst = worst.max(lhs);
            }
        }
        Ok(worst)
    }

    /// True when the certificate satisfies its system within the LP tolerance.
    pub fn is_valid_for(&self, data: &Dataset<T>) -> Result<bool> {
        Ok(self.max_violation(data, T::zero())? <= T::lit(FEAS_TOL))
    }

    fn check_shape(&self, data: &Dataset<T>) -> Result<()> {
        let ok = self.potential.len() == data.num_obs()
            && self.lambda.len() == data.num_obs()
            && self.lambda.iter().all(|l| l.len() == data.num_agents());
        if ok {
            Ok(())
        } else {
            Err(Error::input("certificate does not match the dataset's dimensions"))
        }
    }
}

impl<T: Real> AfriatCertificate<T> {
    pub fn is_valid_for(&self, data: &Dataset<T>) -> Result<bool> {
        PotentialCertificate::from(self.clone()).is_valid_for(data)
    }
}

/// Inequality system over `[v_0..v_{T-1}, lambda_{0,0}..lambda_{T-1,n-1}]`.
pub fn rationality_system<T: Real>(data: &Dataset<T>, phi: T) -> LinearSystem<T> {
    build_system(data, phi, None)
}

/// `slack(t, s, i) = p_t'(x_s^i - x_t^i) + phi`.
#[inline]
fn slack<T: Real>(data: &Dataset<T>, phi: T, t: usize, s: usize, i: usize) -> T {
    data.cost(t, s, i) - data.budget(t, i) + phi
}

/// With `offset = Some(v0)` the potential columns hold `v - v0`.
fn build_system<T: Real>(data: &Dataset<T>, phi: T, offset: Option<&[T]>) -> LinearSystem<T> {
    let (tn, n) = (data.num_obs(), data.num_agents());
    let cols = tn + tn * n;
    let mut sys = LinearSystem::new(cols);
    for k in tn..cols {
        sys.set_lower(k, Some(T::one()));
    }
    let mut row = vec![T::zero(); cols];
    for t in 0..tn {
        for s in 0..tn {
            if s == t {
                continue;
            }
            row.iter_mut().for_each(|c| *c = T::zero());
            row[s] = T::one();
            row[t] = -T::one();
            for i in 0..n {
                row[tn + t * n + i] = -slack(data, phi, t, s, i);
            }
            let rhs = offset.map_or(T::zero(), |v0| v0[t] - v0[s]);
            sys.push_row(&row, rhs)
                .expect("row length matches the system by construction");
        }
    }
    sys
}

/// Shortest-path potentials for the constraints with every multiplier at
/// one: `v_s <= v_t + sum_i slack(t, s, i)`. Returns the potentials after
/// at most `T` Bellman-Ford passes and whether they converged (no negative
/// cycle, so `(v, 1)` is already a solution).
fn unit_potentials<T: Real>(data: &Dataset<T>, phi: T) -> (Vec<T>, bool) {
    let (tn, n) = (data.num_obs(), data.num_agents());
    let cost: Vec<T> = (0..tn * tn)
        .map(|k| {
            let (t, s) = (k / tn, k % tn);
            (0..n).map(|i| slack(data, phi, t, s, i)).sum()
        })
        .collect();
    let mut v = vec![T::zero(); tn];
    for _ in 0..=tn {
        let mut changed = false;
        for t in 0..tn {
            for s in 0..tn {
                let candidate = v[t] + cost[t * tn + s];
                if s != t && candidate < v[s] {
                    v[s] = candidate;
                    changed = true;
                }
            }
        }
        if !changed {
            return (v, true);
        }
    }
    (v, false)
}

/// Whether the system with slack `phi` is feasible, without a certificate
/// (see [`lp::is_feasible`] for why this can say yes where
/// [`solve_rationality`] cannot produce a point).
pub fn is_rational_at<T: Real>(data: &Dataset<T>, phi: T) -> Result<bool> {
    let (v0, settled) = unit_potentials(data, phi);
    if settled {
        return Ok(true);
    }
    Ok(lp::is_feasible(&build_system(data, phi, Some(&v0)))?)
}

/// Feasibility of the system with slack `phi`, returning the certificate.
pub fn solve_rationality<T: Real>(data: &Dataset<T>, phi: T) -> Result<Verdict<PotentialCertificate<T>>> {
    let (tn, n) = (data.num_obs(), data.num_agents());
    let split = |potential: Vec<T>, lambda: &[T]| PotentialCertificate {
        potential,
        lambda: lambda.chunks(n).map(<[T]>::to_vec).collect(),
    };
    // The potentials for unit multipliers both settle easy instances without
    // the simplex and give it a warm start: rows they satisfy need no
    // artificial variable.
    let (v0, settled) = unit_potentials(data, phi);
    if settled {
        let cert = split(v0.clone(), &vec![T::one(); tn * n]);
        if cert.max_violation(data, phi)? <= T::lit(FEAS_TOL) {
            return Ok(Verdict::Pass(cert));
        }
    }
    match lp::feasible(&build_system(data, phi, Some(&v0)))? {
        Feasibility::Infeasible => Ok(Verdict::Fail),
        Feasibility::Feasible(z) => {
            let potential = z[..tn].iter().zip(&v0).map(|(&dv, &v)| v + dv).collect();
            let cert = split(potential, &z[tn..]);
            // Undoing the shift can cost a little accuracy; the caller is
            // promised a certificate that re-validates.
            let violation = cert.max_violation(data, phi)?;
            if violation > T::lit(FEAS_TOL) {
                return Err(lp::LpError::Numerical {
                    violation: violation.to_f64_lossy(),
                }
                .into());
            }
            Ok(Verdict::Pass(cert))
        }
    }
}

/// Is the single-agent dataset consistent with maximizing a non-satiated,
/// concave, monotone utility under the observed budgets?
pub fn afriat_test<T: Real>(data: &Dataset<T>) -> Result<Verdict<AfriatCertificate<T>>> {
    if data.num_agents() != 1 {
        return Err(Error::input("the Afriat test takes a single-agent dataset"));
    }
    Ok(match solve_rationality(data, T::zero())? {
        Verdict::Fail => Verdict::Fail,
        Verdict::Pass(c) => Verdict::Pass(AfriatCertificate {
            utility: c.potential,
            lambda: c.lambda.into_iter().map(|l| l[0]).collect(),
        }),
    })
}

/// Is the multi-agent dataset consistent with Nash play of a game admitting
/// a concave potential?
pub fn nash_rationality_test<T: Real>(data: &Dataset<T>) -> Result<Verdict<PotentialCertificate<T>>> {
    solve_rationality(data, T::zero())
}

/// Per-agent GARP on each agent's slice `{(p_t, x_t^i)}` (the data-checkable
/// half of PGARP; the other half, that the actions come from a concave
/// potential game, cannot be checked from the data).
///
/// Per-agent GARP is necessary for Nash rationality when the other agents'
/// actions do not change across observations, since the system then reduces
/// to agent `i`'s Afriat inequalities. It is not necessary in general: an
/// agent's induced preference moves with the others' actions, and datasets
/// where every agent violates GARP can still pass
/// [`nash_rationality_test`].
pub fn pgarp_condition_a<T: Real>(data: &Dataset<T>) -> Vec<GarpOutcome> {
    (0..data.num_agents()).map(|i| garp::garp_for_agent(data, i)).collect()
}

/// `min_t { u_t + lambda_t * p_t'(x - x_t) }`.
pub fn reconstruct_utility<T: Real>(cert: &AfriatCertificate<T>, data: &Dataset<T>, x: &[T]) -> Result<T> {
    if data.num_agents() != 1 {
        return Err(Error::input("reconstruct_utility takes a single-agent dataset"));
    }
    reconstruct_potential(&cert.clone().into(), data, &[x])
}

/// `min_t { v_t + sum_i lambda_t^i * p_t'(x^i - x_t^i) }`.
pub fn reconstruct_potential<T: Real>(
    cert: &PotentialCertificate<T>,
    data: &Dataset<T>,
    point: &[&[T]],
) -> Result<T> {
    Ok(hyperplanes(cert, data, point)?
        .into_iter()
        .fold(T::infinity(), |m, v| m.min(v)))
}

fn hyperplanes<T: Real>(cert: &PotentialCertificate<T>, data: &Dataset<T>, point: &[&[T]]) -> Result<Vec<T>> {
    cert.check_shape(data)?;
    if point.len() != data.num_agents() || point.iter().any(|x| x.len() != data.probe_dim()) {
        return Err(Error::input("evaluation point must hold one m-vector per agent"));
    }
    Ok((0..data.num_obs())
        .map(|t| {
            let p = data.probe(t);
            let mut value = cert.potential[t];
            for (i, x) in point.iter().enumerate() {
                let diff = crate::scalar::dot(p, x) - data.budget(t, i);
                value += cert.lambda[t][i] * diff;
            }
            value
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mrs<T> {
    pub value: T,
    /// Observation whose hyperplane is active (smallest index on ties).
    pub active: usize,
    /// Another hyperplane is active within [`KINK_TOL`]: the potential is
    /// not differentiable here and `value` is one of several supergradients.
    pub non_unique: bool,
}

/// Marginal rate of substitution `(dV/dx^i(j)) / (dV/dx^i(k))` of the
/// reconstructed potential at `point`.
pub fn marginal_rate_of_substitution<T: Real>(
    cert: &PotentialCertificate<T>,
    data: &Dataset<T>,
    point: &[&[T]],
    agent: usize,
    dims: (usize, usize),
) -> Result<Mrs<T>> {
    let (j, k) = dims;
    if agent >= data.num_agents() || j >= data.probe_dim() || k >= data.probe_dim() {
        return Err(Error::input("agent or dimension index out of range"));
    }
    let values = hyperplanes(cert, data, point)?;
    let mut active = 0;
    for (t, &v) in values.iter().enumerate() {
        if v < values[active] {
            active = t;
        }
    }
    let min = values[active];
    let non_unique = values
        .iter()
        .enumerate()
        .any(|(t, &v)| t != active && v - min <= T::lit(KINK_TOL));
    let lambda = cert.lambda[active][agent];
    let p = data.probe(active);
    Ok(Mrs {
        value: (lambda * p[j]) / (lambda * p[k]),
        active,
        non_unique,
    })
}

#[cfg(test)]
mod tests;
