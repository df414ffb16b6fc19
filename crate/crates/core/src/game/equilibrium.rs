use crate::error::{Error, Result};
use crate::scalar::Real;

use super::NormalFormGame;

/// Largest conditional gain any agent can obtain by replacing a recommended
/// action `i` with `j` under the joint distribution `pi`:
///
/// `max_{k, i != j} sum_{a: a^k = i} pi(a) [u^k(j, a^{-k}) - u^k(a)]`.
///
/// `pi` lies in the correlated eps-equilibrium set iff the result is `<= eps`.
/// Games with a single action have no deviations and return zero.
pub fn ce_epsilon_violation<T: Real>(game: &NormalFormGame<T>, pi: &[T]) -> Result<T> {
    if pi.len() != game.num_profiles() {
        return Err(Error::input(format!(
            "distribution has {} entries, game has {} profiles",
            pi.len(),
            game.num_profiles()
        )));
    }
    let a_n = game.num_actions();
    let mut worst = T::neg_infinity();
    let mut gains = vec![T::zero(); a_n * a_n];
    for k in 0..game.num_agents() {
        gains.iter_mut().for_each(|g| *g = T::zero());
        for (idx, &p) in pi.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            let i = game.action_at(idx, k);
            let base = game.payoff(idx, k);
            for j in 0..a_n {
                if j != i {
                    gains[i * a_n + j] += p * (game.payoff(game.deviate(idx, k, j), k) - base);
                }
            }
        }
        for i in 0..a_n {
            for j in 0..a_n {
                if i != j {
                    worst = worst.max(gains[i * a_n + j]);
                }
            }
        }
    }
    Ok(if worst.is_finite() { worst } else { T::zero() })
}

/// Pure-strategy Nash equilibria, by checking every unilateral deviation.
pub fn pure_nash_profiles<T: Real>(game: &NormalFormGame<T>) -> Vec<usize> {
    (0..game.num_profiles())
        .filter(|&idx| {
            (0..game.num_agents()).all(|k| {
                let u = game.payoff(idx, k);
                (0..game.num_actions()).all(|j| game.payoff(game.deviate(idx, k, j), k) <= u)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::game::table_one_game;

    fn point_mass(n: usize, at: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        v
    }

    /// Independent recomputation straight from the definition.
    fn brute_force(game: &NormalFormGame<f64>, pi: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..game.num_agents() {
            for i in 0..game.num_actions() {
                for j in 0..game.num_actions() {
                    if i == j {
                        continue;
                    }
                    let mut s = 0.0;
                    for idx in 0..game.num_profiles() {
                        let mut profile = game.decode(idx);
                        if profile[k] != i {
                            continue;
                        }
                        let here = game.utility(&profile).unwrap()[k];
                        profile[k] = j;
                        s += pi[idx] * (game.utility(&profile).unwrap()[k] - here);
                    }
                    worst = worst.max(s);
                }
            }
        }
        if worst.is_finite() { worst } else { 0.0 }
    }

    #[test]
    fn pure_nash_point_mass_is_a_correlated_equilibrium() {
        let g = table_one_game::<f64>();
        let idx = g.encode(&[1, 1, 0]).unwrap();
        let v = ce_epsilon_violation(&g, &point_mass(8, idx)).unwrap();
        assert!(v <= 0.0);
        assert!(pure_nash_profiles(&g).contains(&idx));
    }

    #[test]
    fn agent_three_deviates_from_all_twos() {
        let g = table_one_game::<f64>();
        let idx = g.encode(&[1, 1, 1]).unwrap();
        let v = ce_epsilon_violation(&g, &point_mass(8, idx)).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(v, brute_force(&g, &point_mass(8, idx)));
    }

    #[test]
    fn single_agent_uniform() {
        let u = [1.0, 4.0, 2.5];
        let g = NormalFormGame::from_fn(1, 3, |p| vec![u[p[0]]]).unwrap();
        let pi = vec![1.0 / 3.0; 3];
        let v = ce_epsilon_violation(&g, &pi).unwrap();
        // best pairwise swap: recommended 1 -> play 2, gain (4 - 1)/3
        assert!((v - brute_force(&g, &pi)).abs() < 1e-15);
        assert!((v - 1.0).abs() < 1e-15);
        assert!(v >= 0.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(ce_epsilon_violation(&table_one_game::<f64>(), &[1.0]).is_err());
    }

    fn random_game() -> impl Strategy<Value = NormalFormGame<f64>> {
        (1usize..=3, 1usize..=3).prop_flat_map(|(k, a)| {
            let n = a.pow(k as u32) * k;
            proptest::collection::vec(-5i32..=5, n).prop_map(move |pay| {
                NormalFormGame::new(k, a, pay.into_iter().map(f64::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn pure_equilibria_have_no_violation(g in random_game()) {
            for idx in pure_nash_profiles(&g) {
                let v = ce_epsilon_violation(&g, &point_mass(g.num_profiles(), idx)).unwrap();
                prop_assert!(v <= 0.0);
            }
        }

        #[test]
        fn matches_definition(g in random_game(), w in proptest::collection::vec(0.0f64..1.0, 27)) {
            let w = &w[..g.num_profiles()];
            let total: f64 = w.iter().sum::<f64>() + 1e-12;
            let pi: Vec<f64> = w.iter().map(|x| (x + 1e-12 / w.len() as f64) / total).collect();
            let fast = ce_epsilon_violation(&g, &pi).unwrap();
            prop_assert!((fast - brute_force(&g, &pi)).abs() < 1e-9);
        }
    }
}
