use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::malicious::generate_normal_agent_data;
use super::*;

fn clean(seed: u64, t: usize) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_potential_game_data(&MaliciousGameSpec::default(), t, &mut rng).unwrap()
}

#[test]
fn clean_data_have_zero_statistic() {
    assert_eq!(test_statistic_phi(&clean(1, 12)).unwrap(), 0.0);
}

#[test]
fn single_observation_has_zero_statistic() {
    let d = Dataset::new(vec![vec![1.0, 2.0]], vec![vec![vec![3.0, 1.0], vec![0.5, 0.5]]]).unwrap();
    assert_eq!(test_statistic_phi(&d).unwrap(), 0.0);
}

#[test]
fn statistic_is_feasible_and_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Alternating extreme prices expose a single random responder.
    let probes: Vec<f64> = (0..40).map(|k| if (k + k / 2) % 2 == 0 { 0.1 } else { 5.0 }).collect();
    let d = generate_normal_agent_data(&probes, 2, 1, (1.0, 50.0), &mut rng).unwrap();
    let phi = test_statistic_phi(&d).unwrap();
    assert!(phi > 0.0, "random responses should need slack");
    assert!(rational_at(&d, phi).unwrap());
    assert!(rational_at(&d, phi + 1.0).unwrap());
    assert!(!rational_at(&d, (phi - 2.0 * PHI_TOL).max(0.0)).unwrap());
    assert!(phi <= phi_upper_bound(&d));
}

/// One agent: the system at slack `phi` fails exactly when some cycle has
/// every edge `a_ts + phi <= 0`, `a_ts = p_t'(x_s - x_t)`, so `phi*` is
/// `max(0, -min over cycles of the largest edge)`.
fn minimax_cycle_phi(d: &Dataset<f64>) -> f64 {
    let tn = d.num_obs();
    let mut best = vec![vec![f64::INFINITY; tn]; tn];
    for t in 0..tn {
        for s in 0..tn {
            if s != t {
                best[t][s] = d.cost(t, s, 0) - d.budget(t, 0);
            }
        }
    }
    for k in 0..tn {
        for t in 0..tn {
            for s in 0..tn {
                let via = best[t][k].max(best[k][s]);
                if via < best[t][s] {
                    best[t][s] = via;
                }
            }
        }
    }
    let cycle = (0..tn).map(|t| best[t][t]).fold(f64::INFINITY, f64::min);
    (-cycle).max(0.0)
}

#[test]
fn single_agent_statistic_matches_minimax_cycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let probes: Vec<f64> = (0..16).map(|_| rand::Rng::random_range(&mut rng, 0.1..5.0)).collect();
        let d = generate_normal_agent_data(&probes, 2, 1, (1.0, 50.0), &mut rng).unwrap();
        let (phi, oracle) = (test_statistic_phi(&d).unwrap(), minimax_cycle_phi(&d));
        assert!((phi - oracle).abs() <= 1e-5, "bisection {} vs oracle {}", phi, oracle);
    }
}

#[test]
fn statistic_grows_with_noise_scale() {
    let base = clean(5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w: Vec<f64> = base.actions_flat().iter().map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
    let mut last = -1.0;
    for kappa in [0.0, 0.1, 0.2] {
        let y: Vec<f64> = base.actions_flat().iter().zip(&w).map(|(x, w)| x + kappa * w).collect();
        let phi = test_statistic_phi(&base.with_actions(y).unwrap()).unwrap();
        assert!(phi >= last - PHI_TOL, "kappa {}: {} < {}", kappa, phi, last);
        last = phi;
    }
}

#[test]
fn tail_edge_cases() {
    let probes = vec![1.0, 2.0, 3.0, 1.0];
    let zero = NoiseModel::Uniform { kappa: 0.0 };
    assert_eq!(estimate_m_tail(&probes, 2, 2, &zero, 0.0, 100, 1).unwrap(), 1.0);
    assert_eq!(estimate_m_tail(&probes, 2, 2, &zero, 1e-9, 100, 1).unwrap(), 0.0);
    let g = NoiseModel::Gaussian { sigma: 0.3 };
    assert_eq!(estimate_m_tail(&probes, 2, 2, &g, 0.0, 100, 1).unwrap(), 1.0);
}

#[test]
fn tail_is_non_increasing() {
    let probes: Vec<f64> = (0..20).map(|k| 1.0 + (k % 4) as f64).collect();
    let d = MDistribution::estimate(&probes, 2, 3, &NoiseModel::Uniform { kappa: 0.1 }, 2000, 4).unwrap();
    let mut last = 1.0;
    for k in 0..60 {
        let t = d.tail(k as f64 * 0.05);
        assert!(t <= last);
        last = t;
    }
}

#[test]
fn threshold_matches_tail_decision() {
    let probes: Vec<f64> = (0..20).map(|k| 1.0 + (k % 3) as f64).collect();
    let d = MDistribution::estimate(&probes, 2, 3, &NoiseModel::Gaussian { sigma: 0.2 }, 997, 2).unwrap();
    for gamma in [0.01, 0.05, 0.2, 0.5] {
        let c = d.acceptance_threshold(gamma);
        assert!(d.tail(c) > gamma);
        assert!(d.tail(c + 1e-12) <= gamma);
        for &m in d.samples() {
            assert_eq!(d.tail(m) > gamma, m <= c);
        }
    }
}

#[test]
fn gaussian_mean_is_self_consistent() {
    let probes: Vec<f64> = (0..12).map(|k| 1.0 + (k % 5) as f64 * 0.5).collect();
    let g = NoiseModel::Gaussian { sigma: 0.1 };
    let small = MDistribution::estimate(&probes, 2, 3, &g, 2000, 1).unwrap();
    let large = MDistribution::estimate(&probes, 2, 3, &g, 20000, 2).unwrap();
    let sd = (small.samples().iter().map(|m| (m - small.mean()).powi(2)).sum::<f64>() / 1999.0).sqrt();
    let se = sd / 2000f64.sqrt();
    assert!((small.mean() - large.mean()).abs() <= 3.0 * se, "{} vs {}", small.mean(), large.mean());
}

#[test]
fn m_samples_are_thread_independent() {
    let probes = vec![1.0, 2.0, 3.0, 4.0, 2.0, 2.0];
    let noise = NoiseModel::Uniform { kappa: 0.1 };
    let a = MDistribution::estimate(&probes, 2, 2, &noise, 300, 9).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| MDistribution::estimate(&probes, 2, 2, &noise, 300, 9).unwrap());
    assert_eq!(a, b);
}

#[test]
fn clean_data_are_accepted() {
    let noisy = NoisyDataset::from_observed(clean(2, 10), NoiseModel::Uniform { kappa: 0.1 }).unwrap();
    let out = statistical_test(&noisy, 0.05, 1000, 3).unwrap();
    assert_eq!(out.phi_star, 0.0);
    assert_eq!(out.tail_probability, 1.0);
    assert_eq!(out.decision, Decision::AcceptH0);
}

#[test]
fn decision_follows_tail_and_threshold_shortcut_agrees() {
    let noise = NoiseModel::Uniform { kappa: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..4 {
        let probes: Vec<f64> = (0..20).map(|_| rand::Rng::random_range(&mut rng, 1.0..5.0)).collect();
        let d = generate_normal_agent_data(&probes, 2, 3, (1.0, 50.0), &mut rng).unwrap();
        let noisy = NoisyDataset::observe(&d, noise, &mut rng).unwrap();
        let out = statistical_test(&noisy, 0.05, 1000, seed).unwrap();
        assert_eq!(out.decision == Decision::AcceptH0, out.tail_probability > 0.05);
        let dist = MDistribution::estimate(&probes, 2, 3, &noise, 1000, seed).unwrap();
        assert_eq!(accepts(noisy.observed(), &dist, 0.05).unwrap(), out.decision == Decision::AcceptH0);
    }
}

#[test]
fn gamma_outside_unit_interval_is_rejected() {
    let noisy = NoisyDataset::from_observed(clean(2, 3), NoiseModel::Uniform { kappa: 0.1 }).unwrap();
    assert!(statistical_test(&noisy, 0.0, 10, 1).is_err());
    assert!(statistical_test(&noisy, 1.0, 10, 1).is_err());
}
