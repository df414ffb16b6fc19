use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn single(obs: &[(Vec<f64>, Vec<f64>)]) -> Dataset<f64> {
    Dataset::new(
        obs.iter().map(|(p, _)| p.clone()).collect(),
        obs.iter().map(|(_, x)| vec![x.clone()]).collect(),
    )
    .unwrap()
}

fn violating() -> Dataset<f64> {
    single(&[(vec![1.0, 1.0], vec![0.0, 2.0]), (vec![2.0, 1.0], vec![2.0, 0.0])])
}

/// Demands of `sqrt(x1 x2)` under `p'x = 1`.
fn cobb_douglas(seed: u64, t: usize) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs: Vec<_> = (0..t)
        .map(|_| {
            let p = vec![rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)];
            let x = vec![0.5 / p[0], 0.5 / p[1]];
            (p, x)
        })
        .collect();
    single(&obs)
}

#[test]
fn single_observation_passes_trivially() {
    let d = single(&[(vec![2.0, 3.0], vec![1.0, 4.0])]);
    let cert = afriat_test(&d).unwrap().certificate().cloned().unwrap();
    assert_eq!(cert.utility, vec![0.0]);
    assert_eq!(cert.lambda, vec![1.0]);
    // u(x) = p'(x - x_1), affine
    let u = reconstruct_utility(&cert, &d, &[2.0, 2.0]).unwrap();
    assert!((u - (2.0 * 1.0 + 3.0 * -2.0)).abs() < 1e-12);
}

#[test]
fn cobb_douglas_data_pass() {
    for seed in 0..5 {
        let d = cobb_douglas(seed, 10);
        let v = afriat_test(&d).unwrap();
        assert!(v.certificate().unwrap().is_valid_for(&d).unwrap());
        assert!(garp_check(&d).unwrap().passed());
    }
}

#[test]
fn garp_violation_fails() {
    assert_eq!(afriat_test(&violating()).unwrap(), Verdict::Fail);
    assert_eq!(nash_rationality_test(&violating()).unwrap(), Verdict::Fail);
}

#[test]
fn violating_agent_slice_fails_nash_test() {
    let d = Dataset::new(
        vec![vec![1.0, 1.0], vec![2.0, 1.0]],
        vec![
            vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![3.0, 0.5]],
            vec![vec![2.0, 0.0], vec![1.0, 1.0], vec![3.0, 0.5]],
        ],
    )
    .unwrap();
    assert_eq!(nash_rationality_test(&d).unwrap(), Verdict::Fail);
    let per_agent = pgarp_condition_a(&d);
    assert!(!per_agent[0].passed());
    assert!(per_agent[1].passed() && per_agent[2].passed());
}

#[test]
fn per_agent_garp_is_not_necessary_in_general() {
    // Random responses to alternating extreme prices: each agent's slice
    // violates GARP, yet the joint system is feasible.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probes: Vec<f64> = (0..40).map(|k| if (k + k / 2) % 2 == 0 { 0.1 } else { 5.0 }).collect();
    let d = crate::detection::malicious::generate_normal_agent_data(&probes, 2, 3, (1.0, 50.0), &mut rng).unwrap();
    assert!(pgarp_condition_a(&d).iter().all(|g| !g.passed()));
    let cert = nash_rationality_test(&d).unwrap().certificate().cloned().unwrap();
    assert!(cert.is_valid_for(&d).unwrap());
}

#[test]
fn reconstruction_is_tight_at_observations() {
    let d = cobb_douglas(11, 8);
    let cert = afriat_test(&d).unwrap().certificate().cloned().unwrap();
    for s in 0..d.num_obs() {
        let u = reconstruct_utility(&cert, &d, d.action(s, 0)).unwrap();
        assert!((u - cert.utility[s]).abs() < 1e-6, "{} vs {}", u, cert.utility[s]);
    }
}

#[test]
fn multi_agent_reconstruction_reduces_to_single() {
    let d = cobb_douglas(3, 6);
    let cert = afriat_test(&d).unwrap().certificate().cloned().unwrap();
    let pc: PotentialCertificate<f64> = cert.clone().into();
    let x = [0.3, 0.9];
    assert_eq!(
        reconstruct_utility(&cert, &d, &x).unwrap(),
        reconstruct_potential(&pc, &d, &[&x]).unwrap()
    );
}

#[test]
fn mrs_single_hyperplane_is_price_ratio() {
    let d = single(&[(vec![3.0, 2.0], vec![1.0, 1.0])]);
    let cert: PotentialCertificate<f64> = afriat_test(&d).unwrap().certificate().cloned().unwrap().into();
    for x in [[0.1, 7.0], [4.0, 0.2]] {
        let m = marginal_rate_of_substitution(&cert, &d, &[&x], 0, (0, 1)).unwrap();
        assert_eq!(m.value, 1.5);
        assert!(!m.non_unique);
    }
}

#[test]
fn mrs_reports_kinks_and_takes_smallest_index() {
    let d = single(&[(vec![1.0, 1.0], vec![1.0, 1.0]), (vec![1.0, 1.0], vec![1.0, 1.0])]);
    let cert = PotentialCertificate {
        potential: vec![0.0, 0.0],
        lambda: vec![vec![1.0], vec![1.0]],
    };
    let m = marginal_rate_of_substitution(&cert, &d, &[&[1.0, 1.0]], 0, (0, 1)).unwrap();
    assert_eq!(m.active, 0);
    assert!(m.non_unique);
}

#[test]
fn mrs_above_one_when_first_good_is_dearer() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let obs: Vec<_> = (0..8)
        .map(|_| {
            let p2: f64 = rng.random_range(0.5..2.0);
            let p = vec![p2 * rng.random_range(1.1..3.0), p2];
            let x = vec![0.5 / p[0], 0.5 / p[1]];
            (p, x)
        })
        .collect();
    let d = single(&obs);
    let cert: PotentialCertificate<f64> = afriat_test(&d).unwrap().certificate().cloned().unwrap().into();
    for _ in 0..200 {
        let x = [rng.random_range(0.01..3.0), rng.random_range(0.01..3.0)];
        let m = marginal_rate_of_substitution(&cert, &d, &[&x], 0, (0, 1)).unwrap();
        if !m.non_unique {
            assert!(m.value > 1.0);
        }
    }
}

#[test]
fn mismatched_certificate_is_rejected() {
    let d = violating();
    let cert = AfriatCertificate { utility: vec![0.0], lambda: vec![1.0] };
    assert!(reconstruct_utility(&cert, &d, &[1.0, 1.0]).is_err());
}

fn small_dataset() -> impl Strategy<Value = Dataset<f64>> {
    (1usize..=6).prop_flat_map(|t| {
        (
            prop::collection::vec(prop::collection::vec(0.01f64..5.0, 2), t),
            prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), t),
        )
            .prop_map(|(p, x)| Dataset::new(p, x.into_iter().map(|x| vec![x]).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn afriat_agrees_with_garp(d in small_dataset()) {
        prop_assert_eq!(afriat_test(&d).unwrap().passed(), garp_check(&d).unwrap().passed());
    }

    #[test]
    fn nash_with_one_agent_is_afriat(d in small_dataset()) {
        prop_assert_eq!(afriat_test(&d).unwrap().passed(), nash_rationality_test(&d).unwrap().passed());
    }

    #[test]
    fn certificates_are_sound_and_rationalize(d in small_dataset()) {
        if let Verdict::Pass(cert) = afriat_test(&d).unwrap() {
            prop_assert!(cert.is_valid_for(&d).unwrap());
            let u: Vec<f64> = (0..d.num_obs())
                .map(|t| reconstruct_utility(&cert, &d, d.action(t, 0)).unwrap())
                .collect();
            for t in 0..d.num_obs() {
                for s in 0..d.num_obs() {
                    if d.cost(t, s, 0) <= d.budget(t, 0) {
                        prop_assert!(u[s] <= u[t] + 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn verdict_is_scale_invariant(d in small_dataset(), c in 0.1f64..10.0) {
        let base = afriat_test(&d).unwrap().passed();
        prop_assert_eq!(base, afriat_test(&d.scale_probes(c).unwrap()).unwrap().passed());
        prop_assert_eq!(base, afriat_test(&d.scale_actions(c).unwrap()).unwrap().passed());
    }

    #[test]
    fn scaling_certificate_preserves_order(d in small_dataset(), c in 0.1f64..10.0) {
        if let Verdict::Pass(cert) = afriat_test(&d).unwrap() {
            let scaled = AfriatCertificate {
                utility: cert.utility.iter().map(|u| u * c).collect(),
                lambda: cert.lambda.iter().map(|l| l * c).collect(),
            };
            let u = |cert: &AfriatCertificate<f64>, t: usize| reconstruct_utility(cert, &d, d.action(t, 0)).unwrap();
            for t in 0..d.num_obs() {
                for s in 0..d.num_obs() {
                    let (a, b) = (u(&cert, t) - u(&cert, s), u(&scaled, t) - u(&scaled, s));
                    if a.abs() > 1e-6 {
                        prop_assert_eq!(a > 0.0, b > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn reconstructed_potential_is_concave(
        d in small_dataset(),
        a in prop::collection::vec(0.0f64..5.0, 2),
        b in prop::collection::vec(0.0f64..5.0, 2),
    ) {
        if let Verdict::Pass(cert) = nash_rationality_test(&d).unwrap() {
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let f = |x: &[f64]| reconstruct_potential(&cert, &d, &[x]).unwrap();
            prop_assert!(f(&mid) >= 0.5 * (f(&a) + f(&b)) - 1e-9);
        }
    }
}
