//! Property tests for the library-wide invariants.

use proptest::prelude::*;

use rpost::alpha_lik::{q_iid, q_inh};
use rpost::divergence::{hellinger_sq, kld, l1};
use rpost::estimators::{amrpe_discrete, erpde, hrpde, mrpde};
use rpost::model::{normal_power_integral, power_integral, AlphaConfig, ModelFamily, NormalLocation};
use rpost::numeric::linspace;
use rpost::posterior::{log_unnorm_posterior, PosteriorSource, WeightedPosterior};
use rpost::prior::Prior;

fn normal(z: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((z - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.01f64..2.0]
}

fn data(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_integral_ignores_location(sigma in 0.1f64..5.0, a in 0.01f64..2.0, t1 in -50.0f64..50.0, t2 in -50.0f64..50.0) {
        let f = NormalLocation::new(sigma).unwrap();
        let alpha = AlphaConfig::new(a).unwrap();
        let p1 = power_integral(&f, &[t1], alpha, 0).unwrap();
        let p2 = power_integral(&f, &[t2], alpha, 0).unwrap();
        prop_assert_eq!(p1, p2);
        prop_assert_eq!(p1, normal_power_integral(sigma, a));
    }

    #[test]
    fn alpha_likelihood_is_additive(a in alpha(), x in data(20), y in data(20), theta in -10.0f64..10.0) {
        let f = NormalLocation::new(1.3).unwrap();
        let alpha = AlphaConfig::new(a).unwrap();
        let joined: Vec<f64> = x.iter().chain(&y).copied().collect();
        let whole = q_iid(&f, &joined, &[theta], alpha).unwrap();
        let terms = whole.per_term.clone().unwrap();
        prop_assert_eq!(whole.value, terms.iter().sum::<f64>());
        let qx = q_iid(&f, &x, &[theta], alpha).unwrap().per_term.unwrap();
        let qy = q_iid(&f, &y, &[theta], alpha).unwrap().per_term.unwrap();
        prop_assert_eq!(terms, qx.into_iter().chain(qy).collect::<Vec<_>>());
    }

    /// The gap is about `α (log f)² / 2` per term, so observations are kept
    /// within 5σ of θ.
    #[test]
    fn zero_branch_is_continuous(u in prop::collection::vec(-5.0f64..5.0, 1..30), theta in -5.0f64..5.0) {
        let f = NormalLocation::new(1.0).unwrap();
        let x: Vec<f64> = u.iter().map(|v| theta + v).collect();
        let q0 = q_iid(&f, &x, &[theta], AlphaConfig::ZERO).unwrap().value;
        let qe = q_iid(&f, &x, &[theta], AlphaConfig::new(1e-6).unwrap()).unwrap().value;
        prop_assert!((q0 - qe).abs() <= 1e-4 * x.len() as f64, "{} vs {}", q0, qe);
    }

    #[test]
    fn per_term_influence_is_bounded(a in 0.01f64..3.0, sigma in 0.2f64..4.0, y in -1e6f64..1e6, theta in -100.0f64..100.0) {
        let f = NormalLocation::new(sigma).unwrap();
        let q = q_iid(&f, &[y], &[theta], AlphaConfig::new(a).unwrap()).unwrap().value;
        let pi = normal_power_integral(sigma, a) / (1.0 + a);
        let lower = -1.0 / a - pi;
        let upper = ((2.0 * std::f64::consts::PI * sigma * sigma).powf(-a / 2.0) - 1.0) / a - pi;
        let slack = 1e-12 * (1.0 + lower.abs() + upper.abs());
        prop_assert!(q >= lower - slack && q <= upper + slack, "{} not in [{}, {}]", q, lower, upper);
    }

    #[test]
    fn homogeneous_q_inh_equals_q_iid(a in alpha(), x in data(10), theta in -5.0f64..5.0) {
        let f = NormalLocation::new(0.7).unwrap();
        let alpha = AlphaConfig::new(a).unwrap();
        prop_assert_eq!(q_iid(&f, &x, &[theta], alpha).unwrap(), q_inh(&f, &x, &[theta], alpha).unwrap());
    }

    #[test]
    fn discrete_prior_mass_is_capped(masses in prop::collection::vec(0.01f64..0.9, 1..8)) {
        let pairs: Vec<(Vec<f64>, f64)> = masses.iter().enumerate().map(|(k, m)| (vec![k as f64], *m)).collect();
        let total: f64 = masses.iter().sum();
        let built = Prior::discrete_from_pairs(pairs);
        if total <= 1.0 {
            let p = built.unwrap();
            prop_assert!(p.total_mass().unwrap() <= 1.0 + 1e-12);
            prop_assert_eq!(p.log_prior(&[0.0]), p.log_prior(&[0.0]));
        } else if total > 1.0 + 1e-9 {
            prop_assert!(built.is_err());
        }
    }

    #[test]
    fn weights_self_normalize(lw in prop::collection::vec(-700.0f64..700.0, 1..200)) {
        let points: Vec<f64> = (0..lw.len()).map(|k| k as f64).collect();
        let wp = WeightedPosterior::from_log_weights(1, points, lw, PosteriorSource::ImportanceSampling).unwrap();
        let total: f64 = wp.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(wp.ess() >= 1.0 && wp.ess() <= wp.len() as f64);
    }

    #[test]
    fn probabilities_are_monotone(lw in prop::collection::vec(-30.0f64..30.0, 2..100), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let n = lw.len();
        let points: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let wp = WeightedPosterior::from_log_weights(1, points, lw, PosteriorSource::ImportanceSampling).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let small = wp.probability(|t| t[0] <= lo);
        let large = wp.probability(|t| t[0] <= hi);
        prop_assert!((0.0..=1.0).contains(&small) && (0.0..=1.0).contains(&large));
        prop_assert!(small <= large);
    }

    /// Exactly representable shifts of exactly representable log-weights
    /// leave the normalized posterior unchanged to the bit.
    #[test]
    fn dyadic_shift_is_bit_exact(ks in prop::collection::vec(-(1i64 << 30)..(1i64 << 30), 1..100), shift in -(1i64 << 30)..(1i64 << 30)) {
        let unit = 2f64.powi(-20);
        let lw: Vec<f64> = ks.iter().map(|k| *k as f64 * unit).collect();
        let shifted: Vec<f64> = lw.iter().map(|v| v + shift as f64 * unit).collect();
        let points: Vec<f64> = (0..lw.len()).map(|k| k as f64).collect();
        let a = WeightedPosterior::from_log_weights(1, points.clone(), lw, PosteriorSource::GridQuadrature).unwrap();
        let b = WeightedPosterior::from_log_weights(1, points, shifted, PosteriorSource::GridQuadrature).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Arbitrary shifts agree up to the rounding of the shifted inputs.
    #[test]
    fn arbitrary_shift_is_invariant(data in data(15), c in -1e3f64..1e3) {
        let f = NormalLocation::new(1.0).unwrap();
        let prior = Prior::conjugate(vec![0.0], 4.0).unwrap();
        let alpha = AlphaConfig::new(0.3).unwrap();
        let thetas = linspace(-8.0, 8.0, 200);
        let lp: Vec<f64> = thetas.iter().map(|t| log_unnorm_posterior(&f, &prior, &data, &[*t], alpha).unwrap()).collect();
        let shifted: Vec<f64> = lp.iter().map(|v| v + c).collect();
        let a = WeightedPosterior::from_log_weights(1, thetas.clone(), lp, PosteriorSource::GridQuadrature).unwrap();
        let b = WeightedPosterior::from_log_weights(1, thetas, shifted, PosteriorSource::GridQuadrature).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300) + 1e-300 || (x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn erpde_is_linear(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, w in 0.05f64..0.95) {
        let f = NormalLocation::new(1.0).unwrap();
        let z = linspace(-15.0, 15.0, 1201);
        let d1 = erpde(&f, &WeightedPosterior::point_mass(&[t1]), &z).unwrap();
        let d2 = erpde(&f, &WeightedPosterior::point_mass(&[t2]), &z).unwrap();
        let mix = WeightedPosterior::from_log_weights(1, vec![t1, t2], vec![w.ln(), (1.0 - w).ln()], PosteriorSource::GridQuadrature).unwrap();
        let d = erpde(&f, &mix, &z).unwrap();
        let (w1, w2) = (mix.weights()[0], mix.weights()[1]);
        for k in 0..z.len() {
            let expect = w1 * d1.values[k] + w2 * d2.values[k];
            prop_assert!((d.values[k] - expect).abs() <= 1e-15 + 1e-13 * expect);
        }
    }

    #[test]
    fn density_estimates_are_densities(thetas in prop::collection::vec(-2.0f64..2.0, 1..30), seed in 0u64..1000) {
        let f = NormalLocation::new(1.0).unwrap();
        let z = linspace(-14.0, 14.0, 2801);
        let lw: Vec<f64> = thetas.iter().enumerate().map(|(k, _)| ((k as u64 * 7919 + seed) % 13) as f64 * -0.3).collect();
        let wp = WeightedPosterior::from_log_weights(1, thetas.clone(), lw, PosteriorSource::ImportanceSampling).unwrap();
        for est in [erpde(&f, &wp, &z).unwrap(), hrpde(&f, &wp, &z).unwrap(), mrpde(&f, &[thetas[0]], &z).unwrap()] {
            prop_assert!(est.values.iter().all(|v| *v >= 0.0));
            prop_assert!((est.integral - 1.0).abs() <= 1e-4, "{} {}", est.kind, est.integral);
        }
    }

    #[test]
    fn amrpe_set_ignores_a_common_constant(x in data(12), scale in 0.01f64..1.0, a in alpha()) {
        let f = NormalLocation::new(1.0).unwrap();
        let atoms = [-4.0, -1.0, 0.0, 2.5, 6.0];
        let masses = [0.1, 0.3, 0.2, 0.25, 0.15];
        let p1 = Prior::discrete_from_pairs(atoms.iter().zip(masses).map(|(t, m)| (vec![*t], m))).unwrap();
        // scaling every mass adds log(scale) to every score
        let p2 = Prior::discrete_from_pairs(atoms.iter().zip(masses).map(|(t, m)| (vec![*t], m * scale))).unwrap();
        let alpha = AlphaConfig::new(a).unwrap();
        prop_assert_eq!(amrpe_discrete(&f, &p1, &x, alpha, 0.0).unwrap(), amrpe_discrete(&f, &p2, &x, alpha, 0.0).unwrap());
    }

    #[test]
    fn divergence_inequalities(m0 in -3.0f64..3.0, s0 in 0.5f64..2.0, m1 in -3.0f64..3.0, s1 in 0.5f64..2.0) {
        let z = linspace(-30.0, 30.0, 6001);
        let p: Vec<f64> = z.iter().map(|v| normal(*v, m0, s0)).collect();
        let q: Vec<f64> = z.iter().map(|v| normal(*v, m1, s1)).collect();
        let k = kld(&p, &q, &z).unwrap();
        let h = hellinger_sq(&p, &q, &z).unwrap();
        let d = l1(&p, &q, &z).unwrap();
        prop_assert!(k >= -1e-10);
        prop_assert_eq!(h, hellinger_sq(&q, &p, &z).unwrap());
        prop_assert_eq!(d, l1(&q, &p, &z).unwrap());
        prop_assert!(0.5 * d * d <= k + 1e-10);
        prop_assert!(h <= d + 1e-12 && d <= 2.0 * h.sqrt() + 1e-12);
        prop_assert!(h <= 2.0 && d <= 2.0 + 1e-12);
        prop_assert!(kld(&p, &p, &z).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn kld_is_asymmetric() {
    let z = linspace(-30.0, 30.0, 6001);
    let p: Vec<f64> = z.iter().map(|v| normal(*v, 0.0, 1.0)).collect();
    let q: Vec<f64> = z.iter().map(|v| normal(*v, 1.0, 2.0)).collect();
    let forward = kld(&p, &q, &z).unwrap();
    let backward = kld(&q, &p, &z).unwrap();
    assert!((forward - backward).abs() > 0.1, "{forward} {backward}");
}

#[test]
fn regression_family_is_usable_through_the_enum() {
    let f = ModelFamily::normal_location(2.0).unwrap();
    let x = [0.5, 1.5];
    let v = log_unnorm_posterior(&f, &Prior::uniform(), &x, &[1.0], AlphaConfig::ZERO).unwrap();
    let direct = q_iid(&f, &x, &[1.0], AlphaConfig::ZERO).unwrap().value;
    assert_eq!(v, direct);
}
