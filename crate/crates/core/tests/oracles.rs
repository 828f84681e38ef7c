//! Estimator expectations and variances checked against exhaustive
//! enumeration of every draw tuple, or against Monte Carlo where enumeration
//! is too large.

mod common;

use common::*;
use discount::domain::Region;
use discount::estimators::{
    binomial_inverse_moment, debias, estimate_discount, estimate_kdiscount, estimate_kdiscount_cv,
    exact_bias, exact_variance, population_weight_variance, sigma_hat, ControlVariate,
    EstimatorOptions,
};
use discount::sampler::{sample_proportional, RandomStream, SamplingLaw, Scope};

#[test]
fn discount_is_unbiased_for_every_n() {
    let (d, labels) = labeled(&[1.0, 2.0, 1.0], &[2.0, 2.0, 0.0]);
    let all = Region::all("all", &d).unwrap();
    let probs = detector_probs(&d);
    let truth = labels.region_total(&d, &all).unwrap();
    assert_eq!(truth, 4.0);
    for n in 1..=3 {
        let mut mean = 0.0;
        for_each_tuple(&probs, n, |t, p| {
            let draw = within(&all, SamplingLaw::Detector, t.to_vec());
            mean += p * estimate_discount(&d, &all, &draw, &labels, 0.05)
                .unwrap()
                .value;
        });
        assert!((mean - truth).abs() < 1e-12, "n = {n}: {mean}");
    }
}

/// `(Pr[n(S) > 0], E[F̂ 1{n(S)>0}], E[F̂²])` per region.
fn joint_moments(
    g: &[f64],
    f: &[f64],
    n: usize,
    cv: Option<&[f64]>,
) -> (Vec<Region>, Vec<f64>, Vec<(f64, f64, f64)>) {
    let (d, labels) = labeled(g, f);
    let regions = all_regions(&d);
    let truth = regions
        .iter()
        .map(|r| labels.region_total(&d, r).unwrap())
        .collect();
    let cv = cv
        .map(|h| ControlVariate::new(&d, h.iter().map(|&x| Some(x)).collect(), &regions).unwrap());
    let mut acc = vec![(0.0, 0.0, 0.0); regions.len()];
    for_each_tuple(&detector_probs(&d), n, |t, p| {
        let draw = whole_domain(t.to_vec());
        let opts = EstimatorOptions::default();
        let est = match &cv {
            Some(cv) => estimate_kdiscount_cv(&d, &regions, &draw, &labels, cv, opts),
            None => estimate_kdiscount(&d, &regions, &draw, &labels, opts),
        }
        .unwrap();
        for (a, e) in acc.iter_mut().zip(&est) {
            if !e.empty_region {
                a.0 += p;
                a.1 += p * e.value;
            }
            a.2 += p * e.value * e.value;
        }
    });
    (regions, truth, acc)
}

#[test]
fn joint_estimator_is_conditionally_unbiased() {
    for (g, f) in enumeration_grid() {
        for n in 1..=5 {
            let (regions, truth, acc) = joint_moments(&g, &f, n, None);
            for ((r, &t), &(hit, sum, _)) in regions.iter().zip(&truth).zip(&acc) {
                assert!(
                    rel_close(sum / hit, t, 1e-9),
                    "{g:?} {f:?} n={n} {}: {} vs {t}",
                    r.name(),
                    sum / hit
                );
            }
        }
    }
}

#[test]
fn unconditional_mean_matches_bias_formula() {
    for (g, f) in enumeration_grid() {
        let (d, _) = labeled(&g, &f);
        for n in 1..=5 {
            let (regions, truth, acc) = joint_moments(&g, &f, n, None);
            for ((r, &t), &(_, sum, _)) in regions.iter().zip(&truth).zip(&acc) {
                let p = d.region_mass(r).unwrap().probability.min(1.0);
                let expected = t + exact_bias(t, p, n as u64).unwrap();
                assert!(
                    rel_close(sum, expected, 1e-9),
                    "{g:?} {f:?} n={n} {}",
                    r.name()
                );
            }
        }
    }
}

#[test]
fn two_unit_worked_instance() {
    let (regions, _, acc) = joint_moments(&[1.0, 1.0], &[5.0, 3.0], 2, None);
    let a = regions.iter().position(|r| r.members() == [0]).unwrap();
    assert!((acc[a].1 - 3.75).abs() < 1e-12);
    assert!((acc[a].1 / acc[a].0 - 5.0).abs() < 1e-12);
}

#[test]
fn control_variate_keeps_conditional_mean() {
    let h_choices = [0.0, 0.7, 3.0, 10.0, -2.0];
    for (k, (g, f)) in enumeration_grid().into_iter().enumerate() {
        let h: Vec<f64> = (0..g.len())
            .map(|i| h_choices[(i + k) % h_choices.len()])
            .collect();
        for n in 1..=4 {
            let (_, _, plain) = joint_moments(&g, &f, n, None);
            let (_, _, cv) = joint_moments(&g, &f, n, Some(&h));
            for (p, c) in plain.iter().zip(&cv) {
                assert!(rel_close(p.1 / p.0, c.1 / c.0, 1e-9));
            }
        }
    }
}

#[test]
fn cv_single_draw_instance() {
    let (d, labels) = labeled(&[1.0, 1.0], &[5.0, 3.0]);
    let all = vec![Region::all("all", &d).unwrap()];
    let cv = ControlVariate::new(&d, vec![Some(4.0), Some(4.0)], &all).unwrap();
    let opts = EstimatorOptions::default();
    let a = estimate_kdiscount_cv(&d, &all, &whole_domain(vec![0]), &labels, &cv, opts).unwrap();
    let b = estimate_kdiscount_cv(&d, &all, &whole_domain(vec![1]), &labels, &cv, opts).unwrap();
    assert!((a[0].value - 10.0).abs() < 1e-9);
    assert!((b[0].value - 6.0).abs() < 1e-9);
}

#[test]
fn exact_variance_matches_enumeration() {
    for (g, f) in enumeration_grid() {
        let (d, labels) = labeled(&g, &f);
        for n in 1..=5 {
            let (regions, truth, acc) = joint_moments(&g, &f, n, None);
            for ((r, &t), &(_, mean, second)) in regions.iter().zip(&truth).zip(&acc) {
                let var = second - mean * mean;
                let rm = d.region_mass(r).unwrap();
                let sigma2 = population_weight_variance(&d, r, &labels).unwrap();
                let formula =
                    exact_variance(rm.mass, sigma2, t, rm.probability.min(1.0), n as u64).unwrap();
                assert!(
                    (var - formula).abs() <= 1e-9 * second.max(1.0),
                    "{g:?} {f:?} n={n} {}: {var} vs {formula}",
                    r.name()
                );
            }
        }
    }
}

#[test]
fn three_unit_three_draw_variance() {
    let (g, f) = (vec![1.0, 2.0, 1.0], vec![2.0, 2.0, 0.0]);
    let (d, labels) = labeled(&g, &f);
    let (regions, truth, acc) = joint_moments(&g, &f, 3, None);
    for ((r, &t), &(_, mean, second)) in regions.iter().zip(&truth).zip(&acc) {
        let rm = d.region_mass(r).unwrap();
        let sigma2 = population_weight_variance(&d, r, &labels).unwrap();
        let formula = exact_variance(rm.mass, sigma2, t, rm.probability.min(1.0), 3).unwrap();
        assert!((second - mean * mean - formula).abs() < 1e-10);
    }
}

#[test]
fn inverse_moment_matches_bernoulli_enumeration() {
    for n in 1..=12usize {
        for p in [0.05f64, 0.3, 0.5, 0.9] {
            let mut expected = 0.0;
            for bits in 0u32..(1 << n) {
                let j = bits.count_ones() as i32;
                if j > 0 {
                    expected += p.powi(j) * (1.0 - p).powi(n as i32 - j) / j as f64;
                }
            }
            let got = binomial_inverse_moment(n as u64, p).unwrap();
            assert!((got - expected).abs() < 1e-12, "n={n} p={p}");
        }
    }
}

#[test]
fn debiased_estimate_is_unbiased_and_inflates_variance() {
    for (g, f) in [
        (vec![1.0, 1.0], vec![5.0, 3.0]),
        (vec![1.0, 2.0, 1.0], vec![2.0, 2.0, 0.0]),
        (vec![0.5, 3.0, 1.0], vec![1.0, 4.0, 2.0]),
    ] {
        let (d, labels) = labeled(&g, &f);
        let regions = all_regions(&d);
        for n in 1..=4usize {
            // (E[debiased], E[F̂ | hit], E[F̂² | hit], E[D | hit], E[D² | hit], Pr[hit])
            let mut acc = vec![[0.0; 6]; regions.len()];
            for_each_tuple(&detector_probs(&d), n, |t, p| {
                let est = estimate_kdiscount(
                    &d,
                    &regions,
                    &whole_domain(t.to_vec()),
                    &labels,
                    EstimatorOptions::default(),
                )
                .unwrap();
                for ((a, e), r) in acc.iter_mut().zip(&est).zip(&regions) {
                    if e.empty_region {
                        continue;
                    }
                    let pr = d.region_mass(r).unwrap().probability.min(1.0);
                    let db = debias(e, pr, n as u64).unwrap();
                    a[0] += p * db.value;
                    a[1] += p * e.value;
                    a[2] += p * e.value * e.value;
                    a[3] += p * db.value;
                    a[4] += p * db.value * db.value;
                    a[5] += p;
                }
            });
            for (r, a) in regions.iter().zip(&acc) {
                let truth = labels.region_total(&d, r).unwrap();
                assert!(rel_close(a[0], truth, 1e-9), "{g:?} n={n} {}", r.name());
                let u = a[5];
                let var = a[2] / u - (a[1] / u).powi(2);
                let var_db = a[4] / u - (a[3] / u).powi(2);
                assert!((var_db - var / (u * u)).abs() <= 1e-9 * var_db.max(1.0));
            }
        }
    }
}

#[test]
fn bias_and_variance_match_monte_carlo() {
    let (d, labels) = labeled(&[1.0, 2.0, 1.0], &[2.0, 5.0, 0.0]);
    let regions = vec![Region::from_indices("s", vec![0, 1], &d).unwrap()];
    let rm = d.region_mass(&regions[0]).unwrap();
    let truth = 7.0;
    let n = 3;
    let mut values = Vec::with_capacity(1_000_000);
    let mut stream = RandomStream::new(17, 0);
    for _ in 0..1_000_000 {
        let draw = sample_proportional(&d, Scope::Domain, n, &mut stream).unwrap();
        values.push(
            estimate_kdiscount(&d, &regions, &draw, &labels, EstimatorOptions::default()).unwrap()
                [0]
            .value,
        );
    }
    let (mean, var, var_se) = moments(&values);
    let mean_se = (var / values.len() as f64).sqrt();
    let bias = exact_bias(truth, rm.probability, n as u64).unwrap();
    assert!(
        (mean - truth - bias).abs() < 3.0 * mean_se,
        "{mean} vs {}",
        truth + bias
    );
    let sigma2 = population_weight_variance(&d, &regions[0], &labels).unwrap();
    let formula = exact_variance(rm.mass, sigma2, truth, rm.probability, n as u64).unwrap();
    assert!((var - formula).abs() < 3.0 * var_se, "{var} vs {formula}");
}

#[test]
fn sigma_hat_converges_to_population_variance() {
    let (d, labels) = labeled(&[1.0, 2.0, 4.0, 0.5, 3.0], &[2.0, 1.0, 6.0, 1.0, 2.0]);
    let all = Region::all("all", &d).unwrap();
    let mut stream = RandomStream::new(3, 1);
    let draw = discount::sampler::Proposal::detector(&d, Scope::Region(&all))
        .unwrap()
        .sample(100_000, &mut stream)
        .unwrap();
    let est = estimate_discount(&d, &all, &draw, &labels, 0.05).unwrap();
    let population = population_weight_variance(&d, &all, &labels).unwrap();
    let weights: Vec<f64> = draw
        .draws
        .iter()
        .map(|&i| labels.get(i).unwrap() / d.g()[i])
        .collect();
    let sigma = sigma_hat(&weights, est.value, d.total_g()).unwrap();
    assert_eq!(sigma, est.sigma_hat);
    assert!((sigma * sigma / population - 1.0).abs() < 0.02);
}
