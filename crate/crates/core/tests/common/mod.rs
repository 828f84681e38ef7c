#![allow(dead_code)]

use discount::domain::{Domain, LabelStore, Region, Unit};
use discount::sampler::{DrawSource, RandomStream, SampleDraw, SamplingLaw, DOMAIN_SCOPE};

/// Domain with default smoothing and full labels.
pub fn labeled(g: &[f64], f: &[f64]) -> (Domain, LabelStore) {
    let units = g
        .iter()
        .zip(f)
        .enumerate()
        .map(|(i, (&g, &f))| Unit::new(format!("u{i}"), g).with_oracle(f))
        .collect();
    let domain = Domain::new(units).unwrap();
    let labels = domain.oracle_labels().unwrap();
    (domain, labels)
}

pub fn whole_domain(draws: Vec<usize>) -> SampleDraw {
    SampleDraw::new(
        draws,
        DrawSource {
            scope: DOMAIN_SCOPE.to_string(),
            law: SamplingLaw::Detector,
        },
    )
}

pub fn within(region: &Region, law: SamplingLaw, draws: Vec<usize>) -> SampleDraw {
    SampleDraw::new(
        draws,
        DrawSource {
            scope: region.name().to_string(),
            law,
        },
    )
}

/// Every nonempty subset of the domain, named by its bitmask.
pub fn all_regions(domain: &Domain) -> Vec<Region> {
    let m = domain.len();
    (1u32..(1 << m))
        .map(|mask| {
            let members = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            Region::from_indices(format!("r{mask}"), members, domain).unwrap()
        })
        .collect()
}

/// Calls `visit(tuple, probability)` for each of the `probs.len()^n` ordered
/// draw tuples of i.i.d. draws with the given per-unit probabilities.
pub fn for_each_tuple(probs: &[f64], n: usize, mut visit: impl FnMut(&[usize], f64)) {
    let m = probs.len();
    let mut tuple = vec![0usize; n];
    loop {
        let p: f64 = tuple.iter().map(|&i| probs[i]).product();
        visit(&tuple, p);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            tuple[k] += 1;
            if tuple[k] < m {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
    }
}

/// Detector draw probabilities `g / G(Ω)` after smoothing.
pub fn detector_probs(domain: &Domain) -> Vec<f64> {
    domain.g().iter().map(|g| g / domain.total_g()).collect()
}

/// Small domains (1 to 4 units) with mixed counts, including a unit the
/// detector misses entirely.
pub fn enumeration_grid() -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut grid = vec![
        (vec![1.0, 1.0], vec![5.0, 3.0]),
        (vec![1.0, 2.0, 1.0], vec![2.0, 2.0, 0.0]),
        (vec![3.0], vec![4.0]),
        (vec![0.0, 2.0, 5.0], vec![1.0, 2.0, 4.0]),
        (vec![2.0, 2.0, 2.0, 2.0], vec![2.0, 2.0, 2.0, 2.0]),
    ];
    let g_choices = [0.5, 1.0, 2.0, 3.0, 7.0];
    let f_choices = [0.0, 1.0, 2.5, 5.0, 9.0];
    let mut rng = RandomStream::new(2024, 77);
    for m in 1..=4 {
        for _ in 0..4 {
            let g = (0..m)
                .map(|_| g_choices[rng.next_below(5) as usize])
                .collect();
            let f = (0..m)
                .map(|_| f_choices[rng.next_below(5) as usize])
                .collect();
            grid.push((g, f));
        }
    }
    grid
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Mean, variance (divisor T) and the standard error of that variance.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let (m2, m4) = (m2 / t, m4 / t);
    (mean, m2, ((m4 - m2 * m2) / t).sqrt())
}
