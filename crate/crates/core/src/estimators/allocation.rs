//! Sample allocation across disjoint regions.
//!
//! With a common weight variance, the summed variance of per-region estimators
//! is proportional to `Σ G_i² / n_i`, minimized over reals by `n_i ∝ G_i`.

use crate::error::{invalid, Result};
use crate::numeric;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// `n · G_i / Σ G`.
    pub real: Vec<f64>,
    /// Largest-remainder rounding of `real`, summing to `n`.
    pub largest_remainder: Vec<usize>,
    /// Exact integer minimizer of `Σ G_i² / n_i`, summing to `n`.
    pub integer: Vec<usize>,
}

/// `Σ G_i² / n_i`; regions with zero mass contribute nothing, a positive
/// mass with zero samples makes the objective infinite.
pub fn allocation_objective(masses: &[f64], counts: &[usize]) -> f64 {
    numeric::sum(masses.iter().zip(counts).map(|(&g, &c)| {
        if g == 0.0 {
            0.0
        } else if c == 0 {
            f64::INFINITY
        } else {
            g * g / c as f64
        }
    }))
}

pub fn optimal_allocation(masses: &[f64], n: usize) -> Result<Allocation> {
    if masses.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(invalid("region masses must be finite and nonnegative"));
    }
    let total = numeric::sum(masses.iter().copied());
    if !(total > 0.0) {
        return Err(invalid("all region masses are zero"));
    }
    if n == 0 {
        return Err(invalid("sample budget must be at least 1"));
    }
    let real: Vec<f64> = masses.iter().map(|&g| n as f64 * g / total).collect();

    let mut largest_remainder: Vec<usize> = real.iter().map(|&x| x.floor() as usize).collect();
    let assigned: usize = largest_remainder.iter().sum();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    // Stable on ties: earlier regions first.
    order.sort_by(|&a, &b| {
        let ra = real[a] - real[a].floor();
        let rb = real[b] - real[b].floor();
        rb.total_cmp(&ra)
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        largest_remainder[i] += 1;
    }

    // Greedy marginal gains are optimal for a separable convex objective.
    let mut integer = vec![0usize; masses.len()];
    for _ in 0..n {
        let gain = |i: usize| {
            let g2 = masses[i] * masses[i];
            let c = integer[i] as f64;
            if masses[i] == 0.0 {
                0.0
            } else if integer[i] == 0 {
                f64::INFINITY
            } else {
                g2 / (c * (c + 1.0))
            }
        };
        let best = (0..masses.len())
            .max_by(|&a, &b| {
                gain(a)
                    .total_cmp(&gain(b))
                    .then(masses[a].total_cmp(&masses[b]))
                    .then(b.cmp(&a))
            })
            .expect("nonempty masses");
        integer[best] += 1;
    }

    Ok(Allocation {
        real,
        largest_remainder,
        integer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_cases() {
        let a = optimal_allocation(&[30.0, 10.0], 40).unwrap();
        assert_eq!(a.real, vec![30.0, 10.0]);
        assert_eq!(a.largest_remainder, vec![30, 10]);
        assert_eq!(a.integer, vec![30, 10]);

        let a = optimal_allocation(&[2.0; 4], 40).unwrap();
        assert_eq!(a.largest_remainder, vec![10; 4]);
        assert_eq!(a.integer, vec![10; 4]);
    }

    #[test]
    fn budgets_are_preserved() {
        let a = optimal_allocation(&[1.0, 2.0, 3.5], 7).unwrap();
        assert_eq!(a.largest_remainder.iter().sum::<usize>(), 7);
        assert_eq!(a.integer.iter().sum::<usize>(), 7);
    }

    #[test]
    fn errors() {
        assert!(optimal_allocation(&[0.0, 0.0], 4).is_err());
        assert!(optimal_allocation(&[1.0, -1.0], 4).is_err());
        assert!(optimal_allocation(&[1.0], 0).is_err());
    }
}
