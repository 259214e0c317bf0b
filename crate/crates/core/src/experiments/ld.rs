use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::varsigma2;
use crate::rng::rng_for;

/// Empirical two-sided deviation frequency of a Poisson count at time `t`
/// against the Chernoff bound `2 exp(-varsigma2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub n_samples: usize,
}

/// Sample `N(t) ~ Poisson(rate t)` and count `N(t) >= (rate + eps) t` or
/// `N(t) <= (rate - eps) t`, once per entry of `t_grid`.
pub fn ld_check(rate: f64, eps: f64, t_grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<LdRow>> {
    let exponent = varsigma2(rate, eps)?;
    if n_samples == 0 {
        return Err(domain("need at least one sample"));
    }
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(domain(format!("time must be finite and >= 0, got {t}")));
            }
            let (hi, lo) = ((rate + eps) * t, (rate - eps) * t);
            let hits = if t == 0.0 {
                // N(0) = 0 <= lo
                n_samples
            } else {
                let dist = Poisson::new(rate * t).map_err(|e| domain(e.to_string()))?;
                let mut rng = rng_for(seed, &[i as u64]);
                (0..n_samples)
                    .filter(|_| {
                        let n: f64 = dist.sample(&mut rng);
                        n >= hi || n <= lo
                    })
                    .count()
            };
            Ok(LdRow { t, empirical: hits as f64 / n_samples as f64, bound: 2.0 * (-exponent * t).exp(), n_samples })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_is_trivial() {
        let rows = ld_check(1.0, 0.5, &[0.0], 10, 0).unwrap();
        assert_eq!(rows[0].bound, 2.0);
        assert!(rows[0].empirical <= 1.0);
    }

    #[test]
    fn infeasible_lower_branch_rejected() {
        assert!(ld_check(1.0, 1.0, &[1.0], 10, 0).is_err());
        assert!(ld_check(1.0, 1.5, &[1.0], 10, 0).is_err());
    }

    #[test]
    fn frequency_respects_bound() {
        for row in ld_check(2.0, 0.5, &[5.0, 20.0], 50_000, 3).unwrap() {
            assert!(row.empirical <= row.bound, "{row:?}");
        }
    }
}
