use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use super::moments::{alpha_bar, check_pair, MLParams};
use crate::chain::check_alpha;
use crate::coupled::CoupledChain;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// An exact draw of a standard Gamma variable of shape `a`.
pub fn gamma_sample(a: f64, rng: &mut RngStream) -> Result<f64> {
    let dist = Gamma::new(a, 1.0).map_err(|e| Error::param(format!("gamma shape {a}: {e}")))?;
    Ok(dist.sample(rng))
}

/// `L(n) / n^(abar/abar')` from one coupled run: an approximate draw of the
/// limiting Mittag-Leffler variable.
pub fn ml_sample_via_chain(alpha: f64, alpha_prime: f64, n: usize, seed: u64) -> Result<f64> {
    let beta = MLParams::leaf_count_limit(alpha, alpha_prime)?.beta();
    let mut chain = CoupledChain::new(alpha, alpha_prime, seed)?;
    chain.advance_to(n)?;
    Ok(chain.state().blue_leaf_count() as f64 / (n as f64).powf(beta))
}

fn check_crp(beta: f64, theta: f64, customers: usize) -> Result<()> {
    MLParams::new(beta, theta)?;
    if customers == 0 {
        return Err(Error::param("a restaurant needs at least one customer"));
    }
    Ok(())
}

/// Table count after seating `customers` in a `(beta, theta)` Chinese
/// restaurant: with `k` tables and `m` customers, the next one opens a new
/// table with probability `(theta + k beta) / (theta + m)`.
pub fn crp_tables(beta: f64, theta: f64, customers: usize, rng: &mut RngStream) -> Result<usize> {
    check_crp(beta, theta, customers)?;
    let mut k = 1usize;
    for m in 1..customers {
        if rng.uniform() * (theta + m as f64) < theta + k as f64 * beta {
            k += 1;
        }
    }
    Ok(k)
}

/// Exact law of [`crp_tables`]: entry `k` is the probability of `k` tables.
pub fn crp_table_distribution(beta: f64, theta: f64, customers: usize) -> Result<Vec<f64>> {
    check_crp(beta, theta, customers)?;
    let mut dist = vec![0.0, 1.0];
    for m in 1..customers {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &pk) in dist.iter().enumerate().skip(1) {
            let open = (theta + k as f64 * beta) / (theta + m as f64);
            next[k] += pk * (1.0 - open);
            next[k + 1] += pk * open;
        }
        dist = next;
    }
    Ok(dist)
}

/// `E[L(n)]`, from the linear recursion that the blue transition
/// probabilities give for `E[L alpha' - 1]`.
pub fn expected_leaf_count(alpha: f64, alpha_prime: f64, n: usize) -> Result<f64> {
    check_pair(alpha, alpha_prime)?;
    let mut mean = 1.0;
    for m in 1..n {
        let m = m as f64;
        mean +=
            (mean * alpha_prime - 1.0) * (alpha - 1.0) / ((alpha_prime - 1.0) * (m * alpha - 1.0));
    }
    Ok(mean)
}

/// `E[H_n]`, the mean distance between `A_0` and `A_1` after `n` steps:
/// `G(n + 1 - 2/alpha) G(1 - 1/alpha) / (G(2 abar) G(n - 1/alpha))`.
pub fn expected_two_leaf_distance(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let n = n as f64;
    let a = alpha_bar(alpha);
    Ok((ln_gamma(n + 1.0 - 2.0 / alpha) + ln_gamma(a)
        - ln_gamma(2.0 * a)
        - ln_gamma(n - 1.0 / alpha))
    .exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::leaf_count_trace;
    use crate::distributions::{gamma_moment, ml_moment, MomentReport};
    use crate::rng::{replica_seed, SELECTION};

    #[test]
    fn gamma_sampler_moments() {
        let mut rng = RngStream::new(5, SELECTION);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| gamma_sample(2.0, &mut rng).unwrap())
            .collect();
        for p in [1.0, 2.0, 3.0] {
            let r =
                MomentReport::from_samples("gamma", p, gamma_moment(2.0, p).unwrap(), &xs).unwrap();
            assert!(r.z.unwrap().abs() < 4.0, "{r:?}");
        }
        assert!(gamma_sample(-1.0, &mut rng).is_err());
    }

    #[test]
    fn crp_first_customers() {
        let mut rng = RngStream::new(0, SELECTION);
        assert_eq!(crp_tables(0.4, 0.5, 1, &mut rng).unwrap(), 1);
        let d = crp_table_distribution(0.4, 0.5, 2).unwrap();
        assert!((d[2] - 0.9 / 1.5).abs() < 1e-15);
        let d = crp_table_distribution(0.3, 0.7, 50).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(crp_tables(1.2, 0.5, 3, &mut rng).is_err());
    }

    #[test]
    fn crp_sampler_matches_exact_law() {
        let (beta, theta, m) = (0.5, 1.0 / 3.0, 20);
        let exact = crp_table_distribution(beta, theta, m).unwrap();
        let mut counts = vec![0u32; exact.len()];
        let mut rng = RngStream::new(11, SELECTION);
        let reps = 100_000;
        for _ in 0..reps {
            counts[crp_tables(beta, theta, m, &mut rng).unwrap()] += 1;
        }
        for (k, &p) in exact.iter().enumerate().filter(|(_, &p)| p > 1e-3) {
            let f = counts[k] as f64 / reps as f64;
            let z = (f - p) / (p * (1.0 - p) / reps as f64).sqrt();
            assert!(z.abs() < 4.5, "k = {k}: {f} vs {p}");
        }
    }

    #[test]
    fn leaf_count_mean_recursion() {
        // All blue up to n = 2.
        assert_eq!(expected_leaf_count(1.5, 1.8, 1).unwrap(), 1.0);
        assert_eq!(expected_leaf_count(1.5, 1.8, 2).unwrap(), 2.0);
        // CRP mean of tables + 1 agrees.
        let (alpha, alpha_prime) = (1.5, 1.8);
        let p = MLParams::leaf_count_limit(alpha, alpha_prime).unwrap();
        let d = crp_table_distribution(p.beta(), p.theta(), 50).unwrap();
        let crp_mean: f64 = d.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
        assert!(
            (expected_leaf_count(alpha, alpha_prime, 51).unwrap() - 1.0 - crp_mean).abs() < 1e-10
        );
        // Slowly approaches the ML mean after normalization.
        let n = 1_000_000;
        let scaled = expected_leaf_count(1.5, 2.0, n).unwrap() / (n as f64).powf(2.0 / 3.0);
        let limit = ml_moment(MLParams::leaf_count_limit(1.5, 2.0).unwrap(), 1.0).unwrap();
        assert!((scaled - limit).abs() / limit < 0.02);
    }

    #[test]
    fn leaf_count_trace_mean_matches_recursion() {
        let reps = 4000;
        let n = 60;
        let xs: Vec<f64> = (0..reps)
            .map(|r| {
                leaf_count_trace(1.3, 1.7, n, replica_seed(3, r))
                    .unwrap()
                    .at(n)
                    .unwrap() as f64
            })
            .collect();
        let r = MomentReport::from_samples(
            "mean-L",
            1.0,
            expected_leaf_count(1.3, 1.7, n).unwrap(),
            &xs,
        )
        .unwrap();
        assert!(r.z.unwrap().abs() < 4.0, "{r:?}");
    }

    #[test]
    fn two_leaf_distance_formula_matches_recursion() {
        for alpha in [1.2, 1.5, 2.0] {
            let mut h = 1.0;
            for n in 1..2000usize {
                let exact = expected_two_leaf_distance(alpha, n).unwrap();
                assert!((exact - h).abs() < 1e-9 * h, "alpha {alpha}, n {n}");
                h *= 1.0 + (alpha - 1.0) / (n as f64 * alpha - 1.0);
            }
        }
    }
}
