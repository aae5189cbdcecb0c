use rayon::prelude::*;

use super::MassPartition;
use crate::coupled::{leaf_counts_at, AcceptanceTable};
use crate::distributions::{alpha_bar, mean_and_stderr};
use crate::error::{Error, Result};
use crate::harness::{estimate_exponent, geometric_grid};
use crate::rng::{replica_seed, RngStream};

/// Indices of `s` in size-biased random order: each draw picks a remaining
/// index with probability proportional to its mass. Zero masses come last,
/// in index order.
pub fn size_biased_reorder(s: &MassPartition, rng: &mut RngStream) -> Result<Vec<usize>> {
    let masses = s.masses();
    if !(s.total() > 0.0) {
        return Err(Error::input("size-biased reordering of a zero partition"));
    }
    let mut remaining: Vec<usize> = (0..masses.len()).filter(|&i| masses[i] > 0.0).collect();
    let mut order = Vec::with_capacity(masses.len());
    while !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| masses[i]).sum();
        let u = rng.below(total);
        let mut acc = 0.0;
        let mut pick = remaining.len() - 1;
        for (j, &i) in remaining.iter().enumerate() {
            acc += masses[i];
            if u < acc {
                pick = j;
                break;
            }
        }
        order.push(remaining.remove(pick));
    }
    order.extend((0..masses.len()).filter(|&i| masses[i] == 0.0));
    Ok(order)
}

/// The full record of one extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Size-biased order of the positive entries.
    pub order: Vec<usize>,
    /// Whether the entry at each position of `order` was kept.
    pub kept: Vec<bool>,
    pub result: MassPartition,
}

/// Size-biased reorder, keep the first two fragments, then keep the `m`-th
/// (`m >= 3`) with probability `p(m, k + 1)` where `k` fragments were kept
/// among the first `m - 1`.
pub fn extract_with_trace(
    s: &MassPartition,
    table: &AcceptanceTable,
    rng: &mut RngStream,
) -> Result<Extraction> {
    if s.positive_count() == 0 {
        return Ok(Extraction {
            order: Vec::new(),
            kept: Vec::new(),
            result: MassPartition::new(Vec::new())?,
        });
    }
    let mut order = size_biased_reorder(s, rng)?;
    order.truncate(s.positive_count());
    let mut kept = Vec::with_capacity(order.len());
    let mut kept_count = 0;
    for m in 1..=order.len() {
        let keep = m <= 2 || {
            let p = table.probability(m, kept_count + 1)?;
            rng.acceptance_uniform() <= p
        };
        kept.push(keep);
        kept_count += usize::from(keep);
    }
    let masses = s.masses();
    let result = MassPartition::new(
        order
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(&i, _)| masses[i])
            .collect(),
    )?;
    Ok(Extraction {
        order,
        kept,
        result,
    })
}

pub fn dissipative_extract(
    s: &MassPartition,
    alpha: f64,
    alpha_prime: f64,
    rng: &mut RngStream,
) -> Result<MassPartition> {
    let table = AcceptanceTable::new(alpha, alpha_prime)?;
    Ok(extract_with_trace(s, &table, rng)?.result)
}

/// Fitted growth exponent of the blue leaf count.
#[derive(Debug, Clone, PartialEq)]
pub struct MalthusReport {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub target: f64,
    pub checkpoints: Vec<usize>,
    pub slopes: Vec<f64>,
    pub mean_slope: f64,
    pub stderr: f64,
}

impl MalthusReport {
    pub const CSV_HEADER: &'static str = "replica,slope";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (r, slope) in self.slopes.iter().enumerate() {
            s.push_str(&format!("{r},{slope}\n"));
        }
        s
    }
}

/// Smallest `n` accepted by [`malthus_diagnostic`].
pub const MALTHUS_MIN_N: usize = 1000;

/// Per replica, the OLS slope of `log L` against `log m` on a geometric grid
/// from `n / 100` to `n`; slopes are averaged and compared with `abar/abar'`.
pub fn malthus_diagnostic(
    alpha: f64,
    alpha_prime: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<MalthusReport> {
    AcceptanceTable::new(alpha, alpha_prime)?;
    if n < MALTHUS_MIN_N {
        return Err(Error::param(format!(
            "malthus diagnostic needs n >= {MALTHUS_MIN_N}"
        )));
    }
    if replicas == 0 {
        return Err(Error::param("need at least one replica"));
    }
    let checkpoints = geometric_grid(n / 100, n, 11);
    let slopes: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let counts = leaf_counts_at(alpha, alpha_prime, &checkpoints, replica_seed(seed, r))?;
            let series: Vec<(f64, f64)> = checkpoints
                .iter()
                .zip(&counts)
                .map(|(&m, &l)| (m as f64, l as f64))
                .collect();
            Ok(estimate_exponent(&series)?.slope)
        })
        .collect::<Result<_>>()?;
    let (mean_slope, stderr) = mean_and_stderr(&slopes);
    Ok(MalthusReport {
        alpha,
        alpha_prime,
        target: alpha_bar(alpha) / alpha_bar(alpha_prime),
        checkpoints,
        slopes,
        mean_slope,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SELECTION;

    fn part(xs: &[f64]) -> MassPartition {
        MassPartition::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn degenerate_reorders() {
        let mut rng = RngStream::new(1, SELECTION);
        for _ in 0..100 {
            assert_eq!(
                size_biased_reorder(&part(&[1.0, 0.0, 0.0]), &mut rng).unwrap(),
                vec![0, 1, 2]
            );
        }
        assert!(size_biased_reorder(&part(&[0.0, 0.0]), &mut rng).is_err());
    }

    #[test]
    fn three_element_order_law() {
        // Exhaustive products over the six orders of (0.5, 0.3, 0.2).
        let s = [0.5, 0.3, 0.2];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let exact: Vec<f64> = perms
            .iter()
            .map(|p| s[p[0]] * s[p[1]] / (1.0 - s[p[0]]))
            .collect();
        assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((exact[0] - 0.3).abs() < 1e-15);
        let mut rng = RngStream::new(2, SELECTION);
        let reps = 100_000;
        let mut counts = [0u32; 6];
        for _ in 0..reps {
            let o = size_biased_reorder(&part(&s), &mut rng).unwrap();
            counts[perms.iter().position(|p| p[..] == o[..]).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(&exact) {
            let f = *c as f64 / reps as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / reps as f64).sqrt());
        }
    }

    #[test]
    fn binary_extraction_keeps_two() {
        let mut rng = RngStream::new(3, SELECTION);
        let s = part(&[0.3, 0.25, 0.2, 0.15, 0.1]);
        for _ in 0..1000 {
            let out = dissipative_extract(&s, 1.4, 2.0, &mut rng).unwrap();
            assert_eq!(out.len(), 2);
            assert!(out.total() <= s.total());
        }
        let halves = part(&[0.5, 0.5]);
        assert_eq!(
            dissipative_extract(&halves, 1.3, 1.6, &mut rng).unwrap(),
            halves
        );
        let single = part(&[0.7, 0.0]);
        assert_eq!(
            dissipative_extract(&single, 1.3, 1.6, &mut rng).unwrap(),
            part(&[0.7])
        );
    }

    #[test]
    fn third_fragment_keep_rate() {
        let table = AcceptanceTable::new(1.5, 1.8).unwrap();
        assert!((table.probability(3, 3).unwrap() - 0.25).abs() < 1e-15);
        let mut rng = RngStream::new(4, SELECTION);
        let reps = 40_000;
        let s = part(&[0.4, 0.3, 0.3]);
        let kept = (0..reps)
            .filter(|_| extract_with_trace(&s, &table, &mut rng).unwrap().kept[2])
            .count();
        let f = kept as f64 / reps as f64;
        assert!((f - 0.25).abs() < 4.0 * (0.25 * 0.75 / reps as f64).sqrt());
    }

    #[test]
    fn malthus_small_run() {
        let r = malthus_diagnostic(1.5, 2.0, 5000, 16, 7).unwrap();
        assert_eq!(r.slopes.len(), 16);
        assert!((r.target - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.mean_slope - r.target).abs() < 0.1, "{}", r.mean_slope);
        assert!(malthus_diagnostic(1.5, 2.0, 500, 4, 0).is_err());
    }
}
