use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
    pub slope_stderr: f64,
}

/// Fits `y = exp(intercept) x^slope` by ordinary least squares on logs.
pub fn estimate_exponent(series: &[(f64, f64)]) -> Result<PowerFit> {
    if series.len() < 3 {
        return Err(Error::input(format!(
            "need at least 3 points, got {}",
            series.len()
        )));
    }
    if let Some(&(x, y)) = series.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::input(format!(
            "nonpositive point ({x}, {y}) in a log-log fit"
        )));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("all abscissae are equal"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = (residual / (m - 2.0) / sxx).sqrt();
    Ok(PowerFit {
        slope,
        intercept,
        residual,
        slope_stderr,
    })
}

/// About `points` integers spread geometrically over `[lo, hi]`, deduplicated.
pub fn geometric_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if points < 2 || hi <= lo {
        return vec![hi.max(lo)];
    }
    let ratio = (hi as f64 / lo as f64).ln() / (points - 1) as f64;
    let mut grid: Vec<usize> = (0..points)
        .map(|i| ((lo as f64).ln() + ratio * i as f64).exp().round() as usize)
        .collect();
    grid[points - 1] = hi;
    grid.dedup();
    grid
}

/// Exact-histogram comparison of two integer samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionComparison {
    pub tv_distance: f64,
    /// `(value, count in a, count in b)`, increasing in value.
    pub rows: Vec<(u64, u64, u64)>,
    pub size_a: usize,
    pub size_b: usize,
}

pub fn compare_distributions(a: &[u64], b: &[u64]) -> Result<DistributionComparison> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("cannot compare an empty sample"));
    }
    let mut counts: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for &x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for &x in b {
        counts.entry(x).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let tv = 0.5
        * counts
            .values()
            .map(|&(ca, cb)| (ca as f64 / na - cb as f64 / nb).abs())
            .sum::<f64>();
    Ok(DistributionComparison {
        tv_distance: tv,
        rows: counts
            .into_iter()
            .map(|(v, (ca, cb))| (v, ca, cb))
            .collect(),
        size_a: a.len(),
        size_b: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, SELECTION};

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 5000.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(0.7)))
            .collect();
        let f = estimate_exponent(&s).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.residual < 1e-20);
        let flat = estimate_exponent(&[(1.0, 2.0), (2.0, 2.0), (8.0, 2.0)]).unwrap();
        assert!(flat.slope.abs() < 1e-15);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = RngStream::new(8, SELECTION);
        let s: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let x = 1.2f64.powi(i);
                (x, x.sqrt() * (1.0 + 0.1 * (rng.uniform() - 0.5)))
            })
            .collect();
        let f = estimate_exponent(&s).unwrap();
        assert!((f.slope - 0.5).abs() < 4.0 * f.slope_stderr, "{f:?}");
    }

    #[test]
    fn fit_errors() {
        assert!(estimate_exponent(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(estimate_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(estimate_exponent(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(geometric_grid(10, 1000, 3), vec![10, 100, 1000]);
        let g = geometric_grid(1000, 100_000, 11);
        assert_eq!((g[0], *g.last().unwrap(), g.len()), (1000, 100_000, 11));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(geometric_grid(1, 3, 10), vec![1, 2, 3]);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(
            compare_distributions(&[1, 2, 3], &[3, 2, 1])
                .unwrap()
                .tv_distance,
            0.0
        );
        assert_eq!(
            compare_distributions(&[1, 1], &[2, 5]).unwrap().tv_distance,
            1.0
        );
        let c = compare_distributions(&[1, 1, 2, 2], &[1, 2, 2, 2]).unwrap();
        assert!((c.tv_distance - 0.25).abs() < 1e-15);
        assert_eq!(c.rows, vec![(1, 2, 1), (2, 2, 3)]);
        assert!(compare_distributions(&[], &[1]).is_err());
    }
}
