use statrs::function::gamma::ln_gamma;

use crate::chain::check_alpha;
use crate::error::{Error, Result};

/// Relative tolerance of the moment identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// `1 - 1/alpha`.
#[inline]
pub fn alpha_bar(alpha: f64) -> f64 {
    1.0 - 1.0 / alpha
}

/// Parameters `(beta, theta)` of a generalized Mittag-Leffler law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    beta: f64,
    theta: f64,
}

impl MLParams {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!(
                "ML beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(theta > -beta) || !theta.is_finite() {
            return Err(Error::param(format!(
                "ML theta must exceed -beta, got {theta}"
            )));
        }
        Ok(MLParams { beta, theta })
    }

    /// The law of the limit of `L(n) / n^(abar/abar')`.
    pub fn leaf_count_limit(alpha: f64, alpha_prime: f64) -> Result<Self> {
        check_pair(alpha, alpha_prime)?;
        let a = alpha_bar(alpha);
        MLParams::new(a / alpha_bar(alpha_prime), a)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::param(format!(
            "moment order must be a nonnegative real, got {p}"
        )));
    }
    Ok(())
}

pub(crate) fn check_pair(alpha: f64, alpha_prime: f64) -> Result<()> {
    check_alpha(alpha)?;
    check_alpha(alpha_prime)?;
    if alpha >= alpha_prime {
        return Err(Error::param(format!(
            "need alpha < alpha', got {alpha} and {alpha_prime}"
        )));
    }
    Ok(())
}

/// `E[ML^p] = G(theta+1) G(theta/beta+p+1) / (G(theta/beta+1) G(theta+p beta+1))`.
pub fn ml_moment(params: MLParams, p: f64) -> Result<f64> {
    check_order(p)?;
    let MLParams { beta, theta } = params;
    let r = theta / beta;
    Ok((ln_gamma(theta + 1.0) + ln_gamma(r + p + 1.0)
        - ln_gamma(r + 1.0)
        - ln_gamma(theta + p * beta + 1.0))
    .exp())
}

/// `E[J^p] = alpha^p G((p+1) abar + 1) / G(abar + 1)`.
pub fn j_moment(alpha: f64, p: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_order(p)?;
    let a = alpha_bar(alpha);
    Ok((p * alpha.ln() + ln_gamma((p + 1.0) * a + 1.0) - ln_gamma(a + 1.0)).exp())
}

/// `E[Q^p]` for `Q = (alpha'/alpha) ML(abar/abar', abar)^abar'`.
pub fn q_moment(alpha: f64, alpha_prime: f64, p: f64) -> Result<f64> {
    check_order(p)?;
    let params = MLParams::leaf_count_limit(alpha, alpha_prime)?;
    Ok((alpha_prime / alpha).powf(p) * ml_moment(params, p * alpha_bar(alpha_prime))?)
}

/// `E[I^p]`, using that `alpha I` is `ML(abar, abar)`.
pub fn i_moment(alpha: f64, p: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a = alpha_bar(alpha);
    Ok(ml_moment(MLParams::new(a, a)?, p)? / alpha.powf(p))
}

/// `E[G^p] = G(a+p) / G(a)` for a standard Gamma variable of shape `a`.
pub fn gamma_moment(a: f64, p: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::param(format!(
            "gamma shape must be positive, got {a}"
        )));
    }
    check_order(p)?;
    Ok((ln_gamma(a + p) - ln_gamma(a)).exp())
}

/// One line of a moment comparison: an analytic value against either a
/// Monte-Carlo estimate or, for exact identities, the other side.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub identity: String,
    pub p: f64,
    pub analytic: f64,
    pub estimate: f64,
    /// Zero for exact identities.
    pub stderr: f64,
    /// Zero for exact identities.
    pub replicas: usize,
    /// `(estimate - analytic) / stderr`; absent when `stderr` is zero.
    pub z: Option<f64>,
}

impl MomentReport {
    pub const CSV_HEADER: &'static str = "identity,p,analytic,estimate,stderr,z";

    pub fn exact(identity: &str, p: f64, analytic: f64, other: f64) -> Self {
        MomentReport {
            identity: identity.to_string(),
            p,
            analytic,
            estimate: other,
            stderr: 0.0,
            replicas: 0,
            z: None,
        }
    }

    /// Empirical `E[X^p]` from `samples` against `analytic`.
    pub fn from_samples(identity: &str, p: f64, analytic: f64, samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::input(
                "a Monte-Carlo moment needs at least two samples",
            ));
        }
        let powered: Vec<f64> = samples.iter().map(|x| x.powf(p)).collect();
        let (mean, stderr) = mean_and_stderr(&powered);
        Ok(MomentReport {
            identity: identity.to_string(),
            p,
            analytic,
            estimate: mean,
            stderr,
            replicas: samples.len(),
            z: (stderr > 0.0).then(|| (mean - analytic) / stderr),
        })
    }

    pub fn relative_error(&self) -> f64 {
        let scale = self.analytic.abs().max(f64::MIN_POSITIVE);
        (self.estimate - self.analytic).abs() / scale
    }

    pub fn csv_row(&self) -> String {
        let z = self.z.map(|z| format!("{z}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.identity, self.p, self.analytic, self.estimate, self.stderr, z
        )
    }
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// The four moment identities at each order in `p_grid`:
///
/// * `ml-factorization`: `ML(a,a) = ML(a/b,a)^b ML(b,b)` with `a = abar`, `b = abar'`;
/// * `forward`: `I_alpha = Q I_alpha'`;
/// * `dual`: `J_alpha Q = J_alpha'`;
/// * `gamma2`: `J_alpha I_alpha = Gamma_2`.
pub fn identity_suite(alpha: f64, alpha_prime: f64, p_grid: &[f64]) -> Result<Vec<MomentReport>> {
    check_pair(alpha, alpha_prime)?;
    let a = alpha_bar(alpha);
    let b = alpha_bar(alpha_prime);
    let mut out = Vec::with_capacity(4 * p_grid.len());
    for &p in p_grid {
        let lhs = ml_moment(MLParams::new(a, a)?, p)?;
        let rhs = ml_moment(MLParams::new(a / b, a)?, p * b)? * ml_moment(MLParams::new(b, b)?, p)?;
        out.push(MomentReport::exact("ml-factorization", p, lhs, rhs));

        let lhs = i_moment(alpha, p)?;
        let rhs = q_moment(alpha, alpha_prime, p)? * i_moment(alpha_prime, p)?;
        out.push(MomentReport::exact("forward", p, lhs, rhs));

        let lhs = j_moment(alpha_prime, p)?;
        let rhs = j_moment(alpha, p)? * q_moment(alpha, alpha_prime, p)?;
        out.push(MomentReport::exact("dual", p, lhs, rhs));

        let lhs = gamma_moment(2.0, p)?;
        let rhs = j_moment(alpha, p)? * i_moment(alpha, p)?;
        out.push(MomentReport::exact("gamma2", p, lhs, rhs));
    }
    Ok(out)
}

pub fn max_relative_error(reports: &[MomentReport]) -> f64 {
    reports
        .iter()
        .map(MomentReport::relative_error)
        .fold(0.0, f64::max)
}

/// `{0.5, 1.0, ..., 10.0}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=20).map(|i| 0.5 * i as f64).collect()
}
