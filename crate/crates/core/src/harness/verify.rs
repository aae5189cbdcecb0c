//! The acceptance suite: fourteen criteria, each at a quick and a full
//! scale. Quick scale shrinks the Monte-Carlo sizes for smoke runs and for
//! the determinism check.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::experiments::{
    crp_samples, crp_tables_and_tv, replica_profiles, two_leaf_distances, with_workers,
};
use super::manifest::{sha256_hex, FileDigest};
use super::table::{Format, Table};
use crate::chain::{
    distribution_check, grow, total_weight, tree_probability, MarchalChain, DRIFT_CHECK_PERIOD,
};
use crate::coupled::{
    coupling_comparison, leaf_counts_at, lipschitz_bound_check, nested_prune, AcceptanceTable,
    CoupledChain,
};
use crate::distributions::{
    alpha_bar, default_p_grid, expected_leaf_count, i_moment, identity_suite, max_relative_error,
    mean_and_stderr, ml_moment, MLParams,
};
use crate::error::{Error, Result};
use crate::fragmentation::{
    dissipative_extract, extract_with_trace, malthus_diagnostic, MassPartition,
};
use crate::rng::{derive_seed, replica_seed, RngStream, SELECTION, UNIFORMS};
use crate::tree::enumerate_labeled_shapes;

pub const DEFAULT_VERIFY_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Full,
}

impl Scale {
    fn pick(self, full: usize, quick: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Scale::Quick),
            "full" => Ok(Scale::Full),
            _ => Err(Error::param(format!(
                "unknown scale `{s}` (expected quick or full)"
            ))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Quick => "quick",
            Scale::Full => "full",
        })
    }
}

pub const CRITERIA: [&str; 14] = [
    "exact normalization",
    "growth-law reproduction",
    "weight invariant",
    "coupling equality",
    "blue-weight identity",
    "CRP oracle",
    "moment identities",
    "Mittag-Leffler mean",
    "Malthusian exponent",
    "distance scaling",
    "pruning Lipschitz bound",
    "nesting",
    "fragmentation bookkeeping",
    "byte-determinism",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub passed: bool,
    pub detail: String,
    pub tables: Vec<Table>,
}

impl CriterionResult {
    pub fn title(&self) -> &'static str {
        CRITERIA[self.id - 1]
    }

    /// `PASS  3 weight invariant: ...`
    pub fn line(&self) -> String {
        format!(
            "{}  {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title(),
            self.detail
        )
    }
}

fn result(id: usize, passed: bool, detail: String, tables: Vec<Table>) -> Result<CriterionResult> {
    Ok(CriterionResult {
        id,
        passed,
        detail,
        tables,
    })
}

fn seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|r| replica_seed(master, r)).collect()
}

/// Runs criterion `id` (1 to 14) on the current thread pool.
pub fn run_criterion(id: usize, scale: Scale, seed: u64) -> Result<CriterionResult> {
    let seed = derive_seed(seed, id as u64, "criterion");
    match id {
        1 => normalization(),
        2 => growth_law(scale, seed),
        3 => weight_invariant(scale, seed),
        4 => coupling_equality(scale, seed),
        5 => blue_weight_identity(scale, seed),
        6 => crp_oracle(seed),
        7 => moment_identities(),
        8 => ml_mean(scale, seed),
        9 => malthus(scale, seed),
        10 => distance_scaling(scale, seed),
        11 => lipschitz(scale, seed),
        12 => nesting(scale, seed),
        13 => fragmentation(scale, seed),
        14 => determinism(seed),
        _ => Err(Error::param(format!(
            "no criterion {id}; they run from 1 to 14"
        ))),
    }
}

fn normalization() -> Result<CriterionResult> {
    let mut t = Table::new(
        "normalization",
        &["alpha", "leaves", "shapes", "sum", "error"],
    );
    let mut worst = 0.0f64;
    for alpha in [1.3, 1.5, 1.9, 2.0] {
        for leaves in [4, 5] {
            let shapes = enumerate_labeled_shapes(leaves)?;
            let sum = shapes
                .iter()
                .map(|s| tree_probability(s, alpha))
                .sum::<Result<f64>>()?;
            worst = worst.max((sum - 1.0).abs());
            t.push(vec![
                alpha.into(),
                leaves.into(),
                shapes.len().into(),
                sum.into(),
                (sum - 1.0).into(),
            ]);
        }
    }
    result(
        1,
        worst < 1e-12,
        format!("max |sum - 1| = {worst:e}"),
        vec![t],
    )
}

fn growth_law(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let reps = scale.pick(100_000, 10_000);
    let report = distribution_check(1.5, 4, reps, seed)?;
    let mut t = Table::new("shapes", &["shape", "exact", "count", "frequency", "z"]);
    let mut exact_ok = report.rows.len() == 4;
    for r in &report.rows {
        exact_ok &= (r.exact - 0.25).abs() < 1e-12;
        t.push(vec![
            r.shape.as_str().into(),
            r.exact.into(),
            r.count.into(),
            r.frequency.into(),
            r.z.into(),
        ]);
    }
    let z = report.max_abs_z();
    result(
        2,
        exact_ok && z < 4.0,
        format!(
            "{reps} replicas, four shapes of exact probability 1/4: {exact_ok}, max |z| = {z:.3}"
        ),
        vec![t],
    )
}

fn weight_invariant(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let steps = scale.pick(1_000_000, 100_000);
    let period = DRIFT_CHECK_PERIOD as usize;
    let rows: Vec<Vec<(f64, usize, f64, f64)>> = [1.2f64, 1.7, 2.0]
        .par_iter()
        .map(|&alpha| {
            let mut rng = RngStream::new(derive_seed(seed, alpha.to_bits(), "alpha"), SELECTION);
            let mut chain = MarchalChain::new(alpha)?;
            let mut out = Vec::new();
            let mut next = period.min(steps);
            loop {
                chain.advance_to(next, &mut rng)?;
                out.push((
                    alpha,
                    next,
                    total_weight(chain.tree()),
                    chain.index().total(),
                ));
                if next == steps {
                    break;
                }
                next = (next + period).min(steps);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(
        "checkpoints",
        &[
            "alpha",
            "n",
            "recomputed",
            "index_total",
            "expected",
            "relative_error",
        ],
    );
    let mut worst = 0.0f64;
    let mut count = 0;
    for (alpha, n, recomputed, index) in rows.into_iter().flatten() {
        let expected = n as f64 * alpha - 1.0;
        let rel = ((recomputed - expected).abs()).max((index - expected).abs()) / expected;
        worst = worst.max(rel);
        count += 1;
        t.push(vec![
            alpha.into(),
            n.into(),
            recomputed.into(),
            index.into(),
            expected.into(),
            rel.into(),
        ]);
    }
    result(
        3,
        worst < 1e-9,
        format!("{count} checkpoints over {steps} steps, max relative error = {worst:e}"),
        vec![t],
    )
}

fn coupling_equality(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let count = scale.pick(1000, 100);
    let mut t = Table::new(
        "coupling",
        &[
            "alpha",
            "alpha_prime",
            "replica",
            "seed",
            "vertices_equal",
            "leaves_equal",
        ],
    );
    let mut failures = 0;
    for (alpha, ap) in [(1.3, 1.6f64), (1.5, 2.0)] {
        let s = seeds(derive_seed(seed, ap.to_bits(), "pair"), count);
        let rows = s
            .par_iter()
            .map(|&x| coupling_comparison(alpha, ap, 200, x))
            .collect::<Result<Vec<_>>>()?;
        for (r, c) in rows.iter().enumerate() {
            failures += usize::from(!c.holds());
            t.push(vec![
                alpha.into(),
                ap.into(),
                r.into(),
                c.seed.into(),
                c.vertices_equal.into(),
                c.leaves_equal.into(),
            ]);
        }
    }
    result(
        4,
        failures == 0,
        format!("{failures} mismatches over {} seeds at n = 200", 2 * count),
        vec![t],
    )
}

const PAIRS: [(f64, f64); 4] = [(1.3, 1.6), (1.5, 1.8), (1.5, 2.0), (1.2, 1.9)];

fn blue_weight_identity(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let runs = scale.pick(100, 20);
    let n = 1000;
    let s = seeds(seed, runs);
    let rows = s
        .par_iter()
        .enumerate()
        .map(|(r, &x)| {
            let (alpha, ap) = PAIRS[r % PAIRS.len()];
            let mut chain = CoupledChain::new(alpha, ap, x)?;
            let mut worst = 0.0f64;
            loop {
                let (lhs, rhs) = chain.state().blue_weight_identity();
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                if chain.step_count() == n {
                    break;
                }
                chain.step()?;
            }
            Ok((alpha, ap, chain.state().blue_leaf_count(), worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "identity",
        &[
            "run",
            "seed",
            "alpha",
            "alpha_prime",
            "final_L",
            "max_error",
        ],
    );
    let mut worst = 0.0f64;
    for (r, ((alpha, ap, l, w), x)) in rows.iter().zip(&s).enumerate() {
        worst = worst.max(*w);
        t.push(vec![
            r.into(),
            (*x).into(),
            (*alpha).into(),
            (*ap).into(),
            (*l).into(),
            (*w).into(),
        ]);
    }
    result(
        5,
        worst < 1e-9,
        format!("{runs} runs to n = {n}, checked at every step, max relative error = {worst:e}"),
        vec![t],
    )
}

fn crp_oracle(seed: u64) -> Result<CriterionResult> {
    let reps = 100_000;
    let s = seeds(seed, reps);
    let samples = crp_samples(1.5, 1.8, 50, &s)?;
    let (tables, tv, floor) = crp_tables_and_tv(1.5, 1.8, 50, &s, &samples)?;
    result(
        6,
        tv < 0.02,
        format!(
            "{reps} draws each, tv(L(51) - 1, crp) = {tv:.5}, self-comparison floor = {floor:.5}"
        ),
        tables,
    )
}

fn moment_identities() -> Result<CriterionResult> {
    let mut t = Table::new(
        "grid",
        &["alpha", "alpha_prime", "rows", "max_relative_error"],
    );
    let mut worst = 0.0f64;
    let p = default_p_grid();
    for alpha in [1.1, 1.2, 1.3, 1.4, 1.5] {
        for ap in [1.6, 1.7, 1.8, 1.9, 2.0] {
            let reports = identity_suite(alpha, ap, &p)?;
            let e = max_relative_error(&reports);
            worst = worst.max(e);
            t.push(vec![
                alpha.into(),
                ap.into(),
                reports.len().into(),
                e.into(),
            ]);
        }
    }
    result(
        7,
        worst < 1e-10,
        format!("25 pairs, max relative error = {worst:e}"),
        vec![t],
    )
}

/// `abar' G(abar) / G(abar (1 + 1/abar'))`, the limit mean of `L(n)/n^(abar/abar')`.
pub fn ml_limit_mean(alpha: f64, alpha_prime: f64) -> f64 {
    let (a, b) = (alpha_bar(alpha), alpha_bar(alpha_prime));
    b * gamma(a) / gamma(a * (1.0 + 1.0 / b))
}

fn ml_mean(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let (alpha, ap) = (1.5, 2.0);
    let reps = scale.pick(10_000, 200);
    let n = scale.pick(100_000, 10_000);
    let mid = n / 10;
    let beta = alpha_bar(alpha) / alpha_bar(ap);
    let s = seeds(seed, reps);
    let counts = s
        .par_iter()
        .map(|&x| leaf_counts_at(alpha, ap, &[mid, n], x))
        .collect::<Result<Vec<_>>>()?;
    let scaled = |l: usize, m: usize| l as f64 / (m as f64).powf(beta);
    let xs_mid: Vec<f64> = counts.iter().map(|c| scaled(c[0], mid)).collect();
    let xs: Vec<f64> = counts.iter().map(|c| scaled(c[1], n)).collect();
    let (mean_mid, se_mid) = mean_and_stderr(&xs_mid);
    let (mean, se) = mean_and_stderr(&xs);
    let drift = (mean_mid - mean).abs();
    let combined = se + drift;
    let target = ml_limit_mean(alpha, ap);
    let via_moments = ml_moment(MLParams::leaf_count_limit(alpha, ap)?, 1.0)?;
    let mut summary = Table::new("summary", &["n", "mean", "stderr", "exact_mean", "limit"]);
    for (m, mu, e) in [(mid, mean_mid, se_mid), (n, mean, se)] {
        let exact = expected_leaf_count(alpha, ap, m)? / (m as f64).powf(beta);
        summary.push(vec![
            m.into(),
            mu.into(),
            e.into(),
            exact.into(),
            target.into(),
        ]);
    }
    let mut per = Table::new("replicas", &["replica", "seed", "L_mid", "L_final"]);
    for (r, (c, x)) in counts.iter().zip(&s).enumerate() {
        per.push(vec![r.into(), (*x).into(), c[0].into(), c[1].into()]);
    }
    let gap = (mean - target).abs();
    result(
        8,
        gap < 3.0 * combined && (via_moments - target).abs() < 1e-12,
        format!(
            "{reps} replicas, mean at n = {n} is {mean:.5} vs {target:.5}; |gap| = {gap:.5}, stderr = {se:.5}, drift from n = {mid} = {drift:.5}, 3 combined = {:.5}",
            3.0 * combined
        ),
        vec![summary, per],
    )
}

fn malthus(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let reps = scale.pick(200, 20);
    let n = scale.pick(100_000, 10_000);
    let mut t = Table::new(
        "slopes",
        &[
            "alpha",
            "alpha_prime",
            "target",
            "mean_slope",
            "stderr",
            "replicas",
        ],
    );
    let mut passed = true;
    let mut details = Vec::new();
    for (alpha, ap) in [(1.5, 2.0f64), (1.2, 1.6)] {
        let r = malthus_diagnostic(alpha, ap, n, reps, derive_seed(seed, ap.to_bits(), "pair"))?;
        let gap = (r.mean_slope - r.target).abs();
        passed &= gap < 0.05;
        details.push(format!(
            "({alpha}, {ap}) slope {:.4} vs {:.4}",
            r.mean_slope, r.target
        ));
        t.push(vec![
            alpha.into(),
            ap.into(),
            r.target.into(),
            r.mean_slope.into(),
            r.stderr.into(),
            reps.into(),
        ]);
    }
    result(
        9,
        passed,
        format!("{reps} replicas to n = {n}: {}", details.join(", ")),
        vec![t],
    )
}

fn distance_scaling(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let alpha = 1.5;
    let abar = alpha_bar(alpha);
    let reps = scale.pick(500, 100);
    let n0 = scale.pick(1000, 100);
    let n1 = 10 * n0;
    let last = 10 * n1;
    let cps = [n0, 4 * n0, n1, 4 * n1, last];
    let s = seeds(seed, reps);
    let hs = s
        .par_iter()
        .map(|&x| two_leaf_distances(alpha, &cps, x))
        .collect::<Result<Vec<_>>>()?;
    let x = |h: u32, n: usize| h as f64 / (n as f64).powf(abar);
    let step = |j: usize| {
        hs.iter()
            .map(|h| (x(h[j + 1], cps[j + 1]) - x(h[j], cps[j])).abs())
            .sum::<f64>()
            / reps as f64
    };
    let (d0, d1) = (step(0), step(2));
    let finals: Vec<f64> = hs.iter().map(|h| x(h[4], last) / alpha).collect();
    let (mean, se) = mean_and_stderr(&finals);
    let target = i_moment(alpha, 1.0)?;
    let mut per = Table::new("distances", &["replica", "seed", "n", "H"]);
    for (r, (h, sd)) in hs.iter().zip(&s).enumerate() {
        for (&hv, &n) in h.iter().zip(&cps) {
            per.push(vec![r.into(), (*sd).into(), n.into(), hv.into()]);
        }
    }
    let mut summary = Table::new("summary", &["quantity", "value"]);
    for (k, v) in [
        ("step_small", d0),
        ("step_large", d1),
        ("mean_final", mean),
        ("stderr_final", se),
        ("i_moment", target),
    ] {
        summary.push(vec![k.into(), v.into()]);
    }
    result(
        10,
        d1 < d0 && (mean - target).abs() < 3.0 * se,
        format!(
            "{reps} replicas; mean |step| {d0:.5} at n = {n0}, {d1:.5} at n = {n1}; H/(alpha n^abar) at n = {last}: {mean:.5} vs {target:.5} (stderr {se:.5})"
        ),
        vec![summary, per],
    )
}

/// Stream label for the random prefix length of the Lipschitz instances.
const PREFIX: &str = "prefix";

fn lipschitz(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let count = scale.pick(500, 100);
    let n = 300;
    let s = seeds(seed, count);
    let rows = s
        .par_iter()
        .enumerate()
        .map(|(r, &x)| {
            let (alpha, ap) = PAIRS[r % PAIRS.len()];
            let tree = grow(alpha, n, &mut RngStream::new(x, SELECTION))?;
            let k = 1 + RngStream::new(x, PREFIX).index_below(n);
            let rep = lipschitz_bound_check(
                &tree,
                k,
                &AcceptanceTable::new(alpha, ap)?,
                &RngStream::new(x, UNIFORMS),
            )?;
            Ok((alpha, ap, k, rep))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "instances",
        &[
            "instance",
            "seed",
            "alpha",
            "alpha_prime",
            "k",
            "hausdorff",
            "radius",
        ],
    );
    let mut failures = 0;
    for (r, ((alpha, ap, k, rep), x)) in rows.iter().zip(&s).enumerate() {
        failures += usize::from(!rep.holds());
        t.push(vec![
            r.into(),
            (*x).into(),
            (*alpha).into(),
            (*ap).into(),
            (*k).into(),
            rep.hausdorff.into(),
            rep.radius.into(),
        ]);
    }
    result(
        11,
        failures == 0,
        format!("{failures} violations over {count} instances at n = {n}"),
        vec![t],
    )
}

fn nesting(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let count = scale.pick(500, 100);
    let (alpha, n) = (1.3, 500);
    let primes = [1.5, 1.8, 2.0];
    let s = seeds(seed, count);
    let rows = s
        .par_iter()
        .map(|&x| {
            let tree = grow(alpha, n, &mut RngStream::new(x, SELECTION))?;
            match nested_prune(&tree, n, &primes, &RngStream::new(x, UNIFORMS)) {
                Ok(rs) => Ok(Some((
                    rs.iter().map(|r| r.kept_leaves.len()).collect::<Vec<_>>(),
                    rs[2].is_binary(),
                ))),
                Err(Error::Invariant(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "nesting",
        &[
            "replica",
            "seed",
            "nested",
            "leaves_1.5",
            "leaves_1.8",
            "leaves_2.0",
            "binary",
        ],
    );
    let (mut broken, mut nonbinary) = (0, 0);
    for (r, (row, x)) in rows.iter().zip(&s).enumerate() {
        match row {
            Some((sizes, binary)) => {
                nonbinary += usize::from(!binary);
                t.push(vec![
                    r.into(),
                    (*x).into(),
                    true.into(),
                    sizes[0].into(),
                    sizes[1].into(),
                    sizes[2].into(),
                    (*binary).into(),
                ]);
            }
            None => {
                broken += 1;
                t.push(vec![
                    r.into(),
                    (*x).into(),
                    false.into(),
                    None.into(),
                    None.into(),
                    None.into(),
                    None.into(),
                ]);
            }
        }
    }
    result(
        12,
        broken == 0 && nonbinary == 0,
        format!("{count} seeds at n = {n}: {broken} inclusion failures, {nonbinary} non-binary trees at alpha' = 2"),
        vec![t],
    )
}

/// Stream label for the random partitions fed to the extraction rule.
const PARTITIONS: &str = "partitions";

fn fragmentation(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let profiles = scale.pick(50, 10);
    let n = scale.pick(2000, 500);
    let s = seeds(derive_seed(seed, 0, "profiles"), profiles);
    let verdicts = s
        .par_iter()
        .map(|&x| replica_profiles(1.5, Some(1.8), n, x).map(|p| (p.exact_mass, p.refines)))
        .collect::<Result<Vec<_>>>()?;
    let mut prof = Table::new(
        "profiles",
        &["replica", "seed", "exact_mass_at_zero", "refines"],
    );
    for (r, ((m, f), x)) in verdicts.iter().zip(&s).enumerate() {
        prof.push(vec![r.into(), (*x).into(), (*m).into(), (*f).into()]);
    }
    let mass_ok = verdicts.iter().all(|v| v.0);
    let refine_ok = verdicts.iter().all(|v| v.1);

    let binary_draws = scale.pick(10_000, 2000);
    let mut rng = RngStream::new(seed, PARTITIONS);
    let mut binary_ok = true;
    for i in 0..binary_draws {
        let len = 2 + rng.index_below(7);
        let raw: Vec<f64> = (0..len).map(|_| rng.acceptance_uniform()).collect();
        let total: f64 = raw.iter().sum();
        let part = MassPartition::new(raw.iter().map(|x| x / total).collect())?;
        let alpha = [1.2, 1.5, 1.8][i % 3];
        binary_ok &= dissipative_extract(&part, alpha, 2.0, &mut rng)?.len() == 2;
    }

    let draws = scale.pick(100_000, 20_000);
    let table = AcceptanceTable::new(1.5, 1.8)?;
    let s3 = MassPartition::new(vec![0.4, 0.3, 0.3])?;
    let mut rng = RngStream::new(seed, UNIFORMS);
    let mut kept = 0usize;
    for _ in 0..draws {
        kept += usize::from(extract_with_trace(&s3, &table, &mut rng)?.kept[2]);
    }
    let rate = kept as f64 / draws as f64;
    let se = (0.25 * 0.75 / draws as f64).sqrt();
    let rate_ok = (rate - 0.25).abs() < 3.0 * se;
    let mut ext = Table::new("extraction", &["quantity", "value"]);
    ext.push(vec!["binary_draws".into(), binary_draws.into()]);
    ext.push(vec!["binary_all_two".into(), binary_ok.into()]);
    ext.push(vec!["third_draws".into(), draws.into()]);
    ext.push(vec!["third_keep_rate".into(), rate.into()]);
    ext.push(vec!["third_stderr".into(), se.into()]);
    result(
        13,
        mass_ok && refine_ok && binary_ok && rate_ok,
        format!(
            "{profiles} trees at n = {n}: exact mass {mass_ok}, refinement {refine_ok}; binary extraction {binary_ok} over {binary_draws}; third keep rate {rate:.5} vs 0.25 (stderr {se:.5})"
        ),
        vec![prof, ext],
    )
}

/// Rendered tables of criteria 1 to 13, in order, keyed by file name.
fn rendered(results: &[CriterionResult], format: Format) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = results
        .iter()
        .flat_map(|r| {
            r.tables.iter().map(move |t| {
                (
                    format!("c{:02}-{}", r.id, t.file_name(format)),
                    t.render(format),
                )
            })
        })
        .collect();
    let mut report = Table::new("report", &["criterion", "title", "passed", "detail"]);
    for r in results {
        report.push(vec![
            r.id.into(),
            r.title().into(),
            r.passed.into(),
            r.detail.as_str().into(),
        ]);
    }
    out.push((report.file_name(format), report.render(format)));
    out
}

/// Workers used by the second run of the determinism criterion.
pub const DETERMINISM_WORKERS: usize = 4;

fn determinism(seed: u64) -> Result<CriterionResult> {
    let digests = |workers: usize| -> Result<Vec<(String, String)>> {
        let results = with_workers(Some(workers), || {
            (1..=13)
                .map(|id| run_criterion(id, Scale::Quick, seed))
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(rendered(&results, Format::Csv)
            .into_iter()
            .map(|(name, body)| (name, sha256_hex(body.as_bytes())))
            .collect())
    };
    let one = digests(1)?;
    let many = digests(DETERMINISM_WORKERS)?;
    let mut t = Table::new("digests", &["file", "one_worker", "many_workers"]);
    let mut same = one.len() == many.len();
    for ((f, a), (g, b)) in one.iter().zip(&many) {
        same &= f == g && a == b;
        t.push(vec![
            f.as_str().into(),
            a.as_str().into(),
            b.as_str().into(),
        ]);
    }
    result(
        14,
        same,
        format!(
            "quick-scale suite with 1 and {DETERMINISM_WORKERS} workers: {} files, digests {}",
            one.len(),
            if same { "identical" } else { "differ" }
        ),
        vec![t],
    )
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub scale: Scale,
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    pub files: Vec<FileDigest>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Runs the selected criteria (all when `only` is empty) on `workers`
/// threads and, with `out`, writes every table there.
pub fn verify(
    scale: Scale,
    seed: u64,
    workers: Option<usize>,
    only: &[usize],
    out: Option<(&Path, Format)>,
) -> Result<VerifyReport> {
    let ids: Vec<usize> = if only.is_empty() {
        (1..=14).collect()
    } else {
        only.to_vec()
    };
    let results = with_workers(workers, || {
        ids.iter()
            .map(|&id| run_criterion(id, scale, seed))
            .collect::<Result<Vec<_>>>()
    })??;
    let files = match out {
        Some((dir, format)) => {
            std::fs::create_dir_all(dir)?;
            let mut files = Vec::new();
            for (name, body) in rendered(&results, format) {
                std::fs::write(dir.join(&name), &body)?;
                files.push(FileDigest {
                    path: name,
                    sha256: sha256_hex(body.as_bytes()),
                });
            }
            files
        }
        None => Vec::new(),
    };
    Ok(VerifyReport {
        scale,
        seed,
        results,
        files,
    })
}
