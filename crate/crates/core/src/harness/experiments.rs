use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::manifest::{write_tables, CheckResult, RunManifest};
use super::stats::compare_distributions;
use super::table::Table;
use crate::chain::{grow, tree_probability, MarchalChain};
use crate::coupled::{coupling_comparison, leaf_counts_at, CoupledChain};
use crate::distributions::{
    alpha_bar, crp_table_distribution, crp_tables, default_p_grid, expected_two_leaf_distance,
    i_moment, identity_suite, max_relative_error, mean_and_stderr, IDENTITY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::fragmentation::{frag_profile, malthus_diagnostic, FragMeasure, FragProfile};
use crate::rng::{replica_seed, RngStream, SELECTION};
use crate::tree::{enumerate_labeled_shapes, GrowthTree, LabeledShape};

/// Stream labels for the two independent restaurant samples of `crp-compare`.
pub const CRP: &str = "crp";
pub const CRP_REPEAT: &str = "crp-repeat";

/// Thresholds, in units of `n^abar`, at which `frag-profile` cuts the tree.
pub const FRAG_THRESHOLDS: [f64; 13] = [
    0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0,
];

/// Data and verdicts of one experiment, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub checks: Vec<CheckResult>,
    pub replica_seeds: Vec<u64>,
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            Ok(pool.install(f))
        }
    }
}

/// Computes the experiment, writes its tables and `manifest.json` under
/// `config.out`.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let output = with_workers(workers, || compute_experiment(config))??;
    let files = write_tables(&config.out, &output.tables, config.format)?;
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        replica_seeds: output.replica_seeds,
        wall_time_secs: start.elapsed().as_secs_f64(),
        files,
        checks: output.checks,
    };
    manifest.write(&config.out)?;
    Ok(manifest)
}

pub fn compute_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.experiment.as_str() {
        "growth-law" => growth_law(config),
        "coupling-equality" => coupling_equality(config),
        "crp-compare" => crp_compare(config),
        "moment-identities" => moment_identities(config),
        "frag-profile" => frag_profile_experiment(config),
        "malthus" => malthus(config),
        "distance-scaling" => distance_scaling(config),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }
}

fn seeds(config: &ExperimentConfig) -> Vec<u64> {
    (0..config.replicas as u64)
        .map(|r| replica_seed(config.seed, r))
        .collect()
}

fn par_map<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

fn growth_law(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    if c.n > 4 {
        return Err(Error::param(
            "growth-law enumerates shapes with at most 5 leaves, so n <= 4",
        ));
    }
    let seeds = seeds(c);
    let drawn = par_map(&seeds, |s| {
        LabeledShape::from_tree(&grow(c.alpha, c.n, &mut RngStream::new(s, SELECTION))?)
    })?;
    let mut per_replica = Table::new("replicas", &["replica", "seed", "shape"]);
    let mut counts: BTreeMap<LabeledShape, u64> = enumerate_labeled_shapes(c.n + 1)?
        .into_iter()
        .map(|s| (s, 0))
        .collect();
    for (r, (shape, s)) in drawn.iter().zip(&seeds).enumerate() {
        per_replica.push(vec![r.into(), (*s).into(), shape.as_str().into()]);
        *counts.get_mut(shape).ok_or_else(|| {
            Error::invariant(format!("grown shape {shape} missing from enumeration"))
        })? += 1;
    }
    let reps = c.replicas as f64;
    let mut shapes = Table::new("shapes", &["shape", "exact", "count", "frequency", "z"]);
    let (mut norm, mut max_z) = (0.0, 0.0f64);
    for (shape, count) in &counts {
        let p = tree_probability(shape, c.alpha)?;
        norm += p;
        let f = *count as f64 / reps;
        let z = if p < 1.0 {
            (f - p) / (p * (1.0 - p) / reps).sqrt()
        } else {
            0.0
        };
        max_z = max_z.max(z.abs());
        shapes.push(vec![
            shape.as_str().into(),
            p.into(),
            (*count).into(),
            f.into(),
            z.into(),
        ]);
    }
    Ok(ExperimentOutput {
        tables: vec![shapes, per_replica],
        checks: vec![
            CheckResult::new(
                "normalization",
                (norm - 1.0).abs() < 1e-12,
                format!("sum of exact = {norm}"),
            ),
            CheckResult::new(
                "shape-frequencies",
                max_z < 4.0,
                format!("max |z| = {max_z:.3}"),
            ),
        ],
        replica_seeds: seeds,
    })
}

fn coupling_equality(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ap = c.require_alpha_prime()?;
    let seeds = seeds(c);
    let rows = par_map(&seeds, |s| coupling_comparison(c.alpha, ap, c.n, s))?;
    let mut t = Table::new(
        "coupling",
        &["replica", "seed", "vertices_equal", "leaves_equal"],
    );
    for (r, cmp) in rows.iter().enumerate() {
        t.push(vec![
            r.into(),
            cmp.seed.into(),
            cmp.vertices_equal.into(),
            cmp.leaves_equal.into(),
        ]);
    }
    let failures = rows.iter().filter(|c| !c.holds()).count();
    Ok(ExperimentOutput {
        tables: vec![t],
        checks: vec![CheckResult::new(
            "prune-equals-chain",
            failures == 0,
            format!("{failures} of {} replicas differ", rows.len()),
        )],
        replica_seeds: seeds,
    })
}

/// Per replica: `L(m + 1) - 1` from the coupled chain and two independent
/// table counts of an `(abar/abar', abar)` restaurant with `m = n` customers.
pub(crate) fn crp_samples(
    alpha: f64,
    alpha_prime: f64,
    customers: usize,
    seeds: &[u64],
) -> Result<Vec<(u64, u64, u64)>> {
    let (beta, theta) = (alpha_bar(alpha) / alpha_bar(alpha_prime), alpha_bar(alpha));
    par_map(seeds, |s| {
        let chain = leaf_counts_at(alpha, alpha_prime, &[customers + 1], s)?[0] - 1;
        let a = crp_tables(beta, theta, customers, &mut RngStream::new(s, CRP))?;
        let b = crp_tables(beta, theta, customers, &mut RngStream::new(s, CRP_REPEAT))?;
        Ok((chain as u64, a as u64, b as u64))
    })
}

fn crp_compare(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ap = c.require_alpha_prime()?;
    let seeds = seeds(c);
    let samples = crp_samples(c.alpha, ap, c.n, &seeds)?;
    let (tables, tv, floor) = crp_tables_and_tv(c.alpha, ap, c.n, &seeds, &samples)?;
    Ok(ExperimentOutput {
        tables,
        checks: vec![CheckResult::new(
            "chain-vs-crp",
            tv < 0.02,
            format!("tv = {tv:.5}, self-comparison floor = {floor:.5}"),
        )],
        replica_seeds: seeds,
    })
}

/// The `samples` and `histogram` tables, the chain-vs-restaurant distance
/// and the restaurant-vs-restaurant noise floor.
pub(crate) fn crp_tables_and_tv(
    alpha: f64,
    alpha_prime: f64,
    customers: usize,
    seeds: &[u64],
    samples: &[(u64, u64, u64)],
) -> Result<(Vec<Table>, f64, f64)> {
    let chain: Vec<u64> = samples.iter().map(|s| s.0).collect();
    let crp: Vec<u64> = samples.iter().map(|s| s.1).collect();
    let repeat: Vec<u64> = samples.iter().map(|s| s.2).collect();
    let cross = compare_distributions(&chain, &crp)?;
    let floor = compare_distributions(&crp, &repeat)?;
    let exact = crp_table_distribution(
        alpha_bar(alpha) / alpha_bar(alpha_prime),
        alpha_bar(alpha),
        customers,
    )?;
    let mut per_replica = Table::new(
        "samples",
        &["replica", "seed", "chain", "crp", "crp_repeat"],
    );
    for (r, (s, x)) in seeds.iter().zip(samples).enumerate() {
        per_replica.push(vec![
            r.into(),
            (*s).into(),
            x.0.into(),
            x.1.into(),
            x.2.into(),
        ]);
    }
    let mut repeat_counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &x in &repeat {
        *repeat_counts.entry(x).or_default() += 1;
    }
    let mut hist = Table::new(
        "histogram",
        &["value", "chain", "crp", "crp_repeat", "exact"],
    );
    for &(v, a, b) in &cross.rows {
        let p = exact.get(v as usize).copied().unwrap_or(0.0);
        let rep = repeat_counts.get(&v).copied().unwrap_or(0);
        hist.push(vec![v.into(), a.into(), b.into(), rep.into(), p.into()]);
    }
    Ok((
        vec![hist, per_replica],
        cross.tv_distance,
        floor.tv_distance,
    ))
}

fn moment_identities(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ap = c.require_alpha_prime()?;
    let reports = identity_suite(c.alpha, ap, &default_p_grid())?;
    let mut t = Table::new(
        "identities",
        &[
            "identity",
            "p",
            "analytic",
            "estimate",
            "stderr",
            "z",
            "relative_error",
        ],
    );
    for r in &reports {
        t.push(vec![
            r.identity.as_str().into(),
            r.p.into(),
            r.analytic.into(),
            r.estimate.into(),
            r.stderr.into(),
            r.z.into(),
            r.relative_error().into(),
        ]);
    }
    let worst = max_relative_error(&reports);
    Ok(ExperimentOutput {
        tables: vec![t],
        checks: vec![CheckResult::new(
            "identities",
            worst < IDENTITY_TOLERANCE,
            format!("max relative error = {worst:e}"),
        )],
        replica_seeds: Vec::new(),
    })
}

/// Leaf-measure and (with `alpha'`) projected-measure profiles of one
/// replica, with the two bookkeeping verdicts.
pub(crate) struct ReplicaProfiles {
    pub profiles: Vec<(&'static str, FragProfile)>,
    /// The `t = 0` row is one fragment of mass exactly `n/(n+1)`.
    pub exact_mass: bool,
    pub refines: bool,
}

pub(crate) fn replica_profiles(
    alpha: f64,
    alpha_prime: Option<f64>,
    n: usize,
    seed: u64,
) -> Result<ReplicaProfiles> {
    let scale = (n as f64).powf(alpha_bar(alpha));
    let colored = match alpha_prime {
        Some(ap) => {
            let mut chain = CoupledChain::new(alpha, ap, seed)?;
            chain.advance_to(n)?;
            Some(chain.into_state())
        }
        None => None,
    };
    let grown;
    let tree: &GrowthTree = match &colored {
        Some(c) => c.tree(),
        None => {
            grown = grow(alpha, n, &mut RngStream::new(seed, SELECTION))?;
            &grown
        }
    };
    let root = tree.leaf_order()[0];
    let leaves = frag_profile(tree, root, &FRAG_THRESHOLDS, scale, FragMeasure::Leaves)?;
    let whole = &leaves.rows[0].1;
    let exact_mass =
        whole.len() == 1 && whole[0].count == n && whole[0].mass == n as f64 / (n + 1) as f64;
    let mut refines = leaves.check_refinement(tree).is_ok();
    let mut out = vec![("leaves", leaves)];
    if let Some(c) = &colored {
        let projected = frag_profile(
            tree,
            root,
            &FRAG_THRESHOLDS,
            scale,
            FragMeasure::Projected(c),
        )?;
        refines &= projected.check_refinement(tree).is_ok();
        out.push(("projected", projected));
    }
    Ok(ReplicaProfiles {
        profiles: out,
        exact_mass,
        refines,
    })
}

fn frag_profile_experiment(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let seeds = seeds(c);
    let per = par_map(&seeds, |s| replica_profiles(c.alpha, c.alpha_prime, c.n, s))?;
    let mut t = Table::new(
        "profile",
        &["replica", "seed", "measure", "t", "fragment_rank", "mass"],
    );
    for (r, (rp, s)) in per.iter().zip(&seeds).enumerate() {
        for (measure, p) in &rp.profiles {
            for (th, frags) in &p.rows {
                for (rank, f) in frags.iter().enumerate() {
                    t.push(vec![
                        r.into(),
                        (*s).into(),
                        (*measure).into(),
                        (*th).into(),
                        (rank + 1).into(),
                        f.mass.into(),
                    ]);
                }
            }
        }
    }
    let bad_mass = per.iter().filter(|p| !p.exact_mass).count();
    let bad_refine = per.iter().filter(|p| !p.refines).count();
    Ok(ExperimentOutput {
        tables: vec![t],
        checks: vec![
            CheckResult::new(
                "mass-at-zero",
                bad_mass == 0,
                format!("{bad_mass} replicas off n/(n+1)"),
            ),
            CheckResult::new(
                "refinement",
                bad_refine == 0,
                format!("{bad_refine} replicas fail to refine"),
            ),
        ],
        replica_seeds: seeds,
    })
}

fn malthus(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ap = c.require_alpha_prime()?;
    let report = malthus_diagnostic(c.alpha, ap, c.n, c.replicas, c.seed)?;
    let seeds = seeds(c);
    let mut slopes = Table::new("slopes", &["replica", "seed", "slope"]);
    for (r, (s, slope)) in seeds.iter().zip(&report.slopes).enumerate() {
        slopes.push(vec![r.into(), (*s).into(), (*slope).into()]);
    }
    let mut summary = Table::new(
        "summary",
        &[
            "alpha",
            "alpha_prime",
            "target",
            "mean_slope",
            "stderr",
            "replicas",
        ],
    );
    summary.push(vec![
        c.alpha.into(),
        ap.into(),
        report.target.into(),
        report.mean_slope.into(),
        report.stderr.into(),
        c.replicas.into(),
    ]);
    let gap = (report.mean_slope - report.target).abs();
    Ok(ExperimentOutput {
        tables: vec![summary, slopes],
        checks: vec![CheckResult::new(
            "slope",
            gap < 0.05,
            format!(
                "mean slope {:.4} vs {:.4} (stderr {:.4})",
                report.mean_slope, report.target, report.stderr
            ),
        )],
        replica_seeds: seeds,
    })
}

/// `H` = distance between `A_0` and `A_1` at each increasing checkpoint of
/// one Marchal run on the selection stream of `seed`.
pub fn two_leaf_distances(alpha: f64, checkpoints: &[usize], seed: u64) -> Result<Vec<u32>> {
    if checkpoints.first() == Some(&0) || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints must be positive and increasing"));
    }
    let mut chain = MarchalChain::new(alpha)?;
    let mut rng = RngStream::new(seed, SELECTION);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        chain.advance_to(c, &mut rng)?;
        let t = chain.tree();
        out.push(t.distance(t.leaf_order()[0], t.leaf_order()[1])?);
    }
    Ok(out)
}

fn distance_scaling(c: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cps = c.checkpoints_or(vec![c.n, 2 * c.n, 4 * c.n]);
    let seeds = seeds(c);
    let hs = par_map(&seeds, |s| two_leaf_distances(c.alpha, &cps, s))?;
    let abar = alpha_bar(c.alpha);
    let scaled = |h: u32, n: usize| h as f64 / (c.alpha * (n as f64).powf(abar));
    let mut t = Table::new("distances", &["replica", "seed", "n", "H", "scaled"]);
    for (r, (row, s)) in hs.iter().zip(&seeds).enumerate() {
        for (&h, &n) in row.iter().zip(&cps) {
            t.push(vec![
                r.into(),
                (*s).into(),
                n.into(),
                h.into(),
                scaled(h, n).into(),
            ]);
        }
    }
    let limit = i_moment(c.alpha, 1.0)?;
    let mut summary = Table::new(
        "summary",
        &[
            "n",
            "mean_scaled",
            "stderr",
            "exact_mean_scaled",
            "limit",
            "mean_abs_step",
        ],
    );
    let mut steps = Vec::new();
    for (j, &n) in cps.iter().enumerate() {
        let xs: Vec<f64> = hs.iter().map(|row| scaled(row[j], n)).collect();
        let (mean, se) = mean_and_stderr(&xs);
        let exact = expected_two_leaf_distance(c.alpha, n)? / (c.alpha * (n as f64).powf(abar));
        let step = (j > 0).then(|| {
            hs.iter()
                .map(|row| (scaled(row[j], n) - scaled(row[j - 1], cps[j - 1])).abs())
                .sum::<f64>()
                / hs.len() as f64
        });
        steps.extend(step);
        summary.push(vec![
            n.into(),
            mean.into(),
            se.into(),
            exact.into(),
            limit.into(),
            step.into(),
        ]);
    }
    let decreasing = steps.windows(2).all(|w| w[1] < w[0]);
    let detail = if steps.len() < 2 {
        "fewer than three checkpoints, nothing to compare".to_string()
    } else {
        format!("mean |successive difference| = {steps:?}")
    };
    Ok(ExperimentOutput {
        tables: vec![summary, t],
        checks: vec![CheckResult::new("cauchy-contraction", decreasing, detail)],
        replica_seeds: seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::table::Format;

    fn config(
        experiment: &str,
        alpha_prime: Option<f64>,
        n: usize,
        replicas: usize,
    ) -> ExperimentConfig {
        ExperimentConfig {
            experiment: experiment.into(),
            alpha: 1.5,
            alpha_prime,
            n,
            replicas,
            checkpoints: Vec::new(),
            seed: 11,
            out: "unused".into(),
            format: Format::Csv,
        }
    }

    #[test]
    fn every_experiment_runs_small() {
        let cases = [
            config("growth-law", None, 3, 2000),
            config("coupling-equality", Some(2.0), 60, 20),
            config("moment-identities", Some(1.8), 1, 1),
            config("frag-profile", Some(1.8), 300, 4),
            config("frag-profile", None, 300, 4),
            config("distance-scaling", None, 200, 40),
        ];
        for c in &cases {
            let out = compute_experiment(c).unwrap();
            assert!(
                out.checks.iter().all(|k| k.passed),
                "{}: {:?}",
                c.experiment,
                out.checks
            );
            assert!(!out.tables.is_empty());
        }
    }

    #[test]
    fn parallelism_does_not_change_output() {
        let c = config("crp-compare", Some(1.8), 30, 300);
        let one = with_workers(Some(1), || compute_experiment(&c))
            .unwrap()
            .unwrap();
        let three = with_workers(Some(3), || compute_experiment(&c))
            .unwrap()
            .unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn missing_alpha_prime_and_bad_sizes() {
        assert!(compute_experiment(&config("malthus", None, 2000, 2)).is_err());
        assert!(compute_experiment(&config("growth-law", None, 9, 2)).is_err());
        let mut c = config("growth-law", None, 3, 2);
        c.experiment = "bogus".into();
        assert!(matches!(
            compute_experiment(&c),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn distances_match_exact_mean() {
        // E[H_n] at n = 50 from the closed form, against 4000 runs.
        let seeds: Vec<u64> = (0..4000).map(|r| replica_seed(5, r)).collect();
        let hs: Vec<f64> = seeds
            .iter()
            .map(|&s| two_leaf_distances(1.5, &[50], s).unwrap()[0] as f64)
            .collect();
        let (mean, se) = mean_and_stderr(&hs);
        let exact = expected_two_leaf_distance(1.5, 50).unwrap();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
        assert!(two_leaf_distances(1.5, &[10, 10], 0).is_err());
        assert_eq!(two_leaf_distances(1.5, &[1], 0).unwrap(), vec![1]);
    }
}
