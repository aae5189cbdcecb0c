use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nested_stable::chain::MarchalChain;
use nested_stable::coupled::{prune, AcceptanceTable, ColoredTree, CoupledChain};
use nested_stable::distributions::alpha_bar;
use nested_stable::fragmentation::{frag_profile, FragMeasure};
use nested_stable::harness::verify::{self, Scale, CRITERIA, DEFAULT_VERIFY_SEED};
use nested_stable::harness::{run_experiment, Format, PartialConfig, Table, FRAG_THRESHOLDS};
use nested_stable::rng::{RngStream, SELECTION, UNIFORMS};
use nested_stable::tree::{GrowthTree, TreeDocument};
use nested_stable::Error;

const RUN_HELP: &str = "\
Experiments and the tables they write (one file per table, plus manifest.json):
  growth-law         shapes: shape,exact,count,frequency,z
                     replicas: replica,seed,shape               (n <= 4)
  coupling-equality  coupling: replica,seed,vertices_equal,leaves_equal
  crp-compare        histogram: value,chain,crp,crp_repeat,exact
                     samples: replica,seed,chain,crp,crp_repeat (n customers)
  moment-identities  identities: identity,p,analytic,estimate,stderr,z,relative_error
  frag-profile       profile: replica,seed,measure,t,fragment_rank,mass
  malthus            summary: alpha,alpha_prime,target,mean_slope,stderr,replicas
                     slopes: replica,seed,slope                 (n >= 1000)
  distance-scaling   summary: n,mean_scaled,stderr,exact_mean_scaled,limit,mean_abs_step
                     distances: replica,seed,n,H,scaled

The config file is TOML with the keys experiment, alpha, alpha_prime, n,
replicas, checkpoints, seed, out and format. Flags override file values.
JSON output holds the same rows as arrays of objects.
Exit status: 0 when every check passed, 1 on a failed check or invariant,
2 on a usage error.";

#[derive(Parser)]
#[command(
    name = "nested-stable",
    version,
    about = "Nested stable random trees: growth, pruning, fragmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow Marchal's tree; JSON tree document or CSV attachment log
    /// (step,kind,degree_before,new_vertex_id).
    Grow(GrowArgs),
    /// Prune a tree document to its alpha' subtree; JSON summary or CSV
    /// decisions (leaf,attach,d,d_prime,u,kept).
    Prune(PruneArgs),
    /// Run the two-color coupled chain; JSON colored document or CSV steps
    /// (step,kind,d,d_prime,u,blue,L).
    Couple(CoupleArgs),
    /// Fragment masses above heights t * scale; CSV or JSON rows
    /// (measure,t,fragment_rank,top,count,mass).
    Frag(FragArgs),
    /// Run the acceptance suite and print one line per criterion.
    Verify(VerifyArgs),
    /// Run a named experiment.
    #[command(after_help = RUN_HELP)]
    Run(RunArgs),
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct GrowArgs {
    #[arg(long)]
    alpha: f64,
    /// Number of steps; the tree has n + 1 leaves.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PruneArgs {
    /// Tree document produced by `grow`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha_prime: f64,
    /// Prune the prefix A_0..A_k; defaults to the whole tree.
    #[arg(long)]
    k: Option<usize>,
    /// Seed of the uniform stream.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CoupleArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    alpha_prime: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FragArgs {
    /// Tree or colored tree document; otherwise a tree is grown from
    /// --alpha, --n and --seed (coupled when --alpha-prime is given).
    #[arg(long, conflicts_with_all = ["alpha", "n", "seed", "alpha_prime"])]
    input: Option<PathBuf>,
    #[arg(long, requires_all = ["n", "seed"])]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_prime: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated thresholds; default 0, 0.25, ..., 3.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    /// Height unit; default n^(1 - 1/alpha).
    #[arg(long)]
    scale: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "full")]
    scale: Scale,
    #[arg(long, default_value_t = DEFAULT_VERIFY_SEED)]
    seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<usize>,
    /// Directory for the criterion tables and report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_prime: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Comma-separated checkpoint grid.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
}

/// How a command ended when it did not fail outright.
enum Outcome {
    Ok,
    ChecksFailed,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Grow(a) => grow(a),
        Command::Prune(a) => prune_cmd(a),
        Command::Couple(a) => couple(a),
        Command::Frag(a) => frag(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(output: &Output, body: &str) -> Result<(), Error> {
    match &output.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, body)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn grow(a: GrowArgs) -> Result<Outcome, Error> {
    let mut chain = MarchalChain::new(a.alpha)?;
    let mut rng = RngStream::new(a.seed, SELECTION);
    let mut log = Table::new(
        "attachments",
        &["step", "kind", "degree_before", "new_vertex_id"],
    );
    while chain.tree().step_count() < a.n {
        let r = chain.step(&mut rng)?;
        log.push(vec![
            r.step.into(),
            r.kind.as_str().into(),
            r.degree_before.into(),
            r.new_leaf.index().into(),
        ]);
    }
    let body = match a.output.format {
        Format::Json => chain.tree().to_json(),
        Format::Csv => log.to_csv(),
    };
    emit(&a.output, &body)?;
    Ok(Outcome::Ok)
}

fn prune_cmd(a: PruneArgs) -> Result<Outcome, Error> {
    let tree = GrowthTree::from_json(&read(&a.input)?)?;
    let k = a.k.unwrap_or(tree.step_count());
    let table = AcceptanceTable::new(tree.alpha(), a.alpha_prime)?;
    let r = prune(&tree, k, &table, &mut RngStream::new(a.seed, UNIFORMS))?;
    let body = match a.output.format {
        Format::Json => {
            let blue: Vec<usize> = r.blue_vertices().iter().map(|v| v.index()).collect();
            let mut s = serde_json::json!({
                "alpha": tree.alpha(),
                "alpha_prime": a.alpha_prime,
                "k": k,
                "kept_leaves": r.kept_leaves,
                "blue_vertices": blue,
            })
            .to_string();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new(
                "decisions",
                &["leaf", "attach", "d", "d_prime", "u", "kept"],
            );
            for d in &r.decisions {
                t.push(vec![
                    d.leaf_index.into(),
                    d.attach.index().into(),
                    d.d.into(),
                    d.d_prime.into(),
                    d.u.into(),
                    d.kept.into(),
                ]);
            }
            t.to_csv()
        }
    };
    emit(&a.output, &body)?;
    Ok(Outcome::Ok)
}

fn couple(a: CoupleArgs) -> Result<Outcome, Error> {
    let mut chain = CoupledChain::new(a.alpha, a.alpha_prime, a.seed)?;
    let mut t = Table::new("steps", &["step", "kind", "d", "d_prime", "u", "blue", "L"]);
    while chain.step_count() < a.n {
        let r = chain.step()?;
        t.push(vec![
            r.attachment.step.into(),
            r.attachment.kind.as_str().into(),
            r.d.into(),
            r.d_prime.into(),
            r.u.into(),
            r.blue.into(),
            chain.state().blue_leaf_count().into(),
        ]);
    }
    chain.state().check_blue_weight_identity()?;
    let body = match a.output.format {
        Format::Json => chain.state().to_json(),
        Format::Csv => t.to_csv(),
    };
    emit(&a.output, &body)?;
    Ok(Outcome::Ok)
}

fn frag(a: FragArgs) -> Result<Outcome, Error> {
    let (tree, colored) = match (&a.input, a.alpha) {
        (Some(path), _) => {
            let doc = TreeDocument::from_json(&read(path)?)?;
            if doc.alpha_prime.is_some() {
                let c = ColoredTree::from_document(&doc)?;
                (c.tree().clone(), Some(c))
            } else {
                (doc.to_tree()?, None)
            }
        }
        (None, Some(alpha)) => {
            let (n, seed) = (a.n.unwrap_or(1), a.seed.unwrap_or(0));
            match a.alpha_prime {
                Some(ap) => {
                    let mut chain = CoupledChain::new(alpha, ap, seed)?;
                    chain.advance_to(n)?;
                    let c = chain.into_state();
                    (c.tree().clone(), Some(c))
                }
                None => {
                    let mut chain = MarchalChain::new(alpha)?;
                    chain.advance_to(n, &mut RngStream::new(seed, SELECTION))?;
                    (chain.into_tree(), None)
                }
            }
        }
        (None, None) => return Err(Error::InvalidInput("frag needs --input or --alpha".into())),
    };
    let thresholds = if a.thresholds.is_empty() {
        FRAG_THRESHOLDS.to_vec()
    } else {
        a.thresholds.clone()
    };
    let scale = a
        .scale
        .unwrap_or_else(|| (tree.step_count() as f64).powf(alpha_bar(tree.alpha())));
    let root = tree.leaf_order()[0];
    let mut measures = vec![("leaves", FragMeasure::Leaves)];
    if let Some(c) = &colored {
        measures.push(("projected", FragMeasure::Projected(c)));
    }
    let mut t = Table::new(
        "profile",
        &["measure", "t", "fragment_rank", "top", "count", "mass"],
    );
    for (name, m) in measures {
        let p = frag_profile(&tree, root, &thresholds, scale, m)?;
        p.check_refinement(&tree)?;
        for (th, frags) in &p.rows {
            for (rank, f) in frags.iter().enumerate() {
                t.push(vec![
                    name.into(),
                    (*th).into(),
                    (rank + 1).into(),
                    f.top.index().into(),
                    f.count.into(),
                    f.mass.into(),
                ]);
            }
        }
    }
    emit(&a.output, &t.render(a.output.format))?;
    Ok(Outcome::Ok)
}

fn verify_cmd(a: VerifyArgs) -> Result<Outcome, Error> {
    if let Some(&bad) = a.criteria.iter().find(|&&c| c == 0 || c > CRITERIA.len()) {
        return Err(Error::Parameter(format!(
            "no criterion {bad}; they run from 1 to {}",
            CRITERIA.len()
        )));
    }
    let out = a.out.as_deref().map(|d| (d, a.format));
    let report = verify::verify(a.scale, a.seed, a.workers, &a.criteria, out)?;
    for r in &report.results {
        println!("{}", r.line());
    }
    let failed = report.results.iter().filter(|r| !r.passed).count();
    println!(
        "verify ({} scale, seed {}): {} passed, {failed} failed",
        report.scale,
        report.seed,
        report.results.len() - failed
    );
    Ok(if report.passed() {
        Outcome::Ok
    } else {
        Outcome::ChecksFailed
    })
}

fn run(a: RunArgs) -> Result<Outcome, Error> {
    let file = match &a.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        experiment: a.experiment,
        alpha: a.alpha,
        alpha_prime: a.alpha_prime,
        n: a.n,
        replicas: a.replicas,
        checkpoints: a.checkpoints,
        seed: a.seed,
        out: a.out,
        format: a.format,
    };
    let config = file.overlay(flags).resolve()?;
    let manifest = run_experiment(&config, a.workers)?;
    for c in &manifest.checks {
        println!(
            "{}  {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    for f in &manifest.files {
        println!(
            "wrote {} sha256:{}",
            config.out.join(&f.path).display(),
            f.sha256
        );
    }
    Ok(if manifest.passed() {
        Outcome::Ok
    } else {
        Outcome::ChecksFailed
    })
}
