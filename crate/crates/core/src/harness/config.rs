use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::table::Format;
use crate::chain::check_alpha;
use crate::error::{Error, Result};

pub const EXPERIMENTS: [&str; 7] = [
    "growth-law",
    "coupling-equality",
    "crp-compare",
    "moment-identities",
    "frag-profile",
    "malthus",
    "distance-scaling",
];

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
    pub n: usize,
    pub replicas: usize,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
}

/// Config fields as read from a file or from flags; anything may be missing.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<String>,
    pub alpha: Option<f64>,
    pub alpha_prime: Option<f64>,
    pub n: Option<usize>,
    pub replicas: Option<usize>,
    pub checkpoints: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: PartialConfig) -> Self {
        PartialConfig {
            experiment: over.experiment.or(self.experiment),
            alpha: over.alpha.or(self.alpha),
            alpha_prime: over.alpha_prime.or(self.alpha_prime),
            n: over.n.or(self.n),
            replicas: over.replicas.or(self.replicas),
            checkpoints: over.checkpoints.or(self.checkpoints),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
        }
    }

    /// Fills defaults for `n` (1000), `replicas` (100), `out` (`out`) and
    /// `format` (csv). There is no default seed.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let experiment = self
            .experiment
            .ok_or_else(|| Error::param("missing `experiment`"))?;
        let alpha = self.alpha.ok_or_else(|| Error::param("missing `alpha`"))?;
        let seed = self
            .seed
            .ok_or_else(|| Error::param("missing `seed` (there is no clock-based default)"))?;
        let config = ExperimentConfig {
            experiment,
            alpha,
            alpha_prime: self.alpha_prime,
            n: self.n.unwrap_or(1000),
            replicas: self.replicas.unwrap_or(100),
            checkpoints: self.checkpoints.unwrap_or_default(),
            seed,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            format: self.format.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::UnknownExperiment(self.experiment.clone()));
        }
        check_alpha(self.alpha)?;
        if let Some(ap) = self.alpha_prime {
            check_alpha(ap)?;
            if !(self.alpha < ap) {
                return Err(Error::param(format!(
                    "need alpha < alpha_prime, got {} and {ap}",
                    self.alpha
                )));
            }
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        if self.checkpoints.contains(&0) {
            return Err(Error::param("checkpoints must be positive"));
        }
        Ok(())
    }

    pub fn require_alpha_prime(&self) -> Result<f64> {
        self.alpha_prime.ok_or_else(|| {
            Error::param(format!("experiment {} needs alpha_prime", self.experiment))
        })
    }

    /// Sorted, deduplicated checkpoints, or `fallback` when none were given.
    pub fn checkpoints_or(&self, fallback: Vec<usize>) -> Vec<usize> {
        let mut c = if self.checkpoints.is_empty() {
            fallback
        } else {
            self.checkpoints.clone()
        };
        c.sort_unstable();
        c.dedup();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "malthus"
alpha = 1.5
alpha_prime = 2.0
n = 5000
replicas = 8
checkpoints = [100, 1000]
seed = 42
out = "runs/m"
format = "json"
"#;

    #[test]
    fn parses_all_fields() {
        let c = PartialConfig::from_toml(SAMPLE).unwrap().resolve().unwrap();
        assert_eq!(c.experiment, "malthus");
        assert_eq!(
            (c.alpha, c.alpha_prime, c.n, c.replicas, c.seed),
            (1.5, Some(2.0), 5000, 8, 42)
        );
        assert_eq!(c.checkpoints, vec![100, 1000]);
        assert_eq!(c.out, PathBuf::from("runs/m"));
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn flags_override_file() {
        let file = PartialConfig::from_toml(SAMPLE).unwrap();
        let flags = PartialConfig {
            n: Some(2000),
            format: Some(Format::Csv),
            ..Default::default()
        };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!((c.n, c.format, c.replicas), (2000, Format::Csv, 8));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = || PartialConfig::from_toml(SAMPLE).unwrap();
        let bad = |p: PartialConfig| base().overlay(p).resolve().unwrap_err();
        assert!(matches!(
            bad(PartialConfig {
                experiment: Some("nope".into()),
                ..Default::default()
            }),
            Error::UnknownExperiment(_)
        ));
        assert!(matches!(
            bad(PartialConfig {
                alpha: Some(2.5),
                ..Default::default()
            }),
            Error::Parameter(_)
        ));
        assert!(matches!(
            bad(PartialConfig {
                alpha: Some(2.0),
                ..Default::default()
            }),
            Error::Parameter(_)
        ));
        assert!(matches!(
            bad(PartialConfig {
                replicas: Some(0),
                ..Default::default()
            }),
            Error::Parameter(_)
        ));
        let mut no_seed = base();
        no_seed.seed = None;
        assert!(no_seed.resolve().is_err());
    }

    #[test]
    fn reports_parse_position() {
        match PartialConfig::from_toml("alpha = 1.5\nbogus = 3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(PartialConfig::from_toml("alpha = \"x\"").is_err());
    }
}
