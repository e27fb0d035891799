//! Flag and config-file resolution. A flag given on the command line wins
//! over the same key in the `--config` file, which wins over the defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    State,
    Disorder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    Multiplicative,
    Additive,
}

/// Experiment keys, accepted both as flags and as keys of the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Layer string such as `2r-2r-2`
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// pair-a..pair-f, symmetric_pair, pure_mixed_pair, equiphase or mub_mixture
    #[arg(long, global = true)]
    pub ensemble: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Bloch radius of the mixed state
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Number of states M
    #[arg(long, global = true)]
    pub states: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Smoothing parameters, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Evolution times, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Monte-Carlo runs per cell
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Maximum perturbation in percent, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub error_pct: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    pub study: Option<Study>,
    #[arg(long, global = true, value_enum)]
    pub noise: Option<Noise>,
    /// Perturb both states with one shared draw
    #[arg(long, global = true)]
    pub shared_draw: Option<bool>,
    /// Numbers of intermediate layers, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Hopping rate of the p=0 ansatz
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// d1,d2,d3,d4 of the p=1 transition family
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub d: Option<Vec<f64>>,
    /// Population imbalance of the first state
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta2: Option<f64>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl Settings {
    /// `self` over `base`, key by key.
    pub fn over(&self, base: &Settings) -> Settings {
        overlay!(
            self,
            base,
            model,
            ensemble,
            theta,
            xi,
            radius,
            states,
            alpha,
            p,
            tau,
            restarts,
            seed,
            max_iters,
            runs,
            error_pct,
            study,
            noise,
            shared_draw,
            depths,
            h,
            d,
            delta1,
            delta2
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The values a command actually ran with; hashed into the output preamble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: String,
    pub model: String,
    pub ensemble: String,
    pub theta: f64,
    pub xi: f64,
    pub radius: f64,
    pub states: usize,
    pub alpha: f64,
    pub p: Vec<f64>,
    pub tau: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub runs: usize,
    pub error_pct: Vec<f64>,
    pub study: Study,
    pub noise: Noise,
    pub shared_draw: bool,
    pub depths: Vec<usize>,
    pub h: f64,
    pub d: Option<Vec<f64>>,
    pub delta1: f64,
    pub delta2: f64,
}

fn nonempty<T>(name: &str, v: Vec<T>) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!(
            "--{name} needs at least one value"
        )));
    }
    Ok(v)
}

impl Resolved {
    pub fn new(command: &str, s: &Settings) -> Result<Resolved, CliError> {
        let robustness = command == "robustness";
        let depth = command == "depth";
        let analytic = command.starts_with("analytic");
        let default_tau = if robustness {
            vec![1.0, 10.0]
        } else if depth {
            vec![0.1, 1.0, 10.0, 100.0]
        } else if analytic {
            vec![0.5, 1.0, 5.0, 10.0]
        } else {
            vec![100.0]
        };
        let r = Resolved {
            command: command.to_string(),
            model: s
                .model
                .clone()
                .unwrap_or_else(|| if robustness { "2-2-2" } else { "2r-2r-2" }.into()),
            ensemble: s
                .ensemble
                .clone()
                .unwrap_or_else(|| if depth { "pair-d" } else { "pair-a" }.into()),
            theta: s.theta.unwrap_or(PI / 8.0),
            xi: s.xi.unwrap_or(if robustness { PI / 4.0 } else { 0.0 }),
            radius: s.radius.unwrap_or(0.5),
            states: s.states.unwrap_or(4),
            alpha: s.alpha.unwrap_or(1.0),
            p: nonempty(
                "p",
                s.p.clone().unwrap_or_else(|| {
                    if robustness {
                        vec![0.0, 0.1]
                    } else {
                        vec![0.0]
                    }
                }),
            )?,
            tau: nonempty("tau", s.tau.clone().unwrap_or(default_tau))?,
            restarts: s.restarts.unwrap_or(16),
            seed: s.seed.unwrap_or(0),
            max_iters: s.max_iters.unwrap_or(500),
            runs: s.runs.unwrap_or(1000),
            error_pct: nonempty(
                "error-pct",
                s.error_pct
                    .clone()
                    .unwrap_or_else(|| vec![0.0, 5.0, 10.0, 25.0, 50.0, 100.0]),
            )?,
            study: s.study.unwrap_or(Study::State),
            noise: s.noise.unwrap_or(Noise::Multiplicative),
            shared_draw: s.shared_draw.unwrap_or(false),
            depths: nonempty(
                "depths",
                s.depths.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]),
            )?,
            h: s.h.unwrap_or(0.5),
            d: s.d.clone(),
            delta1: s.delta1.unwrap_or(-0.25),
            delta2: s.delta2.unwrap_or(0.25),
        };
        if r.restarts == 0 {
            return Err(CliError::Config("--restarts must be at least 1".into()));
        }
        if r.runs == 0 {
            return Err(CliError::Config("--runs must be at least 1".into()));
        }
        if let Some(d) = &r.d {
            if d.len() != 4 {
                return Err(CliError::Config(format!(
                    "--d takes four values, got {}",
                    d.len()
                )));
            }
        }
        Ok(r)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load(flags: &Settings, config: Option<&PathBuf>) -> Result<Settings, CliError> {
    match config {
        Some(path) => Ok(flags.over(&Settings::from_file(path)?)),
        None => Ok(flags.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings =
            toml::from_str("model = \"2-2-2\"\np = [0.0, 0.5]\nseed = 4\n").unwrap();
        let flags = Settings {
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.over(&file);
        assert_eq!(merged.model.as_deref(), Some("2-2-2"));
        assert_eq!(merged.p, Some(vec![0.0, 0.5]));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("modle = \"2-2-2\"").is_err());
    }

    #[test]
    fn defaults_depend_on_command() {
        let s = Settings::default();
        let sweep = Resolved::new("sweep", &s).unwrap();
        assert_eq!(
            (sweep.model.as_str(), sweep.tau.clone()),
            ("2r-2r-2", vec![100.0])
        );
        let rob = Resolved::new("robustness", &s).unwrap();
        assert_eq!(
            (rob.model.as_str(), rob.p.clone()),
            ("2-2-2", vec![0.0, 0.1])
        );
        assert_eq!(Resolved::new("depth", &s).unwrap().ensemble, "pair-d");
    }

    #[test]
    fn empty_grids_and_bad_counts_fail() {
        let s = Settings {
            p: Some(vec![]),
            ..Default::default()
        };
        assert!(matches!(
            Resolved::new("sweep", &s),
            Err(CliError::Config(_))
        ));
        let s = Settings {
            d: Some(vec![0.1, 0.2]),
            ..Default::default()
        };
        assert!(Resolved::new("analytic-p1", &s).is_err());
        let s = Settings {
            restarts: Some(0),
            ..Default::default()
        };
        assert!(Resolved::new("sweep", &s).is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let a = Resolved::new("sweep", &Settings::default()).unwrap();
        let b = Resolved::new(
            "sweep",
            &Settings {
                seed: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.sha256(), a.clone().sha256());
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }
}
