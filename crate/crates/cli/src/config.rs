//! Experiment configuration: a TOML document merged with command-line flags.
//!
//! Every key can appear at the top level of the file or as a `--flag`; flags
//! win. The sweep axes `n` and `p` may also live in a `[sweep]` table and
//! accept either a scalar or a list. The seed is only accepted as `--seed`.
//!
//! ```toml
//! experiment = "scaling"
//! state = "ghz"
//! t = 2
//! ensemble = "local_clifford"
//! observables = ["Z1*Z2"]
//! protocols = ["AFRS", "LOCAL_AFRS", "OS"]
//! shots = 50
//! repetitions = 100
//!
//! [sweep]
//! n = [2, 4, 6, 8]
//! p = 0.3
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use replica_shadow::ensembles::Ensemble;
use replica_shadow::estimators::Protocol;
use replica_shadow::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    n: Option<OneOrMany<usize>>,
    p: Option<OneOrMany<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<String>,
    state: Option<String>,
    state_file: Option<PathBuf>,
    n: Option<OneOrMany<usize>>,
    p: Option<OneOrMany<f64>>,
    sweep: Option<SweepFile>,
    t: Option<usize>,
    ensemble: Option<String>,
    observables: Option<OneOrMany<String>>,
    protocols: Option<OneOrMany<String>>,
    subsystem: Option<Vec<usize>>,
    shots: Option<usize>,
    os_shots: Option<usize>,
    shots_den: Option<usize>,
    repetitions: Option<usize>,
    mom_batches: Option<usize>,
    checkpoints: Option<usize>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    pilot_shots: Option<usize>,
    variance: Option<f64>,
    d: Option<usize>,
    trials: Option<usize>,
    circuit: Option<PathBuf>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<Format>,
    workers: Option<usize>,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment seed (required; there is no clock-derived default).
    #[arg(long)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Label copied into every row.
    #[arg(long)]
    pub experiment: Option<String>,
    /// State family: ghz, maximally_mixed or random.
    #[arg(long)]
    pub state: Option<String>,
    /// JSON file holding a dense density matrix as rows of [re, im] pairs.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Qubit counts to sweep.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Depolarizing strengths to sweep.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Replica number.
    #[arg(long)]
    pub t: Option<usize>,
    /// local_clifford, global_clifford or identity.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Observable such as `Z1*Z2`, `I` or `GHZ-proj`; repeatable.
    #[arg(long = "observable")]
    pub observables: Option<Vec<String>>,
    /// OS, AFRS, LOCAL_AFRS or MULTISHOT; repeatable.
    #[arg(long = "protocol")]
    pub protocols: Option<Vec<String>>,
    /// 1-based qubits measured blockwise by LOCAL_AFRS.
    #[arg(long, value_delimiter = ',')]
    pub subsystem: Option<Vec<usize>>,
    /// Shots per estimate (M).
    #[arg(long)]
    pub shots: Option<usize>,
    /// Single-copy shots; defaults to t times `shots`.
    #[arg(long)]
    pub os_shots: Option<usize>,
    /// Denominator shots for vd; defaults to `shots`.
    #[arg(long)]
    pub shots_den: Option<usize>,
    /// Repetitions per sweep point (T).
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Median-of-means batch count; plain mean when absent.
    #[arg(long)]
    pub mom_batches: Option<usize>,
    /// Number of checkpoints in a vd convergence trace.
    #[arg(long)]
    pub checkpoints: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub pilot_shots: Option<usize>,
    /// Variance used by `plan` instead of a pilot run.
    #[arg(long)]
    pub variance: Option<f64>,
    /// Qudit dimension for compile-verify.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Where compile-verify writes the serialized circuit.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Circuit text for compile-verify to check instead of compiling one.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Fully resolved settings.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub state: String,
    pub state_file: Option<PathBuf>,
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub t: usize,
    pub ensemble: Ensemble,
    pub observables: Vec<String>,
    pub protocols: Vec<Protocol>,
    /// 0-based.
    pub subsystem: Option<Vec<usize>>,
    pub shots: usize,
    pub os_shots: usize,
    pub shots_den: usize,
    pub repetitions: usize,
    pub mom_batches: Option<usize>,
    pub checkpoints: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub pilot_shots: usize,
    pub variance: Option<f64>,
    pub d: Option<usize>,
    pub trials: usize,
    pub circuit: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn read_file(path: &Path) -> Result<ConfigFile, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        position: e.span().map(|s| s.start).unwrap_or(0),
        message: format!("{}: {}", path.display(), e.message()),
    })
}

fn positive(name: &str, v: usize) -> Result<usize, Error> {
    if v == 0 {
        return Err(bad(format!("{name} must be at least 1")));
    }
    Ok(v)
}

impl ExperimentConfig {
    /// Merges the file named by `--config` (if any) under the flags.
    pub fn resolve(flags: &Flags, defaults: &Defaults) -> Result<Self, Error> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => ConfigFile::default(),
        };
        let sweep = file.sweep.clone().unwrap_or_default();
        let n = flags
            .n
            .clone()
            .or(file.n.map(OneOrMany::into_vec))
            .or(sweep.n.map(OneOrMany::into_vec))
            .unwrap_or_else(|| defaults.n.clone());
        let p = flags
            .p
            .clone()
            .or(file.p.map(OneOrMany::into_vec))
            .or(sweep.p.map(OneOrMany::into_vec))
            .unwrap_or_else(|| vec![0.0]);
        let t = positive("t", flags.t.or(file.t).unwrap_or(2))?;
        let ensemble: Ensemble = flags
            .ensemble
            .clone()
            .or(file.ensemble)
            .unwrap_or_else(|| "local_clifford".into())
            .parse()?;
        let observables = flags
            .observables
            .clone()
            .or(file.observables.map(OneOrMany::into_vec))
            .unwrap_or_else(|| defaults.observables.iter().map(|s| s.to_string()).collect());
        let protocols = flags
            .protocols
            .clone()
            .or(file.protocols.map(OneOrMany::into_vec))
            .unwrap_or_else(|| defaults.protocols.iter().map(|s| s.to_string()).collect())
            .iter()
            .map(|s| s.parse::<Protocol>())
            .collect::<Result<Vec<_>, _>>()?;
        let subsystem = match flags.subsystem.clone().or(file.subsystem) {
            Some(list) => {
                if list.contains(&0) {
                    return Err(bad("subsystem qubits are 1-based"));
                }
                Some(list.into_iter().map(|q| q - 1).collect())
            }
            None => None,
        };
        let shots = positive("shots", flags.shots.or(file.shots).unwrap_or(defaults.shots))?;
        let os_shots = positive("os_shots", flags.os_shots.or(file.os_shots).unwrap_or(t * shots))?;
        let shots_den = positive("shots_den", flags.shots_den.or(file.shots_den).unwrap_or(shots))?;
        let repetitions = positive("repetitions", flags.repetitions.or(file.repetitions).unwrap_or(1))?;
        let mom_batches = match flags.mom_batches.or(file.mom_batches) {
            Some(r) => Some(positive("mom_batches", r)?),
            None => None,
        };
        let epsilon = flags.epsilon.or(file.epsilon).unwrap_or(0.1);
        let delta = flags.delta.or(file.delta).unwrap_or(0.05);
        let valid = epsilon > 0.0 && delta > 0.0 && delta < 1.0;
        if !valid {
            return Err(bad("need epsilon > 0 and 0 < delta < 1"));
        }
        if n.is_empty() || n.contains(&0) {
            return Err(bad("qubit counts must be at least 1"));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(bad("noise strengths must lie in [0, 1]"));
        }
        let workers = flags.workers.or(file.workers);
        if workers == Some(0) {
            return Err(bad("workers must be at least 1"));
        }
        Ok(ExperimentConfig {
            experiment: flags
                .experiment
                .clone()
                .or(file.experiment)
                .unwrap_or_else(|| defaults.experiment.into()),
            state: flags.state.clone().or(file.state).unwrap_or_else(|| "ghz".into()),
            state_file: flags.state_file.clone().or(file.state_file),
            n,
            p,
            t,
            ensemble,
            observables,
            protocols,
            subsystem,
            shots,
            os_shots,
            shots_den,
            repetitions,
            mom_batches,
            checkpoints: positive("checkpoints", flags.checkpoints.or(file.checkpoints).unwrap_or(10))?,
            epsilon,
            delta,
            pilot_shots: positive("pilot_shots", flags.pilot_shots.or(file.pilot_shots).unwrap_or(200))?,
            variance: flags.variance.or(file.variance),
            d: flags.d.or(file.d),
            trials: positive("trials", flags.trials.or(file.trials).unwrap_or(20))?,
            circuit: flags.circuit.clone().or(file.circuit),
            input: flags.input.clone().or(file.input),
            seed: flags.seed,
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format).unwrap_or_default(),
            workers,
        })
    }
}

/// Per-command fallbacks for keys the user left out.
#[derive(Clone, Debug)]
pub struct Defaults {
    pub experiment: &'static str,
    pub n: Vec<usize>,
    pub observables: &'static [&'static str],
    pub protocols: &'static [&'static str],
    pub shots: usize,
}
