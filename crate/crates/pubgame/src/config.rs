//! Configuration file and parameter resolution.
//!
//! Every subcommand parameter can come from three places. A command-line
//! flag wins over the TOML config file, which wins over the built-in
//! default. The seed has one more fallback between the file and the
//! default: the `PUBGAME_SEED` environment variable.
//!
//! The parameter structs double as clap argument groups and as config file
//! sections, so a flag and its file key always share a name (`--games-per-cell`
//! on the command line, `games_per_cell` in the file).

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use pubgame_core::dynamics::{Boundary, DynamicsConfig, Mode};
use pubgame_core::seed::{derive_seed, stream};
use pubgame_core::{DistanceSpec, PublishersGame, RankingKind, RankingSpec};

use crate::experiments::{default_k_grid, default_lambda_grid, sample_game, ExperimentConfig, FiguresConfig, Sweep};
use crate::verify::VerifyOptions;
use crate::{Error, Result};

/// Seed used when neither flag, file nor environment provide one.
pub const DEFAULT_SEED: u64 = 42;
/// Environment fallback for the seed.
pub const SEED_ENV: &str = "PUBGAME_SEED";

const SIM_GAME_STREAM: u64 = 1;
const SIM_DYNAMIC_STREAM: u64 = 2;

/// Contents of a config file. Unknown keys are rejected at every level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub simulate: SimulateParams,
    pub sweep: SweepParams,
    pub figures: FiguresParams,
    pub verify: VerifyParams,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "discrete" => Ok(Mode::Discrete),
        "smooth" => Ok(Mode::Smooth),
        _ => Err(format!("expected discrete or smooth, got {s:?}")),
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "clamp" => Ok(Boundary::Clamp),
        "discard" => Ok(Boundary::Discard),
        _ => Err(format!("expected clamp or discard, got {s:?}")),
    }
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    match s {
        "lambda" => Ok(Axis::Lambda),
        "k" => Ok(Axis::K),
        _ => Err(format!("expected lambda or k, got {s:?}")),
    }
}

fn ranking_spec(kind: RankingKind, slope: Option<f64>, tie_tolerance: Option<f64>) -> Result<RankingSpec> {
    if slope.is_some() && kind != RankingKind::Linear {
        return Err(Error::Config(format!("slope only applies to the linear ranking, not {kind}")));
    }
    if tie_tolerance.is_some() && kind != RankingKind::Prp {
        return Err(Error::Config(format!("tie_tolerance only applies to prp, not {kind}")));
    }
    Ok(match kind {
        RankingKind::Linear => RankingSpec::Linear { slope },
        RankingKind::Prp => match tie_tolerance {
            Some(t) => RankingSpec::Prp { tie_tolerance: t },
            None => RankingSpec::prp(),
        },
        other => RankingSpec::from_kind(other),
    })
}

fn dynamics_for(
    mode: Mode,
    k: usize,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
    boundary: Option<Boundary>,
) -> Result<DynamicsConfig> {
    let mut cfg = match mode {
        Mode::Discrete => DynamicsConfig::discrete(k)?,
        Mode::Smooth => DynamicsConfig::smooth(k),
    };
    if let Some(e) = epsilon {
        cfg.epsilon = e;
    }
    if let Some(t) = max_iters {
        cfg.max_iters = t;
    }
    if let Some(b) = boundary {
        cfg.boundary = b;
    }
    Ok(cfg)
}

/// Explicit game for `simulate`, only settable from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub initial_docs: Vec<Vec<f64>>,
    pub info_need: Vec<f64>,
    /// Defaults to the squared Euclidean distance normalized by `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceSpec>,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Globals {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

/// Applies flag > file > environment > default for the seed and flag > file
/// > default for the rest.
pub fn resolve_globals(
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    file: &FileConfig,
    seed_env: Option<&str>,
) -> Result<Globals> {
    let env_seed = match seed_env {
        Some(s) if !s.trim().is_empty() => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned 64-bit integer")))?,
        ),
        _ => None,
    };
    Ok(Globals {
        seed: seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED),
        out: out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        jobs: jobs.or(file.jobs).unwrap_or(0),
    })
}

/// Parameters of `simulate`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    /// Ranking function: prp, linear, softmax or random [default: linear]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingKind>,
    /// Linear slope in (0, 1/n] [default: 1/n]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Tie width of prp [default: 1e-12]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_tolerance: Option<f64>,
    /// Number of publishers of a sampled game [default: 2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Dimension of a sampled game [default: 2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Cost weight of moving away from the initial document (required)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// discrete or smooth [default: discrete]
    #[arg(long, value_parser = parse_mode)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Minimal gain of a move [default: 1e-6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Iteration budget [default: 100 discrete, 100*k smooth]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// clamp or discard candidates outside the unit cube [default: clamp]
    #[arg(long, value_parser = parse_boundary)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    /// Trace file [default: <out>/trace.jsonl]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameFile>,
}

/// A fully resolved `simulate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub game: PublishersGame,
    pub dynamics: DynamicsConfig,
    pub trace: PathBuf,
}

impl SimulateParams {
    /// Fills every unset field of `self` from `lower`.
    pub fn overlay(self, lower: &Self) -> Self {
        let l = lower.clone();
        SimulateParams {
            ranking: self.ranking.or(l.ranking),
            slope: self.slope.or(l.slope),
            tie_tolerance: self.tie_tolerance.or(l.tie_tolerance),
            n: self.n.or(l.n),
            k: self.k.or(l.k),
            lambda: self.lambda.or(l.lambda),
            mode: self.mode.or(l.mode),
            epsilon: self.epsilon.or(l.epsilon),
            max_iters: self.max_iters.or(l.max_iters),
            boundary: self.boundary.or(l.boundary),
            trace: self.trace.or(l.trace),
            game: self.game.or(l.game),
        }
    }

    /// Builds the game and dynamics. Without an explicit `[simulate.game]`
    /// the game is sampled from the seed.
    pub fn resolve(&self, globals: &Globals) -> Result<SimulatePlan> {
        let lambda = self
            .lambda
            .ok_or_else(|| Error::Config("simulate needs lambda (--lambda or simulate.lambda)".into()))?;
        let ranking = ranking_spec(
            self.ranking.unwrap_or(RankingKind::Linear),
            self.slope,
            self.tie_tolerance,
        )?;
        let game = match &self.game {
            Some(g) => {
                let (n, k) = (g.initial_docs.len(), g.info_need.len());
                if self.n.is_some_and(|v| v != n) || self.k.is_some_and(|v| v != k) {
                    return Err(Error::Config(format!(
                        "n/k settings disagree with the explicit game (n = {n}, k = {k})"
                    )));
                }
                let distance = g.distance.unwrap_or(DistanceSpec::squared_euclidean(k));
                PublishersGame::new(lambda, distance, g.initial_docs.clone(), g.info_need.clone(), ranking)?
            }
            None => {
                let seed = derive_seed(globals.seed, &[SIM_GAME_STREAM]);
                sample_game(self.n.unwrap_or(2), self.k.unwrap_or(2), lambda, ranking, &mut stream(seed))?
            }
        };
        let dynamics = dynamics_for(
            self.mode.unwrap_or(Mode::Discrete),
            game.k(),
            self.epsilon,
            self.max_iters,
            self.boundary,
        )?
        .with_seed(derive_seed(globals.seed, &[SIM_DYNAMIC_STREAM]));
        dynamics.validate(&game)?;
        let trace = self.trace.clone().unwrap_or_else(|| globals.out.join("trace.jsonl"));
        Ok(SimulatePlan { game, dynamics, trace })
    }
}

/// Swept parameter of `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lambda,
    K,
}

/// Parameters of `sweep`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    /// Swept parameter: lambda or k [default: lambda]
    #[arg(long, value_parser = parse_axis)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    /// Publishers per game [default: 2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Dimension when sweeping lambda [default: 2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Lambda when sweeping k (required for that axis)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Comma-separated values of the swept parameter
    /// [default: 0.1,...,2.0 for lambda; 2,4,8,16,32 for k]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Comma-separated rankings
    /// [default: prp,linear,softmax discrete; linear,softmax smooth]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rankings: Option<Vec<RankingKind>>,
    /// Linear slope [default: 1/n]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// discrete or smooth [default: discrete]
    #[arg(long, value_parser = parse_mode)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Games per cell [default: 200]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub games_per_cell: Option<usize>,
    /// Bootstrap resamples [default: 500]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    /// Interval confidence level [default: 0.95]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    /// Minimal gain of a move [default: 1e-6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Iteration budget [default: 100 discrete, 100*k smooth]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// clamp or discard [default: clamp]
    #[arg(long, value_parser = parse_boundary)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

impl SweepParams {
    pub fn overlay(self, lower: &Self) -> Self {
        let l = lower.clone();
        SweepParams {
            axis: self.axis.or(l.axis),
            n: self.n.or(l.n),
            k: self.k.or(l.k),
            lambda: self.lambda.or(l.lambda),
            values: self.values.or(l.values),
            rankings: self.rankings.or(l.rankings),
            slope: self.slope.or(l.slope),
            mode: self.mode.or(l.mode),
            games_per_cell: self.games_per_cell.or(l.games_per_cell),
            bootstrap: self.bootstrap.or(l.bootstrap),
            confidence: self.confidence.or(l.confidence),
            epsilon: self.epsilon.or(l.epsilon),
            max_iters: self.max_iters.or(l.max_iters),
            boundary: self.boundary.or(l.boundary),
        }
    }

    pub fn resolve(&self, globals: &Globals) -> Result<ExperimentConfig> {
        let mode = self.mode.unwrap_or(Mode::Discrete);
        let sweep = match self.axis.unwrap_or(Axis::Lambda) {
            Axis::Lambda => {
                if self.lambda.is_some() {
                    return Err(Error::Config("lambda is the swept axis; use values instead".into()));
                }
                Sweep::Lambda {
                    k: self.k.unwrap_or(2),
                    values: self.values.clone().unwrap_or_else(default_lambda_grid),
                }
            }
            Axis::K => {
                if self.k.is_some() {
                    return Err(Error::Config("k is the swept axis; use values instead".into()));
                }
                let lambda = self
                    .lambda
                    .ok_or_else(|| Error::Config("a k sweep needs lambda (--lambda or sweep.lambda)".into()))?;
                let values = match &self.values {
                    Some(v) => v
                        .iter()
                        .map(|&x| {
                            if x >= 1.0 && x.fract() == 0.0 {
                                Ok(x as usize)
                            } else {
                                Err(Error::Config(format!("k values must be positive integers, got {x}")))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                    None => default_k_grid(),
                };
                Sweep::K { lambda, values }
            }
        };
        let kinds = self.rankings.clone().unwrap_or_else(|| match mode {
            Mode::Discrete => vec![RankingKind::Prp, RankingKind::Linear, RankingKind::Softmax],
            Mode::Smooth => vec![RankingKind::Linear, RankingKind::Softmax],
        });
        let rankings = kinds
            .into_iter()
            .map(|kind| match kind {
                RankingKind::Linear => Ok(RankingSpec::Linear { slope: self.slope }),
                other => ranking_spec(other, None, None),
            })
            .collect::<Result<Vec<_>>>()?;
        let base = ExperimentConfig::new("sweep", sweep, rankings, mode);
        let config = ExperimentConfig {
            n: self.n.unwrap_or(base.n),
            games_per_cell: self.games_per_cell.unwrap_or(base.games_per_cell),
            bootstrap: self.bootstrap.unwrap_or(base.bootstrap),
            confidence: self.confidence.unwrap_or(base.confidence),
            master_seed: globals.seed,
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            max_iters: self.max_iters.or(base.max_iters),
            boundary: self.boundary.unwrap_or(base.boundary),
            ..base
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parameters of `figures`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiguresParams {
    /// Comma-separated lambda values of fig1 [default: 0.1,0.2,...,2.0]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated dimensions of fig2 and fig3 [default: 2,4,8,16,32]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    /// Games per cell [default: 200]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub games_per_cell: Option<usize>,
    /// Bootstrap resamples [default: 500]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    /// Interval confidence level [default: 0.95]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    /// Minimal gain of a move [default: 1e-6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl FiguresParams {
    pub fn overlay(self, lower: &Self) -> Self {
        let l = lower.clone();
        FiguresParams {
            lambda_grid: self.lambda_grid.or(l.lambda_grid),
            k_grid: self.k_grid.or(l.k_grid),
            games_per_cell: self.games_per_cell.or(l.games_per_cell),
            bootstrap: self.bootstrap.or(l.bootstrap),
            confidence: self.confidence.or(l.confidence),
            epsilon: self.epsilon.or(l.epsilon),
        }
    }

    pub fn resolve(&self, globals: &Globals) -> Result<FiguresConfig> {
        let base = FiguresConfig::default();
        let config = FiguresConfig {
            lambda_grid: self.lambda_grid.clone().unwrap_or(base.lambda_grid),
            k_grid: self.k_grid.clone().unwrap_or(base.k_grid),
            games_per_cell: self.games_per_cell.unwrap_or(base.games_per_cell),
            bootstrap: self.bootstrap.unwrap_or(base.bootstrap),
            confidence: self.confidence.unwrap_or(base.confidence),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            master_seed: globals.seed,
            ..base
        };
        for exp in [config.figure1(), config.figure2(), config.figure3()] {
            exp.validate()?;
        }
        Ok(config)
    }
}

/// Parameters of `verify`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Comma-separated check groups: potential, slope, diec, prp-grid,
    /// gradient [default: all]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
    /// Random samples per sampled check [default: 10000]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl VerifyParams {
    pub fn overlay(self, lower: &Self) -> Self {
        let l = lower.clone();
        VerifyParams {
            only: self.only.or(l.only),
            samples: self.samples.or(l.samples),
        }
    }

    pub fn resolve(&self, globals: &Globals) -> Result<VerifyOptions> {
        let base = VerifyOptions::default();
        let samples = self.samples.unwrap_or(base.samples);
        if samples == 0 {
            return Err(Error::Config("verify needs at least one sample".into()));
        }
        Ok(VerifyOptions {
            only: self.only.clone().unwrap_or_default(),
            seed: globals.seed,
            samples,
            ..base
        })
    }
}
