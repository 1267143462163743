//! Monte-Carlo experiments over random games.
//!
//! A sweep varies either the cost factor or the dimension. At each sweep
//! value (a "cell") every ranking plays the same sampled games with the same
//! dynamic seeds. Welfare is compared only on games where every ranking in
//! the sweep converged.
//!
//! All randomness is derived from the master seed and the run's position
//! in the sweep, so output does not depend on the rayon pool width.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pubgame_core::dynamics::{run_dynamic, Boundary, DynamicsConfig, Mode, SMOOTH_ITERS_PER_DIM};
use pubgame_core::seed::{derive_seed, stream};
use pubgame_core::{DistanceSpec, PublishersGame, RankingSpec};

use crate::bootstrap::{bootstrap_ci, mean};
use crate::{Error, Result};

const GAME_STREAM: u64 = 0x6a6d;
const DYNAMIC_STREAM: u64 = 0xd7a;
const BOOTSTRAP_STREAM: u64 = 0xb007;

/// Header of every summary CSV.
pub const CSV_HEADER: &str = "figure,x_name,x_value,ranking,metric,mean,ci_lo,ci_hi,n_converged,n_total";

/// The swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "axis")]
pub enum Sweep {
    /// Vary lambda at a fixed dimension.
    Lambda { k: usize, values: Vec<f64> },
    /// Vary the dimension at a fixed lambda.
    K { lambda: f64, values: Vec<usize> },
}

impl Sweep {
    /// Column name of the swept parameter.
    pub fn x_name(&self) -> &'static str {
        match self {
            Sweep::Lambda { .. } => "lambda",
            Sweep::K { .. } => "k",
        }
    }

    /// `(k, lambda, x)` for every cell, in sweep order.
    pub fn cells(&self) -> Vec<Cell> {
        match self {
            Sweep::Lambda { k, values } => values
                .iter()
                .map(|&lambda| Cell { k: *k, lambda, x_value: lambda })
                .collect(),
            Sweep::K { lambda, values } => values
                .iter()
                .map(|&k| Cell { k, lambda: *lambda, x_value: k as f64 })
                .collect(),
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub k: usize,
    pub lambda: f64,
    pub x_value: f64,
}

/// A batch of dynamics over random games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Label written to the `figure` column.
    pub figure: String,
    pub n: usize,
    pub sweep: Sweep,
    pub rankings: Vec<RankingSpec>,
    pub mode: Mode,
    pub games_per_cell: usize,
    /// Bootstrap resample count `B`.
    pub bootstrap: usize,
    pub confidence: f64,
    pub master_seed: u64,
    pub epsilon: f64,
    /// Iteration budget; `None` means 100 for discrete and `100 k` for
    /// smooth dynamics.
    pub max_iters: Option<usize>,
    pub boundary: Boundary,
}

impl ExperimentConfig {
    /// Defaults shared by every sweep: 200 games per cell, `B = 500`, 95%
    /// intervals, `epsilon = 1e-6`.
    pub fn new(figure: impl Into<String>, sweep: Sweep, rankings: Vec<RankingSpec>, mode: Mode) -> Self {
        ExperimentConfig {
            figure: figure.into(),
            n: 2,
            sweep,
            rankings,
            mode,
            games_per_cell: 200,
            bootstrap: 500,
            confidence: 0.95,
            master_seed: 0,
            epsilon: pubgame_core::dynamics::DEFAULT_EPSILON,
            max_iters: None,
            boundary: Boundary::Clamp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.games_per_cell == 0 {
            return bad("games_per_cell must be at least 1".into());
        }
        if self.bootstrap == 0 {
            return bad("bootstrap resample count must be at least 1".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence must lie in (0, 1), got {}", self.confidence));
        }
        if self.rankings.is_empty() {
            return bad("no rankings to compare".into());
        }
        let empty = match &self.sweep {
            Sweep::Lambda { values, .. } => values.is_empty(),
            Sweep::K { values, .. } => values.is_empty(),
        };
        if empty {
            return bad("sweep has no values".into());
        }
        for r in &self.rankings {
            r.validate(self.n)?;
            if self.mode == Mode::Smooth && !r.is_differentiable() {
                return Err(pubgame_core::Error::Unsupported(format!(
                    "smooth dynamics need a differentiable ranking, got {r}"
                ))
                .into());
            }
        }
        Ok(())
    }

    /// Dynamics parameters for a cell.
    pub fn dynamics(&self, k: usize) -> Result<DynamicsConfig> {
        let mut cfg = match self.mode {
            Mode::Discrete => DynamicsConfig::discrete(k)?,
            Mode::Smooth => DynamicsConfig::smooth(k),
        };
        cfg.epsilon = self.epsilon;
        cfg.boundary = self.boundary;
        cfg.max_iters = self.max_iters.unwrap_or(match self.mode {
            Mode::Discrete => pubgame_core::dynamics::DEFAULT_DISCRETE_ITERS,
            Mode::Smooth => SMOOTH_ITERS_PER_DIM * k,
        });
        Ok(cfg)
    }
}

/// Samples a game with initial documents and information need drawn iid
/// uniform on `[0,1]^k` and the `k`-normalized squared Euclidean distance.
pub fn sample_game<R: Rng>(
    n: usize,
    k: usize,
    lambda: f64,
    ranking: RankingSpec,
    rng: &mut R,
) -> Result<PublishersGame> {
    let mut point = || (0..k).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>();
    let initial: Vec<Vec<f64>> = (0..n).map(|_| point()).collect();
    let need = point();
    Ok(PublishersGame::new(lambda, DistanceSpec::squared_euclidean(k), initial, need, ranking)?)
}

/// Outcome of one simulation, as written to the raw run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub figure: String,
    pub x_name: String,
    pub x_value: f64,
    pub ranking: String,
    pub game: usize,
    pub game_seed: u64,
    pub dynamic_seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// Welfare at the last profile, also for runs that hit the budget.
    pub publishers_welfare: f64,
    pub users_welfare: f64,
}

fn cell_path(cell: &Cell) -> [u64; 2] {
    [cell.k as u64, cell.lambda.to_bits()]
}

/// Seeds of game `g` in `cell`: shared by every ranking.
pub fn run_seeds(master: u64, cell: &Cell, g: usize) -> (u64, u64) {
    let [k, l] = cell_path(cell);
    (
        derive_seed(master, &[GAME_STREAM, k, l, g as u64]),
        derive_seed(master, &[DYNAMIC_STREAM, k, l, g as u64]),
    )
}

fn run_one(config: &ExperimentConfig, cell: &Cell, ranking: RankingSpec, g: usize) -> Result<RunRecord> {
    let (game_seed, dynamic_seed) = run_seeds(config.master_seed, cell, g);
    let game = sample_game(config.n, cell.k, cell.lambda, ranking, &mut stream(game_seed))?;
    let dynamics = config.dynamics(cell.k)?.with_seed(dynamic_seed);
    let trace = run_dynamic(&game, &dynamics)?;
    Ok(RunRecord {
        figure: config.figure.clone(),
        x_name: config.sweep.x_name().into(),
        x_value: cell.x_value,
        ranking: ranking.to_string(),
        game: g,
        game_seed,
        dynamic_seed,
        converged: trace.converged,
        iterations: trace.iterations_used,
        publishers_welfare: trace.final_welfare.publishers_welfare,
        users_welfare: trace.final_welfare.users_welfare,
    })
}

/// Point estimate with its bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Statistics of one ranking at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ranking: String,
    pub x_value: f64,
    pub n_total: usize,
    pub n_converged: usize,
    pub convergence_rate: f64,
    pub convergence: Estimate,
    /// Number of runs the welfare statistics are computed over.
    pub n_welfare: usize,
    /// `None` when no run qualified.
    pub publishers_welfare: Option<Estimate>,
    pub users_welfare: Option<Estimate>,
}

/// Runs of one ranking at one sweep value plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub runs: Vec<RunRecord>,
    pub summary: CellSummary,
}

fn estimate(samples: &[f64], config: &ExperimentConfig, path: &[u64]) -> Result<Option<Estimate>> {
    let Some(m) = mean(samples) else {
        return Ok(None);
    };
    let mut full = vec![BOOTSTRAP_STREAM];
    full.extend_from_slice(path);
    let mut rng = stream(derive_seed(config.master_seed, &full));
    let (ci_lo, ci_hi) = bootstrap_ci(samples, config.bootstrap, config.confidence, &mut rng)?;
    Ok(Some(Estimate { mean: m, ci_lo, ci_hi }))
}

fn summarize(
    config: &ExperimentConfig,
    cell: &Cell,
    ranking_index: usize,
    runs: &[RunRecord],
    welfare_mask: &[bool],
) -> Result<CellSummary> {
    let [k, l] = cell_path(cell);
    let path = |metric: u64| [k, l, ranking_index as u64, metric];
    let hits: Vec<f64> = runs.iter().map(|r| if r.converged { 1.0 } else { 0.0 }).collect();
    let n_converged = runs.iter().filter(|r| r.converged).count();
    let selected: Vec<&RunRecord> = runs
        .iter()
        .zip(welfare_mask)
        .filter_map(|(r, &keep)| keep.then_some(r))
        .collect();
    let pubs: Vec<f64> = selected.iter().map(|r| r.publishers_welfare).collect();
    let users: Vec<f64> = selected.iter().map(|r| r.users_welfare).collect();
    Ok(CellSummary {
        ranking: runs.first().map(|r| r.ranking.clone()).unwrap_or_default(),
        x_value: cell.x_value,
        n_total: runs.len(),
        n_converged,
        convergence_rate: n_converged as f64 / runs.len() as f64,
        convergence: estimate(&hits, config, &path(0))?.expect("cells are never empty"),
        n_welfare: selected.len(),
        publishers_welfare: estimate(&pubs, config, &path(1))?,
        users_welfare: estimate(&users, config, &path(2))?,
    })
}

/// Runs `games_per_cell` simulations of one ranking at one sweep value.
/// Welfare is summarized over this ranking's converged runs.
pub fn run_cell(config: &ExperimentConfig, cell: &Cell, ranking_index: usize) -> Result<CellResult> {
    config.validate()?;
    let ranking = *config
        .rankings
        .get(ranking_index)
        .ok_or_else(|| Error::InvalidInput(format!("no ranking at index {ranking_index}")))?;
    let runs = (0..config.games_per_cell)
        .into_par_iter()
        .map(|g| run_one(config, cell, ranking, g))
        .collect::<Result<Vec<_>>>()?;
    let mask: Vec<bool> = runs.iter().map(|r| r.converged).collect();
    let summary = summarize(config, cell, ranking_index, &runs, &mask)?;
    Ok(CellResult { runs, summary })
}

/// Everything a sweep produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub figure: String,
    pub x_name: String,
    /// Cell-major, then ranking order.
    pub cells: Vec<CellSummary>,
    /// Every simulation, in the same order.
    pub runs: Vec<RunRecord>,
}

/// Runs the whole sweep. Welfare statistics use only games on which every
/// ranking of the sweep converged.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let cells = config.sweep.cells();
    let rankings = config.rankings.len();
    let games = config.games_per_cell;
    let tasks: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..rankings).flat_map(move |r| (0..games).map(move |g| (c, r, g))))
        .collect();
    let runs = tasks
        .par_iter()
        .map(|&(c, r, g)| run_one(config, &cells[c], config.rankings[r], g))
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(cells.len() * rankings);
    for (c, cell) in cells.iter().enumerate() {
        let block = &runs[c * rankings * games..(c + 1) * rankings * games];
        let joint: Vec<bool> = (0..games)
            .map(|g| (0..rankings).all(|r| block[r * games + g].converged))
            .collect();
        for r in 0..rankings {
            let cell_runs = &block[r * games..(r + 1) * games];
            summaries.push(summarize(config, cell, r, cell_runs, &joint)?);
        }
    }
    Ok(ExperimentSummary {
        figure: config.figure.clone(),
        x_name: config.sweep.x_name().into(),
        cells: summaries,
        runs,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentSummary {
    /// Summary table in the CSV schema, header included. Three rows per
    /// cell: `convergence_rate`, `publishers_welfare`, `users_welfare`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let rows = [
                ("convergence_rate", Some(c.convergence), c.n_converged),
                ("publishers_welfare", c.publishers_welfare, c.n_welfare),
                ("users_welfare", c.users_welfare, c.n_welfare),
            ];
            for (metric, est, count) in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    self.figure,
                    self.x_name,
                    c.x_value,
                    c.ranking,
                    metric,
                    opt(est.map(|e| e.mean)),
                    opt(est.map(|e| e.ci_lo)),
                    opt(est.map(|e| e.ci_hi)),
                    count,
                    c.n_total
                ));
            }
        }
        out
    }

    /// One JSON object per simulation, newline separated.
    pub fn runs_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.runs {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Summary of `ranking` at sweep value `x`.
    pub fn cell(&self, ranking: &str, x: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.ranking == ranking && c.x_value == x)
    }
}

/// Parameters of the three figure sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiguresConfig {
    /// Lambda values of the discrete comparison (figure 1).
    pub lambda_grid: Vec<f64>,
    /// Dimension of the discrete comparison.
    pub discrete_k: usize,
    /// Dimensions of the smooth comparisons (figures 2 and 3).
    pub k_grid: Vec<usize>,
    /// Lambda of figure 2 and figure 3 respectively.
    pub smooth_lambdas: [f64; 2],
    pub n: usize,
    pub games_per_cell: usize,
    pub bootstrap: usize,
    pub confidence: f64,
    pub epsilon: f64,
    pub master_seed: u64,
}

/// `0.1, 0.2, ..., 2.0`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

/// `2, 4, 8, 16, 32`.
pub fn default_k_grid() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}

impl Default for FiguresConfig {
    fn default() -> Self {
        FiguresConfig {
            lambda_grid: default_lambda_grid(),
            discrete_k: 2,
            k_grid: default_k_grid(),
            smooth_lambdas: [1.0, 0.1],
            n: 2,
            games_per_cell: 200,
            bootstrap: 500,
            confidence: 0.95,
            epsilon: pubgame_core::dynamics::DEFAULT_EPSILON,
            master_seed: 0,
        }
    }
}

impl FiguresConfig {
    fn base(&self, figure: &str, sweep: Sweep, rankings: Vec<RankingSpec>, mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            games_per_cell: self.games_per_cell,
            bootstrap: self.bootstrap,
            confidence: self.confidence,
            epsilon: self.epsilon,
            master_seed: self.master_seed,
            ..ExperimentConfig::new(figure, sweep, rankings, mode)
        }
    }

    /// PRP against both relative-relevance rankings, discrete dynamics,
    /// lambda sweep.
    pub fn figure1(&self) -> ExperimentConfig {
        self.base(
            "fig1",
            Sweep::Lambda {
                k: self.discrete_k,
                values: self.lambda_grid.clone(),
            },
            vec![RankingSpec::prp(), RankingSpec::linear_max_slope(), RankingSpec::softmax()],
            Mode::Discrete,
        )
    }

    fn smooth(&self, figure: &str, lambda: f64) -> ExperimentConfig {
        self.base(
            figure,
            Sweep::K {
                lambda,
                values: self.k_grid.clone(),
            },
            vec![RankingSpec::linear_max_slope(), RankingSpec::softmax()],
            Mode::Smooth,
        )
    }

    /// Linear against softmax, smooth dynamics, `k` sweep at the first
    /// smooth lambda.
    pub fn figure2(&self) -> ExperimentConfig {
        self.smooth("fig2", self.smooth_lambdas[0])
    }

    /// Same as figure 2 at the second smooth lambda.
    pub fn figure3(&self) -> ExperimentConfig {
        self.smooth("fig3", self.smooth_lambdas[1])
    }
}

/// Runs the three figure sweeps.
pub fn reproduce_figures(config: &FiguresConfig) -> Result<[ExperimentSummary; 3]> {
    Ok([
        run_experiment(&config.figure1())?,
        run_experiment(&config.figure2())?,
        run_experiment(&config.figure3())?,
    ])
}
