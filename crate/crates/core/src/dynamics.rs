//! Better-response dynamics.
//!
//! Each iteration finds the publishers that can gain at least `epsilon` with
//! a restricted best response, draws one of them uniformly, then draws one of
//! its best-response documents uniformly. In discrete mode the moves are
//! `x_i + s * d` for a fixed set of unit directions `d` and step sizes `s`;
//! in smooth mode they are `x_i + s * grad_i u_i`.
//!
//! RNG contract: one stream per run seeded from [`DynamicsConfig::rng_seed`].
//! Each move consumes exactly two draws, publisher first and document
//! second, both as `gen_range(0..len as u64)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid_config, invalid_input, unsupported};
use crate::model::{welfare, DistanceSpec, PublishersGame, StrategyProfile, WelfareReport};
use crate::seed;
use crate::{Result, IDENTITY_TOLERANCE};

/// Default improvement threshold.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Default iteration budget of the discrete dynamic.
pub const DEFAULT_DISCRETE_ITERS: usize = 100;
/// Smooth dynamics default to this many iterations per dimension.
pub const SMOOTH_ITERS_PER_DIM: usize = 100;
/// Largest dimension for which the default direction set is built
/// (`3^k - 1` directions).
pub const MAX_DEFAULT_DIRECTION_DIM: usize = 12;

/// How candidates are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Fixed directions times step sizes.
    Discrete,
    /// Utility gradient times step sizes.
    Smooth,
}

/// Handling of candidates that leave the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Boundary {
    /// Clamp every coordinate into `[0, 1]`.
    #[default]
    Clamp,
    /// Drop the candidate.
    Discard,
}

/// Parameters of one dynamic run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicsConfig {
    /// Minimal utility gain that counts as an improvement.
    pub epsilon: f64,
    /// Iteration budget `T`.
    pub max_iters: usize,
    /// Step sizes.
    pub step_sizes: Vec<f64>,
    /// Unit directions (discrete mode only).
    pub directions: Vec<Vec<f64>>,
    /// Candidate generator.
    pub mode: Mode,
    /// Out-of-cube handling.
    pub boundary: Boundary,
    /// Seed of the run's RNG stream.
    pub rng_seed: u64,
}

/// Step sizes `(1/2)^j` for `j = 1..=10`.
pub fn default_step_sizes() -> Vec<f64> {
    (1..=10).map(|j| libm::pow(0.5, j as f64)).collect()
}

/// All nonzero vectors of `{-1, 0, 1}^k`, normalized to unit length.
pub fn default_directions(k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > MAX_DEFAULT_DIRECTION_DIM {
        return Err(invalid_config!(
            "default directions are built for 1 <= k <= {MAX_DEFAULT_DIRECTION_DIM}, got {k}"
        ));
    }
    let total = 3usize.pow(k as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 0..total {
        let mut c = code;
        let mut dir = vec![0.0; k];
        for slot in dir.iter_mut() {
            *slot = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        let norm2: f64 = dir.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        let norm = libm::sqrt(norm2);
        dir.iter_mut().for_each(|v| *v /= norm);
        out.push(dir);
    }
    Ok(out)
}

impl DynamicsConfig {
    /// Discrete dynamic with the default steps, directions, `epsilon` and
    /// `T = 100`.
    pub fn discrete(k: usize) -> Result<Self> {
        Ok(DynamicsConfig {
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_DISCRETE_ITERS,
            step_sizes: default_step_sizes(),
            directions: default_directions(k)?,
            mode: Mode::Discrete,
            boundary: Boundary::Clamp,
            rng_seed: 0,
        })
    }

    /// Smooth dynamic with the default steps, `epsilon` and `T = 100 k`.
    pub fn smooth(k: usize) -> Self {
        DynamicsConfig {
            epsilon: DEFAULT_EPSILON,
            max_iters: SMOOTH_ITERS_PER_DIM * k,
            step_sizes: default_step_sizes(),
            directions: Vec::new(),
            mode: Mode::Smooth,
            boundary: Boundary::Clamp,
            rng_seed: 0,
        }
    }

    /// Builder-style seed setter.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Checks the configuration against `game`.
    pub fn validate(&self, game: &PublishersGame) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid_config!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            return Err(invalid_config!("iteration budget must be positive"));
        }
        if self.step_sizes.is_empty() {
            return Err(invalid_config!("step size set is empty"));
        }
        if let Some(s) = self.step_sizes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(invalid_config!("step sizes must be positive, got {s}"));
        }
        match self.mode {
            Mode::Discrete => {
                if self.directions.is_empty() {
                    return Err(invalid_config!("direction set is empty"));
                }
                for d in &self.directions {
                    if d.len() != game.k() {
                        return Err(invalid_config!(
                            "direction of dimension {} in a game with k = {}",
                            d.len(),
                            game.k()
                        ));
                    }
                    let norm = libm::sqrt(d.iter().map(|v| v * v).sum::<f64>());
                    if (norm - 1.0).abs() > 1e-9 {
                        return Err(invalid_config!("direction {d:?} is not a unit vector"));
                    }
                }
            }
            Mode::Smooth => check_differentiable(game)?,
        }
        Ok(())
    }
}

fn check_differentiable(game: &PublishersGame) -> Result<()> {
    if !game.ranking().is_differentiable() {
        return Err(unsupported!(
            "gradients are undefined for the {} ranking",
            game.ranking().kind()
        ));
    }
    if !matches!(game.distance(), DistanceSpec::SquaredEuclidean { .. }) {
        return Err(unsupported!("gradients need the squared Euclidean distance"));
    }
    Ok(())
}

/// Analytic gradient of publisher `i`'s utility with respect to its own
/// document.
pub fn utility_gradient(
    game: &PublishersGame,
    profile: &StrategyProfile,
    i: usize,
) -> Result<Vec<f64>> {
    game.check_profile(profile)?;
    if i >= game.n() {
        return Err(invalid_input!("publisher {i} out of range for n = {}", game.n()));
    }
    check_differentiable(game)?;
    Ok(gradient_unchecked(game, profile, i))
}

fn gradient_unchecked(game: &PublishersGame, profile: &StrategyProfile, i: usize) -> Vec<f64> {
    let DistanceSpec::SquaredEuclidean { normalizer } = *game.distance() else {
        unreachable!("checked by caller")
    };
    let dstar = game.distances_to_need(profile);
    let sensitivity = game
        .ranking()
        .own_distance_sensitivity(&dstar, i)
        .unwrap_or_default();
    let x = profile.doc(i);
    let need = game.info_need();
    let anchor = &game.initial_docs()[i];
    let scale = 2.0 / normalizer;
    (0..game.k())
        .map(|c| {
            sensitivity * scale * (x[c] - need[c]) - game.lambda() * scale * (x[c] - anchor[c])
        })
        .collect()
}

/// Restricted best response of one publisher.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Utility at the current document.
    pub current_utility: f64,
    /// Best utility over the candidates; `-inf` when there is none.
    pub best_utility: f64,
    /// Distinct documents attaining `best_utility` within `1e-12`.
    pub candidates: Vec<Vec<f64>>,
}

impl BestResponse {
    /// Utility gain of moving to a best-response document.
    pub fn gain(&self) -> f64 {
        self.best_utility - self.current_utility
    }
}

fn place(x: &[f64], dir: &[f64], step: f64, boundary: Boundary) -> Option<Vec<f64>> {
    let raw = x.iter().zip(dir).map(|(a, d)| a + step * d);
    match boundary {
        Boundary::Clamp => Some(raw.map(|v| v.clamp(0.0, 1.0)).collect()),
        Boundary::Discard => {
            let v: Vec<f64> = raw.collect();
            v.iter().all(|c| (0.0..=1.0).contains(c)).then_some(v)
        }
    }
}

/// Argmax set of publisher `i`'s utility over the configured moves.
pub fn restricted_best_response(
    game: &PublishersGame,
    profile: &StrategyProfile,
    i: usize,
    config: &DynamicsConfig,
) -> Result<BestResponse> {
    game.check_profile(profile)?;
    config.validate(game)?;
    if i >= game.n() {
        return Err(invalid_input!("publisher {i} out of range for n = {}", game.n()));
    }
    Ok(best_response_unchecked(game, profile, i, config))
}

fn best_response_unchecked(
    game: &PublishersGame,
    profile: &StrategyProfile,
    i: usize,
    config: &DynamicsConfig,
) -> BestResponse {
    let x = profile.doc(i);
    let mut moves: Vec<Vec<f64>> = Vec::new();
    match config.mode {
        Mode::Discrete => {
            for dir in &config.directions {
                for &s in &config.step_sizes {
                    moves.extend(place(x, dir, s, config.boundary));
                }
            }
        }
        Mode::Smooth => {
            let grad = gradient_unchecked(game, profile, i);
            for &s in &config.step_sizes {
                moves.extend(place(x, &grad, s, config.boundary));
            }
        }
    }

    let utilities: Vec<f64> = moves
        .iter()
        .map(|m| game.deviation_utility(profile, i, m))
        .collect();
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for (m, u) in moves.into_iter().zip(&utilities) {
        if *u >= best - IDENTITY_TOLERANCE && !candidates.contains(&m) {
            candidates.push(m);
        }
    }
    BestResponse {
        current_utility: game.utility_of(profile, i),
        best_utility: best,
        candidates,
    }
}

/// Publishers whose restricted best response gains at least `epsilon`.
pub fn non_optimal_publishers(
    game: &PublishersGame,
    profile: &StrategyProfile,
    config: &DynamicsConfig,
) -> Result<Vec<usize>> {
    game.check_profile(profile)?;
    config.validate(game)?;
    Ok(improvers(game, profile, config)
        .into_iter()
        .map(|(i, _)| i)
        .collect())
}

fn improvers(
    game: &PublishersGame,
    profile: &StrategyProfile,
    config: &DynamicsConfig,
) -> Vec<(usize, BestResponse)> {
    (0..game.n())
        .map(|i| (i, best_response_unchecked(game, profile, i, config)))
        .filter(|(_, br)| br.gain() >= config.epsilon)
        .collect()
}

/// One move of a dynamic.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStep {
    /// Iteration number, starting at 1.
    pub t: usize,
    /// Publisher that moved.
    pub mover: usize,
    /// Its document before the move.
    pub old: Vec<f64>,
    /// Its document after the move.
    pub new: Vec<f64>,
    /// Its utility gain.
    pub gain: f64,
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationTrace {
    /// Moves in order.
    pub steps: Vec<TraceStep>,
    /// Profile after the last move.
    pub final_profile: StrategyProfile,
    /// Whether an `epsilon`-equilibrium was reached within the budget.
    pub converged: bool,
    /// Number of moves made.
    pub iterations_used: usize,
    /// Welfare at `final_profile`.
    pub final_welfare: WelfareReport,
}

/// Runs the dynamic from the initial documents.
///
/// For `t = 1..=T`: if no publisher can gain `epsilon`, stop converged;
/// otherwise move one. A run that spends all `T` moves is reported as not
/// converged without a final check.
pub fn run_dynamic(game: &PublishersGame, config: &DynamicsConfig) -> Result<SimulationTrace> {
    config.validate(game)?;
    let mut rng = seed::stream(config.rng_seed);
    let mut profile = game.initial_profile();
    let mut steps = Vec::new();
    let mut converged = false;

    for t in 1..=config.max_iters {
        let mut open = improvers(game, &profile, config);
        if open.is_empty() {
            converged = true;
            break;
        }
        let pick = rng.gen_range(0..open.len() as u64) as usize;
        let (mover, br) = open.swap_remove(pick);
        let choice = rng.gen_range(0..br.candidates.len() as u64) as usize;
        let new = br.candidates[choice].clone();
        let old = profile.doc(mover).to_vec();
        let gain = br.gain();
        profile.set_doc(mover, new.clone());
        steps.push(TraceStep {
            t,
            mover,
            old,
            new,
            gain,
        });
    }

    let final_welfare = welfare(game, &profile)?;
    Ok(SimulationTrace {
        iterations_used: steps.len(),
        steps,
        final_profile: profile,
        converged,
        final_welfare,
    })
}
