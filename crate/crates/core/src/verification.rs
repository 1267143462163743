//! Numeric checks of the game's structural properties.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid_input, unsupported};
use crate::model::{PublishersGame, StrategyProfile};
use crate::ranking::{RankingKind, RankingSpec};
use crate::{seed, Error, Result};

/// Largest number of grid profiles [`grid_pne_search`] will enumerate.
pub const GRID_PROFILE_LIMIT: u128 = 100_000_000;

fn linear_slope(game: &PublishersGame) -> Result<f64> {
    game.ranking().slope(game.n()).ok_or_else(|| {
        unsupported!(
            "an exact potential is only known for linear rankings, not {}",
            game.ranking().kind()
        )
    })
}

/// Exact potential of a linear-ranking game:
/// `sum_i -(a d*(x_i) + 1/n) - lambda d0(x_i)` for slope `a`.
pub fn exact_potential(game: &PublishersGame, profile: &StrategyProfile) -> Result<f64> {
    let a = linear_slope(game)?;
    game.check_profile(profile)?;
    Ok(potential_unchecked(game, profile, a))
}

fn potential_unchecked(game: &PublishersGame, profile: &StrategyProfile, a: f64) -> f64 {
    let base = 1.0 / game.n() as f64;
    profile
        .docs()
        .iter()
        .enumerate()
        .map(|(i, x)| -(a * game.dist_to_need(x) + base) - game.lambda() * game.dist_to_initial(i, x))
        .sum()
}

fn random_point<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen::<f64>()).collect()
}

/// Draws `samples` random unilateral deviations `(i, x_-i, x'_i, x''_i)` and
/// returns the largest `|(phi' - phi'') - (u_i' - u_i'')|`.
pub fn check_potential_identity(game: &PublishersGame, samples: usize, seed: u64) -> Result<f64> {
    let a = linear_slope(game)?;
    let mut rng = seed::stream(seed);
    let (n, k) = (game.n(), game.k());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let i = rng.gen_range(0..n as u64) as usize;
        let docs: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, k)).collect();
        let first = random_point(&mut rng, k);
        let second = random_point(&mut rng, k);
        let base = StrategyProfile::new(docs)?;
        let p1 = base.with_doc(i, &first)?;
        let p2 = base.with_doc(i, &second)?;
        let d_phi = potential_unchecked(game, &p1, a) - potential_unchecked(game, &p2, a);
        let d_u = game.utility_of(&p1, i) - game.utility_of(&p2, i);
        worst = worst.max((d_phi - d_u).abs());
    }
    Ok(worst)
}

/// Winner/loser ranking ratio in the extreme profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiecReport {
    /// Ranking family.
    pub kind: RankingKind,
    /// Publisher count.
    pub n: usize,
    /// `r_winner / r_loser`; infinite when the loser gets probability 0.
    pub ratio: f64,
    /// Lower bound the family is known to satisfy.
    pub claimed_alpha: f64,
}

impl DiecReport {
    /// Whether the measured ratio meets the claimed bound.
    pub fn holds(&self) -> bool {
        self.ratio >= self.claimed_alpha
    }

    /// Whether the ranking is deterministic in the extreme case.
    pub fn is_deterministic(&self) -> bool {
        self.ratio.is_infinite()
    }
}

/// Evaluates `ranking` where one publisher sits on the information need and
/// all others are at distance 1. The profile is built directly in distance
/// space, which is all the rankings look at.
pub fn diec_ratio(ranking: &RankingSpec, n: usize) -> Result<DiecReport> {
    if n < 2 {
        return Err(invalid_input!("need at least 2 publishers, got {n}"));
    }
    ranking.validate(n)?;
    let mut dstar = vec![1.0; n];
    dstar[0] = 0.0;
    let dist = ranking.distribution(&dstar);
    let (winner, loser) = (dist.probs()[0], dist.probs()[1]);
    let ratio = if loser == 0.0 { f64::INFINITY } else { winner / loser };
    let claimed_alpha = match *ranking {
        RankingSpec::Prp { .. } => f64::INFINITY,
        RankingSpec::Linear { slope } => match slope {
            None => 2.0,
            Some(a) if a == 1.0 / n as f64 => 2.0,
            Some(_) => 1.0,
        },
        RankingSpec::Softmax => core::f64::consts::E,
        RankingSpec::Random => 1.0,
    };
    Ok(DiecReport {
        kind: ranking.kind(),
        n,
        ratio,
        claimed_alpha,
    })
}

/// Outcome of an exhaustive grid search for pure equilibria.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSearchResult {
    /// Grid points per axis.
    pub resolution: usize,
    /// Improvement threshold.
    pub epsilon: f64,
    /// Grid profiles with no grid deviation gaining more than `epsilon`.
    pub found_equilibria: Vec<StrategyProfile>,
    /// Every profile was tested against every single-publisher deviation.
    pub exhaustive: bool,
}

/// Grid threshold `lambda / (2 * resolution)`: half a grid step of cost.
pub fn default_grid_epsilon(lambda: f64, resolution: usize) -> f64 {
    0.5 * lambda / resolution as f64
}

/// Enumerates every profile on the uniform grid with `resolution` points per
/// axis (`j / (resolution - 1)`) and keeps those where no publisher has a
/// grid deviation improving its utility by more than `epsilon`.
pub fn grid_pne_search(
    game: &PublishersGame,
    resolution: usize,
    epsilon: f64,
) -> Result<GridSearchResult> {
    if resolution < 2 {
        return Err(invalid_input!("grid resolution must be at least 2, got {resolution}"));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(invalid_input!("epsilon must be nonnegative, got {epsilon}"));
    }
    let (n, k) = (game.n(), game.k());
    let profiles = (resolution as u128)
        .checked_pow((n * k) as u32)
        .unwrap_or(u128::MAX);
    if profiles > GRID_PROFILE_LIMIT {
        return Err(Error::TooLarge {
            requested: profiles,
            limit: GRID_PROFILE_LIMIT,
        });
    }

    let axis: Vec<f64> = (0..resolution)
        .map(|j| j as f64 / (resolution - 1) as f64)
        .collect();
    let points: Vec<Vec<f64>> = (0..resolution.pow(k as u32))
        .map(|code| decode(code, k, &axis))
        .collect();

    let mut found = Vec::new();
    let mut code = vec![0usize; n];
    'profiles: loop {
        let docs: Vec<Vec<f64>> = code.iter().map(|&c| points[c].clone()).collect();
        let profile = StrategyProfile::new(docs)?;
        let stable = (0..n).all(|i| {
            let current = game.utility_of(&profile, i);
            points
                .iter()
                .all(|p| game.deviation_utility(&profile, i, p) - current <= epsilon)
        });
        if stable {
            found.push(profile);
        }
        for slot in code.iter_mut() {
            *slot += 1;
            if *slot < points.len() {
                continue 'profiles;
            }
            *slot = 0;
        }
        break;
    }

    Ok(GridSearchResult {
        resolution,
        epsilon,
        found_equilibria: found,
        exhaustive: true,
    })
}

fn decode(mut code: usize, k: usize, axis: &[f64]) -> Vec<f64> {
    (0..k)
        .map(|_| {
            let v = axis[code % axis.len()];
            code /= axis.len();
            v
        })
        .collect()
}

/// Central finite-difference gradient of publisher `i`'s utility in its own
/// document with step `h`.
pub fn finite_difference_gradient(
    game: &PublishersGame,
    profile: &StrategyProfile,
    i: usize,
    h: f64,
) -> Result<Vec<f64>> {
    game.check_profile(profile)?;
    if i >= game.n() {
        return Err(invalid_input!("publisher {i} out of range for n = {}", game.n()));
    }
    let x = profile.doc(i);
    Ok((0..game.k())
        .map(|c| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[c] += h;
            down[c] -= h;
            (game.deviation_utility(profile, i, &up) - game.deviation_utility(profile, i, &down))
                / (2.0 * h)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistanceSpec;

    fn line_game(ranking: RankingSpec, lambda: f64, x0: [f64; 2], need: f64) -> PublishersGame {
        PublishersGame::new(
            lambda,
            DistanceSpec::Absolute,
            vec![vec![x0[0]], vec![x0[1]]],
            vec![need],
            ranking,
        )
        .unwrap()
    }

    #[test]
    fn potential_at_shared_point() {
        for n in [2usize, 3, 5] {
            let g = PublishersGame::new(
                0.8,
                DistanceSpec::squared_euclidean(2),
                vec![vec![0.3, 0.6]; n],
                vec![0.3, 0.6],
                RankingSpec::linear_max_slope(),
            )
            .unwrap();
            let phi = exact_potential(&g, &g.initial_profile()).unwrap();
            assert!((phi - -1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn potential_hand_expansion() {
        // n = 2, k = 1, a = 1/2, lambda = 1, x* = 1, x0 = (0, 0.5), x_2 = 0.25.
        // u_1(x) = 1/2 (d*_2 - d*_1) + 1/2 - |x - 0| = 1/2 (0.75 - (1 - x)) + 1/2 - x
        // phi(x) = -(1/2 (1 - x) + 1/2) - x + const(x_2)
        // Both differences between x' = 0.8 and x'' = 0.1 equal -0.35.
        let g = line_game(RankingSpec::linear_max_slope(), 1.0, [0.0, 0.5], 1.0);
        let p1 = StrategyProfile::new(vec![vec![0.8], vec![0.25]]).unwrap();
        let p2 = StrategyProfile::new(vec![vec![0.1], vec![0.25]]).unwrap();
        let d_phi = exact_potential(&g, &p1).unwrap() - exact_potential(&g, &p2).unwrap();
        let d_u = g.utility_of(&p1, 0) - g.utility_of(&p2, 0);
        assert!((d_phi - -0.35).abs() < 1e-15);
        assert!((d_u - -0.35).abs() < 1e-15);
        assert_eq!(exact_potential(&g, &p1).unwrap() - exact_potential(&g, &p1).unwrap(), 0.0);
    }

    #[test]
    fn potential_requires_linear_ranking() {
        let g = line_game(RankingSpec::softmax(), 1.0, [0.0, 0.0], 1.0);
        assert!(matches!(
            check_potential_identity(&g, 10, 1),
            Err(Error::Unsupported(_))
        ));
        assert!(exact_potential(&g, &g.initial_profile()).is_err());
    }

    #[test]
    fn potential_identity_holds_for_all_valid_slopes() {
        for n in [2usize, 4] {
            for frac in [1.0, 0.5, 0.1] {
                let g = PublishersGame::new(
                    0.6,
                    DistanceSpec::squared_euclidean(3),
                    vec![vec![0.2, 0.4, 0.9]; n],
                    vec![0.7, 0.1, 0.5],
                    RankingSpec::linear(frac / n as f64),
                )
                .unwrap();
                assert!(check_potential_identity(&g, 2000, 5).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn diec_examples() {
        let lin4 = diec_ratio(&RankingSpec::linear_max_slope(), 4).unwrap();
        assert!((lin4.ratio - 3.0).abs() < 1e-12);
        assert!(lin4.holds());
        assert!(diec_ratio(&RankingSpec::linear_max_slope(), 2).unwrap().is_deterministic());
        let soft = diec_ratio(&RankingSpec::softmax(), 2).unwrap();
        assert!((soft.ratio - 7.389056).abs() < 1e-6);
        assert_eq!(diec_ratio(&RankingSpec::random(), 9).unwrap().ratio, 1.0);
        assert!(diec_ratio(&RankingSpec::prp(), 3).unwrap().is_deterministic());
        assert!(diec_ratio(&RankingSpec::prp(), 1).is_err());
        assert!(diec_ratio(&RankingSpec::linear(0.6), 2).is_err());
    }

    #[test]
    fn diec_ratio_increases_with_slope() {
        for n in [3usize, 5, 20] {
            let ratios: Vec<f64> = (1..=20)
                .map(|j| {
                    let a = j as f64 / (20.0 * n as f64);
                    diec_ratio(&RankingSpec::linear(a), n).unwrap().ratio
                })
                .collect();
            assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
        }
    }

    #[test]
    fn grid_finds_anchor_when_cost_dominates() {
        let g = line_game(RankingSpec::prp(), 1000.0, [0.33, 0.71], 0.5);
        let res = grid_pne_search(&g, 11, 1e-9).unwrap();
        assert!(res.exhaustive);
        let anchored = StrategyProfile::new(vec![vec![0.3], vec![0.7]]).unwrap();
        assert_eq!(res.found_equilibria, vec![anchored]);
    }

    #[test]
    fn grid_budget_is_enforced() {
        let g = PublishersGame::new(
            1.0,
            DistanceSpec::squared_euclidean(3),
            vec![vec![0.0; 3]; 3],
            vec![1.0; 3],
            RankingSpec::prp(),
        )
        .unwrap();
        assert!(matches!(grid_pne_search(&g, 10, 0.01), Err(Error::TooLarge { .. })));
        assert!(grid_pne_search(&g, 1, 0.01).is_err());
    }

    #[test]
    fn line_game_small_grid() {
        let prp = line_game(RankingSpec::prp(), 1.0, [0.0, 0.0], 1.0);
        let eps = default_grid_epsilon(1.0, 21);
        assert!(grid_pne_search(&prp, 21, eps).unwrap().found_equilibria.is_empty());
        let lin = prp.with_ranking(RankingSpec::linear_max_slope()).unwrap();
        let found = grid_pne_search(&lin, 21, eps).unwrap().found_equilibria;
        assert!(found.contains(&StrategyProfile::new(vec![vec![0.0], vec![0.0]]).unwrap()));
    }
}
