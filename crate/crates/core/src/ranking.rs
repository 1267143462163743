//! Ranking functions.
//!
//! Every ranking here depends on a profile only through the distances of the
//! documents from the information need, so the core entry point is
//! [`RankingSpec::distribution`] over that distance vector.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid_config, invalid_input};
use crate::model::{relative_relevance_from_distances, PublishersGame, StrategyProfile};
use crate::{Error, Result};

/// Default width of the tie set of the probability ranking principle.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

/// The four ranking families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RankingKind {
    /// Probability ranking principle: closest document wins.
    Prp,
    /// Linear transformation of relative relevance.
    Linear,
    /// Softmax of relative relevance.
    Softmax,
    /// Uniform over publishers.
    Random,
}

impl RankingKind {
    /// All kinds, in a fixed order.
    pub const ALL: [RankingKind; 4] = [
        RankingKind::Prp,
        RankingKind::Linear,
        RankingKind::Softmax,
        RankingKind::Random,
    ];

    /// Short lowercase name used in files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            RankingKind::Prp => "prp",
            RankingKind::Linear => "linear",
            RankingKind::Softmax => "softmax",
            RankingKind::Random => "random",
        }
    }
}

impl fmt::Display for RankingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prp" => Ok(RankingKind::Prp),
            "linear" | "linear-rrp" => Ok(RankingKind::Linear),
            "softmax" | "softmax-rrp" => Ok(RankingKind::Softmax),
            "random" => Ok(RankingKind::Random),
            other => Err(invalid_input!("unknown ranking kind {other:?}")),
        }
    }
}

/// A ranking function with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum RankingSpec {
    /// Uniform over the publishers within `tie_tolerance` of the smallest
    /// distance to the information need.
    Prp {
        /// Width of the tie set.
        tie_tolerance: f64,
    },
    /// `r_i = a * nu_i + 1/n`.
    Linear {
        /// Slope `a`; `None` means the maximal valid slope `1/n`.
        slope: Option<f64>,
    },
    /// `r_i = softmax(nu)_i`.
    Softmax,
    /// `r_i = 1/n`.
    Random,
}

impl RankingSpec {
    /// Probability ranking principle with the default tie tolerance.
    pub fn prp() -> Self {
        RankingSpec::Prp {
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }

    /// Linear ranking with slope `1/n`.
    pub fn linear_max_slope() -> Self {
        RankingSpec::Linear { slope: None }
    }

    /// Linear ranking with an explicit slope.
    pub fn linear(slope: f64) -> Self {
        RankingSpec::Linear { slope: Some(slope) }
    }

    /// Softmax ranking.
    pub fn softmax() -> Self {
        RankingSpec::Softmax
    }

    /// Uniform ranking.
    pub fn random() -> Self {
        RankingSpec::Random
    }

    /// Default parameters for `kind`.
    pub fn from_kind(kind: RankingKind) -> Self {
        match kind {
            RankingKind::Prp => Self::prp(),
            RankingKind::Linear => Self::linear_max_slope(),
            RankingKind::Softmax => Self::softmax(),
            RankingKind::Random => Self::random(),
        }
    }

    /// Family of this ranking.
    pub fn kind(&self) -> RankingKind {
        match self {
            RankingSpec::Prp { .. } => RankingKind::Prp,
            RankingSpec::Linear { .. } => RankingKind::Linear,
            RankingSpec::Softmax => RankingKind::Softmax,
            RankingSpec::Random => RankingKind::Random,
        }
    }

    /// Whether `r_i` is differentiable in publisher `i`'s document.
    pub fn is_differentiable(&self) -> bool {
        !matches!(self, RankingSpec::Prp { .. })
    }

    /// Checks the parameters for a game with `n` publishers.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            RankingSpec::Prp { tie_tolerance } => {
                if !(tie_tolerance.is_finite() && tie_tolerance >= 0.0) {
                    return Err(invalid_config!(
                        "tie tolerance must be nonnegative, got {tie_tolerance}"
                    ));
                }
                Ok(())
            }
            RankingSpec::Linear { slope: Some(a) } => validate_slope(a, n),
            RankingSpec::Linear { slope: None } => max_valid_slope(n).map(|_| ()),
            RankingSpec::Softmax | RankingSpec::Random => Ok(()),
        }
    }

    /// Resolved slope of a linear ranking for `n` publishers.
    pub fn slope(&self, n: usize) -> Option<f64> {
        match *self {
            RankingSpec::Linear { slope } => Some(slope.unwrap_or(1.0 / n as f64)),
            _ => None,
        }
    }

    /// Ranking distribution given each document's distance from the
    /// information need. Parameters must already be valid for `dstar.len()`.
    pub fn distribution(&self, dstar: &[f64]) -> RankingDistribution {
        let n = dstar.len();
        let probs = match *self {
            RankingSpec::Prp { tie_tolerance } => prp_from_distances(dstar, tie_tolerance),
            RankingSpec::Linear { .. } => {
                let a = self.slope(n).unwrap_or_default();
                let b = 1.0 / n as f64;
                relative_relevance_from_distances(dstar)
                    .into_iter()
                    .map(|nu| a * nu + b)
                    .collect()
            }
            RankingSpec::Softmax => softmax(&relative_relevance_from_distances(dstar)),
            RankingSpec::Random => vec![1.0 / n as f64; n],
        };
        RankingDistribution { probs }
    }

    /// `r_i` alone; same contract as [`RankingSpec::distribution`].
    pub fn probability(&self, dstar: &[f64], i: usize) -> f64 {
        let n = dstar.len();
        match *self {
            RankingSpec::Linear { .. } => {
                let a = self.slope(n).unwrap_or_default();
                let total: f64 = dstar.iter().sum();
                let nu = (total - dstar[i]) / (n - 1) as f64 - dstar[i];
                a * nu + 1.0 / n as f64
            }
            RankingSpec::Random => 1.0 / n as f64,
            _ => self.distribution(dstar).probs[i],
        }
    }

    /// Derivative of `r_i` with respect to publisher `i`'s own distance from
    /// the information need, with every other distance held fixed.
    ///
    /// Moving `d*_i` shifts every `nu_j`, not just `nu_i`, so for softmax
    /// this is `-s_i (1 - s_i) n / (n - 1)`.
    pub fn own_distance_sensitivity(&self, dstar: &[f64], i: usize) -> Result<f64> {
        let n = dstar.len();
        match *self {
            RankingSpec::Prp { .. } => Err(Error::Unsupported(
                "the probability ranking principle is not differentiable".into(),
            )),
            RankingSpec::Linear { .. } => Ok(-self.slope(n).unwrap_or_default()),
            RankingSpec::Softmax => {
                let s = self.distribution(dstar).probs[i];
                Ok(-s * (1.0 - s) * n as f64 / (n - 1) as f64)
            }
            RankingSpec::Random => Ok(0.0),
        }
    }
}

impl fmt::Display for RankingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingSpec::Linear { slope: Some(a) } => write!(f, "linear(a={a})"),
            other => f.write_str(other.kind().name()),
        }
    }
}

fn prp_from_distances(dstar: &[f64], tie_tolerance: f64) -> Vec<f64> {
    let best = dstar.iter().copied().fold(f64::INFINITY, f64::min);
    let winners = dstar.iter().filter(|&&d| d <= best + tie_tolerance).count();
    let share = 1.0 / winners as f64;
    dstar
        .iter()
        .map(|&d| if d <= best + tie_tolerance { share } else { 0.0 })
        .collect()
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Probability of each publisher being ranked first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RankingDistribution {
    probs: Vec<f64>,
}

impl RankingDistribution {
    /// Per-publisher probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Consumes the distribution.
    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Whether the entries lie in `[0, 1]` and sum to one within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| (-tol..=1.0 + tol).contains(p))
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Largest slope for which a linear ranking over `n` publishers is a valid
/// distribution everywhere.
pub fn max_valid_slope(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid_input!("need at least 2 publishers, got {n}"));
    }
    Ok(1.0 / n as f64)
}

/// Accepts exactly the slopes `0 < a <= 1/n`.
pub fn validate_slope(a: f64, n: usize) -> Result<()> {
    let max = max_valid_slope(n)?;
    if a > 0.0 && a <= max {
        Ok(())
    } else {
        Err(invalid_config!("linear ranking slope must lie in (0, {max}], got {a}"))
    }
}

fn ranked(
    game: &PublishersGame,
    profile: &StrategyProfile,
    spec: RankingSpec,
) -> Result<RankingDistribution> {
    game.check_profile(profile)?;
    spec.validate(game.n())?;
    Ok(spec.distribution(&game.distances_to_need(profile)))
}

/// Probability ranking principle at `profile`.
pub fn prp_rank(
    game: &PublishersGame,
    profile: &StrategyProfile,
    tie_tolerance: f64,
) -> Result<RankingDistribution> {
    ranked(game, profile, RankingSpec::Prp { tie_tolerance })
}

/// Linear relative-relevance ranking with slope `a`.
pub fn linear_rrp_rank(
    game: &PublishersGame,
    profile: &StrategyProfile,
    a: f64,
) -> Result<RankingDistribution> {
    ranked(game, profile, RankingSpec::linear(a))
}

/// Softmax relative-relevance ranking.
pub fn softmax_rrp_rank(game: &PublishersGame, profile: &StrategyProfile) -> Result<RankingDistribution> {
    ranked(game, profile, RankingSpec::Softmax)
}

/// Uniform ranking; ignores the profile.
pub fn random_rank(game: &PublishersGame, profile: &StrategyProfile) -> Result<RankingDistribution> {
    ranked(game, profile, RankingSpec::Random)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistanceSpec;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn prp_examples() {
        let p = RankingSpec::prp();
        assert_eq!(p.distribution(&[0.3, 0.7]).probs(), &[1.0, 0.0]);
        assert_eq!(p.distribution(&[0.5, 0.5, 0.9]).probs(), &[0.5, 0.5, 0.0]);
        assert_eq!(p.distribution(&[0.0, 1.0, 1.0, 1.0]).probs(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_examples() {
        let half = RankingSpec::linear(0.5);
        assert!(close(half.distribution(&[0.4, 0.4]).probs(), &[0.5, 0.5]));
        // nu = (-0.5, 0.5)
        assert!(close(half.distribution(&[0.5, 0.0]).probs(), &[0.25, 0.75]));
        // nu = (1, -1)
        assert!(close(half.distribution(&[0.0, 1.0]).probs(), &[1.0, 0.0]));
        let lin = RankingSpec::linear_max_slope();
        assert!(close(lin.distribution(&[0.2, 0.2, 0.2]).probs(), &[1.0 / 3.0; 3]));
    }

    #[test]
    fn softmax_examples() {
        let s = RankingSpec::softmax();
        assert!(close(s.distribution(&[0.3, 0.3, 0.3]).probs(), &[1.0 / 3.0; 3]));
        let e2 = libm::exp(2.0);
        let got = s.distribution(&[0.0, 1.0]);
        assert!(close(got.probs(), &[e2 / (e2 + 1.0), 1.0 / (e2 + 1.0)]));
        assert!((got.probs()[0] - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn random_examples() {
        let r = RankingSpec::random();
        assert_eq!(r.distribution(&[0.0, 1.0]).probs(), &[0.5, 0.5]);
        assert!(close(r.distribution(&[0.1, 0.9, 0.3, 0.0, 1.0]).probs(), &[0.2; 5]));
    }

    #[test]
    fn max_valid_slope_examples() {
        assert_eq!(max_valid_slope(2).unwrap(), 0.5);
        assert_eq!(max_valid_slope(4).unwrap(), 0.25);
        assert_eq!(max_valid_slope(10).unwrap(), 0.1);
        assert!(max_valid_slope(1).is_err());
        assert!(max_valid_slope(0).is_err());
    }

    #[test]
    fn slope_boundary() {
        for n in [2usize, 3, 7, 100] {
            let max = 1.0 / n as f64;
            assert!(validate_slope(max, n).is_ok());
            assert!(validate_slope(max + 1e-9, n).is_err());
            assert!(validate_slope(0.0, n).is_err());
            assert!(validate_slope(-max, n).is_err());
            assert!(validate_slope(f64::NAN, n).is_err());
        }
    }

    #[test]
    fn free_functions_check_inputs() {
        let g = PublishersGame::new(
            1.0,
            DistanceSpec::Absolute,
            alloc::vec![alloc::vec![0.0], alloc::vec![0.0]],
            alloc::vec![1.0],
            RankingSpec::prp(),
        )
        .unwrap();
        let p = StrategyProfile::new(alloc::vec![alloc::vec![0.0], alloc::vec![0.5]]).unwrap();
        assert_eq!(prp_rank(&g, &p, 1e-12).unwrap().probs(), &[0.0, 1.0]);
        assert!(close(linear_rrp_rank(&g, &p, 0.5).unwrap().probs(), &[0.25, 0.75]));
        assert!(linear_rrp_rank(&g, &p, 0.6).is_err());
        assert!(softmax_rrp_rank(&g, &p).unwrap().is_valid(1e-12));
        assert_eq!(random_rank(&g, &p).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in RankingKind::ALL {
            assert_eq!(kind.name().parse::<RankingKind>().unwrap(), kind);
        }
        assert!("bm25".parse::<RankingKind>().is_err());
    }

    fn specs(n: usize) -> [RankingSpec; 5] {
        [
            RankingSpec::prp(),
            RankingSpec::linear_max_slope(),
            RankingSpec::linear(0.3 / n as f64),
            RankingSpec::softmax(),
            RankingSpec::random(),
        ]
    }

    proptest! {
        #[test]
        fn outputs_are_distributions(dstar in prop::collection::vec(0.0..=1.0f64, 2..12)) {
            for spec in specs(dstar.len()) {
                let r = spec.distribution(&dstar);
                prop_assert!(r.probs().iter().all(|p| (0.0..=1.0).contains(p)), "{spec}: {:?}", r);
                prop_assert!((r.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn permutation_equivariant(
            dstar in prop::collection::vec(0.0..=1.0f64, 2..9),
            rot in 0usize..8,
        ) {
            let n = dstar.len();
            let rot = rot % n;
            let mut rotated = dstar.clone();
            rotated.rotate_left(rot);
            for spec in specs(n) {
                let mut expect = spec.distribution(&dstar).into_vec();
                expect.rotate_left(rot);
                let got = spec.distribution(&rotated).into_vec();
                prop_assert!(close(&got, &expect), "{spec}");
            }
        }

        #[test]
        fn probability_matches_distribution(dstar in prop::collection::vec(0.0..=1.0f64, 2..9)) {
            for spec in specs(dstar.len()) {
                let full = spec.distribution(&dstar);
                for i in 0..dstar.len() {
                    prop_assert!((spec.probability(&dstar, i) - full.probs()[i]).abs() < 1e-14);
                }
            }
        }

        // Raising nu_i with the other coordinates of nu fixed raises r_i.
        #[test]
        fn monotone_in_own_relevance(
            nu in prop::collection::vec(-0.9..0.9f64, 2..8),
            i in 0usize..8,
        ) {
            let n = nu.len();
            let i = i % n;
            let mut bumped = nu.clone();
            bumped[i] += 1e-4;
            let a = 1.0 / n as f64;
            let linear = |v: &[f64]| a * v[i] + 1.0 / n as f64;
            prop_assert!(linear(&bumped) > linear(&nu));
            prop_assert!(softmax(&bumped)[i] > softmax(&nu)[i]);
        }
    }

    #[test]
    fn prp_is_discontinuous() {
        let p = RankingSpec::prp();
        let before = p.distribution(&[0.5, 0.5 + 5e-7]);
        let after = p.distribution(&[0.5 + 1e-6, 0.5 + 5e-7]);
        assert_eq!(before.probs()[0] - after.probs()[0], 1.0);
    }
}
