//! Game description, strategy profiles, utilities and welfare.

use alloc::vec::Vec;

use crate::error::{invalid_config, invalid_input};
use crate::ranking::{RankingDistribution, RankingSpec};
use crate::Result;

/// Distance between two documents. Every variant maps the unit cube into
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum DistanceSpec {
    /// `||x - y||^2 / normalizer`.
    SquaredEuclidean {
        /// Divisor `c`; `c = k` makes the bound on the unit cube tight.
        normalizer: f64,
    },
    /// `|x - y|` on the unit interval (`k = 1` only).
    Absolute,
}

impl DistanceSpec {
    /// Squared Euclidean distance normalized by `k`, the largest squared
    /// distance between two points of `[0,1]^k`.
    pub fn squared_euclidean(k: usize) -> Self {
        DistanceSpec::SquaredEuclidean {
            normalizer: k as f64,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        match *self {
            DistanceSpec::SquaredEuclidean { normalizer } => {
                // smaller normalizers break the [0, 1] bound on the cube
                if !(normalizer.is_finite() && normalizer >= k as f64) {
                    return Err(invalid_config!(
                        "squared Euclidean normalizer must be at least k = {k}, got {normalizer}"
                    ));
                }
            }
            DistanceSpec::Absolute => {
                if k != 1 {
                    return Err(invalid_config!("absolute distance requires k = 1, got k = {k}"));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the distance without checking dimensions.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            DistanceSpec::SquaredEuclidean { normalizer } => {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / normalizer
            }
            DistanceSpec::Absolute => libm::fabs(x[0] - y[0]),
        }
    }
}

/// Distance between `x` and `y` under `spec`.
pub fn distance(spec: &DistanceSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(invalid_input!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        ));
    }
    if x.is_empty() {
        return Err(invalid_input!("points must have at least one coordinate"));
    }
    if matches!(spec, DistanceSpec::Absolute) && x.len() != 1 {
        return Err(invalid_input!("absolute distance is defined for k = 1 only"));
    }
    Ok(spec.eval(x, y))
}

fn check_point(what: &str, x: &[f64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(invalid_input!("{what} has dimension {}, expected {k}", x.len()));
    }
    if let Some(c) = x.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(invalid_input!("{what} has coordinate {c} outside [0, 1]"));
    }
    Ok(())
}

/// One document per publisher, each a point of `[0,1]^k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct StrategyProfile {
    docs: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Builds a profile, checking that all documents share one dimension and
    /// lie in the unit cube.
    pub fn new(docs: Vec<Vec<f64>>) -> Result<Self> {
        let k = docs.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(invalid_input!("profile needs at least one non-empty document"));
        }
        for (i, doc) in docs.iter().enumerate() {
            check_point(&alloc::format!("document {i}"), doc, k)?;
        }
        Ok(StrategyProfile { docs })
    }

    /// Number of publishers.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    /// Always false for a constructed profile.
    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Dimension of each document.
    pub fn dim(&self) -> usize {
        self.docs[0].len()
    }

    /// Publisher `i`'s document.
    pub fn doc(&self, i: usize) -> &[f64] {
        &self.docs[i]
    }

    /// All documents.
    pub fn docs(&self) -> &[Vec<f64>] {
        &self.docs
    }

    /// Replaces publisher `i`'s document. The caller keeps it in the cube.
    pub(crate) fn set_doc(&mut self, i: usize, doc: Vec<f64>) {
        debug_assert_eq!(doc.len(), self.dim());
        self.docs[i] = doc;
    }

    /// A copy with publisher `i`'s document replaced by `doc`.
    pub fn with_doc(&self, i: usize, doc: &[f64]) -> Result<Self> {
        check_point("replacement document", doc, self.dim())?;
        let mut next = self.clone();
        next.docs[i] = doc.to_vec();
        Ok(next)
    }
}

/// Immutable description of a publishers game.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PublishersGame {
    lambda: f64,
    distance: DistanceSpec,
    initial_docs: Vec<Vec<f64>>,
    info_need: Vec<f64>,
    ranking: RankingSpec,
}

impl PublishersGame {
    /// Builds and validates a game. The publisher count and dimension are
    /// taken from `initial_docs`.
    pub fn new(
        lambda: f64,
        distance: DistanceSpec,
        initial_docs: Vec<Vec<f64>>,
        info_need: Vec<f64>,
        ranking: RankingSpec,
    ) -> Result<Self> {
        let n = initial_docs.len();
        if n < 2 {
            return Err(invalid_config!("a game needs at least 2 publishers, got {n}"));
        }
        let k = info_need.len();
        if k == 0 {
            return Err(invalid_config!("embedding dimension must be at least 1"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid_config!("cost factor lambda must be positive, got {lambda}"));
        }
        check_point("information need", &info_need, k)?;
        for (i, doc) in initial_docs.iter().enumerate() {
            check_point(&alloc::format!("initial document {i}"), doc, k)?;
        }
        distance.validate(k)?;
        ranking.validate(n)?;
        Ok(PublishersGame {
            lambda,
            distance,
            initial_docs,
            info_need,
            ranking,
        })
    }

    /// Number of publishers.
    pub fn n(&self) -> usize {
        self.initial_docs.len()
    }

    /// Embedding dimension.
    pub fn k(&self) -> usize {
        self.info_need.len()
    }

    /// Cost factor.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Distance function.
    pub fn distance(&self) -> &DistanceSpec {
        &self.distance
    }

    /// Preferred documents, one per publisher.
    pub fn initial_docs(&self) -> &[Vec<f64>] {
        &self.initial_docs
    }

    /// Target point of user demand.
    pub fn info_need(&self) -> &[f64] {
        &self.info_need
    }

    /// Ranking function.
    pub fn ranking(&self) -> &RankingSpec {
        &self.ranking
    }

    /// Same game under a different ranking.
    pub fn with_ranking(&self, ranking: RankingSpec) -> Result<Self> {
        ranking.validate(self.n())?;
        Ok(PublishersGame {
            ranking,
            ..self.clone()
        })
    }

    /// Same game with a different cost factor.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid_config!("cost factor lambda must be positive, got {lambda}"));
        }
        Ok(PublishersGame {
            lambda,
            ..self.clone()
        })
    }

    /// The profile where everyone publishes their initial document.
    pub fn initial_profile(&self) -> StrategyProfile {
        StrategyProfile {
            docs: self.initial_docs.clone(),
        }
    }

    /// Checks that `profile` has `n` documents of dimension `k`.
    pub fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n() || profile.dim() != self.k() {
            return Err(invalid_input!(
                "profile is {}x{}, game expects {}x{}",
                profile.len(),
                profile.dim(),
                self.n(),
                self.k()
            ));
        }
        Ok(())
    }

    /// Distance of a document from the information need.
    #[inline]
    pub fn dist_to_need(&self, x: &[f64]) -> f64 {
        self.distance.eval(x, &self.info_need)
    }

    /// Distance of a document from publisher `i`'s initial document.
    #[inline]
    pub fn dist_to_initial(&self, i: usize, x: &[f64]) -> f64 {
        self.distance.eval(x, &self.initial_docs[i])
    }

    /// Distances of every document from the information need.
    pub fn distances_to_need(&self, profile: &StrategyProfile) -> Vec<f64> {
        profile.docs.iter().map(|x| self.dist_to_need(x)).collect()
    }

    /// Ranking distribution at `profile` (assumes a checked profile).
    pub fn rank(&self, profile: &StrategyProfile) -> RankingDistribution {
        self.ranking.distribution(&self.distances_to_need(profile))
    }

    /// Utility of publisher `i` if it published `candidate` while everyone
    /// else keeps their document from `profile`.
    pub fn deviation_utility(&self, profile: &StrategyProfile, i: usize, candidate: &[f64]) -> f64 {
        let dstar: Vec<f64> = profile
            .docs
            .iter()
            .enumerate()
            .map(|(j, x)| self.dist_to_need(if j == i { candidate } else { x }))
            .collect();
        self.ranking.probability(&dstar, i) - self.lambda * self.dist_to_initial(i, candidate)
    }

    /// Utility of publisher `i` at `profile`.
    pub fn utility_of(&self, profile: &StrategyProfile, i: usize) -> f64 {
        self.deviation_utility(profile, i, &profile.docs[i])
    }
}

/// Welfare of a profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WelfareReport {
    /// `1 - lambda * sum_i d0(x_i)`.
    pub publishers_welfare: f64,
    /// `-sum_i d*(x_i) d0(x_i)`; never positive.
    pub users_welfare: f64,
    /// `u_i(x)` for every publisher.
    pub per_publisher_utility: Vec<f64>,
}

/// Relative relevance from distances to the information need: the mean
/// distance of the other documents minus one's own.
pub fn relative_relevance_from_distances(dstar: &[f64]) -> Vec<f64> {
    let n = dstar.len();
    let total: f64 = dstar.iter().sum();
    let others = (n - 1) as f64;
    dstar.iter().map(|&d| (total - d) / others - d).collect()
}

/// Relative relevance of every publisher at `profile`.
pub fn relative_relevance(game: &PublishersGame, profile: &StrategyProfile) -> Result<Vec<f64>> {
    game.check_profile(profile)?;
    Ok(relative_relevance_from_distances(&game.distances_to_need(profile)))
}

/// Utility of every publisher: probability of being ranked first minus
/// `lambda` times the distance from the initial document.
pub fn utility(game: &PublishersGame, profile: &StrategyProfile) -> Result<Vec<f64>> {
    game.check_profile(profile)?;
    let probs = game.rank(profile);
    Ok(probs
        .probs()
        .iter()
        .enumerate()
        .map(|(i, r)| r - game.lambda * game.dist_to_initial(i, profile.doc(i)))
        .collect())
}

/// Publishers' and users' welfare at `profile`.
pub fn welfare(game: &PublishersGame, profile: &StrategyProfile) -> Result<WelfareReport> {
    let per_publisher_utility = utility(game, profile)?;
    let mut cost = 0.0;
    let mut users = 0.0;
    for (i, x) in profile.docs.iter().enumerate() {
        let d0 = game.dist_to_initial(i, x);
        cost += d0;
        users -= game.dist_to_need(x) * d0;
    }
    Ok(WelfareReport {
        publishers_welfare: 1.0 - game.lambda * cost,
        users_welfare: users,
        per_publisher_utility,
    })
}
