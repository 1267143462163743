//! Strategic publishers game.
//!
//! Publishers place documents in the unit cube `[0,1]^k`, trading off the
//! probability of being ranked first against the cost of drifting away from
//! their preferred content. This crate holds the pure algorithmic pieces:
//!
//! - [`model`]: games, strategy profiles, distances, relative relevance,
//!   utilities and welfare.
//! - [`ranking`]: the probability ranking principle, linear and softmax
//!   relative-relevance rankings, and the uniform random ranking.
//! - [`dynamics`]: discrete and gradient-driven better-response dynamics.
//! - [`verification`]: the exact potential of linear rankings, extreme-case
//!   ranking ratios and an exhaustive grid search for pure equilibria.
//!
//! The crate is `no_std` (it needs `alloc`). IO, experiment orchestration and
//! the command-line driver live in the `pubgame` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod dynamics;
mod error;
pub mod model;
pub mod ranking;
pub mod seed;
pub mod verification;

pub use error::{Error, Result};
pub use model::{DistanceSpec, PublishersGame, StrategyProfile, WelfareReport};
pub use ranking::{RankingDistribution, RankingKind, RankingSpec};

/// Absolute tolerance used for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
