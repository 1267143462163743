//! Experiments, file formats and the command-line driver for the strategic
//! publishers game. The game itself lives in [`pubgame_core`].

pub mod bootstrap;
pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
