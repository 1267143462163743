//! JSON-lines trace files.
//!
//! Line 1 is a header `{"game": .., "config": .., "seed": ..}`, followed by
//! one `{"t", "mover", "old", "new", "gain"}` object per move and a final
//! `{"converged", "iters", "publishers_welfare", "users_welfare"}` line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use pubgame_core::dynamics::{DynamicsConfig, SimulationTrace, TraceStep};
use pubgame_core::PublishersGame;

use crate::{Error, Result};

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub game: PublishersGame,
    pub config: DynamicsConfig,
    pub seed: u64,
}

/// Last line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFooter {
    pub converged: bool,
    pub iters: usize,
    pub publishers_welfare: f64,
    pub users_welfare: f64,
}

/// A parsed trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
    pub footer: TraceFooter,
}

/// Writes `trace` in the JSON-lines format.
pub fn write_trace<W: Write>(
    mut out: W,
    game: &PublishersGame,
    config: &DynamicsConfig,
    trace: &SimulationTrace,
) -> Result<()> {
    let io = |e| Error::io("<trace>", e);
    let header = TraceHeader {
        game: game.clone(),
        config: config.clone(),
        seed: config.rng_seed,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for step in &trace.steps {
        serde_json::to_writer(&mut out, step)?;
        out.write_all(b"\n").map_err(io)?;
    }
    let footer = TraceFooter {
        converged: trace.converged,
        iters: trace.iterations_used,
        publishers_welfare: trace.final_welfare.publishers_welfare,
        users_welfare: trace.final_welfare.users_welfare,
    };
    serde_json::to_writer(&mut out, &footer)?;
    out.write_all(b"\n").map_err(io)?;
    out.flush().map_err(io)
}

/// Parses a trace written by [`write_trace`].
pub fn read_trace<R: BufRead>(input: R) -> Result<TraceFile> {
    let lines: Vec<String> = input
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io("<trace>", e))?;
    let lines: Vec<&str> = lines.iter().map(String::as_str).filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(Error::InvalidInput("trace needs a header and a final line".into()));
    }
    let header: TraceHeader = serde_json::from_str(lines[0])?;
    let footer: TraceFooter = serde_json::from_str(lines[lines.len() - 1])?;
    let steps = lines[1..lines.len() - 1]
        .iter()
        .map(|l| serde_json::from_str(l))
        .collect::<serde_json::Result<Vec<TraceStep>>>()?;
    Ok(TraceFile {
        header,
        steps,
        footer,
    })
}
