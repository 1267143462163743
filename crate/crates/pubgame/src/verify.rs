//! The `verify` check table.

use std::f64::consts::E;
use std::fmt;

use rand::Rng;

use pubgame_core::dynamics::utility_gradient;
use pubgame_core::ranking::{max_valid_slope, validate_slope};
use pubgame_core::seed::stream;
use pubgame_core::verification::{
    check_potential_identity, default_grid_epsilon, diec_ratio, finite_difference_gradient,
    grid_pne_search,
};
use pubgame_core::{DistanceSpec, PublishersGame, RankingSpec, StrategyProfile};

use crate::experiments::sample_game;
use crate::Result;

/// Check groups, selectable with `verify --only`.
pub const GROUPS: [&str; 5] = ["potential", "slope", "diec", "prp-grid", "gradient"];

/// Test hooks that break a component on purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Accept every linear slope.
    pub disable_slope_validation: bool,
}

/// Options of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Groups to run; empty means all.
    pub only: Vec<String>,
    pub seed: u64,
    /// Random samples per sampled check.
    pub samples: usize,
    pub faults: Faults,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            only: Vec::new(),
            seed: 42,
            samples: 10_000,
            faults: Faults::default(),
        }
    }
}

/// One row of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub group: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {}/{}  {}", self.group, self.name, self.detail)
    }
}

fn row(group: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        group,
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Runs the selected checks in table order.
pub fn run_checks(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    for g in &opts.only {
        if !GROUPS.contains(&g.as_str()) {
            return Err(crate::Error::InvalidInput(format!(
                "unknown check group {g:?}; expected one of {}",
                GROUPS.join(", ")
            )));
        }
    }
    let wanted = |g: &str| opts.only.is_empty() || opts.only.iter().any(|o| o == g);
    let mut out = Vec::new();
    if wanted("potential") {
        out.extend(potential_checks(opts)?);
    }
    if wanted("slope") {
        out.extend(slope_checks(opts)?);
    }
    if wanted("diec") {
        out.extend(diec_checks()?);
    }
    if wanted("prp-grid") {
        out.extend(grid_checks()?);
    }
    if wanted("gradient") {
        out.extend(gradient_checks(opts)?);
    }
    Ok(out)
}

fn potential_checks(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    for (label, frac) in [("slope=1/n", 1.0), ("slope=1/(2n)", 0.5), ("slope=1/(10n)", 0.1)] {
        let mut worst = 0.0f64;
        let mut rng = stream(opts.seed);
        for n in [2usize, 3, 5] {
            for k in [1usize, 2, 8] {
                let game = sample_game(n, k, rng.gen_range(0.05..2.0), RankingSpec::linear(frac / n as f64), &mut rng)?;
                worst = worst.max(check_potential_identity(&game, opts.samples, rng.gen())?);
            }
        }
        rows.push(row(
            "potential",
            label,
            worst < 1e-9,
            format!("max |dphi - du| = {worst:.3e} over {} deviations per (n,k)", opts.samples),
        ));
    }
    Ok(rows)
}

fn slope_checks(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let accepts = |a: f64, n: usize| opts.faults.disable_slope_validation || validate_slope(a, n).is_ok();
    let mut rows = Vec::new();
    let mut boundary_ok = true;
    let mut notes = Vec::new();
    for n in [2usize, 3, 5, 10] {
        let max = max_valid_slope(n)?;
        for (a, expect) in [(max, true), (max + 1e-9, false), (0.0, false), (0.5 * max, true)] {
            if accepts(a, n) != expect {
                boundary_ok = false;
                notes.push(format!("n={n} a={a}"));
            }
        }
    }
    rows.push(row(
        "slope",
        "slope-boundary",
        boundary_ok,
        if boundary_ok {
            "accepts exactly (0, 1/n] for n in {2,3,5,10}".to_string()
        } else {
            format!("wrong verdict at {}", notes.join(", "))
        },
    ));

    let mut rng = stream(opts.seed ^ 0x1e33a);
    let mut worst = 0.0f64;
    let mut in_range = true;
    for _ in 0..opts.samples {
        let n = rng.gen_range(2..=8usize);
        let a = max_valid_slope(n)? * rng.gen_range(f64::EPSILON..=1.0);
        let dstar: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let r = RankingSpec::linear(a).distribution(&dstar);
        worst = worst.max((r.probs().iter().sum::<f64>() - 1.0).abs());
        in_range &= r.probs().iter().all(|p| (0.0..=1.0).contains(p));
    }
    rows.push(row(
        "slope",
        "valid-distributions",
        worst < 1e-12 && in_range,
        format!("max |sum - 1| = {worst:.3e}, entries in [0,1]: {in_range}"),
    ));
    Ok(rows)
}

fn diec_checks() -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();

    let mut worst = 0.0f64;
    for n in [3usize, 4, 10, 1000] {
        let r = diec_ratio(&RankingSpec::linear_max_slope(), n)?;
        let expect = (2.0 * n as f64 - 2.0) / (n as f64 - 2.0);
        worst = worst.max((r.ratio - expect).abs());
    }
    let two = diec_ratio(&RankingSpec::linear_max_slope(), 2)?;
    let big = diec_ratio(&RankingSpec::linear_max_slope(), 1000)?;
    rows.push(row(
        "diec",
        "linear",
        worst < 1e-12 && two.is_deterministic() && ((big.ratio - 2.0) / 2.0).abs() < 0.01,
        format!(
            "max |ratio - (2n-2)/(n-2)| = {worst:.3e}; n=2 ratio {}; n=1000 ratio {:.6}",
            two.ratio, big.ratio
        ),
    ));

    let mut worst = 0.0f64;
    for n in 2..=1000usize {
        let r = diec_ratio(&RankingSpec::softmax(), n)?;
        let expect = (n as f64 / (n as f64 - 1.0)).exp();
        worst = worst.max((r.ratio - expect).abs());
    }
    let big = diec_ratio(&RankingSpec::softmax(), 1000)?;
    rows.push(row(
        "diec",
        "softmax",
        worst < 1e-12 && ((big.ratio - E) / E).abs() < 0.01,
        format!("max |ratio - e^(n/(n-1))| = {worst:.3e} for n in 2..=1000; n=1000 ratio {:.6}", big.ratio),
    ));

    let random_ok = (2..=50).all(|n| diec_ratio(&RankingSpec::random(), n).map(|r| r.ratio == 1.0).unwrap_or(false));
    rows.push(row("diec", "random", random_ok, "ratio = 1 for n in 2..=50"));

    let prp_ok = (2..=50).all(|n| diec_ratio(&RankingSpec::prp(), n).map(|r| r.is_deterministic()).unwrap_or(false));
    rows.push(row("diec", "prp", prp_ok, "winner takes probability 1 for n in 2..=50"));
    Ok(rows)
}

/// The two-publisher line game with both anchors at 0 and the information
/// need at 1, under absolute distance.
pub fn line_game(ranking: RankingSpec, lambda: f64) -> Result<PublishersGame> {
    Ok(PublishersGame::new(
        lambda,
        DistanceSpec::Absolute,
        vec![vec![0.0], vec![0.0]],
        vec![1.0],
        ranking,
    )?)
}

fn grid_checks() -> Result<Vec<CheckResult>> {
    let resolution = 101;
    let eps = default_grid_epsilon(1.0, resolution);
    let prp = grid_pne_search(&line_game(RankingSpec::prp(), 1.0)?, resolution, eps)?;
    let lin = grid_pne_search(
        &line_game(RankingSpec::linear_max_slope(), 1.0)?,
        resolution,
        eps,
    )?;
    Ok(vec![
        row(
            "prp-grid",
            "prp-no-equilibrium",
            prp.exhaustive && prp.found_equilibria.is_empty(),
            format!("{} grid equilibria at resolution {resolution}, eps {eps:.3e}", prp.found_equilibria.len()),
        ),
        row(
            "prp-grid",
            "linear-has-equilibrium",
            lin.exhaustive && !lin.found_equilibria.is_empty(),
            format!("{} grid equilibria at resolution {resolution}", lin.found_equilibria.len()),
        ),
    ])
}

fn gradient_checks(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    let samples = opts.samples.min(1000);
    for ranking in [RankingSpec::linear_max_slope(), RankingSpec::softmax()] {
        let mut rng = stream(opts.seed ^ 0x96ad);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let n = rng.gen_range(2..=5usize);
            let k = rng.gen_range(1..=8usize);
            let game = sample_game(n, k, rng.gen_range(0.05..2.0), ranking, &mut rng)?;
            let docs: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
            let profile = StrategyProfile::new(docs)?;
            let i = rng.gen_range(0..n);
            let g = utility_gradient(&game, &profile, i)?;
            let fd = finite_difference_gradient(&game, &profile, i, 1e-6)?;
            let diff = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scale = fd.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-12);
            worst = worst.max(diff / scale);
        }
        rows.push(row(
            "gradient",
            ranking.kind().name(),
            worst < 1e-5,
            format!("max relative error vs central differences = {worst:.3e} over {samples} samples"),
        ));
    }
    Ok(rows)
}
