//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p pubgame --test acceptance`.

use std::f64::consts::E;
use std::time::{Duration, Instant};

use rand::Rng;

use pubgame::experiments::{ExperimentSummary, FiguresConfig, run_experiment};
use pubgame_core::dynamics::utility_gradient;
use pubgame_core::ranking::validate_slope;
use pubgame_core::seed::stream;
use pubgame_core::verification::{
    check_potential_identity, default_grid_epsilon, diec_ratio, finite_difference_gradient, grid_pne_search,
};
use pubgame_core::{DistanceSpec, PublishersGame, RankingSpec, StrategyProfile};

const MASTER_SEED: u64 = 42;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

fn random_linear_game<R: Rng>(rng: &mut R, n: usize, k: usize) -> PublishersGame {
    let mut point = || (0..k).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>();
    let initial = (0..n).map(|_| point()).collect();
    let need = point();
    let lambda = rng.gen_range(0.05..2.0);
    PublishersGame::new(lambda, DistanceSpec::squared_euclidean(k), initial, need, RankingSpec::linear_max_slope())
        .unwrap()
}

fn potential_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(MASTER_SEED);
    let combos: Vec<(usize, usize)> = [2, 3, 5].iter().flat_map(|&n| [1, 2, 8].map(|k| (n, k))).collect();
    let per_combo = 10_000usize.div_ceil(combos.len());
    let mut worst = 0.0f64;
    for &(n, k) in &combos {
        let game = random_linear_game(&mut rng, n, k);
        worst = worst.max(check_potential_identity(&game, per_combo, rng.gen()).unwrap());
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && within(elapsed, 10),
        format!(
            "max |dphi - du_i| = {worst:.3e} over {} deviations; {elapsed:.2?}",
            per_combo * combos.len()
        ),
    )
}

fn line_game(ranking: RankingSpec) -> PublishersGame {
    PublishersGame::new(1.0, DistanceSpec::Absolute, vec![vec![0.0], vec![0.0]], vec![1.0], ranking).unwrap()
}

fn grid_oracle() -> Outcome {
    let start = Instant::now();
    let eps = default_grid_epsilon(1.0, 101);
    let prp = grid_pne_search(&line_game(RankingSpec::prp()), 101, eps).unwrap();
    let linear = grid_pne_search(&line_game(RankingSpec::linear_max_slope()), 101, eps).unwrap();
    let elapsed = start.elapsed();
    outcome(
        prp.exhaustive
            && linear.exhaustive
            && prp.found_equilibria.is_empty()
            && !linear.found_equilibria.is_empty()
            && within(elapsed, 30),
        format!(
            "prp: {} equilibria, linear: {} equilibria (resolution 101, eps {eps:.4e}); {elapsed:.2?}",
            prp.found_equilibria.len(),
            linear.found_equilibria.len()
        ),
    )
}

fn figures() -> FiguresConfig {
    FiguresConfig {
        master_seed: MASTER_SEED,
        ..FiguresConfig::default()
    }
}

fn convergence(fig1: &ExperimentSummary, elapsed: Duration) -> Outcome {
    let grid = figures().lambda_grid;
    let rate = |ranking: &str, x: f64| fig1.cell(ranking, x).unwrap().convergence_rate;
    let exact = |ranking: &str| grid.iter().all(|&x| rate(ranking, x) == 1.0);
    let prp_mean = grid.iter().map(|&x| rate("prp", x)).sum::<f64>() / grid.len() as f64;
    let prp_max = grid.iter().map(|&x| rate("prp", x)).fold(0.0, f64::max);
    outcome(
        exact("linear") && exact("softmax") && prp_mean <= 0.5 && within(elapsed, 600),
        format!(
            "linear all 1.00: {}, softmax all 1.00: {}, prp mean rate {prp_mean:.3} (max {prp_max:.3}); {elapsed:.2?}",
            exact("linear"),
            exact("softmax")
        ),
    )
}

fn diec() -> Outcome {
    let mut linear_err = 0.0f64;
    for n in [3usize, 4, 10, 1000] {
        let r = diec_ratio(&RankingSpec::linear_max_slope(), n).unwrap();
        linear_err = linear_err.max((r.ratio - (2.0 * n as f64 - 2.0) / (n as f64 - 2.0)).abs());
    }
    let limit = diec_ratio(&RankingSpec::linear_max_slope(), 1000).unwrap().ratio;
    let mut softmax_err = 0.0f64;
    for n in 2..=1000usize {
        let r = diec_ratio(&RankingSpec::softmax(), n).unwrap();
        softmax_err = softmax_err.max((r.ratio - (n as f64 / (n as f64 - 1.0)).exp()).abs());
    }
    let at_two = diec_ratio(&RankingSpec::softmax(), 2).unwrap().ratio;
    let random = diec_ratio(&RankingSpec::random(), 5).unwrap().ratio;
    outcome(
        linear_err < 1e-12
            && ((limit - 2.0) / 2.0).abs() < 0.01
            && softmax_err < 1e-12
            && (at_two - E * E).abs() < 1e-12
            && random == 1.0,
        format!(
            "linear err {linear_err:.1e} (n=1000: {limit:.6}); softmax err {softmax_err:.1e} (n=2: {at_two:.6}); random {random}"
        ),
    )
}

fn slope_bounds() -> Outcome {
    let mut boundary = true;
    for n in [2usize, 3, 4, 5, 10, 100, 1000] {
        let max = 1.0 / n as f64;
        boundary &= validate_slope(max, n).is_ok();
        boundary &= validate_slope(0.5 * max, n).is_ok();
        boundary &= validate_slope(1e-300, n).is_ok();
        boundary &= validate_slope(max + 1e-9, n).is_err();
        boundary &= validate_slope(0.0, n).is_err();
        boundary &= validate_slope(-max, n).is_err();
        boundary &= validate_slope(f64::NAN, n).is_err();
    }
    let mut rng = stream(MASTER_SEED ^ 5);
    let mut worst = 0.0f64;
    let mut all_valid = true;
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=20usize);
        let slope = rng.gen_range(0.0..=1.0 / n as f64);
        if validate_slope(slope, n).is_err() {
            continue;
        }
        let dstar: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let dist = RankingSpec::linear(slope).distribution(&dstar);
        worst = worst.max((dist.probs().iter().sum::<f64>() - 1.0).abs());
        all_valid &= dist.probs().iter().all(|p| (0.0..=1.0).contains(p));
    }
    outcome(
        boundary && worst < 1e-12 && all_valid,
        format!("boundary verdicts correct: {boundary}; max |sum - 1| = {worst:.2e} over 10000 profiles"),
    )
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 2];
    for (slot, ranking) in [RankingSpec::linear_max_slope(), RankingSpec::softmax()].into_iter().enumerate() {
        let mut rng = stream(MASTER_SEED ^ 6);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=6usize);
            let k = rng.gen_range(1..=8usize);
            let game = random_linear_game(&mut rng, n, k).with_ranking(ranking).unwrap();
            let docs = (0..n).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
            let profile = StrategyProfile::new(docs).unwrap();
            let i = rng.gen_range(0..n);
            let exact = utility_gradient(&game, &profile, i).unwrap();
            let fd = finite_difference_gradient(&game, &profile, i, 1e-6).unwrap();
            let diff: f64 = exact.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let norm: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
            worst[slot] = worst[slot].max(diff / norm.max(1e-12));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst.iter().all(|w| *w < 1e-5) && within(elapsed, 5),
        format!("max relative error: linear {:.2e}, softmax {:.2e}; {elapsed:.2?}", worst[0], worst[1]),
    )
}

struct Comparison {
    publishers_ordered: bool,
    users_ordered: bool,
    disjoint_publishers: usize,
    disjoint_users: usize,
    lines: Vec<String>,
}

/// Softmax against linear at every `k`; `users_softmax_higher` selects the
/// expected direction of the users' welfare ordering.
fn compare(summary: &ExperimentSummary, users_softmax_higher: bool) -> Comparison {
    let mut c = Comparison {
        publishers_ordered: true,
        users_ordered: true,
        disjoint_publishers: 0,
        disjoint_users: 0,
        lines: Vec::new(),
    };
    for k in figures().k_grid {
        let x = k as f64;
        let lin = summary.cell("linear", x).unwrap();
        let soft = summary.cell("softmax", x).unwrap();
        let (lp, sp) = (lin.publishers_welfare.unwrap(), soft.publishers_welfare.unwrap());
        let (lu, su) = (lin.users_welfare.unwrap(), soft.users_welfare.unwrap());
        c.publishers_ordered &= sp.mean >= lp.mean;
        c.users_ordered &= if users_softmax_higher { su.mean >= lu.mean } else { lu.mean >= su.mean };
        let disjoint = |a: pubgame::experiments::Estimate, b: pubgame::experiments::Estimate| {
            a.ci_hi < b.ci_lo || b.ci_hi < a.ci_lo
        };
        c.disjoint_publishers += disjoint(lp, sp) as usize;
        c.disjoint_users += disjoint(lu, su) as usize;
        c.lines.push(format!(
            "      k={k:>2}: publishers linear {:.7} softmax {:.7} | users linear {:.4e} softmax {:.4e} | n={}",
            lp.mean, sp.mean, lu.mean, su.mean, lin.n_welfare
        ));
    }
    c
}

fn figure_two(fig2: &ExperimentSummary) -> (Outcome, Vec<String>) {
    let c = compare(fig2, true);
    let cells = figures().k_grid.len();
    let majority = cells / 2 + 1;
    (
        outcome(
            c.publishers_ordered
                && c.users_ordered
                && c.disjoint_publishers >= majority
                && c.disjoint_users >= majority,
            format!(
                "softmax >= linear: publishers {} users {}; disjoint CIs at {}/{cells} (publishers), {}/{cells} (users), need {majority}",
                c.publishers_ordered, c.users_ordered, c.disjoint_publishers, c.disjoint_users
            ),
        ),
        c.lines,
    )
}

fn figure_three(fig3: &ExperimentSummary, elapsed: Duration) -> (Outcome, Vec<String>) {
    let c = compare(fig3, false);
    (
        outcome(
            c.publishers_ordered && c.users_ordered && within(elapsed, 30 * 60),
            format!(
                "softmax publishers >= linear: {}; linear users >= softmax: {}; figures 2+3 took {elapsed:.2?}",
                c.publishers_ordered, c.users_ordered
            ),
        ),
        c.lines,
    )
}

fn report(number: usize, name: &str, o: &Outcome) {
    let mark = if o.passed { "PASS" } else { "FAIL" };
    println!("criterion {number} [{mark}] {name}: {}", o.detail);
}

fn main() {
    let mut results = Vec::new();
    let mut record = |number: usize, name: &str, o: Outcome, extra: &[String]| {
        report(number, name, &o);
        for line in extra {
            println!("{line}");
        }
        results.push((number, o.passed));
    };

    record(1, "potential identity", potential_identity(), &[]);
    record(2, "no equilibrium on the PRP line game", grid_oracle(), &[]);

    let cfg = figures();
    let start = Instant::now();
    let fig1 = run_experiment(&cfg.figure1()).unwrap();
    let fig1_time = start.elapsed();

    let start = Instant::now();
    let fig2 = run_experiment(&cfg.figure2()).unwrap();
    let fig3 = run_experiment(&cfg.figure3()).unwrap();
    let smooth_time = start.elapsed();

    record(3, "discrete convergence", convergence(&fig1, fig1_time), &[]);
    record(4, "extreme-profile ratios", diec(), &[]);
    record(5, "linear slope bounds", slope_bounds(), &[]);
    record(6, "gradients", gradients(), &[]);
    let (o, lines) = figure_two(&fig2);
    record(7, "smooth dynamics at lambda = 1", o, &lines);
    let (o, lines) = figure_three(&fig3, smooth_time);
    record(8, "smooth dynamics at lambda = 0.1", o, &lines);

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let again = single.install(|| {
        [cfg.figure1(), cfg.figure2(), cfg.figure3()].map(|c| run_experiment(&c).unwrap().to_csv())
    });
    let first = [&fig1, &fig2, &fig3].map(|s| s.to_csv());
    let same = first == again;
    record(
        9,
        "determinism",
        outcome(
            same,
            format!(
                "rerun of fig1/fig2/fig3 on a 1-thread pool: byte-identical = {same} ({} bytes)",
                first.iter().map(String::len).sum::<usize>()
            ),
        ),
        &[],
    );

    let failed: Vec<usize> = results.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
