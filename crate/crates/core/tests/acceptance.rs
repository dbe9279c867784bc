//! Acceptance gate: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails on any red criterion except a documented gap whose
//! failure matches the known analysis exactly.

mod common;

use std::time::{Duration, Instant};

use common::{big_k_oracle, close, k_oracle, price_oracle, rng, Quadratic, FIGURE1};
use netsplit::cli::corpus_document;
use netsplit::equilibrium::{
    equilibrium_prices, find_local_spe, is_realizable, solve_split_multilinear, split_cases,
    tau_for_delta, tau_for_split, ConsistencyMode, Failure,
};
use netsplit::graphs::{adjacency_game, make_structure, search_graphs, LoopyGraph, SearchMode, Structure};
use netsplit::model::{classify_profile, ScalarForm};
use netsplit::report::{SolveReport, VerifySettings};
use netsplit::verifier::{demand_derivatives_fd, trace_local_selection, verify_local_spe};
use netsplit::{
    certify, load_game, split_calculus, ConsumptionProfile, Error, Firm, Game, GroupPartition,
    NetworkEffects, Outcome, Radius,
};
use rand::Rng;

const FOC: ConsistencyMode = ConsistencyMode::FocConsistent;

struct Check {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    /// Set when the failure is the documented one and nothing else failed.
    known_gap: bool,
}

impl Check {
    fn new(id: u8, title: &'static str, pass: bool, detail: String) -> Self {
        Check {
            id,
            title,
            pass,
            detail,
            known_gap: false,
        }
    }
}

fn within(elapsed: Duration, secs: f64) -> bool {
    elapsed.as_secs_f64() < secs
}

fn corpus(name: &str) -> Game {
    load_game(corpus_document(name).expect("corpus entry")).expect("corpus game")
}

const CORPUS: [&str; 9] = [
    "example2",
    "adjacency-figure1",
    "armstrong",
    "armstrong-modified",
    "armstrong-3group",
    "amaldoss",
    "amaldoss-delta0",
    "grilo",
    "tolotti",
];

/// A game together with an equilibrium outcome of it.
struct Point {
    label: String,
    game: Game,
    outcome: Outcome,
}

/// Shifts `game` so that `profile` is an outcome at `psi(sigma)`.
fn shifted_point(label: String, game: &Game, profile: &ConsumptionProfile, eps: f64) -> Option<Point> {
    let calc = split_calculus(game, profile).ok()?;
    if calc.k_s >= 0.0 || calc.k_s.is_nan() {
        return None;
    }
    let masses = game.masses();
    let excess: f64 = profile
        .sigma()
        .iter()
        .zip(&masses)
        .map(|(s, m)| m * (2.0 * s - 1.0))
        .sum();
    let delta = FOC.target_delta(calc.k_s, excess);
    let shifted = game
        .apply_tau_shift(&tau_for_delta(game, profile, delta), eps)
        .ok()?;
    let prices = equilibrium_prices(&shifted, profile).ok()?;
    Some(Point {
        label,
        game: shifted,
        outcome: Outcome {
            prices,
            sigma: profile.sigma().to_vec(),
        },
    })
}

/// Certificates of each corpus game, or a shifted non-singular split when it
/// has none. Games with no split of negative slope contribute nothing.
fn corpus_points() -> (Vec<Point>, Vec<&'static str>) {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for name in CORPUS {
        let game = corpus(name);
        let search = find_local_spe(&game, FOC).unwrap();
        if !search.certificates.is_empty() {
            for c in &search.certificates {
                points.push(Point {
                    label: format!("{name} sigma={:?}", c.sigma),
                    game: game.clone(),
                    outcome: Outcome::from(c),
                });
            }
            continue;
        }
        let g = game.groups();
        let found = split_cases(g).into_iter().find_map(|cls| {
            let sigma: Vec<f64> = (0..g)
                .map(|i| {
                    if cls.split.contains(&i) {
                        0.4
                    } else {
                        let bit = cls.corners.iter().find(|c| c.0 == i).unwrap().1;
                        f64::from(bit)
                    }
                })
                .collect();
            let profile = game.profile(sigma).ok()?;
            shifted_point(format!("{name} shifted S={:?}", cls.split), &game, &profile, 0.25)
        });
        match found {
            Some(p) => points.push(p),
            None => skipped.push(name),
        }
    }
    (points, skipped)
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let w = vec![vec![1.0, 2.0], vec![3.0, 5.0]];
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let m = common::masses(&mut r, 2);
        let game = common::symmetric(&w, &m);
        let calc = split_calculus(&game, &game.profile(vec![0.3, 0.6]).unwrap()).unwrap();
        let expected = [-3.0 / m[0], 2.0 / m[1]];
        let oracle = k_oracle(&w, &m, &[0, 1]).unwrap();
        for i in 0..2 {
            worst = worst
                .max((calc.k[i] - expected[i]).abs())
                .max((oracle[i] - expected[i]).abs());
        }
        worst = worst.max((calc.k_s + 1.0).abs());
        for i in 0..2 {
            let mut sigma = vec![0.0; 2];
            sigma[i] = 0.5;
            let single = split_calculus(&game, &game.profile(sigma).unwrap()).unwrap();
            worst = worst.max((single.k_s - 1.0 / w[i][i]).abs());
        }
    }
    let elapsed = t.elapsed();
    Check::new(
        1,
        "W = [[1,2],[3,5]]: k, K_G and singular-split K",
        worst <= 1e-12 && within(elapsed, 1.0),
        format!("max error {worst:.1e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Check {
    let t = Instant::now();
    let graph = make_structure(&Structure::Figure1).unwrap();
    let w: Vec<Vec<f64>> = FIGURE1
        .iter()
        .map(|r| r.iter().map(|&x| 2.0 * f64::from(x)).collect())
        .collect();
    let pattern = [-1.0, -0.5, 0.5, -0.5, 1.0];
    let mut r = rng(202);
    let mut worst: f64 = 0.0;
    let mut verified = 0;
    let mut margin = f64::INFINITY;
    let mut notes = Vec::new();
    for _ in 0..3 {
        let m = common::masses(&mut r, 5);
        let game = adjacency_game(&graph, &m).unwrap();
        let calc = split_calculus(&game, &game.profile(vec![0.5; 5]).unwrap()).unwrap();
        let oracle = k_oracle(&w, &m, &[0, 1, 2, 3, 4]).unwrap();
        for i in 0..5 {
            worst = worst
                .max((calc.k[i] - pattern[i] / m[i]).abs())
                .max((oracle[i] - pattern[i] / m[i]).abs());
        }
        worst = worst.max((calc.k_s + 0.5).abs());
        let total: f64 = m.iter().sum();
        let search = find_local_spe(&game, FOC).unwrap();
        let Some(cert) = search.certificates.iter().find(|c| c.is_total()) else {
            notes.push("no total-split certificate".to_string());
            continue;
        };
        let sigma_err = cert.sigma.iter().map(|s| (s - 0.5).abs()).fold(0.0, f64::max);
        let price_err = (cert.prices.p_a - total).abs().max((cert.prices.p_b - total).abs());
        if sigma_err > 1e-12 || price_err > 1e-9 * total {
            notes.push(format!("certificate off: sigma {sigma_err:.1e}, p {price_err:.1e}"));
        }
        match verify_local_spe(&game, &Outcome::from(cert), Radius::Relative(0.1), 41) {
            Ok(v) if v.verified && v.worst_margin >= 0.0 => {
                verified += 1;
                margin = margin.min(v.worst_margin);
            }
            Ok(v) => notes.push(format!("verifier rejected, margin {:.3e}", v.worst_margin)),
            Err(e) => notes.push(format!("verifier error: {e}")),
        }
    }
    let elapsed = t.elapsed();
    Check::new(
        2,
        "five-node graph: k, K_G, total-split certificate and verifier",
        worst <= 1e-12 && verified == 3 && notes.is_empty() && within(elapsed, 1.0),
        format!(
            "max error {worst:.1e}, {verified}/3 verified (min margin {margin:.3e}), {elapsed:.2?}{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

fn criterion_3() -> Check {
    let t = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (four, five) = pool.install(|| {
        (
            search_graphs(4, SearchMode::NoneExists).unwrap(),
            search_graphs(5, SearchMode::All).unwrap(),
        )
    });
    let elapsed = t.elapsed();
    let fig = LoopyGraph::new(FIGURE1.iter().map(|r| r.to_vec()).collect()).unwrap();
    let has_fig = five.certificates.iter().any(|c| c.code == fig.code());
    // Exact slopes checked against float cofactor solves on W = 2A with unit masses.
    let mut oracle_err: f64 = 0.0;
    for c in &five.certificates {
        let w: Vec<Vec<f64>> = c
            .graph
            .adjacency()
            .iter()
            .map(|r| r.iter().map(|&x| 2.0 * f64::from(x)).collect())
            .collect();
        let k = big_k_oracle(&w, &[1.0; 5], &c.split).unwrap();
        oracle_err = oracle_err.max((k - c.exact.value()).abs());
    }
    let pass = four.graphs_checked == 1024
        && four.subsets_checked == 1024 * 15
        && four.realizable_splits == 0
        && five.graphs_checked == 32768
        && five.realizable_splits >= 1
        && has_fig
        && oracle_err <= 1e-9
        && within(elapsed, 60.0);
    Check::new(
        3,
        "graph search: none on 4 nodes, the five-node graph found on 5",
        pass,
        format!(
            "n=4: {} graphs, {} subsets, {} realizable; n=5: {} realizable splits on {} graphs, five-node graph {}, oracle error {oracle_err:.1e}; {elapsed:.2?} on one thread",
            four.graphs_checked,
            four.subsets_checked,
            four.realizable_splits,
            five.realizable_splits,
            five.graphs_with_realizable,
            if has_fig { "present" } else { "missing" },
        ),
    )
}

fn criterion_4() -> Check {
    let mut notes = Vec::new();
    let mut worst: f64 = 0.0;
    for (w12, w21) in [(1.0, 2.0), (0.5, 3.0), (2.0, 2.0)] {
        let w = vec![vec![0.0, w12], vec![w21, 0.0]];
        let game = common::symmetric(&w, &[1.0, 1.0]);
        let search = find_local_spe(&game, FOC).unwrap();
        let expected = (w12 + w21) / (w12 * w21);
        if !search.certificates.is_empty() {
            notes.push(format!("base ({w12},{w21}) has certificates"));
        }
        let miss = search.near_misses.iter().find_map(|c| match c.failures.as_slice() {
            [Failure::NonNegativeSlope { k_s }] if c.split.len() == 2 => Some(*k_s),
            _ => None,
        });
        match miss {
            Some(k) if k > 0.0 => {
                worst = worst
                    .max((k - expected).abs())
                    .max((big_k_oracle(&w, &[1.0, 1.0], &[0, 1]).unwrap() - expected).abs())
            }
            other => notes.push(format!("base ({w12},{w21}) near miss {other:?}")),
        }
        for delta in [0.5, 1.0] {
            let wm = vec![vec![0.0, w12], vec![w21, w12 + w21 + delta]];
            let game = common::symmetric(&wm, &[1.0, 1.0]);
            let expected = delta / -(w12 * w21);
            let search = find_local_spe(&game, FOC).unwrap();
            let Some(cert) = search.certificates.iter().find(|c| c.is_total()) else {
                notes.push(format!("modified ({w12},{w21},{delta}) has no total certificate"));
                continue;
            };
            worst = worst.max((cert.k_s - expected).abs());
            let v = verify_local_spe(&game, &Outcome::from(cert), Radius::Auto, 41);
            if !v.as_ref().is_ok_and(|v| v.verified) {
                notes.push(format!("modified ({w12},{w21},{delta}) verifier: {v:?}"));
            }
        }
    }
    let (r, z, eps) = (1.0, 1.0, 0.1);
    let w3 = vec![
        vec![0.0, 2.0 * r, r],
        vec![z, 0.0, r * z / (4.0 * r + z) - eps],
        vec![z / 2.0, 0.0, 0.0],
    ];
    let oracle = big_k_oracle(&w3, &[1.0; 3], &[0, 1, 2]).unwrap();
    let game = corpus("armstrong-3group");
    let lib = split_calculus(&game, &game.profile(vec![0.5; 3]).unwrap()).unwrap().k_s;
    let three_err = (lib - oracle).abs().max((oracle + 2.5).abs());
    let pass = notes.is_empty() && worst <= 1e-12 && three_err <= 1e-9;
    Check::new(
        4,
        "Armstrong base, modified and 3-group suites",
        pass,
        format!(
            "2x2 max error {worst:.1e}; 3-group K = {lib:.12} (cofactor oracle {oracle:.12}){}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

fn amaldoss(lambda_l: f64, lambda_c: f64, delta: f64, beta: f64) -> (Vec<Vec<f64>>, Game) {
    let w = vec![vec![-lambda_l, -lambda_l], vec![lambda_c + delta, lambda_c]];
    let game = common::symmetric(&w, &[beta, 1.0 - beta]);
    (w, game)
}

fn criterion_5() -> Check {
    let mut notes = Vec::new();
    let mut k_err: f64 = 0.0;
    // (printed, corrected) errors for conformists at a; single error otherwise.
    let mut at_a_printed: f64 = 0.0;
    let mut at_a_corrected: f64 = 0.0;
    let mut at_b: f64 = 0.0;
    let mut total: f64 = 0.0;
    let mut shifted_err: f64 = 0.0;
    for (ll, lc, beta) in [(1.0, 1.0, 0.5), (2.0, 0.5, 0.3), (0.7, 1.5, 0.8)] {
        let (_, flat) = amaldoss(ll, lc, 0.0, beta);
        match split_calculus(&flat, &flat.profile(vec![0.5, 0.5]).unwrap()) {
            Err(Error::SingularSplit(_)) => {}
            other => notes.push(format!("delta=0 total split not rejected: {:?}", other.map(|c| c.k_s))),
        }
        if find_local_spe(&flat, FOC).unwrap().certificates.iter().any(|c| c.is_total()) {
            notes.push("delta=0 total certificate".into());
        }
        let (w, game) = amaldoss(ll, lc, 0.5, beta);
        let m = [beta, 1.0 - beta];
        let k_target = -1.0 / ll;
        for sl in [0.2, 0.45, 0.7] {
            for (sigma, oracle_split) in [
                (vec![sl, 1.0], vec![0]),
                (vec![sl, 0.0], vec![0]),
                (vec![sl, 0.35], vec![0, 1]),
                (vec![sl, 0.8], vec![0, 1]),
            ] {
                let profile = game.profile(sigma.clone()).unwrap();
                let calc = split_calculus(&game, &profile).unwrap();
                k_err = k_err
                    .max((calc.k_s - k_target).abs())
                    .max((big_k_oracle(&w, &m, &oracle_split).unwrap() - k_target).abs());
                let p = equilibrium_prices(&game, &profile).unwrap();
                let (oa, _) = price_oracle(k_target, &sigma, &m);
                let sc = sigma[1];
                if oracle_split.len() == 2 {
                    total = total
                        .max((p.p_a - ll * (beta * sl + (1.0 - beta) * sc)).abs())
                        .max((oa - p.p_a).abs());
                } else if sc == 1.0 {
                    at_a_printed = at_a_printed.max((p.p_a - ll * (1.0 - beta * sl)).abs());
                    at_a_corrected = at_a_corrected
                        .max((p.p_a - ll * (1.0 - beta * (1.0 - sl))).abs())
                        .max((oa - p.p_a).abs());
                } else {
                    at_b = at_b.max((p.p_a - ll * beta * sl).abs()).max((oa - p.p_a).abs());
                }
                // The same prices certify after the shift.
                match tau_for_split(&game, &profile, 0.2, FOC)
                    .and_then(|s| game.apply_shift(s))
                    .and_then(|g| certify(&g, &profile, FOC))
                {
                    Ok(c) if c.spe_plus => {
                        shifted_err = shifted_err.max((c.prices.p_a - p.p_a).abs())
                    }
                    other => notes.push(format!("shifted {sigma:?}: {:?}", other.map(|c| c.failures()))),
                }
            }
        }
    }
    let others_ok = notes.is_empty()
        && k_err <= 1e-12
        && at_b <= 1e-9
        && total <= 1e-9
        && shifted_err <= 1e-9;
    let printed_ok = at_a_printed <= 1e-9;
    let mut check = Check::new(
        5,
        "Amaldoss singular and total splits",
        others_ok && printed_ok,
        format!(
            "K error {k_err:.1e}; p_a error: conformists at b {at_b:.1e}, total {total:.1e}, conformists at a {at_a_printed:.3e} against lambda_l(1 - beta sigma_l) and {at_a_corrected:.1e} against lambda_l(1 - beta(1 - sigma_l)){}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
    check.known_gap = !check.pass && others_ok && at_a_corrected <= 1e-9;
    check
}

fn grilo(alpha: f64, beta: f64, m: f64) -> Game {
    Game::new(
        GroupPartition::from_masses(&[m]).unwrap(),
        NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha, beta }),
    )
    .unwrap()
}

fn criterion_6() -> Check {
    let mut notes = Vec::new();
    let m = 1.5;
    let mut cells = 0;
    let mut mismatches = 0;
    for i in 0..10 {
        for j in 0..10 {
            let alpha = 0.3 * i as f64 + 0.05;
            let beta = 0.2 * j as f64 + 0.1;
            let game = grilo(alpha, beta, m);
            cells += 1;
            let expected = alpha < beta * m;
            let agrees = [0.2, 0.5, 0.8].iter().all(|&s| {
                let profile = game.profile(vec![s]).unwrap();
                is_realizable(&game, &profile).is_ok_and(|r| r.realizable) == expected
            });
            if !agrees {
                mismatches += 1;
            }
        }
    }
    if mismatches > 0 {
        notes.push(format!("{mismatches} grid mismatches"));
    }
    let game = grilo(1.0, 1.0, 2.0);
    let search = find_local_spe(&game, FOC).unwrap();
    match search.certificates.as_slice() {
        [c] if close(c.sigma[0], 0.5, 1e-12)
            && close(c.prices.p_a, 2.0, 1e-12)
            && close(c.prices.p_b, 2.0, 1e-12) =>
        {
            if !verify_local_spe(&game, &Outcome::from(c), Radius::Auto, 41).is_ok_and(|v| v.verified) {
                notes.push("Grilo certificate not verified".into());
            }
        }
        other => notes.push(format!("Grilo certificates {:?}", other.iter().map(|c| &c.sigma).collect::<Vec<_>>())),
    }

    let tolotti = corpus("tolotti");
    let foc = find_local_spe(&tolotti, FOC).unwrap();
    match foc.certificates.as_slice() {
        [c] if close(c.sigma[0], 5.0 / 9.0, 1e-12)
            && close(c.prices.p_a, 5.0 / 3.0, 1e-12)
            && close(c.prices.p_b, 4.0 / 3.0, 1e-12) =>
        {
            let profile = tolotti.profile(c.sigma.clone()).unwrap();
            if !tolotti.check_second_stage_ne(c.prices, &profile).holds {
                notes.push("Tolotti FOC certificate fails NE".into());
            }
            if !verify_local_spe(&tolotti, &Outcome::from(c), Radius::Auto, 41).is_ok_and(|v| v.verified) {
                notes.push("Tolotti FOC certificate not verified".into());
            }
        }
        other => notes.push(format!("Tolotti FOC certificates {:?}", other.iter().map(|c| &c.sigma).collect::<Vec<_>>())),
    }
    let cls = classify_profile(&tolotti.profile(vec![0.5]).unwrap());
    let printed = solve_split_multilinear(&tolotti, &cls, ConsistencyMode::AsPrinted)
        .unwrap()
        .unwrap();
    let cert = certify(&tolotti, &printed, ConsistencyMode::AsPrinted).unwrap();
    let pair_ok = close(printed.sigma()[0], 1.0 / 3.0, 1e-12)
        && close(cert.prices.p_a, 1.0, 1e-12)
        && close(cert.prices.p_b, 2.0, 1e-12)
        && !tolotti.check_second_stage_ne(cert.prices, &printed).holds;
    if !pair_ok {
        notes.push(format!("as-printed pair {:?} at {:?}", printed.sigma(), cert.prices));
    }
    let report = SolveReport::build(&tolotti, None, ConsistencyMode::AsPrinted, VerifySettings::default()).unwrap();
    let flagged = report.certificates.is_empty()
        && report.near_misses.iter().any(|c| {
            c.failures.iter().any(|f| matches!(f, Failure::NotNash { .. }))
                && c.certificate
                    .as_ref()
                    .is_some_and(|x| close(x.sigma[0], 1.0 / 3.0, 1e-12))
        })
        && report.render().contains("not a second-stage NE");
    if !flagged {
        notes.push("as-printed report does not flag the NE failure".into());
    }
    Check::new(
        6,
        "Grilo grid and certificate, Tolotti consistency modes",
        notes.is_empty(),
        if notes.is_empty() {
            format!("{cells} grid cells agree; Grilo p = (2, 2) verified; Tolotti FOC (5/9; 5/3, 4/3) verified, as-printed (1/3; 1, 2) flagged")
        } else {
            notes.join("; ")
        },
    )
}

fn criterion_7() -> Check {
    let mut notes = Vec::new();
    let (points, skipped) = corpus_points();
    let mut d1_err: f64 = 0.0;
    let mut d2_max: f64 = 0.0;
    for p in &points {
        let k = split_calculus(&p.game, &p.game.profile(p.outcome.sigma.clone()).unwrap())
            .unwrap()
            .k_s;
        for firm in [Firm::A, Firm::B] {
            match trace_local_selection(&p.game, &p.outcome, firm, Radius::Auto, 41)
                .and_then(|path| demand_derivatives_fd(&path))
            {
                Ok((d1, d2)) => {
                    d1_err = d1_err.max(((d1 - k) / k).abs());
                    d2_max = d2_max.max(d2.abs());
                }
                Err(e) => notes.push(format!("{} {}: {e}", p.label, firm.label())),
            }
        }
    }
    // g = 1 cubic host v = -s - s^3, against K = m/v' and R = -m v''/v'^3.
    let mut cubic_err: f64 = 0.0;
    let mut cubic_d1: f64 = 0.0;
    for (m, s) in [(1.0, 0.5), (1.6, 0.4)] {
        let game = common::cubic([0.0, -1.0, 0.0, -1.0], m);
        let dv = -1.0 - 3.0 * s * s;
        let d2v = -6.0 * s;
        let k = m / dv;
        let r = -m * d2v / dv.powi(3);
        let profile = game.profile(vec![s]).unwrap();
        let calc = split_calculus(&game, &profile).unwrap();
        cubic_err = cubic_err.max((calc.r_s - r).abs()).max((calc.k_s - k).abs());
        let shifted = game
            .apply_shift(tau_for_split(&game, &profile, 0.1, FOC).unwrap())
            .unwrap();
        let outcome = Outcome {
            prices: equilibrium_prices(&shifted, &profile).unwrap(),
            sigma: vec![s],
        };
        for (firm, sign) in [(Firm::A, 1.0), (Firm::B, -1.0)] {
            match trace_local_selection(&shifted, &outcome, firm, Radius::Auto, 41)
                .and_then(|path| demand_derivatives_fd(&path))
            {
                Ok((d1, d2)) => {
                    cubic_d1 = cubic_d1.max(((d1 - k) / k).abs());
                    cubic_err = cubic_err.max((d2 - sign * r).abs());
                }
                Err(e) => notes.push(format!("cubic {}: {e}", firm.label())),
            }
        }
    }
    let pass = notes.is_empty() && d1_err <= 1e-5 && cubic_d1 <= 1e-5 && d2_max <= 1e-4 && cubic_err <= 1e-3;
    Check::new(
        7,
        "finite-difference D', D'' along traced selections",
        pass,
        format!(
            "{} corpus points (no negative-slope split: {}); D' rel error {d1_err:.1e}, |D''| {d2_max:.1e}; cubic D' rel error {cubic_d1:.1e}, D'' error {cubic_err:.1e}{}",
            points.len(),
            if skipped.is_empty() { "none".to_string() } else { skipped.join(", ") },
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

/// The 100 random multilinear games of the round-trip suite.
fn random_suite() -> Vec<Game> {
    let mut r = rng(808);
    (0..100).map(|i| common::random_multilinear(&mut r, 1 + i % 5)).collect()
}

fn criterion_8() -> Check {
    let t = Instant::now();
    let mut r = rng(809);
    let mut violations = Vec::new();
    let (mut certs, mut profiles) = (0, 0);
    for (gi, game) in random_suite().iter().enumerate() {
        let search = find_local_spe(game, FOC).unwrap();
        let mut prices: Vec<_> = (0..2)
            .map(|_| netsplit::PricePair::new(r.gen_range(0.0..3.0), r.gen_range(0.0..3.0)).unwrap())
            .collect();
        for c in &search.certificates {
            certs += 1;
            prices.push(c.prices);
            let profile = game.profile(c.sigma.clone()).unwrap();
            if !game.check_second_stage_ne(c.prices, &profile).holds {
                violations.push(format!("game {gi}: certificate {:?} fails NE", c.sigma));
            }
            match verify_local_spe(game, &Outcome::from(c), Radius::Auto, 41) {
                Ok(v) if v.verified => {}
                Ok(v) => violations.push(format!("game {gi}: {:?} rejected, margin {:.2e}", c.sigma, v.worst_margin)),
                Err(e) => violations.push(format!("game {gi}: {:?} verifier error {e}", c.sigma)),
            }
        }
        for p in prices {
            let found = game.enumerate_second_stage_ne(p).unwrap();
            for profile in &found.profiles {
                profiles += 1;
                if !game.check_second_stage_ne(p, profile).holds {
                    violations.push(format!("game {gi}: enumerated {:?} fails NE", profile.sigma()));
                }
            }
        }
    }
    let elapsed = t.elapsed();
    Check::new(
        8,
        "round trip on 100 random multilinear games",
        violations.is_empty() && certs > 0 && within(elapsed, 120.0),
        format!(
            "{certs} certificates, {profiles} enumerated equilibria, {} violations, {elapsed:.2?}{}",
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

/// Random realizable splits on multilinear and quadratic host games.
fn realizable_splits(count: usize, seed: u64) -> Vec<(Game, ConsumptionProfile)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let g = r.gen_range(1..=4);
        let game = if out.len() % 2 == 0 {
            common::random_multilinear(&mut r, g)
        } else {
            let m = common::masses(&mut r, g);
            Quadratic::random(&mut r, g).game(&m)
        };
        let split = r.gen_range(1..1usize << g);
        let corners = r.gen_range(0..1usize << g);
        let profile = common::random_profile(&mut r, g, split, corners);
        if is_realizable(&game, &profile).is_ok_and(|x| x.realizable) {
            out.push((game, profile));
        }
    }
    out
}

fn criterion_9() -> Check {
    let mut r = rng(909);
    let mut failures = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for (i, (game, profile)) in realizable_splits(50, 910).into_iter().enumerate() {
        let eps = r.gen_range(0.05..0.5);
        let shifted = match tau_for_split(&game, &profile, eps, FOC).and_then(|s| game.apply_shift(s)) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("split {i}: {e}"));
                continue;
            }
        };
        let prices = equilibrium_prices(&shifted, &profile).unwrap();
        let ne = shifted.check_second_stage_ne(prices, &profile);
        worst_slack = worst_slack.min(ne.worst_slack);
        if !ne.holds {
            failures.push(format!("split {i}: NE fails (slack {:.2e})", ne.worst_slack));
        }
        let before = split_calculus(&game, &profile).unwrap();
        let after = split_calculus(&shifted, &profile).unwrap();
        if before.k_s.to_bits() != after.k_s.to_bits() || before.r_s.to_bits() != after.r_s.to_bits() {
            failures.push(format!("split {i}: K/R changed"));
        }
    }
    Check::new(
        9,
        "tau-shift relocates 50 random realizable splits",
        failures.is_empty(),
        format!(
            "{} failures, worst NE slack {worst_slack:.2e} (tol 1e-8){}",
            failures.len(),
            failures.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

fn criterion_10() -> Check {
    let mut points = corpus_points().0;
    for (gi, game) in random_suite().iter().enumerate() {
        for c in find_local_spe(game, FOC).unwrap().certificates {
            points.push(Point {
                label: format!("random {gi} {:?}", c.sigma),
                game: game.clone(),
                outcome: Outcome::from(&c),
            });
        }
    }
    for (i, (game, profile)) in realizable_splits(50, 910).into_iter().enumerate() {
        points.extend(shifted_point(format!("realizable {i}"), &game, &profile, 0.2));
    }
    // v = c0 - s + c s^2 at s = 1/2 is realizable exactly for c < 2/3.
    for c in [-1.0, -0.5, 0.0, 0.3, 0.5, 0.6, 0.75, 0.8, 0.9] {
        let game = common::cubic([0.2, -1.0, c, 0.0], 1.0);
        let profile = game.profile(vec![0.5]).unwrap();
        points.extend(shifted_point(format!("quadratic c={c}"), &game, &profile, 0.2));
    }
    // Quadratic hosts at arbitrary splits of negative slope, realizable or not.
    let mut r = rng(1010);
    let mut drawn = 0;
    while drawn < 60 {
        let g = r.gen_range(1..=3);
        let m = common::masses(&mut r, g);
        let game = Quadratic::random(&mut r, g).game(&m);
        let split = r.gen_range(1..1usize << g);
        let corners = r.gen_range(0..1usize << g);
        let profile = common::random_profile(&mut r, g, split, corners);
        if let Some(p) = shifted_point(format!("host {drawn}"), &game, &profile, 0.2) {
            points.push(p);
            drawn += 1;
        }
    }

    let (mut agree, mut ambiguous, mut realizable_count) = (0, 0, 0);
    let mut disagreements = Vec::new();
    let mut errors = Vec::new();
    for p in &points {
        let profile = p.game.profile(p.outcome.sigma.clone()).unwrap();
        let calc = split_calculus(&p.game, &profile).unwrap();
        let analytic = is_realizable(&p.game, &profile).unwrap().realizable;
        let soc_a = 2.0 * calc.k_s + p.outcome.prices.p_a * calc.r_s;
        let soc_b = 2.0 * calc.k_s - p.outcome.prices.p_b * calc.r_s;
        if soc_a.abs().min(soc_b.abs()) < 1e-6 * calc.k_s.abs() {
            ambiguous += 1;
            continue;
        }
        match verify_local_spe(&p.game, &p.outcome, Radius::Auto, 41) {
            Ok(v) => {
                if v.numeric_second_order == analytic {
                    agree += 1;
                    realizable_count += usize::from(analytic);
                } else {
                    disagreements.push(format!(
                        "{}: analytic {analytic}, numeric {:?}",
                        p.label,
                        v.firms.iter().map(|f| f.second_order).collect::<Vec<_>>()
                    ));
                }
            }
            Err(e) => errors.push(format!("{}: {e}", p.label)),
        }
    }
    Check::new(
        10,
        "analytic realizability equals numeric second-order verdict",
        disagreements.is_empty() && errors.is_empty() && realizable_count > 0 && realizable_count < agree,
        format!(
            "{} points: {agree} agree ({realizable_count} realizable, {} not), {} disagree, {} verifier errors, {ambiguous} on the boundary{}",
            points.len(),
            agree - realizable_count,
            disagreements.len(),
            errors.len(),
            disagreements
                .first()
                .or(errors.first())
                .map(|v| format!("; first: {v}"))
                .unwrap_or_default()
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let t = Instant::now();
    let checks = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let mut unexpected = 0;
    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        let gap = if c.known_gap { " [documented gap]" } else { "" };
        println!("[{tag}] {:>2} {}{gap}: {}", c.id, c.title, c.detail);
        if !c.pass && !c.known_gap {
            unexpected += 1;
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!(
        "acceptance: {passed}/{} criteria pass, {unexpected} unexpected failures ({:.2?})",
        checks.len(),
        t.elapsed()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
