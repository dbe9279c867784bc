//! Stable and realizable splits, the price map and certified local SPE+.
//!
//! The price map sends a split with `K_S < 0` to
//! `psi(sigma) = (m.sigma, m.(1 - sigma)) / (-K_S)`, the first-order
//! condition `p* = -D / D'` for both firms. An outcome `(psi(sigma), sigma)` is
//! a local SPE with profit for both firms when the split is stable, realizable
//! and a second-stage equilibrium at `psi(sigma)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, SplitCalculus};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    classify_profile, Classification, ConsumptionProfile, Game, PricePair, ShareClass, TauShift,
    MAX_EXHAUSTIVE_GROUPS,
};

/// Sign convention for the price difference a split must match.
///
/// `FocConsistent` uses `p_a* - p_b*` from the price map,
/// `m.(2 sigma - 1) / (-K_S)`. `AsPrinted` uses `m.(2 sigma - 1) / K_S`, which
/// reproduces the published single-group numbers but not the price map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyMode {
    #[default]
    FocConsistent,
    AsPrinted,
}

impl ConsistencyMode {
    /// Target `p_a - p_b` for a split with aggregate slope `k_s`.
    pub fn target_delta(self, k_s: f64, excess_a: f64) -> f64 {
        match self {
            ConsistencyMode::FocConsistent => excess_a / -k_s,
            ConsistencyMode::AsPrinted => excess_a / k_s,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConsistencyMode::FocConsistent => "foc",
            ConsistencyMode::AsPrinted => "as-printed",
        }
    }
}

/// `m . (2 sigma - 1)`.
fn excess_demand(profile: &ConsumptionProfile, masses: &[f64]) -> f64 {
    profile.demand_a(masses) - profile.demand_b(masses)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// `max - min` of `v_i` over `S`; condition (i) needs this within tolerance.
    pub spread: f64,
    /// Smallest `|v_j - v_i|` over `j` outside `S`; condition (ii) needs it positive.
    pub gap: f64,
}

pub fn is_stable_split(game: &Game, profile: &ConsumptionProfile) -> Result<StabilityReport> {
    let split = profile.split_set();
    if split.is_empty() {
        return Err(Error::NotASplit);
    }
    let v = game.eval_v(profile);
    let (lo, hi) = split
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(v[i]), hi.max(v[i]))
        });
    let spread = hi - lo;
    let gap = (0..game.groups())
        .filter(|i| !split.contains(i))
        .flat_map(|j| split.iter().map(move |&i| (j, i)))
        .map(|(j, i)| (v[j] - v[i]).abs())
        .fold(f64::INFINITY, f64::min);
    let tol = game.tolerances().ne;
    Ok(StabilityReport {
        stable: spread <= tol && gap > tol,
        spread,
        gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizabilityReport {
    pub realizable: bool,
    pub k_s: f64,
    pub r_s: f64,
    /// `R_S / (2 K_S^2)`.
    pub ratio: f64,
    /// `-1 / m.(1 - sigma)`.
    pub lower: f64,
    /// `1 / m.sigma`.
    pub upper: f64,
}

impl RealizabilityReport {
    pub fn slope_ok(&self) -> bool {
        self.k_s < 0.0
    }

    pub fn curvature_ok(&self) -> bool {
        self.lower < self.ratio && self.ratio < self.upper
    }

    fn from_calculus(calc: &SplitCalculus, profile: &ConsumptionProfile, masses: &[f64]) -> Self {
        let ratio = calc.r_s / (2.0 * calc.k_s * calc.k_s);
        let lower = -1.0 / profile.demand_b(masses);
        let upper = 1.0 / profile.demand_a(masses);
        let mut rep = RealizabilityReport {
            realizable: false,
            k_s: calc.k_s,
            r_s: calc.r_s,
            ratio,
            lower,
            upper,
        };
        rep.realizable = rep.slope_ok() && rep.curvature_ok();
        rep
    }
}

pub fn is_realizable(game: &Game, profile: &ConsumptionProfile) -> Result<RealizabilityReport> {
    let calc = calculus::split_calculus(game, profile)?;
    Ok(RealizabilityReport::from_calculus(&calc, profile, &game.masses()))
}

/// `psi(sigma)`; requires `K_S < 0`.
pub fn equilibrium_prices(game: &Game, profile: &ConsumptionProfile) -> Result<PricePair> {
    let calc = calculus::split_calculus(game, profile)?;
    prices_from_slope(calc.k_s, profile, &game.masses())
}

pub fn prices_from_slope(k_s: f64, profile: &ConsumptionProfile, masses: &[f64]) -> Result<PricePair> {
    if !(k_s < 0.0) {
        return Err(Error::NotRealizable(k_s));
    }
    Ok(PricePair {
        p_a: profile.demand_a(masses) / -k_s,
        p_b: profile.demand_b(masses) / -k_s,
    })
}

/// `v_i(sigma) - target` for `i in S`, zero exactly when `sigma` is
/// indifferent-consistent with its own prices under `mode`.
pub fn consistency_residual(
    game: &Game,
    profile: &ConsumptionProfile,
    mode: ConsistencyMode,
) -> Result<Vec<f64>> {
    let calc = calculus::split_calculus(game, profile)?;
    if !(calc.k_s < 0.0) {
        return Err(Error::NotRealizable(calc.k_s));
    }
    let target = mode.target_delta(calc.k_s, excess_demand(profile, &game.masses()));
    let v = game.eval_v(profile);
    Ok(calc.split.iter().map(|&i| v[i] - target).collect())
}

fn classes_of(g: usize, cls: &Classification) -> Vec<ShareClass> {
    let mut classes = vec![ShareClass::Split; g];
    for &(i, firm) in &cls.corners {
        classes[i] = if firm == 1 { ShareClass::One } else { ShareClass::Zero };
    }
    classes
}

/// Raw solution of the affine consistency system: the full share vector with
/// corners filled in, possibly outside `[0, 1]` on `S`.
fn solve_affine_system(
    game: &Game,
    cls: &Classification,
    k_s: f64,
    mode: ConsistencyMode,
) -> Result<Vec<f64>> {
    let aff = game.affine().ok_or(Error::NotAffine)?;
    let g = game.groups();
    let m = game.masses();
    let total = game.total_mass();
    let classes = classes_of(g, cls);
    let terms = game.shift_terms(&classes);
    // target dp = t * (2 m.sigma - M)
    let t = match mode {
        ConsistencyMode::FocConsistent => 1.0 / -k_s,
        ConsistencyMode::AsPrinted => 1.0 / k_s,
    };
    let mut sigma: Vec<f64> = classes
        .iter()
        .map(|c| if *c == ShareClass::One { 1.0 } else { 0.0 })
        .collect();
    let split = &cls.split;
    let coef = |i: usize, j: usize| aff.jacobian[(i, j)] - 2.0 * t * m[j];
    let block = linalg::Matrix::from_fn(split.len(), split.len(), |a, b| coef(split[a], split[b]));
    let rhs: Vec<f64> = split
        .iter()
        .map(|&i| {
            let fixed: f64 = cls.corners.iter().map(|&(j, _)| coef(i, j) * sigma[j]).sum();
            -t * total - aff.offset[i] - terms[i] - fixed
        })
        .collect();
    let det = linalg::determinant(&block);
    if linalg::is_singular(&block, det, game.tolerances().det) {
        return Err(Error::SingularSplit(split.clone()));
    }
    let x = linalg::solve(&block, &rhs).ok_or_else(|| Error::SingularSplit(split.clone()))?;
    for (&i, xi) in split.iter().zip(x) {
        sigma[i] = xi;
    }
    Ok(sigma)
}

fn interior_on(sigma: &[f64], split: &[usize], tol: f64) -> bool {
    split.iter().all(|&i| sigma[i] > tol && sigma[i] < 1.0 - tol)
}

/// Solves the consistency system of an affine game on `S` with the given
/// corners. `Ok(None)` when the unique solution is not interior on `S`.
pub fn solve_split_multilinear(
    game: &Game,
    cls: &Classification,
    mode: ConsistencyMode,
) -> Result<Option<ConsumptionProfile>> {
    if cls.split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let k_s = calculus::affine_k(game, &cls.split)?;
    if !(k_s < 0.0) {
        return Err(Error::NotRealizable(k_s));
    }
    let sigma = solve_affine_system(game, cls, k_s, mode)?;
    if !interior_on(&sigma, &cls.split, game.tolerances().sigma) {
        return Ok(None);
    }
    Ok(Some(game.profile(sigma)?))
}

/// The share of group `j` in a total-split outcome predicted by the
/// column-wise guess: exactly one half when firm-specific weights coincide for
/// the whole column, otherwise the guess when it does not depend on the row.
pub fn symmetric_column_prediction(game: &Game, j: usize, mode: ConsistencyMode) -> Option<f64> {
    let (alpha_a, alpha_b) = game.effects().alphas()?;
    let g = game.groups();
    if j >= g {
        return None;
    }
    if (0..g).all(|i| alpha_a[(i, j)] == alpha_b[(i, j)]) {
        return Some(0.5);
    }
    let all: Vec<usize> = (0..g).collect();
    let k = calculus::affine_k(game, &all).ok()?;
    let t = match mode {
        ConsistencyMode::FocConsistent => 1.0 / -k,
        ConsistencyMode::AsPrinted => 1.0 / k,
    };
    let guesses: Option<Vec<f64>> = (0..g)
        .map(|i| {
            let w = alpha_a[(i, j)] + alpha_b[(i, j)];
            let den = w / 2.0 - t;
            (den != 0.0).then(|| 0.5 * (alpha_b[(i, j)] - t) / den)
        })
        .collect();
    let guesses = guesses?;
    let first = guesses[0];
    guesses
        .iter()
        .all(|x| (x - first).abs() <= 1e-12 * first.abs().max(1.0))
        .then_some(first)
}

/// Shifts `tau_i = v_i(sigma) - dp` that make `sigma` a second-stage
/// equilibrium at any prices with difference `dp`.
pub fn tau_for_delta(game: &Game, profile: &ConsumptionProfile, delta: f64) -> Vec<f64> {
    game.eval_v(profile).into_iter().map(|v| v - delta).collect()
}

/// The unique shift under which a realizable split becomes an outcome at its
/// own prices, for every `epsilon > 0`.
pub fn tau_for_split(
    game: &Game,
    profile: &ConsumptionProfile,
    epsilon: f64,
    mode: ConsistencyMode,
) -> Result<TauShift> {
    let rep = is_realizable(game, profile)?;
    if !rep.realizable {
        return Err(Error::NotRealizable(rep.k_s));
    }
    let target = mode.target_delta(rep.k_s, excess_demand(profile, &game.masses()));
    TauShift::new(tau_for_delta(game, profile, target), epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDiagnostics {
    pub stability: StabilityReport,
    pub realizability: RealizabilityReport,
    pub ne_worst_slack: f64,
    /// Largest `|v_i - (p_a* - p_b*)|` over `S`.
    pub consistency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub sigma: Vec<f64>,
    pub split: Vec<usize>,
    pub corners: Vec<(usize, u8)>,
    pub prices: PricePair,
    pub demand: (f64, f64),
    pub profit: (f64, f64),
    pub stable: bool,
    pub realizable: bool,
    pub ne_holds: bool,
    pub spe_plus: bool,
    pub k_s: f64,
    pub r_s: f64,
    pub mode: ConsistencyMode,
    pub diagnostics: CertificateDiagnostics,
}

impl EquilibriumCertificate {
    pub fn is_total(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn failures(&self) -> Vec<Failure> {
        let mut out = Vec::new();
        if !self.stable {
            out.push(Failure::NotStable);
        }
        if !self.diagnostics.realizability.curvature_ok() {
            out.push(Failure::Curvature);
        }
        if !self.ne_holds {
            out.push(Failure::NotNash {
                worst_slack: self.diagnostics.ne_worst_slack,
            });
        }
        if !(self.prices.p_a > 0.0 && self.prices.p_b > 0.0) {
            out.push(Failure::NonPositivePrice);
        }
        out
    }
}

/// Builds the certificate for a profile at `psi(sigma)`.
pub fn certify(
    game: &Game,
    profile: &ConsumptionProfile,
    mode: ConsistencyMode,
) -> Result<EquilibriumCertificate> {
    let calc = calculus::split_calculus(game, profile)?;
    let masses = game.masses();
    let prices = prices_from_slope(calc.k_s, profile, &masses)?;
    let stability = is_stable_split(game, profile)?;
    let realizability = RealizabilityReport::from_calculus(&calc, profile, &masses);
    let ne = game.check_second_stage_ne(prices, profile);
    let v = game.eval_v(profile);
    let consistency = calc
        .split
        .iter()
        .map(|&i| (v[i] - prices.delta()).abs())
        .fold(0.0, f64::max);
    let demand = (profile.demand_a(&masses), profile.demand_b(&masses));
    let spe_plus = stability.stable
        && realizability.realizable
        && ne.holds
        && prices.p_a > 0.0
        && prices.p_b > 0.0;
    Ok(EquilibriumCertificate {
        sigma: profile.sigma().to_vec(),
        split: calc.split.clone(),
        corners: classify_profile(profile).corners,
        prices,
        demand,
        profit: (prices.p_a * demand.0, prices.p_b * demand.1),
        stable: stability.stable,
        realizable: realizability.realizable,
        ne_holds: ne.holds,
        spe_plus,
        k_s: calc.k_s,
        r_s: calc.r_s,
        mode,
        diagnostics: CertificateDiagnostics {
            stability,
            realizability,
            ne_worst_slack: ne.worst_slack,
            consistency,
        },
    })
}

/// Why a candidate split failed to certify.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Failure {
    SingularJacobian,
    NonNegativeSlope { k_s: f64 },
    SingularSystem,
    NonInterior { sigma: Vec<f64> },
    NonConvergence,
    NotStable,
    Curvature,
    NotNash { worst_slack: f64 },
    NonPositivePrice,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::SingularJacobian => write!(f, "restricted Jacobian singular"),
            Failure::NonNegativeSlope { k_s } => write!(f, "K_S = {k_s:.6} >= 0"),
            Failure::SingularSystem => write!(f, "consistency system singular"),
            Failure::NonInterior { sigma } => write!(f, "solution not interior: {sigma:.6?}"),
            Failure::NonConvergence => write!(f, "Newton solve did not converge"),
            Failure::NotStable => write!(f, "split not stable"),
            Failure::Curvature => write!(f, "second-order bound on R_S violated"),
            Failure::NotNash { worst_slack } => {
                write!(f, "not a second-stage NE at psi(sigma) (slack {worst_slack:.3e})")
            }
            Failure::NonPositivePrice => write!(f, "non-positive price"),
        }
    }
}

/// One `(S, corners)` case examined by the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub split: Vec<usize>,
    pub corners: Vec<(usize, u8)>,
    pub k_s: Option<f64>,
    pub certificate: Option<EquilibriumCertificate>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SpeSearch {
    pub certificates: Vec<EquilibriumCertificate>,
    /// Candidates failing exactly one condition.
    pub near_misses: Vec<Candidate>,
    pub examined: usize,
}

impl SpeSearch {
    /// Near misses exclude singular cases, and a non-negative slope is listed
    /// once per `S` since it does not depend on the corners.
    fn from_candidates(candidates: Vec<Candidate>) -> Self {
        let examined = candidates.len();
        let mut out = SpeSearch {
            examined,
            ..Default::default()
        };
        let mut slope_listed: Vec<Vec<usize>> = Vec::new();
        for c in candidates {
            match c.failures.as_slice() {
                [] => out.certificates.push(c.certificate.expect("certified candidate")),
                [Failure::SingularJacobian | Failure::SingularSystem] => {}
                [Failure::NonNegativeSlope { .. }] => {
                    if !slope_listed.contains(&c.split) {
                        slope_listed.push(c.split.clone());
                        out.near_misses.push(c);
                    }
                }
                [_] => out.near_misses.push(c),
                _ => {}
            }
        }
        out
    }
}

/// Every `(S, corners)` pair in canonical order: `S` by increasing bitmask,
/// corners by increasing bitmask over `S-bar` (bit set means firm `a`).
pub fn split_cases(g: usize) -> Vec<Classification> {
    let mut out = Vec::new();
    for mask in 1usize..(1 << g) {
        let split: Vec<usize> = (0..g).filter(|i| mask >> i & 1 == 1).collect();
        let rest: Vec<usize> = (0..g).filter(|i| mask >> i & 1 == 0).collect();
        for cmask in 0usize..(1 << rest.len()) {
            let corners = rest
                .iter()
                .enumerate()
                .map(|(b, &i)| (i, (cmask >> b & 1) as u8))
                .collect();
            out.push(Classification {
                split: split.clone(),
                corners,
            });
        }
    }
    out
}

fn examine_affine(game: &Game, cls: Classification, mode: ConsistencyMode) -> Candidate {
    let mut cand = Candidate {
        split: cls.split.clone(),
        corners: cls.corners.clone(),
        k_s: None,
        certificate: None,
        failures: Vec::new(),
    };
    let k_s = match calculus::affine_k(game, &cls.split) {
        Ok(k) => k,
        Err(_) => {
            cand.failures.push(Failure::SingularJacobian);
            return cand;
        }
    };
    cand.k_s = Some(k_s);
    if !(k_s < 0.0) {
        cand.failures.push(Failure::NonNegativeSlope { k_s });
        return cand;
    }
    let sigma = match solve_affine_system(game, &cls, k_s, mode) {
        Ok(s) => s,
        Err(_) => {
            cand.failures.push(Failure::SingularSystem);
            return cand;
        }
    };
    finish_candidate(game, cand, sigma, mode)
}

fn finish_candidate(
    game: &Game,
    mut cand: Candidate,
    sigma: Vec<f64>,
    mode: ConsistencyMode,
) -> Candidate {
    if !interior_on(&sigma, &cand.split, game.tolerances().sigma) {
        cand.failures.push(Failure::NonInterior { sigma });
        return cand;
    }
    let profile = match game.profile(sigma) {
        Ok(p) => p,
        Err(_) => unreachable!("interior shares with exact corners are in range"),
    };
    match certify(game, &profile, mode) {
        Ok(cert) => {
            cand.failures = cert.failures();
            cand.certificate = Some(cert);
        }
        Err(Error::NotRealizable(k_s)) => cand.failures.push(Failure::NonNegativeSlope { k_s }),
        Err(_) => cand.failures.push(Failure::SingularJacobian),
    }
    cand
}

/// Exhaustive search over all splits of an affine game.
pub fn find_local_spe(game: &Game, mode: ConsistencyMode) -> Result<SpeSearch> {
    let g = game.groups();
    if g > MAX_EXHAUSTIVE_GROUPS {
        return Err(Error::TooManyGroups {
            groups: g,
            limit: MAX_EXHAUSTIVE_GROUPS,
        });
    }
    if game.affine().is_none() {
        return Err(Error::NotAffine);
    }
    let candidates: Vec<Candidate> = split_cases(g)
        .into_par_iter()
        .map(|cls| examine_affine(game, cls, mode))
        .collect();
    Ok(SpeSearch::from_candidates(candidates))
}

/// Starting point for a nonlinear split search: the classification to solve
/// on and an initial share vector (its corner entries are overwritten).
#[derive(Clone, Debug)]
pub struct StartingPoint {
    pub classification: Classification,
    pub sigma: Vec<f64>,
}

/// Search for games without an affine form, from caller-supplied starting points.
pub fn find_local_spe_from(
    game: &Game,
    starts: &[StartingPoint],
    mode: ConsistencyMode,
) -> Result<SpeSearch> {
    let candidates: Vec<Candidate> = starts
        .par_iter()
        .map(|s| examine_nonlinear(game, s, mode))
        .collect::<Result<_>>()?;
    Ok(SpeSearch::from_candidates(candidates))
}

fn examine_nonlinear(game: &Game, start: &StartingPoint, mode: ConsistencyMode) -> Result<Candidate> {
    let cls = &start.classification;
    if cls.split.is_empty() {
        return Err(Error::EmptySplit);
    }
    if start.sigma.len() != game.groups() {
        return Err(Error::Dimension {
            what: "starting point".into(),
            expected: game.groups(),
            found: start.sigma.len(),
        });
    }
    let mut cand = Candidate {
        split: cls.split.clone(),
        corners: cls.corners.clone(),
        k_s: None,
        certificate: None,
        failures: Vec::new(),
    };
    let mut sigma = start.sigma.clone();
    for &(i, firm) in &cls.corners {
        sigma[i] = firm as f64;
    }
    match newton_consistency(game, &cls.split, sigma, mode) {
        Some(s) => Ok(finish_candidate(game, cand, s, mode)),
        None => {
            cand.failures.push(Failure::NonConvergence);
            Ok(cand)
        }
    }
}

/// Damped Newton on `v_S(sigma) - target(sigma) = 0` with a finite-difference
/// Jacobian; the target moves with `K_S(sigma)`.
fn newton_consistency(
    game: &Game,
    split: &[usize],
    mut sigma: Vec<f64>,
    mode: ConsistencyMode,
) -> Option<Vec<f64>> {
    let residual = |s: &[f64]| -> Option<Vec<f64>> {
        let p = game.profile(s.to_vec()).ok()?;
        if p.split_set() != split {
            return None;
        }
        consistency_residual(game, &p, mode).ok()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let h = 1e-7;
    let mut r = residual(&sigma)?;
    for _ in 0..100 {
        if norm(&r) < 1e-11 {
            return Some(sigma);
        }
        let l = split.len();
        let mut jac = linalg::Matrix::zeros(l, l);
        for (b, &j) in split.iter().enumerate() {
            let mut plus = sigma.clone();
            let mut minus = sigma.clone();
            plus[j] += h;
            minus[j] -= h;
            let (rp, rm) = (residual(&plus)?, residual(&minus)?);
            for a in 0..l {
                jac[(a, b)] = (rp[a] - rm[a]) / (2.0 * h);
            }
        }
        let step = linalg::solve(&jac, &r.iter().map(|x| -x).collect::<Vec<_>>())?;
        let mut lambda = 1.0;
        loop {
            let mut trial = sigma.clone();
            for (&j, d) in split.iter().zip(&step) {
                trial[j] += lambda * d;
            }
            if let Some(rt) = residual(&trial) {
                if norm(&rt) < norm(&r) {
                    sigma = trial;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
    }
    (norm(&r) < 1e-11).then_some(sigma)
}
