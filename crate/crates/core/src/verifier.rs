//! Numerical oracle for local outcomes.
//!
//! The selection through a stable split is traced by Newton continuation on
//! `v_i(q) = p_a - p_b` for `i in S`, with `S-bar` held at its corners. Demand
//! derivatives come from finite differences along the traced path and local
//! optimality from direct sampling of profits. Nothing here uses the cofactor
//! formulas except the Lipschitz bound and the analytic verdict it is compared
//! against.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, EquilibriumCertificate};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{classify_profile, ConsumptionProfile, Game, PricePair, ShareClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Firm {
    A,
    B,
}

impl Firm {
    pub fn label(self) -> &'static str {
        match self {
            Firm::A => "a",
            Firm::B => "b",
        }
    }

    fn own_price(self, p: PricePair) -> f64 {
        match self {
            Firm::A => p.p_a,
            Firm::B => p.p_b,
        }
    }

    fn deviate(self, p: PricePair, d: f64) -> PricePair {
        match self {
            Firm::A => PricePair { p_a: p.p_a + d, ..p },
            Firm::B => PricePair { p_b: p.p_b + d, ..p },
        }
    }

    fn demand(self, q: &[f64], masses: &[f64]) -> f64 {
        let a: f64 = q.iter().zip(masses).map(|(s, m)| s * m).sum();
        match self {
            Firm::A => a,
            Firm::B => masses.iter().sum::<f64>() - a,
        }
    }
}

/// A price pair and the profile consumers settle on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub prices: PricePair,
    pub sigma: Vec<f64>,
}

impl From<&EquilibriumCertificate> for Outcome {
    fn from(c: &EquilibriumCertificate) -> Self {
        Outcome {
            prices: c.prices,
            sigma: c.sigma.clone(),
        }
    }
}

/// Neighborhood half-width around `p_j*`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Radius {
    Absolute(f64),
    /// Fraction of the firm's own price.
    Relative(f64),
    /// `min(10% of p_j*, half the distance to the first S-bar reversal)`.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPath {
    pub firm: Firm,
    pub center: PricePair,
    pub radius: f64,
    pub deviations: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub demand: Vec<f64>,
    pub profit: Vec<f64>,
    pub converged: Vec<bool>,
}

impl SelectionPath {
    pub fn len(&self) -> usize {
        self.deviations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deviations.is_empty()
    }

    pub fn center_index(&self) -> usize {
        self.len() / 2
    }

    pub fn step(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            2.0 * self.radius / (self.len() - 1) as f64
        }
    }

    /// Some grid point failed to converge or left the split's region.
    pub fn truncated(&self) -> bool {
        self.converged.iter().any(|c| !c)
    }

    /// Largest `|d|` such that every grid point within it converged.
    pub fn valid_radius(&self) -> f64 {
        let c = self.center_index();
        let reach = |it: &mut dyn Iterator<Item = usize>| {
            let mut r = 0.0f64;
            for k in it {
                if !self.converged[k] {
                    break;
                }
                r = r.max(self.deviations[k].abs());
            }
            r
        };
        reach(&mut (c..self.len())).min(reach(&mut (0..=c).rev()))
    }

    /// `deviation,q_1..q_g,demand,profit`; unconverged rows are omitted.
    pub fn to_csv(&self) -> String {
        let g = self.profiles.first().map_or(0, |q| q.len());
        let mut out = String::from("deviation");
        for i in 1..=g {
            let _ = write!(out, ",q_{i}");
        }
        out.push_str(",demand,profit\n");
        for k in (0..self.len()).filter(|&k| self.converged[k]) {
            let _ = write!(out, "{:.12}", self.deviations[k]);
            for q in &self.profiles[k] {
                let _ = write!(out, ",{q:.12}");
            }
            let _ = writeln!(out, ",{:.12},{:.12}", self.demand[k], self.profit[k]);
        }
        out
    }
}

const NEWTON_ITERATIONS: usize = 50;

/// Solves `v_i(q) = dp` on `S` from `start`; `None` when the iterate cannot
/// stay inside the split's region or the residual does not drop below tolerance.
fn newton_on_split(game: &Game, split: &[usize], start: &[f64], dp: f64) -> Option<Vec<f64>> {
    let tol = 1e-12 * dp.abs().max(1.0);
    let eval = |q: &[f64]| -> Option<(ConsumptionProfile, Vec<f64>)> {
        let p = game.profile(q.to_vec()).ok()?;
        if split.iter().any(|&i| p.class(i) != ShareClass::Split) {
            return None;
        }
        let v = game.eval_v(&p);
        let r = split.iter().map(|&i| v[i] - dp).collect();
        Some((p, r))
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut q = start.to_vec();
    let (mut prof, mut res) = eval(&q)?;
    for _ in 0..NEWTON_ITERATIONS {
        if norm(&res) <= tol {
            return Some(q);
        }
        let jac = game.eval_derivatives(&prof).ok()?.jacobian.principal(split);
        let step = linalg::solve(&jac, &res.iter().map(|x| -x).collect::<Vec<_>>())?;
        let mut lambda = 1.0;
        loop {
            let mut trial = q.clone();
            for (&i, d) in split.iter().zip(&step) {
                trial[i] += lambda * d;
            }
            match eval(&trial) {
                Some((p, r)) if norm(&r) < norm(&res) || norm(&r) <= tol => {
                    q = trial;
                    prof = p;
                    res = r;
                    break;
                }
                _ => {}
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return None;
            }
        }
    }
    (norm(&res) <= tol).then_some(q)
}

fn check_outcome(game: &Game, outcome: &Outcome) -> Result<ConsumptionProfile> {
    let profile = game.profile(outcome.sigma.clone())?;
    if !profile.is_split() {
        return Err(Error::NotASplit);
    }
    let ne = game.check_second_stage_ne(outcome.prices, &profile);
    if !ne.holds {
        return Err(Error::NotAnEquilibrium(ne.worst_slack));
    }
    Ok(profile)
}

fn resolve_radius(
    game: &Game,
    outcome: &Outcome,
    firm: Firm,
    radius: Radius,
) -> Result<f64> {
    let own = firm.own_price(outcome.prices).abs().max(f64::MIN_POSITIVE);
    match radius {
        Radius::Absolute(r) => Ok(r),
        Radius::Relative(f) => Ok(f * own),
        Radius::Auto => {
            let wide = 0.1 * own;
            let scan = trace_with_radius(game, outcome, firm, wide, 41)?;
            if scan.truncated() {
                // first failing deviation, halved
                let fail = (0..scan.len())
                    .filter(|&k| !scan.converged[k])
                    .map(|k| scan.deviations[k].abs())
                    .fold(f64::INFINITY, f64::min);
                Ok(wide.min(0.5 * fail))
            } else {
                Ok(wide)
            }
        }
    }
}

/// Traces the continuous selection through `outcome` as firm `firm` deviates
/// over `n` grid points (rounded up to odd) spanning `[-radius, radius]`.
pub fn trace_local_selection(
    game: &Game,
    outcome: &Outcome,
    firm: Firm,
    radius: Radius,
    n: usize,
) -> Result<SelectionPath> {
    check_outcome(game, outcome)?;
    let rho = resolve_radius(game, outcome, firm, radius)?;
    if !(rho > 0.0) {
        return Err(Error::Invalid(format!("radius must be positive, got {rho}")));
    }
    trace_with_radius(game, outcome, firm, rho, n)
}

fn trace_with_radius(
    game: &Game,
    outcome: &Outcome,
    firm: Firm,
    rho: f64,
    n: usize,
) -> Result<SelectionPath> {
    let profile = check_outcome(game, outcome)?;
    let n = n.max(3) | 1;
    let split = profile.split_set();
    let masses = game.masses();
    let c = n / 2;
    let deviations: Vec<f64> = (0..n)
        .map(|k| rho * (k as f64 - c as f64) / c as f64)
        .collect();
    let mut profiles = vec![Vec::new(); n];
    let mut converged = vec![false; n];

    let center = newton_on_split(game, &split, profile.sigma(), outcome.prices.delta()).ok_or(
        Error::NonConvergence {
            residual: f64::NAN,
            iterations: NEWTON_ITERATIONS,
        },
    )?;
    profiles[c] = center.clone();
    converged[c] = true;

    for dir in [1isize, -1] {
        let mut last = center.clone();
        let mut k = c as isize + dir;
        while (0..n as isize).contains(&k) {
            let idx = k as usize;
            let p = firm.deviate(outcome.prices, deviations[idx]);
            let accepted = newton_on_split(game, &split, &last, p.delta()).filter(|q| {
                game.profile(q.clone())
                    .map(|prof| {
                        classify_profile(&prof).split == split
                            && game.check_second_stage_ne(p, &prof).holds
                    })
                    .unwrap_or(false)
            });
            match accepted {
                Some(q) => {
                    profiles[idx] = q.clone();
                    converged[idx] = true;
                    last = q;
                }
                None => break,
            }
            k += dir;
        }
    }

    let mut demand = vec![f64::NAN; n];
    let mut profit = vec![f64::NAN; n];
    for k in (0..n).filter(|&k| converged[k]) {
        demand[k] = firm.demand(&profiles[k], &masses);
        profit[k] = demand[k] * (firm.own_price(outcome.prices) + deviations[k]);
    }
    Ok(SelectionPath {
        firm,
        center: outcome.prices,
        radius: rho,
        deviations,
        profiles,
        demand,
        profit,
        converged,
    })
}

/// `(D'(p*), D''(p*))` from five-point central differences on the path grid.
pub fn demand_derivatives_fd(path: &SelectionPath) -> Result<(f64, f64)> {
    let c = path.center_index();
    let around: Vec<usize> = (c.saturating_sub(2)..=(c + 2).min(path.len().saturating_sub(1))).collect();
    let found = around.iter().filter(|&&k| path.converged[k]).count();
    if around.len() < 5 || found < 5 {
        return Err(Error::InsufficientPoints { needed: 5, found });
    }
    let h = path.step();
    let f = |o: isize| path.demand[(c as isize + o) as usize];
    let d1 = (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
    let d2 = (-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * h * h);
    Ok((d1, d2))
}

/// Largest successive step of `q` over `2 max|k_i| h`; at most one when the
/// path is Lipschitz with the expected constant.
pub fn lipschitz_ratio(path: &SelectionPath, k: &[f64]) -> f64 {
    let kmax = k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let bound = 2.0 * kmax * path.step();
    let mut worst = 0.0f64;
    for w in 0..path.len().saturating_sub(1) {
        if path.converged[w] && path.converged[w + 1] {
            let step = crate::model::sup_distance(&path.profiles[w], &path.profiles[w + 1]);
            worst = worst.max(step);
        }
    }
    if bound > 0.0 {
        worst / bound
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirmVerdict {
    pub firm: Firm,
    pub radius: f64,
    pub points: usize,
    pub truncated: bool,
    /// `min (Pi(p*) - Pi(p))` over sampled deviations `p != p*`.
    pub worst_margin: f64,
    pub d1: f64,
    pub d2: f64,
    /// `2 D' + p* D''`.
    pub second_order: f64,
    pub lipschitz_ratio: f64,
    pub local_max: bool,
}

impl FirmVerdict {
    pub fn second_order_holds(&self) -> bool {
        self.second_order < 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub verified: bool,
    pub firms: Vec<FirmVerdict>,
    pub worst_margin: f64,
    /// Both firms satisfy `2 D' + p* D'' < 0` numerically.
    pub numeric_second_order: bool,
    /// Analytic slope and curvature bounds.
    pub analytic_realizable: bool,
}

impl Verification {
    pub fn agrees_with_analytic(&self) -> bool {
        self.numeric_second_order == self.analytic_realizable
    }

    pub fn truncated(&self) -> bool {
        self.firms.iter().any(|f| f.truncated)
    }
}

/// Checks that neither firm gains from a sampled deviation along the traced
/// selection, as well as the numerical second-order condition for each firm.
pub fn verify_local_spe(
    game: &Game,
    outcome: &Outcome,
    radius: Radius,
    n: usize,
) -> Result<Verification> {
    let profile = check_outcome(game, outcome)?;
    let analytic = equilibrium::is_realizable(game, &profile)?;
    let k = crate::calculus::split_calculus(game, &profile)?.k;
    let paths: Vec<Result<SelectionPath>> = [Firm::A, Firm::B]
        .par_iter()
        .map(|&f| trace_local_selection(game, outcome, f, radius, n))
        .collect();
    let mut firms = Vec::with_capacity(2);
    for path in paths {
        let path = path?;
        let (d1, d2) = demand_derivatives_fd(&path)?;
        let c = path.center_index();
        let peak = path.profit[c];
        let scale = peak.abs().max(1.0);
        let worst_margin = (0..path.len())
            .filter(|&k| k != c && path.converged[k])
            .map(|k| peak - path.profit[k])
            .fold(f64::INFINITY, f64::min);
        let own = path.firm.own_price(outcome.prices);
        firms.push(FirmVerdict {
            firm: path.firm,
            radius: path.radius,
            points: path.converged.iter().filter(|c| **c).count(),
            truncated: path.truncated(),
            worst_margin,
            d1,
            d2,
            second_order: 2.0 * d1 + own * d2,
            lipschitz_ratio: lipschitz_ratio(&path, &k),
            local_max: worst_margin >= -1e-12 * scale,
        });
    }
    let worst_margin = firms.iter().map(|f| f.worst_margin).fold(f64::INFINITY, f64::min);
    let numeric_second_order = firms.iter().all(FirmVerdict::second_order_holds);
    Ok(Verification {
        verified: firms.iter().all(|f| f.local_max) && numeric_second_order,
        firms,
        worst_margin,
        numeric_second_order,
        analytic_realizable: analytic.realizable,
    })
}
