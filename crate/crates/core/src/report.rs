//! Plain-text and JSON reports.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::calculus::{self, SplitCalculus};
use crate::equilibrium::{
    self, Candidate, ConsistencyMode, EquilibriumCertificate, RealizabilityReport, SpeSearch,
    StabilityReport,
};
use crate::error::Result;
use crate::graphs::SearchSummary;
use crate::model::{classify_profile, ConsumptionProfile, Game, NeReport, PricePair};
use crate::verifier::{self, Outcome, Radius, Verification};

/// Fixed six-decimal rendering with negative zero folded to zero.
pub fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn vector(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| num(*x)).collect();
    format!("({})", parts.join(", "))
}

fn groups(ix: &[usize]) -> String {
    let parts: Vec<String> = ix.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn corners(cs: &[(usize, u8)]) -> String {
    if cs.is_empty() {
        return "none".into();
    }
    let parts: Vec<String> = cs
        .iter()
        .map(|(i, f)| format!("{}->{}", i + 1, if *f == 1 { 'a' } else { 'b' }))
        .collect();
    parts.join(", ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub kind: String,
    pub groups: Vec<String>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    pub shifted: bool,
}

impl GameSummary {
    pub fn of(game: &Game, description: Option<String>) -> Self {
        let p = game.partition();
        GameSummary {
            description,
            kind: game.effects().kind().to_string(),
            groups: (0..p.len()).map(|i| p.name(i).to_string()).collect(),
            masses: game.masses(),
            total_mass: game.total_mass(),
            shifted: game.shift().is_some(),
        }
    }

    fn write(&self, out: &mut String) {
        if let Some(d) = &self.description {
            let _ = writeln!(out, "{d}");
        }
        let _ = writeln!(
            out,
            "game: {} effects, {} groups, M = {}{}",
            self.kind,
            self.groups.len(),
            num(self.total_mass),
            if self.shifted { ", shifted" } else { "" }
        );
        for (name, m) in self.groups.iter().zip(&self.masses) {
            let _ = writeln!(out, "  {name:<14} m = {}", num(*m));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedOutcome {
    pub certificate: EquilibriumCertificate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification_error: Option<String>,
}

impl CertifiedOutcome {
    pub fn verified(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| v.verified)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub game: GameSummary,
    pub mode: ConsistencyMode,
    pub certificates: Vec<CertifiedOutcome>,
    pub near_misses: Vec<Candidate>,
    pub examined: usize,
    pub mode_notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// Verifier settings used by the reports.
#[derive(Clone, Copy, Debug)]
pub struct VerifySettings {
    pub radius: Radius,
    pub points: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            radius: Radius::Auto,
            points: 41,
        }
    }
}

fn other(mode: ConsistencyMode) -> ConsistencyMode {
    match mode {
        ConsistencyMode::FocConsistent => ConsistencyMode::AsPrinted,
        ConsistencyMode::AsPrinted => ConsistencyMode::FocConsistent,
    }
}

fn outcome_line(c: &EquilibriumCertificate) -> String {
    format!(
        "sigma = {}, p = ({}, {})",
        vector(&c.sigma),
        num(c.prices.p_a),
        num(c.prices.p_b)
    )
}

impl SolveReport {
    pub fn build(
        game: &Game,
        description: Option<String>,
        mode: ConsistencyMode,
        settings: VerifySettings,
    ) -> Result<Self> {
        let search = equilibrium::find_local_spe(game, mode)?;
        let alt = equilibrium::find_local_spe(game, other(mode))?;
        Ok(Self::from_search(game, description, mode, search, Some(alt), settings))
    }

    pub fn from_search(
        game: &Game,
        description: Option<String>,
        mode: ConsistencyMode,
        search: SpeSearch,
        alternative: Option<SpeSearch>,
        settings: VerifySettings,
    ) -> Self {
        let certificates = search
            .certificates
            .into_iter()
            .map(|c| {
                let v = verifier::verify_local_spe(game, &(&c).into(), settings.radius, settings.points);
                let (verification, verification_error) = match v {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                CertifiedOutcome {
                    certificate: c,
                    verification,
                    verification_error,
                }
            })
            .collect::<Vec<_>>();
        let mut mode_notes = Vec::new();
        if let Some(alt) = alternative {
            let here: Vec<&[f64]> = certificates.iter().map(|c| c.certificate.sigma.as_slice()).collect();
            let there: Vec<&[f64]> = alt.certificates.iter().map(|c| c.sigma.as_slice()).collect();
            if !same_points(&here, &there) {
                let alt_mode = other(mode).label();
                if alt.certificates.is_empty() {
                    mode_notes.push(format!("{alt_mode} mode: no certificates"));
                }
                for c in &alt.certificates {
                    mode_notes.push(format!("{alt_mode} mode certifies {}", outcome_line(c)));
                }
                for n in alt.near_misses.iter().filter(|n| n.certificate.is_some()) {
                    let c = n.certificate.as_ref().expect("filtered");
                    mode_notes.push(format!(
                        "{alt_mode} mode near miss {}: {}",
                        outcome_line(c),
                        n.failures[0]
                    ));
                }
            }
        }
        SolveReport {
            game: GameSummary::of(game, description),
            mode,
            certificates,
            near_misses: search.near_misses,
            examined: search.examined,
            mode_notes,
            timing_ms: None,
        }
    }

    /// Every certificate verified by the numerical oracle.
    pub fn all_verified(&self) -> bool {
        self.certificates.iter().all(CertifiedOutcome::verified)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.game.write(&mut out);
        let _ = writeln!(out, "mode: {}", self.mode.label());
        let _ = writeln!(out, "candidates examined: {}", self.examined);
        let _ = writeln!(out, "certificates: {}", self.certificates.len());
        for (n, c) in self.certificates.iter().enumerate() {
            let cert = &c.certificate;
            let _ = writeln!(out, "[{}] S = {}, corners: {}", n + 1, groups(&cert.split), corners(&cert.corners));
            let _ = writeln!(out, "    {}", outcome_line(cert));
            let _ = writeln!(
                out,
                "    K = {}, R = {}, demand = ({}, {}), profit = ({}, {})",
                num(cert.k_s),
                num(cert.r_s),
                num(cert.demand.0),
                num(cert.demand.1),
                num(cert.profit.0),
                num(cert.profit.1)
            );
            match (&c.verification, &c.verification_error) {
                (Some(v), _) => write_verification(&mut out, v),
                (None, Some(e)) => {
                    let _ = writeln!(out, "    verifier: ERROR {e}");
                }
                (None, None) => {}
            }
        }
        if !self.near_misses.is_empty() {
            let _ = writeln!(out, "near misses: {}", self.near_misses.len());
            for n in &self.near_misses {
                let _ = write!(out, "  S = {}, corners: {}", groups(&n.split), corners(&n.corners));
                if let Some(k) = n.k_s {
                    let _ = write!(out, ", K = {}", num(k));
                }
                if let Some(c) = &n.certificate {
                    let _ = write!(out, ", {}", outcome_line(c));
                }
                let _ = writeln!(out, ": {}", n.failures[0]);
            }
        }
        for note in &self.mode_notes {
            let _ = writeln!(out, "note: {note}");
        }
        if let Some(t) = self.timing_ms {
            let _ = writeln!(out, "time: {t:.1} ms");
        }
        out
    }
}

fn same_points(a: &[&[f64]], b: &[&[f64]]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| crate::model::sup_distance(x, y) <= 1e-9)
}

fn write_verification(out: &mut String, v: &Verification) {
    let _ = writeln!(
        out,
        "    verifier: {} (worst margin {:.3e}{})",
        if v.verified { "PASS" } else { "FAIL" },
        v.worst_margin,
        if v.truncated() { ", truncated" } else { "" }
    );
    for f in &v.firms {
        let _ = writeln!(
            out,
            "      firm {}: radius {}, D' = {}, D'' = {}, 2D' + pD'' = {}",
            f.firm.label(),
            num(f.radius),
            num(f.d1),
            num(f.d2),
            num(f.second_order)
        );
    }
    if !v.agrees_with_analytic() {
        let _ = writeln!(out, "    numerical second-order verdict disagrees with the analytic bounds");
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeResidual {
    pub mode: ConsistencyMode,
    pub residual: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub game: GameSummary,
    pub sigma: Vec<f64>,
    pub split: Vec<usize>,
    pub corners: Vec<(usize, u8)>,
    pub v: Vec<f64>,
    pub calculus: SplitCalculus,
    pub stability: StabilityReport,
    pub realizability: RealizabilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PricePair>,
    pub residuals: Vec<ModeResidual>,
}

impl AnalyzeReport {
    pub fn build(game: &Game, description: Option<String>, profile: &ConsumptionProfile) -> Result<Self> {
        let calc = calculus::split_calculus(game, profile)?;
        let cls = classify_profile(profile);
        let stability = equilibrium::is_stable_split(game, profile)?;
        let realizability = equilibrium::is_realizable(game, profile)?;
        let prices = equilibrium::prices_from_slope(calc.k_s, profile, &game.masses()).ok();
        let residuals = [ConsistencyMode::FocConsistent, ConsistencyMode::AsPrinted]
            .into_iter()
            .filter_map(|mode| {
                equilibrium::consistency_residual(game, profile, mode)
                    .ok()
                    .map(|residual| ModeResidual { mode, residual })
            })
            .collect();
        Ok(AnalyzeReport {
            game: GameSummary::of(game, description),
            sigma: profile.sigma().to_vec(),
            split: cls.split,
            corners: cls.corners,
            v: game.eval_v(profile),
            calculus: calc,
            stability,
            realizability,
            prices,
            residuals,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.game.write(&mut out);
        let c = &self.calculus;
        let _ = writeln!(out, "sigma = {}", vector(&self.sigma));
        let _ = writeln!(out, "S = {}, corners: {}", groups(&self.split), corners(&self.corners));
        let _ = writeln!(out, "v = {}", vector(&self.v));
        let _ = writeln!(out, "det J = {}", num(c.det));
        let _ = writeln!(out, "k = {}", vector(&c.k));
        let _ = writeln!(out, "r = {}", vector(&c.r));
        let _ = writeln!(out, "K = {}, R = {}", num(c.k_s), num(c.r_s));
        let s = &self.stability;
        let _ = writeln!(
            out,
            "stable: {} (spread {:.3e}, gap {})",
            yes(s.stable),
            s.spread,
            if s.gap.is_finite() { num(s.gap) } else { "none".into() }
        );
        let r = &self.realizability;
        let _ = writeln!(
            out,
            "realizable: {} (R/2K^2 = {} in ({}, {}))",
            yes(r.realizable),
            num(r.ratio),
            num(r.lower),
            num(r.upper)
        );
        match &self.prices {
            Some(p) => {
                let _ = writeln!(out, "psi(sigma) = ({}, {})", num(p.p_a), num(p.p_b));
            }
            None => {
                let _ = writeln!(out, "psi(sigma) undefined: K >= 0");
            }
        }
        for m in &self.residuals {
            let _ = writeln!(out, "consistency residual ({}): {}", m.mode.label(), vector(&m.residual));
        }
        out
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub outcome: Outcome,
    pub ne: NeReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub game: GameSummary,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn build(
        game: &Game,
        description: Option<String>,
        outcomes: &[Outcome],
        settings: VerifySettings,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            let profile = game.profile(o.sigma.clone())?;
            let ne = game.check_second_stage_ne(o.prices, &profile);
            let (verification, error) =
                match verifier::verify_local_spe(game, o, settings.radius, settings.points) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
            entries.push(VerifyEntry {
                outcome: o.clone(),
                ne,
                verification,
                error,
            });
        }
        Ok(VerifyReport {
            game: GameSummary::of(game, description),
            entries,
        })
    }

    pub fn all_verified(&self) -> bool {
        !self.entries.is_empty()
            && self
                .entries
                .iter()
                .all(|e| e.verification.as_ref().is_some_and(|v| v.verified))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.game.write(&mut out);
        for (n, e) in self.entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "[{}] sigma = {}, p = ({}, {})",
                n + 1,
                vector(&e.outcome.sigma),
                num(e.outcome.prices.p_a),
                num(e.outcome.prices.p_b)
            );
            let _ = writeln!(
                out,
                "    second-stage NE: {} (worst slack {:.3e})",
                yes(e.ne.holds),
                e.ne.worst_slack
            );
            if let Some(v) = &e.verification {
                write_verification(&mut out, v);
            }
            if let Some(err) = &e.error {
                let _ = writeln!(out, "    verifier refused: {err}");
            }
        }
        out
    }
}

impl fmt::Display for SearchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} graphs, {} realizable splits",
            self.graphs_checked, self.realizable_splits
        )?;
        writeln!(
            f,
            "nodes: {}, subsets checked: {}, singular subsets: {}, graphs with a realizable split: {}",
            self.nodes, self.subsets_checked, self.singular_subsets, self.graphs_with_realizable
        )?;
        const SHOWN: usize = 20;
        for c in self.certificates.iter().take(SHOWN) {
            let rows: Vec<String> = c
                .graph
                .adjacency()
                .iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect::<String>())
                .collect();
            writeln!(
                f,
                "  graph {} [{}] S = {} K = {}/{} = {}",
                c.code,
                rows.join(" "),
                groups(&c.split),
                c.exact.num,
                c.exact.den,
                num(c.k_s)
            )?;
        }
        if self.certificates.len() > SHOWN {
            writeln!(f, "  ... {} more", self.certificates.len() - SHOWN)?;
        }
        Ok(())
    }
}
