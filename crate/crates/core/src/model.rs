//! Games with group-partitioned network effects and their second stage.
//!
//! A game fixes a partition of consumers into groups with masses `m_i`, a
//! network-effect specification, and optionally a per-group shift. Its central
//! object is the aggregate utility difference `v: [0,1]^g -> R^g`, whose value
//! at a consumption profile decides which firm the members of each group pick.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Tolerances shared by every analysis on a game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// A share is interior when it lies in `(sigma, 1 - sigma)`.
    pub sigma: f64,
    /// Slack allowed in the second-stage Nash conditions.
    pub ne: f64,
    /// Relative determinant threshold (against the Hadamard bound).
    pub det: f64,
    /// Sup-norm distance under which enumerated profiles are merged.
    pub dedup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sigma: 1e-9,
            ne: 1e-8,
            det: 1e-10,
            dedup: 1e-7,
        }
    }
}

/// Largest partition accepted by the exhaustive `3^g` / `2^g` routines.
pub const MAX_EXHAUSTIVE_GROUPS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupPartition {
    groups: Vec<Group>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyPartition);
        }
        let mut seen = HashSet::new();
        for grp in &groups {
            if !(grp.mass > 0.0) || !grp.mass.is_finite() {
                return Err(Error::NonPositiveMass {
                    name: grp.name.clone(),
                    mass: grp.mass,
                });
            }
            if !seen.insert(grp.name.as_str()) {
                return Err(Error::DuplicateGroupName(grp.name.clone()));
            }
        }
        Ok(GroupPartition { groups })
    }

    /// Groups named `G1..Gg` with the given masses.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        Self::new(
            masses
                .iter()
                .enumerate()
                .map(|(i, &mass)| Group {
                    name: format!("G{}", i + 1),
                    mass,
                })
                .collect(),
        )
    }

    pub fn unit(g: usize) -> Self {
        Self::from_masses(&vec![1.0; g]).expect("unit masses are valid")
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn masses(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.mass).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.groups.iter().map(|g| g.mass).sum()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.groups[i].name
    }
}

pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
pub type JacobianFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;
pub type HessianFn = dyn Fn(&[f64]) -> Vec<Matrix> + Send + Sync;

/// Twice-differentiable single-group specifications.
#[derive(Clone)]
pub enum ScalarForm {
    /// `v^j(d) = alpha d - beta d^2` without transport costs, so
    /// `v(sigma) = (2 sigma - 1)(alpha m - beta m^2)`.
    Grilo { alpha: f64, beta: f64 },
    /// Caller-supplied `v(sigma)` with its first and second derivatives.
    Custom {
        v: Arc<ScalarFn>,
        dv: Arc<ScalarFn>,
        d2v: Arc<ScalarFn>,
    },
}

impl ScalarForm {
    pub fn custom(
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2v: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarForm::Custom {
            v: Arc::new(v),
            dv: Arc::new(dv),
            d2v: Arc::new(d2v),
        }
    }
}

impl fmt::Debug for ScalarForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarForm::Grilo { alpha, beta } => f
                .debug_struct("Grilo")
                .field("alpha", alpha)
                .field("beta", beta)
                .finish(),
            ScalarForm::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Finite-difference settings for host-supplied functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    pub jacobian_step: f64,
    pub hessian_step: f64,
    /// Near the faces of `[0,1]^g` fall back to one-sided stencils instead of
    /// failing with [`Error::Boundary`].
    pub one_sided_at_boundary: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            jacobian_step: 1e-5,
            hessian_step: 1e-4,
            one_sided_at_boundary: true,
        }
    }
}

/// A map `v: [0,1]^g -> R^g` supplied through the library API.
#[derive(Clone)]
pub struct HostFunction {
    v: Arc<VectorFn>,
    jacobian: Option<Arc<JacobianFn>>,
    hessians: Option<Arc<HessianFn>>,
    pub fd: FdOptions,
}

impl HostFunction {
    pub fn new(v: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        HostFunction {
            v: Arc::new(v),
            jacobian: None,
            hessians: None,
            fd: FdOptions::default(),
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_hessians(
        mut self,
        h: impl Fn(&[f64]) -> Vec<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.hessians = Some(Arc::new(h));
        self
    }

    pub fn with_fd(mut self, fd: FdOptions) -> Self {
        self.fd = fd;
        self
    }

    /// Same function with the analytic derivatives dropped.
    pub fn without_analytic(&self) -> Self {
        HostFunction {
            v: self.v.clone(),
            jacobian: None,
            hessians: None,
            fd: self.fd,
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }
}

impl fmt::Debug for HostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HostFunction")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("analytic_hessians", &self.hessians.is_some())
            .field("fd", &self.fd)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum NetworkEffects {
    /// `v_i^j(d^j) = sum_i' alpha^j_ii' d^j_i'`, so `W = alpha^a + alpha^b`.
    Multilinear { alpha_a: Matrix, alpha_b: Matrix },
    /// Symmetric 0/1 adjacency with loops; `alpha^a = alpha^b = A`, `W = 2A`.
    Adjacency { matrix: Matrix },
    SingleGroup(ScalarForm),
    Host(HostFunction),
}

impl NetworkEffects {
    pub fn kind(&self) -> &'static str {
        match self {
            NetworkEffects::Multilinear { .. } => "multilinear",
            NetworkEffects::Adjacency { .. } => "adjacency",
            NetworkEffects::SingleGroup(_) => "single_group",
            NetworkEffects::Host(_) => "host",
        }
    }

    /// `(alpha^a, alpha^b)` for the multilinear family.
    pub fn alphas(&self) -> Option<(Matrix, Matrix)> {
        match self {
            NetworkEffects::Multilinear { alpha_a, alpha_b } => {
                Some((alpha_a.clone(), alpha_b.clone()))
            }
            NetworkEffects::Adjacency { matrix } => Some((matrix.clone(), matrix.clone())),
            _ => None,
        }
    }

    /// `W = alpha^a + alpha^b` for the multilinear family.
    pub fn w(&self) -> Option<Matrix> {
        self.alphas().map(|(a, b)| a.add(&b))
    }
}

/// The shift `v_i - tau_i (+eps_i at sigma_i = 1, -eps_i at sigma_i = 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauShift {
    pub tau: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl TauShift {
    pub fn new(tau: Vec<f64>, epsilon: f64) -> Result<Self> {
        let g = tau.len();
        Self::per_group(tau, vec![epsilon; g])
    }

    pub fn per_group(tau: Vec<f64>, epsilon: Vec<f64>) -> Result<Self> {
        if epsilon.len() != tau.len() {
            return Err(Error::Dimension {
                what: "shift epsilon".into(),
                expected: tau.len(),
                found: epsilon.len(),
            });
        }
        if let Some(&bad) = epsilon.iter().find(|&&e| !(e > 0.0)) {
            return Err(Error::NonPositiveEpsilon(bad));
        }
        Ok(TauShift { tau, epsilon })
    }

    fn term(&self, i: usize, class: ShareClass) -> f64 {
        match class {
            ShareClass::One => -self.tau[i] + self.epsilon[i],
            ShareClass::Split => -self.tau[i],
            ShareClass::Zero => -self.tau[i] - self.epsilon[i],
        }
    }
}

/// How a group's share sits relative to the interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareClass {
    Zero,
    Split,
    One,
}

/// Shares `sigma_i` of each group buying from firm `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionProfile {
    sigma: Vec<f64>,
    tol: f64,
}

impl ConsumptionProfile {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(sigma, Tolerances::default().sigma)
    }

    pub fn with_tolerance(sigma: Vec<f64>, tol: f64) -> Result<Self> {
        for (group, &value) in sigma.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ShareOutOfRange { group, value });
            }
        }
        Ok(ConsumptionProfile { sigma, tol })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn class(&self, i: usize) -> ShareClass {
        let s = self.sigma[i];
        if s <= self.tol {
            ShareClass::Zero
        } else if s >= 1.0 - self.tol {
            ShareClass::One
        } else {
            ShareClass::Split
        }
    }

    pub fn classes(&self) -> Vec<ShareClass> {
        (0..self.len()).map(|i| self.class(i)).collect()
    }

    /// `S(sigma)`: indices of groups that split.
    pub fn split_set(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.class(i) == ShareClass::Split)
            .collect()
    }

    pub fn is_split(&self) -> bool {
        (0..self.len()).any(|i| self.class(i) == ShareClass::Split)
    }

    pub fn is_total_split(&self) -> bool {
        (0..self.len()).all(|i| self.class(i) == ShareClass::Split)
    }

    /// Demand for firm `a`, `m . sigma`.
    pub fn demand_a(&self, masses: &[f64]) -> f64 {
        masses.iter().zip(&self.sigma).map(|(m, s)| m * s).sum()
    }

    /// Demand for firm `b`, `m . (1 - sigma)`.
    pub fn demand_b(&self, masses: &[f64]) -> f64 {
        masses.iter().zip(&self.sigma).map(|(m, s)| m * (1.0 - s)).sum()
    }
}

/// `{S, S-bar}` with each non-splitting group's corner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub split: Vec<usize>,
    /// `(group, firm)` where firm is 1 for `a` (`sigma_i = 1`) and 0 for `b`.
    pub corners: Vec<(usize, u8)>,
}

impl Classification {
    pub fn is_split(&self) -> bool {
        !self.split.is_empty()
    }

    pub fn is_total(&self) -> bool {
        self.corners.is_empty()
    }
}

pub fn classify_profile(profile: &ConsumptionProfile) -> Classification {
    let mut split = Vec::new();
    let mut corners = Vec::new();
    for (i, class) in profile.classes().into_iter().enumerate() {
        match class {
            ShareClass::Split => split.push(i),
            ShareClass::Zero => corners.push((i, 0)),
            ShareClass::One => corners.push((i, 1)),
        }
    }
    Classification { split, corners }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricePair {
    pub p_a: f64,
    pub p_b: f64,
}

impl PricePair {
    pub fn new(p_a: f64, p_b: f64) -> Result<Self> {
        if !(p_a >= 0.0 && p_b >= 0.0) {
            return Err(Error::Invalid(format!(
                "prices must be non-negative, got ({p_a}, {p_b})"
            )));
        }
        Ok(PricePair { p_a, p_b })
    }

    /// `p_a - p_b`.
    pub fn delta(&self) -> f64 {
        self.p_a - self.p_b
    }
}

/// Which of the three Nash conditions applies to a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeCondition {
    /// `sigma_i = 1` requires `v_i >= p_a - p_b`.
    AllAtA,
    /// `sigma_i = 0` requires `v_i <= p_a - p_b`.
    AllAtB,
    /// Interior share requires `v_i = p_a - p_b`.
    Indifferent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCondition {
    pub group: usize,
    pub condition: NeCondition,
    pub v: f64,
    /// Non-negative when satisfied; `-|v_i - dp|` for indifferent groups.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeReport {
    pub holds: bool,
    pub groups: Vec<GroupCondition>,
    pub worst_slack: f64,
}

impl NeReport {
    /// Smallest slack among corner groups (`+inf` for total splits).
    pub fn corner_slack(&self) -> f64 {
        self.groups
            .iter()
            .filter(|c| c.condition != NeCondition::Indifferent)
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Jacobian and per-component Hessians of `v` at a profile.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub jacobian: Matrix,
    pub hessians: Vec<Matrix>,
}

/// `v(sigma) = jacobian * sigma + offset` for games with affine effects.
#[derive(Clone, Debug)]
pub struct Affine {
    pub jacobian: Matrix,
    pub offset: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Game {
    partition: GroupPartition,
    effects: NetworkEffects,
    shift: Option<TauShift>,
    tol: Tolerances,
}

impl Game {
    pub fn new(partition: GroupPartition, effects: NetworkEffects) -> Result<Self> {
        let g = partition.len();
        let check = |what: &str, m: &Matrix| -> Result<()> {
            if m.rows() != g || m.cols() != g {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected: g,
                    found: if m.rows() != g { m.rows() } else { m.cols() },
                });
            }
            Ok(())
        };
        match &effects {
            NetworkEffects::Multilinear { alpha_a, alpha_b } => {
                check("alpha_a", alpha_a)?;
                check("alpha_b", alpha_b)?;
            }
            NetworkEffects::Adjacency { matrix } => {
                check("adjacency matrix", matrix)?;
                validate_adjacency(matrix)?;
            }
            NetworkEffects::SingleGroup(_) => {
                if g != 1 {
                    return Err(Error::Dimension {
                        what: "single-group partition".into(),
                        expected: 1,
                        found: g,
                    });
                }
            }
            NetworkEffects::Host(_) => {}
        }
        Ok(Game {
            partition,
            effects,
            shift: None,
            tol: Tolerances::default(),
        })
    }

    /// Multilinear game with `alpha^a = alpha^b = W / 2`.
    pub fn symmetric_multilinear(w: Matrix, masses: &[f64]) -> Result<Self> {
        let half = w.scaled(0.5);
        Game::new(
            GroupPartition::from_masses(masses)?,
            NetworkEffects::Multilinear {
                alpha_a: half.clone(),
                alpha_b: half,
            },
        )
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn effects(&self) -> &NetworkEffects {
        &self.effects
    }

    pub fn shift(&self) -> Option<&TauShift> {
        self.shift.as_ref()
    }

    pub fn groups(&self) -> usize {
        self.partition.len()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.partition.masses()
    }

    pub fn total_mass(&self) -> f64 {
        self.partition.total_mass()
    }

    /// Same effects and shift on a different partition of equal size.
    pub fn with_masses(&self, masses: &[f64]) -> Result<Self> {
        if masses.len() != self.groups() {
            return Err(Error::Dimension {
                what: "mass vector".into(),
                expected: self.groups(),
                found: masses.len(),
            });
        }
        let groups = self
            .partition
            .groups()
            .iter()
            .zip(masses)
            .map(|(g, &mass)| Group {
                name: g.name.clone(),
                mass,
            })
            .collect();
        let mut game = Game::new(GroupPartition::new(groups)?, self.effects.clone())?;
        game.shift = self.shift.clone();
        game.tol = self.tol;
        Ok(game)
    }

    /// Profile using this game's interiority tolerance.
    pub fn profile(&self, sigma: Vec<f64>) -> Result<ConsumptionProfile> {
        if sigma.len() != self.groups() {
            return Err(Error::Dimension {
                what: "consumption profile".into(),
                expected: self.groups(),
                found: sigma.len(),
            });
        }
        ConsumptionProfile::with_tolerance(sigma, self.tol.sigma)
    }

    /// The game shifted by `tau` and `epsilon`; shifts compose additively.
    pub fn apply_tau_shift(&self, tau: &[f64], epsilon: f64) -> Result<Game> {
        self.apply_shift(TauShift::new(tau.to_vec(), epsilon)?)
    }

    pub fn apply_shift(&self, shift: TauShift) -> Result<Game> {
        if shift.tau.len() != self.groups() {
            return Err(Error::Dimension {
                what: "shift tau".into(),
                expected: self.groups(),
                found: shift.tau.len(),
            });
        }
        let combined = match &self.shift {
            None => shift,
            Some(old) => TauShift {
                tau: old.tau.iter().zip(&shift.tau).map(|(a, b)| a + b).collect(),
                epsilon: old
                    .epsilon
                    .iter()
                    .zip(&shift.epsilon)
                    .map(|(a, b)| a + b)
                    .collect(),
            },
        };
        let mut game = self.clone();
        game.shift = Some(combined);
        Ok(game)
    }

    /// The unshifted game.
    pub fn base(&self) -> Game {
        let mut game = self.clone();
        game.shift = None;
        game
    }

    /// `v(sigma)` before any shift.
    pub fn base_v(&self, sigma: &[f64]) -> Vec<f64> {
        let m = self.masses();
        match &self.effects {
            NetworkEffects::Multilinear { .. } | NetworkEffects::Adjacency { .. } => {
                let aff = self.affine().expect("multilinear games are affine");
                let mut v = aff.jacobian.mul_vec(sigma);
                v.iter_mut().zip(&aff.offset).for_each(|(x, c)| *x += c);
                v
            }
            NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha, beta }) => {
                let m = m[0];
                vec![(2.0 * sigma[0] - 1.0) * (alpha * m - beta * m * m)]
            }
            NetworkEffects::SingleGroup(ScalarForm::Custom { v, .. }) => vec![v(sigma[0])],
            NetworkEffects::Host(h) => (h.v)(sigma),
        }
    }

    /// Additive shift contribution for each group given its share class.
    pub fn shift_terms(&self, classes: &[ShareClass]) -> Vec<f64> {
        match &self.shift {
            None => vec![0.0; classes.len()],
            Some(s) => classes
                .iter()
                .enumerate()
                .map(|(i, &c)| s.term(i, c))
                .collect(),
        }
    }

    /// `v(sigma)` including the shift, which depends on each group's class.
    pub fn eval_v(&self, profile: &ConsumptionProfile) -> Vec<f64> {
        let mut v = self.base_v(profile.sigma());
        if self.shift.is_some() {
            let terms = self.shift_terms(&profile.classes());
            v.iter_mut().zip(terms).for_each(|(x, t)| *x += t);
        }
        v
    }

    /// `v` at raw shares, classified with this game's tolerance.
    pub fn v(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval_v(&self.profile(sigma.to_vec())?))
    }

    /// Affine representation when it exists (multilinear, adjacency, Grilo).
    pub fn affine(&self) -> Option<Affine> {
        let m = self.masses();
        match &self.effects {
            NetworkEffects::Multilinear { .. } | NetworkEffects::Adjacency { .. } => {
                let (_, alpha_b) = self.effects.alphas()?;
                let w = self.effects.w()?;
                let jacobian = w.mul(&Matrix::diagonal(&m));
                let offset = alpha_b.mul_vec(&m).iter().map(|x| -x).collect();
                Some(Affine { jacobian, offset })
            }
            NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha, beta }) => {
                let c = alpha * m[0] - beta * m[0] * m[0];
                Some(Affine {
                    jacobian: Matrix::from_fn(1, 1, |_, _| 2.0 * c),
                    offset: vec![-c],
                })
            }
            _ => None,
        }
    }

    /// Jacobian and Hessians of `v` (the shift is locally constant and does not enter).
    pub fn eval_derivatives(&self, profile: &ConsumptionProfile) -> Result<Derivatives> {
        let g = self.groups();
        let sigma = profile.sigma();
        if let Some(aff) = self.affine() {
            return Ok(Derivatives {
                jacobian: aff.jacobian,
                hessians: vec![Matrix::zeros(g, g); g],
            });
        }
        match &self.effects {
            NetworkEffects::SingleGroup(ScalarForm::Custom { dv, d2v, .. }) => Ok(Derivatives {
                jacobian: Matrix::from_fn(1, 1, |_, _| dv(sigma[0])),
                hessians: vec![Matrix::from_fn(1, 1, |_, _| d2v(sigma[0]))],
            }),
            NetworkEffects::Host(h) => {
                let jacobian = match &h.jacobian {
                    Some(j) => j(sigma),
                    None => fd_jacobian(&*h.v, sigma, h.fd)?,
                };
                let hessians = match &h.hessians {
                    Some(hh) => hh(sigma),
                    None => fd_hessians(&*h.v, sigma, h.fd)?,
                };
                Ok(Derivatives { jacobian, hessians })
            }
            _ => unreachable!("affine variants handled above"),
        }
    }

    /// Second-stage Nash conditions of `sigma` at prices `p`.
    pub fn check_second_stage_ne(&self, p: PricePair, profile: &ConsumptionProfile) -> NeReport {
        let v = self.eval_v(profile);
        let dp = p.delta();
        let groups: Vec<GroupCondition> = profile
            .classes()
            .into_iter()
            .enumerate()
            .map(|(i, class)| {
                let (condition, slack) = match class {
                    ShareClass::Zero => (NeCondition::AllAtB, dp - v[i]),
                    ShareClass::One => (NeCondition::AllAtA, v[i] - dp),
                    ShareClass::Split => (NeCondition::Indifferent, -(v[i] - dp).abs()),
                };
                GroupCondition {
                    group: i,
                    condition,
                    v: v[i],
                    slack,
                }
            })
            .collect();
        let worst_slack = groups.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        NeReport {
            holds: worst_slack >= -self.tol.ne,
            groups,
            worst_slack,
        }
    }

    /// All second-stage equilibria at `p` for affine games, by case analysis
    /// over every assignment of groups to `{0, split, 1}`.
    pub fn enumerate_second_stage_ne(&self, p: PricePair) -> Result<NeEnumeration> {
        let g = self.groups();
        if g > MAX_EXHAUSTIVE_GROUPS {
            return Err(Error::TooManyGroups {
                groups: g,
                limit: MAX_EXHAUSTIVE_GROUPS,
            });
        }
        let aff = self.affine().ok_or(Error::NotAffine)?;
        let cases = 3usize.pow(g as u32);
        let results: Vec<CaseOutcome> = (0..cases)
            .into_par_iter()
            .map(|case| self.solve_ne_case(&aff, p, case))
            .collect();

        let mut profiles: Vec<(ConsumptionProfile, usize)> = Vec::new();
        let mut singular_cases = Vec::new();
        for (case, out) in results.into_iter().enumerate() {
            match out {
                CaseOutcome::Singular => singular_cases.push(case),
                CaseOutcome::Rejected => {}
                CaseOutcome::Found(profile) => {
                    let corners = g - profile.split_set().len();
                    let dup = profiles.iter_mut().find(|(q, _)| {
                        sup_distance(q.sigma(), profile.sigma()) < self.tol.dedup
                    });
                    match dup {
                        Some(slot) if corners > slot.1 => *slot = (profile, corners),
                        Some(_) => {}
                        None => profiles.push((profile, corners)),
                    }
                }
            }
        }
        Ok(NeEnumeration {
            profiles: profiles.into_iter().map(|(p, _)| p).collect(),
            singular_cases,
        })
    }

    fn solve_ne_case(&self, aff: &Affine, p: PricePair, case: usize) -> CaseOutcome {
        let g = self.groups();
        let classes = case_classes(case, g);
        let split: Vec<usize> = (0..g).filter(|&i| classes[i] == ShareClass::Split).collect();
        let fixed: Vec<usize> = (0..g).filter(|&i| classes[i] != ShareClass::Split).collect();
        let mut sigma: Vec<f64> = classes
            .iter()
            .map(|c| if *c == ShareClass::One { 1.0 } else { 0.0 })
            .collect();
        let terms = self.shift_terms(&classes);
        if !split.is_empty() {
            let block = aff.jacobian.principal(&split);
            let det = linalg::determinant(&block);
            if linalg::is_singular(&block, det, self.tol.det) {
                return CaseOutcome::Singular;
            }
            let rhs: Vec<f64> = split
                .iter()
                .map(|&i| {
                    let fixed_part: f64 = fixed.iter().map(|&j| aff.jacobian[(i, j)] * sigma[j]).sum();
                    p.delta() - aff.offset[i] - terms[i] - fixed_part
                })
                .collect();
            let Some(x) = linalg::solve(&block, &rhs) else {
                return CaseOutcome::Singular;
            };
            for (&i, &xi) in split.iter().zip(&x) {
                if !(xi > self.tol.sigma && xi < 1.0 - self.tol.sigma) {
                    return CaseOutcome::Rejected;
                }
                sigma[i] = xi;
            }
        }
        let Ok(profile) = self.profile(sigma) else {
            return CaseOutcome::Rejected;
        };
        if profile.classes() != classes || !self.check_second_stage_ne(p, &profile).holds {
            return CaseOutcome::Rejected;
        }
        CaseOutcome::Found(profile)
    }
}

enum CaseOutcome {
    Found(ConsumptionProfile),
    Singular,
    Rejected,
}

/// Result of [`Game::enumerate_second_stage_ne`].
#[derive(Clone, Debug)]
pub struct NeEnumeration {
    /// Equilibria in case-index order.
    pub profiles: Vec<ConsumptionProfile>,
    /// Cases skipped because the split block was singular.
    pub singular_cases: Vec<usize>,
}

/// Case `c` assigns group `i` the base-3 digit `(c / 3^i) % 3`: 0, split, 1.
pub fn case_classes(case: usize, g: usize) -> Vec<ShareClass> {
    let mut c = case;
    (0..g)
        .map(|_| {
            let d = c % 3;
            c /= 3;
            match d {
                0 => ShareClass::Zero,
                1 => ShareClass::Split,
                _ => ShareClass::One,
            }
        })
        .collect()
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn validate_adjacency(a: &Matrix) -> Result<()> {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let x = a[(i, j)];
            if x != 0.0 && x != 1.0 {
                return Err(Error::NonBinaryAdjacency(i, j, x));
            }
            if a[(j, i)] != x {
                return Err(Error::NonSymmetricAdjacency(i.min(j), i.max(j)));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

fn stencil(x: f64, reach: f64, coord: usize, fd: FdOptions) -> Result<Stencil> {
    if x - reach >= 0.0 && x + reach <= 1.0 {
        return Ok(Stencil::Central);
    }
    if !fd.one_sided_at_boundary {
        return Err(Error::Boundary(coord));
    }
    log::warn!("one-sided finite difference along coordinate {coord} at {x}");
    if x + 2.0 * reach <= 1.0 {
        Ok(Stencil::Forward)
    } else if x - 2.0 * reach >= 0.0 {
        Ok(Stencil::Backward)
    } else {
        Err(Error::Boundary(coord))
    }
}

/// Offsets and weights of a first-derivative stencil with step `h`.
fn first_weights(s: Stencil, h: f64) -> Vec<(f64, f64)> {
    match s {
        Stencil::Central => vec![(h, 0.5 / h), (-h, -0.5 / h)],
        Stencil::Forward => vec![(0.0, -1.5 / h), (h, 2.0 / h), (2.0 * h, -0.5 / h)],
        Stencil::Backward => vec![(0.0, 1.5 / h), (-h, -2.0 / h), (-2.0 * h, 0.5 / h)],
    }
}

fn second_weights(s: Stencil, h: f64) -> Vec<(f64, f64)> {
    let h2 = h * h;
    match s {
        Stencil::Central => vec![(-h, 1.0 / h2), (0.0, -2.0 / h2), (h, 1.0 / h2)],
        Stencil::Forward => vec![(0.0, 1.0 / h2), (h, -2.0 / h2), (2.0 * h, 1.0 / h2)],
        Stencil::Backward => vec![(0.0, 1.0 / h2), (-h, -2.0 / h2), (-2.0 * h, 1.0 / h2)],
    }
}

fn fd_jacobian(v: &VectorFn, x: &[f64], fd: FdOptions) -> Result<Matrix> {
    let g = x.len();
    let h = fd.jacobian_step;
    let mut jac = Matrix::zeros(g, g);
    for a in 0..g {
        let weights = first_weights(stencil(x[a], h, a, fd)?, h);
        for (off, w) in weights {
            let mut y = x.to_vec();
            y[a] += off;
            for (i, vi) in v(&y).into_iter().enumerate() {
                jac[(i, a)] += w * vi;
            }
        }
    }
    Ok(jac)
}

fn fd_hessians(v: &VectorFn, x: &[f64], fd: FdOptions) -> Result<Vec<Matrix>> {
    let g = x.len();
    let h = fd.hessian_step;
    let stencils: Vec<Stencil> = (0..g)
        .map(|a| stencil(x[a], h, a, fd))
        .collect::<Result<_>>()?;
    let mut hess = vec![Matrix::zeros(g, g); g];
    for a in 0..g {
        for b in a..g {
            let mut acc = vec![0.0; g];
            if a == b {
                for (off, w) in second_weights(stencils[a], h) {
                    let mut y = x.to_vec();
                    y[a] += off;
                    v(&y).iter().zip(acc.iter_mut()).for_each(|(vi, s)| *s += w * vi);
                }
            } else {
                for (oa, wa) in first_weights(stencils[a], h) {
                    for (ob, wb) in first_weights(stencils[b], h) {
                        let mut y = x.to_vec();
                        y[a] += oa;
                        y[b] += ob;
                        v(&y)
                            .iter()
                            .zip(acc.iter_mut())
                            .for_each(|(vi, s)| *s += wa * wb * vi);
                    }
                }
            }
            for (i, val) in acc.into_iter().enumerate() {
                hess[i][(a, b)] = val;
                hess[i][(b, a)] = val;
            }
        }
    }
    Ok(hess)
}
