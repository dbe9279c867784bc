//! First- and second-order demand response on a split.
//!
//! On the set `S` of splitting groups the unique continuous selection obeys
//! `J dq/dp_a = 1`, so `k = J^{-1} 1` and `K_S = sum_{i in S} m_i k_i` is the
//! slope of firm `a`'s demand. Differentiating once more gives
//! `J d2q/dp_a^2 = -(k^T H_i k)_i`; `r` is that solution and
//! `R_S = sum_{i in S} m_i r_i` is the curvature of firm `a`'s demand. Firm `b`
//! sees the same slope and the opposite curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{ConsumptionProfile, Game};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitCalculus {
    pub split: Vec<usize>,
    pub jacobian: Matrix,
    pub hessians: Vec<Matrix>,
    pub det: f64,
    pub k: Vec<f64>,
    pub r: Vec<f64>,
    pub k_s: f64,
    pub r_s: f64,
    /// `S` was supplied by the caller rather than read off the profile.
    pub forced: bool,
}

/// `J_v(sigma; S)` and `H_{v_i}(sigma; S)` for each `i in S`.
pub fn restricted_derivatives(
    game: &Game,
    profile: &ConsumptionProfile,
    split: &[usize],
) -> Result<(Matrix, Vec<Matrix>)> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    if let Some(&bad) = split.iter().find(|&&i| i >= game.groups()) {
        return Err(Error::Invalid(format!("group index {bad} out of range")));
    }
    let d = game.eval_derivatives(profile)?;
    let jac = d.jacobian.principal(split);
    let hess = split.iter().map(|&i| d.hessians[i].principal(split)).collect();
    Ok((jac, hess))
}

/// Cofactor-weighted reaction vectors `(k, r)` and `det J`.
pub fn reaction_vectors(
    jacobian: &Matrix,
    hessians: &[Matrix],
    split: &[usize],
    tol_det: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let l = jacobian.rows();
    let det = linalg::determinant(jacobian);
    if linalg::is_singular(jacobian, det, tol_det) {
        return Err(Error::SingularSplit(split.to_vec()));
    }
    let cof = linalg::cofactor_matrix(jacobian);
    // k_i = sum_i' C_i'i / det
    let k: Vec<f64> = (0..l)
        .map(|i| (0..l).map(|ip| cof[(ip, i)]).sum::<f64>() / det)
        .collect();
    let quad: Vec<f64> = hessians.iter().map(|h| h.quadratic_form(&k)).collect();
    let r: Vec<f64> = (0..l)
        .map(|i| -(0..l).map(|ip| quad[ip] * cof[(ip, i)]).sum::<f64>() / det)
        .collect();
    Ok((k, r, det))
}

/// `(K_S, R_S)` from the reaction vectors and the masses of the groups in `S`.
pub fn aggregate_response(k: &[f64], r: &[f64], masses: &[f64]) -> (f64, f64) {
    let dot = |x: &[f64]| x.iter().zip(masses).map(|(a, b)| a * b).sum::<f64>();
    (dot(k), dot(r))
}

/// Split calculus on the profile's own split set.
pub fn split_calculus(game: &Game, profile: &ConsumptionProfile) -> Result<SplitCalculus> {
    let split = profile.split_set();
    if split.is_empty() {
        return Err(Error::NotASplit);
    }
    calculus_on(game, profile, &split, false)
}

/// Split calculus on a caller-chosen `S`; the result is flagged as forced
/// unless `S` coincides with the profile's split set.
pub fn split_calculus_forced(
    game: &Game,
    profile: &ConsumptionProfile,
    split: &[usize],
) -> Result<SplitCalculus> {
    let forced = profile.split_set() != split;
    calculus_on(game, profile, split, forced)
}

fn calculus_on(
    game: &Game,
    profile: &ConsumptionProfile,
    split: &[usize],
    forced: bool,
) -> Result<SplitCalculus> {
    let (jacobian, hessians) = restricted_derivatives(game, profile, split)?;
    let (k, r, det) = reaction_vectors(&jacobian, &hessians, split, game.tolerances().det)?;
    let all = game.masses();
    let masses: Vec<f64> = split.iter().map(|&i| all[i]).collect();
    let (k_s, r_s) = aggregate_response(&k, &r, &masses);
    Ok(SplitCalculus {
        split: split.to_vec(),
        jacobian,
        hessians,
        det,
        k,
        r,
        k_s,
        r_s,
        forced,
    })
}

/// `K_S` of an affine game for any `S` (the profile does not matter).
pub fn affine_k(game: &Game, split: &[usize]) -> Result<f64> {
    affine_reaction(game, split).map(|(_, k_s)| k_s)
}

/// `(k, K_S)` of an affine game on `S`.
pub fn affine_reaction(game: &Game, split: &[usize]) -> Result<(Vec<f64>, f64)> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let aff = game.affine().ok_or(Error::NotAffine)?;
    let jac = aff.jacobian.principal(split);
    let hess = vec![Matrix::zeros(split.len(), split.len()); split.len()];
    let (k, _, _) = reaction_vectors(&jac, &hess, split, game.tolerances().det)?;
    let all = game.masses();
    let k_s = split.iter().zip(&k).map(|(&i, ki)| all[i] * ki).sum();
    Ok((k, k_s))
}
