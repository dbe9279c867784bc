//! Independent oracles and generators shared by the integration suites.
//!
//! Nothing here calls into the library's linear algebra: determinants are
//! Laplace expansions and linear solves go through Cramer's rule.
#![allow(dead_code)]

use netsplit::{
    ConsumptionProfile, Game, GroupPartition, HostFunction, Matrix, NetworkEffects, ScalarForm,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn masses(rng: &mut ChaCha8Rng, g: usize) -> Vec<f64> {
    (0..g).map(|_| rng.gen_range(0.5..2.0)).collect()
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, g: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..g)
        .map(|_| (0..g).map(|_| rng.gen_range(lo..hi)).collect())
        .collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_rows(rows).expect("rectangular rows")
}

/// Determinant by cofactor expansion along the first row.
pub fn laplace_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * laplace_det(&minor)
            })
            .sum(),
    }
}

/// Solves `a x = b` by Cramer's rule; `None` when `det a` vanishes.
pub fn cramer(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let d = laplace_det(a);
    if d == 0.0 {
        return None;
    }
    Some(
        (0..a.len())
            .map(|j| {
                let replaced: Vec<Vec<f64>> = a
                    .iter()
                    .zip(b)
                    .map(|(row, &bi)| {
                        let mut r = row.clone();
                        r[j] = bi;
                        r
                    })
                    .collect();
                laplace_det(&replaced) / d
            })
            .collect(),
    )
}

/// `k` with `J_S k = 1` for `J = W diag(m)` restricted to `split`.
pub fn k_oracle(w: &[Vec<f64>], masses: &[f64], split: &[usize]) -> Option<Vec<f64>> {
    let j: Vec<Vec<f64>> = split
        .iter()
        .map(|&r| split.iter().map(|&c| w[r][c] * masses[c]).collect())
        .collect();
    cramer(&j, &vec![1.0; split.len()])
}

/// `K_S = sum m_i k_i` from [`k_oracle`].
pub fn big_k_oracle(w: &[Vec<f64>], masses: &[f64], split: &[usize]) -> Option<f64> {
    let k = k_oracle(w, masses, split)?;
    Some(split.iter().zip(&k).map(|(&i, ki)| masses[i] * ki).sum())
}

/// `(p_a, p_b) = (m.sigma, m.(1 - sigma)) / (-K)`.
pub fn price_oracle(k: f64, sigma: &[f64], masses: &[f64]) -> (f64, f64) {
    let da: f64 = sigma.iter().zip(masses).map(|(s, m)| s * m).sum();
    let db: f64 = sigma.iter().zip(masses).map(|(s, m)| (1.0 - s) * m).sum();
    (da / -k, db / -k)
}

pub fn multilinear(alpha_a: &[Vec<f64>], alpha_b: &[Vec<f64>], masses: &[f64]) -> Game {
    Game::new(
        GroupPartition::from_masses(masses).unwrap(),
        NetworkEffects::Multilinear {
            alpha_a: matrix(alpha_a),
            alpha_b: matrix(alpha_b),
        },
    )
    .unwrap()
}

pub fn symmetric(w: &[Vec<f64>], masses: &[f64]) -> Game {
    Game::symmetric_multilinear(matrix(w), masses).unwrap()
}

/// Multilinear game with independent firm weights uniform in `[-3, 3]`.
pub fn random_multilinear(rng: &mut ChaCha8Rng, g: usize) -> Game {
    let a = uniform_matrix(rng, g, -3.0, 3.0);
    let b = uniform_matrix(rng, g, -3.0, 3.0);
    let m = masses(rng, g);
    multilinear(&a, &b, &m)
}

/// `v_i = d_i + sum_j b_ij sigma_j + c_ij sigma_j^2` with analytic derivatives.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

impl Quadratic {
    pub fn random(rng: &mut ChaCha8Rng, g: usize) -> Self {
        Quadratic {
            b: uniform_matrix(rng, g, -3.0, 3.0),
            c: uniform_matrix(rng, g, -2.0, 2.0),
            d: (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn v(&self, s: &[f64]) -> Vec<f64> {
        (0..self.d.len())
            .map(|i| {
                self.d[i]
                    + (0..s.len())
                        .map(|j| self.b[i][j] * s[j] + self.c[i][j] * s[j] * s[j])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn game(&self, masses: &[f64]) -> Game {
        let (q1, q2, q3) = (self.clone(), self.clone(), self.clone());
        let g = self.d.len();
        let host = HostFunction::new(move |s| q1.v(s))
            .with_jacobian(move |s| {
                Matrix::from_fn(g, g, |i, j| q2.b[i][j] + 2.0 * q2.c[i][j] * s[j])
            })
            .with_hessians(move |_| {
                (0..g)
                    .map(|i| Matrix::from_fn(g, g, |r, c| if r == c { 2.0 * q3.c[i][r] } else { 0.0 }))
                    .collect()
            });
        Game::new(
            GroupPartition::from_masses(masses).unwrap(),
            NetworkEffects::Host(host),
        )
        .unwrap()
    }
}

/// Single group with `v = v0 + v1 s + v2 s^2 + v3 s^3`.
pub fn cubic(coef: [f64; 4], mass: f64) -> Game {
    let [c0, c1, c2, c3] = coef;
    let form = ScalarForm::custom(
        move |s| c0 + c1 * s + c2 * s * s + c3 * s * s * s,
        move |s| c1 + 2.0 * c2 * s + 3.0 * c3 * s * s,
        move |s| 2.0 * c2 + 6.0 * c3 * s,
    );
    Game::new(
        GroupPartition::from_masses(&[mass]).unwrap(),
        NetworkEffects::SingleGroup(form),
    )
    .unwrap()
}

/// Profile with `sigma_i` drawn in `(0.15, 0.85)` on `split` and `corner_bits`
/// deciding the rest (bit set means firm `a`).
pub fn random_profile(
    rng: &mut ChaCha8Rng,
    g: usize,
    split_mask: usize,
    corner_bits: usize,
) -> ConsumptionProfile {
    let sigma = (0..g)
        .map(|i| {
            if split_mask >> i & 1 == 1 {
                rng.gen_range(0.15..0.85)
            } else if corner_bits >> i & 1 == 1 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    ConsumptionProfile::new(sigma).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

/// Loopy graph on five nodes with a realizable total split.
pub const FIGURE1: [[u8; 5]; 5] = [
    [0, 0, 1, 0, 0],
    [0, 1, 0, 0, 1],
    [1, 0, 1, 0, 1],
    [0, 0, 0, 1, 1],
    [0, 1, 1, 1, 1],
];
