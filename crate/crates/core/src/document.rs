//! JSON game-spec documents.
//!
//! ```json
//! {
//!   "groups": [{"name": "G1", "mass": 1.0}, {"name": "G2", "mass": 1.0}],
//!   "effects": {"kind": "multilinear",
//!               "alpha_a": [[0.5, 1.0], [1.5, 2.5]],
//!               "alpha_b": [[0.5, 1.0], [1.5, 2.5]]},
//!   "shift": {"tau": [0.0, 0.0], "epsilon": 0.1}
//! }
//! ```
//!
//! `effects` may also be `{"kind": "adjacency", "matrix": [[0|1, ...], ...]}` or
//! `{"kind": "single_group", "form": "grilo", "alpha": a, "beta": b}`. The
//! `shift` object is optional and `epsilon` may be a number or a per-group array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Game, Group, GroupPartition, NetworkEffects, ScalarForm, TauShift};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub groups: Vec<Group>,
    pub effects: EffectsDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectsDocument {
    Multilinear {
        alpha_a: Vec<Vec<f64>>,
        alpha_b: Vec<Vec<f64>>,
    },
    Adjacency {
        matrix: Vec<Vec<f64>>,
    },
    SingleGroup {
        form: String,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftDocument {
    pub tau: Vec<f64>,
    pub epsilon: Epsilon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Epsilon {
    Uniform(f64),
    PerGroup(Vec<f64>),
}

fn square(what: &str, rows: &[Vec<f64>], g: usize) -> Result<Matrix> {
    if rows.len() != g {
        return Err(Error::Dimension {
            what: what.into(),
            expected: g,
            found: rows.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != g) {
        return Err(Error::Dimension {
            what: format!("{what} row"),
            expected: g,
            found: r.len(),
        });
    }
    Ok(Matrix::from_rows(rows).expect("rows checked"))
}

impl GameDocument {
    pub fn into_game(self) -> Result<Game> {
        let partition = GroupPartition::new(self.groups)?;
        let g = partition.len();
        let effects = match self.effects {
            EffectsDocument::Multilinear { alpha_a, alpha_b } => NetworkEffects::Multilinear {
                alpha_a: square("alpha_a", &alpha_a, g)?,
                alpha_b: square("alpha_b", &alpha_b, g)?,
            },
            EffectsDocument::Adjacency { matrix } => NetworkEffects::Adjacency {
                matrix: square("adjacency matrix", &matrix, g)?,
            },
            EffectsDocument::SingleGroup { form, alpha, beta } => {
                if form != "grilo" {
                    return Err(Error::Invalid(format!("unknown single-group form `{form}`")));
                }
                NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha, beta })
            }
        };
        let game = Game::new(partition, effects)?;
        match self.shift {
            None => Ok(game),
            Some(s) => {
                let eps = match s.epsilon {
                    Epsilon::Uniform(e) => vec![e; s.tau.len()],
                    Epsilon::PerGroup(v) => v,
                };
                game.apply_shift(TauShift::per_group(s.tau, eps)?)
            }
        }
    }

    /// Document for a game, when its effects are expressible in the schema.
    pub fn from_game(game: &Game) -> Option<GameDocument> {
        let effects = match game.effects() {
            NetworkEffects::Multilinear { alpha_a, alpha_b } => EffectsDocument::Multilinear {
                alpha_a: alpha_a.to_rows(),
                alpha_b: alpha_b.to_rows(),
            },
            NetworkEffects::Adjacency { matrix } => EffectsDocument::Adjacency {
                matrix: matrix.to_rows(),
            },
            NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha, beta }) => {
                EffectsDocument::SingleGroup {
                    form: "grilo".into(),
                    alpha: *alpha,
                    beta: *beta,
                }
            }
            _ => return None,
        };
        Some(GameDocument {
            description: None,
            groups: game.partition().groups().to_vec(),
            effects,
            shift: game.shift().map(|s| ShiftDocument {
                tau: s.tau.clone(),
                epsilon: Epsilon::PerGroup(s.epsilon.clone()),
            }),
        })
    }
}

/// Parses and validates a game-spec document.
pub fn load_game(document: &str) -> Result<Game> {
    let doc: GameDocument = serde_json::from_str(document)?;
    doc.into_game()
}
