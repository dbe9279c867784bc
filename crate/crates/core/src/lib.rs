//! Two-sided platform competition with network effects between consumer groups.
//!
//! A [`Game`] fixes groups, their masses and the effect map `v`. Given prices,
//! consumers settle into a second-stage equilibrium `sigma`; firms anticipate
//! the induced demand. The crate computes split calculus (demand slope and
//! curvature on the set of splitting groups), certifies local subgame-perfect
//! outcomes with positive profits, verifies them numerically along the
//! selection path and searches small graphs for such outcomes.
// `!(x < 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod document;
pub mod equilibrium;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod model;
pub mod report;
pub mod verifier;

pub use calculus::{split_calculus, split_calculus_forced, SplitCalculus};
pub use document::{load_game, GameDocument};
pub use equilibrium::{
    certify, equilibrium_prices, find_local_spe, is_realizable, is_stable_split, tau_for_split,
    ConsistencyMode, EquilibriumCertificate, SpeSearch,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{
    ConsumptionProfile, Game, GroupPartition, HostFunction, NetworkEffects, PricePair, ScalarForm,
    TauShift, Tolerances,
};
pub use verifier::{
    trace_local_selection, verify_local_spe, Firm, Outcome, Radius, SelectionPath, Verification,
};
