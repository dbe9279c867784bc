//! Imagined demand along the continuous selection through a split, written as CSV.
//!
//! `cargo run --example trace_selection > path.csv`

use netsplit::verifier::demand_derivatives_fd;
use netsplit::{
    find_local_spe, trace_local_selection, ConsistencyMode, Firm, Game, GroupPartition,
    NetworkEffects, Outcome, Radius, ScalarForm,
};

fn main() -> netsplit::Result<()> {
    let game = Game::new(
        GroupPartition::from_masses(&[2.0])?,
        NetworkEffects::SingleGroup(ScalarForm::Grilo { alpha: 1.0, beta: 1.0 }),
    )?;
    let search = find_local_spe(&game, ConsistencyMode::FocConsistent)?;
    let outcome = Outcome::from(&search.certificates[0]);
    let path = trace_local_selection(&game, &outcome, Firm::B, Radius::Relative(0.1), 21)?;
    let (d1, d2) = demand_derivatives_fd(&path)?;
    eprintln!("firm b at p* = {:?}: D' = {d1:.6}, D'' = {d2:.2e}", outcome.prices);
    print!("{}", path.to_csv());
    Ok(())
}
