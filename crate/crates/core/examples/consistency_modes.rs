//! The two conventions for the price difference of a split, side by side.

use netsplit::cli::corpus_document;
use netsplit::report::{SolveReport, VerifySettings};
use netsplit::{load_game, ConsistencyMode};

fn main() -> netsplit::Result<()> {
    let game = load_game(corpus_document("tolotti").unwrap())?;
    for mode in [ConsistencyMode::FocConsistent, ConsistencyMode::AsPrinted] {
        let report = SolveReport::build(&game, Some("tolotti".into()), mode, VerifySettings::default())?;
        println!("--- {} ---\n{}", mode.label(), report.render());
    }
    Ok(())
}
