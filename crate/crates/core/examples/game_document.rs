//! Games as JSON documents: parse one, solve it, print the JSON report.

use netsplit::report::{SolveReport, VerifySettings};
use netsplit::{load_game, ConsistencyMode};

const DOC: &str = r#"{
  "description": "two sides, the second attracted to its own members",
  "groups": [{"name": "buyers", "mass": 1.0}, {"name": "sellers", "mass": 0.5}],
  "effects": {"kind": "multilinear",
              "alpha_a": [[0.0, 0.5], [1.0, 2.0]],
              "alpha_b": [[0.0, 0.5], [1.0, 2.0]]}
}"#;

fn main() -> netsplit::Result<()> {
    let game = load_game(DOC)?;
    let report = SolveReport::build(&game, None, ConsistencyMode::FocConsistent, VerifySettings::default())?;
    println!("{}", report.render());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
