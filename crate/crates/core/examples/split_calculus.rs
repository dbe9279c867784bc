//! Reaction vectors and aggregate slopes for a two-group multilinear game.
//!
//! `cargo run --example split_calculus`

use netsplit::{split_calculus, Game, Matrix};

fn main() -> netsplit::Result<()> {
    let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0]]).expect("square");
    for masses in [[1.0, 1.0], [0.4, 2.5]] {
        let game = Game::symmetric_multilinear(w.clone(), &masses)?;
        let total = split_calculus(&game, &game.profile(vec![0.5, 0.5])?)?;
        println!("m = {masses:?}");
        println!("  total split: k = {:?}, K = {:.6}", total.k, total.k_s);
        for (i, sigma) in [vec![0.5, 0.0], vec![1.0, 0.5]].into_iter().enumerate() {
            let single = split_calculus(&game, &game.profile(sigma)?)?;
            println!("  only group {} splits: K = {:.6}", i + 1, single.k_s);
        }
    }
    Ok(())
}
