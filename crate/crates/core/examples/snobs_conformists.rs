//! Snobs and conformists: the total split needs conformists to tell the two
//! groups apart.

use netsplit::{equilibrium_prices, find_local_spe, split_calculus, ConsistencyMode, Game, Matrix};

fn main() -> netsplit::Result<()> {
    let (lambda_l, lambda_c, beta) = (1.0, 1.0, 0.4);
    for delta in [0.0, 0.5] {
        let w = Matrix::from_rows(&[vec![-lambda_l, -lambda_l], vec![lambda_c + delta, lambda_c]]).unwrap();
        let game = Game::symmetric_multilinear(w, &[beta, 1.0 - beta])?;
        println!("delta = {delta}");
        match split_calculus(&game, &game.profile(vec![0.5, 0.5])?) {
            Ok(c) => println!("  total split K = {:.6}", c.k_s),
            Err(e) => println!("  total split: {e}"),
        }
        for sigma in [vec![0.3, 1.0], vec![0.3, 0.0], vec![0.3, 0.6]] {
            let profile = game.profile(sigma.clone())?;
            if let Ok(p) = equilibrium_prices(&game, &profile) {
                println!("  psi({sigma:?}) = ({:.6}, {:.6})", p.p_a, p.p_b);
            }
        }
        let search = find_local_spe(&game, ConsistencyMode::FocConsistent)?;
        println!("  {} certificates, {} near misses", search.certificates.len(), search.near_misses.len());
    }
    Ok(())
}
