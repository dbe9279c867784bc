//! Cross-side effects alone never give a realizable split; intra-group
//! influence or a third side does.

use netsplit::{find_local_spe, split_calculus, ConsistencyMode, Game, Matrix};

fn report(label: &str, rows: &[Vec<f64>]) -> netsplit::Result<()> {
    let g = rows.len();
    let game = Game::symmetric_multilinear(Matrix::from_rows(rows).unwrap(), &vec![1.0; g])?;
    let k = split_calculus(&game, &game.profile(vec![0.5; g])?)?.k_s;
    let search = find_local_spe(&game, ConsistencyMode::FocConsistent)?;
    println!("{label}: K_G = {k:.6}, {} certificates", search.certificates.len());
    for c in &search.certificates {
        println!("  sigma = {:?}, p* = ({:.6}, {:.6})", c.sigma, c.prices.p_a, c.prices.p_b);
    }
    for m in search.near_misses.iter().take(3) {
        println!("  near miss S = {:?}: {:?}", m.split, m.failures);
    }
    Ok(())
}

fn main() -> netsplit::Result<()> {
    let (w12, w21, delta) = (1.0, 2.0, 1.0);
    report("cross-side only", &[vec![0.0, w12], vec![w21, 0.0]])?;
    report("intra-group on side 2", &[vec![0.0, w12], vec![w21, w12 + w21 + delta]])?;
    let (r, z, eps) = (1.0, 1.0, 0.1);
    report(
        "three sides",
        &[
            vec![0.0, 2.0 * r, r],
            vec![z, 0.0, r * z / (4.0 * r + z) - eps],
            vec![z / 2.0, 0.0, 0.0],
        ],
    )
}
