//! The five-node loopy graph with a realizable total split: calculus,
//! certificate and the numerical check of both firms' deviations.
//!
//! `cargo run --example network_figure1`

use netsplit::graphs::{adjacency_game, make_structure, Structure};
use netsplit::{find_local_spe, split_calculus, verify_local_spe, ConsistencyMode, Outcome, Radius};

fn main() -> netsplit::Result<()> {
    let graph = make_structure(&Structure::Figure1)?;
    let masses = [1.0, 2.0, 0.5, 1.5, 1.0];
    let game = adjacency_game(&graph, &masses)?;

    let calc = split_calculus(&game, &game.profile(vec![0.5; 5])?)?;
    let scaled: Vec<f64> = calc.k.iter().zip(&masses).map(|(k, m)| k * m).collect();
    println!("K_G = {:.6}, m_i k_i = {scaled:.3?}", calc.k_s);

    let search = find_local_spe(&game, ConsistencyMode::FocConsistent)?;
    println!("{} of {} cases certify", search.certificates.len(), search.examined);
    for cert in &search.certificates {
        println!("sigma = {:?}, p* = ({}, {})", cert.sigma, cert.prices.p_a, cert.prices.p_b);
        let v = verify_local_spe(&game, &Outcome::from(cert), Radius::Relative(0.1), 41)?;
        for f in &v.firms {
            println!(
                "  firm {}: D' = {:.6}, D'' = {:.1e}, worst margin {:.3e}",
                f.firm.label(),
                f.d1,
                f.d2,
                f.worst_margin
            );
        }
        println!("  verified: {}", v.verified);
    }
    Ok(())
}
