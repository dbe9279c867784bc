//! Moving a realizable split of a nonlinear game into an equilibrium by
//! shifting each group's utility difference.

use netsplit::{
    certify, is_realizable, tau_for_split, ConsistencyMode, Game, GroupPartition, HostFunction,
    Matrix, NetworkEffects,
};

fn main() -> netsplit::Result<()> {
    // v_1 = 2 s_1 - 3 s_2 + s_1^2,  v_2 = -s_1 - s_2^2
    let host = HostFunction::new(|s| vec![2.0 * s[0] - 3.0 * s[1] + s[0] * s[0], -s[0] - s[1] * s[1]])
        .with_jacobian(|s| {
            Matrix::from_rows(&[vec![2.0 + 2.0 * s[0], -3.0], vec![-1.0, -2.0 * s[1]]]).unwrap()
        });
    let game = Game::new(GroupPartition::from_masses(&[1.0, 1.0])?, NetworkEffects::Host(host))?;
    let profile = game.profile(vec![0.6, 0.3])?;

    let rep = is_realizable(&game, &profile)?;
    println!("K_S = {:.6}, R_S = {:.6}, realizable: {}", rep.k_s, rep.r_s, rep.realizable);

    let before = certify(&game, &profile, ConsistencyMode::FocConsistent)?;
    println!("unshifted: second-stage NE holds: {}", before.ne_holds);

    let shift = tau_for_split(&game, &profile, 0.1, ConsistencyMode::FocConsistent)?;
    println!("tau = {:?}", shift.tau);
    let shifted = game.apply_shift(shift)?;
    let after = certify(&shifted, &profile, ConsistencyMode::FocConsistent)?;
    println!(
        "shifted: p* = ({:.6}, {:.6}), NE {}, SPE+ {}, K_S unchanged: {}",
        after.prices.p_a,
        after.prices.p_b,
        after.ne_holds,
        after.spe_plus,
        after.k_s == before.k_s
    );
    Ok(())
}
