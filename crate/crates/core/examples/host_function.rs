//! A library-supplied scalar specification and a search started from user
//! guesses on a game without an affine form.

use netsplit::equilibrium::{find_local_spe_from, StartingPoint};
use netsplit::model::classify_profile;
use netsplit::{
    split_calculus, verify_local_spe, ConsistencyMode, Game, GroupPartition, HostFunction,
    NetworkEffects, Outcome, Radius, ScalarForm,
};

fn main() -> netsplit::Result<()> {
    // One group with v = -s - s^3: K = m / v', R = -m v'' / v'^3.
    let form = ScalarForm::custom(|s| -s - s.powi(3), |s| -1.0 - 3.0 * s * s, |s| -6.0 * s);
    let cubic = Game::new(GroupPartition::from_masses(&[1.0])?, NetworkEffects::SingleGroup(form))?;
    let calc = split_calculus(&cubic, &cubic.profile(vec![0.5])?)?;
    println!("cubic at 1/2: K = {:.6}, R = {:.6}", calc.k_s, calc.r_s);

    // Two groups, derivatives by finite differences.
    let host = HostFunction::new(|s| {
        vec![-1.5 * s[0] + 0.4 * s[1].powi(2) + 0.35, 0.5 * s[0] - 2.0 * s[1] + 0.6]
    });
    let game = Game::new(GroupPartition::from_masses(&[1.0, 1.0])?, NetworkEffects::Host(host))?;
    let guess = game.profile(vec![0.5, 0.5])?;
    let start = StartingPoint {
        classification: classify_profile(&guess),
        sigma: guess.sigma().to_vec(),
    };
    let search = find_local_spe_from(&game, &[start], ConsistencyMode::FocConsistent)?;
    for cert in &search.certificates {
        let v = verify_local_spe(&game, &Outcome::from(cert), Radius::Auto, 41)?;
        println!(
            "sigma = {:.6?}, p* = ({:.6}, {:.6}), verified {}",
            cert.sigma, cert.prices.p_a, cert.prices.p_b, v.verified
        );
    }
    for miss in &search.near_misses {
        println!("near miss on S = {:?}: {:?}", miss.split, miss.failures);
    }
    Ok(())
}
