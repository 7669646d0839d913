//! Dirac to Dirac geodesics on longer and longer chains concentrate at the
//! midpoint, as transport on the interval would.

use graphot::validate::chain_middle_mass;
use graphot::SolverConfig;

fn main() -> graphot::Result<()> {
    let cfg = SolverConfig::default();
    for m in [2, 4, 8, 16] {
        println!("chain({m:>2}): mass in the middle fifth at t = 1/2 is {:.4}", chain_middle_mass(m, &cfg)?);
    }
    Ok(())
}
