//! Random start to a CZ solution on the single-control Ising model.

use gecko::pulse::{fidelity, HamiltonianSpec, GateTarget};
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let cfg = RestoreConfig::default();
    for seed in 0..5 {
        let start = random_pulse(&spec, 4, 1.0, 3.0, seed)?;
        let pulse = restore(&spec, &start, &target, &cfg)?;
        let f = fidelity(&spec, &pulse, &target)?;
        println!("seed {seed}: 1 - F = {:.2e}, h1 = {:.4?}", 1.0 - f, pulse.channel(0));
    }
    Ok(())
}
