//! Refine-and-smooth against a Gaussian baseline at the same resolution.

use gecko::engine::{refine_and_smooth, GeckoConfig, StepMode};
use gecko::experiment::gaussian_pipeline;
use gecko::pulse::{fidelity, refine_pulse, GateTarget, HamiltonianSpec};
use gecko::quality::q_smooth;
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let rc = RestoreConfig::default();
    let pulse = restore(&spec, &random_pulse(&spec, 4, 1.0, 3.0, 1)?, &target, &rc)?;
    println!("L = 4 solution: {:.4?}", pulse.channel(0));
    println!("refined roughness: {:.4}", q_smooth(&refine_pulse(&pulse, 64)?));

    let cfg = GeckoConfig { step_size: 0.05, mode: StepMode::DirectSolve, ..Default::default() };
    let smooth = refine_and_smooth(&spec, &pulse, &target, 6, &cfg, &rc)?;
    println!(
        "gecko:    L = {}, roughness {:.4}, F = {:.10}",
        smooth.pulse.n_segments(),
        q_smooth(&smooth.pulse),
        fidelity(&spec, &smooth.pulse, &target)?
    );

    let gauss = gaussian_pipeline(&spec, &pulse, &target, 64, 8.0, 16, &rc)?;
    println!(
        "gaussian: L = {}, roughness {:.4}, F = {:.10}",
        gauss.n_segments(),
        q_smooth(&gauss),
        fidelity(&spec, &gauss, &target)?
    );
    Ok(())
}
