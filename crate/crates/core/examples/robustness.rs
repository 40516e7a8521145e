//! Worst-case fidelity over a grid of amplitude offsets, before and after.

use gecko::engine::{gecko_run, GeckoConfig, RestoreSchedule};
use gecko::experiment::robust_sweep;
use gecko::pulse::{GateTarget, HamiltonianSpec};
use gecko::quality::{worst_case, QualitySpec, RobustSpec};
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let rc = RestoreConfig::default();
    let pulse = restore(&spec, &random_pulse(&spec, 20, 1.0, 1.0, 1)?, &target, &rc)?;
    let rs = RobustSpec::new(vec![0], 0.05, 5)?;
    let cfg = GeckoConfig { step_size: 0.05, max_iters: 60, restore: RestoreSchedule::Every(20), ..Default::default() };
    let trace = gecko_run(&spec, &pulse, &target, &QualitySpec::Robust(rs.clone()), &cfg, &rc)?;

    println!("worst grid F: {:.6} -> {:.6}", worst_case(&spec, &pulse, &target, &rs)?.0, worst_case(&spec, &trace.pulse, &target, &rs)?.0);
    let before = robust_sweep(&spec, &pulse, &target, &[0], 0.1, 9)?;
    let after = robust_sweep(&spec, &trace.pulse, &target, &[0], 0.1, 9)?;
    println!("  offset      before       after");
    for ((d, f0), (_, f1)) in before.iter().zip(&after) {
        println!("  {d:+.3}   {f0:.8}   {f1:.8}");
    }
    Ok(())
}
