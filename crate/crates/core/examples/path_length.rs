//! Path-length minimization with a free segment duration.

use gecko::engine::{gecko_run, GeckoConfig};
use gecko::pulse::{GateTarget, HamiltonianSpec};
use gecko::quality::{q_path, QualitySpec};
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let rc = RestoreConfig::default();
    let cfg = GeckoConfig { step_size: 0.01, max_iters: 5000, ..Default::default() };
    for seed in 0..5 {
        let pulse = restore(&spec, &random_pulse(&spec, 20, 1.0, 0.3, seed)?, &target, &rc)?.with_optimize_dt(true);
        let trace = gecko_run(&spec, &pulse, &target, &QualitySpec::Path, &cfg, &rc)?;
        println!(
            "seed {seed}: Q_path {:.4} -> {:.4}, T = {:.4}, max |h1| = {:.3}",
            q_path(&spec, &pulse)?,
            q_path(&spec, &trace.pulse)?,
            trace.pulse.duration(),
            trace.pulse.max_abs_amplitude()
        );
    }
    println!("lower bound pi/4 = {:.4}", std::f64::consts::FRAC_PI_4);
    Ok(())
}
