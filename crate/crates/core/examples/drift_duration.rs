//! Duration minimization with unbounded controls, started from a
//! path-length-optimized pulse.

use gecko::engine::{gecko_run, GeckoConfig};
use gecko::pulse::{GateTarget, HamiltonianSpec};
use gecko::quality::QualitySpec;
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let rc = RestoreConfig::default();
    let cfg = GeckoConfig { step_size: 0.01, max_iters: 5000, ..Default::default() };
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);

    let start = restore(&spec, &random_pulse(&spec, 20, 1.0, 0.3, seed)?, &target, &rc)?.with_optimize_dt(true);
    let path = gecko_run(&spec, &start, &target, &QualitySpec::Path, &cfg, &rc)?.pulse;
    println!("path:  T = {:.4}, max |h1| = {:.3}", path.duration(), path.max_abs_amplitude());
    let drift = gecko_run(&spec, &path, &target, &QualitySpec::Drift, &cfg, &rc)?;
    println!(
        "drift: T = {:.4}, max |h1| = {:.3} ({} iterations, {})",
        drift.pulse.duration(),
        drift.pulse.max_abs_amplitude(),
        drift.records.len(),
        drift.status
    );
    Ok(())
}
