//! Low-pass and band-stop filtering of a refined CZ pulse along the level set.

use gecko::engine::{gecko_run, GeckoConfig};
use gecko::pulse::{fidelity, refine_pulse, GateTarget, HamiltonianSpec};
use gecko::quality::{make_filter, mode_frequencies, power_spectrum, FilterKind, FilterParams, QualitySpec};
use gecko::restore::{random_pulse, restore, RestoreConfig};

fn main() -> gecko::error::Result<()> {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let eps = 1e-6;
    let rc = RestoreConfig { epsilon: eps, ..Default::default() };
    let coarse = restore(&spec, &random_pulse(&spec, 20, 1.0, 1.0, 0)?, &target, &rc)?;
    let pulse = refine_pulse(&coarse, 16)?;
    let l = pulse.n_segments();
    // frequencies in cycles per unit t/T
    let freqs = mode_frequencies(l, 1.0 / l as f64);
    let cfg = GeckoConfig { step_size: 0.05, max_iters: 300, epsilon: eps, ..Default::default() };

    for (kind, params) in [
        (FilterKind::Lowpass, FilterParams { cutoff: 5.0, ..Default::default() }),
        (FilterKind::Bandstop, FilterParams { center: 10.0, width: 1.0, ..Default::default() }),
    ] {
        let fs = make_filter(kind, &params, l, 1.0 / l as f64)?;
        let trace = gecko_run(&spec, &pulse, &target, &QualitySpec::Filter(fs.clone()), &cfg, &rc)?;
        let before = &power_spectrum(&pulse)?[0];
        let after = &power_spectrum(&trace.pulse)?[0];
        let stop = |p: &[f64]| p.iter().zip(fs.weights()).map(|(p, w)| p * (1.0 - w)).sum::<f64>();
        println!(
            "{kind}: F = {:.9}, weighted stop-band power {:.3e} -> {:.3e}",
            fidelity(&spec, &trace.pulse, &target)?,
            stop(before),
            stop(after)
        );
        for n in (0..40).step_by(4) {
            println!("  f = {:6.2}  w = {:.3}  {:.3e} -> {:.3e}", freqs[n], fs.weights()[n], before[n], after[n]);
        }
    }
    Ok(())
}
