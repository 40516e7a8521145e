//! Jacobian rank, kernel dimension, and how the unitary responds to kernel
//! versus row-space steps.

use gecko::kernel::{kernel_basis, pulse_jacobian, DEFAULT_KERNEL_TOL};
use gecko::pulse::{pulse_unitary, GateTarget, HamiltonianSpec};
use gecko::restore::{random_pulse, restore, RestoreConfig};
use nalgebra::DVector;

fn main() -> gecko::error::Result<()> {
    for (name, spec) in [("tfim1_h2zero", HamiltonianSpec::tfim1_h2zero(1.0)), ("tfim1", HamiltonianSpec::tfim1(1.0))] {
        let start = random_pulse(&spec, 20, 0.5, 1.0, 2)?;
        let pulse = restore(&spec, &start, &GateTarget::cz(), &RestoreConfig::default())?;
        let j = pulse_jacobian(&spec, &pulse)?;
        let k = kernel_basis(&j, DEFAULT_KERNEL_TOL)?;
        println!("{name}: P = {}, rank = {}, R = {}", k.n_params(), k.rank(), k.dim());

        let z = k.z();
        let v = z.column(0).into_owned();
        let mut r = DVector::from_fn(z.nrows(), |i, _| ((i * 37 % 11) as f64) - 5.0);
        r -= z * (z.transpose() * &r);
        let r = r.normalize();
        let u0 = pulse_unitary(&spec, &pulse)?;
        for s in [1e-2, 1e-3, 1e-4] {
            let dk = (pulse_unitary(&spec, &pulse.displaced((&v * s).as_slice())?)? - &u0).norm();
            let dr = (pulse_unitary(&spec, &pulse.displaced((&r * s).as_slice())?)? - &u0).norm();
            println!("  s = {s:.0e}: |dU| kernel {dk:.3e}, row space {dr:.3e}");
        }
    }
    Ok(())
}
