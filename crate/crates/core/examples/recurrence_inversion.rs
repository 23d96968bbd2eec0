//! Pointwise inversion of e^{-H s} by recurrence for the oscillator, with the
//! objective trace around the recurrence time.
//!
//! cargo run --example recurrence_inversion

use std::f64::consts::PI;

use bosonic_control::fock::{represent, StateVector, TruncationSpec};
use bosonic_control::recurrence::{invert, recurrence_distance, scan_trace, InversionMode, SearchOptions, SpectralData};
use bosonic_control::weyl::PolyOp;
use num_complex::Complex64 as C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::uniform(1, 32, 8)?;
    let h = (&PolyOp::monomial(1, 0, 2, 0) + &PolyOp::monomial(1, 0, 0, 2)).scale_real(0.5);
    let sd = SpectralData::from_rep(&represent(&h, &spec)?)?;
    let psi = StateVector::coherent(&spec, &[C64::new(1.0, 0.5)]);
    let c = sd.overlaps(&psi)?;
    for t in [PI, 2.0 * PI, 4.0 * PI] {
        println!("distance at t = {t:.4}: {:.3e}", recurrence_distance(&c, sd.eigenvalues(), t)?);
    }

    let s = 1.0;
    let inv = invert(&sd, s, 1e-7, &InversionMode::Pointwise(psi.clone()), SearchOptions::default())?;
    let measured = sd.propagate(&psi, -s).distance(&sd.propagate(&psi, inv.t_star));
    println!("{}", serde_json::to_string_pretty(&inv.plan)?);
    println!("t* = {:.9} (4 pi - 1 = {:.9}), measured distance {measured:.2e}", inv.t_star, 4.0 * PI - 1.0);

    let energies = &sd.eigenvalues()[..=inv.plan.n_cut];
    let near = scan_trace(energies, inv.plan.t_tilde - 0.05, inv.plan.t_tilde + 0.05, 11);
    for (t, f) in near {
        println!("  t = {t:.4}  objective {f:.3e}");
    }
    Ok(())
}
