//! Convergence of (e^{H_k t/n} e^{H_l t/n})^n to e^{(H_k + H_l) t} for q and p.
//!
//! cargo run --example trotter

use bosonic_control::fock::{StateVector, TruncationSpec};
use bosonic_control::propagator::{trotter_convergence, GeneratorSet};
use bosonic_control::weyl::PolyOp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::uniform(1, 32, 8)?;
    let gens = GeneratorSet::from_polys(&[PolyOp::q(1, 0), PolyOp::p(1, 0)], &spec)?;
    let psi = StateVector::fock(&spec, &[0]);
    let rows = trotter_convergence(&gens, 0, 1, 0.7, &[4, 16, 64, 256, 1024], &psi)?;
    println!("{:>6} {:>12} {:>10} {:>14}", "n", "error", "ratio", "1 - fidelity");
    let mut prev: Option<f64> = None;
    for r in rows {
        let ratio = prev.map(|p| format!("{:.2}", p / r.error)).unwrap_or_default();
        println!("{:>6} {:>12.4e} {:>10} {:>14.3e}", r.n, r.error, ratio, 1.0 - r.fidelity);
        prev = Some(r.error);
    }
    // [q, p] = i is a scalar, so the error is a global phase of about t^2/(2n).
    Ok(())
}
