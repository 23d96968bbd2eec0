//! A single plan covering a finite net of states and their neighbourhoods.
//!
//! cargo run --example finite_net

use bosonic_control::fock::{represent, StateVector, TruncationSpec};
use bosonic_control::recurrence::{invert, InversionMode, SearchOptions, SpectralData};
use bosonic_control::weyl::PolyOp;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::uniform(1, 32, 8)?;
    let h = (&PolyOp::monomial(1, 0, 2, 0) + &PolyOp::monomial(1, 0, 0, 2)).scale_real(0.5);
    let sd = SpectralData::from_rep(&represent(&h, &spec)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net: Vec<StateVector> = (0..5).map(|_| StateVector::random_supported(&spec, 24, &mut rng)).collect();

    let eps = 0.3;
    let delta = eps / 3.0;
    let s = 1.0;
    let inv = invert(&sd, s, delta, &InversionMode::FiniteNet(net.clone()), SearchOptions::default())?;
    println!("net of {}: N = {}, T = {:.6}, t* = {:.6}", net.len(), inv.plan.n_cut, inv.plan.t_tilde, inv.t_star);

    let mut worst = 0.0f64;
    for k in 0..200 {
        let center = &net[k % net.len()];
        let noise = nalgebra::DVector::from_fn(spec.total_dim(), |i, _| {
            if spec.levels(i)[0] < 24 {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let noise = &noise / C64::new(noise.norm(), 0.0) * C64::new(rng.random_range(0.0..0.9 * delta), 0.0);
        let psi = StateVector::normalized(center.amplitudes() + noise).expect("nonzero");
        worst = worst.max(sd.propagate(&psi, -s).distance(&sd.propagate(&psi, inv.t_star)));
    }
    println!("200 states near the net: worst distance {worst:.3e} < eps = {eps}");
    Ok(())
}
