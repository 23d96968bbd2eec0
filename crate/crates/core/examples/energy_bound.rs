//! One inversion plan for every state with <H> < M, on an anharmonic spectrum.
//!
//! cargo run --release --example energy_bound

use bosonic_control::fock::StateVector;
use bosonic_control::recurrence::{invert, tail_cut_energy, InversionMode, SearchOptions, SpectralData};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let energies: Vec<f64> = (0..64).map(|n| n as f64 + 0.05 * (n * n) as f64).collect();
    let sd = SpectralData::from_diagonal(&energies)?;
    let (m, delta, s) = (3.0, 0.2, 1.0);
    let n = tail_cut_energy(sd.eigenvalues(), sd.extent(), m, delta)?;
    println!("energy cut 8M/delta^2 = {}, N = {n}", 8.0 * m / (delta * delta));

    let inv = invert(&sd, s, delta, &InversionMode::EnergyBound(m), SearchOptions::default())?;
    println!("T = {:.6}, t* = {:.6}, certified {}", inv.plan.t_tilde, inv.t_star, inv.plan.certified());

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 500 {
        let temp = rng.random_range(0.1..2.0);
        let amps = nalgebra::DVector::from_fn(energies.len(), |i, _| {
            let w = (-energies[i] / (2.0 * temp)).exp();
            C64::new(rng.random_range(-1.0..1.0) * w, rng.random_range(-1.0..1.0) * w)
        });
        let psi = StateVector::normalized(amps).expect("nonzero");
        let mean: f64 = psi.amplitudes().iter().zip(&energies).map(|(a, e)| a.norm_sqr() * e).sum();
        if mean >= m {
            continue;
        }
        tested += 1;
        worst = worst.max(sd.propagate(&psi, -s).distance(&sd.propagate(&psi, inv.t_star)));
    }
    println!("{tested} random states with <H> < {m}: worst distance {worst:.3e} (delta = {delta})");
    Ok(())
}
