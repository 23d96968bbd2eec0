//! The group commutator word approximating e^{[H_k, H_l] t^2}, realized with
//! the exact inverse and with forward-time recurrence inversion.
//!
//! cargo run --release --example group_commutator

use bosonic_control::fock::{StateVector, TruncationSpec};
use bosonic_control::propagator::{commutator_convergence, commutator_sequence, ExactInverter, GeneratorSet, RecurrenceInverter};
use bosonic_control::recurrence::SearchOptions;
use bosonic_control::weyl::PolyOp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // H_k = (q^2 + p^2)/2 and H_l = ((q - 1/2)^2 + p^2)/2, so [H_k, H_l] is a
    // displacement. Both spectra are (up to truncation) n + 1/2 and recur.
    let spec = TruncationSpec::uniform(1, 40, 8)?;
    let harmonic = PolyOp::parse("(0.5,0) * q1^2 + (0.5,0) * p1^2", 1)?;
    let displaced = PolyOp::parse("(0.5,0) * q1^2 + (-0.5,0) * q1 + (0.125,0) * 1 + (0.5,0) * p1^2", 1)?;
    let gens = GeneratorSet::from_polys(&[harmonic, displaced], &spec)?;
    let psi = StateVector::fock(&spec, &[0]);
    let t = 0.6;

    println!("exact inverse:");
    for r in commutator_convergence(&gens, 0, 1, t, &[2, 4, 8, 16], &psi, &ExactInverter)? {
        println!("  n = {:>2}: error {:.3e}", r.n, r.error);
    }

    // Reversed segments are all e^{-H_k s} with the oscillator, whose
    // spectrum recurs, so every inverse becomes forward evolution.
    let delta = 1e-6;
    let inverter = RecurrenceInverter::tracking(delta, SearchOptions::with_horizon(1e3));
    println!("recurrence inverse (delta = {delta:e}):");
    for r in commutator_convergence(&gens, 0, 1, t, &[2, 4, 8, 16], &psi, &inverter)? {
        println!("  n = {:>2}: error {:.3e}", r.n, r.error);
    }
    let real = commutator_sequence(0, 1, t, 8, &inverter, &gens, &psi)?;
    println!(
        "n = 8 word: {} segments, physical {}, {} inversions, budget {:.1e}, total time {:.3}",
        real.sequence.len(),
        real.sequence.is_physical(),
        real.inversions,
        real.inversion_budget,
        real.sequence.total_time()
    );
    for p in &real.plans {
        println!("  plan: s = {:.4}, N = {}, T = {:.6}, t* = {:.6}", p.s, p.n_cut, p.t_tilde, p.t_star);
    }
    Ok(())
}
