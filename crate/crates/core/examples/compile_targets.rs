//! Compiles several generator expressions into verified forward-time
//! sequences and prints the reachability report.
//!
//! cargo run --release --example compile_targets

use bosonic_control::fock::{StateVector, TruncationSpec};
use bosonic_control::propagator::GeneratorSet;
use bosonic_control::recurrence::SearchOptions;
use bosonic_control::synth::{reachability_report, CompileOptions, GeneratorExpr as E, InverterChoice, Target};
use bosonic_control::weyl::PolyOp;
use num_complex::Complex64 as C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::uniform(1, 32, 8)?;
    let harmonic = PolyOp::parse("(0.5,0) * q1^2 + (0.5,0) * p1^2", 1)?;
    let displaced = PolyOp::parse("(0.5,0) * q1^2 + (-0.5,0) * q1 + (0.125,0) * 1 + (0.5,0) * p1^2", 1)?;
    let gens = GeneratorSet::from_polys(&[harmonic, PolyOp::q(1, 0), PolyOp::p(1, 0), displaced], &spec)?;
    let psi0 = StateVector::coherent(&spec, &[C64::new(0.4, 0.0)]);

    let targets = vec![
        Target::new("drift", E::leaf(0), 0.8),
        Target::new("reverse-drift", E::scale(-1.0, E::leaf(0)), 0.8),
        Target::new("q-plus-p", E::sum(E::leaf(1), E::leaf(2)), 0.5),
        Target::new("bracket", E::bracket(E::leaf(0), E::leaf(3)), 0.5),
    ];
    let options = CompileOptions {
        eps: 1e-2,
        n_budget: 256,
        inverter: InverterChoice::Tracking { delta: 1e-6, search: SearchOptions::with_horizon(1e3) },
    };
    let report = reachability_report(&gens, &psi0, &[], &targets, &options);
    print!("{}", report.summary_csv());
    for e in &report.entries {
        println!(
            "{:<14} ok {:<5} n {:>3}  segments {:>5}  physical {:<5}  total time {:.3}",
            e.name, e.ok, e.n, e.segments, e.physical, e.total_time
        );
    }
    println!("{} succeeded, {} failed", report.succeeded, report.failed);
    Ok(())
}
