//! Controllability of a coupled chain from one end, then a small numerical
//! demo driving the second mode through the coupling.
//!
//! cargo run --release --example chain

use bosonic_control::chain::{chain_controllability, chain_demo, mode_occupation, ChainSpec};
use bosonic_control::fock::StateVector;
use bosonic_control::propagator::evolve;
use bosonic_control::synth::{CompileOptions, GeneratorExpr as E, InverterChoice, Target};
use bosonic_control::weyl::ClosureOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ClosureOptions::with_caps(4, 2048);
    for omega in [1.0, 0.0] {
        let report = chain_controllability(&ChainSpec::open_chain(3, omega), opts)?;
        println!("omega = {omega}: {:?}", report.verdict);
        for e in &report.edges {
            println!("  {} -> {}: {:?} (closure dim {}, missing {})", e.from, e.to, e.verdict, e.closure_dim, e.missing);
        }
    }

    let spec = ChainSpec::open_chain(2, 1.0);
    let targets = [
        Target::new("drift", E::leaf(0), 1.0),
        Target::new("drift+q", E::sum(E::leaf(0), E::leaf(1)), 0.5),
        Target::new("push", E::sum(E::leaf(1), E::leaf(2)), 0.5),
    ];
    let options = CompileOptions { eps: 0.05, n_budget: 1024, inverter: InverterChoice::Exact };
    let (gens, report) = chain_demo(&spec, 8, 2, &targets, &options)?;
    for k in 0..gens.len() {
        println!("H{k} = {}", gens.generator(k)?.label);
    }
    let psi0 = StateVector::fock(gens.spec(), &[0, 0]);
    for e in &report.entries {
        let occ = match &e.sequence {
            Some(seq) => {
                let out = evolve(seq, &psi0, &gens)?;
                format!("<n1> {:.3}, <n2> {:.3}", mode_occupation(&out, gens.spec(), 0), mode_occupation(&out, gens.spec(), 1))
            }
            None => "no sequence".into(),
        };
        println!("{:<8} ok {:<5} n {:>4} fidelity {:.5}  {occ}", e.name, e.ok, e.n, e.fidelity);
    }
    Ok(())
}
