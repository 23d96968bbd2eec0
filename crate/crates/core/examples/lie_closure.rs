//! Real Lie closures of a few generating sets, including a capped one.
//!
//! cargo run --example lie_closure

use bosonic_control::weyl::{lie_closure, ClosureOptions, PolyOp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ig = |text: &str| PolyOp::parse(text, 1).map(|p| p.times_i());
    let sets = [
        ("{iq, ip}", vec![ig("(1,0) * q1")?, ig("(1,0) * p1")?]),
        ("{iq^2, ip^2}", vec![ig("(1,0) * q1^2")?, ig("(1,0) * p1^2")?]),
        ("{iq^2, ip^2, iq}", vec![ig("(1,0) * q1^2")?, ig("(1,0) * p1^2")?, ig("(1,0) * q1")?]),
        ("{iq^3, ip^2}", vec![ig("(1,0) * q1^3")?, ig("(1,0) * p1^2")?]),
    ];
    let opts = ClosureOptions::default();
    for (name, gens) in sets {
        let lb = lie_closure(&gens, opts)?;
        println!(
            "{name:<18} dim {:>3}  saturated {:<5}  degree cap hit {}",
            lb.dim(),
            lb.saturated(),
            lb.degree_cap_hit()
        );
        if lb.dim() <= 6 {
            for b in lb.basis() {
                println!("    {b}");
            }
        }
    }
    Ok(())
}
