//! Truncated matrices of a polynomial, the interior/buffer split, and the
//! binary export with its JSON sidecar.
//!
//! cargo run --example fock_export -- [out_dir]

use bosonic_control::fock::{
    interior_hermiticity_defect, represent, truncation_probe, write_matrix, StateVector, TruncationSpec,
};
use bosonic_control::weyl::PolyOp;
use num_complex::Complex64 as C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fock_export_out".into());
    let h = PolyOp::parse("(0.5,0) * p1^2 + (0.25,0) * q1^4", 1)?.classified();
    println!("H = {h}  ({:?})", h.role());

    for (dim, buffer) in [(12, 4), (24, 8), (48, 8)] {
        let spec = TruncationSpec::uniform(1, dim, buffer)?;
        let rep = represent(&h, &spec)?;
        println!(
            "D = {dim:>2}: full hermiticity defect {:.2e}, interior defect {:.2e}",
            rep.hermiticity_defect(),
            interior_hermiticity_defect(rep.matrix(), &spec)
        );
    }

    // How much of H|alpha> is lost at the cutoff, against a larger truncation.
    let small = TruncationSpec::uniform(1, 16, 4)?;
    let large = TruncationSpec::uniform(1, 64, 8)?;
    for alpha in [0.2, 0.8, 1.5] {
        let psi = StateVector::coherent(&small, &[C64::new(alpha, 0.0)]);
        println!("alpha = {alpha}: truncation probe {:.3e}", truncation_probe(&h, &psi, &small, &large)?);
    }

    let rep = represent(&h, &TruncationSpec::uniform(1, 24, 8)?)?;
    let dir = std::path::Path::new(&out);
    write_matrix(&rep, &dir.join("h.bin"), &dir.join("h.json"))?;
    println!("wrote {}/h.bin and h.json", dir.display());
    Ok(())
}
