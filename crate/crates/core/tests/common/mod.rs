#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::Rng;

use bosonic_control::fock::{CMatrix, StateVector, TruncationSpec};
use bosonic_control::weyl::{Monomial, PolyOp};

/// Random polynomial with up to `max_terms` monomials of degree `<= max_degree`
/// and coefficients uniform in the unit square.
pub fn random_poly<R: Rng>(rng: &mut R, mode_count: usize, max_degree: u32, max_terms: usize) -> PolyOp {
    let modes: Vec<usize> = (0..mode_count).collect();
    let pool = Monomial::all_up_to(mode_count, &modes, max_degree);
    let terms = rng.random_range(1..=max_terms);
    PolyOp::from_terms(
        mode_count,
        (0..terms).map(|_| {
            let m = pool[rng.random_range(0..pool.len())].clone();
            (m, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        }),
    )
}

/// Rows and columns of the interior levels of `m`.
pub fn interior_block(m: &CMatrix, spec: &TruncationSpec) -> CMatrix {
    let idx = spec.interior_indices();
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Interior block of `AB - BA`, using the sparsity of polynomial matrices.
pub fn interior_commutator(a: &CMatrix, b: &CMatrix, spec: &TruncationSpec) -> CMatrix {
    let idx = spec.interior_indices();
    let sparse_rows = |m: &CMatrix| -> Vec<Vec<(usize, C64)>> {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).filter(|&c| m[(r, c)] != C64::new(0.0, 0.0)).map(|c| (c, m[(r, c)])).collect())
            .collect()
    };
    let (sa, sb) = (sparse_rows(a), sparse_rows(b));
    let mut pos = vec![usize::MAX; a.ncols()];
    for (n, &i) in idx.iter().enumerate() {
        pos[i] = n;
    }
    let mut out = CMatrix::zeros(idx.len(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (x, y, sign) in [(&sa, &sb, 1.0), (&sb, &sa, -1.0)] {
            for &(k, v) in &x[i] {
                for &(j, w) in &y[k] {
                    if pos[j] != usize::MAX {
                        out[(r, pos[j])] += v * w * sign;
                    }
                }
            }
        }
    }
    out
}

/// State within `radius` of `center`, in a random direction.
pub fn nearby_state<R: Rng>(rng: &mut R, center: &StateVector, support: &StateVector, radius: f64) -> StateVector {
    loop {
        let eta = rng.random_range(0.0..radius);
        let dir = support.amplitudes() - center.amplitudes() * center.inner(support);
        let n = dir.norm();
        if n < 1e-12 {
            continue;
        }
        let moved = center.amplitudes() + dir.unscale(n) * C64::new(eta, 0.0);
        let psi = StateVector::normalized(moved).unwrap();
        if psi.distance(center) < radius {
            return psi;
        }
    }
}
