use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::monomial::Monomial;
use super::poly::{PolyOp, Role};
use super::WeylError;

/// Relative residual below which a candidate is treated as linearly dependent.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureOptions {
    pub degree_cap: u32,
    pub dim_cap: usize,
    pub tol: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self { degree_cap: 6, dim_cap: 512, tol: INDEPENDENCE_TOL }
    }
}

impl ClosureOptions {
    pub fn with_caps(degree_cap: u32, dim_cap: usize) -> Self {
        Self { degree_cap, dim_cap, ..Self::default() }
    }
}

/// Real-linear basis of a (possibly capped) Lie closure.
///
/// `basis` holds the raw brackets as discovered; `ortho` is an orthonormal
/// frame for the same real span, used for independence and membership.
#[derive(Clone, Debug)]
pub struct LieBasis {
    generators: Vec<PolyOp>,
    basis: Vec<PolyOp>,
    ortho: Vec<PolyOp>,
    options: ClosureOptions,
    degree_cap_hit: bool,
    dim_cap_hit: bool,
}

impl LieBasis {
    fn empty(generators: Vec<PolyOp>, options: ClosureOptions) -> Self {
        Self {
            generators,
            basis: Vec::new(),
            ortho: Vec::new(),
            options,
            degree_cap_hit: false,
            dim_cap_hit: false,
        }
    }

    pub fn generators(&self) -> &[PolyOp] {
        &self.generators
    }

    pub fn basis(&self) -> &[PolyOp] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn options(&self) -> ClosureOptions {
        self.options
    }

    pub fn degree_cap(&self) -> u32 {
        self.options.degree_cap
    }

    pub fn dim_cap(&self) -> usize {
        self.options.dim_cap
    }

    /// True when the closure completed without discarding any bracket.
    pub fn saturated(&self) -> bool {
        !self.degree_cap_hit && !self.dim_cap_hit
    }

    pub fn degree_cap_hit(&self) -> bool {
        self.degree_cap_hit
    }

    pub fn dim_cap_hit(&self) -> bool {
        self.dim_cap_hit
    }

    pub fn mode_count(&self) -> usize {
        self.generators.first().map_or(0, PolyOp::mode_count)
    }

    /// Modes touched by any basis element.
    pub fn support(&self) -> Vec<usize> {
        let mut modes: Vec<usize> = self.basis.iter().flat_map(|b| b.support()).collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }

    /// Component of `x` orthogonal to the current span (two Gram-Schmidt passes).
    fn residual(&self, x: &PolyOp) -> PolyOp {
        let mut r = x.clone();
        for _ in 0..2 {
            for e in &self.ortho {
                let c = e.real_inner(&r);
                if c != 0.0 {
                    r = &r - &e.scale_real(c);
                }
            }
        }
        r
    }

    /// Relative distance of `x` from the real span of the basis.
    pub fn relative_residual(&self, x: &PolyOp) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        self.residual(x).norm() / n
    }

    /// Membership in the real span, judged by the relative projection residual.
    pub fn contains(&self, x: &PolyOp, tol: f64) -> bool {
        self.relative_residual(x) <= tol
    }

    /// Adds `x` if it is independent of the span. Returns whether it was added.
    fn try_insert(&mut self, x: PolyOp) -> bool {
        let n = x.norm();
        if n == 0.0 {
            return false;
        }
        let r = self.residual(&x);
        let rn = r.norm();
        if rn <= self.options.tol * n {
            return false;
        }
        self.ortho.push(r.scale_real(1.0 / rn));
        // Keep raw elements at unit scale so repeated brackets stay bounded.
        self.basis.push(x.scale_real(1.0 / n));
        true
    }

    /// Same real span as `other`, within the closure tolerance.
    pub fn same_span(&self, other: &LieBasis) -> bool {
        let tol = self.options.tol.max(other.options.tol) * 10.0;
        self.dim() == other.dim()
            && other.basis.iter().all(|b| self.contains(b, tol))
            && self.basis.iter().all(|b| other.contains(b, tol))
    }
}

fn validate(generators: &[PolyOp], options: &ClosureOptions) -> Result<(), WeylError> {
    if options.degree_cap < 1 || options.dim_cap < 1 {
        return Err(WeylError::InvalidCaps { degree_cap: options.degree_cap, dim_cap: options.dim_cap });
    }
    let first = generators.first().ok_or(WeylError::EmptyGenerators)?;
    for g in generators {
        if g.mode_count() != first.mode_count() {
            return Err(WeylError::ModeCountMismatch { left: first.mode_count(), right: g.mode_count() });
        }
        g.expect_role(Role::SkewHermitian)?;
    }
    Ok(())
}

/// Breadth-first bracket saturation of the real Lie algebra spanned by
/// `generators`.
///
/// Brackets whose degree exceeds the cap are discarded and flag the result
/// as unsaturated; reaching the dimension cap stops the search with a
/// partial basis, also flagged.
pub fn lie_closure(generators: &[PolyOp], options: ClosureOptions) -> Result<LieBasis, WeylError> {
    validate(generators, &options)?;
    let generators: Vec<PolyOp> = generators
        .iter()
        .map(|g| g.clone().with_role(Role::SkewHermitian))
        .collect::<Result<_, _>>()?;
    let mut out = LieBasis::empty(generators.clone(), options);
    for g in generators {
        if out.dim() == options.dim_cap {
            out.dim_cap_hit = true;
            return Ok(out);
        }
        out.try_insert(g);
    }

    let mut i = 1;
    while i < out.basis.len() {
        for j in 0..i {
            let br = out.basis[i].bracket(&out.basis[j])?;
            if br.is_zero() {
                continue;
            }
            if br.degree() > options.degree_cap {
                out.degree_cap_hit = true;
                continue;
            }
            if out.relative_residual(&br) <= options.tol {
                continue;
            }
            if out.dim() == options.dim_cap {
                out.dim_cap_hit = true;
                return Ok(out);
            }
            out.try_insert(br);
        }
        i += 1;
    }
    Ok(out)
}

/// Skew-hermitian generators `i (m + m^dagger)/2` for every monomial `m` on
/// `modes` of degree `1..=cap`, plus `i·1`.
fn symmetrized_generators(mode_count: usize, modes: &[usize], cap: u32) -> Vec<PolyOp> {
    Monomial::all_up_to(mode_count, modes, cap)
        .into_iter()
        .map(|m| {
            let mono = PolyOp::from_terms(mode_count, [(m, C64::new(1.0, 0.0))]);
            (&mono + &mono.adjoint()).scale(C64::new(0.0, 0.5))
        })
        .collect()
}

/// Degree-capped generating set of the single-mode polynomial algebra on `mode`.
pub fn local_generators(mode_count: usize, mode: usize, cap: u32) -> Vec<PolyOp> {
    symmetrized_generators(mode_count, &[mode], cap)
}

/// Degree-capped generating set of the two-mode polynomial algebra on `(i, j)`.
pub fn pair_generators(mode_count: usize, i: usize, j: usize, cap: u32) -> Vec<PolyOp> {
    symmetrized_generators(mode_count, &[i, j], cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Propagates,
    Fails,
    /// The caps bound before a decision could be certified.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub verdict: Verdict,
    pub closure: LieBasis,
    /// Capped two-site generators not found in the closure.
    pub missing: usize,
    /// Size of the capped two-site generating set that was checked.
    pub checked: usize,
}

impl PropagationResult {
    pub fn propagates(&self) -> bool {
        self.verdict == Verdict::Propagates
    }
}

/// Decides whether `local` (an algebra on mode `pair.0`) together with its
/// brackets against `i·coupling` generates the capped two-mode algebra on
/// `pair`.
///
/// `Propagates` is only reported when every capped two-mode generator is in
/// the computed span; `Fails` only when the closure is saturated, or when no
/// generator touches the second mode at all. Everything else is `Unknown`.
pub fn algebraic_propagation_check(
    local: &LieBasis,
    coupling: &PolyOp,
    pair: (usize, usize),
    options: ClosureOptions,
) -> Result<PropagationResult, WeylError> {
    let mode_count = local.mode_count();
    if coupling.mode_count() != mode_count {
        return Err(WeylError::ModeCountMismatch { left: mode_count, right: coupling.mode_count() });
    }
    coupling.expect_role(Role::Hermitian)?;
    let (i, j) = pair;
    if i >= mode_count || j >= mode_count {
        return Err(WeylError::ModeOutOfRange { mode: i.max(j), mode_count });
    }
    let targets = pair_generators(mode_count, i, j, options.degree_cap);
    let checked = targets.len();

    let ih = coupling.times_i();
    let mut seed: Vec<PolyOp> = local.basis().to_vec();
    for x in local.basis() {
        let br = x.bracket(&ih)?;
        if !br.is_zero() {
            seed.push(br);
        }
    }
    let closure = lie_closure(&seed, options)?;

    if !seed.iter().any(|g| g.support().contains(&j)) {
        // Everything generated acts on the other modes only.
        let missing = targets.iter().filter(|t| !closure.contains(t, options.tol * 10.0)).count();
        return Ok(PropagationResult { verdict: Verdict::Fails, closure, missing, checked });
    }

    let missing = targets.iter().filter(|t| !closure.contains(t, options.tol * 10.0)).count();
    let verdict = if missing == 0 {
        Verdict::Propagates
    } else if closure.saturated() {
        Verdict::Fails
    } else {
        Verdict::Unknown
    };
    Ok(PropagationResult { verdict, closure, missing, checked })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ig(op: PolyOp) -> PolyOp {
        op.times_i()
    }

    fn opts() -> ClosureOptions {
        ClosureOptions::default()
    }

    #[test]
    fn heisenberg_closure() {
        let gens = [ig(PolyOp::q(1, 0)), ig(PolyOp::p(1, 0))];
        let lb = lie_closure(&gens, opts()).unwrap();
        assert_eq!(lb.dim(), 3);
        assert!(lb.saturated());
        assert!(lb.contains(&PolyOp::constant(1, C64::new(0.0, 1.0)), 1e-10));
    }

    #[test]
    fn squeezing_closure_contains_symmetric_qp() {
        let gens = [ig(PolyOp::monomial(1, 0, 2, 0)), ig(PolyOp::monomial(1, 0, 0, 2))];
        let lb = lie_closure(&gens, opts()).unwrap();
        assert_eq!(lb.dim(), 3);
        assert!(lb.saturated());
        let qp = PolyOp::monomial(1, 0, 1, 1);
        let sym = ig(&qp + &qp.adjoint());
        assert!(lb.contains(&sym, 1e-10));
        for g in lb.generators() {
            assert!(lb.contains(g, 1e-10));
        }
    }

    #[test]
    fn quadratic_plus_linear_closure() {
        let gens = [
            ig(PolyOp::monomial(1, 0, 2, 0)),
            ig(PolyOp::monomial(1, 0, 0, 2)),
            ig(PolyOp::q(1, 0)),
        ];
        let lb = lie_closure(&gens, opts()).unwrap();
        assert_eq!(lb.dim(), 6);
        assert!(lb.saturated());
        assert!(!lb.contains(&ig(PolyOp::monomial(1, 0, 3, 0)), 1e-10));
    }

    #[test]
    fn cubic_generator_hits_degree_cap() {
        let gens = [
            ig(PolyOp::monomial(1, 0, 2, 0)),
            ig(PolyOp::monomial(1, 0, 0, 2)),
            ig(PolyOp::monomial(1, 0, 3, 0)),
        ];
        let lb = lie_closure(&gens, ClosureOptions::with_caps(6, 512)).unwrap();
        assert!(!lb.saturated());
        assert!(lb.degree_cap_hit());
    }

    #[test]
    fn dim_cap_returns_partial_basis() {
        let gens = [
            ig(PolyOp::monomial(1, 0, 2, 0)),
            ig(PolyOp::monomial(1, 0, 0, 2)),
            ig(PolyOp::q(1, 0)),
        ];
        let lb = lie_closure(&gens, ClosureOptions::with_caps(6, 4)).unwrap();
        assert_eq!(lb.dim(), 4);
        assert!(lb.dim_cap_hit());
        assert!(!lb.saturated());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(lie_closure(&[], opts()).unwrap_err(), WeylError::EmptyGenerators);
        let herm = PolyOp::monomial(1, 0, 2, 0);
        assert!(matches!(lie_closure(&[herm], opts()), Err(WeylError::RoleMismatch { .. })));
        let gens = [ig(PolyOp::q(1, 0))];
        assert!(matches!(
            lie_closure(&gens, ClosureOptions::with_caps(0, 3)),
            Err(WeylError::InvalidCaps { .. })
        ));
    }

    #[test]
    fn closure_is_idempotent() {
        let gens = [
            ig(PolyOp::monomial(1, 0, 2, 0)),
            ig(PolyOp::monomial(1, 0, 0, 2)),
            ig(PolyOp::p(1, 0)),
        ];
        let lb = lie_closure(&gens, opts()).unwrap();
        let again = lie_closure(lb.basis(), opts()).unwrap();
        assert!(lb.same_span(&again));
    }

    #[test]
    fn local_generator_counts() {
        assert_eq!(local_generators(2, 1, 3).len(), 10);
        assert_eq!(pair_generators(2, 0, 1, 2).len(), 15);
        for g in pair_generators(2, 0, 1, 3) {
            assert_eq!(g.detect_role(), Role::SkewHermitian);
        }
    }

    #[test]
    fn zero_coupling_does_not_propagate() {
        let local = lie_closure(&local_generators(2, 0, 3), ClosureOptions::with_caps(3, 512)).unwrap();
        let res =
            algebraic_propagation_check(&local, &PolyOp::zero(2), (0, 1), ClosureOptions::with_caps(3, 512))
                .unwrap();
        assert_eq!(res.verdict, Verdict::Fails);
        assert!(res.closure.same_span(&local));
    }
}
