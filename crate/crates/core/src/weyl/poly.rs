use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::monomial::Monomial;
use super::WeylError;

const I: C64 = C64::new(0.0, 1.0);

/// Coefficients smaller than this fraction of the largest one are dropped.
const PRUNE_REL: f64 = 1e-14;

/// Tolerance used when classifying a polynomial as (skew-)hermitian.
pub const ROLE_TOL: f64 = 1e-12;

/// Adjoint symmetry carried by a [`PolyOp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Hermitian,
    SkewHermitian,
    General,
}

/// A single position or momentum factor in an unordered operator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Q(usize),
    P(usize),
}

impl Factor {
    pub fn mode(self) -> usize {
        match self {
            Factor::Q(m) | Factor::P(m) => m,
        }
    }
}

/// Complex polynomial in the per-mode operators `q_i`, `p_i`, kept in
/// q-before-p canonical order with zero coefficients pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyOp {
    mode_count: usize,
    terms: BTreeMap<Monomial, C64>,
    role: Role,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

/// `(q^a p^b)(q^c p^d)` for a single mode, using
/// `p^b q^c = sum_k k! C(b,k) C(c,k) (-i)^k q^(c-k) p^(b-k)`.
fn mode_product(left: (u32, u32), right: (u32, u32)) -> Vec<(C64, (u32, u32))> {
    let (a, b) = left;
    let (c, d) = right;
    (0..=b.min(c))
        .map(|k| {
            let mag = factorial(k) * binomial(b, k) * binomial(c, k);
            let phase = (-I).powu(k);
            (phase * mag, (a + c - k, b + d - k))
        })
        .collect()
}

/// Canonical expansion of the product of two canonical monomials.
pub(crate) fn monomial_product(x: &Monomial, y: &Monomial) -> Vec<(C64, Monomial)> {
    let mut partial: Vec<(C64, Vec<(u32, u32)>)> =
        vec![(C64::new(1.0, 0.0), Vec::with_capacity(x.mode_count()))];
    for (&l, &r) in x.exponents().iter().zip(y.exponents()) {
        let factors = mode_product(l, r);
        if factors.len() == 1 {
            for (_, exps) in partial.iter_mut() {
                exps.push(factors[0].1);
            }
            continue;
        }
        let mut next = Vec::with_capacity(partial.len() * factors.len());
        for (c, exps) in &partial {
            for &(f, e) in &factors {
                let mut exps = exps.clone();
                exps.push(e);
                next.push((c * f, exps));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(c, e)| (c, Monomial::from_exponents(e)))
        .collect()
}

impl PolyOp {
    pub fn zero(mode_count: usize) -> Self {
        Self { mode_count, terms: BTreeMap::new(), role: Role::General }
    }

    pub fn constant(mode_count: usize, c: C64) -> Self {
        Self::from_terms(mode_count, [(Monomial::identity(mode_count), c)])
    }

    pub fn identity(mode_count: usize) -> Self {
        Self::constant(mode_count, C64::new(1.0, 0.0))
    }

    /// Position operator `q_mode` (modes are zero-based).
    pub fn q(mode_count: usize, mode: usize) -> Self {
        Self::monomial(mode_count, mode, 1, 0)
    }

    /// Momentum operator `p_mode` (modes are zero-based).
    pub fn p(mode_count: usize, mode: usize) -> Self {
        Self::monomial(mode_count, mode, 0, 1)
    }

    /// `q_mode^a p_mode^b` with unit coefficient.
    pub fn monomial(mode_count: usize, mode: usize, a: u32, b: u32) -> Self {
        assert!(mode < mode_count, "mode {mode} out of range for {mode_count} modes");
        Self::from_terms(
            mode_count,
            [(Monomial::single(mode_count, mode, a, b), C64::new(1.0, 0.0))],
        )
    }

    /// Builds a polynomial from already-canonical monomials, summing repeats.
    pub fn from_terms<I>(mode_count: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C64)>,
    {
        let mut out = Self::zero(mode_count);
        for (m, c) in terms {
            assert_eq!(m.mode_count(), mode_count, "monomial mode count mismatch");
            *out.terms.entry(m).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.prune();
        out.classified()
    }

    /// Normal form of a sum of arbitrary factor words.
    pub fn canonicalize(raw: &[(Vec<Factor>, C64)], mode_count: usize) -> Result<Self, WeylError> {
        let mut total = Self::zero(mode_count);
        for (word, coeff) in raw {
            let mut acc = Self::constant(mode_count, *coeff);
            for &f in word {
                if f.mode() >= mode_count {
                    return Err(WeylError::ModeOutOfRange { mode: f.mode(), mode_count });
                }
                let factor = match f {
                    Factor::Q(m) => Self::q(mode_count, m),
                    Factor::P(m) => Self::p(mode_count, m),
                };
                acc = &acc * &factor;
            }
            total = &total + &acc;
        }
        Ok(total)
    }

    fn prune(&mut self) {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = scale * PRUNE_REL;
        self.terms.retain(|_, c| c.norm() > cut);
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree among the terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Modes on which some term acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        let mut modes: Vec<usize> = self.terms.keys().flat_map(|m| m.support()).collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }

    /// Keeps only the non-constant terms acting exclusively on `modes`.
    pub fn restrict_to_modes(&self, modes: &[usize]) -> Self {
        Self::from_terms(
            self.mode_count,
            self.terms
                .iter()
                .filter(|(m, _)| !m.is_identity() && m.support().all(|s| modes.contains(&s)))
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = PolyOp {
            mode_count: self.mode_count,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
            role: Role::General,
        };
        out.prune();
        out.role = match self.role {
            Role::General => Role::General,
            r if c.im == 0.0 => r,
            r if c.re == 0.0 => r.flip(),
            _ => Role::General,
        };
        out
    }

    pub fn scale_real(&self, r: f64) -> Self {
        self.scale(C64::new(r, 0.0))
    }

    /// Multiplication by `i`; swaps hermitian and skew-hermitian roles.
    pub fn times_i(&self) -> Self {
        self.scale(I)
    }

    /// Converts a hermitian `H~` into the skew-hermitian generator `-i H~`.
    pub fn to_generator(&self) -> Result<Self, WeylError> {
        self.expect_role(Role::Hermitian)?;
        Ok(self.scale(-I))
    }

    /// Formal adjoint: conjugate coefficients, reverse factor order, re-canonicalize.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.mode_count);
        for (m, c) in &self.terms {
            // (q^a p^b)^dagger = p^b q^a per mode; modes commute.
            let p_part = Monomial::from_exponents(m.exponents().iter().map(|&(_, b)| (0, b)).collect());
            let q_part = Monomial::from_exponents(m.exponents().iter().map(|&(a, _)| (a, 0)).collect());
            for (f, mono) in monomial_product(&p_part, &q_part) {
                *out.terms.entry(mono).or_insert(C64::new(0.0, 0.0)) += f * c.conj();
            }
        }
        out.prune();
        out.role = self.role;
        out
    }

    /// Real inner product `Re sum conj(a_m) b_m` over monomial coordinates.
    pub fn real_inner(&self, other: &Self) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .terms
            .iter()
            .filter_map(|(m, a)| large.terms.get(m).map(|b| (a.conj() * b).re))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coefficient-level difference from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.raw_combination_max(other, -1.0)
    }

    /// `max_m |self_m + sign * other_m|` without building a new polynomial.
    fn raw_combination_max(&self, other: &Self, sign: f64) -> f64 {
        let mut worst = 0.0f64;
        for (m, a) in &self.terms {
            worst = worst.max((a + other.coeff(m) * sign).norm());
        }
        for (m, b) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Detects the adjoint symmetry of the polynomial.
    pub fn detect_role(&self) -> Role {
        let adj = self.adjoint();
        let scale = self.terms.values().map(|c| c.norm()).fold(1.0, f64::max);
        let tol = ROLE_TOL * scale;
        if adj.raw_combination_max(self, -1.0) <= tol {
            Role::Hermitian
        } else if adj.raw_combination_max(self, 1.0) <= tol {
            Role::SkewHermitian
        } else {
            Role::General
        }
    }

    /// Tags the polynomial with `role` after checking it against the adjoint.
    pub fn with_role(mut self, role: Role) -> Result<Self, WeylError> {
        if role != Role::General && !self.has_symmetry(role) {
            return Err(WeylError::RoleMismatch { expected: role, found: self.detect_role() });
        }
        self.role = role;
        Ok(self)
    }

    /// Tags the polynomial with its detected role.
    pub fn classified(mut self) -> Self {
        self.role = self.detect_role();
        self
    }

    fn has_symmetry(&self, role: Role) -> bool {
        if self.is_zero() {
            return true;
        }
        let detected = self.detect_role();
        detected == role
    }

    pub(crate) fn expect_role(&self, role: Role) -> Result<(), WeylError> {
        if self.role == role || self.has_symmetry(role) {
            Ok(())
        } else {
            Err(WeylError::RoleMismatch { expected: role, found: self.detect_role() })
        }
    }

    /// Canonical form of `[A, B] = AB - BA`.
    pub fn bracket(&self, other: &Self) -> Result<Self, WeylError> {
        if self.mode_count != other.mode_count {
            return Err(WeylError::ModeCountMismatch { left: self.mode_count, right: other.mode_count });
        }
        let mut out = Self::zero(self.mode_count);
        for (x, a) in &self.terms {
            for (y, b) in &other.terms {
                let ab = a * b;
                // Products agree at leading order; only the reordering
                // corrections survive in the difference.
                for (f, m) in monomial_product(x, y) {
                    *out.terms.entry(m).or_insert(C64::new(0.0, 0.0)) += f * ab;
                }
                for (f, m) in monomial_product(y, x) {
                    *out.terms.entry(m).or_insert(C64::new(0.0, 0.0)) -= f * ab;
                }
            }
        }
        out.prune();
        out.role = match (self.role, other.role) {
            (Role::SkewHermitian, Role::SkewHermitian) | (Role::Hermitian, Role::Hermitian) => {
                Role::SkewHermitian
            }
            (Role::Hermitian, Role::SkewHermitian) | (Role::SkewHermitian, Role::Hermitian) => {
                Role::Hermitian
            }
            _ => Role::General,
        };
        debug_assert!(out.role == Role::General || out.has_symmetry(out.role));
        Ok(out)
    }

    /// Parses the textual form `"(re,im) * q1^a p1^b + ..."`; modes are one-based.
    pub fn parse(text: &str, mode_count: usize) -> Result<Self, WeylError> {
        super::text::parse(text, mode_count)
    }
}

impl Role {
    fn flip(self) -> Self {
        match self {
            Role::Hermitian => Role::SkewHermitian,
            Role::SkewHermitian => Role::Hermitian,
            Role::General => Role::General,
        }
    }
}

fn combine_roles(a: Role, b: Role) -> Role {
    if a == b {
        a
    } else {
        Role::General
    }
}

impl Add for &PolyOp {
    type Output = PolyOp;

    fn add(self, rhs: &PolyOp) -> PolyOp {
        assert_eq!(self.mode_count, rhs.mode_count, "mode count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            *out.terms.entry(m.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.prune();
        match combine_roles(self.role, rhs.role) {
            Role::General => out.classified(),
            r => {
                out.role = r;
                out
            }
        }
    }
}

impl Sub for &PolyOp {
    type Output = PolyOp;

    fn sub(self, rhs: &PolyOp) -> PolyOp {
        self + &(-rhs)
    }
}

impl Neg for &PolyOp {
    type Output = PolyOp;

    fn neg(self) -> PolyOp {
        PolyOp {
            mode_count: self.mode_count,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
            role: self.role,
        }
    }
}

impl Mul for &PolyOp {
    type Output = PolyOp;

    fn mul(self, rhs: &PolyOp) -> PolyOp {
        assert_eq!(self.mode_count, rhs.mode_count, "mode count mismatch");
        let mut out = PolyOp::zero(self.mode_count);
        for (x, a) in &self.terms {
            for (y, b) in &rhs.terms {
                for (f, m) in monomial_product(x, y) {
                    *out.terms.entry(m).or_insert(C64::new(0.0, 0.0)) += f * a * b;
                }
            }
        }
        out.prune();
        out.classified()
    }
}

impl fmt::Display for PolyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:?},{:?}) * {}", c.re, c.im, m)?;
        }
        Ok(())
    }
}
