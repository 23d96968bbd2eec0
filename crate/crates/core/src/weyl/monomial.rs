use std::fmt;

/// A canonically ordered product `q_1^{a_1} p_1^{b_1} ... q_m^{a_m} p_m^{b_m}`.
///
/// Within a mode every `q` precedes every `p`; modes appear in index order.
/// Operators on different modes commute, so this ordering is a normal form
/// once the per-mode reordering `p q = q p - i` has been applied.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn identity(mode_count: usize) -> Self {
        Self { exps: vec![(0, 0); mode_count] }
    }

    pub fn from_exponents(exps: Vec<(u32, u32)>) -> Self {
        Self { exps }
    }

    /// `q_mode^a p_mode^b` with all other exponents zero.
    pub fn single(mode_count: usize, mode: usize, a: u32, b: u32) -> Self {
        let mut m = Self::identity(mode_count);
        m.exps[mode] = (a, b);
        m
    }

    pub fn mode_count(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    pub fn exponent(&self, mode: usize) -> (u32, u32) {
        self.exps[mode]
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(a, b)| a + b).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.exps.iter().all(|&(a, b)| a == 0 && b == 0)
    }

    /// Modes carrying a nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a + b > 0)
            .map(|(i, _)| i)
    }

    /// Enumerates every monomial on `mode_count` modes with total degree at
    /// most `max_degree`, optionally restricted to a subset of modes.
    pub fn all_up_to(mode_count: usize, modes: &[usize], max_degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut current = Self::identity(mode_count);
        fn rec(
            modes: &[usize],
            idx: usize,
            remaining: u32,
            current: &mut Monomial,
            out: &mut Vec<Monomial>,
        ) {
            if idx == modes.len() {
                out.push(current.clone());
                return;
            }
            let mode = modes[idx];
            for a in 0..=remaining {
                for b in 0..=(remaining - a) {
                    current.exps[mode] = (a, b);
                    rec(modes, idx + 1, remaining - a - b, current, out);
                }
            }
            current.exps[mode] = (0, 0);
        }
        rec(modes, 0, max_degree, &mut current, &mut out);
        out.sort();
        out
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        let mut first = true;
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            for (sym, e) in [('q', a), ('p', b)] {
                if e == 0 {
                    continue;
                }
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{}{}^{}", sym, i + 1, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_match_binomials() {
        // C(2m + d, d) monomials of degree <= d on m modes.
        assert_eq!(Monomial::all_up_to(1, &[0], 4).len(), 15);
        assert_eq!(Monomial::all_up_to(2, &[0, 1], 4).len(), 70);
        assert_eq!(Monomial::all_up_to(3, &[1, 2], 4).len(), 70);
    }

    #[test]
    fn display_uses_one_based_modes() {
        let m = Monomial::from_exponents(vec![(2, 1), (0, 3)]);
        assert_eq!(m.to_string(), "q1^2 p1^1 p2^3");
        assert_eq!(Monomial::identity(2).to_string(), "1");
    }
}
