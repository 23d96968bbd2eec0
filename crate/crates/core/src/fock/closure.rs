use super::CMatrix;

/// Real Lie closure of a set of skew-hermitian matrices.
///
/// Used as a numerical cross-check of symbolic closures: the truncated
/// algebra is generally larger than the symbolic one, but a symbolic
/// "fails" must never be contradicted by matrices acting on a mode the
/// symbolic closure never reaches.
#[derive(Clone, Debug)]
pub struct MatrixLieBasis {
    basis: Vec<CMatrix>,
    ortho: Vec<CMatrix>,
    tol: f64,
    dim_cap_hit: bool,
}

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.dotc(b).re
}

impl MatrixLieBasis {
    pub fn closure(generators: &[CMatrix], tol: f64, dim_cap: usize) -> Self {
        let n = generators.first().map_or(0, |g| g.nrows());
        // u(n) has real dimension n^2.
        let full = (n * n).min(dim_cap);
        let mut out = Self { basis: Vec::new(), ortho: Vec::new(), tol, dim_cap_hit: false };
        for g in generators {
            if out.dim() == full {
                break;
            }
            out.try_insert(g.clone());
        }
        let mut i = 1;
        'outer: while i < out.basis.len() {
            for j in 0..i {
                if out.dim() == full {
                    break 'outer;
                }
                let br = &out.basis[i] * &out.basis[j] - &out.basis[j] * &out.basis[i];
                out.try_insert(br);
            }
            i += 1;
        }
        out.dim_cap_hit = out.dim() == dim_cap && dim_cap < n * n;
        out
    }

    fn residual(&self, x: &CMatrix) -> CMatrix {
        let mut r = x.clone();
        for _ in 0..2 {
            for e in &self.ortho {
                let c = real_inner(e, &r);
                r -= e.scale(c);
            }
        }
        r
    }

    fn try_insert(&mut self, x: CMatrix) -> bool {
        let n = x.norm();
        if n == 0.0 {
            return false;
        }
        let r = self.residual(&x);
        let rn = r.norm();
        if rn <= self.tol * n {
            return false;
        }
        self.ortho.push(r.unscale(rn));
        self.basis.push(x.unscale(n));
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_cap_hit(&self) -> bool {
        self.dim_cap_hit
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn contains(&self, x: &CMatrix, tol: f64) -> bool {
        let n = x.norm();
        n == 0.0 || self.residual(x).norm() <= tol * n
    }
}
