//! Vectorized Lindblad generators and their charge sectors.
//!
//! Density matrices are vectorized row-major: entry `rho[i][j]` sits at
//! `i * D + j`. With that convention `(A ⊗ B) vec(rho) = vec(A rho B^T)`.

use crate::linalg::{CsrMatrix, I, ZERO};
use crate::space::Operator;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Superoperator {
    /// Hilbert-space dimension `D`; the matrix is `D² × D²`.
    pub dim: usize,
    pub matrix: CsrMatrix,
    /// Optional excitation charge of each Hilbert basis state, used to split
    /// off the sector that holds steady states.
    pub charges: Option<Vec<i32>>,
}

impl Superoperator {
    /// `L = -i[H, .] + Σ_c D[c]`.
    pub fn lindblad(h: &Operator, jumps: &[Operator], charges: Option<Vec<i32>>) -> Self {
        let d = h.nrows();
        let mut h_eff = h.clone();
        for c in jumps {
            h_eff = h_eff.add(&c.adjoint().matmul(c).scale(C64::new(0.0, -0.5)));
        }
        let mut trips = Vec::new();
        for (r, c, v) in h_eff.triplets() {
            for k in 0..d {
                trips.push((r * d + k, c * d + k, -I * v));
                trips.push((k * d + r, k * d + c, I * v.conj()));
            }
        }
        for c in jumps {
            let entries: Vec<_> = c.triplets().collect();
            for &(r1, c1, v1) in &entries {
                for &(r2, c2, v2) in &entries {
                    trips.push((r1 * d + r2, c1 * d + c2, v1 * v2.conj()));
                }
            }
        }
        Self {
            dim: d,
            matrix: CsrMatrix::from_triplets(d * d, d * d, trips),
            charges,
        }
    }

    /// Hamiltonian-type superoperator `-i[H, .]` (no dissipation).
    pub fn commutator(h: &Operator) -> CsrMatrix {
        Self::lindblad(h, &[], None).matrix
    }

    /// Superoperator `rho -> A rho B^†`.
    pub fn sandwich_matrix(a: &Operator, b: &Operator) -> CsrMatrix {
        let d = a.nrows();
        let ea: Vec<_> = a.triplets().collect();
        let eb: Vec<_> = b.triplets().collect();
        let mut trips = Vec::with_capacity(ea.len() * eb.len());
        for &(r1, c1, v1) in &ea {
            for &(r2, c2, v2) in &eb {
                trips.push((r1 * d + r2, c1 * d + c2, v1 * v2.conj()));
            }
        }
        CsrMatrix::from_triplets(d * d, d * d, trips)
    }

    /// Largest violation of `Tr(L X) = 0` over basis matrices `X`, i.e. how
    /// far the adjoint is from annihilating the identity.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut col_sums = vec![ZERO; d * d];
        for i in 0..d {
            for (c, v) in self.matrix.row(i * d + i) {
                col_sums[c] += v;
            }
        }
        col_sums.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn full_sector(&self) -> Sector {
        Sector::new(self.dim, (0..self.dim * self.dim).collect(), self.matrix.clone())
    }

    /// The sector of coherences `|i><j|` with equal ket and bra charge. It
    /// contains every steady state and every `x rho x^†` built from it. If
    /// the charges are missing or the sector is not closed under `L`, the full
    /// space is returned.
    pub fn stationary_sector(&self) -> Sector {
        let Some(q) = &self.charges else {
            return self.full_sector();
        };
        let d = self.dim;
        let idx: Vec<usize> = (0..d * d).filter(|&k| q[k / d] == q[k % d]).collect();
        let (sub, leaked) = self.matrix.principal_submatrix(&idx);
        if leaked {
            return self.full_sector();
        }
        Sector::new(d, idx, sub)
    }
}

/// A subset of the vectorized operator space closed under a generator.
#[derive(Clone, Debug)]
pub struct Sector {
    dim: usize,
    indices: Vec<usize>,
    pos: Vec<usize>,
    pub matrix: CsrMatrix,
}

impl Sector {
    fn new(dim: usize, indices: Vec<usize>, matrix: CsrMatrix) -> Self {
        let mut pos = vec![usize::MAX; dim * dim];
        for (p, &k) in indices.iter().enumerate() {
            pos[k] = p;
        }
        Self {
            dim,
            indices,
            pos,
            matrix,
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.dim * self.dim
    }

    /// Global vectorized indices of the sector, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Position of the global vectorized index `k`, if it belongs here.
    pub fn position(&self, k: usize) -> Option<usize> {
        match self.pos[k] {
            usize::MAX => None,
            p => Some(p),
        }
    }

    /// Restricts another superoperator (same Hilbert space) to this sector.
    pub fn restrict(&self, m: &CsrMatrix) -> CsrMatrix {
        if self.is_full() {
            return m.clone();
        }
        m.principal_submatrix(&self.indices).0
    }

    /// Sector positions of the diagonal entries `rho[i][i]`.
    pub fn diagonal_positions(&self) -> Vec<usize> {
        (0..self.dim)
            .map(|i| self.pos[i * self.dim + i])
            .filter(|&p| p != usize::MAX)
            .collect()
    }

    pub fn from_dense(&self, rho: &[C64]) -> Vec<C64> {
        self.indices.iter().map(|&k| rho[k]).collect()
    }

    /// Row-major dense `D × D` matrix.
    pub fn to_dense(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim * self.dim];
        for (p, &k) in self.indices.iter().enumerate() {
            out[k] = v[p];
        }
        out
    }

    pub fn trace(&self, v: &[C64]) -> C64 {
        (0..self.dim)
            .filter_map(|i| self.position(i * self.dim + i))
            .map(|p| v[p])
            .sum()
    }

    /// Weight vector `w` with `Tr(O rho) = Σ_p w_p v_p`.
    pub fn weights(&self, op: &Operator) -> Vec<C64> {
        let d = self.dim;
        self.indices.iter().map(|&k| op.get(k % d, k / d)).collect()
    }

    /// `x rho x^†` restricted to the sector.
    pub fn sandwich(&self, x: &Operator, v: &[C64]) -> Vec<C64> {
        self.sandwich2(x, v, x)
    }

    /// `x rho y^†` restricted to the sector.
    pub fn sandwich2(&self, x: &Operator, v: &[C64], y: &Operator) -> Vec<C64> {
        let d = self.dim;
        let rho = self.to_dense(v);
        // left = x rho
        let mut left = vec![ZERO; d * d];
        for r in 0..d {
            let out = &mut left[r * d..(r + 1) * d];
            for (k, xv) in x.row(r) {
                let src = &rho[k * d..(k + 1) * d];
                for j in 0..d {
                    out[j] += xv * src[j];
                }
            }
        }
        self.indices
            .iter()
            .map(|&k| {
                let (r, c) = (k / d, k % d);
                let lrow = &left[r * d..(r + 1) * d];
                y.row(c).map(|(j, yv)| lrow[j] * yv.conj()).sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{HilbertSpace, Mode, DEFAULT_DIM_CAP};

    fn small() -> (HilbertSpace, Operator, Vec<Operator>) {
        let s = HilbertSpace::new(&[Mode::A], 1, &[2], DEFAULT_DIM_CAP).unwrap();
        let a = s.annihilation(Mode::A).unwrap();
        let sm = s.sigma(0);
        let h = sm.adjoint().matmul(&a).add(&a.adjoint().matmul(&sm));
        let jumps = vec![a.scale(C64::new(0.5, 0.0)), sm.adjoint().scale(C64::new(0.2, 0.0))];
        (s, h, jumps)
    }

    #[test]
    fn lindblad_matches_direct_action() {
        let (s, h, jumps) = small();
        let d = s.dim();
        let l = Superoperator::lindblad(&h, &jumps, None);
        assert!(l.trace_defect() < 1e-14);
        // a non-Hermitian test matrix
        let x: Vec<C64> = (0..d * d).map(|k| C64::new(k as f64 * 0.1, (k % 3) as f64)).collect();
        let got = l.matrix.apply(&x);
        let xm = CsrMatrix::from_triplets(d, d, (0..d * d).map(|k| (k / d, k % d, x[k])));
        let mut want = h.matmul(&xm).sub(&xm.matmul(&h)).scale(-I);
        for c in &jumps {
            let cd = c.adjoint();
            let cdc = cd.matmul(c);
            want = want
                .add(&c.matmul(&xm).matmul(&cd))
                .sub(&cdc.matmul(&xm).add(&xm.matmul(&cdc)).scale(C64::new(0.5, 0.0)));
        }
        for k in 0..d * d {
            assert!((got[k] - want.get(k / d, k % d)).norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_sector_is_closed() {
        let (s, h, jumps) = small();
        let l = Superoperator::lindblad(&h, &jumps, Some(s.charges()));
        let sec = l.stationary_sector();
        assert!(!sec.is_full());
        // charges 0,1,1,2 → 1 + 4 + 1 sector entries
        assert_eq!(sec.len(), 6);
        assert_eq!(sec.diagonal_positions().len(), 4);
    }

    #[test]
    fn sandwich_and_weights() {
        let (s, _, _) = small();
        let d = s.dim();
        let a = s.annihilation(Mode::A).unwrap();
        let sec = Superoperator::lindblad(&CsrMatrix::zeros(d, d), &[], None).full_sector();
        // rho = |1,g><1,g|
        let one = s.index(&[1, 0]);
        let mut rho = vec![ZERO; d * d];
        rho[one * d + one] = C64::new(1.0, 0.0);
        let v = sec.from_dense(&rho);
        let out = sec.sandwich(&a, &v);
        let vac = s.index(&[0, 0]);
        assert!((out[vac * d + vac] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let n = s.number(Mode::A).unwrap();
        let w = sec.weights(&n);
        let ev: C64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((ev - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
