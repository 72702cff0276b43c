//! Truncated tensor-product Hilbert spaces.
//!
//! Basis ordering is fixed: cavity modes first, in the order they were
//! requested, then emitters in index order. The first factor is the most
//! significant digit of the flat basis index. Emitter levels are numbered
//! `0 = |g>`, `1 = |e>`, `2 = |s>` (metastable shelf, three-level only).

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, ONE};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Operator = CsrMatrix;

pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;
pub const SHELF: usize = 2;

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Clockwise mode `a`.
    A,
    /// Counter-clockwise mode `b`.
    B,
    /// Idler mode of the parametric drive.
    Idler,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::A => "a",
            Mode::B => "b",
            Mode::Idler => "idler",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" | "cw" => Some(Mode::A),
            "b" | "ccw" => Some(Mode::B),
            "idler" | "i" => Some(Mode::Idler),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HilbertSpace {
    modes: Vec<Mode>,
    cutoff: usize,
    levels: Vec<usize>,
    dims: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    /// `levels[n]` is 2 or 3 for emitter `n`.
    pub fn new(modes: &[Mode], cutoff: usize, levels: &[usize], cap: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::param("fock_cutoff", "must be >= 1"));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::param("modes", format!("mode `{}` listed twice", m.label())));
            }
        }
        if let Some(l) = levels.iter().find(|&&l| l != 2 && l != 3) {
            return Err(Error::param("emitters", format!("unsupported level count {l}")));
        }
        let dims: Vec<usize> = modes
            .iter()
            .map(|_| cutoff + 1)
            .chain(levels.iter().copied())
            .collect();
        let mut dim: usize = 1;
        for &d in &dims {
            dim = dim.saturating_mul(d);
        }
        if dim > cap {
            return Err(Error::Capacity { dim, cap });
        }
        Ok(Self {
            modes: modes.to_vec(),
            cutoff,
            levels: levels.to_vec(),
            dims,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_emitters(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn has_mode(&self, m: Mode) -> bool {
        self.modes.contains(&m)
    }

    fn mode_factor(&self, m: Mode) -> Option<usize> {
        self.modes.iter().position(|&x| x == m)
    }

    fn emitter_factor(&self, n: usize) -> usize {
        assert!(n < self.levels.len(), "emitter index {n} out of range");
        self.modes.len() + n
    }

    /// Digits of a flat basis index, one per factor.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for f in (0..self.dims.len()).rev() {
            out[f] = index % self.dims[f];
            index /= self.dims[f];
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// Lifts a single-factor operator (given by its nonzero entries) to the
    /// full space.
    fn embed(&self, factor: usize, local: &[(usize, usize, C64)]) -> Operator {
        let mut trips = Vec::with_capacity(self.dim * local.len());
        for i in 0..self.dim {
            let digits = self.digits(i);
            for &(r, c, v) in local {
                if digits[factor] == c {
                    let mut out = digits.clone();
                    out[factor] = r;
                    trips.push((self.index(&out), i, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.dim, self.dim, trips)
    }

    /// Annihilation operator of mode `m`.
    pub fn annihilation(&self, m: Mode) -> Result<Operator> {
        let f = self
            .mode_factor(m)
            .ok_or_else(|| Error::UnknownChannel(m.label().into()))?;
        let local: Vec<_> = (1..=self.cutoff)
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect();
        Ok(self.embed(f, &local))
    }

    pub fn number(&self, m: Mode) -> Result<Operator> {
        let a = self.annihilation(m)?;
        Ok(a.adjoint().matmul(&a))
    }

    /// `|to><from|` on emitter `n`.
    pub fn transition(&self, n: usize, to: usize, from: usize) -> Operator {
        let f = self.emitter_factor(n);
        assert!(to < self.levels[n] && from < self.levels[n]);
        self.embed(f, &[(to, from, ONE)])
    }

    /// Lowering operator `|g><e|` of emitter `n`.
    pub fn sigma(&self, n: usize) -> Operator {
        self.transition(n, GROUND, EXCITED)
    }

    pub fn projector(&self, n: usize, level: usize) -> Operator {
        self.transition(n, level, level)
    }

    /// Excitation charge of every basis state: photons in `a`, `b` and
    /// excited emitters count `+1`, idler photons `-1`, shelf and ground `0`.
    /// Every term of the model conserves the charge of kets and bras up to a
    /// common shift, which is what makes sector reduction possible.
    pub fn charges(&self) -> Vec<i32> {
        (0..self.dim)
            .map(|i| {
                let d = self.digits(i);
                let mut q = 0i32;
                for (f, m) in self.modes.iter().enumerate() {
                    q += match m {
                        Mode::Idler => -(d[f] as i32),
                        _ => d[f] as i32,
                    };
                }
                for n in 0..self.levels.len() {
                    if d[self.modes.len() + n] == EXCITED {
                        q += 1;
                    }
                }
                q
            })
            .collect()
    }

    /// Basis permutation exchanging the `a` and `b` digits.
    pub fn swap_ab_permutation(&self) -> Option<Vec<usize>> {
        let fa = self.mode_factor(Mode::A)?;
        let fb = self.mode_factor(Mode::B)?;
        Some(
            (0..self.dim)
                .map(|i| {
                    let mut d = self.digits(i);
                    d.swap(fa, fb);
                    self.index(&d)
                })
                .collect(),
        )
    }

    /// The all-ground, zero-photon state index.
    pub fn vacuum_index(&self) -> usize {
        0
    }
}

/// `P O P^T` for a basis permutation `perm` (`new = perm[old]`).
pub fn permute(op: &Operator, perm: &[usize]) -> Operator {
    CsrMatrix::from_triplets(
        op.nrows(),
        op.ncols(),
        op.triplets().map(|(r, c, v)| (perm[r], perm[c], v)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let s = HilbertSpace::new(&[Mode::A, Mode::B], 1, &[2], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dim(), 8);
        let s = HilbertSpace::new(&[Mode::A, Mode::B], 2, &[2; 4], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dim(), 144);
        let s = HilbertSpace::new(&[Mode::A, Mode::Idler], 2, &[3], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dim(), 27);
    }

    #[test]
    fn capacity_error() {
        let r = HilbertSpace::new(&[Mode::A, Mode::B], 3, &[2; 6], 1000);
        assert!(matches!(r, Err(Error::Capacity { dim: 1024, cap: 1000 })));
    }

    #[test]
    fn digits_roundtrip_and_ordering() {
        let s = HilbertSpace::new(&[Mode::A, Mode::B], 2, &[2, 3], DEFAULT_DIM_CAP).unwrap();
        for i in 0..s.dim() {
            assert_eq!(s.index(&s.digits(i)), i);
        }
        // last emitter is the least significant factor
        assert_eq!(s.digits(1), vec![0, 0, 0, 1]);
    }

    #[test]
    fn commutator_of_annihilation() {
        let s = HilbertSpace::new(&[Mode::A], 3, &[], DEFAULT_DIM_CAP).unwrap();
        let a = s.annihilation(Mode::A).unwrap();
        let comm = a.matmul(&a.adjoint()).sub(&a.adjoint().matmul(&a));
        for k in 0..3 {
            assert!((comm.get(k, k) - ONE).norm() < 1e-14);
        }
        assert!(s.annihilation(Mode::B).is_err());
    }

    #[test]
    fn charges_are_consistent() {
        let s = HilbertSpace::new(&[Mode::A, Mode::Idler], 1, &[3], DEFAULT_DIM_CAP).unwrap();
        let q = s.charges();
        // |n_a=1, n_i=1, e> has charge 1 - 1 + 1
        let i = s.index(&[1, 1, EXCITED]);
        assert_eq!(q[i], 1);
        assert_eq!(q[s.index(&[0, 0, SHELF])], 0);
    }
}
