//! Full-rank sublattices of `Z_p^k` at finite precision.
//!
//! A lattice `L` with `p^N Z_p^k <= L <= Z_p^k` is stored in a canonical
//! upper-triangular echelon form: row `j` has leading entry `p^e_j` in column
//! `j` (a zero row when `e_j = N`) and entries above each pivot are reduced
//! modulo that pivot. Two lattices are equal exactly when their forms are.

use crate::matrix::Mat;
use crate::zmod::ZMod;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    ring: ZMod,
    basis: Mat,
    exps: Vec<u32>,
}

impl Lattice {
    /// The whole of `Z_p^k`.
    pub fn full(ring: ZMod, k: usize) -> Self {
        Lattice { ring, basis: Mat::identity(k), exps: vec![0; k] }
    }

    /// The lattice `p^N Z_p^k`, which is zero at precision `N`.
    pub fn zero(ring: ZMod, k: usize) -> Self {
        Lattice { ring, basis: Mat::zeros(k, k), exps: vec![ring.prec(); k] }
    }

    /// The lattice spanned by `gens` together with `p^N Z_p^k`.
    pub fn from_gens(ring: ZMod, k: usize, gens: &[Vec<u64>]) -> Self {
        let mut pool: Vec<Vec<u64>> = gens.iter().filter(|g| g.iter().any(|&x| x != 0)).cloned().collect();
        let mut basis = Mat::zeros(k, k);
        let mut exps = vec![ring.prec(); k];
        for j in 0..k {
            let best = pool
                .iter()
                .enumerate()
                .filter(|(_, r)| r[j] != 0)
                .min_by_key(|(_, r)| ring.val(r[j]))
                .map(|(i, _)| i);
            let Some(bi) = best else { continue };
            let mut piv = pool.swap_remove(bi);
            let (v, u) = ring.split(piv[j]);
            if u != 1 {
                let ui = ring.inv(u);
                for x in piv.iter_mut() {
                    *x = ring.mul(*x, ui);
                }
            }
            for r in pool.iter_mut() {
                if r[j] != 0 {
                    let f = ring.div_ppow(r[j], v);
                    for (x, &y) in r.iter_mut().zip(&piv) {
                        *x = ring.sub_mul(*x, f, y);
                    }
                }
            }
            if v > 0 {
                let s = ring.ppow(ring.prec() - v);
                pool.push(piv.iter().map(|&y| ring.mul(s, y)).collect());
            }
            pool.retain(|r| r.iter().any(|&x| x != 0));
            basis.row_mut(j).copy_from_slice(&piv);
            exps[j] = v;
        }
        let mut l = Lattice { ring, basis, exps };
        l.canonicalize();
        l
    }

    fn canonicalize(&mut self) {
        let k = self.exps.len();
        for j in 0..k {
            let e = self.exps[j];
            if e >= self.ring.prec() {
                continue;
            }
            for i in 0..j {
                let x = self.basis[(i, j)];
                let c = self.quot(x, e);
                if c != 0 {
                    self.basis.row_sub_mul(&self.ring, i, j, c);
                }
            }
        }
    }

    // Integer quotient of a representative by p^e.
    fn quot(&self, x: u64, e: u32) -> u64 {
        x / self.ring.p().pow(e)
    }

    pub fn ring(&self) -> &ZMod {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.exps.len()
    }

    /// Echelon basis; row `j` is zero when `exps()[j] = N`.
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    /// `log_p [Z_p^k : L]` (at most `k N`).
    pub fn index_exp(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Nonzero rows of the echelon basis.
    pub fn gens(&self) -> Vec<Vec<u64>> {
        (0..self.rank())
            .filter(|&j| self.exps[j] < self.ring.prec())
            .map(|j| self.basis.row(j).to_vec())
            .collect()
    }

    /// Canonical representative of `v + L`.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let mut v = v.to_vec();
        for j in 0..self.rank() {
            let e = self.exps[j];
            if e >= self.ring.prec() || v[j] == 0 {
                continue;
            }
            let c = self.quot(v[j], e);
            if c != 0 {
                for (x, &y) in v.iter_mut().zip(self.basis.row(j)) {
                    *x = self.ring.sub_mul(*x, c, y);
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.gens().iter().all(|g| other.contains(g))
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        let mut g = self.gens();
        g.extend(other.gens());
        Lattice::from_gens(self.ring, self.rank(), &g)
    }

    /// `p^v L`.
    pub fn scaled(&self, v: u32) -> Lattice {
        let s = self.ring.ppow(v);
        let g: Vec<Vec<u64>> = self.gens().iter().map(|r| r.iter().map(|&x| self.ring.mul(s, x)).collect()).collect();
        Lattice::from_gens(self.ring, self.rank(), &g)
    }

    /// Image under `v -> v M` for a row-vector action.
    pub fn map(&self, m: &Mat) -> Lattice {
        let g: Vec<Vec<u64>> = self.gens().iter().map(|r| m.vec_mul(&self.ring, r)).collect();
        Lattice::from_gens(self.ring, self.rank(), &g)
    }
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lattice").field("exps", &self.exps).field("basis", &self.basis).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_lattices() {
        let r = ZMod::new(2, 8).unwrap();
        let l = Lattice::from_gens(r, 2, &[vec![4, 0], vec![0, 4]]);
        assert_eq!(l.exps(), &[2, 2]);
        assert_eq!(l, Lattice::full(r, 2).scaled(2));
        assert!(l.contains(&[8, 12]));
        assert!(!l.contains(&[2, 0]));
        assert_eq!(Lattice::from_gens(r, 2, &[]), Lattice::zero(r, 2));
    }

    #[test]
    fn saturation_mod_pn() {
        // (2, 1) spans a lattice containing 2^7 * (2, 1) = (0, 128) mod 2^8, and so on.
        let r = ZMod::new(2, 8).unwrap();
        let l = Lattice::from_gens(r, 2, &[vec![2, 1]]);
        assert_eq!(l.index_exp(), 8);
        assert!(l.contains(&[0, 128]));
    }

    proptest! {
        #[test]
        fn canonical_under_reordering(
            gens in prop::collection::vec(prop::collection::vec(0u64..81, 3), 1..5),
            perm_seed in 0usize..24,
        ) {
            let r = ZMod::new(3, 4).unwrap();
            let gens: Vec<Vec<u64>> = gens.into_iter().map(|g| g.into_iter().map(|x| r.reduce(x)).collect()).collect();
            let a = Lattice::from_gens(r, 3, &gens);
            let mut shuffled = gens.clone();
            shuffled.rotate_left(perm_seed % gens.len());
            // Adding combinations of generators must not change the lattice.
            let extra: Vec<u64> = (0..3).map(|j| r.add(gens[0][j], r.mul(5, gens[gens.len() - 1][j]))).collect();
            shuffled.push(extra);
            let b = Lattice::from_gens(r, 3, &shuffled);
            prop_assert_eq!(&a, &b);
            for g in &gens {
                prop_assert!(a.contains(g));
            }
        }

        #[test]
        fn reduce_is_coset_invariant(v in prop::collection::vec(0u64..256, 2), w in prop::collection::vec(0u64..256, 2)) {
            let r = ZMod::new(2, 8).unwrap();
            let l = Lattice::from_gens(r, 2, &[vec![2, 6], vec![0, 8]]);
            let g = l.gens();
            let lw: Vec<u64> = g[0].iter().zip(&g[1]).map(|(&a, &b)| r.add(r.mul(a, w[0]), r.mul(b, w[1]))).collect();
            let v2: Vec<u64> = v.iter().zip(&lw).map(|(&a, &b)| r.add(a, b)).collect();
            prop_assert_eq!(l.reduce(&v), l.reduce(&v2));
        }
    }
}
