//! Finite abelian p-groups arising as subquotients of `(Z/p^N)^k`.
//!
//! Cohomology groups, hom spaces and quotient modules are all of the form
//! `Top / Bottom` with `Bottom <= Top <= (Z/p^N)^k`. `Top` is described by an
//! adapted basis `u_i` with exponents `t_i` (`Top = span p^t_i u_i`) and
//! `Bottom` by generators. [`Subquotient`] diagonalizes the quotient and
//! provides exact coordinates and lifts.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::snf::{snf, solve, Track};
use crate::zmod::ZMod;

/// A lattice `span{p^t_i u_i}` given by an invertible basis `U` (columns).
#[derive(Clone, Debug)]
pub struct Adapted {
    pub basis: Mat,
    pub basis_inv: Mat,
    pub t: Vec<u32>,
}

impl Adapted {
    pub fn full(k: usize) -> Self {
        Adapted { basis: Mat::identity(k), basis_inv: Mat::identity(k), t: vec![0; k] }
    }

    /// Number of coordinates `i` with `t_i < N`.
    pub fn active(&self, ring: &ZMod) -> usize {
        self.t.iter().filter(|&&t| t < ring.prec()).count()
    }
}

/// The solutions `x` of `A x = 0` where output row `r` only matters modulo
/// `p^out[r]` (`None` means every row modulo `p^N`).
///
/// With `pure` set, solutions are taken in `Z_p^k` rather than modulo `p^N`:
/// directions on which `A` is injective mod `p^N` contribute nothing. This is
/// the right notion for lattice coefficients, where the kernel is a direct
/// summand.
pub fn kernel(ring: &ZMod, a: &Mat, out: Option<&[u32]>, pure: bool) -> Adapted {
    let n = ring.prec();
    let mut a = a.clone();
    if let Some(out) = out {
        for (r, &f) in out.iter().enumerate() {
            if f < n {
                a.scale_row(ring, r, ring.ppow(n - f));
            }
        }
    }
    let s = snf(ring, &a, Track::COLS);
    let t = (0..a.cols())
        .map(|i| {
            let v = s.val(i);
            if pure {
                if v >= n { 0 } else { n }
            } else {
                n - v.min(n)
            }
        })
        .collect();
    Adapted { basis: s.q.unwrap(), basis_inv: s.q_inv.unwrap(), t }
}

/// `Top / Bottom` as `(+)_j Z/p^inv_j` with all `inv_j > 0`.
#[derive(Clone, Debug)]
pub struct Subquotient {
    ring: ZMod,
    top: Adapted,
    active: Vec<usize>,
    inv: Vec<u32>,
    // Rows of P' restricted to the nontrivial summands (x-coordinates -> z).
    coord: Mat,
    gens: Vec<Vec<u64>>,
}

impl Subquotient {
    /// `bottom` holds generators of `Bottom` as columns; each must lie in `Top`.
    pub fn new(ring: ZMod, top: Adapted, bottom: &Mat) -> Result<Self> {
        let n = ring.prec();
        let k = top.t.len();
        assert_eq!(bottom.rows(), k);
        let active: Vec<usize> = (0..k).filter(|&i| top.t[i] < n).collect();
        let a = active.len();
        let ub = top.basis_inv.mul(&ring, bottom);
        let g = bottom.cols();
        let mut w = Mat::zeros(a, g + a);
        for (r, &i) in active.iter().enumerate() {
            let ti = top.t[i];
            for j in 0..g {
                let y = ub[(i, j)];
                if ring.val(y) < ti {
                    return Err(Error::Consistency("bottom generator outside top lattice".into()));
                }
                w[(r, j)] = ring.div_ppow(y, ti);
            }
            w[(r, g + r)] = ring.ppow(n - ti);
        }
        let s = snf(&ring, &w, Track::ROWS);
        let p = s.p.as_ref().unwrap();
        let p_inv = s.p_inv.as_ref().unwrap();
        let mut inv = Vec::new();
        let mut rows = Vec::new();
        let mut gens = Vec::new();
        for j in 0..a {
            let v = s.val(j);
            if v == 0 {
                continue;
            }
            inv.push(v);
            rows.push(p.row(j).to_vec());
            // Generator: x = P'^{-1} e_j, then y = U diag(p^t) x.
            let mut y = vec![0u64; k];
            for (r, &i) in active.iter().enumerate() {
                let x = ring.mul(p_inv[(r, j)], ring.ppow(top.t[i]));
                if x == 0 {
                    continue;
                }
                for (yy, c) in y.iter_mut().zip(0..k) {
                    *yy = ring.add(*yy, ring.mul(top.basis[(c, i)], x));
                }
            }
            gens.push(y);
        }
        let coord = if rows.is_empty() { Mat::zeros(0, a) } else { Mat::from_rows(&rows, a) };
        Ok(Subquotient { ring, top, active, inv, coord, gens })
    }

    pub fn ring(&self) -> &ZMod {
        &self.ring
    }

    /// Exponents of the cyclic factors, ascending. `N` marks a free summand.
    pub fn invariants(&self) -> &[u32] {
        &self.inv
    }

    /// `log_p` of the order.
    pub fn order_exp(&self) -> u32 {
        self.inv.iter().sum()
    }

    /// `log_p` of the exponent (0 for the trivial group).
    pub fn exponent_exp(&self) -> u32 {
        self.inv.iter().copied().max().unwrap_or(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.inv.is_empty()
    }

    /// Ambient representatives of the cyclic generators.
    pub fn gens(&self) -> &[Vec<u64>] {
        &self.gens
    }

    pub fn ambient_dim(&self) -> usize {
        self.top.t.len()
    }

    /// Whether `y` lies in `Top`.
    pub fn in_top(&self, y: &[u64]) -> bool {
        let ux = self.top.basis_inv.mul_vec(&self.ring, y);
        ux.iter().zip(&self.top.t).all(|(&x, &t)| self.ring.val(x) >= t)
    }

    /// Coordinates of `y + Bottom`, entry `j` reduced modulo `p^inv_j`.
    pub fn coords(&self, y: &[u64]) -> Result<Vec<u64>> {
        let ux = self.top.basis_inv.mul_vec(&self.ring, y);
        let mut x = Vec::with_capacity(self.active.len());
        for (i, (&v, &t)) in ux.iter().zip(&self.top.t).enumerate() {
            if t >= self.ring.prec() {
                continue;
            }
            if self.ring.val(v) < t {
                return Err(Error::Consistency(format!("element outside top lattice (coordinate {i})")));
            }
            x.push(self.ring.div_ppow(v, t));
        }
        let z = self.coord.mul_vec(&self.ring, &x);
        Ok(z.iter().zip(&self.inv).map(|(&c, &e)| self.reduce_coord(c, e)).collect())
    }

    fn reduce_coord(&self, c: u64, e: u32) -> u64 {
        if e >= self.ring.prec() {
            c
        } else {
            c % self.ring.p().pow(e)
        }
    }

    /// An ambient representative of the element with coordinates `z`.
    pub fn lift(&self, z: &[u64]) -> Vec<u64> {
        let mut y = vec![0u64; self.ambient_dim()];
        for (g, &c) in self.gens.iter().zip(z) {
            if c == 0 {
                continue;
            }
            for (yy, &gg) in y.iter_mut().zip(g) {
                *yy = self.ring.add(*yy, self.ring.mul(c, gg));
            }
        }
        y
    }

    pub fn group(&self) -> FinAb {
        FinAb::new(self.ring.p(), self.inv.clone())
    }
}

/// The abstract group `(+)_j Z/p^e_j`, elements as coordinate vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinAb {
    p: u64,
    inv: Vec<u32>,
}

impl FinAb {
    pub fn new(p: u64, inv: Vec<u32>) -> Self {
        FinAb { p, inv }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn invariants(&self) -> &[u32] {
        &self.inv
    }

    pub fn order_exp(&self) -> u32 {
        self.inv.iter().sum()
    }

    pub fn order(&self) -> Option<u64> {
        self.p.checked_pow(self.order_exp())
    }

    fn modulus(&self, j: usize) -> u64 {
        self.p.pow(self.inv[j])
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        (0..self.inv.len()).map(|j| (a[j] + b[j]) % self.modulus(j)).collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        (0..self.inv.len()).map(|j| (self.modulus(j) - a[j]) % self.modulus(j)).collect()
    }

    pub fn scale(&self, c: u64, a: &[u64]) -> Vec<u64> {
        (0..self.inv.len())
            .map(|j| ((c as u128 * a[j] as u128) % self.modulus(j) as u128) as u64)
            .collect()
    }

    /// Dense index of an element in mixed radix (first coordinate fastest).
    pub fn index_of(&self, a: &[u64]) -> usize {
        let mut idx = 0usize;
        for j in (0..self.inv.len()).rev() {
            idx = idx * self.modulus(j) as usize + a[j] as usize;
        }
        idx
    }

    pub fn element(&self, mut idx: usize) -> Vec<u64> {
        (0..self.inv.len())
            .map(|j| {
                let m = self.modulus(j) as usize;
                let c = idx % m;
                idx /= m;
                c as u64
            })
            .collect()
    }

    /// All elements in index order, refusing groups larger than `cap`.
    pub fn elements(&self, cap: usize) -> Result<Vec<Vec<u64>>> {
        let size = self.order().map(|o| o as usize).filter(|&o| o <= cap);
        let size = size.ok_or(Error::CapExceeded { what: "group enumeration", needed: usize::MAX, cap })?;
        Ok((0..size).map(|i| self.element(i)).collect())
    }

    /// Embeds into `(Z/p^N)^r` via `x_j -> p^(N - e_j) x_j`.
    fn embed(&self, ring: &ZMod, a: &[u64]) -> Vec<u64> {
        a.iter().zip(&self.inv).map(|(&x, &e)| ring.mul(ring.reduce(x), ring.ppow(ring.prec() - e))).collect()
    }

    fn ring(&self) -> ZMod {
        let n = self.inv.iter().copied().max().unwrap_or(1).max(1);
        ZMod::new(self.p, n).expect("exponent within precision")
    }

    /// Invariants of the subgroup generated by `gens`, ascending.
    pub fn subgroup_invariants(&self, gens: &[Vec<u64>]) -> Vec<u32> {
        if gens.is_empty() || self.inv.is_empty() {
            return Vec::new();
        }
        let ring = self.ring();
        let rows: Vec<Vec<u64>> = gens.iter().map(|g| self.embed(&ring, g)).collect();
        let m = Mat::from_rows(&rows, self.inv.len());
        let s = snf(&ring, &m, Track::NONE);
        let mut out: Vec<u32> = s.vals.iter().filter(|&&v| v < ring.prec()).map(|&v| ring.prec() - v).collect();
        out.sort_unstable();
        out
    }

    /// Coefficients `c` with `sum c_i gens_i = target`, if any.
    pub fn solve(&self, gens: &[Vec<u64>], target: &[u64]) -> Option<Vec<u64>> {
        if self.inv.is_empty() {
            return Some(vec![0; gens.len()]);
        }
        let ring = self.ring();
        let cols: Vec<Vec<u64>> = gens.iter().map(|g| self.embed(&ring, g)).collect();
        let a = if cols.is_empty() { Mat::zeros(self.inv.len(), 0) } else { Mat::from_cols(&cols, self.inv.len()) };
        let b = self.embed(&ring, target);
        solve(&ring, &a, &b)
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_of_lattices() {
        // Top = Z^2, Bottom = span{(2, 0), (0, 4), (2, 4)} -> Z/2 x Z/4.
        let r = ZMod::new(2, 10).unwrap();
        let bottom = Mat::from_cols(&[vec![2, 0], vec![0, 4], vec![2, 4]], 2);
        let q = Subquotient::new(r, Adapted::full(2), &bottom).unwrap();
        let mut inv = q.invariants().to_vec();
        inv.sort();
        assert_eq!(inv, vec![1, 2]);
        assert_eq!(q.coords(&[2, 4]).unwrap(), vec![0, 0]);
        for g in q.gens().to_vec() {
            let c = q.coords(&g).unwrap();
            assert_eq!(c.iter().filter(|&&x| x != 0).count(), 1);
        }
        // Coordinates are additive and lifts are sections.
        let z = q.coords(&[1, 3]).unwrap();
        assert_eq!(q.coords(&q.lift(&z)).unwrap(), z);
    }

    #[test]
    fn kernel_modular_and_pure() {
        // A = (2): kernel mod 2^4 is 8 Z, pure kernel is 0.
        let r = ZMod::new(2, 4).unwrap();
        let a = Mat::from_i64(&r, &[vec![2]]);
        assert_eq!(kernel(&r, &a, None, false).t, vec![3]);
        assert_eq!(kernel(&r, &a, None, true).t, vec![4]);
        // Output only matters mod 2: kernel is everything.
        assert_eq!(kernel(&r, &a, Some(&[1]), false).t, vec![0]);
    }

    #[test]
    fn subgroups() {
        let g = FinAb::new(2, vec![1, 3]);
        assert_eq!(g.subgroup_invariants(&[vec![0, 2]]), vec![2]);
        assert_eq!(g.subgroup_invariants(&[vec![1, 4], vec![0, 4]]), vec![1, 1]);
        let c = g.solve(&[vec![1, 2], vec![0, 1]], &[1, 7]).unwrap();
        let s = g.add(&g.scale(c[0], &[1, 2]), &g.scale(c[1], &[0, 1]));
        assert_eq!(s, vec![1, 7]);
        assert!(g.solve(&[vec![0, 2]], &[0, 1]).is_none());
        for i in 0..16 {
            assert_eq!(g.index_of(&g.element(i)), i);
        }
    }
}
