//! Smith normal form over the local ring `Z/p^N`.
//!
//! Because `Z/p^N` is local, a pivot of minimal valuation divides every other
//! entry of the remaining submatrix, so a single sweep per pivot suffices.
//! The result satisfies `P * A * Q = diag(p^v_0, p^v_1, ...)` with
//! `v_0 <= v_1 <= ...` and `v_i = N` standing for a zero diagonal entry.

use crate::matrix::Mat;
use crate::zmod::ZMod;

#[derive(Clone, Copy, Debug, Default)]
pub struct Track {
    pub rows: bool,
    pub cols: bool,
}

impl Track {
    pub const NONE: Track = Track { rows: false, cols: false };
    pub const ROWS: Track = Track { rows: true, cols: false };
    pub const COLS: Track = Track { rows: false, cols: true };
    pub const BOTH: Track = Track { rows: true, cols: true };
}

#[derive(Clone, Debug)]
pub struct Snf {
    /// Valuations of the diagonal, `min(rows, cols)` entries, ascending.
    pub vals: Vec<u32>,
    pub p: Option<Mat>,
    pub p_inv: Option<Mat>,
    pub q: Option<Mat>,
    pub q_inv: Option<Mat>,
    prec: u32,
}

impl Snf {
    /// Number of diagonal entries that are nonzero mod `p^N`.
    pub fn rank(&self) -> usize {
        self.vals.iter().take_while(|&&v| v < self.prec).count()
    }

    /// Valuation of the `i`-th diagonal entry, `N` past the end.
    pub fn val(&self, i: usize) -> u32 {
        self.vals.get(i).copied().unwrap_or(self.prec)
    }
}

pub fn snf(ring: &ZMod, a: &Mat, track: Track) -> Snf {
    let mut a = a.clone();
    let (m, n) = (a.rows(), a.cols());
    let mut p = track.rows.then(|| Mat::identity(m));
    let mut p_inv = track.rows.then(|| Mat::identity(m));
    let mut q = track.cols.then(|| Mat::identity(n));
    let mut q_inv = track.cols.then(|| Mat::identity(n));
    let prec = ring.prec();
    let mut vals = Vec::with_capacity(m.min(n));

    for t in 0..m.min(n) {
        // Pivot: entry of least valuation in the trailing block.
        let mut best = (prec, t, t);
        'search: for i in t..m {
            let row = a.row(i);
            for (j, &x) in row.iter().enumerate().skip(t) {
                if x != 0 {
                    let v = ring.val(x);
                    if v < best.0 {
                        best = (v, i, j);
                        if v == 0 {
                            break 'search;
                        }
                    }
                }
            }
        }
        let (v, pi, pj) = best;
        if v >= prec {
            break;
        }
        if pi != t {
            a.swap_rows(t, pi);
            if let Some(p) = p.as_mut() {
                p.swap_rows(t, pi);
            }
            if let Some(pi_) = p_inv.as_mut() {
                pi_.swap_cols(t, pi);
            }
        }
        if pj != t {
            a.swap_cols(t, pj);
            if let Some(q) = q.as_mut() {
                q.swap_cols(t, pj);
            }
            if let Some(qi) = q_inv.as_mut() {
                qi.swap_rows(t, pj);
            }
        }
        // Normalize the pivot to exactly p^v.
        let (_, u) = ring.split(a[(t, t)]);
        if u != 1 {
            let ui = ring.inv(u);
            a.scale_row(ring, t, ui);
            if let Some(p) = p.as_mut() {
                p.scale_row(ring, t, ui);
            }
            if let Some(pi_) = p_inv.as_mut() {
                pi_.scale_col(ring, t, u);
            }
        }
        // Clear the pivot column.
        for i in t + 1..m {
            let x = a[(i, t)];
            if x == 0 {
                continue;
            }
            let f = ring.div_ppow(x, v);
            a.row_sub_mul(ring, i, t, f);
            if let Some(p) = p.as_mut() {
                p.row_sub_mul(ring, i, t, f);
            }
            if let Some(pi_) = p_inv.as_mut() {
                // P^{-1} gains the inverse operation on the right: col_t += f col_i.
                pi_.col_sub_mul(ring, t, i, ring.neg(f));
            }
        }
        // Clear the pivot row; only row t changes in `a`.
        for j in t + 1..n {
            let x = a[(t, j)];
            if x == 0 {
                continue;
            }
            let f = ring.div_ppow(x, v);
            a[(t, j)] = 0;
            if let Some(q) = q.as_mut() {
                q.col_sub_mul(ring, j, t, f);
            }
            if let Some(qi) = q_inv.as_mut() {
                qi.row_sub_mul(ring, t, j, ring.neg(f));
            }
        }
        vals.push(v);
    }
    while vals.len() < m.min(n) {
        vals.push(prec);
    }
    Snf { vals, p, p_inv, q, q_inv, prec }
}

/// Solves `A x = b` over `Z/p^N`, returning one solution if any exists.
pub fn solve(ring: &ZMod, a: &Mat, b: &[u64]) -> Option<Vec<u64>> {
    assert_eq!(a.rows(), b.len());
    let s = snf(ring, a, Track::BOTH);
    let pb = s.p.as_ref().unwrap().mul_vec(ring, b);
    let n = a.cols();
    let mut y = vec![0u64; n];
    for (i, &c) in pb.iter().enumerate() {
        let v = s.val(i);
        if ring.val(c) < v {
            return None;
        }
        if i < n && v < ring.prec() {
            y[i] = ring.div_ppow(c, v);
        }
    }
    Some(s.q.as_ref().unwrap().mul_vec(ring, &y))
}

/// Inverse of a square matrix over `Z/p^N`, if its determinant is a unit.
pub fn inverse(ring: &ZMod, a: &Mat) -> Option<Mat> {
    assert_eq!(a.rows(), a.cols());
    let s = snf(ring, a, Track::BOTH);
    if s.vals.iter().any(|&v| v != 0) {
        return None;
    }
    Some(s.q.as_ref().unwrap().mul(ring, s.p.as_ref().unwrap()))
}

/// Whether a square matrix is invertible over `Z/p^N` (unit determinant).
pub fn is_unit(ring: &ZMod, a: &Mat) -> bool {
    a.rows() == a.cols() && snf(ring, a, Track::NONE).vals.iter().all(|&v| v == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_of(ring: &ZMod, a: &Mat, s: &Snf) -> Mat {
        s.p.as_ref().unwrap().mul(ring, a).mul(ring, s.q.as_ref().unwrap())
    }

    #[test]
    fn small_example() {
        let r = ZMod::new(2, 6).unwrap();
        let a = Mat::from_i64(&r, &[vec![2, 4], vec![6, 8]]);
        let s = snf(&r, &a, Track::BOTH);
        // det = -8, gcd of entries = 2: diag(2, 4).
        assert_eq!(s.vals, vec![1, 2]);
        let d = diag_of(&r, &a, &s);
        assert_eq!(d, Mat::from_i64(&r, &[vec![2, 0], vec![0, 4]]));
    }

    #[test]
    fn zero_and_empty() {
        let r = ZMod::new(3, 4).unwrap();
        let s = snf(&r, &Mat::zeros(3, 2), Track::BOTH);
        assert_eq!(s.vals, vec![4, 4]);
        assert_eq!(s.rank(), 0);
        let s = snf(&r, &Mat::zeros(0, 5), Track::BOTH);
        assert!(s.vals.is_empty());
    }

    proptest! {
        #[test]
        fn certificate_holds(entries in prop::collection::vec(-40i64..40, 12), p in prop::sample::select(vec![2u64, 3])) {
            let r = ZMod::new(p, 7).unwrap();
            let rows: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
            let a = Mat::from_i64(&r, &rows);
            let s = snf(&r, &a, Track::BOTH);
            let d = diag_of(&r, &a, &s);
            for i in 0..3 {
                for j in 0..4 {
                    let want = if i == j { r.ppow(s.vals[i]) } else { 0 };
                    prop_assert_eq!(d[(i, j)], want);
                }
            }
            prop_assert_eq!(s.p.as_ref().unwrap().mul(&r, s.p_inv.as_ref().unwrap()), Mat::identity(3));
            prop_assert_eq!(s.q.as_ref().unwrap().mul(&r, s.q_inv.as_ref().unwrap()), Mat::identity(4));
            prop_assert!(s.vals.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn solve_finds_solutions(entries in prop::collection::vec(-9i64..9, 9), x in prop::collection::vec(0u64..100, 3)) {
            let r = ZMod::new(2, 8).unwrap();
            let rows: Vec<Vec<i64>> = entries.chunks(3).map(|c| c.to_vec()).collect();
            let a = Mat::from_i64(&r, &rows);
            let b = a.mul_vec(&r, &x);
            let y = solve(&r, &a, &b).expect("consistent system");
            prop_assert_eq!(a.mul_vec(&r, &y), b);
        }
    }
}
