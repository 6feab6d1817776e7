//! Dense matrices over `Z/p^N`.

use std::fmt;

use crate::zmod::ZMod;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u64>], cols: usize) -> Self {
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn from_i64(ring: &ZMod, rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = ring.from_i64(x);
            }
        }
        m
    }

    pub fn from_cols(cols: &[Vec<u64>], rows: usize) -> Self {
        let mut m = Mat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &x) in c.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, ring: &ZMod, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    if b != 0 {
                        *d = ring.add(*d, ring.mul(a, b));
                    }
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, ring: &ZMod, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| if a == 0 || b == 0 { acc } else { ring.add(acc, ring.mul(a, b)) })
            })
            .collect()
    }

    /// `v * self` for a row vector.
    pub fn vec_mul(&self, ring: &ZMod, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                if b != 0 {
                    *o = ring.add(*o, ring.mul(a, b));
                }
            }
        }
        out
    }

    pub fn add(&self, ring: &ZMod, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| ring.add(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, ring: &ZMod, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| ring.sub(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, ring: &ZMod, c: u64) -> Mat {
        let data = self.data.iter().map(|&a| ring.mul(a, c)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// Reinterpret the entries in a ring of the same prime and different precision.
    pub fn reduce_to(&self, ring: &ZMod) -> Mat {
        let data = self.data.iter().map(|&a| ring.reduce(a)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[dst] -= f * row[src]`.
    #[inline]
    pub fn row_sub_mul(&mut self, ring: &ZMod, dst: usize, src: usize, f: u64) {
        if f == 0 || dst == src {
            return;
        }
        let c = self.cols;
        let (s, d) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * c);
            (&lo[src * c..src * c + c], &mut hi[..c])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * c);
            (&hi[..c] as &[u64], &mut lo[dst * c..dst * c + c])
        };
        for (x, &y) in d.iter_mut().zip(s) {
            if y != 0 {
                *x = ring.sub_mul(*x, f, y);
            }
        }
    }

    /// `col[dst] -= f * col[src]`.
    #[inline]
    pub fn col_sub_mul(&mut self, ring: &ZMod, dst: usize, src: usize, f: u64) {
        if f == 0 || dst == src {
            return;
        }
        for i in 0..self.rows {
            let y = self.data[i * self.cols + src];
            if y != 0 {
                let x = &mut self.data[i * self.cols + dst];
                *x = ring.sub_mul(*x, f, y);
            }
        }
    }

    pub fn scale_row(&mut self, ring: &ZMod, i: usize, f: u64) {
        for x in self.row_mut(i) {
            *x = ring.mul(*x, f);
        }
    }

    pub fn scale_col(&mut self, ring: &ZMod, j: usize, f: u64) {
        for i in 0..self.rows {
            let x = &mut self.data[i * self.cols + j];
            *x = ring.mul(*x, f);
        }
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut m = Mat::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            m.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            m.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        m
    }

    /// Vertical concatenation.
    pub fn vcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn entries(&self) -> &[u64] {
        &self.data
    }

    pub fn to_i64_rows(&self, ring: &ZMod) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|&x| ring.to_i64(x)).collect()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = u64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(16) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(16)])?;
        }
        write!(f, "]")
    }
}
