//! Normalized bar cochains, coboundary matrices and cohomology groups.
//!
//! An `m`-cochain is stored densely over the `(|G|-1)^m` tuples of
//! non-identity elements; entry `t * k + i` is coordinate `i` of the value at
//! tuple `t`, where tuples are numbered in base `|G|-1` with the first
//! argument most significant. Identity arguments are implicitly zero.
//!
//! `(d c)(g_1..g_{m+1}) = c(g_2..) + sum_i (-1)^i c(.., g_i g_{i+1}, ..)
//! + (-1)^{m+1} c(g_1..g_m).g_{m+1}`.

use std::sync::OnceLock;

use crate::abelian::{kernel, FinAb, Subquotient};
use crate::error::{Error, Result};
use crate::finite_group::GroupTable;
use crate::lattice_module::{GModule, QuotientModule, Uniserial};
use crate::matrix::Mat;
use crate::snf::{snf, solve, Track};
use crate::zmod::ZMod;

/// Default cap on matrix entries for a single coboundary matrix.
pub const DEFAULT_MEMORY_CAP: usize = 64_000_000;

/// The entry cap, overridable through `COCLASS_MEMORY_CAP`.
pub fn memory_cap() -> usize {
    std::env::var("COCLASS_MEMORY_CAP").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_MEMORY_CAP)
}

/// Number of normalized `m`-tuples.
pub fn tuple_count(order: usize, m: usize) -> usize {
    (order - 1).pow(m as u32)
}

/// Index of a tuple of non-identity elements.
pub fn tuple_index(order: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &g| acc * (order - 1) + (g - 1))
}

/// The tuple with the given index.
pub fn tuple_at(order: usize, m: usize, mut idx: usize) -> Vec<usize> {
    let mut t = vec![0; m];
    for i in (0..m).rev() {
        t[i] = idx % (order - 1) + 1;
        idx /= order - 1;
    }
    t
}

/// Dimension of `C^m(G, V)` as a coordinate space.
pub fn cochain_dim(order: usize, k: usize, m: usize) -> usize {
    tuple_count(order, m) * k
}

fn check_cap(what: &'static str, rows: usize, cols: usize) -> Result<()> {
    let needed = rows.saturating_mul(cols);
    let cap = memory_cap();
    if needed > cap {
        return Err(Error::CapExceeded { what, needed, cap });
    }
    Ok(())
}

/// The matrix of `d^m: C^m -> C^{m+1}` acting on column vectors.
pub fn coboundary_matrix(group: &GroupTable, module: &GModule, m: usize) -> Result<Mat> {
    let n = group.order();
    let k = module.dim();
    let ring = module.ring();
    if n == 1 {
        return Ok(Mat::zeros(0, cochain_dim(n, k, m)));
    }
    let rows = cochain_dim(n, k, m + 1);
    let cols = cochain_dim(n, k, m);
    check_cap("coboundary matrix", rows, cols)?;
    let mut a = Mat::zeros(rows, cols);
    let one = 1u64;
    let minus = ring.neg(1);
    for r in 0..tuple_count(n, m + 1) {
        let t = tuple_at(n, m + 1, r);
        let base = r * k;
        let tail = tuple_index(n, &t[1..]);
        for j in 0..k {
            a[(base + j, tail * k + j)] = ring.add(a[(base + j, tail * k + j)], one);
        }
        let mut merged = Vec::with_capacity(m);
        for i in 1..=m {
            let h = group.mul(t[i - 1], t[i]);
            if h == 0 {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(&t[..i - 1]);
            merged.push(h);
            merged.extend_from_slice(&t[i + 1..]);
            let c = tuple_index(n, &merged);
            let s = if i % 2 == 1 { minus } else { one };
            for j in 0..k {
                a[(base + j, c * k + j)] = ring.add(a[(base + j, c * k + j)], s);
            }
        }
        let head = tuple_index(n, &t[..m]);
        let mat = module.mat(t[m]);
        let neg = (m + 1) % 2 == 1;
        for j in 0..k {
            for i in 0..k {
                let x = mat[(i, j)];
                if x == 0 {
                    continue;
                }
                let x = if neg { ring.neg(x) } else { x };
                a[(base + j, head * k + i)] = ring.add(a[(base + j, head * k + i)], x);
            }
        }
    }
    Ok(a)
}

/// `d^m c` evaluated directly, reduced modulo the module relations.
pub fn coboundary(group: &GroupTable, module: &GModule, m: usize, c: &[u64]) -> Vec<u64> {
    let n = group.order();
    let k = module.dim();
    let ring = module.ring();
    assert_eq!(c.len(), cochain_dim(n, k, m));
    if n == 1 {
        return Vec::new();
    }
    let mut out = vec![0u64; cochain_dim(n, k, m + 1)];
    let mut merged = Vec::with_capacity(m);
    for r in 0..tuple_count(n, m + 1) {
        let t = tuple_at(n, m + 1, r);
        let mut acc = c[tuple_index(n, &t[1..]) * k..][..k].to_vec();
        for i in 1..=m {
            let h = group.mul(t[i - 1], t[i]);
            if h == 0 {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(&t[..i - 1]);
            merged.push(h);
            merged.extend_from_slice(&t[i + 1..]);
            let v = &c[tuple_index(n, &merged) * k..][..k];
            for (a, &x) in acc.iter_mut().zip(v) {
                *a = if i % 2 == 1 { ring.sub(*a, x) } else { ring.add(*a, x) };
            }
        }
        let head = &c[tuple_index(n, &t[..m]) * k..][..k];
        let moved = module.mat(t[m]).vec_mul(ring, head);
        for (a, &x) in acc.iter_mut().zip(&moved) {
            *a = if (m + 1) % 2 == 1 { ring.sub(*a, x) } else { ring.add(*a, x) };
        }
        out[r * k..(r + 1) * k].copy_from_slice(&module.reduce(&acc));
    }
    out
}

/// Reduces every value of a cochain modulo the module relations.
pub fn reduce_cochain(module: &GModule, c: &[u64]) -> Vec<u64> {
    c.chunks(module.dim().max(1)).flat_map(|v| module.reduce(v)).collect()
}

/// Applies a coordinate map `v -> v X` to every value of a cochain.
pub fn map_values(ring: &ZMod, c: &[u64], k_in: usize, x: &Mat) -> Vec<u64> {
    if k_in == 0 {
        return Vec::new();
    }
    c.chunks(k_in).flat_map(|v| x.vec_mul(ring, v)).collect()
}

/// `H^m(G, V)` with coordinates and representatives.
#[derive(Clone, Debug)]
pub struct Cohomology {
    degree: usize,
    order: usize,
    module: GModule,
    sq: Subquotient,
}

impl Cohomology {
    pub fn compute(group: &GroupTable, module: &GModule, m: usize) -> Result<Self> {
        if m > 3 {
            return Err(Error::Invalid(format!("cohomology degree {m} is above 3")));
        }
        let ring = *module.ring();
        let n = group.order();
        let k = module.dim();
        let dim = cochain_dim(n, k, m);
        let dm = coboundary_matrix(group, module, m)?;
        let free = module.is_free();
        let out: Vec<u32> = (0..dm.rows()).map(|r| module.exps()[r % k.max(1)]).collect();
        let top = kernel(&ring, &dm, if free { None } else { Some(&out) }, free);
        let mut bottom = if m == 0 { Mat::zeros(dim, 0) } else { coboundary_matrix(group, module, m - 1)? };
        let rel = module.relation_columns(tuple_count(n, m));
        if !rel.is_empty() {
            bottom = bottom.hcat(&Mat::from_cols(&rel, dim));
        }
        let sq = Subquotient::new(ring, top, &bottom)?;
        Ok(Cohomology { degree: m, order: n, module: module.clone(), sq })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn module(&self) -> &GModule {
        &self.module
    }

    /// Exponents of the cyclic factors, ascending (`N` marks a free summand).
    pub fn invariants(&self) -> &[u32] {
        self.sq.invariants()
    }

    pub fn order_exp(&self) -> u32 {
        self.sq.order_exp()
    }

    pub fn exponent_exp(&self) -> u32 {
        self.sq.exponent_exp()
    }

    pub fn is_trivial(&self) -> bool {
        self.sq.is_trivial()
    }

    pub fn group(&self) -> FinAb {
        self.sq.group()
    }

    pub fn cochain_dim(&self) -> usize {
        cochain_dim(self.order, self.module.dim(), self.degree)
    }

    /// Representative cocycles of the cyclic generators.
    pub fn gens(&self) -> Vec<Vec<u64>> {
        self.sq.gens().iter().map(|c| reduce_cochain(&self.module, c)).collect()
    }

    /// A representative cocycle of the class with coordinates `z`.
    pub fn representative(&self, z: &[u64]) -> Vec<u64> {
        reduce_cochain(&self.module, &self.sq.lift(z))
    }

    pub fn is_cocycle(&self, group: &GroupTable, c: &[u64]) -> bool {
        coboundary(group, &self.module, self.degree, c).iter().all(|&x| x == 0)
    }

    /// Coordinates of the class of a cocycle.
    pub fn coords(&self, c: &[u64]) -> Result<Vec<u64>> {
        if !self.sq.in_top(c) {
            return Err(Error::NotCocycle(format!("degree {} cochain", self.degree)));
        }
        self.sq.coords(c)
    }

    /// Coordinates without the cocycle check. For lattice coefficients the
    /// input only needs to be a cocycle up to precision loss far below the
    /// exponent of the group.
    pub fn coords_lenient(&self, c: &[u64]) -> Result<Vec<u64>> {
        self.sq.coords(c)
    }
}

/// A short exact sequence `0 -> A -> B -> C -> 0` of modules over one group,
/// given by coordinate maps: `incl` (`k_A x k_B`), `proj` (`k_B x k_C`) and a
/// set-theoretic section `lift` (`k_C x k_B`).
#[derive(Clone, Debug)]
pub struct ShortExact {
    pub a: GModule,
    pub b: GModule,
    pub c: GModule,
    pub incl: Mat,
    pub proj: Mat,
    pub lift: Mat,
}

impl ShortExact {
    /// The sequence `0 -> T_n -> T -> A_n -> 0`.
    pub fn lattice_quotient(u: &Uniserial, a: &QuotientModule) -> Self {
        let n = a.level();
        let d = u.d();
        let k = a.module().dim();
        let mut proj = Mat::zeros(d, k);
        let mut lift = Mat::zeros(k, d);
        for j in 0..k {
            let mut z = vec![0u64; k];
            z[j] = 1;
            lift.row_mut(j).copy_from_slice(&a.lift(&z));
        }
        for i in 0..d {
            let mut y = vec![0u64; d];
            y[i] = 1;
            let z = a.project(&y);
            for j in 0..k {
                proj[(i, j)] = z[j];
            }
        }
        ShortExact {
            a: u.term_module(n).clone(),
            b: u.module().module().clone(),
            c: a.module().clone(),
            incl: u.term_basis(n),
            proj,
            lift,
        }
    }

    /// `A`-coordinates of a `B`-vector lying in the image of `A`.
    pub fn to_sub(&self, y: &[u64]) -> Result<Vec<u64>> {
        let ring = *self.b.ring();
        let mut at = self.incl.transpose();
        let mut y = y.to_vec();
        for (j, &e) in self.b.exps().iter().enumerate() {
            if e < ring.prec() {
                let s = ring.ppow(ring.prec() - e);
                at.scale_row(&ring, j, s);
                y[j] = ring.mul(y[j], s);
            }
        }
        let x = solve(&ring, &at, &y).ok_or_else(|| Error::Consistency("value outside the submodule".into()))?;
        Ok(self.a.reduce(&x))
    }

    /// The connecting map on a `C`-valued `m`-cocycle, returning an
    /// `A`-valued `(m+1)`-cocycle.
    pub fn connecting_cochain(&self, group: &GroupTable, m: usize, c: &[u64]) -> Result<Vec<u64>> {
        let ring = *self.b.ring();
        let lifted = map_values(&ring, c, self.c.dim(), &self.lift);
        let db = coboundary(group, &self.b, m, &lifted);
        let kb = self.b.dim().max(1);
        let mut out = Vec::with_capacity(db.len() / kb * self.a.dim());
        for v in db.chunks(kb) {
            out.extend(self.to_sub(v)?);
        }
        Ok(out)
    }

    /// `delta_m` on cohomology coordinates.
    pub fn connecting(&self, group: &GroupTable, hc: &Cohomology, ha: &Cohomology, z: &[u64]) -> Result<Vec<u64>> {
        let c = hc.representative(z);
        let a = self.connecting_cochain(group, hc.degree(), &c)?;
        ha.coords_lenient(&a)
    }

    /// Maps a `B`-valued cochain to `C`.
    pub fn project_cochain(&self, c: &[u64]) -> Vec<u64> {
        let ring = *self.b.ring();
        reduce_cochain(&self.c, &map_values(&ring, c, self.b.dim(), &self.proj))
    }

    /// Checks exactness of `H^m(B) -> H^m(C) -> H^{m+1}(A)` at `H^m(C)`.
    pub fn check_exact(&self, group: &GroupTable, m: usize) -> Result<ExactnessReport> {
        let hb = Cohomology::compute(group, &self.b, m)?;
        let hc = Cohomology::compute(group, &self.c, m)?;
        let ha = Cohomology::compute(group, &self.a, m + 1)?;
        let img: Vec<Vec<u64>> =
            hb.gens().iter().map(|g| hc.coords(&self.project_cochain(g))).collect::<Result<_>>()?;
        let delta: Vec<Vec<u64>> = (0..hc.invariants().len())
            .map(|j| {
                let mut z = vec![0u64; hc.invariants().len()];
                z[j] = 1;
                self.connecting(group, &hc, &ha, &z)
            })
            .collect::<Result<_>>()?;
        for g in &img {
            let c = hc.representative(g);
            let dz = ha.coords_lenient(&self.connecting_cochain(group, m, &c)?)?;
            if !dz.iter().all(|&x| x == 0) {
                return Err(Error::Consistency("image of H^m(B) not in the kernel of delta".into()));
            }
        }
        let image_exp: u32 = hc.group().subgroup_invariants(&img).iter().sum();
        let delta_inv = ha.group().subgroup_invariants(&delta);
        let kernel_exp = hc.order_exp() - delta_inv.iter().sum::<u32>();
        Ok(ExactnessReport {
            exact: image_exp == kernel_exp,
            surjective: delta_inv == ha.invariants(),
            image_invariants: delta_inv,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessReport {
    /// `Im(H^m(B)) = ker(delta)`.
    pub exact: bool,
    /// `delta` is onto `H^{m+1}(A)`.
    pub surjective: bool,
    pub image_invariants: Vec<u32>,
}

/// Lattice cohomology of a uniserial module, cached across levels.
///
/// `H^m(R, T_n)` only depends on `n mod d` because `T_n` is described in the
/// coordinates of `p^(n div d) T_(n mod d)`, so every level shares one frame.
#[derive(Debug)]
pub struct Tower {
    u: Uniserial,
    h2_t: OnceLock<Cohomology>,
    h3_sub: Vec<OnceLock<Cohomology>>,
    frames: Vec<OnceLock<Frame>>,
}

/// Smith basis of `d^2` on `C^2(R, D)` in `D`-coordinates.
#[derive(Debug)]
struct Frame {
    // Columns a_i (cochains in D-coordinates) with valuations s_i of b_i.
    basis: Mat,
    vals: Vec<u32>,
}

impl Tower {
    pub fn new(u: Uniserial) -> Self {
        let d = u.d();
        Tower {
            u,
            h2_t: OnceLock::new(),
            h3_sub: (0..d).map(|_| OnceLock::new()).collect(),
            frames: (0..d).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn uniserial(&self) -> &Uniserial {
        &self.u
    }

    pub fn group(&self) -> &GroupTable {
        self.u.group()
    }

    pub fn d(&self) -> usize {
        self.u.d()
    }

    /// `H^2(R, T)`.
    pub fn h2_t(&self) -> Result<&Cohomology> {
        if let Some(c) = self.h2_t.get() {
            return Ok(c);
        }
        let c = Cohomology::compute(self.group(), self.u.module().module(), 2)?;
        let _ = self.h2_t.set(c);
        Ok(self.h2_t.get().unwrap())
    }

    /// `H^3(R, T_n)` in `T_n`-coordinates.
    pub fn h3_tn(&self, n: usize) -> Result<&Cohomology> {
        let r = n % self.d();
        if let Some(c) = self.h3_sub[r].get() {
            return Ok(c);
        }
        let c = Cohomology::compute(self.group(), self.u.term_module(r), 3)?;
        let _ = self.h3_sub[r].set(c);
        Ok(self.h3_sub[r].get().unwrap())
    }

    fn frame(&self, n: usize) -> Result<&Frame> {
        let r = n % self.d();
        if let Some(f) = self.frames[r].get() {
            return Ok(f);
        }
        let dm = coboundary_matrix(self.group(), self.u.term_module(r), 2)?;
        let s = snf(self.u.ring(), &dm, Track::COLS);
        let cols = dm.cols();
        let vals = (0..cols).map(|i| s.val(i)).collect();
        let f = Frame { basis: s.q.unwrap(), vals };
        let _ = self.frames[r].set(f);
        Ok(self.frames[r].get().unwrap())
    }

    /// Hypotheses for the split at level `n`: `T_n <= f T` and
    /// `T_n <= e T` with `f = exp H^3(R, T_n)` and `e = exp H^2(R, T)`.
    pub fn split_hypotheses(&self, n: usize) -> Result<SplitHypotheses> {
        let f = self.h3_tn(n)?.exponent_exp();
        let e = self.h2_t()?.exponent_exp();
        let q = (n / self.d()) as u32;
        Ok(SplitHypotheses { level: n, h3_exp: f, h2_exp: e, ok: q >= f && q >= e })
    }

    /// The decomposition `H^2(R, A_n) = Im theta_2 (+) K` with `K = H^3(R, T_n)`.
    pub fn split(&self, n: usize) -> Result<SplitData> {
        let hyp = self.split_hypotheses(n)?;
        if !hyp.ok {
            return Err(Error::Hypothesis(format!(
                "level {n}: need floor(n/d) >= {} (exp H^3(R,T_n) = p^{}, exp H^2(R,T) = p^{})",
                hyp.h3_exp.max(hyp.h2_exp),
                hyp.h3_exp,
                hyp.h2_exp
            )));
        }
        let group = self.group();
        let ring = *self.u.ring();
        let a = self.u.quotient(n)?;
        let h2 = Cohomology::compute(group, a.module(), 2)?;
        let h2_t = self.h2_t()?;
        let h3 = self.h3_tn(n)?;
        let s = hyp.h3_exp;
        let d = self.d();
        let tuples = tuple_count(group.order(), 2);

        // Image of theta_2: reduce the generators of H^2(R, T) mod T_n.
        let to_a = |c: &[u64]| -> Vec<u64> {
            let mut out = Vec::with_capacity(tuples * a.module().dim());
            for v in c.chunks(d) {
                out.extend(a.project(v));
            }
            out
        };
        let theta: Vec<Vec<u64>> = h2_t.gens().iter().map(|g| h2.coords(&to_a(g))).collect::<Result<_>>()?;

        // K from the Smith frame of d^2 on C^2(R, D), D = T_{n - s d}.
        let frame = self.frame(n)?;
        let dlevel = n - s as usize * d;
        let dbasis = self.u.term_basis(dlevel);
        let mut kappa = Vec::new();
        let mut kappa_coords = Vec::new();
        for (i, &v) in frame.vals.iter().enumerate() {
            if v == 0 || v >= ring.prec() {
                continue;
            }
            if v > s {
                return Err(Error::Consistency(format!("elementary divisor p^{v} above exp H^3 = p^{s}")));
            }
            let col: Vec<u64> = frame.basis.col(i).iter().map(|&x| ring.mul(x, ring.ppow(s - v))).collect();
            let ambient = map_values(&ring, &col, d, &dbasis);
            let z = h2.coords(&to_a(&ambient))?;
            kappa.push(col);
            kappa_coords.push(z);
        }

        let g = h2.group();
        let k_inv = g.subgroup_invariants(&kappa_coords);
        let t_inv = g.subgroup_invariants(&theta);
        let mut all = theta.clone();
        all.extend(kappa_coords.iter().cloned());
        let sum_inv = g.subgroup_invariants(&all);
        let k_exp: u32 = k_inv.iter().sum();
        let t_exp: u32 = t_inv.iter().sum();
        let sum_exp: u32 = sum_inv.iter().sum();
        if k_inv != h3.invariants() {
            return Err(Error::Consistency(format!("K has invariants {k_inv:?}, H^3(R,T_n) has {:?}", h3.invariants())));
        }
        if t_inv != h2_t.invariants() {
            return Err(Error::Consistency(format!("theta_2 is not injective: {t_inv:?} vs {:?}", h2_t.invariants())));
        }
        if sum_exp != h2.order_exp() || k_exp + t_exp != sum_exp {
            return Err(Error::Consistency(format!(
                "Im theta_2 and K do not split H^2(R, A_{n}): p^{t_exp} * p^{k_exp} vs p^{}",
                h2.order_exp()
            )));
        }
        let ses = ShortExact::lattice_quotient(&self.u, &a);
        let delta: Vec<Vec<u64>> = kappa.iter().map(|_| Vec::new()).collect();
        let mut split = SplitData { level: n, quotient: a, h2, theta, kappa, kappa_coords, delta, ses, s };
        let delta: Vec<Vec<u64>> = (0..split.kappa.len())
            .map(|i| {
                let c = split.h2.representative(&split.kappa_coords[i]);
                split.ses.connecting_cochain(group, 2, &c).and_then(|x| h3.coords_lenient(&x))
            })
            .collect::<Result<_>>()?;
        if h3.group().subgroup_invariants(&delta) != h3.invariants() {
            return Err(Error::Consistency("delta_2 does not map K onto H^3(R, T_n)".into()));
        }
        for t in &split.theta {
            let c = split.h2.representative(t);
            let x = h3.coords_lenient(&split.ses.connecting_cochain(group, 2, &c)?)?;
            if x.iter().any(|&v| v != 0) {
                return Err(Error::Consistency("delta_2 is nonzero on Im theta_2".into()));
            }
        }
        split.delta = delta;
        Ok(split)
    }

    /// `(id (+) mu)` from level `n` to level `n + d` on coordinates.
    pub fn id_oplus_mu(&self, lo: &SplitData, hi: &SplitData, z: &[u64]) -> Result<Vec<u64>> {
        if hi.level != lo.level + self.d() {
            return Err(Error::Invalid(format!("levels {} and {} are not d apart", lo.level, hi.level)));
        }
        let (alpha, beta) = lo.decompose(z)?;
        hi.compose(&alpha, &beta)
    }

    /// The inverse map from level `n + d` back to `n`.
    pub fn id_oplus_mu_inv(&self, lo: &SplitData, hi: &SplitData, z: &[u64]) -> Result<Vec<u64>> {
        let (alpha, beta) = hi.decompose(z)?;
        lo.compose(&alpha, &beta)
    }

    /// `delta_2: H^2(R, A_n) -> H^3(R, T_n)` computed by lifting and
    /// differentiating, without using the frame.
    pub fn delta2(&self, split: &SplitData, z: &[u64]) -> Result<Vec<u64>> {
        let c = split.h2.representative(z);
        let x = split.ses.connecting_cochain(self.group(), 2, &c)?;
        self.h3_tn(split.level)?.coords_lenient(&x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitHypotheses {
    pub level: usize,
    pub h3_exp: u32,
    pub h2_exp: u32,
    pub ok: bool,
}

/// `H^2(R, A_n) = Im theta_2 (+) K` at one level.
#[derive(Clone, Debug)]
pub struct SplitData {
    level: usize,
    quotient: QuotientModule,
    h2: Cohomology,
    // Coordinates in H^2(R, A_n) of theta_2 of the generators of H^2(R, T).
    theta: Vec<Vec<u64>>,
    // Generators of K as cochains in D-coordinates, and their classes.
    kappa: Vec<Vec<u64>>,
    kappa_coords: Vec<Vec<u64>>,
    // delta_2 of each K generator in H^3(R, T_n) coordinates.
    delta: Vec<Vec<u64>>,
    ses: ShortExact,
    s: u32,
}

impl SplitData {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn quotient(&self) -> &QuotientModule {
        &self.quotient
    }

    pub fn h2(&self) -> &Cohomology {
        &self.h2
    }

    pub fn short_exact(&self) -> &ShortExact {
        &self.ses
    }

    /// `log_p exp H^3(R, T_n)`.
    pub fn h3_exp(&self) -> u32 {
        self.s
    }

    /// Classes of `theta_2(gamma_j)` for the generators of `H^2(R, T)`.
    pub fn theta(&self) -> &[Vec<u64>] {
        &self.theta
    }

    /// Classes of the generators of `K`.
    pub fn complement(&self) -> &[Vec<u64>] {
        &self.kappa_coords
    }

    /// The complement generators as `D`-coordinate cochains (the frame).
    pub fn complement_cochains(&self) -> &[Vec<u64>] {
        &self.kappa
    }

    /// Splits a class into its `H^2(R, T)` and `K` coefficients.
    pub fn decompose(&self, z: &[u64]) -> Result<(Vec<u64>, Vec<u64>)> {
        let mut gens = self.theta.clone();
        gens.extend(self.kappa_coords.iter().cloned());
        let c = self.h2.group().solve(&gens, z).ok_or_else(|| Error::Consistency("class outside Im theta + K".into()))?;
        let (a, b) = c.split_at(self.theta.len());
        Ok((a.to_vec(), b.to_vec()))
    }

    /// The class `sum alpha_j theta_j + sum beta_i kappa_i`.
    pub fn compose(&self, alpha: &[u64], beta: &[u64]) -> Result<Vec<u64>> {
        let g = self.h2.group();
        let mut z = vec![0u64; self.h2.invariants().len()];
        for (c, t) in alpha.iter().zip(&self.theta) {
            z = g.add(&z, &g.scale(*c, t));
        }
        if beta.len() != self.kappa_coords.len() {
            return Err(Error::Consistency("complement coordinates of the wrong length".into()));
        }
        for (c, k) in beta.iter().zip(&self.kappa_coords) {
            z = g.add(&z, &g.scale(*c, k));
        }
        Ok(z)
    }

    /// The component of a class in `H^3(R, T_n)`.
    pub fn h3_component(&self, h3: &Cohomology, z: &[u64]) -> Result<Vec<u64>> {
        let (_, beta) = self.decompose(z)?;
        let g = h3.group();
        let mut out = vec![0u64; h3.invariants().len()];
        for (c, dk) in beta.iter().zip(&self.delta) {
            out = g.add(&out, &g.scale(*c, dk));
        }
        Ok(out)
    }

    /// Whether the class lies in the summand `Im theta_2`.
    pub fn in_theta(&self, z: &[u64]) -> Result<bool> {
        Ok(self.h2.group().solve(&self.theta, z).is_some())
    }
}

/// Brute-force `H^m` for tiny finite modules: enumerates every normalized
/// cochain, keeps the cocycles, and recovers the invariants of the quotient
/// from the sizes of its `p^j`-torsion subgroups. Ascending exponents.
pub fn brute_force_invariants(group: &GroupTable, module: &GModule, m: usize, cap: usize) -> Result<Vec<u32>> {
    let p = module.ring().p();
    let all = |deg: usize| -> Result<Vec<Vec<u64>>> {
        let dim = cochain_dim(group.order(), module.dim(), deg);
        let radix: Vec<u64> = (0..dim).map(|i| p.pow(module.exps()[i % module.dim()])).collect();
        let total: u128 = radix.iter().map(|&r| r as u128).product();
        if total > cap as u128 {
            return Err(Error::CapExceeded {
                what: "cochain enumeration",
                needed: total.min(usize::MAX as u128) as usize,
                cap,
            });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut c = vec![0u64; dim];
        loop {
            out.push(c.clone());
            let mut i = 0;
            while i < dim {
                c[i] += 1;
                if c[i] < radix[i] {
                    break;
                }
                c[i] = 0;
                i += 1;
            }
            if i == dim {
                return Ok(out);
            }
        }
    };
    let cocycles: Vec<Vec<u64>> =
        all(m)?.into_iter().filter(|c| coboundary(group, module, m, c).iter().all(|&x| x == 0)).collect();
    let boundaries: std::collections::HashSet<Vec<u64>> = if m == 0 {
        std::iter::once(vec![0; cochain_dim(group.order(), module.dim(), 0)]).collect()
    } else {
        all(m - 1)?.iter().map(|c| reduce_cochain(module, &coboundary(group, module, m - 1, c))).collect()
    };
    let ring = module.ring();
    let lp = |x: usize| crate::zmod::valuation_of(p, x as u64);
    let b = lp(boundaries.len());
    let mut torsion = vec![0u32];
    let mut j = 0;
    while torsion[j] < lp(cocycles.len()) - b {
        j += 1;
        let pj = p.pow(j as u32);
        let killed = cocycles
            .iter()
            .filter(|z| {
                let y: Vec<u64> = z.iter().map(|&x| ring.mul(x, pj)).collect();
                boundaries.contains(&reduce_cochain(module, &y))
            })
            .count();
        torsion.push(lp(killed) - b);
    }
    let mut inv = Vec::new();
    for e in 1..torsion.len() {
        let at_least = torsion[e] - torsion[e - 1];
        let next = torsion.get(e + 1).map_or(0, |t| t - torsion[e]);
        inv.extend(std::iter::repeat_n(e as u32, (at_least - next) as usize));
    }
    inv.sort_unstable();
    Ok(inv)
}

/// Value of a cochain at a tuple (zero if any argument is the identity).
pub fn value_at(order: usize, k: usize, c: &[u64], tuple: &[usize]) -> Vec<u64> {
    if tuple.contains(&0) {
        return vec![0; k];
    }
    let i = tuple_index(order, tuple);
    c[i * k..(i + 1) * k].to_vec()
}

/// Builds a cochain from a function on tuples of non-identity elements.
pub fn cochain_from_fn<F: FnMut(&[usize]) -> Vec<u64>>(order: usize, k: usize, m: usize, mut f: F) -> Vec<u64> {
    let mut out = Vec::with_capacity(cochain_dim(order, k, m));
    for i in 0..tuple_count(order, m) {
        let t = tuple_at(order, m, i);
        let v = f(&t);
        debug_assert_eq!(v.len(), k);
        out.extend(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::library;
    use crate::lattice_module::LatticeModule;

    fn trivial(p: u64, e: u32, order: usize) -> GModule {
        let ring = ZMod::new(p, e + 4).unwrap();
        GModule::trivial_action(ring, vec![e], order)
    }

    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    fn d8_gaussian(prec: u32) -> LatticeModule {
        let g = GroupTable::from_presentation(
            &["a".into(), "b".into()],
            &["a^2".into(), "b^4".into(), "b^a = b^-1".into()],
            64,
        )
        .unwrap();
        LatticeModule::new(&g, 2, prec, &[vec![vec![1, 0], vec![0, -1]], vec![vec![0, 1], vec![-1, 0]]]).unwrap()
    }

    #[test]
    fn complex_property() {
        let t = d8_gaussian(6);
        let ring = *t.ring();
        for k in 0..2 {
            let a = coboundary_matrix(t.group(), t.module(), k).unwrap();
            let b = coboundary_matrix(t.group(), t.module(), k + 1).unwrap();
            assert!(b.mul(&ring, &a).is_zero());
        }
    }

    #[test]
    fn d0_is_v_minus_vg() {
        let g = GroupTable::cyclic(2);
        let ring = ZMod::new(2, 5).unwrap();
        let m = GModule::free(ring, vec![Mat::identity(1), Mat::from_i64(&ring, &[vec![-1]])]);
        let c = coboundary(&g, &m, 0, &[3]);
        assert_eq!(c, vec![6]);
    }

    #[test]
    fn c4_factor_set_is_a_cocycle() {
        let g = GroupTable::cyclic(2);
        let m = trivial(2, 1, 2);
        // Carry cocycle of Z/4 over Z/2: gamma(1, 1) = 1.
        assert!(coboundary(&g, &m, 2, &[1]).iter().all(|&x| x == 0));
        let h = Cohomology::compute(&g, &m, 2).unwrap();
        assert_eq!(h.invariants(), &[1]);
        assert_eq!(h.coords(&[1]).unwrap(), vec![1]);
    }

    #[test]
    fn cyclic_h2_is_gcd() {
        for (mm, nn) in [(2usize, 2usize), (2, 4), (4, 2), (3, 3), (4, 4), (2, 8)] {
            let g = GroupTable::cyclic(mm);
            let p = if mm % 3 == 0 { 3 } else { 2 };
            let e = crate::zmod::valuation_of(p, nn as u64);
            let h = Cohomology::compute(&g, &trivial(p, e, mm), 2).unwrap();
            let expected = crate::zmod::valuation_of(p, gcd(mm, nn) as u64);
            assert_eq!(h.order_exp(), expected, "C{mm}, Z/{nn}");
        }
    }

    #[test]
    fn trivial_group_has_no_higher_cohomology() {
        let g = GroupTable::trivial();
        let m = trivial(2, 3, 1);
        assert_eq!(Cohomology::compute(&g, &m, 0).unwrap().invariants(), &[3]);
        for k in 1..=3 {
            assert!(Cohomology::compute(&g, &m, k).unwrap().is_trivial());
        }
    }

    #[test]
    fn brute_force_matches_small_cases() {
        for g in [GroupTable::cyclic(2), GroupTable::cyclic(4), library::d8()] {
            let m = trivial(2, 1, g.order());
            for k in 0..=2 {
                let h = Cohomology::compute(&g, &m, k).unwrap();
                if let Ok(inv) = brute_force_invariants(&g, &m, k, 1 << 20) {
                    assert_eq!(h.invariants(), inv, "order {} degree {k}", g.order());
                }
            }
        }
    }

    #[test]
    fn bockstein_is_onto() {
        let g = GroupTable::cyclic(2);
        let ring = ZMod::new(2, 6).unwrap();
        let b = GModule::trivial_action(ring, vec![2], 2);
        let a = GModule::trivial_action(ring, vec![1], 2);
        let c = GModule::trivial_action(ring, vec![1], 2);
        let ses = ShortExact {
            a,
            b,
            c,
            incl: Mat::from_rows(&[vec![2]], 1),
            proj: Mat::from_rows(&[vec![1]], 1),
            lift: Mat::from_rows(&[vec![1]], 1),
        };
        let r = ses.check_exact(&g, 1).unwrap();
        assert!(r.exact);
        assert!(r.surjective);
        assert_eq!(r.image_invariants, vec![1]);
    }

    #[test]
    fn c2_negation_split() {
        let t = LatticeModule::new(&GroupTable::cyclic(2), 2, 14, &[vec![vec![-1]]]).unwrap();
        let tower = Tower::new(t.uniserial().unwrap());
        let h2t = tower.h2_t().unwrap().invariants().to_vec();
        for n in 1..8 {
            let hyp = tower.split_hypotheses(n).unwrap();
            if !hyp.ok {
                continue;
            }
            let s = tower.split(n).unwrap();
            let mut expected = h2t.clone();
            expected.extend(tower.h3_tn(n).unwrap().invariants());
            expected.sort_unstable();
            assert_eq!(s.h2().invariants(), &expected[..], "n = {n}");
        }
    }

    #[test]
    fn c2_negation_shift_is_bijective() {
        let t = LatticeModule::new(&GroupTable::cyclic(2), 2, 14, &[vec![vec![-1]]]).unwrap();
        let tower = Tower::new(t.uniserial().unwrap());
        let lo = tower.split(3).unwrap();
        let hi = tower.split(4).unwrap();
        let g = lo.h2().group();
        let elems = g.elements(1 << 10).unwrap();
        let mut images = std::collections::HashSet::new();
        for z in &elems {
            let w = tower.id_oplus_mu(&lo, &hi, z).unwrap();
            assert_eq!(tower.id_oplus_mu_inv(&lo, &hi, &w).unwrap(), *z);
            images.insert(w);
        }
        assert_eq!(images.len() as u64, hi.h2().group().order().unwrap());
    }
}
