//! Modules over finite groups: free `Z_p`-lattices with a group action, their
//! lower central series, the quotients `A_n = T/T_n` and hom spaces.
//!
//! Every module uses row vectors and a right action `v.g = v M_g`, so
//! `M_{gh} = M_g M_h`.

use crate::abelian::{kernel, Subquotient};
use crate::error::{Error, Result};
use crate::finite_group::{GroupAutomorphism, GroupTable};
use crate::lattice::Lattice;
use crate::matrix::Mat;
use crate::snf::{is_unit, snf, solve, Track};
use crate::zmod::{valuation_of, ZMod};

/// Working precision for quotient levels up to `n_max`.
pub fn working_precision(p: u64, group_order: usize, n_max: u32) -> u32 {
    n_max + 3 * valuation_of(p, group_order as u64) + 2
}

/// A module `(+)_i Z/p^e_i` with one action matrix per group element.
/// An exponent equal to `N` marks a free coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GModule {
    ring: ZMod,
    exps: Vec<u32>,
    mats: Vec<Mat>,
}

impl GModule {
    /// Checks that every matrix maps the relation lattice into itself.
    /// Exponents equal to the ring precision mark free summands, so a finite
    /// `Z/p^e` needs a ring of precision above `e`.
    pub fn new(ring: ZMod, exps: Vec<u32>, mats: Vec<Mat>) -> Result<Self> {
        let k = exps.len();
        for (g, m) in mats.iter().enumerate() {
            if m.rows() != k || m.cols() != k {
                return Err(Error::Invalid(format!("action matrix of element {g} is not {k}x{k}")));
            }
        }
        let exps: Vec<u32> = exps.iter().map(|&e| e.min(ring.prec())).collect();
        let module = GModule { ring, exps, mats };
        for (g, m) in module.mats.iter().enumerate() {
            for i in 0..k {
                for j in 0..k {
                    let x = ring.mul(m[(i, j)], ring.ppow(module.exps[i]));
                    if ring.val(x) < module.exps[j] {
                        return Err(Error::ActionAxiom(format!("element {g} does not preserve the relations")));
                    }
                }
            }
        }
        Ok(module)
    }

    /// A free module of rank `k`.
    pub fn free(ring: ZMod, mats: Vec<Mat>) -> Self {
        let k = mats.first().map_or(0, |m| m.rows());
        GModule { ring, exps: vec![ring.prec(); k], mats }
    }

    /// The trivial module of the given shape.
    pub fn trivial_action(ring: ZMod, exps: Vec<u32>, group_order: usize) -> Self {
        let k = exps.len();
        GModule { ring, exps, mats: vec![Mat::identity(k); group_order] }
    }

    pub fn ring(&self) -> &ZMod {
        &self.ring
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn is_free(&self) -> bool {
        self.exps.iter().all(|&e| e >= self.ring.prec())
    }

    pub fn mat(&self, g: usize) -> &Mat {
        &self.mats[g]
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    /// `log_p |V|` for a finite module.
    pub fn order_exp(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        v.iter().zip(&self.exps).map(|(&x, &e)| reduce_mod(&self.ring, x, e)).collect()
    }

    pub fn act(&self, v: &[u64], g: usize) -> Vec<u64> {
        self.reduce(&self.mats[g].vec_mul(&self.ring, v))
    }

    /// The twisted module `V^(beta)` with `v * g = v.(g^beta)`.
    pub fn twisted(&self, beta: &GroupAutomorphism) -> GModule {
        let mats = (0..self.mats.len()).map(|g| self.mats[beta.apply(g)].clone()).collect();
        GModule { ring: self.ring, exps: self.exps.clone(), mats }
    }

    /// Restriction to a subgroup listed by element indices.
    pub fn restrict(&self, elems: &[usize]) -> GModule {
        GModule { ring: self.ring, exps: self.exps.clone(), mats: elems.iter().map(|&g| self.mats[g].clone()).collect() }
    }

    /// Generators `p^e_i e_i` of the relation lattice, skipping free coordinates.
    pub fn relation_columns(&self, blocks: usize) -> Vec<Vec<u64>> {
        let k = self.dim();
        let mut out = Vec::new();
        for b in 0..blocks {
            for (i, &e) in self.exps.iter().enumerate() {
                if e < self.ring.prec() {
                    let mut c = vec![0u64; blocks * k];
                    c[b * k + i] = self.ring.ppow(e);
                    out.push(c);
                }
            }
        }
        out
    }

    /// Checks `M_g M_h = M_{gh}` on generators modulo the relations.
    pub fn check_action(&self, group: &GroupTable) -> Result<()> {
        for x in 0..group.order() {
            for &g in group.generators() {
                let lhs = self.mats[x].mul(&self.ring, &self.mats[g]);
                let rhs = &self.mats[group.mul(x, g)];
                for i in 0..self.dim() {
                    let a = self.reduce(lhs.row(i));
                    let b = self.reduce(rhs.row(i));
                    if a != b {
                        return Err(Error::ActionAxiom(format!("M_{x} M_{g} != M_{}", group.mul(x, g))));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn reduce_mod(ring: &ZMod, x: u64, e: u32) -> u64 {
    if e >= ring.prec() {
        x
    } else {
        x % ring.p().pow(e)
    }
}

/// A free `Z_p`-module `Z_p^d` with an action of a finite group, stored at
/// precision `p^N` together with the integer generator matrices it came from.
#[derive(Clone, Debug)]
pub struct LatticeModule {
    group: GroupTable,
    ring: ZMod,
    gen_ints: Vec<Vec<Vec<i64>>>,
    module: GModule,
}

impl LatticeModule {
    /// `gen_ints[j]` is the integer matrix of `group.generators()[j]`.
    pub fn new(group: &GroupTable, p: u64, prec: u32, gen_ints: &[Vec<Vec<i64>>]) -> Result<Self> {
        let ring = ZMod::new(p, prec)?;
        if gen_ints.len() != group.generators().len() {
            return Err(Error::Invalid(format!(
                "{} action matrices given for {} generators",
                gen_ints.len(),
                group.generators().len()
            )));
        }
        let d = gen_ints.first().map_or(0, |m| m.len());
        let mut gens = Vec::new();
        for (j, m) in gen_ints.iter().enumerate() {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(Error::Invalid(format!("action matrix {j} is not {d}x{d}")));
            }
            let mat = Mat::from_i64(&ring, m);
            if !is_unit(&ring.with_prec(1)?, &mat.reduce_to(&ring.with_prec(1)?)) {
                return Err(Error::ActionAxiom(format!("action matrix {j} is not invertible mod p")));
            }
            gens.push(mat);
        }
        let mut mats: Vec<Option<Mat>> = vec![None; group.order()];
        mats[0] = Some(Mat::identity(d));
        let mut queue = vec![0usize];
        let mut i = 0;
        while i < queue.len() {
            let x = queue[i];
            i += 1;
            for (j, &g) in group.generators().iter().enumerate() {
                let y = group.mul(x, g);
                let m = mats[x].as_ref().unwrap().mul(&ring, &gens[j]);
                match &mats[y] {
                    None => {
                        mats[y] = Some(m);
                        queue.push(y);
                    }
                    Some(old) if *old != m => {
                        return Err(Error::ActionAxiom(format!(
                            "the matrices violate a relation of the group (element {y})"
                        )));
                    }
                    _ => {}
                }
            }
        }
        let mats: Vec<Mat> = mats.into_iter().map(|m| m.expect("generators generate")).collect();
        let module = GModule::free(ring, mats);
        module.check_action(group)?;
        Ok(LatticeModule { group: group.clone(), ring, gen_ints: gen_ints.to_vec(), module })
    }

    /// The same module at another precision.
    pub fn with_prec(&self, prec: u32) -> Result<Self> {
        LatticeModule::new(&self.group, self.ring.p(), prec, &self.gen_ints)
    }

    pub fn group(&self) -> &GroupTable {
        &self.group
    }

    pub fn ring(&self) -> &ZMod {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.module.dim()
    }

    pub fn generator_matrices(&self) -> &[Vec<Vec<i64>>] {
        &self.gen_ints
    }

    pub fn module(&self) -> &GModule {
        &self.module
    }

    pub fn mat(&self, g: usize) -> &Mat {
        self.module.mat(g)
    }

    pub fn act(&self, v: &[u64], g: usize) -> Vec<u64> {
        self.module.act(v, g)
    }

    /// `[G, L]`: the lattice spanned by `t.g - t` for `t` in `L`.
    pub fn commutator(&self, l: &Lattice) -> Lattice {
        let mut gens = Vec::new();
        for t in l.gens() {
            for &g in self.group.generators() {
                let tg = self.act(&t, g);
                gens.push(tg.iter().zip(&t).map(|(&a, &b)| self.ring.sub(a, b)).collect());
            }
        }
        Lattice::from_gens(self.ring, self.rank(), &gens)
    }

    /// `T_0 = T`, `T_{i+1} = [G, T_i]` for `i < depth`, stopping early when
    /// a term vanishes.
    pub fn central_series(&self, depth: usize) -> Result<CentralChain> {
        let n = self.ring.prec();
        let mut terms = vec![Lattice::full(self.ring, self.rank())];
        let mut terminated = false;
        for _ in 0..depth {
            let next = self.commutator(terms.last().unwrap());
            let full = next.exps().iter().filter(|&&e| e >= n).count();
            if full == self.rank() {
                terms.push(next);
                terminated = true;
                break;
            }
            if full > 0 {
                return Err(Error::PrecisionExhausted(format!(
                    "term {} of the central series reaches p^{n}",
                    terms.len()
                )));
            }
            terms.push(next);
        }
        Ok(CentralChain { terms, terminated })
    }

    /// Whether every step of the series to `depth` has index exactly `p`.
    pub fn is_uniserial(&self, depth: usize) -> Result<(bool, Vec<u32>)> {
        let chain = self.central_series(depth)?;
        let steps = chain.index_steps();
        let ok = !chain.terminated && steps.len() == depth && steps.iter().all(|&s| s == 1);
        Ok((ok, steps))
    }

    /// The uniserial structure; fails when the action is not uniserial.
    pub fn uniserial(&self) -> Result<Uniserial> {
        Uniserial::new(self.clone())
    }
}

/// Terms of the lower central series as lattices.
#[derive(Clone, Debug)]
pub struct CentralChain {
    terms: Vec<Lattice>,
    terminated: bool,
}

impl CentralChain {
    pub fn terms(&self) -> &[Lattice] {
        &self.terms
    }

    pub fn depth(&self) -> usize {
        self.terms.len() - 1
    }

    /// Whether the series reached the zero lattice.
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// `log_p [T_i : T_{i+1}]` for each computed step.
    pub fn index_steps(&self) -> Vec<u32> {
        self.terms.windows(2).map(|w| w[1].index_exp() - w[0].index_exp()).collect()
    }
}

/// A lattice module with uniserial action, together with everything needed to
/// work with the terms `T_n` and quotients `A_n` at any level.
#[derive(Clone, Debug)]
pub struct Uniserial {
    module: LatticeModule,
    d: usize,
    chain: CentralChain,
    // Bases of T_0, ..., T_{d-1}; T_n = p^(n div d) T_(n mod d).
    bases: Vec<Mat>,
    // Action on T_r in the coordinates of bases[r], per group element.
    sub: Vec<GModule>,
    t0: Vec<u64>,
}

impl Uniserial {
    pub fn new(module: LatticeModule) -> Result<Self> {
        let d = module.rank();
        if d == 0 {
            return Err(Error::NotUniserial("rank zero".into()));
        }
        let depth = 2 * d + 1;
        if module.ring().prec() as usize <= depth + 1 {
            return Err(Error::PrecisionExhausted(format!(
                "precision {} too small for a chain of depth {depth}",
                module.ring().prec()
            )));
        }
        let chain = module.central_series(depth)?;
        let steps = chain.index_steps();
        if chain.terminated() || steps.iter().any(|&s| s != 1) {
            return Err(Error::NotUniserial(format!("index steps {steps:?}")));
        }
        let p = module.ring().p();
        for i in 0..=depth - d {
            if chain.terms[i + d] != chain.terms[i].scaled(1) {
                return Err(Error::NotUniserial(format!("T_{} != {p} T_{i}", i + d)));
            }
        }
        let ring = *module.ring();
        let hi = module.with_prec(ring.prec() + d as u32)?;
        let hring = *hi.ring();
        let hchain = hi.central_series(d)?;
        let mut bases = Vec::with_capacity(d);
        let mut sub = Vec::with_capacity(d);
        for r in 0..d {
            let b = hchain.terms[r].basis().clone();
            let s = snf(&hring, &b, Track::BOTH);
            let (sp, sq) = (s.p.as_ref().unwrap(), s.q.as_ref().unwrap());
            let mut mats = Vec::with_capacity(module.group().order());
            for g in 0..module.group().order() {
                let mut y = b.mul(&hring, hi.mat(g)).mul(&hring, sq);
                for j in 0..d {
                    let v = s.vals[j];
                    for i in 0..d {
                        if hring.val(y[(i, j)]) < v {
                            return Err(Error::Consistency(format!("T_{r} is not invariant under element {g}")));
                        }
                        y[(i, j)] = hring.div_ppow(y[(i, j)], v);
                    }
                }
                mats.push(y.mul(&hring, sp).reduce_to(&ring));
            }
            bases.push(b.reduce_to(&ring));
            sub.push(GModule::free(ring, mats));
        }
        let t0 = (0..d)
            .map(|i| {
                let mut e = vec![0u64; d];
                e[i] = 1;
                e
            })
            .find(|e| !chain.terms[1].contains(e))
            .expect("T_1 is a proper sublattice");
        Ok(Uniserial { module, d, chain, bases, sub, t0 })
    }

    pub fn module(&self) -> &LatticeModule {
        &self.module
    }

    pub fn group(&self) -> &GroupTable {
        self.module.group()
    }

    pub fn ring(&self) -> &ZMod {
        self.module.ring()
    }

    /// The period `d = rank T`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn chain(&self) -> &CentralChain {
        &self.chain
    }

    /// The distinguished generator `t_0` with `<t_0, T_1> = T`.
    pub fn t0(&self) -> &[u64] {
        &self.t0
    }

    /// A basis of `T_n` (rows, ambient coordinates).
    pub fn term_basis(&self, n: usize) -> Mat {
        let (q, r) = (n / self.d, n % self.d);
        self.bases[r].scale(self.ring(), self.ring().ppow(q as u32))
    }

    pub fn term(&self, n: usize) -> Lattice {
        let b = self.term_basis(n);
        let rows: Vec<Vec<u64>> = (0..self.d).map(|i| b.row(i).to_vec()).collect();
        Lattice::from_gens(*self.ring(), self.d, &rows)
    }

    /// `T_n` as a free module in the coordinates of [`Self::term_basis`].
    pub fn term_module(&self, n: usize) -> &GModule {
        &self.sub[n % self.d]
    }

    /// Ambient vector of the element with `T_n`-coordinates `c`.
    pub fn from_term_coords(&self, n: usize, c: &[u64]) -> Vec<u64> {
        self.term_basis(n).vec_mul(self.ring(), c)
    }

    /// `T_n`-coordinates of an ambient vector in `T_n`. The result is exact
    /// modulo `p^(N-n)`; the lower digits are lost to the division by the
    /// basis.
    pub fn to_term_coords(&self, n: usize, y: &[u64]) -> Result<Vec<u64>> {
        let ring = self.ring();
        let b = self.term_basis(n);
        let sol = solve(ring, &b.transpose(), y).ok_or_else(|| Error::Consistency(format!("vector not in T_{n}")))?;
        Ok(sol)
    }

    /// `mu: T_n -> T_{n+d}`, `t -> p t`, as a matrix in the chain bases.
    /// Verifies that it is a bijection onto `T_{n+d}`.
    pub fn mu_shift(&self, n: usize) -> Result<Mat> {
        let ring = self.ring();
        let src = self.term(n).basis().clone();
        let dst = self.term(n + self.d);
        let dst_basis = dst.basis().clone();
        let mut rows = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let y: Vec<u64> = src.row(i).iter().map(|&x| ring.mul(x, ring.p())).collect();
            if !dst.contains(&y) {
                return Err(Error::Consistency(format!("p T_{n} is not inside T_{}", n + self.d)));
            }
            let x = solve(ring, &dst_basis.transpose(), &y)
                .ok_or_else(|| Error::Consistency("mu image has no coordinates".into()))?;
            rows.push(x);
        }
        let m = Mat::from_rows(&rows, self.d);
        let lo = ring.with_prec(1)?;
        if !is_unit(&lo, &m.reduce_to(&lo)) {
            return Err(Error::Consistency(format!("mu is not onto T_{}", n + self.d)));
        }
        Ok(m)
    }

    /// Largest level the precision supports, `N - 3 v_p|G| - 2`.
    pub fn max_level(&self) -> usize {
        let ring = self.ring();
        let need = working_precision(ring.p(), self.group().order(), 0) as usize;
        (ring.prec() as usize).saturating_sub(need)
    }

    /// `A_n = T / T_n`.
    pub fn quotient(&self, n: usize) -> Result<QuotientModule> {
        if n > self.max_level() {
            return Err(Error::PrecisionExhausted(format!(
                "level {n} needs precision at least {}, have {}",
                working_precision(self.ring().p(), self.group().order(), n as u32),
                self.ring().prec()
            )));
        }
        QuotientModule::new(self, n)
    }

    /// Stabilizer of an ambient vector modulo `T_n` (`n = None`: in `T`).
    pub fn stabilizer(&self, v: &[u64], n: Option<usize>) -> Result<Vec<usize>> {
        let g = self.group();
        match n {
            None => g.stabilizer(|x: &Vec<u64>, h| self.module.act(x, h), &v.to_vec()),
            Some(n) => {
                let a = self.quotient(n)?;
                let z = a.project(v);
                g.stabilizer(|x: &Vec<u64>, h| a.module().act(x, h), &z)
            }
        }
    }
}

/// The finite module `A_n = T/T_n` in Smith-adapted coordinates.
#[derive(Clone, Debug)]
pub struct QuotientModule {
    level: usize,
    ring: ZMod,
    q: Mat,
    q_inv: Mat,
    active: Vec<usize>,
    module: GModule,
}

impl QuotientModule {
    fn new(u: &Uniserial, n: usize) -> Result<Self> {
        let ring = *u.ring();
        let d = u.d();
        let b = u.term_basis(n);
        let s = snf(&ring, &b, Track::BOTH);
        let q = s.q.unwrap();
        let q_inv = s.q_inv.unwrap();
        let active: Vec<usize> = (0..d).filter(|&i| s.vals[i] > 0).collect();
        let exps: Vec<u32> = active.iter().map(|&i| s.vals[i]).collect();
        if exps.iter().sum::<u32>() as usize != n {
            return Err(Error::NotUniserial(format!("|A_{n}| = p^{}", exps.iter().sum::<u32>())));
        }
        let mut mats = Vec::with_capacity(u.group().order());
        for g in 0..u.group().order() {
            let m = q_inv.mul(&ring, u.module().mat(g)).mul(&ring, &q);
            let mut r = Mat::zeros(active.len(), active.len());
            for (a, &i) in active.iter().enumerate() {
                for (c, &j) in active.iter().enumerate() {
                    r[(a, c)] = reduce_mod(&ring, m[(i, j)], s.vals[j]);
                }
            }
            mats.push(r);
        }
        let module = GModule::new(ring, exps, mats)?;
        Ok(QuotientModule { level: n, ring, q, q_inv, active, module })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn module(&self) -> &GModule {
        &self.module
    }

    /// Exponents of the cyclic factors, ascending.
    pub fn invariants(&self) -> &[u32] {
        self.module.exps()
    }

    pub fn order_exp(&self) -> u32 {
        self.module.order_exp()
    }

    /// Coordinates of `y + T_n`.
    pub fn project(&self, y: &[u64]) -> Vec<u64> {
        let z = self.q.vec_mul(&self.ring, y);
        let z: Vec<u64> = self.active.iter().map(|&i| z[i]).collect();
        self.module.reduce(&z)
    }

    /// The ambient representative `z Q^-1` of a coordinate vector.
    pub fn lift(&self, z: &[u64]) -> Vec<u64> {
        let mut full = vec![0u64; self.q.rows()];
        for (&i, &c) in self.active.iter().zip(z) {
            full[i] = c;
        }
        self.q_inv.vec_mul(&self.ring, &full)
    }

    /// Canonical ambient representative of `y + T_n`.
    pub fn canonical(&self, y: &[u64]) -> Vec<u64> {
        self.lift(&self.project(y))
    }

    /// The endomorphism of `A_n` induced by an ambient matrix preserving `T_n`.
    pub fn induced(&self, phi: &Mat) -> Mat {
        let m = self.q_inv.mul(&self.ring, phi).mul(&self.ring, &self.q);
        let k = self.active.len();
        let mut r = Mat::zeros(k, k);
        for (a, &i) in self.active.iter().enumerate() {
            for (c, &j) in self.active.iter().enumerate() {
                r[(a, c)] = reduce_mod(&self.ring, m[(i, j)], self.module.exps()[c]);
            }
        }
        r
    }

    /// An ambient matrix inducing the endomorphism `e` of `A_n`.
    pub fn lift_endo(&self, e: &Mat) -> Mat {
        let d = self.q.rows();
        let mut full = Mat::zeros(d, d);
        for (a, &i) in self.active.iter().enumerate() {
            for (c, &j) in self.active.iter().enumerate() {
                full[(i, j)] = e[(a, c)];
            }
        }
        self.q.mul(&self.ring, &full).mul(&self.ring, &self.q_inv)
    }
}

/// Fixed points `C_W(H)` for the elements `elems` (a generating set of `H`
/// suffices).
pub fn fixed_points(w: &GModule, elems: &[usize]) -> Result<Subquotient> {
    let ring = *w.ring();
    let k = w.dim();
    let mut a = Mat::zeros(elems.len() * k, k);
    let mut out = Vec::with_capacity(elems.len() * k);
    for (b, &h) in elems.iter().enumerate() {
        let m = w.mat(h);
        for j in 0..k {
            for i in 0..k {
                let mut x = m[(i, j)];
                if i == j {
                    x = ring.sub(x, 1);
                }
                a[(b * k + j, i)] = x;
            }
            out.push(w.exps()[j]);
        }
    }
    let top = kernel(&ring, &a, Some(&out), w.is_free());
    let rel = w.relation_columns(1);
    let bottom = if rel.is_empty() { Mat::zeros(k, 0) } else { Mat::from_cols(&rel, k) };
    Subquotient::new(ring, top, &bottom)
}

/// `hom_R(V, W^(beta))` as an abelian group of matrices `E` acting by `v -> v E`.
#[derive(Clone, Debug)]
pub struct HomSpace {
    ring: ZMod,
    rows: usize,
    cols: usize,
    // Entry (i, j) of E is p^shift[i*cols + j] times a free parameter.
    shift: Vec<u32>,
    sq: Subquotient,
}

impl HomSpace {
    pub fn invariants(&self) -> &[u32] {
        self.sq.invariants()
    }

    pub fn order_exp(&self) -> u32 {
        self.sq.order_exp()
    }

    fn to_matrix(&self, x: &[u64]) -> Mat {
        let mut e = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let s = self.shift[i * self.cols + j];
                e[(i, j)] = self.ring.mul(x[i * self.cols + j], self.ring.ppow(s));
            }
        }
        e
    }

    fn to_params(&self, e: &Mat) -> Option<Vec<u64>> {
        let mut x = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let s = self.shift[i * self.cols + j];
                let v = e[(i, j)];
                if self.ring.val(v) < s {
                    return None;
                }
                x.push(self.ring.div_ppow(v, s));
            }
        }
        Some(x)
    }

    /// Matrices of the cyclic generators.
    pub fn gens(&self) -> Vec<Mat> {
        self.sq.gens().iter().map(|x| self.to_matrix(x)).collect()
    }

    /// The element with coordinates `z`.
    pub fn element(&self, z: &[u64]) -> Mat {
        self.to_matrix(&self.sq.lift(z))
    }

    /// Coordinates of a homomorphism in this space.
    pub fn coords(&self, e: &Mat) -> Result<Vec<u64>> {
        let x = self.to_params(e).ok_or_else(|| Error::Consistency("matrix is not a homomorphism".into()))?;
        if !self.sq.in_top(&x) {
            return Err(Error::Consistency("matrix does not commute with the action".into()));
        }
        self.sq.coords(&x)
    }

    pub fn contains(&self, e: &Mat) -> bool {
        self.coords(e).is_ok()
    }

    pub fn group(&self) -> crate::abelian::FinAb {
        self.sq.group()
    }
}

fn hom_shifts(v: &GModule, w: &GModule) -> Vec<u32> {
    let mut s = Vec::with_capacity(v.dim() * w.dim());
    for &a in v.exps() {
        for &b in w.exps() {
            s.push(b.saturating_sub(a));
        }
    }
    s
}

/// `hom_R(V, W^(beta))` by solving `M^V_g E = E M^W_{g^beta}` on generators.
pub fn hom_space_direct(group: &GroupTable, v: &GModule, w: &GModule, twist: Option<&GroupAutomorphism>) -> Result<HomSpace> {
    let ring = *v.ring();
    let (kv, kw) = (v.dim(), w.dim());
    let shift = hom_shifts(v, w);
    let gens = group.generators();
    let nvar = kv * kw;
    let mut a = Mat::zeros(gens.len() * nvar, nvar);
    let mut out = Vec::with_capacity(gens.len() * nvar);
    for (b, &g) in gens.iter().enumerate() {
        let mv = v.mat(g);
        let mw = w.mat(twist.map_or(g, |t| t.apply(g)));
        for i in 0..kv {
            for j in 0..kw {
                let row = b * nvar + i * kw + j;
                // (M^V E)_ij = sum_l MV[i][l] E_lj
                for l in 0..kv {
                    let c = ring.mul(mv[(i, l)], ring.ppow(shift[l * kw + j]));
                    a[(row, l * kw + j)] = ring.add(a[(row, l * kw + j)], c);
                }
                // -(E M^W)_ij = -sum_l E_il MW[l][j]
                for l in 0..kw {
                    let c = ring.mul(mw[(l, j)], ring.ppow(shift[i * kw + l]));
                    a[(row, i * kw + l)] = ring.sub(a[(row, i * kw + l)], c);
                }
                out.push(w.exps()[j]);
            }
        }
    }
    let top = kernel(&ring, &a, Some(&out), w.is_free());
    let mut rel = Vec::new();
    for i in 0..kv {
        for j in 0..kw {
            let b = w.exps()[j];
            if b < ring.prec() {
                let mut c = vec![0u64; nvar];
                c[i * kw + j] = ring.ppow(b - shift[i * kw + j]);
                rel.push(c);
            }
        }
    }
    let bottom = if rel.is_empty() { Mat::zeros(nvar, 0) } else { Mat::from_cols(&rel, nvar) };
    let sq = Subquotient::new(ring, top, &bottom)?;
    Ok(HomSpace { ring, rows: kv, cols: kw, shift, sq })
}

/// Homomorphisms `V -> W^(beta)` obtained by sending a generator `v0` of `V`
/// to each generator of `C_W(R_v0)` (the stabilizer taken in `V`).
pub fn hom_space_via_generator(
    group: &GroupTable,
    v: &GModule,
    w: &GModule,
    twist: Option<&GroupAutomorphism>,
    v0: &[u64],
) -> Result<Vec<Mat>> {
    let stab = group.stabilizer(|x: &Vec<u64>, g| v.act(x, g), &v.reduce(v0))?;
    let wt = match twist {
        Some(t) => w.twisted(t),
        None => w.clone(),
    };
    let fixed = fixed_points(&wt, &stab)?;
    fixed.gens().iter().map(|target| extend_from_generator(group, v, w, &wt, v0, target)).collect()
}

/// The homomorphism `V -> W` (with `W` acting through `wt`) sending the
/// generator `v0` to `target`, which must be fixed by the stabilizer of `v0`.
pub fn extend_from_generator(
    group: &GroupTable,
    v: &GModule,
    w: &GModule,
    wt: &GModule,
    v0: &[u64],
    target: &[u64],
) -> Result<Mat> {
    let ring = *v.ring();
    let (kv, kw) = (v.dim(), w.dim());
    let shift = hom_shifts(v, w);
    let nvar = kv * kw;
    let mut a = Mat::zeros(group.order() * kw, nvar);
    let mut rhs = Vec::with_capacity(group.order() * kw);
    for g in 0..group.order() {
        let vg = v.act(v0, g);
        let wg = wt.act(target, g);
        for j in 0..kw {
            let scale = ring.ppow(ring.prec() - w.exps()[j].min(ring.prec()));
            let row = g * kw + j;
            for i in 0..kv {
                let c = ring.mul(vg[i], ring.ppow(shift[i * kw + j]));
                a[(row, i * kw + j)] = ring.mul(c, scale);
            }
            rhs.push(ring.mul(wg[j], scale));
        }
    }
    let x = solve(&ring, &a, &rhs)
        .ok_or_else(|| Error::Consistency("fixed point does not extend to a homomorphism".into()))?;
    let mut e = Mat::zeros(kv, kw);
    for i in 0..kv {
        for j in 0..kw {
            let val = ring.mul(x[i * kw + j], ring.ppow(shift[i * kw + j]));
            e[(i, j)] = reduce_mod(&ring, val, w.exps()[j]);
        }
    }
    Ok(e)
}

/// `hom_R(V, W^(beta))` computed both ways; the generator route is checked
/// against the direct solve before the direct space is returned.
pub fn hom_space(
    group: &GroupTable,
    v: &GModule,
    w: &GModule,
    twist: Option<&GroupAutomorphism>,
    v0: Option<&[u64]>,
) -> Result<HomSpace> {
    let direct = hom_space_direct(group, v, w, twist)?;
    if let Some(v0) = v0 {
        let via = hom_space_via_generator(group, v, w, twist, v0)?;
        let coords: Vec<Vec<u64>> = via.iter().map(|e| direct.coords(e)).collect::<Result<_>>()?;
        let sub = direct.group().subgroup_invariants(&coords);
        if sub != direct.invariants() {
            return Err(Error::Consistency(format!(
                "hom space routes disagree: {:?} via the generator, {:?} directly",
                sub,
                direct.invariants()
            )));
        }
    }
    Ok(direct)
}

/// Whether an endomorphism matrix is an automorphism (invertible mod `p`).
pub fn is_automorphism(ring: &ZMod, e: &Mat) -> bool {
    let lo = ZMod::new(ring.p(), 1).expect("p is prime");
    is_unit(&lo, &e.reduce_to(&lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d8_gaussian(prec: u32) -> LatticeModule {
        let g = GroupTable::from_presentation(
            &["a".into(), "b".into()],
            &["a^2".into(), "b^4".into(), "b^a = b^-1".into()],
            64,
        )
        .unwrap();
        LatticeModule::new(&g, 2, prec, &[vec![vec![1, 0], vec![0, -1]], vec![vec![0, 1], vec![-1, 0]]]).unwrap()
    }

    fn c2_negation(prec: u32) -> LatticeModule {
        LatticeModule::new(&GroupTable::cyclic(2), 2, prec, &[vec![vec![-1]]]).unwrap()
    }

    #[test]
    fn relations_are_checked() {
        let c2 = GroupTable::cyclic(2);
        assert!(LatticeModule::new(&c2, 2, 8, &[vec![vec![0, 1], vec![1, 1]]]).is_err());
        assert!(LatticeModule::new(&c2, 2, 8, &[vec![vec![2]]]).is_err());
    }

    #[test]
    fn levels_beyond_the_precision_are_refused() {
        let u = d8_gaussian(17).uniserial().unwrap();
        assert_eq!(u.max_level(), 6);
        assert!(u.quotient(6).is_ok());
        assert!(matches!(u.quotient(7), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn d8_chain_is_uniserial() {
        let t = d8_gaussian(18);
        let (ok, steps) = t.is_uniserial(8).unwrap();
        assert!(ok);
        assert_eq!(steps, vec![1; 8]);
        let u = t.uniserial().unwrap();
        assert_eq!(u.d(), 2);
        let a2 = u.quotient(2).unwrap();
        assert_eq!(a2.invariants(), &[1, 1]);
        let a3 = u.quotient(3).unwrap();
        assert_eq!(a3.invariants(), &[1, 2]);
        for n in 0..7 {
            assert_eq!(u.quotient(n).unwrap().order_exp() as usize, n);
        }
    }

    #[test]
    fn non_uniserial_examples() {
        let t = LatticeModule::new(&GroupTable::cyclic(2), 2, 8, &[vec![vec![-1, 0], vec![0, -1]]]).unwrap();
        let (ok, steps) = t.is_uniserial(3).unwrap();
        assert!(!ok);
        assert_eq!(steps[0], 2);
        let triv = LatticeModule::new(&GroupTable::cyclic(2), 2, 8, &[vec![vec![1]]]).unwrap();
        let chain = triv.central_series(3).unwrap();
        assert!(chain.terminated());
        assert!(!triv.is_uniserial(3).unwrap().0);
        assert!(triv.uniserial().is_err());
    }

    #[test]
    fn c2_negation_quotients() {
        let u = c2_negation(10).uniserial().unwrap();
        assert_eq!(u.d(), 1);
        assert_eq!(u.quotient(3).unwrap().invariants(), &[3]);
        assert_eq!(u.term_basis(3)[(0, 0)], 8);
        assert_eq!(u.quotient(0).unwrap().order_exp(), 0);
    }

    #[test]
    fn term_actions_match_conjugation() {
        let t = d8_gaussian(12);
        let u = t.uniserial().unwrap();
        let ring = *t.ring();
        for n in 0..5 {
            let b = u.term_basis(n);
            for g in 0..8 {
                let lhs = u.term_module(n).mat(g).mul(&ring, &b);
                let rhs = b.mul(&ring, t.mat(g));
                assert_eq!(lhs, rhs, "n = {n}, g = {g}");
            }
        }
    }

    #[test]
    fn mu_shift_is_bijective() {
        let u = d8_gaussian(12).uniserial().unwrap();
        for n in 0..4 {
            u.mu_shift(n).unwrap();
        }
        let c = c2_negation(10).uniserial().unwrap();
        assert_eq!(c.mu_shift(2).unwrap()[(0, 0)], 1);
    }

    #[test]
    fn fixed_points_examples() {
        let u = c2_negation(10).uniserial().unwrap();
        let a = u.quotient(4).unwrap();
        assert_eq!(fixed_points(a.module(), &[1]).unwrap().invariants(), &[1]);
        assert_eq!(fixed_points(a.module(), &[0]).unwrap().invariants(), &[4]);
        let t = fixed_points(u.module().module(), &[1]).unwrap();
        assert!(t.is_trivial());
    }

    #[test]
    fn hom_routes_agree() {
        let t = d8_gaussian(17);
        let u = t.uniserial().unwrap();
        let g = t.group().clone();
        let auts = g.automorphism_group(64).unwrap();
        for n in 1..6 {
            let a = u.quotient(n).unwrap();
            let v0 = a.project(u.t0());
            for beta in &auts {
                let h = hom_space(&g, a.module(), a.module(), Some(beta), Some(&v0)).unwrap();
                if beta.is_identity() {
                    assert!(h.contains(&Mat::identity(a.module().dim())));
                }
                for e in h.gens() {
                    for &x in g.generators() {
                        let lhs = a.module().mat(x).mul(t.ring(), &e);
                        let rhs = e.mul(t.ring(), a.module().mat(beta.apply(x)));
                        for i in 0..e.rows() {
                            assert_eq!(a.module().reduce(lhs.row(i)), a.module().reduce(rhs.row(i)));
                        }
                    }
                }
            }
        }
        // End_R T for the lattice is the scalars.
        let h = hom_space(&g, t.module(), t.module(), None, Some(u.t0())).unwrap();
        assert_eq!(h.invariants(), &[17]);
    }

    #[test]
    fn trivial_group_homs_are_everything() {
        let g = GroupTable::trivial();
        let ring = ZMod::new(3, 6).unwrap();
        let v = GModule::new(ring, vec![2], vec![Mat::identity(1)]).unwrap();
        let w = GModule::new(ring, vec![1, 2], vec![Mat::identity(2)]).unwrap();
        let h = hom_space(&g, &v, &w, None, Some(&[1])).unwrap();
        assert_eq!(h.order_exp(), 3);
    }
}
