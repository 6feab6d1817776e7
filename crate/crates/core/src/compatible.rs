//! Compatible pairs `(beta, eps)` of a group and a module, their action on
//! second cohomology, and the comparison of orbits at levels `n` and `n + d`.
//!
//! A pair acts on cochains by `gamma'(g, h) = gamma(g^(beta^-1), h^(beta^-1)).eps`.
//! Pairs compose as `(b1, e1)(b2, e2) = (b2 o b1, e1 e2)`, which makes this a
//! right action.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::abelian::FinAb;
use crate::cohomology::{coboundary, cochain_dim, cochain_from_fn, value_at, Cohomology, SplitData, Tower};
use crate::error::{Error, Result};
use crate::finite_group::{GroupAutomorphism, GroupTable};
use crate::lattice_module::{extend_from_generator, hom_space_direct, is_automorphism, GModule, HomSpace, QuotientModule};
use crate::matrix::Mat;
use crate::snf::{snf, Track};

/// Default bound on enumerated sets (pairs, classes, closures).
pub const ENUM_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompatiblePair {
    pub beta: GroupAutomorphism,
    pub eps: Mat,
}

fn reduce_cols(module: &GModule, m: &Mat) -> Mat {
    let ring = module.ring();
    let mut r = m.clone();
    for i in 0..r.rows() {
        for (j, &e) in module.exps().iter().enumerate() {
            let x = r[(i, j)];
            r[(i, j)] = if e >= ring.prec() { x } else { x % ring.p().pow(e) };
        }
    }
    r
}

impl CompatiblePair {
    pub fn identity(order: usize, dim: usize) -> Self {
        CompatiblePair { beta: GroupAutomorphism::identity(order), eps: Mat::identity(dim) }
    }

    /// `self` followed by `other`.
    pub fn then(&self, module: &GModule, other: &CompatiblePair) -> Self {
        let eps = self.eps.mul(module.ring(), &other.eps);
        CompatiblePair { beta: self.beta.then(&other.beta), eps: reduce_cols(module, &eps) }
    }

    /// `M_g eps = eps M_(g^beta)` for every generator `g`.
    pub fn is_compatible(&self, group: &GroupTable, module: &GModule) -> bool {
        let ring = module.ring();
        group.generators().iter().all(|&g| {
            let lhs = module.mat(g).mul(ring, &self.eps);
            let rhs = self.eps.mul(ring, module.mat(self.beta.apply(g)));
            reduce_cols(module, &lhs) == reduce_cols(module, &rhs)
        })
    }

    pub fn is_identity(&self, module: &GModule) -> bool {
        self.beta.is_identity() && reduce_cols(module, &self.eps) == reduce_cols(module, &Mat::identity(module.dim()))
    }

    /// The inverse pair, found as a power of `self` (the pair group is finite
    /// for finite modules; for lattices `eps` is inverted directly).
    pub fn inverse(&self, module: &GModule) -> Result<Self> {
        if module.is_free() {
            let inv = crate::snf::inverse(module.ring(), &self.eps)
                .ok_or_else(|| Error::Consistency("eps is not invertible".into()))?;
            return Ok(CompatiblePair { beta: self.beta.inverse(), eps: inv });
        }
        let mut prev = CompatiblePair::identity(self.beta.perm.len(), module.dim());
        let mut cur = self.clone();
        for _ in 0..ENUM_CAP {
            if cur.is_identity(module) {
                return Ok(prev);
            }
            prev = cur.clone();
            cur = cur.then(module, self);
        }
        Err(Error::CapExceeded { what: "pair order", needed: ENUM_CAP + 1, cap: ENUM_CAP })
    }
}

/// Whether `e` is bijective on the module: invertible mod `p` for lattices,
/// images of the basis generating everything for finite modules.
pub fn is_module_automorphism(module: &GModule, e: &Mat) -> bool {
    if module.is_free() {
        return is_automorphism(module.ring(), e);
    }
    let g = FinAb::new(module.ring().p(), module.exps().to_vec());
    let rows: Vec<Vec<u64>> = (0..e.rows()).map(|i| module.reduce(e.row(i))).collect();
    let mut inv = g.subgroup_invariants(&rows);
    let mut full = module.exps().to_vec();
    inv.sort_unstable();
    full.sort_unstable();
    inv == full
}

/// `Comp(R, V)` for a finite module `V`: every `beta` in `auts` with every
/// invertible element of `End_R^beta V`.
pub fn compatible_pairs(
    group: &GroupTable,
    module: &GModule,
    auts: &[GroupAutomorphism],
    cap: usize,
) -> Result<Vec<CompatiblePair>> {
    if module.is_free() {
        return Err(Error::Invalid("compatible pairs are enumerated for finite modules only".into()));
    }
    let mut out = Vec::new();
    for beta in auts {
        let hs = hom_space_direct(group, module, module, Some(beta))?;
        for z in hs.group().elements(cap)? {
            let eps = reduce_cols(module, &hs.element(&z));
            if is_module_automorphism(module, &eps) {
                out.push(CompatiblePair { beta: beta.clone(), eps });
                if out.len() > cap {
                    return Err(Error::CapExceeded { what: "compatible pairs", needed: out.len(), cap });
                }
            }
        }
    }
    Ok(out)
}

/// Checks closure of a pair set under composition and inverses.
pub fn check_closed(module: &GModule, pairs: &[CompatiblePair]) -> Result<()> {
    let set: HashSet<&CompatiblePair> = pairs.iter().collect();
    for a in pairs {
        for b in pairs {
            if !set.contains(&a.then(module, b)) {
                return Err(Error::Consistency("compatible pairs are not closed under composition".into()));
            }
        }
        if !set.contains(&a.inverse(module)?) {
            return Err(Error::Consistency("compatible pairs are not closed under inverses".into()));
        }
    }
    Ok(())
}

/// Applies a pair to an `m`-cochain.
pub fn act_on_cochain(group: &GroupTable, module: &GModule, pair: &CompatiblePair, m: usize, c: &[u64]) -> Vec<u64> {
    let order = group.order();
    let k = module.dim();
    let binv = pair.beta.inverse();
    let ring = module.ring();
    cochain_from_fn(order, k, m, |t| {
        let src: Vec<usize> = t.iter().map(|&g| binv.apply(g)).collect();
        let v = value_at(order, k, c, &src);
        module.reduce(&pair.eps.vec_mul(ring, &v))
    })
}

/// The action of one pair on `H^2` as images of the cyclic generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionMap {
    pub images: Vec<Vec<u64>>,
}

impl ActionMap {
    /// Computes the images and checks that coboundaries of all unit
    /// 1-cochains are sent to coboundaries.
    pub fn new(group: &GroupTable, h2: &Cohomology, pair: &CompatiblePair) -> Result<Self> {
        let module = h2.module();
        let dim1 = cochain_dim(group.order(), module.dim(), 1);
        for i in 0..dim1 {
            let mut x = vec![0u64; dim1];
            x[i] = 1;
            let b = coboundary(group, module, 1, &x);
            let img = act_on_cochain(group, module, pair, 2, &b);
            if h2.coords(&img)?.iter().any(|&v| v != 0) {
                return Err(Error::Consistency("pair action does not preserve coboundaries".into()));
            }
        }
        let images = h2
            .gens()
            .iter()
            .map(|g| h2.coords(&act_on_cochain(group, module, pair, 2, g)))
            .collect::<Result<_>>()?;
        Ok(ActionMap { images })
    }

    pub fn apply(&self, g: &FinAb, z: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; g.invariants().len()];
        for (c, img) in z.iter().zip(&self.images) {
            out = g.add(&out, &g.scale(*c, img));
        }
        out
    }
}

/// Orbits of a group of linear maps on a finite abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitPartition {
    /// Each orbit sorted by element index; orbits sorted by their least element.
    pub classes: Vec<Vec<Vec<u64>>>,
    pub stabilizer_sizes: Vec<usize>,
    /// Order of the image of the acting group in `Sym(H^2)`.
    pub image_order: usize,
}

impl OrbitPartition {
    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.len()).collect()
    }

    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes();
        s.sort_unstable();
        s
    }

    /// Index of the orbit containing `z`.
    pub fn orbit_of(&self, z: &[u64]) -> Option<usize> {
        self.classes.iter().position(|c| c.iter().any(|x| x == z))
    }
}

/// Orbits of `maps` on all of `g`, by breadth-first closure.
pub fn orbits(g: &FinAb, maps: &[ActionMap], cap: usize) -> Result<OrbitPartition> {
    let elems = g.elements(cap)?;
    let perms: Vec<Vec<usize>> =
        maps.iter().map(|m| elems.iter().map(|z| g.index_of(&m.apply(g, z))).collect()).collect();
    for p in &perms {
        let mut seen = vec![false; p.len()];
        for &x in p {
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::Consistency("pair acts non-bijectively on H^2".into()));
            }
        }
    }
    // Image of the acting group as permutations.
    let id: Vec<usize> = (0..elems.len()).collect();
    let mut group: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for p in &perms {
            let y: Vec<usize> = x.iter().map(|&i| p[i]).collect();
            if group.insert(y.clone()) {
                if group.len() > cap {
                    return Err(Error::CapExceeded { what: "action image", needed: group.len(), cap });
                }
                queue.push_back(y);
            }
        }
    }
    let mut orbit_id = vec![usize::MAX; elems.len()];
    let mut classes = Vec::new();
    let mut stabilizer_sizes = Vec::new();
    for start in 0..elems.len() {
        if orbit_id[start] != usize::MAX {
            continue;
        }
        let id = classes.len();
        orbit_id[start] = id;
        let mut members = vec![start];
        let mut i = 0;
        while i < members.len() {
            for p in &perms {
                let y = p[members[i]];
                if orbit_id[y] == usize::MAX {
                    orbit_id[y] = id;
                    members.push(y);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        let stab = group.iter().filter(|q| q[start] == start).count();
        if stab * members.len() != group.len() {
            return Err(Error::Consistency("orbit-stabilizer count fails".into()));
        }
        stabilizer_sizes.push(stab);
        classes.push(members.into_iter().map(|i| elems[i].clone()).collect());
    }
    Ok(OrbitPartition { classes, stabilizer_sizes, image_order: group.len() })
}

/// Orbits of `Comp(R, V)` on `H^2(R, V)`.
pub fn orbits_on_h2(group: &GroupTable, h2: &Cohomology, pairs: &[CompatiblePair], cap: usize) -> Result<OrbitPartition> {
    let maps = action_maps(group, h2, pairs)?;
    orbits(&h2.group(), &maps, cap)
}

/// Distinct action maps of the given pairs, in first-seen order.
pub fn action_maps(group: &GroupTable, h2: &Cohomology, pairs: &[CompatiblePair]) -> Result<Vec<ActionMap>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for pair in pairs {
        let m = ActionMap::new(group, h2, pair)?;
        if seen.insert(m.clone()) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Chain invariance of a pair on `A_n`: each image of `T_j` for `j <= n` is
/// mapped into itself.
pub fn preserves_chain(tower: &Tower, a: &QuotientModule, pair: &CompatiblePair) -> bool {
    let u = tower.uniserial();
    let ring = *u.ring();
    let g = FinAb::new(ring.p(), a.invariants().to_vec());
    (0..=a.level()).all(|j| {
        let b = u.term_basis(j);
        let gens: Vec<Vec<u64>> = (0..b.rows()).map(|i| a.project(b.row(i))).collect();
        gens.iter().all(|x| {
            let y = a.module().reduce(&pair.eps.vec_mul(&ring, x));
            g.solve(&gens, &y).is_some()
        })
    })
}

/// Chain invariance of a lattice pair: `T_j eps <= T_j` for `j <= depth`.
pub fn preserves_lattice_chain(tower: &Tower, eps: &Mat, depth: usize) -> bool {
    let u = tower.uniserial();
    let ring = u.ring();
    (0..=depth).all(|j| {
        let b = u.term_basis(j);
        let l = u.term(j);
        (0..b.rows()).all(|i| l.contains(&eps.vec_mul(ring, b.row(i))))
    })
}

/// `a(n)`, `b(n)` and the derived thresholds at one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExponentBounds {
    pub level: usize,
    /// `log_p max{exp H^2(R, T), exp H^3(R, T_n)}`.
    pub a_exp: u32,
    /// `log_p exp H^1(R_t0, T_n)`.
    pub b_exp: u32,
    /// Least `v` with `p^v >= b max{a, b}`.
    pub v: u32,
    pub split_ok: bool,
    /// `floor(n/d) >= log_p(max{a, b} b)`.
    pub assumption_ok: bool,
    /// `n >= d log_p b`, needed for the complement `E_n`.
    pub complement_ok: bool,
    /// Both summands of the split are invariant under every lattice pair.
    /// A level where this fails lies below the range where the split is
    /// canonical.
    pub natural_ok: bool,
}

impl ExponentBounds {
    pub fn qualifies(&self) -> bool {
        self.split_ok && self.assumption_ok && self.complement_ok && self.natural_ok
    }
}

/// The stabilizer `P = R_t0` as a subgroup table and its element list.
pub fn t0_stabilizer(tower: &Tower) -> Result<(GroupTable, Vec<usize>)> {
    let u = tower.uniserial();
    let p = u.stabilizer(u.t0(), None)?;
    tower.group().subgroup_table(&p)
}

/// `H^1(R_t0, T_n)`.
pub fn h1_stabilizer(tower: &Tower, n: usize) -> Result<Cohomology> {
    let (ptable, pelems) = t0_stabilizer(tower)?;
    Cohomology::compute(&ptable, &tower.uniserial().term_module(n).restrict(&pelems), 1)
}

pub fn exponent_bounds(tower: &Tower, n: usize) -> Result<ExponentBounds> {
    let hyp = tower.split_hypotheses(n)?;
    let a_exp = hyp.h2_exp.max(hyp.h3_exp);
    let b_exp = h1_stabilizer(tower, n)?.exponent_exp();
    let q = (n / tower.d()) as u32;
    Ok(ExponentBounds {
        level: n,
        a_exp,
        b_exp,
        v: b_exp + a_exp.max(b_exp),
        split_ok: hyp.ok,
        assumption_ok: q >= a_exp.max(b_exp) + b_exp,
        complement_ok: n >= b_exp as usize * tower.d(),
        natural_ok: hyp.ok && split_is_natural(tower, n)?,
    })
}

/// Whether every lattice pair, reduced to `A_n`, maps `Im theta_2` and `K`
/// into themselves.
pub fn split_is_natural(tower: &Tower, n: usize) -> Result<bool> {
    let split = tower.split(n)?;
    let lp = LatticePairs::new(tower, ENUM_CAP)?;
    let h2 = split.h2();
    let g = h2.group();
    for pair in lp.pairs(ceil_div(n, tower.d()) as u32, ENUM_CAP)? {
        let map = ActionMap::new(tower.group(), h2, &lp.reduce(split.quotient(), &pair))?;
        for k in split.complement() {
            if split.decompose(&map.apply(&g, k))?.0.iter().any(|&x| x != 0) {
                return Ok(false);
            }
        }
        for t in split.theta() {
            if !split.in_theta(&map.apply(&g, t))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Checks `a(n + d) = a(n)` and `b(n + d) = b(n)` by recomputation.
pub fn check_bounds_periodic(tower: &Tower, n: usize) -> Result<()> {
    let lo = exponent_bounds(tower, n)?;
    let hi = exponent_bounds(tower, n + tower.d())?;
    if lo.a_exp != hi.a_exp || lo.b_exp != hi.b_exp {
        return Err(Error::Consistency(format!(
            "bounds not periodic: a = p^{}, b = p^{} at {n} but p^{}, p^{} at {}",
            lo.a_exp,
            lo.b_exp,
            hi.a_exp,
            hi.b_exp,
            n + tower.d()
        )));
    }
    Ok(())
}

/// The least `n` in `start..=max_n` with `n` and `n + d` both qualifying.
pub fn least_qualifying_level(tower: &Tower, start: usize, max_n: usize) -> Result<usize> {
    for n in start.max(1)..=max_n {
        if exponent_bounds(tower, n)?.qualifies() && exponent_bounds(tower, n + tower.d())?.qualifies() {
            return Ok(n);
        }
    }
    Err(Error::Hypothesis(format!("no qualifying level up to {max_n}")))
}

/// A complement `E_n` of `(End_R T)_(A_n)` in `End_R A_n`.
#[derive(Clone, Debug)]
pub struct Complement {
    pub level: usize,
    /// Generators as endomorphisms of `A_n`.
    pub gens: Vec<Mat>,
    /// Lattice lifts `T -> T` of the generators.
    pub lifts: Vec<Mat>,
    pub invariants: Vec<u32>,
    pub h1_invariants: Vec<u32>,
}

/// Builds `E_n` by sending `t0 + T_n` to the fixed points of `R_t0` that come
/// from `H^1(R_t0, T_n)`, realized inside `f^-1 T_n / T_n` with
/// `f = exp H^1(R_t0, T_n)`.
pub fn complement_en(tower: &Tower, n: usize) -> Result<Complement> {
    let u = tower.uniserial();
    let ring = *u.ring();
    let group = tower.group();
    let d = tower.d();
    let (ptable, pelems) = t0_stabilizer(tower)?;
    let h1 = Cohomology::compute(&ptable, &u.term_module(n).restrict(&pelems), 1)?;
    let s = h1.exponent_exp();
    if n < s as usize * d {
        return Err(Error::Hypothesis(format!("E_{n} needs n >= {} (exp H^1(R_t0, T_n) = p^{s})", s as usize * d)));
    }
    let a = u.quotient(n)?;
    let dlevel = n - s as usize * d;
    let dm = crate::cohomology::coboundary_matrix(&ptable, &u.term_module(dlevel).restrict(&pelems), 0)?;
    let sf = snf(&ring, &dm, Track::COLS);
    let basis = sf.q.as_ref().expect("column transform");
    let v0 = a.project(u.t0());
    let q = group.stabilizer(|x: &Vec<u64>, h| a.module().act(x, h), &v0)?;
    let mut gens = Vec::new();
    for i in 0..dm.cols() {
        let v = sf.val(i);
        if v == 0 || v >= ring.prec() {
            continue;
        }
        if v > s {
            return Err(Error::Consistency(format!("d^0 divisor p^{v} above exp H^1 = p^{s}")));
        }
        let col: Vec<u64> = basis.col(i).iter().map(|&x| ring.mul(x, ring.ppow(s - v))).collect();
        let target = a.project(&u.from_term_coords(dlevel, &col));
        if q.iter().any(|&h| a.module().act(&target, h) != target) {
            return Err(Error::Consistency("complement target is not fixed by R_(t0 + T_n)".into()));
        }
        gens.push(extend_from_generator(group, a.module(), a.module(), a.module(), &v0, &target)?);
    }
    let end_a = hom_space_direct(group, a.module(), a.module(), None)?;
    let end_t = hom_space_direct(group, u.module().module(), u.module().module(), None)?;
    let fa = end_a.group();
    let en: Vec<Vec<u64>> = gens.iter().map(|e| end_a.coords(e)).collect::<Result<_>>()?;
    let lifted: Vec<Vec<u64>> = end_t.gens().iter().map(|e| end_a.coords(&a.induced(e))).collect::<Result<_>>()?;
    let invariants = fa.subgroup_invariants(&en);
    let lt: u32 = fa.subgroup_invariants(&lifted).iter().sum();
    let mut all = en.clone();
    all.extend(lifted);
    let total: u32 = fa.subgroup_invariants(&all).iter().sum();
    let mut h1_invariants = h1.invariants().to_vec();
    h1_invariants.sort_unstable();
    if invariants != h1_invariants {
        return Err(Error::Consistency(format!("E_{n} has invariants {invariants:?}, H^1 has {h1_invariants:?}")));
    }
    if total != fa.order_exp() || total != lt + invariants.iter().sum::<u32>() {
        return Err(Error::Consistency(format!("E_{n} is not a complement of (End_R T)_(A_{n})")));
    }
    let lifts = gens.iter().map(|e| a.lift_endo(e)).collect();
    Ok(Complement { level: n, gens, lifts, invariants, h1_invariants })
}

/// `Gamma = Comp(R, T)` at lattice level: `End_R^beta T` for each `beta`.
pub struct LatticePairs<'a> {
    tower: &'a Tower,
    auts: Vec<GroupAutomorphism>,
    homs: Vec<HomSpace>,
}

impl<'a> LatticePairs<'a> {
    pub fn new(tower: &'a Tower, aut_cap: usize) -> Result<Self> {
        let group = tower.group();
        let t = tower.uniserial().module().module();
        let auts = group.automorphism_group(aut_cap)?;
        let homs = auts.iter().map(|b| hom_space_direct(group, t, t, Some(b))).collect::<Result<_>>()?;
        Ok(LatticePairs { tower, auts, homs })
    }

    pub fn tower(&self) -> &Tower {
        self.tower
    }

    pub fn automorphisms(&self) -> &[GroupAutomorphism] {
        &self.auts
    }

    /// Ranks of `End_R^beta T` per automorphism.
    pub fn ranks(&self) -> Vec<usize> {
        self.homs.iter().map(|h| h.invariants().len()).collect()
    }

    /// Generators of `End_R T`.
    pub fn endomorphisms(&self) -> Vec<Mat> {
        let i = self.auts.iter().position(|b| b.is_identity()).expect("identity automorphism");
        self.homs[i].gens()
    }

    /// All pairs `(beta, sum c_j G_j)` with `0 <= c_j < p^e` and invertible
    /// `eps`; a full set of representatives of `Gamma` modulo `p^e End`.
    pub fn pairs(&self, e: u32, cap: usize) -> Result<Vec<CompatiblePair>> {
        let ring = *self.tower.uniserial().ring();
        let pe = ring.p().pow(e);
        let mut out = Vec::new();
        for (beta, hs) in self.auts.iter().zip(&self.homs) {
            let gens = hs.gens();
            let r = gens.len() as u32;
            let count = (pe as u128).pow(r);
            if count > cap as u128 {
                return Err(Error::CapExceeded { what: "lattice pairs", needed: count.min(usize::MAX as u128) as usize, cap });
            }
            for idx in 0..count as u64 {
                let mut eps = Mat::zeros(ring_dim(self.tower), ring_dim(self.tower));
                let mut rest = idx;
                for g in &gens {
                    let c = rest % pe;
                    rest /= pe;
                    eps = eps.add(&ring, &g.scale(&ring, c));
                }
                if is_automorphism(&ring, &eps) {
                    out.push(CompatiblePair { beta: beta.clone(), eps });
                }
            }
            if out.len() > cap {
                return Err(Error::CapExceeded { what: "lattice pairs", needed: out.len(), cap });
            }
        }
        Ok(out)
    }

    /// `pi_n`: reduction of a lattice pair to `A_n`.
    pub fn reduce(&self, a: &QuotientModule, pair: &CompatiblePair) -> CompatiblePair {
        CompatiblePair { beta: pair.beta.clone(), eps: a.induced(&pair.eps) }
    }
}

fn ring_dim(tower: &Tower) -> usize {
    tower.uniserial().module().rank()
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// `1 + phi` on a finite module.
fn one_plus(module: &GModule, phi: &Mat) -> Mat {
    reduce_cols(module, &Mat::identity(module.dim()).add(module.ring(), phi))
}

/// Outcome of the `rho_n`, `pi_n`, `lambda` checks at one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub level: usize,
    pub comp_order: usize,
    pub im_pi_rho_order: usize,
    pub im_sigma_order: usize,
    pub en_order: usize,
    /// `Gamma_n = <Im pi_n, Im rho_n>`.
    pub generated: bool,
    /// `|Gamma_n / Im(pi_n rho)| = |Gamma / Im rho| |E_n|`.
    pub order_formula: bool,
    pub rho_additive: bool,
    pub centralizes: bool,
    pub normal: bool,
    pub acts_trivially: bool,
    /// The quotient orders agree at `n` and `n + d`.
    pub lambda_orders: bool,
}

impl StructureReport {
    pub fn ok(&self) -> bool {
        self.generated
            && self.order_formula
            && self.rho_additive
            && self.centralizes
            && self.normal
            && self.acts_trivially
            && self.lambda_orders
    }
}

/// Everything needed at one level: `A_n`, its split, `Comp(R, A_n)`, `E_n`.
pub struct Level {
    pub bounds: ExponentBounds,
    pub split: SplitData,
    pub comp: Vec<CompatiblePair>,
    pub complement: Complement,
}

impl Level {
    pub fn build(lp: &LatticePairs<'_>, n: usize, cap: usize) -> Result<Self> {
        let tower = lp.tower;
        let bounds = exponent_bounds(tower, n)?;
        if !bounds.qualifies() {
            return Err(Error::Hypothesis(format!(
                "level {n}: need floor(n/d) >= log_p(max(a,b) b) = {}, the split hypotheses and a natural split",
                bounds.a_exp.max(bounds.b_exp) + bounds.b_exp
            )));
        }
        let split = tower.split(n)?;
        let comp = compatible_pairs(tower.group(), split.quotient().module(), &lp.auts, cap)?;
        let complement = complement_en(tower, n)?;
        Ok(Level { bounds, split, comp, complement })
    }

    pub fn level(&self) -> usize {
        self.bounds.level
    }

    pub fn module(&self) -> &GModule {
        self.split.quotient().module()
    }

    /// `rho_n(phi) = (1, 1 + phi)`.
    pub fn rho(&self, phi: &Mat) -> CompatiblePair {
        let m = self.module();
        CompatiblePair { beta: GroupAutomorphism::identity(self.comp[0].beta.perm.len()), eps: one_plus(m, phi) }
    }

    fn all_en(&self, cap: usize) -> Result<Vec<Mat>> {
        let ring = *self.module().ring();
        let m = self.module();
        let orders: Vec<u64> = self.complement.invariants.iter().map(|&e| ring.p().pow(e)).collect();
        let count: u64 = orders.iter().product();
        if count as usize > cap {
            return Err(Error::CapExceeded { what: "E_n elements", needed: count as usize, cap });
        }
        // E_n generators need not be a basis in Smith form; enumerate sums and dedupe.
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut frontier = vec![Mat::zeros(m.dim(), m.dim())];
        seen.insert(frontier[0].clone());
        out.push(frontier[0].clone());
        while let Some(x) = frontier.pop() {
            for g in &self.complement.gens {
                let y = reduce_cols(m, &x.add(&ring, g));
                if seen.insert(y.clone()) {
                    out.push(y.clone());
                    frontier.push(y);
                }
            }
        }
        Ok(out)
    }
}

fn closure(module: &GModule, gens: &[CompatiblePair], cap: usize) -> Result<HashSet<CompatiblePair>> {
    let id = CompatiblePair::identity(gens.first().map_or(1, |g| g.beta.perm.len()), module.dim());
    let mut set = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.then(module, g);
            if set.insert(y.clone()) {
                if set.len() > cap {
                    return Err(Error::CapExceeded { what: "pair closure", needed: set.len(), cap });
                }
                queue.push_back(y);
            }
        }
    }
    Ok(set)
}

/// The `(1, 1 + c phi)` elements of `Im(pi_n rho)` for `c = p^c_exp`.
fn im_pi_rho(lp: &LatticePairs<'_>, level: &Level, c_exp: u32) -> Vec<CompatiblePair> {
    let ring = *lp.tower.uniserial().ring();
    let a = level.split.quotient();
    let e = ceil_div(level.level(), lp.tower.d()) as u32;
    let pe = ring.p().pow(e);
    let gens = lp.endomorphisms();
    let count = pe.pow(gens.len() as u32);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for idx in 0..count {
        let mut phi = Mat::zeros(ring_dim(lp.tower), ring_dim(lp.tower));
        let mut rest = idx;
        for g in &gens {
            phi = phi.add(&ring, &g.scale(&ring, rest % pe));
            rest /= pe;
        }
        let phi = phi.scale(&ring, ring.ppow(c_exp));
        let eps = a.induced(&Mat::identity(phi.rows()).add(&ring, &phi));
        let pair = CompatiblePair { beta: GroupAutomorphism::identity(lp.tower.group().order()), eps };
        if seen.insert(pair.clone()) {
            out.push(pair);
        }
    }
    out
}

/// Checks the structure of `Gamma_n` against `Gamma` and `E_n`.
pub fn rho_pi_lambda(lp: &LatticePairs<'_>, lo: &Level, hi: &Level, cap: usize) -> Result<StructureReport> {
    let tower = lp.tower;
    let group = tower.group();
    let n = lo.level();
    let d = tower.d();
    let ring = *tower.uniserial().ring();
    let m = lo.module();
    let a = lo.split.quotient();
    let c_exp = lo.bounds.a_exp.max(lo.bounds.b_exp);
    let lattice = lp.pairs(ceil_div(n + d, d) as u32, cap)?;

    // Gamma_n generated by Im pi_n and Im rho_n.
    let mut gens: Vec<CompatiblePair> = lattice.iter().map(|g| lp.reduce(a, g)).collect();
    gens.extend(lo.complement.gens.iter().map(|phi| lo.rho(phi)));
    let gen_set = closure(m, &gens, cap)?;
    let comp_set: HashSet<&CompatiblePair> = lo.comp.iter().collect();
    let generated = gen_set.len() == comp_set.len() && gen_set.iter().all(|x| comp_set.contains(x));

    // Orders.
    let pr = im_pi_rho(lp, lo, c_exp);
    let cmod = ring.p().pow(c_exp);
    let sigma: HashSet<(GroupAutomorphism, Vec<u64>)> =
        lattice.iter().map(|g| (g.beta.clone(), g.eps.entries().iter().map(|&x| x % cmod).collect())).collect();
    let en = lo.all_en(cap)?;
    let order_formula = lo.comp.len().is_multiple_of(pr.len()) && lo.comp.len() / pr.len() == sigma.len() * en.len();

    // rho_n is additive.
    let mut rho_additive = true;
    for x in &lo.complement.gens {
        for y in &lo.complement.gens {
            let lhs = lo.rho(x).then(m, &lo.rho(y));
            let rhs = lo.rho(&reduce_cols(m, &x.add(&ring, y)));
            rho_additive &= lhs == rhs;
        }
    }

    // Im rho_n centralizes Im(pi_n rho), which is normal in Gamma_n.
    let pr_set: HashSet<&CompatiblePair> = pr.iter().collect();
    let mut centralizes = true;
    for phi in &lo.complement.gens {
        let r = lo.rho(phi);
        for x in &pr {
            centralizes &= r.then(m, x) == x.then(m, &r);
        }
    }
    let mut normal = true;
    for g in &gens {
        let gi = g.inverse(m)?;
        for x in &pr {
            normal &= pr_set.contains(&gi.then(m, x).then(m, g));
        }
    }

    // Im(pi_n rho) acts trivially on H^2(R, A_n).
    let h2 = lo.split.h2();
    let fg = h2.group();
    let mut acts_trivially = true;
    for x in &pr {
        let map = ActionMap::new(group, h2, x)?;
        acts_trivially &= map.images.iter().enumerate().all(|(i, img)| {
            let mut e = vec![0u64; fg.invariants().len()];
            e[i] = 1;
            *img == e
        });
    }

    let pr_hi = im_pi_rho(lp, hi, c_exp);
    let lambda_orders = pr_hi.len() * lo.comp.len() == pr.len() * hi.comp.len();

    Ok(StructureReport {
        level: n,
        comp_order: lo.comp.len(),
        im_pi_rho_order: pr.len(),
        im_sigma_order: sigma.len(),
        en_order: en.len(),
        generated,
        order_formula,
        rho_additive,
        centralizes,
        normal,
        acts_trivially,
        lambda_orders,
    })
}

/// The certificate that `(id (+) mu)` matches orbits at `n` and `n + d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pub level: usize,
    pub d: usize,
    pub orbits_lo: OrbitPartition,
    pub orbits_hi: OrbitPartition,
    /// `table[i]` is the orbit at `n + d` hit by orbit `i` at level `n`.
    pub table: Vec<usize>,
    /// Number of `(class, generator)` instances of the equivariance identity checked.
    pub equivariance_checks: usize,
    /// First violation `(class, generator index)`, if any.
    pub violation: Option<(Vec<u64>, usize)>,
    pub bijective: bool,
    pub sizes_match: bool,
}

impl Correspondence {
    pub fn ok(&self) -> bool {
        self.violation.is_none() && self.bijective && self.sizes_match
    }
}

/// Generators of `Gamma_n / Im(pi_n rho)` at level `lo` and their images
/// under `lambda` at level `hi`.
pub fn lambda_generators(
    lp: &LatticePairs<'_>,
    lo: &Level,
    hi: &Level,
    cap: usize,
) -> Result<Vec<(CompatiblePair, CompatiblePair)>> {
    let tower = lp.tower;
    let d = tower.d();
    let ring = *tower.uniserial().ring();
    let (alo, ahi) = (lo.split.quotient(), hi.split.quotient());
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for g in lp.pairs(ceil_div(lo.level() + d, d) as u32, cap)? {
        let pair = (lp.reduce(alo, &g), lp.reduce(ahi, &g));
        if seen.insert(pair.clone()) {
            out.push(pair);
        }
    }
    for lift in &lo.complement.lifts {
        let phi_lo = alo.induced(lift);
        let phi_hi = ahi.induced(&lift.scale(&ring, ring.p()));
        out.push((lo.rho(&phi_lo), hi.rho(&phi_hi)));
    }
    Ok(out)
}

/// Verifies `(id (+) mu)(tau.g) = (id (+) mu)(tau).lambda(g)` for all classes
/// and generators, then compares the orbits of `Comp` at both levels.
pub fn orbit_correspondence(lp: &LatticePairs<'_>, lo: &Level, hi: &Level, cap: usize) -> Result<Correspondence> {
    let tower = lp.tower;
    let group = tower.group();
    if hi.level() != lo.level() + tower.d() {
        return Err(Error::Invalid("levels must be d apart".into()));
    }
    let (h_lo, h_hi) = (lo.split.h2(), hi.split.h2());
    let (g_lo, g_hi) = (h_lo.group(), h_hi.group());
    let gens = lambda_generators(lp, lo, hi, cap)?;
    let classes = g_lo.elements(cap)?;
    let shift: HashMap<Vec<u64>, Vec<u64>> = classes
        .iter()
        .map(|z| Ok((z.clone(), tower.id_oplus_mu(&lo.split, &hi.split, z)?)))
        .collect::<Result<_>>()?;
    let mut violation = None;
    let mut checks = 0;
    'outer: for (gi, (g, lg)) in gens.iter().enumerate() {
        let m_lo = ActionMap::new(group, h_lo, g)?;
        let m_hi = ActionMap::new(group, h_hi, lg)?;
        for z in &classes {
            checks += 1;
            let lhs = &shift[&m_lo.apply(&g_lo, z)];
            let rhs = m_hi.apply(&g_hi, &shift[z]);
            if *lhs != rhs {
                violation = Some((z.clone(), gi));
                break 'outer;
            }
        }
    }
    let orbits_lo = orbits_on_h2(group, h_lo, &lo.comp, cap)?;
    let orbits_hi = orbits_on_h2(group, h_hi, &hi.comp, cap)?;
    let mut table = Vec::with_capacity(orbits_lo.classes.len());
    let mut sizes_match = true;
    for (i, orbit) in orbits_lo.classes.iter().enumerate() {
        let targets: HashSet<usize> = orbit.iter().map(|z| orbits_hi.orbit_of(&shift[z]).unwrap_or(usize::MAX)).collect();
        let j = *targets.iter().next().unwrap_or(&usize::MAX);
        sizes_match &= targets.len() == 1 && j != usize::MAX && orbits_hi.classes[j].len() == orbits_lo.classes[i].len();
        table.push(j);
    }
    let distinct: HashSet<&usize> = table.iter().collect();
    let bijective = distinct.len() == table.len() && table.len() == orbits_hi.classes.len() && sizes_match;
    Ok(Correspondence {
        level: lo.level(),
        d: tower.d(),
        orbits_lo,
        orbits_hi,
        table,
        equivariance_checks: checks,
        violation,
        bijective,
        sizes_match,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_module::LatticeModule;
    use crate::zmod::ZMod;

    fn negation_tower() -> Tower {
        let g = GroupTable::cyclic(2);
        let l = LatticeModule::new(&g, 2, 16, &[vec![vec![-1]]]).unwrap();
        Tower::new(l.uniserial().unwrap())
    }

    fn d8_tower() -> Tower {
        let g = GroupTable::from_presentation(
            &["a".into(), "b".into()],
            &["a^2".into(), "b^4".into(), "b^a = b^-1".into()],
            64,
        )
        .unwrap();
        let l = LatticeModule::new(&g, 2, 20, &[vec![vec![1, 0], vec![0, -1]], vec![vec![0, 1], vec![-1, 0]]]).unwrap();
        Tower::new(l.uniserial().unwrap())
    }

    #[test]
    fn negation_on_z4_has_two_pairs() {
        let t = negation_tower();
        let a = t.uniserial().quotient(2).unwrap();
        let auts = t.group().automorphism_group(100).unwrap();
        let pairs = compatible_pairs(t.group(), a.module(), &auts, ENUM_CAP).unwrap();
        assert_eq!(pairs.len(), 2);
        check_closed(a.module(), &pairs).unwrap();
        assert!(pairs.iter().all(|p| p.is_compatible(t.group(), a.module())));
        assert!(pairs.iter().all(|p| preserves_chain(&t, &a, p)));
    }

    #[test]
    fn trivial_action_gives_full_product() {
        let g = GroupTable::cyclic(2);
        let ring = ZMod::new(2, 4).unwrap();
        let m = GModule::trivial_action(ring, vec![1, 1], 2);
        let auts = g.automorphism_group(10).unwrap();
        let pairs = compatible_pairs(&g, &m, &auts, ENUM_CAP).unwrap();
        // |Aut C2| * |GL_2(F_2)|
        assert_eq!(pairs.len(), 6);
        check_closed(&m, &pairs).unwrap();
    }

    #[test]
    fn minus_one_negates_h2() {
        let t = negation_tower();
        for n in 1..6 {
            let a = t.uniserial().quotient(n).unwrap();
            let h2 = Cohomology::compute(t.group(), a.module(), 2).unwrap();
            let ring = *a.module().ring();
            let minus = CompatiblePair { beta: GroupAutomorphism::identity(2), eps: reduce_cols(a.module(), &Mat::identity(1).scale(&ring, ring.neg(1))) };
            let map = ActionMap::new(t.group(), &h2, &minus).unwrap();
            let g = h2.group();
            for z in g.elements(100).unwrap() {
                assert_eq!(map.apply(&g, &z), g.neg(&z));
            }
        }
    }

    #[test]
    fn orbits_match_reachability() {
        let t = d8_tower();
        let a = t.uniserial().quotient(3).unwrap();
        let h2 = Cohomology::compute(t.group(), a.module(), 2).unwrap();
        let auts = t.group().automorphism_group(100).unwrap();
        let pairs = compatible_pairs(t.group(), a.module(), &auts, ENUM_CAP).unwrap();
        let part = orbits_on_h2(t.group(), &h2, &pairs, ENUM_CAP).unwrap();
        // Brute force: y reachable from x by a single pair (the set is a group).
        let g = h2.group();
        let maps: Vec<ActionMap> = pairs.iter().map(|p| ActionMap::new(t.group(), &h2, p).unwrap()).collect();
        for x in g.elements(100).unwrap() {
            let reach: HashSet<Vec<u64>> = maps.iter().map(|m| m.apply(&g, &x)).collect();
            let orbit = &part.classes[part.orbit_of(&x).unwrap()];
            assert_eq!(reach, orbit.iter().cloned().collect());
        }
        assert_eq!(part.classes[0], vec![vec![0; g.invariants().len()]]);
    }

    #[test]
    fn inverse_pair_undoes_action() {
        let t = d8_tower();
        let a = t.uniserial().quotient(4).unwrap();
        let h2 = Cohomology::compute(t.group(), a.module(), 2).unwrap();
        let auts = t.group().automorphism_group(100).unwrap();
        let pairs = compatible_pairs(t.group(), a.module(), &auts, ENUM_CAP).unwrap();
        let g = h2.group();
        for p in pairs.iter().take(6) {
            let q = p.inverse(a.module()).unwrap();
            let (mp, mq) = (ActionMap::new(t.group(), &h2, p).unwrap(), ActionMap::new(t.group(), &h2, &q).unwrap());
            for z in g.elements(100).unwrap() {
                assert_eq!(mq.apply(&g, &mp.apply(&g, &z)), z);
            }
        }
    }

    #[test]
    fn negation_complement_is_zero() {
        let t = negation_tower();
        let (p, _) = t0_stabilizer(&t).unwrap();
        assert_eq!(p.order(), 1);
        let c = complement_en(&t, 3).unwrap();
        assert!(c.gens.is_empty());
    }

    #[test]
    fn d8_complement_matches_h1() {
        let t = d8_tower();
        for n in 2..7 {
            let c = complement_en(&t, n).unwrap();
            let expect = if n % 2 == 0 { vec![1] } else { vec![] };
            assert_eq!(c.invariants, expect, "n = {n}");
            assert_eq!(c.h1_invariants, expect);
        }
    }

    #[test]
    fn d8_bounds_are_periodic() {
        let t = d8_tower();
        for n in 2..6 {
            check_bounds_periodic(&t, n).unwrap();
        }
        let b = exponent_bounds(&t, 4).unwrap();
        assert_eq!((b.a_exp, b.b_exp, b.v), (1, 1, 2));
        assert!(b.qualifies());
        assert!(!exponent_bounds(&t, 2).unwrap().qualifies());
    }

    #[test]
    fn lattice_pairs_preserve_the_chain() {
        let t = d8_tower();
        let lp = LatticePairs::new(&t, 100).unwrap();
        for p in lp.pairs(2, ENUM_CAP).unwrap() {
            assert!(preserves_lattice_chain(&t, &p.eps, 6));
            assert!(p.is_compatible(t.group(), t.uniserial().module().module()));
        }
    }

    #[test]
    fn negation_structure_and_correspondence() {
        let t = negation_tower();
        let lp = LatticePairs::new(&t, 100).unwrap();
        let n = least_qualifying_level(&t, 1, 10).unwrap();
        let lo = Level::build(&lp, n, ENUM_CAP).unwrap();
        let hi = Level::build(&lp, n + 1, ENUM_CAP).unwrap();
        let rep = rho_pi_lambda(&lp, &lo, &hi, ENUM_CAP).unwrap();
        assert!(rep.ok(), "{rep:?}");
        let c = orbit_correspondence(&lp, &lo, &hi, ENUM_CAP).unwrap();
        assert!(c.ok(), "{c:?}");
        assert_eq!(c.orbits_lo.classes.len(), c.orbits_hi.classes.len());
    }

    #[test]
    fn d8_structure_and_correspondence() {
        let t = d8_tower();
        let lp = LatticePairs::new(&t, 100).unwrap();
        let lo = Level::build(&lp, 4, ENUM_CAP).unwrap();
        let hi = Level::build(&lp, 6, ENUM_CAP).unwrap();
        let rep = rho_pi_lambda(&lp, &lo, &hi, ENUM_CAP).unwrap();
        assert!(rep.ok(), "{rep:?}");
        assert_eq!(rep.en_order, 2);
        let c = orbit_correspondence(&lp, &lo, &hi, ENUM_CAP).unwrap();
        assert!(c.ok(), "{c:?}");
        assert_eq!(c.orbits_lo.sorted_sizes(), c.orbits_hi.sorted_sizes());
    }
}
