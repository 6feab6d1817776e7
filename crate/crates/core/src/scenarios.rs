//! Scenarios: a finite group `P` acting on a lattice `L`, the infinite group
//! `S = P ⋉ L`, and for a lift `k` the pair `R = S / p^k L`, `T = p^k L`.
//!
//! `R` acts on `T` through `R -> P`. Writing `t = p^k x`, `T` has the same
//! matrices as `L`, and `S` is the extension of `R` by `T` with the carry
//! cocycle `gamma_0(r, s) = (w M_h + w' - [w M_h + w']) / p^k`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohomology::{cochain_from_fn, coboundary, Cohomology, Tower};
use crate::compatible::{
    complement_en, exponent_bounds, orbit_correspondence, preserves_chain, preserves_lattice_chain, rho_pi_lambda,
    ActionMap, CompatiblePair, Correspondence, ExponentBounds, LatticePairs, Level, StructureReport, ENUM_CAP,
};
use crate::error::{Error, Result};
use crate::extensions::{build_extension, ExtensionGroup, EXTENSION_CAP};
use crate::finite_group::{GroupAutomorphism, GroupTable};
use crate::lattice_module::{hom_space_direct, working_precision, LatticeModule, QuotientModule};
use crate::matrix::Mat;
use crate::zmod::ZMod;

/// Default largest level a scenario is prepared for.
pub const DEFAULT_MAX_LEVEL: u32 = 10;

/// The on-disk description of a scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub p: u64,
    /// Generator names of the point group `P`.
    pub generators: Vec<String>,
    pub relations: Vec<String>,
    /// One integer matrix per generator, acting on row vectors.
    pub action: Vec<Vec<Vec<i64>>>,
    #[serde(default)]
    pub lift: u32,
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub max_level: Option<u32>,
}

impl ScenarioSpec {
    /// `D8` acting on `Z_2[i]`: `a` conjugates, `b` multiplies by `i`.
    pub fn d8_gaussian() -> Self {
        ScenarioSpec {
            name: "d8_gaussian".into(),
            p: 2,
            generators: vec!["a".into(), "b".into()],
            relations: vec!["a^2".into(), "b^4".into(), "b^a = b^-1".into()],
            action: vec![vec![vec![1, 0], vec![0, -1]], vec![vec![0, 1], vec![-1, 0]]],
            lift: 0,
            precision: None,
            max_level: None,
        }
    }

    /// `C2` acting by `-1` on `Z_2`.
    pub fn c2_negation() -> Self {
        ScenarioSpec {
            name: "c2_negation".into(),
            p: 2,
            generators: vec!["a".into()],
            relations: vec!["a^2".into()],
            action: vec![vec![vec![-1]]],
            lift: 0,
            precision: None,
            max_level: None,
        }
    }

    /// The pro-2 dihedral group with `R = S / 4 Z_2 = D8` and `T = 4 Z_2`.
    pub fn dihedral_mainline() -> Self {
        ScenarioSpec { name: "dihedral_mainline".into(), lift: 2, ..Self::c2_negation() }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "d8_gaussian" => Some(Self::d8_gaussian()),
            "c2_negation" => Some(Self::c2_negation()),
            "dihedral_mainline" => Some(Self::dihedral_mainline()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["c2_negation", "d8_gaussian", "dihedral_mainline"]
    }
}

pub struct Scenario {
    spec: ScenarioSpec,
    top: GroupTable,
    base: GroupTable,
    // (h, w) for each element of R: h in P, w in L / p^k L.
    base_elems: Vec<(usize, Vec<u64>)>,
    precision: u32,
    tower: Tower,
    carry: Vec<u64>,
}

/// A built-in name or a path to a JSON spec.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    Scenario::new(load_spec(name_or_path)?)
}

/// The [`ScenarioSpec`] behind [`load_scenario`], without building it.
pub fn load_spec(name_or_path: &str) -> Result<ScenarioSpec> {
    if let Some(spec) = ScenarioSpec::builtin(name_or_path) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::Scenario(format!(
            "{name_or_path:?} is neither a built-in ({}) nor a file",
            ScenarioSpec::builtin_names().join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        let p = spec.p;
        if !crate::zmod::is_prime(p) {
            return Err(Error::Scenario(format!("p = {p} is not prime")));
        }
        if spec.action.len() != spec.generators.len() {
            return Err(Error::Scenario(format!(
                "{} action matrices for {} generators",
                spec.action.len(),
                spec.generators.len()
            )));
        }
        let top = GroupTable::from_presentation(&spec.generators, &spec.relations, 1 << 12)?;
        if !top.is_p_group() {
            return Err(Error::NotPGroup(top.order()));
        }
        if top.order() > 1 && top.prime_order()?.0 != p {
            return Err(Error::Scenario(format!("the point group has order {}, not a power of p = {p}", top.order())));
        }
        let rank = spec.action.first().map_or(0, |m| m.len());
        if rank == 0 {
            return Err(Error::Scenario("the lattice has rank 0".into()));
        }
        let k = spec.lift;
        let pk = p.checked_pow(k).ok_or_else(|| Error::Scenario("lift too large".into()))?;
        let lift_order = (pk as u128).pow(rank as u32);
        let r_order = lift_order.saturating_mul(top.order() as u128);
        if r_order > 1 << 12 {
            return Err(Error::CapExceeded { what: "group R", needed: r_order.min(usize::MAX as u128) as usize, cap: 1 << 12 });
        }
        let top_lattice = LatticeModule::new(&top, p, 8, &spec.action)?;
        let small = ZMod::new(p, 8)?;
        let top_ints: Vec<Vec<Vec<i64>>> = (0..top.order()).map(|h| top_lattice.mat(h).to_i64_rows(&small)).collect();

        // R = S / p^k L as pairs (h, w).
        let mul = |x: &(usize, Vec<u64>), y: &(usize, Vec<u64>)| {
            let w = row_times(&x.1, &top_ints[y.0]);
            let w: Vec<u64> = w.iter().zip(&y.1).map(|(&a, &b)| (a + b as i128).rem_euclid(pk as i128) as u64).collect();
            (top.mul(x.0, y.0), w)
        };
        let mut gens: Vec<(usize, Vec<u64>)> = top.generators().iter().map(|&g| (g, vec![0; rank])).collect();
        if k > 0 {
            for j in 0..rank {
                let mut e = vec![0u64; rank];
                e[j] = 1;
                gens.push((0, e));
            }
        }
        let (base, base_elems) = GroupTable::from_generators((0usize, vec![0u64; rank]), &gens, mul, 1 << 12)?;
        let mut gen_ints = spec.action.clone();
        if k > 0 {
            for _ in 0..rank {
                gen_ints.push((0..rank).map(|i| (0..rank).map(|j| i64::from(i == j)).collect()).collect());
            }
        }
        let max_level = spec.max_level.unwrap_or(DEFAULT_MAX_LEVEL);
        let precision = spec.precision.unwrap_or_else(|| working_precision(p, base.order(), max_level));
        let lattice = LatticeModule::new(&base, p, precision, &gen_ints)?;
        let tower = Tower::new(lattice.uniserial()?);
        let ring = *tower.uniserial().ring();

        let order = base.order();
        let carry = cochain_from_fn(order, rank, 2, |t| {
            let (x, y) = (&base_elems[t[0]], &base_elems[t[1]]);
            let w = row_times(&x.1, &top_ints[y.0]);
            w.iter()
                .zip(&y.1)
                .map(|(&a, &b)| {
                    let total = a + b as i128;
                    let c = (total - total.rem_euclid(pk as i128)) / pk as i128;
                    ring.from_i64(c as i64)
                })
                .collect()
        });
        if coboundary(&base, tower.uniserial().module().module(), 2, &carry).iter().any(|&x| x != 0) {
            return Err(Error::Consistency("carry cochain is not a cocycle".into()));
        }
        Ok(Scenario { spec, top, base, base_elems, precision, tower, carry })
    }

    /// The same scenario at precision `prec`.
    pub fn with_precision(&self, prec: u32) -> Result<Self> {
        Scenario::new(ScenarioSpec { precision: Some(prec), ..self.spec.clone() })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// The point group `P`.
    pub fn top(&self) -> &GroupTable {
        &self.top
    }

    /// The acting group `R`.
    pub fn base(&self) -> &GroupTable {
        &self.base
    }

    pub fn base_element(&self, r: usize) -> &(usize, Vec<u64>) {
        &self.base_elems[r]
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn d(&self) -> usize {
        self.tower.d()
    }

    pub fn lift(&self) -> u32 {
        self.spec.lift
    }

    /// The carry cocycle with values in `T`.
    pub fn carry(&self) -> &[u64] {
        &self.carry
    }

    /// The carry cocycle reduced to `A_n`.
    pub fn carry_at(&self, a: &QuotientModule) -> Vec<u64> {
        let k = self.tower.uniserial().module().rank();
        self.carry.chunks(k).flat_map(|v| a.project(v)).collect()
    }

    /// `S / T_n` as an extension of `R` by `A_n`.
    pub fn quotient_group(&self, n: usize) -> Result<ExtensionGroup> {
        let a = self.tower.uniserial().quotient(n)?;
        build_extension(&self.base, a.module(), &self.carry_at(&a), EXTENSION_CAP)
    }

    /// The `l` with `T = S_l` (lower central series from `S_1 = S`), found in
    /// `S / T_d`, or `None` when `T` is not a term.
    pub fn mainline_offset(&self) -> Result<Option<usize>> {
        let e = self.quotient_group(self.d())?;
        let fiber = e.fiber_elements();
        let lcs = e.table().lower_central_series();
        Ok(lcs.terms.iter().position(|t| {
            let mut t = t.clone();
            t.sort_unstable();
            t == fiber
        })
        .map(|j| j + 1))
    }
}

fn row_times(w: &[u64], m: &[Vec<i64>]) -> Vec<i128> {
    (0..m.len()).map(|j| w.iter().enumerate().map(|(i, &x)| x as i128 * m[i][j] as i128).sum()).collect()
}

/// One level of the lower central series check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LcsLevel {
    /// The quotient is `S / p^m L`.
    pub m: usize,
    pub order: usize,
    pub series_sizes: Vec<usize>,
    pub coclass: usize,
    /// `(k, 1 + k d, holds)`: whether `p^k L / p^m L` is term `1 + k d`.
    pub terms: Vec<(usize, usize, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LcsReport {
    pub scenario: String,
    pub levels: Vec<LcsLevel>,
    /// Coclass of the quotients for `m >= 2`, if constant.
    pub limit_coclass: Option<usize>,
    pub ok: bool,
}

/// Checks that `p^k L` is the `(1 + k d)`-th lower central term of `S`,
/// on the finite quotients `S / p^m L` for `m <= max_m`.
pub fn verify_lcs_claim(s: &Scenario, max_m: usize) -> Result<LcsReport> {
    if s.lift() != 0 {
        return Err(Error::Scenario("the series claim is stated for T = L (lift 0)".into()));
    }
    let d = s.d();
    let u = s.tower().uniserial();
    let mut levels = Vec::new();
    let mut ok = true;
    for m in 1..=max_m {
        let n = m * d;
        let e = s.quotient_group(n)?;
        let a = u.quotient(n)?;
        let lcs = e.table().lower_central_series();
        let fa = crate::abelian::FinAb::new(u.ring().p(), a.invariants().to_vec());
        let mut terms = Vec::new();
        for k in 1..m.max(2) {
            // Elements (1, a) with a in p^k L.
            let b = u.term_basis(k * d);
            let gens: Vec<Vec<u64>> = (0..b.rows()).map(|i| a.project(b.row(i))).collect();
            let mut sub: Vec<usize> = (0..e.order() / e.base().order())
                .filter(|&i| fa.solve(&gens, &fa.element(i)).is_some())
                .collect();
            sub.sort_unstable();
            let idx = 1 + k * d;
            let mut term = lcs.terms.get(idx - 1).cloned().unwrap_or_else(|| vec![0]);
            term.sort_unstable();
            let holds = term == sub;
            ok &= holds;
            terms.push((k, idx, holds));
        }
        levels.push(LcsLevel { m, order: e.order(), series_sizes: lcs.sizes(), coclass: e.table().coclass()?, terms });
    }
    let tail: Vec<usize> = levels.iter().filter(|l| l.m >= 2).map(|l| l.coclass).collect();
    let limit_coclass = tail.first().copied().filter(|c| tail.iter().all(|x| x == c));
    Ok(LcsReport { scenario: s.name().into(), levels, limit_coclass, ok })
}

/// How the endomorphism enters the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairForm {
    /// `(1, eps)` for invertible `eps` in `End_R A_n`.
    Invertible,
    /// `(1, 1 + eps)` for `eps` in the complement `E_n`.
    OnePlusComplement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub lift: u32,
    pub level: usize,
    pub form: PairForm,
    /// The matrix of the acting automorphism of `A_n`.
    pub eps: Vec<Vec<u64>>,
    /// Coordinates of `alpha` in `H^2(R, T)`.
    pub alpha: Vec<u64>,
    /// Class of `alpha` in `H^2(R, A_n)`.
    pub class: Vec<u64>,
    /// Class of the image.
    pub image: Vec<u64>,
    /// `H^3(R, T_n)`-component of the image, via the split.
    pub h3_component: Vec<u64>,
    /// The same via the connecting map applied to the image.
    pub delta2: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelScan {
    pub lift: u32,
    pub level: usize,
    /// `None` when the split hypotheses fail at this level.
    pub split: Option<bool>,
    pub invertible_pairs: usize,
    pub complement_pairs: usize,
    pub moving_invertible: usize,
    pub moving_complement: usize,
    /// Lattice endomorphisms (reduced) that were checked to fix the summand.
    pub lifted_checked: usize,
    pub lifted_preserve: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefutationReport {
    pub scenario: String,
    pub scans: Vec<LevelScan>,
    /// First witness in scan order over both forms.
    pub witness: Option<Witness>,
    pub witness_invertible: Option<Witness>,
    pub witness_complement: Option<Witness>,
    pub lifted_preserve: bool,
}

impl RefutationReport {
    pub fn ok(&self) -> bool {
        self.witness.is_some() && self.lifted_preserve
    }
}

fn theta_elements(split: &crate::cohomology::SplitData, h2_t: &Cohomology) -> Result<Vec<(Vec<u64>, Vec<u64>)>> {
    let g = split.h2().group();
    let alphas = h2_t.group().elements(ENUM_CAP)?;
    Ok(alphas
        .into_iter()
        .map(|a| {
            let mut z = vec![0u64; g.invariants().len()];
            for (c, t) in a.iter().zip(split.theta()) {
                z = g.add(&z, &g.scale(*c, t));
            }
            (a, z)
        })
        .collect())
}

/// Scans levels for an automorphism of `A_n` fixing `R` that moves a class
/// of the `H^2(R, T)` summand off it.
pub fn scan_summand_stability(s: &Scenario, levels: std::ops::RangeInclusive<usize>) -> Result<RefutationReport> {
    let tower = s.tower();
    let group = s.base();
    let u = tower.uniserial();
    let ring = *u.ring();
    let h2_t = tower.h2_t()?;
    let end_t = hom_space_direct(group, u.module().module(), u.module().module(), None)?;
    let mut scans = Vec::new();
    let mut witness_invertible = None;
    let mut witness_complement = None;
    let mut lifted_all = true;
    let identity = GroupAutomorphism::identity(group.order());
    for n in levels {
        if !tower.split_hypotheses(n)?.ok {
            scans.push(LevelScan {
                lift: s.lift(),
                level: n,
                split: None,
                invertible_pairs: 0,
                complement_pairs: 0,
                moving_invertible: 0,
                moving_complement: 0,
                lifted_checked: 0,
                lifted_preserve: true,
                note: Some("split hypotheses fail".into()),
            });
            continue;
        }
        let split = tower.split(n)?;
        let h3 = tower.h3_tn(n)?;
        let a = split.quotient();
        let h2 = split.h2();
        let g2 = h2.group();
        let thetas = theta_elements(&split, h2_t)?;

        let end_a = hom_space_direct(group, a.module(), a.module(), None)?;
        let inv_pairs: Vec<CompatiblePair> = end_a
            .group()
            .elements(ENUM_CAP)?
            .iter()
            .map(|z| end_a.element(z))
            .filter(|e| crate::compatible::is_module_automorphism(a.module(), e))
            .map(|eps| CompatiblePair { beta: identity.clone(), eps })
            .collect();
        let (comp_pairs, note) = match complement_en(tower, n) {
            Ok(c) => {
                let m = a.module();
                let mut all = vec![Mat::zeros(m.dim(), m.dim())];
                for gen in &c.gens {
                    let mut next = Vec::new();
                    for x in &all {
                        let mut y = x.clone();
                        loop {
                            y = reduce_module(m, &y.add(&ring, gen));
                            if y == *x {
                                break;
                            }
                            next.push(y.clone());
                        }
                    }
                    all.extend(next);
                    all.sort_by(|x, y| x.entries().cmp(y.entries()));
                    all.dedup();
                }
                let pairs: Vec<CompatiblePair> = all
                    .iter()
                    .map(|phi| CompatiblePair {
                        beta: identity.clone(),
                        eps: reduce_module(m, &Mat::identity(m.dim()).add(&ring, phi)),
                    })
                    .collect();
                (pairs, None)
            }
            Err(e) => (Vec::new(), Some(format!("no complement: {e}"))),
        };

        let scan_form = |pairs: &[CompatiblePair], form: PairForm, slot: &mut Option<Witness>| -> Result<usize> {
            let mut moving = 0;
            for pair in pairs {
                let map = ActionMap::new(group, h2, pair)?;
                for (alpha, z) in &thetas {
                    let img = map.apply(&g2, z);
                    let comp = split.h3_component(h3, &img)?;
                    if comp.iter().all(|&x| x == 0) {
                        continue;
                    }
                    moving += 1;
                    if slot.is_none() {
                        let delta2 = tower.delta2(&split, &img)?;
                        if delta2 != comp {
                            return Err(Error::Consistency("split projection and connecting map disagree".into()));
                        }
                        *slot = Some(Witness {
                            lift: s.lift(),
                            level: n,
                            form,
                            eps: (0..pair.eps.rows()).map(|i| pair.eps.row(i).to_vec()).collect(),
                            alpha: alpha.clone(),
                            class: z.clone(),
                            image: img,
                            h3_component: comp,
                            delta2,
                        });
                    }
                }
            }
            Ok(moving)
        };
        let moving_invertible = scan_form(&inv_pairs, PairForm::Invertible, &mut witness_invertible)?;
        let moving_complement = scan_form(&comp_pairs, PairForm::OnePlusComplement, &mut witness_complement)?;

        // Lattice endomorphisms act through T and keep the summand.
        let e = n.div_ceil(s.d()) as u32;
        let pe = ring.p().pow(e);
        let gens = end_t.gens();
        let count = pe.pow(gens.len() as u32);
        let mut checked = 0;
        let mut preserve = true;
        for idx in 0..count {
            let mut phi = Mat::zeros(u.module().rank(), u.module().rank());
            let mut rest = idx;
            for g in &gens {
                phi = phi.add(&ring, &g.scale(&ring, rest % pe));
                rest /= pe;
            }
            if !crate::lattice_module::is_automorphism(&ring, &phi) {
                continue;
            }
            let pair = CompatiblePair { beta: identity.clone(), eps: a.induced(&phi) };
            let map = ActionMap::new(group, h2, &pair)?;
            for (_, z) in &thetas {
                preserve &= split.in_theta(&map.apply(&g2, z))?;
            }
            checked += 1;
        }
        lifted_all &= preserve;
        log::debug!(
            "{} lift {} level {n}: {moving_invertible} + {moving_complement} moving, {checked} lattice endomorphisms",
            s.name(),
            s.lift()
        );
        scans.push(LevelScan {
            lift: s.lift(),
            level: n,
            split: Some(true),
            invertible_pairs: inv_pairs.len(),
            complement_pairs: comp_pairs.len(),
            moving_invertible,
            moving_complement,
            lifted_checked: checked,
            lifted_preserve: preserve,
            note,
        });
    }
    let witness = match (&witness_invertible, &witness_complement) {
        (Some(a), Some(b)) => Some(if b.level < a.level { b.clone() } else { a.clone() }),
        (Some(a), None) => Some(a.clone()),
        (None, Some(b)) => Some(b.clone()),
        (None, None) => None,
    };
    Ok(RefutationReport {
        scenario: s.name().into(),
        scans,
        witness,
        witness_invertible,
        witness_complement,
        lifted_preserve: lifted_all,
    })
}

fn reduce_module(m: &crate::lattice_module::GModule, x: &Mat) -> Mat {
    let mut r = x.clone();
    for i in 0..r.rows() {
        let row = m.reduce(x.row(i));
        r.row_mut(i).copy_from_slice(&row);
    }
    r
}

/// Re-applies a witness from scratch and returns the `H^3` component.
pub fn recheck_witness(s: &Scenario, w: &Witness) -> Result<Vec<u64>> {
    let tower = s.tower();
    let split = tower.split(w.level)?;
    let rows = w.eps.clone();
    let eps = Mat::from_rows(&rows, rows.len());
    let pair = CompatiblePair { beta: GroupAutomorphism::identity(s.base().order()), eps };
    if !pair.is_compatible(s.base(), split.quotient().module()) {
        return Err(Error::Consistency("witness endomorphism does not commute with R".into()));
    }
    let rep = split.h2().representative(&w.class);
    let img = crate::compatible::act_on_cochain(s.base(), split.quotient().module(), &pair, 2, &rep);
    let z = split.h2().coords(&img)?;
    tower.delta2(&split, &z)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrespondenceReport {
    pub scenario: String,
    pub level: usize,
    pub bounds_lo: ExponentBounds,
    pub bounds_hi: ExponentBounds,
    pub structure: Option<StructureReport>,
    pub orbit_sizes_lo: Vec<usize>,
    pub orbit_sizes_hi: Vec<usize>,
    pub table: Vec<usize>,
    pub equivariance_checks: usize,
    pub violation: Option<(Vec<u64>, usize)>,
    pub zero_to_zero: bool,
    /// Chain invariance of every compatible pair at both levels.
    pub chain_invariant: bool,
    /// Names the failed inequality when the level does not qualify.
    pub precondition: Option<String>,
    pub ok: bool,
}

/// Checks the corrected orbit correspondence between levels `n` and `n + d`.
pub fn verify_correspondence(s: &Scenario, n: usize) -> Result<CorrespondenceReport> {
    let tower = s.tower();
    let d = s.d();
    let bounds_lo = exponent_bounds(tower, n)?;
    let bounds_hi = exponent_bounds(tower, n + d)?;
    let mut report = CorrespondenceReport {
        scenario: s.name().into(),
        level: n,
        bounds_lo: bounds_lo.clone(),
        bounds_hi: bounds_hi.clone(),
        structure: None,
        orbit_sizes_lo: Vec::new(),
        orbit_sizes_hi: Vec::new(),
        table: Vec::new(),
        equivariance_checks: 0,
        violation: None,
        zero_to_zero: false,
        chain_invariant: false,
        precondition: None,
        ok: false,
    };
    for b in [&bounds_lo, &bounds_hi] {
        if !b.qualifies() {
            report.precondition = Some(describe_failure(b, d));
            return Ok(report);
        }
    }
    log::info!("{}: correspondence between levels {n} and {}", s.name(), n + d);
    let lp = LatticePairs::new(tower, ENUM_CAP)?;
    let lo = Level::build(&lp, n, ENUM_CAP)?;
    let hi = Level::build(&lp, n + d, ENUM_CAP)?;
    let structure = rho_pi_lambda(&lp, &lo, &hi, ENUM_CAP)?;
    let c: Correspondence = orbit_correspondence(&lp, &lo, &hi, ENUM_CAP)?;
    report.chain_invariant = [&lo, &hi]
        .iter()
        .all(|l| l.comp.iter().all(|p| preserves_chain(tower, l.split.quotient(), p)));
    report.zero_to_zero = c.table.first() == Some(&0);
    report.orbit_sizes_lo = c.orbits_lo.sizes();
    report.orbit_sizes_hi = c.orbits_hi.sizes();
    report.table = c.table.clone();
    report.equivariance_checks = c.equivariance_checks;
    report.violation = c.violation.clone();
    report.ok = structure.ok() && c.ok() && report.zero_to_zero && report.chain_invariant;
    report.structure = Some(structure);
    Ok(report)
}

fn describe_failure(b: &ExponentBounds, d: usize) -> String {
    let mut parts = Vec::new();
    if !b.split_ok {
        parts.push(format!("floor(n/d) >= log_p exp H^2(R,T), log_p exp H^3(R,T_n) (a = p^{})", b.a_exp));
    }
    if !b.assumption_ok {
        parts.push(format!(
            "floor(n/d) >= log_p(max(a,b) b) = {} with n = {}, d = {d}",
            b.a_exp.max(b.b_exp) + b.b_exp,
            b.level
        ));
    }
    if !b.complement_ok {
        parts.push(format!("n >= d log_p b = {}", d * b.b_exp as usize));
    }
    if b.split_ok && !b.natural_ok {
        parts.push("the split is not invariant under the lattice pairs".into());
    }
    format!("level {}: {}", b.level, parts.join("; "))
}

/// Lattice pairs up to coefficients mod `p^e` that keep every chain term.
pub fn lattice_pairs_preserve_chain(s: &Scenario, e: u32, depth: usize) -> Result<(usize, bool)> {
    let lp = LatticePairs::new(s.tower(), ENUM_CAP)?;
    let pairs = lp.pairs(e, ENUM_CAP)?;
    let ok = pairs.iter().all(|p| preserves_lattice_chain(s.tower(), &p.eps, depth));
    Ok((pairs.len(), ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::library;

    #[test]
    fn bad_specs_are_rejected() {
        let wrong_prime = ScenarioSpec { p: 3, ..ScenarioSpec::c2_negation() };
        assert!(matches!(Scenario::new(wrong_prime), Err(Error::Scenario(_))));
        let composite = ScenarioSpec { p: 4, ..ScenarioSpec::c2_negation() };
        assert!(matches!(Scenario::new(composite), Err(Error::Scenario(_))));
        let short = ScenarioSpec { action: vec![], ..ScenarioSpec::c2_negation() };
        assert!(matches!(Scenario::new(short), Err(Error::Scenario(_))));
        assert!(load_scenario("no_such_scenario").is_err());
    }

    #[test]
    fn builtins_load() {
        let s = load_scenario("d8_gaussian").unwrap();
        assert_eq!(s.base().order(), 8);
        assert_eq!(s.d(), 2);
        assert!(s.carry().iter().all(|&x| x == 0));
        let c = load_scenario("c2_negation").unwrap();
        assert_eq!((c.base().order(), c.d()), (2, 1));
        let m = load_scenario("dihedral_mainline").unwrap();
        assert!(m.base().is_isomorphic(&library::d8()));
        assert_eq!(m.mainline_offset().unwrap(), Some(3));
        assert_eq!(s.mainline_offset().unwrap(), None);
    }

    #[test]
    fn mainline_quotients_are_dihedral() {
        let m = load_scenario("dihedral_mainline").unwrap();
        for n in 1..4 {
            let e = m.quotient_group(n).unwrap();
            assert!(e.table().is_isomorphic(&library::dihedral(8 << n)), "n = {n}");
        }
    }

    #[test]
    fn missing_field_is_named() {
        let err = serde_json::from_str::<ScenarioSpec>(r#"{"name": "x", "generators": [], "relations": [], "action": []}"#)
            .unwrap_err();
        assert!(err.to_string().contains("`p`"));
    }

    #[test]
    fn spec_round_trips() {
        let s = ScenarioSpec::d8_gaussian();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&text).unwrap(), s);
    }

    #[test]
    fn lcs_claim_small() {
        let s = load_scenario("d8_gaussian").unwrap();
        let r = verify_lcs_claim(&s, 3).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.limit_coclass, Some(3));
        // Third term of S / 4L is 2L / 4L, of order 4.
        assert_eq!(r.levels[1].series_sizes[2], 4);
    }

    #[test]
    fn refutation_finds_witness() {
        let s = load_scenario("d8_gaussian").unwrap();
        let r = scan_summand_stability(&s, 1..=4).unwrap();
        assert!(r.ok(), "{r:?}");
        let w = r.witness.clone().unwrap();
        assert_eq!(recheck_witness(&s, &w).unwrap(), w.h3_component);
        assert!(w.h3_component.iter().any(|&x| x != 0));
    }

    #[test]
    fn correspondence_at_four() {
        let s = load_scenario("d8_gaussian").unwrap();
        let r = verify_correspondence(&s, 4).unwrap();
        assert!(r.ok, "{r:?}");
        let bad = verify_correspondence(&s, 2).unwrap();
        assert!(!bad.ok && bad.precondition.is_some());
    }
}
