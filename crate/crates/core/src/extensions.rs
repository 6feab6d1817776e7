//! Group extensions `E(gamma)` of a finite group by a finite module.
//!
//! Elements are pairs `(r, a)` with `(r, a)(s, b) = (rs, a.s + b + gamma(r, s))`.
//! The element `(r, a)` has index `r |A| + index(a)`.

use std::collections::HashMap;

use crate::abelian::FinAb;
use crate::cohomology::{coboundary, value_at, Cohomology};
use crate::compatible::OrbitPartition;
use crate::error::{Error, Result};
use crate::finite_group::{Fingerprint, GroupTable};
use crate::lattice_module::GModule;

/// Largest extension table built by default.
pub const EXTENSION_CAP: usize = 4096;

/// Largest pair of groups handed to the isomorphism search.
pub const ISOMORPHISM_CAP: usize = 512;

#[derive(Clone, Debug)]
pub struct ExtensionGroup {
    base: GroupTable,
    fiber: GModule,
    cocycle: Vec<u64>,
    table: GroupTable,
}

/// Builds `E(gamma)` after checking that `gamma` is a normalized 2-cocycle.
pub fn build_extension(base: &GroupTable, fiber: &GModule, cocycle: &[u64], cap: usize) -> Result<ExtensionGroup> {
    if fiber.dim() > 0 && fiber.is_free() {
        return Err(Error::Invalid("extensions need a finite fiber".into()));
    }
    let gamma = fiber_reduce(fiber, cocycle);
    if coboundary(base, fiber, 2, &gamma).iter().any(|&x| x != 0) {
        return Err(Error::NotCocycle("gamma does not satisfy the cocycle identity".into()));
    }
    let a = FinAb::new(fiber.ring().p(), fiber.exps().to_vec());
    let asize = a.order().map(|o| o as usize).unwrap_or(usize::MAX);
    let n = base.order().saturating_mul(asize);
    if n > cap {
        return Err(Error::CapExceeded { what: "extension order", needed: n, cap });
    }
    let order = base.order();
    let k = fiber.dim();
    let elems = a.elements(asize)?;
    let mut table = vec![vec![0usize; n]; n];
    for r in 0..order {
        for s in 0..order {
            let rs = base.mul(r, s);
            let g = if r == 0 || s == 0 { vec![0u64; k] } else { value_at(order, k, &gamma, &[r, s]) };
            for (ia, x) in elems.iter().enumerate() {
                let xs = fiber.act(x, s);
                let xsg = a.add(&xs, &g);
                for (ib, y) in elems.iter().enumerate() {
                    let z = a.add(&xsg, y);
                    table[r * asize + ia][s * asize + ib] = rs * asize + a.index_of(&z);
                }
            }
        }
    }
    let mut gens: Vec<usize> = base.generators().iter().map(|&g| g * asize).collect();
    for j in 0..k {
        let mut e = vec![0u64; k];
        e[j] = 1;
        gens.push(a.index_of(&e));
    }
    let table = GroupTable::from_table(&table, Some(&gens))?;
    Ok(ExtensionGroup { base: base.clone(), fiber: fiber.clone(), cocycle: gamma, table })
}

fn fiber_reduce(fiber: &GModule, c: &[u64]) -> Vec<u64> {
    c.chunks(fiber.dim().max(1)).flat_map(|v| fiber.reduce(v)).collect()
}

impl ExtensionGroup {
    pub fn table(&self) -> &GroupTable {
        &self.table
    }

    pub fn base(&self) -> &GroupTable {
        &self.base
    }

    pub fn fiber(&self) -> &GModule {
        &self.fiber
    }

    pub fn cocycle(&self) -> &[u64] {
        &self.cocycle
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    fn fiber_size(&self) -> usize {
        self.table.order() / self.base.order()
    }

    /// Indices of the fiber `{(1, a)}`.
    pub fn fiber_elements(&self) -> Vec<usize> {
        (0..self.fiber_size()).collect()
    }

    /// The projection `E -> R`.
    pub fn project(&self, x: usize) -> usize {
        x / self.fiber_size()
    }

    /// Checks that the fiber is normal and `E / A -> R` is a homomorphism.
    pub fn check_structure(&self) -> Result<()> {
        if !self.table.is_normal(&self.fiber_elements()) {
            return Err(Error::Consistency("fiber is not normal".into()));
        }
        for &g in self.table.generators() {
            for x in 0..self.order() {
                if self.project(self.table.mul(x, g)) != self.base.mul(self.project(x), self.project(g)) {
                    return Err(Error::Consistency("projection to the base is not a homomorphism".into()));
                }
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.table.fingerprint()
    }
}

/// Coclass of an extension and the lower central criterion for
/// "coclass equals that of the base".
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CoclassInfo {
    pub coclass: usize,
    pub base_coclass: usize,
    /// `gamma_(c+1)(E) = A` for `c` the class of the base, series indexed
    /// from `gamma_1(E) = E`.
    pub criterion: bool,
}

impl CoclassInfo {
    pub fn same_coclass(&self) -> bool {
        self.coclass == self.base_coclass
    }
}

/// Computes the coclass and, independently, the series criterion; they must
/// agree on whether `E` has the coclass of the base.
pub fn coclass_of_extension(e: &ExtensionGroup) -> Result<CoclassInfo> {
    let coclass = e.table.coclass()?;
    let base_coclass = e.base.coclass()?;
    let c = e.base.nilpotency_class().ok_or_else(|| Error::Hypothesis("base is not nilpotent".into()))?;
    let lcs = e.table.lower_central_series();
    let term: Vec<usize> = lcs.terms.get(c).cloned().unwrap_or_else(|| vec![0]);
    let mut term = term;
    term.sort_unstable();
    let criterion = term == e.fiber_elements();
    let info = CoclassInfo { coclass, base_coclass, criterion };
    if info.criterion != info.same_coclass() {
        return Err(Error::Consistency(format!(
            "coclass {coclass} vs base {base_coclass} disagrees with the series criterion ({criterion})"
        )));
    }
    Ok(info)
}

/// Isomorphism of two tables, refusing groups above `cap`.
pub fn are_isomorphic(a: &GroupTable, b: &GroupTable, cap: usize) -> Result<bool> {
    if a.order() != b.order() {
        return Ok(false);
    }
    if a.order() > cap {
        return Err(Error::CapExceeded { what: "isomorphism test", needed: a.order(), cap });
    }
    Ok(a.is_isomorphic(b))
}

/// Partition of tables into isomorphism classes, in first-seen order.
pub fn isomorphism_classes(tables: &[&GroupTable], cap: usize) -> Result<Vec<usize>> {
    let mut reps: Vec<(Fingerprint, usize)> = Vec::new();
    let mut out = Vec::with_capacity(tables.len());
    for (i, t) in tables.iter().enumerate() {
        let fp = t.fingerprint();
        let mut found = None;
        for (cls, (rfp, ri)) in reps.iter().enumerate() {
            if *rfp == fp && are_isomorphic(tables[*ri], t, cap)? {
                found = Some(cls);
                break;
            }
        }
        match found {
            Some(c) => out.push(c),
            None => {
                out.push(reps.len());
                reps.push((fp, i));
            }
        }
    }
    Ok(out)
}

/// Result of comparing orbits with isomorphism types at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitTypeReport {
    pub classes: usize,
    /// Classes whose extension has the coclass of the base.
    pub qualifying: usize,
    pub pairs_checked: usize,
    /// Pairs `(x, y)` of class indices where orbit and isomorphism disagree.
    pub exceptions: Vec<(usize, usize)>,
    pub isomorphism_types: usize,
}

impl OrbitTypeReport {
    pub fn ok(&self) -> bool {
        self.exceptions.is_empty()
    }
}

/// For two classes: same orbit if and only if isomorphic extensions.
pub fn orbit_type_check(
    base: &GroupTable,
    h2: &Cohomology,
    orbits: &OrbitPartition,
    x: &[u64],
    y: &[u64],
    cap: usize,
) -> Result<bool> {
    let ex = build_extension(base, h2.module(), &h2.representative(x), EXTENSION_CAP)?;
    let ey = build_extension(base, h2.module(), &h2.representative(y), EXTENSION_CAP)?;
    for e in [&ex, &ey] {
        if !coclass_of_extension(e)?.same_coclass() {
            return Err(Error::Hypothesis("extension does not have the coclass of the base".into()));
        }
    }
    let same_orbit = orbits.orbit_of(x) == orbits.orbit_of(y);
    Ok(same_orbit == are_isomorphic(ex.table(), ey.table(), cap)?)
}

/// Runs the orbit/isomorphism comparison over every pair of qualifying classes.
pub fn orbit_type_level(base: &GroupTable, h2: &Cohomology, orbits: &OrbitPartition, cap: usize) -> Result<OrbitTypeReport> {
    let classes: Vec<Vec<u64>> = orbits.classes.iter().flatten().cloned().collect();
    let mut qual: Vec<(usize, ExtensionGroup)> = Vec::new();
    for (i, z) in classes.iter().enumerate() {
        let e = build_extension(base, h2.module(), &h2.representative(z), EXTENSION_CAP)?;
        if coclass_of_extension(&e)?.same_coclass() {
            qual.push((i, e));
        }
    }
    let tables: Vec<&GroupTable> = qual.iter().map(|(_, e)| e.table()).collect();
    let iso = isomorphism_classes(&tables, cap)?;
    let orbit_index: HashMap<usize, usize> =
        qual.iter().map(|(i, _)| (*i, orbits.orbit_of(&classes[*i]).expect("class in partition"))).collect();
    let mut exceptions = Vec::new();
    let mut pairs = 0;
    for a in 0..qual.len() {
        for b in a + 1..qual.len() {
            pairs += 1;
            let same_orbit = orbit_index[&qual[a].0] == orbit_index[&qual[b].0];
            if same_orbit != (iso[a] == iso[b]) {
                exceptions.push((qual[a].0, qual[b].0));
            }
        }
    }
    Ok(OrbitTypeReport {
        classes: classes.len(),
        qualifying: qual.len(),
        pairs_checked: pairs,
        exceptions,
        isomorphism_types: iso.iter().max().map_or(0, |m| m + 1),
    })
}
