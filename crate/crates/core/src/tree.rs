//! Branches of a shaved coclass tree built from extensions, and the shift
//! `nu: B_i -> B_(i+d)` induced by `(id (+) mu)`.
//!
//! With `T = S_l`, level `n` classes in `H^2(R, A_n)` describe quotients of
//! order `|R| p^n`, and `S / S_i` is the carry class at `n = i - l`. A branch
//! of depth `k` holds the root, every coclass-`r` child of the root (the
//! mainline child included), and below depth one the coclass-`r` children of
//! non-mainline vertices.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::cohomology::{Cohomology, SplitData};
use crate::compatible::{compatible_pairs, exponent_bounds, orbits_on_h2, OrbitPartition, ENUM_CAP};
use crate::error::{Error, Result};
use crate::extensions::{build_extension, coclass_of_extension, isomorphism_classes, EXTENSION_CAP, ISOMORPHISM_CAP};
use crate::finite_group::{library, Fingerprint, GroupTable};
use crate::lattice_module::QuotientModule;
use crate::scenarios::Scenario;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub id: usize,
    /// Distance from the root.
    pub depth: usize,
    /// The level `n + depth` of the fiber `A_(n + depth)`.
    pub level: usize,
    pub order: usize,
    /// Coordinates of a representative class.
    pub class: Vec<u64>,
    pub orbit_size: usize,
    pub parent: Option<usize>,
    pub mainline: bool,
    /// `dihedral`, `quaternion` or `semidihedral` for recognized 2-groups.
    pub name: Option<String>,
    pub fingerprint: Fingerprint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchGraph {
    pub index: usize,
    pub offset: usize,
    pub depth: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize)>,
}

impl BranchGraph {
    pub fn root(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn non_mainline(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| !v.mainline)
    }

    /// Leaves of depth one other than the mainline child.
    pub fn children_of_root(&self) -> Vec<&Vertex> {
        self.vertices.iter().filter(|v| v.parent == Some(0)).collect()
    }
}

/// One level of the branch: the module, cohomology and orbits.
struct LevelData {
    a: QuotientModule,
    h2: Cohomology,
    orbits: OrbitPartition,
}

fn level_data(s: &Scenario, n: usize) -> Result<LevelData> {
    let tower = s.tower();
    let a = tower.uniserial().quotient(n)?;
    let h2 = Cohomology::compute(s.base(), a.module(), 2)?;
    let auts = s.base().automorphism_group(ENUM_CAP)?;
    let comp = compatible_pairs(s.base(), a.module(), &auts, ENUM_CAP)?;
    let orbits = orbits_on_h2(s.base(), &h2, &comp, ENUM_CAP)?;
    Ok(LevelData { a, h2, orbits })
}

/// `H^2(R, A_(m+1)) -> H^2(R, A_m)` on coordinates.
fn reduce_class(hi: &LevelData, lo: &LevelData, z: &[u64]) -> Result<Vec<u64>> {
    let rep = hi.h2.representative(z);
    let k = hi.a.module().dim();
    let c: Vec<u64> = if k == 0 {
        Vec::new()
    } else {
        rep.chunks(k).flat_map(|v| lo.a.project(&hi.a.lift(v))).collect()
    };
    lo.h2.coords(&c)
}

fn class_of_carry(s: &Scenario, l: &LevelData) -> Result<Vec<u64>> {
    l.h2.coords(&s.carry_at(&l.a))
}

/// Names maximal-class 2-groups by comparison with the library.
pub fn maximal_class_name(g: &GroupTable) -> Option<String> {
    let n = g.order();
    if n < 8 || !n.is_power_of_two() || g.coclass().ok() != Some(1) {
        return None;
    }
    let mut cands = vec![("dihedral", library::dihedral(n)), ("quaternion", library::quaternion(n))];
    if n >= 16 {
        cands.push(("semidihedral", library::semidihedral(n)));
    }
    cands.into_iter().find(|(_, h)| g.is_isomorphic(h)).map(|(name, _)| name.to_string())
}

/// Builds `B_i` up to distance `k` from the root.
pub fn build_branch(s: &Scenario, i: usize, k: usize) -> Result<BranchGraph> {
    let l = s
        .mainline_offset()?
        .ok_or_else(|| Error::Scenario(format!("{}: T is not a term of the lower central series of S", s.name())))?;
    if i <= l {
        return Err(Error::Invalid(format!("branch index {i} must exceed the offset {l}")));
    }
    let n = i - l;
    let base = s.base();
    let r = base.coclass()?;
    let levels: Vec<LevelData> = (0..=k).map(|j| level_data(s, n + j)).collect::<Result<_>>()?;

    let mut vertices: Vec<Vertex> = Vec::new();
    let mut edges = Vec::new();
    // Orbit index of each vertex at its level.
    let mut vertex_orbit: Vec<usize> = Vec::new();

    let root_class = class_of_carry(s, &levels[0])?;
    let root_orbit = levels[0].orbits.orbit_of(&root_class).expect("class in partition");
    let root = build_extension(base, levels[0].a.module(), &levels[0].h2.representative(&root_class), EXTENSION_CAP)?;
    vertices.push(Vertex {
        id: 0,
        depth: 0,
        level: n,
        order: root.order(),
        class: root_class,
        orbit_size: levels[0].orbits.classes[root_orbit].len(),
        parent: None,
        mainline: true,
        name: maximal_class_name(root.table()),
        fingerprint: root.fingerprint(),
    });
    vertex_orbit.push(root_orbit);

    for j in 1..=k {
        let (lo, hi) = (&levels[j - 1], &levels[j]);
        let mainline_class = class_of_carry(s, hi)?;
        let mainline_orbit = hi.orbits.orbit_of(&mainline_class).expect("class in partition");
        let parents: HashMap<usize, usize> = vertices
            .iter()
            .filter(|v| v.depth == j - 1 && (j == 1 || !v.mainline))
            .map(|v| (vertex_orbit[v.id], v.id))
            .collect();
        let mut new_vertices = Vec::new();
        for (oi, orbit) in hi.orbits.classes.iter().enumerate() {
            let mut parent = None;
            for z in orbit {
                let red = reduce_class(hi, lo, z)?;
                let po = lo.orbits.orbit_of(&red).expect("class in partition");
                match parent {
                    None => parent = Some(po),
                    Some(p) if p != po => {
                        return Err(Error::Consistency("an orbit reduces into two orbits".into()));
                    }
                    _ => {}
                }
            }
            let Some(&pid) = parent.and_then(|po| parents.get(&po)) else { continue };
            let rep = &orbit[0];
            let e = build_extension(base, hi.a.module(), &hi.h2.representative(rep), EXTENSION_CAP)?;
            let info = coclass_of_extension(&e)?;
            if info.coclass != r {
                continue;
            }
            new_vertices.push((oi, pid, rep.clone(), e));
        }
        // Orbits must be the isomorphism classes.
        if new_vertices.first().is_some_and(|v| v.3.order() <= ISOMORPHISM_CAP) {
            let tables: Vec<&GroupTable> = new_vertices.iter().map(|v| v.3.table()).collect();
            let iso = isomorphism_classes(&tables, ISOMORPHISM_CAP)?;
            let mut distinct = iso.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != iso.len() {
                return Err(Error::Consistency(format!("two branch vertices at depth {j} are isomorphic")));
            }
        }
        log::debug!("branch {i}: {} vertices at depth {j}", new_vertices.len());
        for (oi, pid, class, e) in new_vertices {
            let id = vertices.len();
            vertices.push(Vertex {
                id,
                depth: j,
                level: n + j,
                order: e.order(),
                class,
                orbit_size: hi.orbits.classes[oi].len(),
                parent: Some(pid),
                mainline: oi == mainline_orbit,
                name: maximal_class_name(e.table()),
                fingerprint: e.fingerprint(),
            });
            vertex_orbit.push(oi);
            edges.push((pid, id));
        }
    }
    Ok(BranchGraph { index: i, offset: l, depth: k, vertices, edges })
}

/// `d`, `l` and `v` for the shift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftParams {
    pub d: usize,
    pub l: usize,
    pub v: u32,
    /// The split is natural at every level of `B_i` and `B_(i+d)`.
    pub natural: bool,
}

impl ShiftParams {
    pub fn compute(s: &Scenario, i: usize, k: usize) -> Result<Self> {
        let l = s
            .mainline_offset()?
            .ok_or_else(|| Error::Scenario("T is not a term of the lower central series".into()))?;
        let d = s.d();
        let n = i.checked_sub(l).ok_or_else(|| Error::Invalid("i below the offset".into()))?;
        let mut v = 0;
        let mut natural = true;
        for j in 0..=k {
            for m in [n + j, n + j + d] {
                let b = exponent_bounds(s.tower(), m)?;
                v = v.max(b.v);
                natural &= b.natural_ok;
            }
        }
        Ok(ShiftParams { d, l, v, natural })
    }

    pub fn admits(&self, i: usize) -> bool {
        self.natural && i >= self.l && i - self.l >= self.v as usize * self.d
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftReport {
    pub params: ShiftParams,
    pub source: BranchGraph,
    pub target: BranchGraph,
    /// `map[v]` is the vertex of the target hit by vertex `v`.
    pub map: Vec<usize>,
    pub bijective: bool,
    pub edges_preserved: bool,
    /// Same image from another representative of each orbit.
    pub representative_independent: bool,
    /// `nu^-1 nu = id` on vertices.
    pub inverse_ok: bool,
    /// Names (when recognized) agree along the map.
    pub names_preserved: bool,
    /// Classes checked for "coclass r before iff after".
    pub coclass_checks: usize,
    pub coclass_preserved: bool,
}

impl ShiftReport {
    pub fn ok(&self) -> bool {
        self.bijective
            && self.edges_preserved
            && self.representative_independent
            && self.inverse_ok
            && self.names_preserved
            && self.coclass_preserved
    }
}

/// Maps `B_i` to `B_(i+d)` through `(id (+) mu)` and compares with the
/// independently built target.
pub fn nu_shift(s: &Scenario, source: &BranchGraph) -> Result<ShiftReport> {
    let params = ShiftParams::compute(s, source.index, source.depth)?;
    if !params.admits(source.index) {
        return Err(Error::Hypothesis(format!(
            "i - l = {} must be at least v d = {} with a natural split at every level (natural: {})",
            source.index.saturating_sub(params.l),
            params.v as usize * params.d,
            params.natural
        )));
    }
    let tower = s.tower();
    let d = params.d;
    let target = build_branch(s, source.index + d, source.depth)?;
    let n = source.index - params.l;
    let k = source.depth;
    let splits: BTreeMap<usize, SplitData> =
        (n..=n + k + d).map(|m| Ok((m, tower.split(m)?))).collect::<Result<_>>()?;
    let lo_levels: Vec<LevelData> = (0..=k).map(|j| level_data(s, n + j)).collect::<Result<_>>()?;
    let hi_levels: Vec<LevelData> = (0..=k).map(|j| level_data(s, n + d + j)).collect::<Result<_>>()?;

    let locate = |g: &BranchGraph, levels: &[LevelData], depth: usize, z: &[u64]| -> Option<usize> {
        let ld = &levels[depth];
        let o = ld.orbits.orbit_of(z)?;
        g.vertices.iter().find(|v| v.depth == depth && ld.orbits.orbit_of(&v.class) == Some(o)).map(|v| v.id)
    };

    let mut map = Vec::new();
    let mut representative_independent = true;
    let mut names_preserved = true;
    for v in &source.vertices {
        let (lo, hi) = (&splits[&v.level], &splits[&(v.level + d)]);
        let img = tower.id_oplus_mu(lo, hi, &v.class)?;
        let t = locate(&target, &hi_levels, v.depth, &img).unwrap_or(usize::MAX);
        // Another representative of the same orbit.
        let ld = &lo_levels[v.depth];
        let orbit = &ld.orbits.classes[ld.orbits.orbit_of(&v.class).expect("class in partition")];
        let alt = orbit.last().expect("nonempty orbit");
        let t2 = locate(&target, &hi_levels, v.depth, &tower.id_oplus_mu(lo, hi, alt)?).unwrap_or(usize::MAX);
        representative_independent &= t == t2;
        if t != usize::MAX {
            names_preserved &= target.vertices[t].name == v.name && target.vertices[t].mainline == v.mainline;
        }
        map.push(t);
    }
    let mut hit = vec![false; target.vertices.len()];
    for &t in &map {
        if t < hit.len() {
            hit[t] = true;
        }
    }
    let bijective = map.len() == target.vertices.len() && map.iter().all(|&t| t != usize::MAX) && hit.iter().all(|&h| h);
    let mut edges_preserved = bijective;
    if bijective {
        let mut src: Vec<(usize, usize)> = source.edges.iter().map(|&(a, b)| (map[a], map[b])).collect();
        let mut dst = target.edges.clone();
        src.sort_unstable();
        dst.sort_unstable();
        edges_preserved = src == dst;
    }

    // The inverse map from the target back to the source.
    let mut inverse_ok = bijective;
    if bijective {
        for w in &target.vertices {
            let (lo, hi) = (&splits[&(w.level - d)], &splits[&w.level]);
            let back = tower.id_oplus_mu_inv(lo, hi, &w.class)?;
            let sv = locate(source, &lo_levels, w.depth, &back);
            inverse_ok &= sv.map(|x| map[x]) == Some(w.id);
        }
    }

    // Coclass r before and after the shift, for every class at every depth.
    let r = s.base().coclass()?;
    let mut coclass_checks = 0;
    let mut coclass_preserved = true;
    for j in 0..=k {
        let (ld, hd) = (&lo_levels[j], &hi_levels[j]);
        let (lo, hi) = (&splits[&(n + j)], &splits[&(n + j + d)]);
        for orbit in &ld.orbits.classes {
            let z = &orbit[0];
            let img = tower.id_oplus_mu(lo, hi, z)?;
            let e1 = build_extension(s.base(), ld.a.module(), &ld.h2.representative(z), EXTENSION_CAP)?;
            let e2 = build_extension(s.base(), hd.a.module(), &hd.h2.representative(&img), EXTENSION_CAP)?;
            let c1 = coclass_of_extension(&e1)?.coclass == r;
            let c2 = coclass_of_extension(&e2)?.coclass == r;
            coclass_preserved &= c1 == c2;
            coclass_checks += 1;
        }
    }

    Ok(ShiftReport {
        params,
        source: source.clone(),
        target,
        map,
        bijective,
        edges_preserved,
        representative_independent,
        inverse_ok,
        names_preserved,
        coclass_checks,
        coclass_preserved,
    })
}

/// Deterministic DOT text for a branch.
pub fn export_dot(b: &BranchGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph branch_{} {{", b.index);
    let _ = writeln!(out, "  rankdir=TB;");
    for v in &b.vertices {
        let name = v.name.as_deref().unwrap_or("group");
        let ab: Vec<String> = v.fingerprint.abelian_invariants.iter().map(|e| e.to_string()).collect();
        let shape = if v.mainline { "box" } else { "ellipse" };
        let _ = writeln!(
            out,
            "  v{} [shape={shape}, label=\"{} of order {}\\nab [{}]\"];",
            v.id,
            name,
            v.order,
            ab.join(",")
        );
    }
    for (a, c) in &b.edges {
        let _ = writeln!(out, "  v{a} -> v{c};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::load_scenario;

    #[test]
    fn depth_zero_is_the_root() {
        let s = load_scenario("dihedral_mainline").unwrap();
        let b = build_branch(&s, 5, 0).unwrap();
        assert_eq!(b.vertices.len(), 1);
        assert!(b.edges.is_empty());
        assert_eq!(b.root().name.as_deref(), Some("dihedral"));
        assert_eq!(b.root().order, 32);
    }

    #[test]
    fn dihedral_branch_has_the_triple() {
        let s = load_scenario("dihedral_mainline").unwrap();
        let b = build_branch(&s, 5, 1).unwrap();
        let mut names: Vec<String> = b.children_of_root().iter().filter_map(|v| v.name.clone()).collect();
        names.sort();
        assert_eq!(names, ["dihedral", "quaternion", "semidihedral"]);
        assert_eq!(b.children_of_root().len(), 3);
        assert!(b.children_of_root().iter().all(|v| v.order == 64));
        let dot = export_dot(&b);
        assert_eq!(dot, export_dot(&build_branch(&s, 5, 1).unwrap()));
        assert_eq!(dot.matches("->").count(), 3);
    }

    #[test]
    fn shift_is_a_graph_isomorphism() {
        let s = load_scenario("dihedral_mainline").unwrap();
        assert!(!ShiftParams::compute(&s, 5, 1).unwrap().admits(5));
        let i = (5..10).find(|&i| ShiftParams::compute(&s, i, 1).unwrap().admits(i)).unwrap();
        assert_eq!(i, 6);
        let b = build_branch(&s, i, 1).unwrap();
        let r = nu_shift(&s, &b).unwrap();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.map[0], 0);
    }
}
