//! Finite groups as explicit multiplication tables.
//!
//! Elements are indices `0..order` with `0` the identity. Tables are built
//! from raw tables, permutation or matrix generators, or finite presentations,
//! and are validated before they are handed out.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::presentation::{enumerate_cosets, parse_relation, Word};
use crate::zmod::{prime_power, ZMod};

/// Default cap on the order of groups built by closure or enumeration.
pub const DEFAULT_ORDER_CAP: usize = 4096;

#[derive(Clone, PartialEq, Eq)]
pub struct GroupTable {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    gens: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl std::fmt::Debug for GroupTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupTable").field("order", &self.order).field("gens", &self.gens).finish()
    }
}

/// A descending chain of subgroups, each a sorted list of element indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupChain {
    pub terms: Vec<Vec<usize>>,
}

impl SubgroupChain {
    pub fn sizes(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.len()).collect()
    }

    /// Whether the chain reaches the trivial subgroup.
    pub fn reaches_trivial(&self) -> bool {
        self.terms.last().is_some_and(|t| t.len() == 1)
    }
}

/// An automorphism as a permutation of element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupAutomorphism {
    pub perm: Vec<usize>,
}

impl GroupAutomorphism {
    pub fn identity(order: usize) -> Self {
        GroupAutomorphism { perm: (0..order).collect() }
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.perm[x]
    }

    /// `x -> other(self(x))`.
    pub fn then(&self, other: &GroupAutomorphism) -> Self {
        GroupAutomorphism { perm: self.perm.iter().map(|&x| other.perm[x]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut perm = vec![0; self.perm.len()];
        for (x, &y) in self.perm.iter().enumerate() {
            perm[y] = x;
        }
        GroupAutomorphism { perm }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &x)| i == x)
    }
}

impl GroupTable {
    /// Builds a group from a full table `mul[a][b] = a*b`.
    ///
    /// The identity is located and renumbered to index `0`. When `gens` is
    /// `None` a generating set is chosen automatically.
    pub fn from_table(table: &[Vec<usize>], gens: Option<&[usize]>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::GroupAxiom("empty table".into()));
        }
        for row in table {
            if row.len() != n || row.iter().any(|&x| x >= n) {
                return Err(Error::GroupAxiom("table is not square with entries in range".into()));
            }
        }
        let e = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::GroupAxiom("no two-sided identity".into()))?;
        // Swap e and 0 in the labelling.
        let relabel = |x: usize| if x == e { 0 } else if x == 0 { e } else { x };
        let mut mul = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                mul[relabel(a) * n + relabel(b)] = relabel(table[a][b]) as u32;
            }
        }
        let gens = gens.map(|g| g.iter().map(|&x| relabel(x)).collect::<Vec<_>>());
        Self::from_flat(n, mul, gens, None)
    }

    fn from_flat(n: usize, mul: Vec<u32>, gens: Option<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let mut inv = vec![u32::MAX; n];
        for a in 0..n {
            for b in 0..n {
                if mul[a * n + b] == 0 {
                    if mul[b * n + a] != 0 {
                        return Err(Error::GroupAxiom(format!("inverse of {a} is only one-sided")));
                    }
                    inv[a] = b as u32;
                    break;
                }
            }
            if inv[a] == u32::MAX {
                return Err(Error::GroupAxiom(format!("element {a} has no inverse")));
            }
        }
        let mut g = GroupTable { order: n, mul, inv, gens: Vec::new(), labels };
        g.gens = match gens {
            Some(gens) => {
                if g.closure(&gens).len() != n {
                    return Err(Error::GroupAxiom("generators do not generate the table".into()));
                }
                gens
            }
            None => {
                let gens = g.choose_generators();
                // Non-generators only behave as such in a group; fall back to
                // every element when the table is not one.
                if g.closure(&gens).len() == n {
                    gens
                } else {
                    (1..n).collect()
                }
            }
        };
        g.check_associative()?;
        Ok(g)
    }

    /// Light's test: associativity on all triples follows from
    /// `(x g) y = x (g y)` for all `x, y` and generators `g`.
    fn check_associative(&self) -> Result<()> {
        for &g in &self.gens {
            for x in 0..self.order {
                let xg = self.mul(x, g);
                for y in 0..self.order {
                    if self.mul(xg, y) != self.mul(x, self.mul(g, y)) {
                        return Err(Error::NotAssociative(x, g, y));
                    }
                }
            }
        }
        Ok(())
    }

    /// Closure of `gens` under a multiplication on hashable values.
    ///
    /// Returns the table and the elements in index order (identity first).
    pub fn from_generators<T, F>(identity: T, gens: &[T], mul: F, cap: usize) -> Result<(Self, Vec<T>)>
    where
        T: Clone + Eq + Hash,
        F: Fn(&T, &T) -> T,
    {
        let mut elems = vec![identity.clone()];
        let mut index: HashMap<T, usize> = HashMap::new();
        index.insert(identity, 0);
        // right[i][k] = elems[i] * gens[k]
        let mut right: Vec<Vec<usize>> = Vec::new();
        let mut parent = vec![(usize::MAX, usize::MAX)];
        let mut i = 0;
        while i < elems.len() {
            let mut row = Vec::with_capacity(gens.len());
            for (k, g) in gens.iter().enumerate() {
                let y = mul(&elems[i], g);
                let j = match index.get(&y) {
                    Some(&j) => j,
                    None => {
                        let j = elems.len();
                        if j >= cap {
                            return Err(Error::CapExceeded { what: "group closure", needed: j + 1, cap });
                        }
                        index.insert(y.clone(), j);
                        elems.push(y);
                        parent.push((i, k));
                        j
                    }
                };
                row.push(j);
            }
            right.push(row);
            i += 1;
        }
        let n = elems.len();
        let mut mul_t = vec![0u32; n * n];
        for a in 0..n {
            mul_t[a * n] = a as u32;
            for b in 1..n {
                let (pb, k) = parent[b];
                let ab = right[mul_t[a * n + pb] as usize][k];
                mul_t[a * n + b] = ab as u32;
            }
        }
        let gen_idx: Vec<usize> = (0..gens.len()).map(|k| right[0][k]).collect();
        let g = Self::from_flat(n, mul_t, Some(gen_idx), None)?;
        Ok((g, elems))
    }

    /// Permutations in image notation on `0..m`; `g*h` applies `g` first.
    pub fn from_permutations(gens: &[Vec<usize>], cap: usize) -> Result<Self> {
        let m = gens.first().map_or(0, |g| g.len());
        for g in gens {
            let mut seen = vec![false; m];
            if g.len() != m || g.iter().any(|&x| x >= m || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::Invalid("generator is not a permutation of a common domain".into()));
            }
        }
        let id: Vec<usize> = (0..m).collect();
        let (g, _) = Self::from_generators(id, gens, |a, b| a.iter().map(|&x| b[x]).collect(), cap)?;
        Ok(g)
    }

    /// Invertible matrices over `Z/p^N` under `A*B` (row-vector convention).
    pub fn from_matrices(ring: &ZMod, gens: &[Mat], cap: usize) -> Result<(Self, Vec<Mat>)> {
        let k = gens.first().map_or(0, |g| g.rows());
        for g in gens {
            if g.rows() != k || g.cols() != k {
                return Err(Error::Invalid("matrix generators must be square of equal size".into()));
            }
        }
        Self::from_generators(Mat::identity(k), gens, |a, b| a.mul(ring, b), cap)
    }

    /// The group `<names | relations>`, which must be finite.
    pub fn from_presentation(names: &[String], relations: &[String], cap: usize) -> Result<Self> {
        let rels: Vec<Word> = relations.iter().map(|r| parse_relation(names, r)).collect::<Result<_>>()?;
        let table = enumerate_cosets(names.len(), &rels, cap.saturating_mul(8).max(1024))?;
        let n = table.len();
        if n > cap {
            return Err(Error::CapExceeded { what: "presented group", needed: n, cap });
        }
        // Spanning tree from the identity coset gives each element a word.
        let mut parent = vec![(usize::MAX, usize::MAX); n];
        let mut order = vec![0usize];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        while let Some(c) = q.pop_front() {
            for x in 0..2 * names.len() {
                let d = table[c][x];
                if !seen[d] {
                    seen[d] = true;
                    parent[d] = (c, x);
                    order.push(d);
                    q.push_back(d);
                }
            }
        }
        let mut mul = vec![0u32; n * n];
        for a in 0..n {
            mul[a * n] = a as u32;
            for &b in &order[1..] {
                let (pb, x) = parent[b];
                mul[a * n + b] = table[mul[a * n + pb] as usize][x] as u32;
            }
        }
        let labels = (0..n)
            .map(|c| {
                let mut letters = Vec::new();
                let mut d = c;
                while d != 0 {
                    let (pd, x) = parent[d];
                    letters.push(x);
                    d = pd;
                }
                letters.reverse();
                word_label(names, &letters)
            })
            .collect();
        let gens: Vec<usize> = (0..names.len()).map(|i| table[0][2 * i]).collect();
        Self::from_flat(n, mul, Some(gens), Some(labels))
    }

    pub fn trivial() -> Self {
        Self::from_flat(1, vec![0], Some(Vec::new()), None).expect("trivial group")
    }

    /// The cyclic group of order `n` generated by index 1.
    pub fn cyclic(n: usize) -> Self {
        let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let gens: Vec<usize> = if n > 1 { vec![1] } else { vec![] };
        Self::from_table(&table, Some(&gens)).expect("cyclic group")
    }

    /// Direct product; element `(a, b)` has index `a * |H| + b`.
    pub fn direct_product(&self, other: &GroupTable) -> Self {
        let (m, n) = (self.order, other.order);
        let mut mul = vec![0u32; m * n * m * n];
        for a in 0..m * n {
            for b in 0..m * n {
                let x = self.mul(a / n, b / n) * n + other.mul(a % n, b % n);
                mul[a * m * n + b] = x as u32;
            }
        }
        let mut gens: Vec<usize> = self.gens.iter().map(|&g| g * n).collect();
        gens.extend(other.gens.iter().copied());
        Self::from_flat(m * n, mul, Some(gens), None).expect("direct product")
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn generators(&self) -> &[usize] {
        &self.gens
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => format!("g{x}"),
        }
    }

    pub fn pow(&self, a: usize, e: u64) -> usize {
        let mut r = 0;
        for _ in 0..e {
            r = self.mul(r, a);
        }
        r
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// `a^-1 b^-1 a b`.
    pub fn commutator(&self, a: usize, b: usize) -> usize {
        self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))
    }

    /// `g^-1 x g`.
    pub fn conj(&self, x: usize, g: usize) -> usize {
        self.mul(self.mul(self.inv(g), x), g)
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut elems = vec![0];
        let mut i = 0;
        while i < elems.len() {
            let x = elems[i];
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    elems.push(y);
                }
            }
            i += 1;
        }
        elems.sort_unstable();
        elems
    }

    pub fn is_subgroup(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.order];
        for &x in set {
            member[x] = true;
        }
        member[0] && set.iter().all(|&a| set.iter().all(|&b| member[self.mul(a, b)]))
    }

    pub fn is_normal(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.order];
        for &x in set {
            member[x] = true;
        }
        set.iter().all(|&x| self.gens.iter().all(|&g| member[self.conj(x, g)]))
    }

    /// `[A, B]` for subgroups `A, B` of which at least one is normal.
    pub fn commutator_subgroup(&self, a: &[usize], b: &[usize]) -> Vec<usize> {
        let mut gens: Vec<usize> = Vec::new();
        let mut seen = vec![false; self.order];
        for &x in a {
            for &y in b {
                let c = self.commutator(x, y);
                if !seen[c] {
                    seen[c] = true;
                    gens.push(c);
                }
            }
        }
        self.normal_closure(&gens)
    }

    /// Smallest normal subgroup containing `gens`.
    pub fn normal_closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut gs: Vec<usize> = gens.to_vec();
        loop {
            let h = self.closure(&gs);
            let mut member = vec![false; self.order];
            for &x in &h {
                member[x] = true;
            }
            let extra: Vec<usize> = h
                .iter()
                .flat_map(|&x| self.gens.iter().map(move |&g| (x, g)))
                .map(|(x, g)| self.conj(x, g))
                .filter(|&y| !member[y])
                .collect();
            if extra.is_empty() {
                return h;
            }
            gs = h;
            gs.extend(extra);
        }
    }

    pub fn lower_central_series(&self) -> SubgroupChain {
        let all: Vec<usize> = (0..self.order).collect();
        let mut terms = vec![all.clone()];
        loop {
            let next = self.commutator_subgroup(&all, terms.last().unwrap());
            if next.len() == terms.last().unwrap().len() {
                break;
            }
            terms.push(next);
        }
        SubgroupChain { terms }
    }

    /// Nilpotency class, `None` for non-nilpotent groups.
    pub fn nilpotency_class(&self) -> Option<usize> {
        let lcs = self.lower_central_series();
        lcs.reaches_trivial().then(|| lcs.terms.len() - 1)
    }

    /// `(p, n)` with `|G| = p^n`.
    pub fn prime_order(&self) -> Result<(u64, u32)> {
        prime_power(self.order as u64).ok_or(Error::NotPGroup(self.order))
    }

    pub fn is_p_group(&self) -> bool {
        self.order == 1 || prime_power(self.order as u64).is_some()
    }

    /// `n - c` for `|G| = p^n` of class `c`. The trivial group has coclass 0.
    pub fn coclass(&self) -> Result<usize> {
        if self.order == 1 {
            return Ok(0);
        }
        let (_, n) = self.prime_order()?;
        let c = self
            .nilpotency_class()
            .ok_or_else(|| Error::Hypothesis("group is not nilpotent".into()))?;
        Ok(n as usize - c)
    }

    pub fn is_abelian(&self) -> bool {
        self.gens.iter().all(|&a| self.gens.iter().all(|&b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&z| self.gens.iter().all(|&g| self.mul(z, g) == self.mul(g, z)))
            .collect()
    }

    pub fn centralizer_size(&self, x: usize) -> usize {
        (0..self.order).filter(|&g| self.mul(x, g) == self.mul(g, x)).count()
    }

    /// `p^e` exponents of the abelian invariants of `G / N`, ascending.
    ///
    /// `N` must be a normal subgroup with abelian quotient of p-power order.
    pub fn quotient_abelian_invariants(&self, normal: &[usize], p: u64) -> Vec<u32> {
        let mut member = vec![false; self.order];
        for &x in normal {
            member[x] = true;
        }
        let qsize = self.order / normal.len();
        // c[j] = log_p |Q[p^j]|, via counting g with g^(p^j) in N.
        let mut c = vec![0u32];
        let mut j = 1u32;
        loop {
            let e = p.pow(j);
            let cnt = (0..self.order).filter(|&g| member[self.pow(g, e)]).count() / normal.len();
            let lg = crate::zmod::valuation_of(p, cnt as u64);
            c.push(lg);
            if cnt == qsize {
                break;
            }
            j += 1;
        }
        // Number of invariants >= j equals c[j] - c[j-1].
        let mut inv = Vec::new();
        for j in 1..c.len() {
            let at_least_j = (c[j] - c[j - 1]) as usize;
            let at_least_next = if j + 1 < c.len() { (c[j + 1] - c[j]) as usize } else { 0 };
            for _ in 0..at_least_j - at_least_next {
                inv.push(j as u32);
            }
        }
        inv.sort_unstable();
        inv
    }

    /// Abelianization invariants (exponents), ascending.
    pub fn abelian_invariants(&self) -> Vec<u32> {
        if self.order == 1 {
            return Vec::new();
        }
        let Ok((p, _)) = self.prime_order() else { return Vec::new() };
        let all: Vec<usize> = (0..self.order).collect();
        let d = self.commutator_subgroup(&all, &all);
        self.quotient_abelian_invariants(&d, p)
    }

    /// Frattini subgroup `G^p [G, G]` of a p-group.
    pub fn frattini(&self) -> Vec<usize> {
        if self.order == 1 {
            return vec![0];
        }
        let p = self.prime_order().map(|(p, _)| p).unwrap_or(2);
        let all: Vec<usize> = (0..self.order).collect();
        let mut gens = self.commutator_subgroup(&all, &all);
        gens.extend((0..self.order).map(|g| self.pow(g, p)));
        gens.sort_unstable();
        gens.dedup();
        self.normal_closure(&gens)
    }

    /// A generating set, minimal for p-groups: elements independent modulo
    /// the Frattini subgroup, preferring large element orders.
    fn choose_generators(&self) -> Vec<usize> {
        if self.order == 1 {
            return Vec::new();
        }
        let phi = if self.is_p_group() { self.frattini() } else { vec![0] };
        let mut cands: Vec<usize> = (1..self.order).collect();
        let orders: Vec<usize> = (0..self.order).map(|x| self.element_order(x)).collect();
        cands.sort_by_key(|&x| (std::cmp::Reverse(orders[x]), x));
        let mut gens: Vec<usize> = Vec::new();
        let mut span = self.closure(&phi);
        for x in cands {
            if span.binary_search(&x).is_err() {
                gens.push(x);
                let mut g = gens.clone();
                g.extend(phi.iter().copied());
                span = self.closure(&g);
                if span.len() == self.order {
                    break;
                }
            }
        }
        gens
    }

    /// Extends generator images to a map on all elements, if that map is a
    /// well-defined homomorphism into `target`.
    pub fn extend_hom(&self, target: &GroupTable, images: &[usize]) -> Option<Vec<usize>> {
        let mut map = vec![usize::MAX; self.order];
        map[0] = 0;
        let mut queue = vec![0usize];
        let mut i = 0;
        while i < queue.len() {
            let x = queue[i];
            i += 1;
            for (k, &g) in self.gens.iter().enumerate() {
                let y = self.mul(x, g);
                let fy = target.mul(map[x], images[k]);
                if map[y] == usize::MAX {
                    map[y] = fy;
                    queue.push(y);
                } else if map[y] != fy {
                    return None;
                }
            }
        }
        Some(map)
    }

    /// The full automorphism group, refusing groups above `cap`.
    pub fn automorphism_group(&self, cap: usize) -> Result<Vec<GroupAutomorphism>> {
        if self.order > cap {
            return Err(Error::CapExceeded { what: "automorphism search", needed: self.order, cap });
        }
        let orders: Vec<usize> = (0..self.order).map(|x| self.element_order(x)).collect();
        let cands: Vec<Vec<usize>> = self
            .gens
            .iter()
            .map(|&g| (0..self.order).filter(|&x| orders[x] == orders[g]).collect())
            .collect();
        let mut out = Vec::new();
        let mut images = vec![0usize; self.gens.len()];
        self.search_images(self, &cands, 0, &mut images, &mut |map| {
            out.push(GroupAutomorphism { perm: map });
        });
        out.sort();
        Ok(out)
    }

    fn search_images(
        &self,
        target: &GroupTable,
        cands: &[Vec<usize>],
        depth: usize,
        images: &mut Vec<usize>,
        found: &mut dyn FnMut(Vec<usize>),
    ) -> bool {
        if depth == cands.len() {
            if let Some(map) = self.extend_hom(target, images) {
                let mut hit = vec![false; target.order];
                for &y in &map {
                    hit[y] = true;
                }
                if hit.iter().all(|&h| h) && map.len() == target.order {
                    found(map);
                    return true;
                }
            }
            return false;
        }
        let mut any = false;
        for &c in &cands[depth] {
            images[depth] = c;
            any |= self.search_images(target, cands, depth + 1, images, found);
        }
        any
    }

    /// Stabilizer of `point` under a right action `act(point, g)`.
    ///
    /// The action law `(x.g).h = x.(gh)` is checked on the orbit of `point`
    /// for all generators `g` and all `h`.
    pub fn stabilizer<P, F>(&self, act: F, point: &P) -> Result<Vec<usize>>
    where
        P: Clone + Eq + Hash,
        F: Fn(&P, usize) -> P,
    {
        if act(point, 0) != *point {
            return Err(Error::ActionAxiom("identity does not act trivially".into()));
        }
        let mut orbit = vec![point.clone()];
        let mut seen: HashMap<P, usize> = HashMap::new();
        seen.insert(point.clone(), 0);
        let mut i = 0;
        while i < orbit.len() {
            for &g in &self.gens {
                let y = act(&orbit[i], g);
                if !seen.contains_key(&y) {
                    if orbit.len() > self.order {
                        return Err(Error::ActionAxiom("orbit larger than the group".into()));
                    }
                    seen.insert(y.clone(), orbit.len());
                    orbit.push(y);
                }
            }
            i += 1;
        }
        for x in &orbit {
            for &g in &self.gens {
                let xg = act(x, g);
                for h in 0..self.order {
                    if act(&xg, h) != act(x, self.mul(g, h)) {
                        return Err(Error::ActionAxiom(format!("(x.{g}).{h} != x.({g}*{h})")));
                    }
                }
            }
        }
        Ok((0..self.order).filter(|&g| act(point, g) == *point).collect())
    }

    /// Table restricted to a subgroup, with its own generators.
    pub fn subgroup_table(&self, elems: &[usize]) -> Result<(GroupTable, Vec<usize>)> {
        let mut elems = elems.to_vec();
        elems.sort_unstable();
        let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let table: Vec<Vec<usize>> = elems
            .iter()
            .map(|&a| {
                elems
                    .iter()
                    .map(|&b| pos.get(&self.mul(a, b)).copied().ok_or_else(|| Error::GroupAxiom("not a subgroup".into())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let g = GroupTable::from_table(&table, None)?;
        Ok((g, elems))
    }

    /// Cheap isomorphism invariants.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut spectrum: Vec<usize> = (0..self.order).map(|x| self.element_order(x)).collect();
        spectrum.sort_unstable();
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for o in spectrum {
            match counts.last_mut() {
                Some((k, c)) if *k == o => *c += 1,
                _ => counts.push((o, 1)),
            }
        }
        Fingerprint {
            order: self.order,
            order_spectrum: counts,
            abelian_invariants: self.abelian_invariants(),
            center_size: self.center().len(),
            lcs_sizes: self.lower_central_series().sizes(),
        }
    }

    fn element_invariants(&self) -> Vec<(usize, usize, usize)> {
        let mut roots = vec![0usize; self.order];
        for x in 0..self.order {
            roots[self.mul(x, x)] += 1;
        }
        (0..self.order)
            .map(|x| (self.element_order(x), self.centralizer_size(x), roots[x]))
            .collect()
    }

    /// An isomorphism `self -> other` as an element map, if one exists.
    pub fn isomorphism(&self, other: &GroupTable) -> Option<Vec<usize>> {
        if self.order != other.order {
            return None;
        }
        if self.fingerprint() != other.fingerprint() {
            return None;
        }
        let mine = self.element_invariants();
        let theirs = other.element_invariants();
        let cands: Vec<Vec<usize>> = self
            .gens
            .iter()
            .map(|&g| (0..other.order).filter(|&y| theirs[y] == mine[g]).collect())
            .collect();
        let mut result = None;
        let mut images = vec![0usize; self.gens.len()];
        self.search_first(other, &cands, 0, &mut images, &mut result);
        result
    }

    fn search_first(
        &self,
        target: &GroupTable,
        cands: &[Vec<usize>],
        depth: usize,
        images: &mut Vec<usize>,
        result: &mut Option<Vec<usize>>,
    ) {
        if result.is_some() {
            return;
        }
        if depth == cands.len() {
            if let Some(map) = self.extend_hom(target, images) {
                let mut hit = vec![false; target.order];
                for &y in &map {
                    hit[y] = true;
                }
                if hit.iter().all(|&h| h) {
                    *result = Some(map);
                }
            }
            return;
        }
        for &c in &cands[depth] {
            // Images of generators must generate the same-size subgroup prefix.
            images[depth] = c;
            let src = self.closure(&self.gens[..=depth]).len();
            let dst = target.closure(&images[..=depth]).len();
            if src != dst {
                continue;
            }
            self.search_first(target, cands, depth + 1, images, result);
            if result.is_some() {
                return;
            }
        }
    }

    pub fn is_isomorphic(&self, other: &GroupTable) -> bool {
        self.isomorphism(other).is_some()
    }
}

fn word_label(names: &[String], letters: &[usize]) -> String {
    if letters.is_empty() {
        return "1".into();
    }
    let mut parts: Vec<(usize, i64)> = Vec::new();
    for &x in letters {
        let (g, s) = (x / 2, if x % 2 == 0 { 1 } else { -1 });
        match parts.last_mut() {
            Some((h, e)) if *h == g => *e += s,
            _ => parts.push((g, s)),
        }
    }
    parts
        .iter()
        .filter(|(_, e)| *e != 0)
        .map(|&(g, e)| if e == 1 { names[g].clone() } else { format!("{}^{}", names[g], e) })
        .collect::<Vec<_>>()
        .join("*")
}

/// Invariants compared before any isomorphism search.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Fingerprint {
    pub order: usize,
    pub order_spectrum: Vec<(usize, usize)>,
    pub abelian_invariants: Vec<u32>,
    pub center_size: usize,
    pub lcs_sizes: Vec<usize>,
}

/// Small groups used throughout the tests and the reference classifications.
pub mod library {
    use super::*;

    fn present(names: &[&str], rels: &[&str]) -> GroupTable {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let rels: Vec<String> = rels.iter().map(|s| s.to_string()).collect();
        GroupTable::from_presentation(&names, &rels, DEFAULT_ORDER_CAP).expect("library presentation")
    }

    /// `D_{2^n}` of order `2^n`: `<a, b | a^2, b^(2^(n-1)), b^a = b^-1>`.
    pub fn dihedral(order: usize) -> GroupTable {
        let m = order / 2;
        present(&["a", "b"], &["a^2", &format!("b^{m}"), "b^a = b^-1"])
    }

    /// Generalized quaternion group of order `2^n`, `n >= 3`.
    pub fn quaternion(order: usize) -> GroupTable {
        let m = order / 2;
        present(&["a", "b"], &[&format!("b^{m}"), &format!("a^2 = b^{}", m / 2), "b^a = b^-1"])
    }

    /// Semidihedral group of order `2^n`, `n >= 4`.
    pub fn semidihedral(order: usize) -> GroupTable {
        let m = order / 2;
        present(&["a", "b"], &["a^2", &format!("b^{m}"), &format!("b^a = b^{}", m / 2 - 1)])
    }

    pub fn d8() -> GroupTable {
        dihedral(8)
    }

    pub fn q8() -> GroupTable {
        quaternion(8)
    }

    /// All groups of order at most 8 (one per isomorphism class).
    pub fn groups_up_to_8() -> Vec<(&'static str, GroupTable)> {
        let c = GroupTable::cyclic;
        vec![
            ("1", GroupTable::trivial()),
            ("C2", c(2)),
            ("C3", c(3)),
            ("C4", c(4)),
            ("C2xC2", c(2).direct_product(&c(2))),
            ("C5", c(5)),
            ("C6", c(6)),
            ("S3", present(&["a", "b"], &["a^2", "b^3", "b^a = b^-1"])),
            ("C7", c(7)),
            ("C8", c(8)),
            ("C4xC2", c(4).direct_product(&c(2))),
            ("C2xC2xC2", c(2).direct_product(&c(2)).direct_product(&c(2))),
            ("D8", d8()),
            ("Q8", q8()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::library::*;
    use super::*;

    #[test]
    fn d8_from_presentation() {
        let g = d8();
        assert_eq!(g.order(), 8);
        assert_eq!(g.lower_central_series().sizes(), vec![8, 2, 1]);
        assert_eq!(g.coclass().unwrap(), 1);
        assert_eq!(g.automorphism_group(64).unwrap().len(), 8);
        assert_eq!(g.abelian_invariants(), vec![1, 1]);
        assert_eq!(g.label(0), "1");
    }

    #[test]
    fn small_cases() {
        let t = GroupTable::trivial();
        assert_eq!(t.order(), 1);
        assert_eq!(t.lower_central_series().sizes(), vec![1]);
        let c4 = GroupTable::cyclic(4);
        assert_eq!(c4.coclass().unwrap(), 1);
        assert_eq!(c4.automorphism_group(64).unwrap().len(), 2);
        assert_eq!(c4.lower_central_series().sizes(), vec![4, 1]);
        let c2 = GroupTable::cyclic(2);
        assert_eq!(c2.coclass().unwrap(), 0);
        assert_eq!(c2.automorphism_group(64).unwrap().len(), 1);
        let names = vec!["x".to_string()];
        let g = GroupTable::from_presentation(&names, &["x^4".to_string()], 100).unwrap();
        assert_eq!(g.order(), 4);
        assert!(GroupTable::cyclic(6).coclass().is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        let t = vec![vec![0, 1], vec![1, 1]];
        assert!(GroupTable::from_table(&t, None).is_err());
        // A non-associative loop of order 5 with identity and inverses.
        let l = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(GroupTable::from_table(&l, None).is_err());
    }

    #[test]
    fn isomorphism_classes() {
        let groups = groups_up_to_8();
        for (i, (_, a)) in groups.iter().enumerate() {
            for (j, (_, b)) in groups.iter().enumerate() {
                assert_eq!(a.is_isomorphic(b), i == j);
            }
        }
        let perm_d8 = GroupTable::from_permutations(&[vec![1, 2, 3, 0], vec![0, 3, 2, 1]], 100).unwrap();
        assert!(perm_d8.is_isomorphic(&d8()));
        assert_eq!(semidihedral(16).order(), 16);
        assert!(!semidihedral(16).is_isomorphic(&dihedral(16)));
        assert!(!semidihedral(16).is_isomorphic(&quaternion(16)));
    }

    #[test]
    fn automorphisms_form_a_group() {
        let g = GroupTable::cyclic(2).direct_product(&GroupTable::cyclic(2));
        let auts = g.automorphism_group(64).unwrap();
        assert_eq!(auts.len(), 6);
        for a in &auts {
            for b in &auts {
                assert!(auts.contains(&a.then(b)));
            }
            assert!(auts.contains(&a.inverse()));
        }
    }

    #[test]
    fn stabilizers() {
        let g = d8();
        let all = g.stabilizer(|x: &u8, _| *x, &7).unwrap();
        assert_eq!(all.len(), 8);
        // Right regular action has trivial stabilizers.
        let free = g.stabilizer(|x: &usize, h| g.mul(*x, h), &3).unwrap();
        assert_eq!(free, vec![0]);
        // Left multiplication is not a right action on a nonabelian group.
        assert!(g.stabilizer(|x: &usize, h| g.mul(h, *x), &1).is_err());
    }
}
