//! Oracles and module builders shared by the integration tests.

#![allow(dead_code)]

use coclass::cohomology::{brute_force_invariants, cochain_dim, Cohomology};
use coclass::finite_group::{library, GroupTable};
use coclass::lattice_module::GModule;
use coclass::matrix::Mat;
use coclass::zmod::{valuation_of, ZMod};

/// Largest cochain space enumerated by brute force.
pub const BRUTE_CAP: usize = 1 << 22;

/// Abelianization and Schur multiplier of the small groups, as cyclic orders.
pub fn homology(name: &str) -> (Vec<u64>, Vec<u64>) {
    match name {
        "1" => (vec![], vec![]),
        "C2" => (vec![2], vec![]),
        "C3" => (vec![3], vec![]),
        "C4" => (vec![4], vec![]),
        "C2xC2" => (vec![2, 2], vec![2]),
        "C5" => (vec![5], vec![]),
        "C6" => (vec![6], vec![]),
        "S3" => (vec![2], vec![]),
        "C7" => (vec![7], vec![]),
        "C8" => (vec![8], vec![]),
        "C4xC2" => (vec![4, 2], vec![2]),
        "C2xC2xC2" => (vec![2, 2, 2], vec![2, 2, 2]),
        "D8" => (vec![2, 2], vec![2]),
        "Q8" => (vec![2, 2], vec![]),
        _ => panic!("no homology data for {name}"),
    }
}

/// `H^m(G, M)` for trivial `M = (+) Z/p^e` by universal coefficients:
/// `Hom(H_m G, M) (+) Ext(H_(m-1) G, M)`.
pub fn uct_trivial(ab: &[u64], schur: &[u64], p: u64, exps: &[u32], m: usize) -> Vec<u32> {
    let part = |orders: &[u64]| -> Vec<u32> {
        let mut out = Vec::new();
        for &a in orders {
            for &e in exps {
                out.push(valuation_of(p, a).min(e));
            }
        }
        out
    };
    let mut inv = match m {
        0 => exps.to_vec(),
        1 => part(ab),
        2 => {
            let mut v = part(schur);
            v.extend(part(ab));
            v
        }
        _ => panic!("degree {m} has no closed form here"),
    };
    inv.retain(|&e| e > 0);
    inv.sort_unstable();
    inv
}

/// `F_2[H \ G]` with `G` acting on right cosets by right multiplication.
pub fn permutation_module(g: &GroupTable, h: &[usize]) -> GModule {
    let mut cosets: Vec<Vec<usize>> = Vec::new();
    let mut which = vec![usize::MAX; g.order()];
    for x in 0..g.order() {
        if which[x] != usize::MAX {
            continue;
        }
        let mut c: Vec<usize> = h.iter().map(|&y| g.mul(y, x)).collect();
        c.sort_unstable();
        for &y in &c {
            which[y] = cosets.len();
        }
        cosets.push(c);
    }
    let k = cosets.len();
    let ring = ZMod::new(2, 2).unwrap();
    let mats = (0..g.order())
        .map(|x| {
            let mut m = Mat::zeros(k, k);
            for (i, c) in cosets.iter().enumerate() {
                m[(i, which[g.mul(c[0], x)])] = 1;
            }
            m
        })
        .collect();
    GModule::new(ring, vec![1; k], mats).unwrap()
}

/// The cyclic group `C_n = <1>` acting on `(Z/p^e)^k` through `a^i`.
pub fn cyclic_module(n: usize, p: u64, e: u32, a: &Mat) -> GModule {
    let ring = ZMod::new(p, e + 1).unwrap();
    let q = p.pow(e);
    let reduce = |m: Mat| {
        let rows: Vec<Vec<u64>> = (0..m.rows()).map(|i| m.row(i).iter().map(|x| x % q).collect()).collect();
        Mat::from_rows(&rows, m.cols())
    };
    let mut mats = vec![Mat::identity(a.rows())];
    for i in 1..n {
        mats.push(reduce(mats[i - 1].mul(&ring, a)));
    }
    assert_eq!(reduce(mats[n - 1].mul(&ring, a)), Mat::identity(a.rows()), "a^n must be 1");
    GModule::new(ring, vec![e; a.rows()], mats).unwrap()
}

pub fn trivial_module(order: usize, p: u64, exps: &[u32]) -> GModule {
    let ring = ZMod::new(p, exps.iter().copied().max().unwrap_or(0) + 1).unwrap();
    GModule::trivial_action(ring, exps.to_vec(), order)
}

/// A cyclic subgroup of index 2, 3 or 4, when one exists.
pub fn small_index_cyclic(g: &GroupTable) -> Option<Vec<usize>> {
    let n = g.order();
    (0..n)
        .map(|x| g.closure(&[x]))
        .filter(|h| h.len() < n && n / h.len() <= 4)
        .max_by_key(|h| h.len())
}

/// `|C^m|` as a power of two, or infinity when it overflows.
pub fn cochain_space_log2(g: &GroupTable, module: &GModule, m: usize) -> f64 {
    let p = module.ring().p() as f64;
    let bits_per_entry: f64 = module.exps().iter().map(|&e| e as f64 * p.log2()).sum::<f64>() / module.dim() as f64;
    cochain_dim(g.order(), module.dim(), m) as f64 * bits_per_entry
}

#[derive(Debug)]
pub enum Oracle {
    BruteForce,
    Universal,
    Shapiro,
    Coprime,
    Periodic,
}

pub struct Case {
    pub group: &'static str,
    pub module: String,
    pub degree: usize,
    pub oracle: Oracle,
    pub computed: Vec<u32>,
    pub expected: Vec<u32>,
}

type ClosedForm = Box<dyn Fn(usize) -> (Oracle, Vec<u32>)>;

/// Every cohomology comparison of the oracle suite.
pub fn oracle_cases() -> Vec<Case> {
    let mut out = Vec::new();
    for (name, g) in library::groups_up_to_8() {
        let (ab, schur) = homology(name);
        let mut modules: Vec<(String, GModule, ClosedForm)> = Vec::new();
        for (p, exps) in [(2u64, vec![1u32]), (2, vec![2]), (2, vec![1, 1]), (2, vec![4]), (3, vec![1])] {
            let m = trivial_module(g.order(), p, &exps);
            let (ab, schur) = (ab.clone(), schur.clone());
            let label = format!("trivial {}", exps.iter().map(|e| format!("Z/{}", p.pow(*e))).collect::<Vec<_>>().join("+"));
            modules.push((label, m, Box::new(move |k| (Oracle::Universal, uct_trivial(&ab, &schur, p, &exps, k)))));
        }
        if let Some(h) = small_index_cyclic(&g) {
            let m = permutation_module(&g, &h);
            let o = h.len() as u64;
            let label = format!("F2[G/C{o}]");
            modules.push((label, m, Box::new(move |k| (Oracle::Shapiro, uct_trivial(&[o], &[], 2, &[1], k)))));
        }
        let twisted: Option<(&str, GModule, Oracle)> = match name {
            "C3" => Some((
                "F2^2 rotation",
                cyclic_module(3, 2, 1, &Mat::from_rows(&[vec![0, 1], vec![1, 1]], 2)),
                Oracle::Coprime,
            )),
            "C5" => Some(("Z/11 by 3", cyclic_module(5, 11, 1, &Mat::from_rows(&[vec![3]], 1)), Oracle::Coprime)),
            "C7" => Some((
                "F2^3 companion",
                cyclic_module(7, 2, 1, &Mat::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]], 3)),
                Oracle::Coprime,
            )),
            "C2" => Some(("Z/4 by -1", cyclic_module(2, 2, 2, &Mat::from_rows(&[vec![3]], 1)), Oracle::Periodic)),
            _ => None,
        };
        if let Some((label, m, kind)) = twisted {
            let closed: ClosedForm = match kind {
                // No fixed points and coprime orders: everything vanishes.
                Oracle::Coprime => Box::new(|_| (Oracle::Coprime, Vec::new())),
                // Fixed points {0, 2}, and both Tate groups are Z/2.
                _ => Box::new(|_| (Oracle::Periodic, vec![1])),
            };
            modules.push((label.to_string(), m, closed));
        }
        for (label, m, closed) in &modules {
            for k in 0..=2 {
                let computed = Cohomology::compute(&g, m, k).unwrap().invariants().to_vec();
                if cochain_space_log2(&g, m, k) <= (BRUTE_CAP as f64).log2() {
                    let expected = brute_force_invariants(&g, m, k, BRUTE_CAP).unwrap();
                    out.push(Case {
                        group: name,
                        module: label.clone(),
                        degree: k,
                        oracle: Oracle::BruteForce,
                        computed: computed.clone(),
                        expected,
                    });
                }
                let (oracle, expected) = closed(k);
                out.push(Case { group: name, module: label.clone(), degree: k, oracle, computed, expected });
            }
        }
    }
    out
}
