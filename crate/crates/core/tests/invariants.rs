mod common;

use coclass::cohomology::Cohomology;
use coclass::finite_group::library;
use coclass::report::{decimal_strings, orbits_report};
use coclass::scenarios::load_scenario;
use proptest::prelude::*;
use serde_json::Value;

use common::{homology, trivial_module, uct_trivial};

fn json_tree() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        any::<u64>().prop_map(Value::from),
        any::<i32>().prop_map(Value::from),
        "[a-z]{0,4}".prop_map(Value::from),
        any::<bool>().prop_map(Value::from),
        Just(Value::Null),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-z]{1,3}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn has_number(v: &Value) -> bool {
    match v {
        Value::Number(_) => true,
        Value::Array(a) => a.iter().any(has_number),
        Value::Object(o) => o.values().any(has_number),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trivial_coefficients_follow_universal_coefficients(
        gi in 0usize..14,
        p in prop::sample::select(vec![2u64, 3]),
        exps in prop::collection::vec(1u32..=3, 1..=2),
        m in 0usize..=2,
    ) {
        let groups = library::groups_up_to_8();
        let (name, g) = &groups[gi % groups.len()];
        let (ab, schur) = homology(name);
        let module = trivial_module(g.order(), p, &exps);
        let h = Cohomology::compute(g, &module, m).unwrap();
        prop_assert_eq!(h.invariants().to_vec(), uct_trivial(&ab, &schur, p, &exps, m));
    }

    #[test]
    fn representatives_round_trip(
        which in prop::sample::select(vec!["c2_negation", "d8_gaussian"]),
        n in 1usize..=3,
        seed in prop::collection::vec(any::<u64>(), 4),
    ) {
        let s = load_scenario(which).unwrap();
        let a = s.tower().uniserial().quotient(n).unwrap();
        let h = Cohomology::compute(s.base(), a.module(), 2).unwrap();
        let g = h.group();
        let z: Vec<u64> = g.add(&seed[..g.invariants().len()], &vec![0; g.invariants().len()]);
        let c = h.representative(&z);
        prop_assert!(h.is_cocycle(s.base(), &c));
        prop_assert_eq!(h.coords(&c).unwrap(), z);
    }

    #[test]
    fn decimal_strings_leave_no_numbers(v in json_tree()) {
        let out = decimal_strings(v.clone());
        prop_assert!(!has_number(&out));
        prop_assert_eq!(decimal_strings(out.clone()), out.clone());
        if let Value::Number(x) = &v {
            prop_assert_eq!(out, Value::String(x.to_string()));
        }
    }
}

#[test]
fn orbits_satisfy_orbit_stabilizer() {
    for (name, levels) in [("c2_negation", 1..=4), ("d8_gaussian", 1..=3), ("dihedral_mainline", 1..=3)] {
        let s = load_scenario(name).unwrap();
        for n in levels {
            let r = orbits_report(&s, n).unwrap();
            let total: u64 = r.h2.iter().product();
            assert_eq!(r.sizes.iter().sum::<usize>() as u64, total, "{name} n={n}");
            assert_eq!(r.compatible_pairs % r.image_order, 0, "{name} n={n}");
            for (size, stab) in r.sizes.iter().zip(&r.stabilizer_sizes) {
                assert_eq!(size * stab, r.image_order, "{name} n={n}");
            }
        }
    }
}
