//! Serializable reports for every command, shared by the command-line tool,
//! the acceptance tests and the guide.
//!
//! All numbers in emitted JSON are decimal strings.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cohomology::Cohomology;
use crate::compatible::{compatible_pairs, exponent_bounds, orbits_on_h2, ExponentBounds, ENUM_CAP};
use crate::error::{Error, Result};
use crate::extensions::{build_extension, coclass_of_extension, CoclassInfo, EXTENSION_CAP};
use crate::finite_group::Fingerprint;
use crate::scenarios::{
    recheck_witness, scan_summand_stability, verify_correspondence, verify_lcs_claim, CorrespondenceReport, LcsReport,
    RefutationReport, Scenario, ScenarioSpec, Witness,
};
use crate::tree::{build_branch, export_dot, maximal_class_name, nu_shift, BranchGraph, ShiftReport};

/// Replaces every JSON number by its decimal string.
pub fn decimal_strings(v: Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(a) => Value::Array(a.into_iter().map(decimal_strings).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, decimal_strings(x))).collect()),
        other => other,
    }
}

/// Pretty JSON with decimal-string numbers and a trailing newline.
pub fn to_json<T: Serialize>(x: &T) -> Result<String> {
    let v = decimal_strings(serde_json::to_value(x)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// `p^e` for each exponent.
pub fn prime_powers(p: u64, exps: &[u32]) -> Result<Vec<u64>> {
    exps.iter()
        .map(|&e| p.checked_pow(e).ok_or(Error::PrecisionTooLarge { p, prec: e }))
        .collect()
}

fn h_at(s: &Scenario, n: usize, degree: usize) -> Result<Cohomology> {
    let a = s.tower().uniserial().quotient(n)?;
    Cohomology::compute(s.base(), a.module(), degree)
}

/// Recomputes `H^degree(R, A_n)` at precision `N + 2` and compares exponents.
pub fn precision_recheck(s: &Scenario, n: usize, degree: usize, at_n: &[u32]) -> Result<()> {
    let wider = s.with_precision(s.precision() + 2)?;
    let h = h_at(&wider, n, degree)?;
    if h.invariants() != at_n {
        return Err(Error::PrecisionUnstable { at_n: at_n.to_vec(), at_n2: h.invariants().to_vec() });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CohomologyReport {
    pub scenario: String,
    pub level: usize,
    pub degree: usize,
    pub precision: u32,
    /// Invariants of `A_n` as prime powers.
    pub module: Vec<u64>,
    /// Invariants of `H^degree(R, A_n)` as prime powers.
    pub invariants: Vec<u64>,
    pub order_exp: u32,
    pub recheck_precision: u32,
    /// Normalized cocycles of the cyclic generators, indexed by tuples of
    /// non-identity elements.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representatives: Option<Vec<Vec<u64>>>,
}

pub fn cohomology_report(s: &Scenario, n: usize, degree: usize, representatives: bool) -> Result<CohomologyReport> {
    let p = s.tower().uniserial().ring().p();
    let a = s.tower().uniserial().quotient(n)?;
    let h = Cohomology::compute(s.base(), a.module(), degree)?;
    precision_recheck(s, n, degree, h.invariants())?;
    Ok(CohomologyReport {
        scenario: s.name().into(),
        level: n,
        degree,
        precision: s.precision(),
        module: prime_powers(p, a.invariants())?,
        invariants: prime_powers(p, h.invariants())?,
        order_exp: h.order_exp(),
        recheck_precision: s.precision() + 2,
        representatives: representatives.then(|| h.gens()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitsReport {
    pub scenario: String,
    pub level: usize,
    pub h2: Vec<u64>,
    pub compatible_pairs: usize,
    /// Order of the group of permutations the pairs induce on `H^2`.
    pub image_order: usize,
    pub bounds: ExponentBounds,
    pub sizes: Vec<usize>,
    pub stabilizer_sizes: Vec<usize>,
    /// First class of each orbit.
    pub representatives: Vec<Vec<u64>>,
}

pub fn orbits_report(s: &Scenario, n: usize) -> Result<OrbitsReport> {
    let p = s.tower().uniserial().ring().p();
    let a = s.tower().uniserial().quotient(n)?;
    let h2 = Cohomology::compute(s.base(), a.module(), 2)?;
    precision_recheck(s, n, 2, h2.invariants())?;
    let auts = s.base().automorphism_group(ENUM_CAP)?;
    let comp = compatible_pairs(s.base(), a.module(), &auts, ENUM_CAP)?;
    let o = orbits_on_h2(s.base(), &h2, &comp, ENUM_CAP)?;
    Ok(OrbitsReport {
        scenario: s.name().into(),
        level: n,
        h2: prime_powers(p, h2.invariants())?,
        compatible_pairs: comp.len(),
        image_order: o.image_order,
        bounds: exponent_bounds(s.tower(), n)?,
        sizes: o.sizes(),
        stabilizer_sizes: o.stabilizer_sizes.clone(),
        representatives: o.classes.iter().map(|c| c[0].clone()).collect(),
    })
}

/// A class or cocycle at a level, as read from a cocycle file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleFile {
    #[serde(deserialize_with = "number")]
    pub level: usize,
    /// Coordinates in `H^2(R, A_n)`.
    #[serde(default, deserialize_with = "numbers")]
    pub class: Option<Vec<u64>>,
    /// A normalized 2-cocycle, `dim A_n` entries per pair of non-identity
    /// elements.
    #[serde(default, deserialize_with = "numbers")]
    pub cocycle: Option<Vec<u64>>,
}

/// A JSON number or a decimal string, so reports can be fed back in.
#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Int(u64),
    Str(String),
}

impl Num {
    fn get<E: serde::de::Error>(self) -> std::result::Result<u64, E> {
        match self {
            Num::Int(x) => Ok(x),
            Num::Str(s) => s.parse().map_err(|_| E::custom(format!("not a decimal integer: {s:?}"))),
        }
    }
}

fn number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let x = Num::deserialize(d)?.get()?;
    usize::try_from(x).map_err(serde::de::Error::custom)
}

fn numbers<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<u64>>, D::Error> {
    let v: Option<Vec<Num>> = Option::deserialize(d)?;
    v.map(|v| v.into_iter().map(Num::get).collect()).transpose()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtendReport {
    pub scenario: String,
    pub level: usize,
    pub class: Vec<u64>,
    pub order: usize,
    pub coclass: CoclassInfo,
    pub name: Option<String>,
    pub fingerprint: Fingerprint,
}

pub fn extend_report(s: &Scenario, file: &CocycleFile) -> Result<ExtendReport> {
    let n = file.level;
    let a = s.tower().uniserial().quotient(n)?;
    let h2 = Cohomology::compute(s.base(), a.module(), 2)?;
    let (class, cocycle) = match (&file.class, &file.cocycle) {
        (Some(z), None) => {
            if z.len() != h2.invariants().len() {
                return Err(Error::Invalid(format!(
                    "class has {} coordinates, H^2 has {} cyclic factors",
                    z.len(),
                    h2.invariants().len()
                )));
            }
            let g = h2.group();
            let z = g.add(z, &vec![0; z.len()]);
            (z.clone(), h2.representative(&z))
        }
        (None, Some(c)) => {
            if c.len() != h2.cochain_dim() {
                return Err(Error::Invalid(format!("cocycle has {} entries, expected {}", c.len(), h2.cochain_dim())));
            }
            (h2.coords(c)?, c.clone())
        }
        _ => return Err(Error::Invalid("give exactly one of `class` and `cocycle`".into())),
    };
    let e = build_extension(s.base(), a.module(), &cocycle, EXTENSION_CAP)?;
    Ok(ExtendReport {
        scenario: s.name().into(),
        level: n,
        class,
        order: e.order(),
        coclass: coclass_of_extension(&e)?,
        name: maximal_class_name(e.table()),
        fingerprint: e.fingerprint(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchReport {
    pub branch: BranchGraph,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftReport>,
    pub ok: bool,
}

/// The branch, its DOT text, and with `shift` the map to `B_(i+d)`.
pub fn branch_report(s: &Scenario, i: usize, k: usize, shift: bool) -> Result<(BranchReport, String)> {
    let branch = build_branch(s, i, k)?;
    let dot = export_dot(&branch);
    let shift = if shift { Some(nu_shift(s, &branch)?) } else { None };
    let ok = shift.as_ref().is_none_or(|r| r.ok());
    Ok((BranchReport { branch, shift, ok }, dot))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftScan {
    pub lift: u32,
    /// `scanned`, `skipped` (a witness was already found) or an error.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RefutationReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterexampleReport {
    pub scenario: String,
    pub lifts: Vec<LiftScan>,
    pub witness: Option<Witness>,
    /// The witness re-derived from its matrix and class alone.
    pub recheck_matches: bool,
    pub lifted_preserve: bool,
    pub correspondence: Option<CorrespondenceReport>,
    pub ok: bool,
}

/// Scans lifts in ascending order, stopping at the first witness, then checks
/// the corrected correspondence at the least qualifying level at or above the
/// witness level that also carries moving classes.
pub fn verify_counterexample(
    spec: &ScenarioSpec,
    precision: Option<u32>,
    lifts: RangeInclusive<u32>,
    levels: RangeInclusive<usize>,
) -> Result<CounterexampleReport> {
    let mut out = CounterexampleReport {
        scenario: spec.name.clone(),
        lifts: Vec::new(),
        witness: None,
        recheck_matches: false,
        lifted_preserve: true,
        correspondence: None,
        ok: false,
    };
    let mut found: Option<(Scenario, RefutationReport)> = None;
    for k in lifts {
        if found.is_some() {
            out.lifts.push(LiftScan { lift: k, status: "skipped".into(), report: None });
            continue;
        }
        let spec_k = ScenarioSpec { lift: k, precision: precision.or(spec.precision), ..spec.clone() };
        let attempt = Scenario::new(spec_k).and_then(|s| scan_summand_stability(&s, levels.clone()).map(|r| (s, r)));
        match attempt {
            Ok((s, r)) => {
                out.lifted_preserve &= r.lifted_preserve;
                out.lifts.push(LiftScan { lift: k, status: "scanned".into(), report: Some(r.clone()) });
                if r.witness.is_some() {
                    found = Some((s, r));
                }
            }
            Err(e @ Error::CapExceeded { .. }) => {
                out.lifts.push(LiftScan { lift: k, status: e.to_string(), report: None });
            }
            Err(e) => return Err(e),
        }
    }
    let Some((s, r)) = found else { return Ok(out) };
    let w = r.witness.clone().expect("witness present");
    out.recheck_matches = recheck_witness(&s, &w)? == w.h3_component;
    let level = r
        .scans
        .iter()
        .filter(|sc| sc.level >= w.level && sc.moving_invertible + sc.moving_complement > 0)
        .map(|sc| sc.level)
        .find(|&n| {
            let q = |m| exponent_bounds(s.tower(), m).map(|b| b.qualifies()).unwrap_or(false);
            q(n) && q(n + s.d())
        });
    let corr = match level {
        Some(n) => verify_correspondence(&s, n)?,
        None => verify_correspondence(&s, w.level)?,
    };
    out.ok = out.recheck_matches && out.lifted_preserve && corr.ok;
    out.correspondence = Some(corr);
    out.witness = Some(w);
    Ok(out)
}

pub fn lcs_report(s: &Scenario, max_m: usize) -> Result<LcsReport> {
    verify_lcs_claim(s, max_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::load_scenario;

    #[test]
    fn numbers_become_strings() {
        let v = decimal_strings(serde_json::json!({"a": [1, 2.5, {"b": 18446744073709551615u64}], "c": "x", "d": null}));
        assert_eq!(v, serde_json::json!({"a": ["1", "2.5", {"b": "18446744073709551615"}], "c": "x", "d": null}));
    }

    #[test]
    fn d8_h2_at_two() {
        let s = load_scenario("d8_gaussian").unwrap();
        let r = cohomology_report(&s, 2, 2, false).unwrap();
        assert_eq!(r.module, [2, 2]);
        assert_eq!(r.invariants.iter().product::<u64>(), 1 << r.order_exp);
        let again = to_json(&cohomology_report(&s, 2, 2, false).unwrap()).unwrap();
        assert_eq!(to_json(&r).unwrap(), again);
    }

    #[test]
    fn extend_from_class_and_cocycle_agree() {
        let s = load_scenario("c2_negation").unwrap();
        let by_class = extend_report(&s, &CocycleFile { level: 3, class: Some(vec![1]), cocycle: None }).unwrap();
        assert_eq!(by_class.order, 16);
        assert_eq!(by_class.name.as_deref(), Some("quaternion"));
        let a = s.tower().uniserial().quotient(3).unwrap();
        let h2 = Cohomology::compute(s.base(), a.module(), 2).unwrap();
        let file = CocycleFile { level: 3, class: None, cocycle: Some(h2.representative(&[1])) };
        assert_eq!(extend_report(&s, &file).unwrap(), by_class);
        let parsed: CocycleFile = serde_json::from_str(r#"{"level": "3", "class": [1]}"#).unwrap();
        assert_eq!(extend_report(&s, &parsed).unwrap(), by_class);
        let both = CocycleFile { level: 3, class: Some(vec![1]), cocycle: Some(vec![0]) };
        assert!(extend_report(&s, &both).is_err());
    }
}
