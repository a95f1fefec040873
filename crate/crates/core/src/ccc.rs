//! The chain-condition machinery: each condition gets a finite signature, and
//! conditions with equal signatures always amalgamate. Since there are only
//! countably many signatures, every antichain is countable.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::conditions::Condition;
use crate::error::CccError;
use crate::seq::{Coord, Element, PrefixWord};

/// The class code of a condition.
///
/// `k` is the least depth at which (i) distinct domain elements have distinct
/// `k`-prefixes, (ii) likewise for images, and (iii)/(iv) every odd coordinate
/// at index `≥ k` of every domain element and image already equals that
/// element's eventual odd value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Signature {
    pub n: usize,
    pub k: usize,
    pub dom_prefixes: Vec<PrefixWord>,
    pub img_prefixes: Vec<PrefixWord>,
    pub eventual_odd: Vec<(Coord, Coord)>,
}

fn separation_depth<'a>(xs: impl Iterator<Item = &'a Element>) -> usize {
    let xs: Vec<&Element> = xs.collect();
    let mut k = 0;
    for (i, x) in xs.iter().enumerate() {
        for y in &xs[i + 1..] {
            let m = x.meet_length(y).expect("distinct elements of one mode");
            k = k.max(m + 1);
        }
    }
    k
}

fn settled_depth(x: &Element) -> usize {
    2 * x.odd().settled_from()
}

pub fn signature(p: &Condition) -> Signature {
    let k = separation_depth(p.domain())
        .max(separation_depth(p.range()))
        .max(
            p.domain()
                .chain(p.range())
                .map(settled_depth)
                .max()
                .unwrap_or(0),
        );
    Signature {
        n: p.len(),
        k,
        dom_prefixes: p.domain().map(|a| a.prefix(k)).collect(),
        img_prefixes: p.range().map(|b| b.prefix(k)).collect(),
        eventual_odd: p
            .pairs()
            .iter()
            .map(|(a, b)| (a.odd().eventual(), b.odd().eventual()))
            .collect(),
    }
}

pub fn same_class(p: &Condition, q: &Condition) -> bool {
    signature(p) == signature(q)
}

/// Two conditions are compatible when their union is again a condition.
pub fn compatible(p: &Condition, q: &Condition) -> bool {
    matches!(p.union_raw(q), Ok(u) if u.is_valid())
}

fn dump(p: &Condition) -> String {
    p.pairs()
        .iter()
        .map(|(a, b)| format!("{a} -> {b}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// `p ∪ q` for same-class conditions. Any failure of the union to validate
/// is a contract violation and carries the full instance.
pub fn amalgamate(p: &Condition, q: &Condition) -> Result<Condition, CccError> {
    if !p.same_structures(q) {
        return Err(crate::error::ConditionError::SpecMismatch.into());
    }
    if !same_class(p, q) {
        return Err(CccError::NotSameClass);
    }
    let u = p.union_raw(q).map_err(|e| {
        CccError::ContractViolation(format!("{e}; p = [{}]; q = [{}]", dump(p), dump(q)))
    })?;
    let v = u.validate();
    if let Some(violation) = v.violation {
        return Err(CccError::ContractViolation(format!(
            "{violation:?}; p = [{}]; q = [{}]",
            dump(p),
            dump(q)
        )));
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AntichainViolation {
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AntichainReport {
    pub conditions: usize,
    pub pairs_checked: usize,
    pub compatible_pairs: usize,
    pub incompatible_pairs: usize,
    pub distinct_signatures: usize,
    /// Pairs that are incompatible yet share a signature. Must be empty.
    pub violations: Vec<AntichainViolation>,
}

pub fn antichain_audit(conds: &[Condition]) -> AntichainReport {
    let sigs: Vec<Signature> = conds.iter().map(signature).collect();
    let mut report = AntichainReport {
        conditions: conds.len(),
        pairs_checked: 0,
        compatible_pairs: 0,
        incompatible_pairs: 0,
        distinct_signatures: sigs.iter().collect::<BTreeSet<_>>().len(),
        violations: Vec::new(),
    };
    for i in 0..conds.len() {
        for j in i + 1..conds.len() {
            report.pairs_checked += 1;
            if compatible(&conds[i], &conds[j]) {
                report.compatible_pairs += 1;
            } else {
                report.incompatible_pairs += 1;
                if sigs[i] == sigs[j] {
                    report.violations.push(AntichainViolation { i, j });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::Mode;
    use crate::structures::{BranchFamily, BranchRule, SubstructureSpec};
    use std::sync::Arc;

    fn spec() -> Arc<SubstructureSpec> {
        Arc::new(SubstructureSpec::full(
            Mode::Qtree,
            BranchFamily::rule(BranchRule::new(
                2,
                [Coord::zero(), Coord::one(), Coord::int(2)],
            )),
        ))
    }

    fn cond(pairs: &[(&str, &str)]) -> Condition {
        let s = spec();
        let el = |x: &str| Element::parse(Mode::Qtree, x).unwrap();
        Condition::new(
            s.clone(),
            s,
            pairs.iter().map(|(a, b)| (el(a), el(b))).collect(),
        )
        .unwrap()
    }

    /// Independent scan: the least k at which all four clauses hold, checked
    /// coordinate by coordinate up to a horizon.
    fn k_scan(p: &Condition) -> usize {
        let clauses_hold = |k: usize| {
            let horizon = 40;
            let distinct = |xs: Vec<&Element>| {
                let ws: Vec<_> = xs.iter().map(|x| x.prefix(k)).collect();
                ws.iter().collect::<BTreeSet<_>>().len() == ws.len()
            };
            let settled = |x: &Element| {
                let ev = x.value(2 * horizon + 1);
                (k..2 * horizon)
                    .filter(|t| t % 2 == 1)
                    .all(|t| x.value(t) == ev)
            };
            distinct(p.domain().collect())
                && distinct(p.range().collect())
                && p.domain().chain(p.range()).all(settled)
        };
        (0..).find(|&k| clauses_hold(k)).unwrap()
    }

    #[test]
    fn signature_examples() {
        let e = signature(&cond(&[]));
        assert_eq!((e.n, e.k), (0, 0));
        assert!(e.dom_prefixes.is_empty() && e.eventual_odd.is_empty());

        let p = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={0:5}")]);
        assert_eq!(k_scan(&p), 2);
        let s = signature(&p);
        assert_eq!(s.k, 2);
        assert_eq!(
            s.img_prefixes,
            vec![PrefixWord(vec![Coord::zero(), Coord::int(5)])]
        );

        let p = cond(&[
            ("eta=[|0] odd={}", "eta=[|0] odd={}"),
            ("eta=[|1] odd={}", "eta=[|1] odd={}"),
        ]);
        assert_eq!(k_scan(&p), 1);
        assert_eq!(signature(&p).k, 1);
    }

    #[test]
    fn k_is_minimal_on_a_sample() {
        let samples = [
            cond(&[("eta=[1,2|0] odd={1:1}", "eta=[1,2|0] odd={0:2}")]),
            cond(&[
                ("eta=[|0] odd={0:1}", "eta=[|0] odd={0:1}"),
                ("eta=[|0] odd={0:2}", "eta=[|0] odd={0:2,1:1}"),
            ]),
            cond(&[
                ("eta=[2|0] odd={}", "eta=[2|0] odd={}"),
                ("eta=[2|1] odd={}", "eta=[2|1] odd={}"),
            ]),
        ];
        for p in &samples {
            assert_eq!(signature(p).k, k_scan(p), "{p:?}");
        }
    }

    #[test]
    fn same_class_examples() {
        let p = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={}")]);
        assert!(same_class(&p, &p));
        // Equal up to k = 0; branch tails differ later, eventual odd values equal.
        let q = cond(&[("eta=[|1] odd={}", "eta=[|1] odd={}")]);
        assert!(same_class(&p, &q));
        // Singletons: k(p) = 2 versus k(q) = 0. A singleton's k is always even,
        // since only the settling clauses apply to it.
        let p = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={0:5}")]);
        let q = cond(&[
            ("eta=[|0] odd={}", "eta=[|0] odd={}"),
            ("eta=[|1] odd={}", "eta=[|1] odd={}"),
        ])
        .restrict(&[0]);
        assert_eq!(signature(&q).k, 0);
        assert!(!same_class(&p, &q));
    }

    #[test]
    fn amalgamate_examples() {
        let p = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={}")]);
        assert_eq!(amalgamate(&p, &p).unwrap(), p);

        // Same class, same branch prefix, differing first at even index 2.
        let p = cond(&[("eta=[|0] odd={0:1}", "eta=[|0] odd={0:2}")]);
        let q = cond(&[("eta=[0,1|0] odd={0:1}", "eta=[0,1|0] odd={0:2}")]);
        assert!(same_class(&p, &q));
        let u = amalgamate(&p, &q).unwrap();
        assert_eq!(u.len(), 2);
        assert!(u.is_valid());

        let r = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={0:1}")]);
        assert!(matches!(amalgamate(&p, &r), Err(CccError::NotSameClass)));
    }

    #[test]
    fn antichain_examples() {
        let p = cond(&[("eta=[|0] odd={}", "eta=[|0] odd={}")]);
        let rep = antichain_audit(std::slice::from_ref(&p));
        assert_eq!((rep.distinct_signatures, rep.violations.len()), (1, 0));

        let q = cond(&[("eta=[|1] odd={}", "eta=[|1] odd={}")]);
        let rep = antichain_audit(&[p.clone(), q]);
        assert_eq!(rep.compatible_pairs, 1);

        // Same domain point, three different images: pairwise incompatible.
        let conds = [
            cond(&[("eta=[|0] odd={}", "eta=[|0] odd={}")]),
            cond(&[("eta=[|0] odd={}", "eta=[|0] odd={0:1}")]),
            cond(&[("eta=[|0] odd={}", "eta=[|0] odd={0:2}")]),
        ];
        let rep = antichain_audit(&conds);
        assert_eq!(rep.incompatible_pairs, 3);
        assert_eq!(rep.distinct_signatures, 3);
        assert!(rep.violations.is_empty());
    }
}
