//! Brute-force verification on bounded universes.
//!
//! Everything here enumerates: elements of a bounded universe, every
//! condition over them, every same-signature pair, every one-point
//! extension. Budgets are hard limits; exceeding one is an error, never a
//! silent truncation.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::Arc;

use itertools::Itertools;
use serde::Serialize;

use crate::ccc::{signature, Signature};
use crate::conditions::Condition;
use crate::density::{extend, CaseTag};
use crate::error::OracleError;
use crate::seq::{BranchSpec, Coord, Element, Mode, OddPattern};
use crate::structures::{BranchFamily, BranchRule, SubstructureSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// A finite slice of the tree structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundedUniverse {
    pub mode: Mode,
    /// Values allowed in branch prefixes and odd supports.
    pub coords: Vec<Coord>,
    pub max_prefix: usize,
    pub tails: Vec<Coord>,
    pub max_support: usize,
    pub max_odd_index: usize,
    pub max_domain: usize,
    pub include_designated: bool,
}

impl BoundedUniverse {
    /// Coordinates {0,1,2}, branch prefixes ≤ 2 with tail 0, odd support ≤ 2
    /// on indices {0,1}, domains ≤ 2.
    pub fn standard_qtree() -> Self {
        BoundedUniverse {
            mode: Mode::Qtree,
            coords: vec![Coord::zero(), Coord::one(), Coord::int(2)],
            max_prefix: 2,
            tails: vec![Coord::zero()],
            max_support: 2,
            max_odd_index: 1,
            max_domain: 2,
            include_designated: false,
        }
    }

    /// Binary coordinates, branch prefixes ≤ 2 with tails {0,1}, odd support
    /// ≤ 2 on indices {0,1}, domains ≤ 2, designated points included.
    pub fn standard_fer() -> Self {
        BoundedUniverse {
            mode: Mode::Fer,
            coords: vec![Coord::zero(), Coord::one()],
            max_prefix: 2,
            tails: vec![Coord::zero(), Coord::one()],
            max_support: 2,
            max_odd_index: 1,
            max_domain: 2,
            include_designated: true,
        }
    }

    pub fn check(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::Universe(m.to_string()));
        if self.coords.is_empty() || self.tails.is_empty() {
            return bad("coordinate and tail sets must be nonempty");
        }
        if let Some(c) = self
            .coords
            .iter()
            .chain(&self.tails)
            .find(|c| !self.mode.admits(c))
        {
            return Err(OracleError::Universe(format!(
                "{c} is outside the {} domain",
                self.mode
            )));
        }
        if self.include_designated && self.mode != Mode::Fer {
            return bad("designated elements exist only in fer mode");
        }
        Ok(())
    }

    fn rule(&self) -> BranchRule {
        BranchRule::new(self.max_prefix, self.coords.iter().cloned())
            .with_tails(self.tails.iter().cloned())
    }

    /// The full structure over the universe's branches. Every universe
    /// element is a member, and so is every point extensions may need.
    pub fn spec(&self) -> SubstructureSpec {
        SubstructureSpec::full(self.mode, BranchFamily::rule(self.rule()))
    }

    pub fn branches(&self) -> Vec<BranchSpec> {
        BranchFamily::rule(self.rule()).branches()
    }

    fn odd_patterns(&self) -> Vec<OddPattern> {
        let values: Vec<Coord> = self
            .coords
            .iter()
            .filter(|c| !c.is_zero())
            .cloned()
            .collect();
        let mut out = Vec::new();
        for size in 0..=self.max_support.min(self.max_odd_index + 1) {
            for idx in (0..=self.max_odd_index).combinations(size) {
                let assignments: Box<dyn Iterator<Item = Vec<Coord>>> = if size == 0 {
                    Box::new(std::iter::once(Vec::new()))
                } else {
                    Box::new(
                        (0..size)
                            .map(|_| values.iter().cloned())
                            .multi_cartesian_product(),
                    )
                };
                for vals in assignments {
                    out.push(OddPattern::from_entries(idx.iter().copied().zip(vals)));
                }
            }
        }
        if self.include_designated {
            out.push(OddPattern::all_ones());
        }
        out
    }

    /// All universe elements in lexicographic order.
    pub fn elements(&self) -> Vec<Element> {
        let patterns = self.odd_patterns();
        let mut out: Vec<Element> = self
            .branches()
            .into_iter()
            .flat_map(|b| {
                patterns.iter().map(move |o| {
                    Element::new(self.mode, b.clone(), o.clone())
                        .expect("universe is in its mode domain")
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Every injective map with domain size ≤ `max_domain` that sends each
    /// point to a point on its own branch, plus every single-pair map across
    /// branches. This is a superset of the valid conditions.
    pub fn for_each_candidate(&self, mut f: impl FnMut(Condition)) {
        let spec = Arc::new(self.spec());
        let elements = self.elements();
        let mut by_branch: BTreeMap<&BranchSpec, Vec<&Element>> = BTreeMap::new();
        for x in &elements {
            by_branch.entry(x.branch()).or_default().push(x);
        }
        f(Condition::empty(spec.clone(), spec.clone()));
        if self.max_domain >= 1 {
            for a in &elements {
                for b in &elements {
                    f(Condition::from_members(
                        spec.clone(),
                        spec.clone(),
                        vec![(a.clone(), b.clone())],
                    )
                    .expect("singleton"));
                }
            }
        }
        for size in 2..=self.max_domain {
            for dom in elements.iter().combinations(size) {
                let choices = dom.iter().map(|a| by_branch[a.branch()].iter().copied());
                for imgs in choices.multi_cartesian_product() {
                    if imgs.iter().collect::<HashSet<_>>().len() != size {
                        continue;
                    }
                    let pairs = dom
                        .iter()
                        .zip(&imgs)
                        .map(|(a, b)| ((*a).clone(), (*b).clone()))
                        .collect();
                    f(Condition::from_members(spec.clone(), spec.clone(), pairs)
                        .expect("injective"));
                }
            }
        }
    }

    /// Every valid condition over the universe, each once, in canonical
    /// order (by domain size, then domain, then images).
    pub fn enumerate_conditions(&self, budget: usize) -> Result<Vec<Condition>, OracleError> {
        self.check()?;
        let mut out = Vec::new();
        let mut over = 0usize;
        self.for_each_candidate(|c| {
            if c.is_valid() {
                if out.len() < budget {
                    out.push(c);
                } else {
                    over += 1;
                }
            }
        });
        if over > 0 {
            return Err(OracleError::BudgetExceeded {
                budget,
                needed: budget + over,
            });
        }
        Ok(out)
    }
}

fn dump(p: &Condition) -> Vec<String> {
    p.pairs()
        .iter()
        .map(|(a, b)| format!("{a} -> {b}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmalgamationViolation {
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmalgamationReport {
    pub schema_version: u32,
    pub audit: &'static str,
    pub universe: BoundedUniverse,
    pub conditions: usize,
    pub signature_classes: usize,
    pub largest_class: usize,
    /// Unordered pairs of distinct same-signature conditions checked.
    pub same_class_pairs: usize,
    /// Class size → number of classes of that size.
    pub class_sizes: BTreeMap<usize, usize>,
    pub violations: Vec<AmalgamationViolation>,
}

/// Checks that every two conditions with equal signatures have a valid
/// union.
pub fn exhaustive_amalgamation_audit(
    u: &BoundedUniverse,
    budget: usize,
) -> Result<AmalgamationReport, OracleError> {
    let conds = u.enumerate_conditions(budget)?;
    let mut classes: BTreeMap<Signature, Vec<usize>> = BTreeMap::new();
    for (i, c) in conds.iter().enumerate() {
        classes.entry(signature(c)).or_default().push(i);
    }
    let mut report = AmalgamationReport {
        schema_version: SCHEMA_VERSION,
        audit: "amalgamation",
        universe: u.clone(),
        conditions: conds.len(),
        signature_classes: classes.len(),
        largest_class: classes.values().map(Vec::len).max().unwrap_or(0),
        same_class_pairs: 0,
        class_sizes: BTreeMap::new(),
        violations: Vec::new(),
    };
    for members in classes.values() {
        *report.class_sizes.entry(members.len()).or_default() += 1;
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                report.same_class_pairs += 1;
                let (p, q) = (&conds[i], &conds[j]);
                let reason = match p.union_raw(q) {
                    Err(e) => Some(e.to_string()),
                    Ok(un) => un.validate().violation.map(|v| format!("{v:?}")),
                };
                if let Some(reason) = reason {
                    report.violations.push(AmalgamationViolation {
                        p: dump(p),
                        q: dump(q),
                        reason,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionFailure {
    pub condition: Vec<String>,
    pub element: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionReport {
    pub schema_version: u32,
    pub audit: &'static str,
    pub universe: BoundedUniverse,
    pub conditions: usize,
    pub extensions: usize,
    pub case_histogram: BTreeMap<&'static str, usize>,
    /// Case tags of this mode never exercised.
    pub uncovered_cases: Vec<&'static str>,
    pub failures: Vec<ExtensionFailure>,
}

/// Case tags an extension in the given mode can produce.
pub fn expected_cases(mode: Mode) -> Vec<CaseTag> {
    match mode {
        Mode::Qtree => CaseTag::ALL
            .into_iter()
            .filter(|c| *c != CaseTag::PrefixTarget)
            .collect(),
        Mode::Fer => vec![CaseTag::EmptyDomain, CaseTag::PrefixTarget],
    }
}

/// Extends every valid condition by every universe point outside its
/// domain and re-validates the result.
pub fn exhaustive_extension_audit(
    u: &BoundedUniverse,
    budget: usize,
) -> Result<ExtensionReport, OracleError> {
    let conds = u.enumerate_conditions(budget)?;
    let elements = u.elements();
    let mut hist: BTreeMap<&'static str, usize> = expected_cases(u.mode)
        .into_iter()
        .map(|c| (c.name(), 0))
        .collect();
    let mut failures = Vec::new();
    let mut extensions = 0usize;
    for p in &conds {
        for a in &elements {
            if p.position(a).is_some() {
                continue;
            }
            extensions += 1;
            let fail = |reason: String| ExtensionFailure {
                condition: dump(p),
                element: a.literal(),
                reason,
            };
            match extend(p, a) {
                Err(e) => failures.push(fail(e.to_string())),
                Ok((q, trace)) => {
                    *hist.entry(trace.case.name()).or_default() += 1;
                    let v = q.validate();
                    if let Some(violation) = v.violation {
                        failures.push(fail(format!("{violation:?}")));
                    } else if q.len() != p.len() + 1
                        || !p.is_subset_of(&q)
                        || q.image_of(a).is_none()
                    {
                        failures.push(fail("extension is not a one-point superset".into()));
                    } else if !trace.replays(q.target()) {
                        failures.push(fail("trace does not replay".into()));
                    }
                }
            }
        }
    }
    let uncovered_cases = hist
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(k, _)| *k)
        .collect();
    Ok(ExtensionReport {
        schema_version: SCHEMA_VERSION,
        audit: "extension",
        universe: u.clone(),
        conditions: conds.len(),
        extensions,
        case_histogram: hist,
        uncovered_cases,
        failures,
    })
}

fn representation_depth(x: &Element) -> usize {
    2 * x.branch().prefix().len().max(x.odd().settled_from()) + 2
}

/// Depth sufficient to separate every pair and expose every branch tail.
pub fn auto_depth(p: &Condition) -> usize {
    p.domain()
        .chain(p.range())
        .map(representation_depth)
        .max()
        .unwrap_or(0)
}

fn first_difference(x: &[Coord], y: &[Coord]) -> Option<usize> {
    x.iter().zip(y).position(|(a, b)| a != b)
}

/// Re-derives validity from raw words of length `depth` (default:
/// [`auto_depth`]): branch equality from even positions, meets from the
/// first differing position, order from the values there.
pub fn bruteforce_validate(p: &Condition, depth: Option<usize>) -> Result<bool, OracleError> {
    let depth = depth.unwrap_or_else(|| auto_depth(p));
    let words = |xs: Vec<&Element>| -> Vec<Vec<Coord>> {
        xs.into_iter()
            .map(|x| (0..depth).map(|i| x.value(i)).collect())
            .collect()
    };
    let dom = words(p.domain().collect());
    let img = words(p.range().collect());
    if depth < auto_depth(p) {
        // Branch tails may not be visible; detect only when a pair is unseparated.
        for ws in [&dom, &img] {
            for (i, x) in ws.iter().enumerate() {
                for y in &ws[i + 1..] {
                    if first_difference(x, y).is_none() {
                        return Err(OracleError::DepthTooSmall {
                            depth,
                            detail: "two distinct points agree on every materialised coordinate"
                                .into(),
                        });
                    }
                }
            }
        }
    }
    for (a, b) in dom.iter().zip(&img) {
        if (0..depth).step_by(2).any(|t| a[t] != b[t]) {
            return Ok(false);
        }
    }
    let ordered = p.source().mode == Mode::Qtree;
    for i in 0..dom.len() {
        for j in i + 1..dom.len() {
            let sep = |w: &Vec<Vec<Coord>>| {
                first_difference(&w[i], &w[j]).ok_or_else(|| OracleError::DepthTooSmall {
                    depth,
                    detail: format!("pair ({i}, {j}) agrees on all {depth} coordinates"),
                })
            };
            let (dm, im) = (sep(&dom)?, sep(&img)?);
            if dm != im {
                return Ok(false);
            }
            if ordered && (dom[i][dm] < dom[j][dm]) != (img[i][im] < img[j][im]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub condition: Vec<String>,
    pub validate: bool,
    pub bruteforce: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub schema_version: u32,
    pub audit: &'static str,
    pub universe: BoundedUniverse,
    pub candidates: usize,
    pub valid: usize,
    pub agreeing: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Compares [`Condition::validate`] with [`bruteforce_validate`] on every
/// candidate map of the universe, valid or not.
pub fn agreement_audit(u: &BoundedUniverse, budget: usize) -> Result<AgreementReport, OracleError> {
    u.check()?;
    let mut report = AgreementReport {
        schema_version: SCHEMA_VERSION,
        audit: "agreement",
        universe: u.clone(),
        candidates: 0,
        valid: 0,
        agreeing: 0,
        disagreements: Vec::new(),
    };
    u.for_each_candidate(|c| {
        report.candidates += 1;
        if report.candidates > budget {
            return;
        }
        let v = c.is_valid();
        report.valid += v as usize;
        match bruteforce_validate(&c, None) {
            Ok(b) if b == v => report.agreeing += 1,
            other => report.disagreements.push(Disagreement {
                condition: dump(&c),
                validate: v,
                bruteforce: format!("{other:?}"),
            }),
        }
    });
    if report.candidates > budget {
        return Err(OracleError::BudgetExceeded {
            budget,
            needed: report.candidates,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AutomorphismReport {
    pub schema_version: u32,
    pub depth: usize,
    pub tagged: bool,
    pub count: usize,
    /// Each generator lists the image of every leaf `0..2^depth`, leaves
    /// numbered with coordinate 0 as the most significant bit.
    pub generators: Vec<Vec<usize>>,
}

fn leaf_bit(leaf: usize, depth: usize, i: usize) -> usize {
    (leaf >> (depth - 1 - i)) & 1
}

fn leaf_meet(u: usize, v: usize, depth: usize) -> usize {
    (0..depth)
        .find(|&i| leaf_bit(u, depth, i) != leaf_bit(v, depth, i))
        .unwrap_or(depth)
}

/// Backtracking over leaf images, assigning leaves in order.
struct Search {
    n: usize,
    depth: usize,
    tagged: bool,
    budget: usize,
    image: Vec<usize>,
    used: Vec<bool>,
    all: Vec<Vec<usize>>,
}

impl Search {
    fn extend(&mut self, u: usize) -> Result<(), OracleError> {
        let d = self.depth;
        if u == self.n {
            if self.all.len() >= self.budget {
                return Err(OracleError::BudgetExceeded {
                    budget: self.budget,
                    needed: self.budget + 1,
                });
            }
            self.all.push(self.image.clone());
            return Ok(());
        }
        for v in 0..self.n {
            if self.used[v]
                || (self.tagged
                    && (0..d)
                        .step_by(2)
                        .any(|i| leaf_bit(u, d, i) != leaf_bit(v, d, i)))
                || (0..u).any(|w| leaf_meet(w, u, d) != leaf_meet(self.image[w], v, d))
            {
                continue;
            }
            self.used[v] = true;
            self.image[u] = v;
            self.extend(u + 1)?;
            self.used[v] = false;
        }
        Ok(())
    }
}

/// Permutations of the depth-`d` binary words preserving every `E_i`
/// (`i ≤ d`), optionally also fixing every even coordinate.
pub fn truncation_automorphisms(
    depth: usize,
    tagged: bool,
    budget: usize,
) -> Result<AutomorphismReport, OracleError> {
    if depth > 4 {
        return Err(OracleError::Precondition(format!(
            "depth {depth} exceeds the supported maximum of 4"
        )));
    }
    let n = 1usize << depth;
    let mut search = Search {
        n,
        depth,
        tagged,
        budget,
        image: vec![usize::MAX; n],
        used: vec![false; n],
        all: Vec::new(),
    };
    search.extend(0)?;
    let all = search.all;

    // Greedy generating set: keep each automorphism not yet generated.
    let mut generators: Vec<Vec<usize>> = Vec::new();
    let identity: Vec<usize> = (0..n).collect();
    let mut group: HashSet<Vec<usize>> = HashSet::from([identity.clone()]);
    for g in &all {
        if group.contains(g) {
            continue;
        }
        generators.push(g.clone());
        let mut queue: VecDeque<Vec<usize>> = group.iter().cloned().collect();
        while let Some(h) = queue.pop_front() {
            for s in &generators {
                let composed: Vec<usize> = h.iter().map(|&x| s[x]).collect();
                if group.insert(composed.clone()) {
                    queue.push_back(composed);
                }
            }
        }
    }
    Ok(AutomorphismReport {
        schema_version: SCHEMA_VERSION,
        depth,
        tagged,
        count: all.len(),
        generators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_fer() -> BoundedUniverse {
        BoundedUniverse {
            mode: Mode::Fer,
            coords: vec![Coord::zero(), Coord::one()],
            max_prefix: 1,
            tails: vec![Coord::zero()],
            max_support: 1,
            max_odd_index: 0,
            max_domain: 1,
            include_designated: false,
        }
    }

    #[test]
    fn bound_zero_gives_only_the_empty_condition() {
        let mut u = tiny_fer();
        u.max_domain = 0;
        let cs = u.enumerate_conditions(10).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].is_empty());
    }

    #[test]
    fn tiny_fer_condition_census() {
        let u = tiny_fer();
        let els = u.elements();
        assert_eq!(els.len(), 4);
        let same_branch = els
            .iter()
            .cartesian_product(&els)
            .filter(|(a, b)| a.branch() == b.branch())
            .count();
        let cs = u.enumerate_conditions(100).unwrap();
        assert_eq!(cs.len(), same_branch + 1);
        assert_eq!(cs.len(), 9);
        assert!(cs.iter().all(|c| c.is_valid()));
        let rep = agreement_audit(&u, 100).unwrap();
        assert_eq!((rep.candidates, rep.valid, rep.agreeing), (17, 9, 17));
    }

    #[test]
    fn budget_is_a_hard_limit() {
        let r = tiny_fer().enumerate_conditions(5);
        assert!(matches!(
            r,
            Err(OracleError::BudgetExceeded {
                budget: 5,
                needed: 9
            })
        ));
    }

    #[test]
    fn single_element_universe_has_no_violations() {
        let u = BoundedUniverse {
            mode: Mode::Qtree,
            coords: vec![Coord::zero()],
            max_prefix: 0,
            tails: vec![Coord::zero()],
            max_support: 0,
            max_odd_index: 0,
            max_domain: 2,
            include_designated: false,
        };
        assert_eq!(u.elements().len(), 1);
        let rep = exhaustive_amalgamation_audit(&u, 10).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.conditions, 2);
        let rep = exhaustive_extension_audit(&u, 10).unwrap();
        assert!(rep.failures.is_empty());
        assert_eq!(rep.case_histogram["empty-domain"], 1);
    }

    #[test]
    fn bruteforce_examples() {
        let s = Arc::new(BoundedUniverse::standard_qtree().spec());
        let el = |x: &str| Element::parse(Mode::Qtree, x).unwrap();
        let empty = Condition::empty(s.clone(), s.clone());
        assert!(bruteforce_validate(&empty, Some(0)).unwrap());
        assert!(bruteforce_validate(&empty, Some(7)).unwrap());

        let p = Condition::new(
            s.clone(),
            s.clone(),
            vec![
                (el("eta=[|0] odd={}"), el("eta=[|0] odd={}")),
                (el("eta=[|0] odd={0:1}"), el("eta=[|0] odd={1:1}")),
            ],
        )
        .unwrap();
        assert!(!bruteforce_validate(&p, Some(4)).unwrap());
        assert!(matches!(
            bruteforce_validate(&p, Some(2)),
            Err(OracleError::DepthTooSmall { .. })
        ));
    }

    #[test]
    fn automorphism_counts_small() {
        assert_eq!(truncation_automorphisms(0, false, 10).unwrap().count, 1);
        assert_eq!(truncation_automorphisms(1, false, 10).unwrap().count, 2);
        let r = truncation_automorphisms(2, false, 100).unwrap();
        assert_eq!(r.count, 8);
        assert!(matches!(
            truncation_automorphisms(5, false, 10),
            Err(OracleError::Precondition(_))
        ));
        assert!(truncation_automorphisms(3, false, 10).is_err());
    }
}
