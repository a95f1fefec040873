//! One-point extension of conditions and the back-and-forth builder.
//!
//! Extending `p` by a new point `a` comes down to choosing the prefix of the
//! image of `a` and handing it to [`SubstructureSpec::find_witness`]. Let `m`
//! be the longest meet of `a` with a domain point and `a_j` a point realising
//! it. The image must copy `p(a_j)` below `m` and differ from it at `m`:
//!
//! * `m` even: position `m` is a branch coordinate, so the value is forced to
//!   `a(m)`;
//! * `m` odd (rational mode): the value is placed strictly between the images
//!   of the domain points flanking `a` at position `m`, using the midpoint
//!   when both flanks exist and `flank ± 1` otherwise;
//! * `m` odd (binary mode): the neighbour's image bit is flipped.
//!
//! Every domain point meeting `a` below `m` also meets `a_j` there, so those
//! meets (and orders) are inherited from `p(a_j)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::conditions::Condition;
use crate::error::DensityError;
use crate::seq::{Coord, Element, Mode, PrefixWord};
use crate::structures::{ser_display, SubstructureSpec, WitnessConstraint};

/// Search depth used to confirm amenability before a back-and-forth run.
pub const AMENABILITY_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseTag {
    #[serde(rename = "empty-domain")]
    EmptyDomain,
    #[serde(rename = "endpoint-low")]
    EndpointLow,
    #[serde(rename = "endpoint-high")]
    EndpointHigh,
    #[serde(rename = "case1-odd")]
    Case1Odd,
    #[serde(rename = "case1-even")]
    Case1Even,
    #[serde(rename = "case2")]
    Case2,
    #[serde(rename = "prefix-target")]
    PrefixTarget,
}

impl CaseTag {
    pub const ALL: [CaseTag; 7] = [
        CaseTag::EmptyDomain,
        CaseTag::EndpointLow,
        CaseTag::EndpointHigh,
        CaseTag::Case1Odd,
        CaseTag::Case1Even,
        CaseTag::Case2,
        CaseTag::PrefixTarget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::EmptyDomain => "empty-domain",
            CaseTag::EndpointLow => "endpoint-low",
            CaseTag::EndpointHigh => "endpoint-high",
            CaseTag::Case1Odd => "case1-odd",
            CaseTag::Case1Even => "case1-even",
            CaseTag::Case2 => "case2",
            CaseTag::PrefixTarget => "prefix-target",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How an extension chose its image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionTrace {
    pub case: CaseTag,
    #[serde(serialize_with = "ser_display")]
    pub element: Element,
    #[serde(serialize_with = "ser_display")]
    pub image: Element,
    pub constraint: WitnessConstraint,
    /// Positions in the old sorted domain of the points flanking `element`.
    pub neighbors: Vec<usize>,
}

impl ExtensionTrace {
    /// Re-runs the witness search recorded in the trace.
    pub fn replays(&self, target: &SubstructureSpec) -> bool {
        matches!(target.find_witness(&self.constraint), Ok(x) if x == self.image)
    }
}

fn meets(p: &Condition, a: &Element) -> Vec<usize> {
    p.domain()
        .map(|x| a.meet_length(x).expect("a is not in the domain"))
        .collect()
}

fn qtree_constraint(p: &Condition, a: &Element) -> (CaseTag, WitnessConstraint, Vec<usize>) {
    let pairs = p.pairs();
    let n = pairs.len();
    let pos = pairs.partition_point(|(x, _)| x < a);
    let ms = meets(p, a);
    let m = *ms.iter().max().expect("nonempty domain");
    let j = if pos > 0 && ms[pos - 1] == m {
        pos - 1
    } else {
        pos
    };
    debug_assert_eq!(ms[j], m);

    let (case, neighbors) = if pos == 0 {
        (CaseTag::EndpointLow, vec![0])
    } else if pos == n {
        (CaseTag::EndpointHigh, vec![n - 1])
    } else if ms[pos - 1] == ms[pos] {
        (
            if m % 2 == 1 {
                CaseTag::Case1Odd
            } else {
                CaseTag::Case1Even
            },
            vec![pos - 1, pos],
        )
    } else {
        (CaseTag::Case2, vec![pos - 1, pos])
    };

    let base = pairs[j].1.prefix(m);
    let constraint = if m.is_multiple_of(2) {
        WitnessConstraint {
            branch: a.branch().clone(),
            word: base.concat(a.value(m)),
            value: Coord::zero(),
        }
    } else {
        let here = a.value(m);
        let mut lower: Option<Coord> = None;
        let mut upper: Option<Coord> = None;
        for (i, (x, b)) in pairs.iter().enumerate() {
            if ms[i] != m {
                continue;
            }
            let v = b.value(m);
            if x.value(m) < here {
                if lower.as_ref().is_none_or(|l| v > *l) {
                    lower = Some(v);
                }
            } else if upper.as_ref().is_none_or(|u| v < *u) {
                upper = Some(v);
            }
        }
        let r = match (lower, upper) {
            (Some(l), Some(u)) => l.midpoint(&u),
            (Some(l), None) => l.add_int(1),
            (None, Some(u)) => u.add_int(-1),
            (None, None) => unreachable!("a_j meets a at m"),
        };
        WitnessConstraint {
            branch: a.branch().clone(),
            word: base,
            value: r,
        }
    };
    (case, constraint, neighbors)
}

fn fer_constraint(p: &Condition, a: &Element) -> (CaseTag, WitnessConstraint, Vec<usize>) {
    let pairs = p.pairs();
    let pos = pairs.partition_point(|(x, _)| x < a);
    let ms = meets(p, a);
    let m = *ms.iter().max().expect("nonempty domain");
    let j = ms.iter().position(|&x| x == m).expect("max is attained");

    // Length at which dom p ∪ {a} is pairwise separated.
    let mut len = m + 1;
    let dom: Vec<&Element> = p.domain().collect();
    for (i, x) in dom.iter().enumerate() {
        for y in &dom[i + 1..] {
            len = len.max(x.meet_length(y).expect("distinct") + 1);
        }
    }

    let neighbour = &pairs[j].1;
    let mut target: Vec<Coord> = (0..m).map(|t| neighbour.value(t)).collect();
    target.push(if m.is_multiple_of(2) {
        a.value(m)
    } else {
        neighbour.value(m).complement()
    });
    for t in m + 1..len {
        target.push(if t % 2 == 0 {
            a.value(t)
        } else {
            Coord::zero()
        });
    }
    let constraint = if len.is_multiple_of(2) {
        let value = target.pop().expect("len ≥ 1");
        WitnessConstraint {
            branch: a.branch().clone(),
            word: PrefixWord(target),
            value,
        }
    } else {
        WitnessConstraint {
            branch: a.branch().clone(),
            word: PrefixWord(target),
            value: Coord::zero(),
        }
    };
    let neighbors = [pos.checked_sub(1), (pos < pairs.len()).then_some(pos)]
        .into_iter()
        .flatten()
        .collect();
    (CaseTag::PrefixTarget, constraint, neighbors)
}

/// Extends `p` by one new domain point `a`.
///
/// `p` must be valid; the returned condition is `p ∪ {(a, b)}` for the image
/// `b` described in the module documentation.
pub fn extend(p: &Condition, a: &Element) -> Result<(Condition, ExtensionTrace), DensityError> {
    if !p.source().contains(a)? {
        return Err(DensityError::Precondition(format!(
            "{a} is not in the source structure"
        )));
    }
    if p.position(a).is_some() {
        return Err(DensityError::Precondition(format!(
            "{a} is already in the domain"
        )));
    }
    let (case, constraint, neighbors) = if p.is_empty() {
        let branch = a.branch().clone();
        let word = PrefixWord(vec![branch.value(0).clone()]);
        (
            CaseTag::EmptyDomain,
            WitnessConstraint {
                branch,
                word,
                value: Coord::zero(),
            },
            Vec::new(),
        )
    } else {
        match p.source().mode {
            Mode::Qtree => qtree_constraint(p, a),
            Mode::Fer => fer_constraint(p, a),
        }
    };
    let image = p.target().find_witness(&constraint)?;
    let q = p.with_pair(a.clone(), image.clone())?;
    let trace = ExtensionTrace {
        case,
        element: a.clone(),
        image,
        constraint,
        neighbors,
    };
    Ok((q, trace))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub direction: Direction,
    /// For backward steps the trace describes the extension of the inverse.
    pub trace: ExtensionTrace,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenericRun {
    pub condition: Condition,
    pub steps: Vec<StepRecord>,
}

struct Cover<'a> {
    stream: crate::structures::ElementStream<'a>,
    seen: Vec<Element>,
    next: usize,
}

impl<'a> Cover<'a> {
    fn new(spec: &'a SubstructureSpec) -> Self {
        Cover {
            stream: spec.elements(),
            seen: Vec::new(),
            next: 0,
        }
    }

    /// Least enumerated element not in `covered`.
    fn least_uncovered(&mut self, covered: &BTreeSet<Element>) -> Option<Element> {
        loop {
            while self.seen.len() <= self.next {
                self.seen.push(self.stream.next()?);
            }
            if covered.contains(&self.seen[self.next]) {
                self.next += 1;
            } else {
                return Some(self.seen[self.next].clone());
            }
        }
    }
}

/// Runs `steps` alternating extensions from the empty condition: even steps
/// add the least uncovered source element to the domain, odd steps add the
/// least uncovered target element to the range (by extending the inverse).
pub fn generic_build(
    source: Arc<SubstructureSpec>,
    target: Arc<SubstructureSpec>,
    steps: usize,
) -> Result<GenericRun, DensityError> {
    if source.mode != target.mode {
        return Err(DensityError::Precondition(
            "source and target modes differ".into(),
        ));
    }
    for (side, spec) in [("source", &source), ("target", &target)] {
        if !spec.is_amenable(AMENABILITY_DEPTH)?.verdict {
            return Err(DensityError::Precondition(format!(
                "{side} structure is not amenable"
            )));
        }
    }
    let mut p = Condition::empty(source.clone(), target.clone());
    let mut domain: BTreeSet<Element> = BTreeSet::new();
    let mut range: BTreeSet<Element> = BTreeSet::new();
    let mut forward = Cover::new(&source);
    let mut backward = Cover::new(&target);
    let mut records = Vec::with_capacity(steps);
    for step in 0..steps {
        if step % 2 == 0 {
            let a = forward
                .least_uncovered(&domain)
                .ok_or_else(|| DensityError::Precondition("source enumeration exhausted".into()))?;
            let (q, trace) = extend(&p, &a)?;
            range.insert(trace.image.clone());
            domain.insert(a);
            p = q;
            records.push(StepRecord {
                step,
                direction: Direction::Forward,
                trace,
            });
        } else {
            let b = backward
                .least_uncovered(&range)
                .ok_or_else(|| DensityError::Precondition("target enumeration exhausted".into()))?;
            let (q, trace) = extend(&p.invert(), &b)?;
            domain.insert(trace.image.clone());
            range.insert(b);
            p = q.invert();
            records.push(StepRecord {
                step,
                direction: Direction::Backward,
                trace,
            });
        }
    }
    Ok(GenericRun {
        condition: p,
        steps: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{BranchFamily, BranchRule};

    fn qspec() -> Arc<SubstructureSpec> {
        Arc::new(SubstructureSpec::full(
            Mode::Qtree,
            BranchFamily::rule(BranchRule::new(
                2,
                [Coord::zero(), Coord::one(), Coord::int(2)],
            )),
        ))
    }

    fn fspec() -> Arc<SubstructureSpec> {
        Arc::new(SubstructureSpec::full(
            Mode::Fer,
            BranchFamily::rule(BranchRule::new(2, [Coord::zero(), Coord::one()])),
        ))
    }

    fn q(s: &str) -> Element {
        Element::parse(Mode::Qtree, s).unwrap()
    }

    fn f(s: &str) -> Element {
        Element::parse(Mode::Fer, s).unwrap()
    }

    fn cond(spec: &Arc<SubstructureSpec>, pairs: Vec<(Element, Element)>) -> Condition {
        Condition::new(spec.clone(), spec.clone(), pairs).unwrap()
    }

    #[test]
    fn empty_domain_maps_to_base_witness() {
        let s = qspec();
        let a = q("eta=[1|0] odd={0:2}");
        let (p, t) = extend(&Condition::empty(s.clone(), s.clone()), &a).unwrap();
        assert_eq!(t.case, CaseTag::EmptyDomain);
        assert_eq!(p.pairs(), &[(a, q("eta=[1|0] odd={}"))]);
        assert!(t.replays(&s));
    }

    #[test]
    fn case1_odd_takes_the_midpoint() {
        let s = qspec();
        let p = cond(
            &s,
            vec![
                (q("eta=[|0] odd={}"), q("eta=[|0] odd={}")),
                (q("eta=[|0] odd={0:2}"), q("eta=[|0] odd={0:1}")),
            ],
        );
        let a = q("eta=[|0] odd={0:1}");
        let (r, t) = extend(&p, &a).unwrap();
        assert_eq!(t.case, CaseTag::Case1Odd);
        assert_eq!(t.neighbors, vec![0, 1]);
        assert_eq!(t.image, q("eta=[|0] odd={0:1/2}"));
        assert_eq!(t.image.value(1), Coord::ratio(1, 2));
        assert!(r.is_valid());
        assert!(t.replays(&s));
    }

    #[test]
    fn case1_even_copies_the_branch_value() {
        let s = qspec();
        let p = cond(
            &s,
            vec![
                (q("eta=[|0] odd={}"), q("eta=[|0] odd={}")),
                (q("eta=[|2] odd={}"), q("eta=[|2] odd={0:1}")),
            ],
        );
        let a = q("eta=[|1] odd={0:1}");
        let (r, t) = extend(&p, &a).unwrap();
        assert_eq!(t.case, CaseTag::Case1Even);
        // Meet at 0 with both neighbours: image prefix is ⟨σ(0)⟩.
        assert_eq!(t.constraint.word, PrefixWord(vec![Coord::one()]));
        assert_eq!(t.image.value(0), a.value(0));
        assert!(r.is_valid());
    }

    #[test]
    fn case2_and_endpoints() {
        let s = qspec();
        let p = cond(
            &s,
            vec![
                (q("eta=[|0] odd={0:1}"), q("eta=[|0] odd={0:3}")),
                (q("eta=[|1] odd={}"), q("eta=[|1] odd={}")),
            ],
        );
        let (r, t) = extend(&p, &q("eta=[|0] odd={0:2}")).unwrap();
        assert_eq!(t.case, CaseTag::Case2);
        assert_eq!(t.constraint.value, Coord::int(4));
        assert!(r.is_valid());

        let (r, t) = extend(&p, &q("eta=[|0] odd={}")).unwrap();
        assert_eq!(t.case, CaseTag::EndpointLow);
        assert_eq!(t.constraint.value, Coord::int(2));
        assert!(r.is_valid());

        let (r, t) = extend(&p, &q("eta=[|2] odd={}")).unwrap();
        assert_eq!(t.case, CaseTag::EndpointHigh);
        assert!(r.is_valid());
    }

    #[test]
    fn fer_flips_the_neighbour_bit() {
        let s = fspec();
        let a1 = f("eta=[|0] odd={}");
        let p = cond(&s, vec![(a1.clone(), f("eta=[|0] odd={0:1,1:1}"))]);
        let a = f("eta=[|0] odd={1:1}");
        assert_eq!(a.meet_length(&a1).unwrap(), 3);
        let (r, t) = extend(&p, &a).unwrap();
        assert_eq!(t.case, CaseTag::PrefixTarget);
        let mut expected = p.pairs()[0].1.prefix(3);
        expected.push(Coord::zero());
        assert_eq!(t.image.prefix(4), expected);
        assert_eq!(t.image.meet_length(&p.pairs()[0].1).unwrap(), 3);
        assert!(r.is_valid());
    }

    #[test]
    fn fer_extends_designated_points() {
        let s = fspec();
        let p = cond(&s, vec![(f("eta=[|0] odd={}"), f("eta=[|0] odd=ALL1"))]);
        let (r, t) = extend(&p, &f("eta=[|0] odd=ALL1")).unwrap();
        assert!(r.is_valid(), "{:?}", r.validate());
        assert_eq!(t.image.meet_length(&f("eta=[|0] odd=ALL1")).unwrap(), 1);
    }

    #[test]
    fn extend_rejects_bad_points() {
        let s = qspec();
        let a = q("eta=[|0] odd={}");
        let p = cond(&s, vec![(a.clone(), a.clone())]);
        assert!(matches!(extend(&p, &a), Err(DensityError::Precondition(_))));
        assert!(matches!(
            extend(&p, &q("eta=[5|0] odd={}")),
            Err(DensityError::Precondition(_))
        ));
    }

    #[test]
    fn generic_build_small_runs() {
        let s = qspec();
        let run = generic_build(s.clone(), s.clone(), 0).unwrap();
        assert!(run.condition.is_empty());

        let run = generic_build(s.clone(), s.clone(), 2).unwrap();
        let first = s.enumerate_elements(2).unwrap();
        assert_eq!(
            run.condition.pairs(),
            &[
                (first[0].clone(), first[0].clone()),
                (first[1].clone(), first[1].clone())
            ]
        );

        let a = Arc::new(s.without_designated());
        let run = generic_build(a.clone(), s.clone(), 40).unwrap();
        assert!(run.condition.is_valid());
        assert_eq!(run.condition.len(), 40);
        for w in run.steps.windows(1) {
            assert!(w[0].trace.replays(if w[0].direction == Direction::Forward {
                &s
            } else {
                &a
            }));
        }
    }
}
