//! Substructures of the full tree structure: which branches are present, which
//! points are removed, membership, amenability and witness search.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{ParseError, SeqError, StructureError};
use crate::seq::{BranchSpec, Coord, Cursor, Element, Mode, OddPattern, PrefixWord};

/// Upper bound on candidates examined by a single witness search.
pub const WITNESS_BUDGET: usize = 200_000;

/// "Every eventually-constant branch with prefix length at most `max_prefix`
/// over `coords`", optionally with tails restricted to `tails`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BranchRule {
    pub max_prefix: usize,
    pub coords: BTreeSet<Coord>,
    pub tails: Option<BTreeSet<Coord>>,
}

impl BranchRule {
    pub fn new(max_prefix: usize, coords: impl IntoIterator<Item = Coord>) -> Self {
        BranchRule {
            max_prefix,
            coords: coords.into_iter().collect(),
            tails: None,
        }
    }

    pub fn with_tails(mut self, tails: impl IntoIterator<Item = Coord>) -> Self {
        self.tails = Some(tails.into_iter().collect());
        self
    }

    fn tails(&self) -> &BTreeSet<Coord> {
        self.tails.as_ref().unwrap_or(&self.coords)
    }

    pub fn matches(&self, b: &BranchSpec) -> bool {
        b.prefix().len() <= self.max_prefix
            && b.prefix().iter().all(|c| self.coords.contains(c))
            && self.tails().contains(b.tail())
    }

    pub fn branches(&self) -> Vec<BranchSpec> {
        let mut out = Vec::new();
        for tail in self.tails() {
            for len in 0..=self.max_prefix {
                let words = (0..len)
                    .map(|_| self.coords.iter().cloned())
                    .multi_cartesian_product();
                let words: Box<dyn Iterator<Item = Vec<Coord>>> = if len == 0 {
                    Box::new(std::iter::once(Vec::new()))
                } else {
                    Box::new(words)
                };
                for w in words {
                    if w.last() != Some(tail) {
                        out.push(BranchSpec::new(w, tail.clone()));
                    }
                }
            }
        }
        out
    }

    fn line(&self) -> String {
        let set = |s: &BTreeSet<Coord>| s.iter().map(Coord::to_string).join(",");
        let mut line = format!(
            "rule: prefix<={} coords={{{}}}",
            self.max_prefix,
            set(&self.coords)
        );
        if let Some(t) = &self.tails {
            line.push_str(&format!(" tails={{{}}}", set(t)));
        }
        line
    }
}

/// The countable index set of branch predicates present in a substructure.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BranchFamily {
    pub explicit: BTreeSet<BranchSpec>,
    pub rules: Vec<BranchRule>,
}

impl BranchFamily {
    pub fn explicit(branches: impl IntoIterator<Item = BranchSpec>) -> Self {
        BranchFamily {
            explicit: branches.into_iter().collect(),
            rules: Vec::new(),
        }
    }

    pub fn rule(rule: BranchRule) -> Self {
        BranchFamily {
            explicit: BTreeSet::new(),
            rules: vec![rule],
        }
    }

    pub fn contains(&self, b: &BranchSpec) -> bool {
        self.explicit.contains(b) || self.rules.iter().any(|r| r.matches(b))
    }

    /// All branches, deduplicated, in canonical order.
    pub fn branches(&self) -> Vec<BranchSpec> {
        let mut all: BTreeSet<BranchSpec> = self.explicit.clone();
        for r in &self.rules {
            all.extend(r.branches());
        }
        all.into_iter().collect()
    }
}

/// Removes every element of `S_branch` whose prefix of length `|word| + 1`
/// is `word ⌢ value`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConeRule {
    pub branch: BranchSpec,
    pub word: PrefixWord,
    pub value: Coord,
}

impl ConeRule {
    pub fn target(&self) -> PrefixWord {
        self.word.concat(self.value.clone())
    }

    pub fn covers(&self, x: &Element) -> bool {
        x.branch() == &self.branch && x.prefix(self.word.len() + 1) == self.target()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RemovalRule {
    pub explicit: BTreeSet<Element>,
    pub cones: Vec<ConeRule>,
}

impl RemovalRule {
    pub fn removes(&self, x: &Element) -> bool {
        self.explicit.contains(x) || self.cones.iter().any(|c| c.covers(x))
    }
}

/// A substructure `A = (⋃_{η ∈ family} S_η) ∖ removals`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubstructureSpec {
    pub mode: Mode,
    pub family: BranchFamily,
    pub removals: RemovalRule,
}

/// A constraint `(η, s, r)`: find an element of `S_η` extending `s ⌢ r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct WitnessConstraint {
    #[serde(serialize_with = "ser_display")]
    pub branch: BranchSpec,
    pub word: PrefixWord,
    pub value: Coord,
}

pub(crate) fn ser_display<T: fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Amenable by rule: only finitely many explicit points are removed.
    Rule {
        reason: String,
    },
    /// No counterexample among constraints of length at most `depth`.
    Searched {
        depth: usize,
    },
    Counterexample(WitnessConstraint),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmenabilityReport {
    pub verdict: bool,
    pub certificate: Certificate,
}

/// The element removed from each branch when building `A = C ∖ {designated}`:
/// `b_η` in binary mode, the all-zero odd pattern in rational mode.
pub fn designated(mode: Mode, branch: &BranchSpec) -> Element {
    let odd = match mode {
        Mode::Fer => OddPattern::all_ones(),
        Mode::Qtree => OddPattern::empty(),
    };
    Element::new(mode, branch.clone(), odd).expect("family branches are in the mode domain")
}

impl SubstructureSpec {
    /// The full structure over `family`.
    pub fn full(mode: Mode, family: BranchFamily) -> Self {
        SubstructureSpec {
            mode,
            family,
            removals: RemovalRule::default(),
        }
    }

    /// This structure with one designated element removed from every branch
    /// of its (finite) family.
    pub fn without_designated(&self) -> Self {
        let mut out = self.clone();
        for b in self.family.branches() {
            out.removals.explicit.insert(designated(self.mode, &b));
        }
        out
    }

    pub fn contains(&self, x: &Element) -> Result<bool, SeqError> {
        if x.mode() != self.mode {
            return Err(SeqError::ModeMismatch(self.mode, x.mode()));
        }
        Ok(self.family.contains(x.branch()) && !self.removals.removes(x))
    }

    fn check_constraint(&self, c: &WitnessConstraint) -> Result<(), StructureError> {
        let pre = |m: String| Err(StructureError::Precondition(m));
        if c.word.len().is_multiple_of(2) {
            return pre(format!("constraint word {} must have odd length", c.word));
        }
        for (i, v) in c.word.values().iter().enumerate() {
            if !self.mode.admits(v) {
                return Err(SeqError::OutOfDomain {
                    value: v.to_string(),
                    mode: self.mode,
                }
                .into());
            }
            if i % 2 == 0 && v != c.branch.value(i / 2) {
                return pre(format!(
                    "word {} disagrees with {} at index {}",
                    c.word, c.branch, i
                ));
            }
        }
        if !self.mode.admits(&c.value) {
            return Err(SeqError::OutOfDomain {
                value: c.value.to_string(),
                mode: self.mode,
            }
            .into());
        }
        Ok(())
    }

    /// The least element of `A ∩ S_η` extending `s ⌢ r`.
    ///
    /// The word must have odd length, so position `|s|` is a free odd
    /// coordinate. Candidates keep the odd values fixed by `s ⌢ r` and add
    /// extra support entries after it, ordered by number of extra entries,
    /// then by their indices, then by value along the ladder `1, 2, 3, …`
    /// (`1` only in binary mode). In binary mode `b_η` is tried last.
    pub fn find_witness(&self, c: &WitnessConstraint) -> Result<Element, StructureError> {
        self.check_constraint(c)?;
        let no_witness = || StructureError::NoWitness {
            branch: c.branch.to_string(),
            word: c.word.to_string(),
            value: c.value.to_string(),
        };
        if !self.family.contains(&c.branch) {
            return Err(no_witness());
        }
        let target = c.word.concat(c.value.clone());
        let cones: Vec<&ConeRule> = self
            .removals
            .cones
            .iter()
            .filter(|r| r.branch == c.branch)
            .collect();
        if cones.iter().any(|r| r.target().is_prefix_of(&target)) {
            return Err(no_witness());
        }
        let removed: Vec<&Element> = self
            .removals
            .explicit
            .iter()
            .filter(|x| x.branch() == &c.branch)
            .collect();

        let slot = c.word.len() / 2;
        let base = OddPattern::from_entries(
            (0..slot)
                .map(|i| (i, c.word.values()[2 * i + 1].clone()))
                .chain(std::iter::once((slot, c.value.clone()))),
        );
        let cone_reach = cones
            .iter()
            .map(|r| r.target().len() / 2)
            .max()
            .unwrap_or(0);
        let removal_reach = removed
            .iter()
            .map(|x| x.odd().settled_from())
            .max()
            .unwrap_or(0);
        let last = (slot + 1).max(cone_reach).max(removal_reach);
        let free: Vec<usize> = (slot + 1..=last).collect();
        let ladder: Vec<Coord> = match self.mode {
            Mode::Fer => vec![Coord::one()],
            Mode::Qtree => (1..=(cones.len() + removed.len() + 1) as i64)
                .map(Coord::int)
                .collect(),
        };

        let mut examined = 0usize;
        for size in 0..=free.len() {
            for indices in free.iter().copied().combinations(size) {
                let assignments: Box<dyn Iterator<Item = Vec<Coord>>> = if size == 0 {
                    Box::new(std::iter::once(Vec::new()))
                } else {
                    Box::new(
                        (0..size)
                            .map(|_| ladder.iter().cloned())
                            .multi_cartesian_product(),
                    )
                };
                for values in assignments {
                    examined += 1;
                    if examined > WITNESS_BUDGET {
                        return Err(StructureError::WitnessBudget(WITNESS_BUDGET));
                    }
                    let mut odd = base.clone();
                    for (&i, v) in indices.iter().zip(values) {
                        odd = odd.with(i, v);
                    }
                    let x = Element::new(self.mode, c.branch.clone(), odd)?;
                    if !self.removals.removes(&x) {
                        return Ok(x);
                    }
                }
            }
        }
        if self.mode == Mode::Fer {
            let b = Element::designated(c.branch.clone())?;
            if b.prefix(target.len()) == target && !self.removals.removes(&b) {
                return Ok(b);
            }
        }
        Err(no_witness())
    }

    /// Every constraint on `branch` with word length at most `depth`, odd
    /// coordinates and free value drawn from `values`, in canonical order.
    pub fn constraints(
        branch: &BranchSpec,
        depth: usize,
        values: &[Coord],
    ) -> impl Iterator<Item = WitnessConstraint> {
        let branch = branch.clone();
        let values = values.to_vec();
        (1..=depth).step_by(2).flat_map(move |len| {
            let slots: Vec<Vec<Coord>> = (0..len)
                .map(|i| {
                    if i % 2 == 0 {
                        vec![branch.value(i / 2).clone()]
                    } else {
                        values.clone()
                    }
                })
                .collect();
            let branch = branch.clone();
            let values = values.clone();
            slots
                .into_iter()
                .multi_cartesian_product()
                .flat_map(move |w| {
                    let branch = branch.clone();
                    values.clone().into_iter().map(move |v| WitnessConstraint {
                        branch: branch.clone(),
                        word: PrefixWord(w.clone()),
                        value: v,
                    })
                })
        })
    }

    /// Runs `find_witness` on every constraint over every family branch up to
    /// `depth` and returns the first one with no witness.
    pub fn search_counterexample(
        &self,
        branches: &[BranchSpec],
        depth: usize,
        values: &[Coord],
    ) -> Result<Option<WitnessConstraint>, StructureError> {
        for b in branches {
            for c in Self::constraints(b, depth, values) {
                match self.find_witness(&c) {
                    Ok(_) => {}
                    Err(StructureError::NoWitness { .. }) => return Ok(Some(c)),
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(None)
    }

    /// Coordinate values worth probing: 0, 1 in binary mode, and every value
    /// named by a cone rule.
    pub fn probe_values(&self) -> Vec<Coord> {
        let mut vals: BTreeSet<Coord> = BTreeSet::new();
        vals.insert(Coord::zero());
        if self.mode == Mode::Fer {
            vals.insert(Coord::one());
        }
        for r in &self.removals.cones {
            vals.extend(r.word.values().iter().skip(1).step_by(2).cloned());
            vals.insert(r.value.clone());
        }
        vals.into_iter().collect()
    }

    /// Decides amenability relative to the branch family.
    ///
    /// With only explicit removals the answer is yes by rule: every prefix
    /// cone inside an `S_η` is infinite, so finitely many removed points
    /// cannot empty it. With cone rules, every constraint of length at most
    /// `depth` on an affected branch is searched.
    pub fn is_amenable(&self, depth: usize) -> Result<AmenabilityReport, StructureError> {
        if depth == 0 {
            return Err(StructureError::Precondition(
                "search depth must be at least 1".into(),
            ));
        }
        if self.removals.cones.is_empty() {
            return Ok(AmenabilityReport {
                verdict: true,
                certificate: Certificate::Rule {
                    reason: "explicit-finite-removals".into(),
                },
            });
        }
        let branches: Vec<BranchSpec> = self
            .removals
            .cones
            .iter()
            .map(|r| r.branch.clone())
            .filter(|b| self.family.contains(b))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let values = self.probe_values();
        // Order by word length first across all branches.
        for len in (1..=depth).step_by(2) {
            if let Some(c) = self.search_counterexample_at(&branches, len, &values)? {
                return Ok(AmenabilityReport {
                    verdict: false,
                    certificate: Certificate::Counterexample(c),
                });
            }
        }
        Ok(AmenabilityReport {
            verdict: true,
            certificate: Certificate::Searched { depth },
        })
    }

    fn search_counterexample_at(
        &self,
        branches: &[BranchSpec],
        len: usize,
        values: &[Coord],
    ) -> Result<Option<WitnessConstraint>, StructureError> {
        for b in branches {
            for c in Self::constraints(b, len, values).filter(|c| c.word.len() == len) {
                match self.find_witness(&c) {
                    Ok(_) => {}
                    Err(StructureError::NoWitness { .. }) => return Ok(Some(c)),
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(None)
    }

    /// Members in canonical order; see [`ElementStream`].
    pub fn elements(&self) -> ElementStream<'_> {
        ElementStream::new(self)
    }

    pub fn enumerate_elements(&self, count: usize) -> Result<Vec<Element>, StructureError> {
        let out: Vec<Element> = self.elements().take(count).collect();
        if out.len() < count {
            return Err(StructureError::FamilyExhausted {
                found: out.len(),
                wanted: count,
            });
        }
        Ok(out)
    }
}

/// Weight of a branch in the enumeration grading: prefix length plus the
/// heights of all its coordinates.
pub fn branch_weight(b: &BranchSpec) -> u64 {
    b.prefix().len() as u64 + b.coords().map(Coord::height).sum::<u64>()
}

/// Weight of an odd pattern: each support entry `n ↦ v` weighs
/// `1 + n + height(v)`; the all-ones pattern weighs 3.
pub fn odd_weight(o: &OddPattern) -> u64 {
    if o.is_all_ones() {
        return DESIGNATED_WEIGHT;
    }
    o.support()
        .iter()
        .map(|(n, v)| 1 + *n as u64 + v.height())
        .sum()
}

const DESIGNATED_WEIGHT: u64 = 3;
const MAX_GRADE: u64 = 4096;

/// Grade of an element in the canonical enumeration.
pub fn grade(x: &Element) -> u64 {
    branch_weight(x.branch()) + odd_weight(x.odd())
}

fn patterns_of_weight(mode: Mode, weight: u64) -> Vec<OddPattern> {
    fn rec(
        mode: Mode,
        start: u64,
        remaining: u64,
        cur: &mut Vec<(usize, Coord)>,
        out: &mut Vec<OddPattern>,
    ) {
        if remaining == 0 {
            out.push(OddPattern::from_entries(cur.iter().cloned()));
            return;
        }
        let mut idx = start;
        while 2 + idx <= remaining {
            let max_h = remaining - 1 - idx;
            let heights: Vec<u64> = match mode {
                Mode::Fer => vec![1],
                Mode::Qtree => (1..=max_h).collect(),
            };
            for h in heights {
                let vals = match mode {
                    Mode::Fer => vec![Coord::one()],
                    Mode::Qtree => Coord::of_height(h),
                };
                for v in vals {
                    cur.push((idx as usize, v));
                    rec(mode, idx + 1, remaining - (1 + idx + h), cur, out);
                    cur.pop();
                }
            }
            idx += 1;
        }
    }
    let mut out = Vec::new();
    rec(mode, 0, weight, &mut Vec::new(), &mut out);
    if mode == Mode::Fer && weight == DESIGNATED_WEIGHT {
        out.push(OddPattern::all_ones());
    }
    out
}

/// Lazily yields the members of a substructure graded by
/// `branch_weight + odd_weight`, ties broken by the element literal.
pub struct ElementStream<'a> {
    spec: &'a SubstructureSpec,
    branches: Vec<(BranchSpec, u64)>,
    grade: u64,
    buffer: VecDeque<Element>,
}

impl<'a> ElementStream<'a> {
    fn new(spec: &'a SubstructureSpec) -> Self {
        let branches = spec
            .family
            .branches()
            .into_iter()
            .map(|b| {
                let w = branch_weight(&b);
                (b, w)
            })
            .collect();
        ElementStream {
            spec,
            branches,
            grade: 0,
            buffer: VecDeque::new(),
        }
    }

    fn fill(&mut self) {
        while self.buffer.is_empty() && !self.branches.is_empty() && self.grade <= MAX_GRADE {
            let g = self.grade;
            self.grade += 1;
            let mut batch: Vec<(String, Element)> = Vec::new();
            for (b, w) in &self.branches {
                if *w > g {
                    continue;
                }
                for odd in patterns_of_weight(self.spec.mode, g - w) {
                    let x = Element::new(self.spec.mode, b.clone(), odd)
                        .expect("family branches are in the mode domain");
                    if !self.spec.removals.removes(&x) {
                        batch.push((x.literal(), x));
                    }
                }
            }
            batch.sort_by(|a, b| a.0.cmp(&b.0));
            self.buffer.extend(batch.into_iter().map(|(_, x)| x));
        }
    }
}

impl Iterator for ElementStream<'_> {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        self.fill();
        self.buffer.pop_front()
    }
}

// ---------------------------------------------------------------------------
// Spec files
//
//     mode: qtree
//     family:
//       eta=[3|0]
//       rule: prefix<=2 coords={0,1,2} tails={0}
//     remove:
//       eta=[|0] odd={}
//     removecone:
//       eta=[|0] word=[0] value=5
//
// `#` starts a comment. Section headers are `family:`, `remove:` and
// `removecone:`; entries follow on their own lines.

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Family,
    Remove,
    RemoveCone,
}

fn coord_set(p: &mut Cursor<'_>) -> Result<BTreeSet<Coord>, ParseError> {
    p.expect("{")?;
    let mut out = BTreeSet::new();
    if p.eat("}") {
        return Ok(out);
    }
    loop {
        out.insert(p.coord()?);
        if p.eat("}") {
            return Ok(out);
        }
        p.expect(",")?;
    }
}

fn parse_rule(p: &mut Cursor<'_>, mode: Mode) -> Result<BranchRule, ParseError> {
    p.expect("rule:")?;
    p.skip_ws();
    p.expect("prefix<=")?;
    let max_prefix = p.index()?;
    p.skip_ws();
    p.expect("coords=")?;
    let at = p.pos();
    let coords = coord_set(p)?;
    let mut rule = BranchRule {
        max_prefix,
        coords,
        tails: None,
    };
    p.skip_ws();
    if p.eat("tails=") {
        rule.tails = Some(coord_set(p)?);
    }
    p.end()?;
    let all = rule.coords.iter().chain(rule.tails.iter().flatten());
    if let Some(c) = all.clone().find(|c| !mode.admits(c)) {
        return Err(ParseError::new(
            at + 1,
            format!("coordinate {c} is outside the {mode} domain"),
        ));
    }
    if rule.tails().is_empty() {
        return Err(ParseError::new(
            at + 1,
            "rule needs at least one tail value",
        ));
    }
    Ok(rule)
}

fn parse_cone(p: &mut Cursor<'_>, mode: Mode) -> Result<ConeRule, ParseError> {
    let branch = p.branch()?;
    p.skip_ws();
    p.expect("word=")?;
    let at = p.pos();
    let word = p.word()?;
    p.skip_ws();
    p.expect("value=")?;
    let value = p.coord()?;
    p.end()?;
    let cone = ConeRule {
        branch,
        word,
        value,
    };
    let probe = SubstructureSpec::full(mode, BranchFamily::default());
    let c = WitnessConstraint {
        branch: cone.branch.clone(),
        word: cone.word.clone(),
        value: cone.value.clone(),
    };
    probe
        .check_constraint(&c)
        .map_err(|e| ParseError::new(at + 1, e.to_string()))?;
    Ok(cone)
}

impl SubstructureSpec {
    pub fn parse(text: &str) -> Result<SubstructureSpec, ParseError> {
        let mut mode = None;
        let mut section = Section::None;
        let mut family = BranchFamily::default();
        let mut removals = RemovalRule::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let wrap = |e: ParseError| e.at_line(line_no, indent);
            if let Some(m) = trimmed.strip_prefix("mode:") {
                let m: Mode = m.parse().map_err(|e: String| wrap(ParseError::new(6, e)))?;
                mode = Some(m);
                continue;
            }
            match trimmed {
                "family:" => {
                    section = Section::Family;
                    continue;
                }
                "remove:" => {
                    section = Section::Remove;
                    continue;
                }
                "removecone:" => {
                    section = Section::RemoveCone;
                    continue;
                }
                _ => {}
            }
            let mode = mode.ok_or_else(|| wrap(ParseError::new(1, "`mode:` must come first")))?;
            let mut p = Cursor::new(trimmed);
            match section {
                Section::None => {
                    return Err(wrap(ParseError::new(
                        1,
                        format!("entry outside a section: `{trimmed}`"),
                    )))
                }
                Section::Family => {
                    if trimmed.starts_with("rule:") {
                        family.rules.push(parse_rule(&mut p, mode).map_err(wrap)?);
                    } else {
                        let b = p.branch().and_then(|b| p.end().map(|_| b)).map_err(wrap)?;
                        if let Some(c) = b.coords().find(|c| !mode.admits(c)) {
                            return Err(wrap(ParseError::new(
                                1,
                                format!("coordinate {c} is outside the {mode} domain"),
                            )));
                        }
                        family.explicit.insert(b);
                    }
                }
                Section::Remove => {
                    let x = p
                        .element_in(mode)
                        .and_then(|x| p.end().map(|_| x))
                        .map_err(wrap)?;
                    removals.explicit.insert(x);
                }
                Section::RemoveCone => {
                    removals.cones.push(parse_cone(&mut p, mode).map_err(wrap)?);
                }
            }
        }
        let mode = mode.ok_or_else(|| ParseError {
            line: 1,
            column: 1,
            message: "missing `mode:`".into(),
        })?;
        Ok(SubstructureSpec {
            mode,
            family,
            removals,
        })
    }

    /// Canonical text form, accepted by [`SubstructureSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("mode: {}\nfamily:\n", self.mode);
        for b in &self.family.explicit {
            out.push_str(&format!("  {b}\n"));
        }
        for r in &self.family.rules {
            out.push_str(&format!("  {}\n", r.line()));
        }
        if !self.removals.explicit.is_empty() {
            out.push_str("remove:\n");
            for x in &self.removals.explicit {
                out.push_str(&format!("  {x}\n"));
            }
        }
        if !self.removals.cones.is_empty() {
            out.push_str("removecone:\n");
            for c in &self.removals.cones {
                out.push_str(&format!(
                    "  {} word={} value={}\n",
                    c.branch, c.word, c.value
                ));
            }
        }
        out
    }
}
