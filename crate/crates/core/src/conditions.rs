//! Forcing conditions: finite partial maps between two substructures.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ConditionError, ParseError};
use crate::seq::{Cursor, Element};
use crate::structures::SubstructureSpec;

/// A finite partial map from `source` to `target`, kept sorted by the
/// lexicographic order of its domain.
///
/// Construction checks membership and injectivity. Whether the map is a
/// partial isomorphism is a separate question answered by
/// [`Condition::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    source: Arc<SubstructureSpec>,
    target: Arc<SubstructureSpec>,
    pairs: Vec<(Element, Element)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `a` and its image lie on different branches.
    Branch {
        index: usize,
        domain: String,
        image: String,
    },
    /// `a_i < a_j` but not `b_i < b_j` (rational mode only).
    Order {
        i: usize,
        j: usize,
        domain_position: usize,
        image_position: usize,
    },
    /// `|a_i ∧ a_j| ≠ |b_i ∧ b_j|`.
    Meet {
        i: usize,
        j: usize,
        domain_meet: usize,
        image_meet: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
}

/// Serialises as the list of pairs, each as two element literals.
impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.pairs.iter().map(|(a, b)| [a.literal(), b.literal()]))
    }
}

impl Condition {
    pub fn empty(source: Arc<SubstructureSpec>, target: Arc<SubstructureSpec>) -> Condition {
        Condition {
            source,
            target,
            pairs: Vec::new(),
        }
    }

    pub fn new(
        source: Arc<SubstructureSpec>,
        target: Arc<SubstructureSpec>,
        pairs: Vec<(Element, Element)>,
    ) -> Result<Condition, ConditionError> {
        if source.mode != target.mode {
            return Err(crate::error::SeqError::ModeMismatch(source.mode, target.mode).into());
        }
        for (a, b) in &pairs {
            if !source.contains(a)? {
                return Err(ConditionError::NotMember {
                    side: "domain",
                    element: a.literal(),
                });
            }
            if !target.contains(b)? {
                return Err(ConditionError::NotMember {
                    side: "image",
                    element: b.literal(),
                });
            }
        }
        Self::from_members(source, target, pairs)
    }

    /// Like [`Condition::new`] but trusts that every element is a member.
    pub(crate) fn from_members(
        source: Arc<SubstructureSpec>,
        target: Arc<SubstructureSpec>,
        mut pairs: Vec<(Element, Element)>,
    ) -> Result<Condition, ConditionError> {
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ConditionError::Duplicate {
                    side: "domain",
                    element: w[0].0.literal(),
                });
            }
        }
        let mut images: Vec<&Element> = pairs.iter().map(|p| &p.1).collect();
        images.sort();
        for w in images.windows(2) {
            if w[0] == w[1] {
                return Err(ConditionError::Duplicate {
                    side: "image",
                    element: w[0].literal(),
                });
            }
        }
        Ok(Condition {
            source,
            target,
            pairs,
        })
    }

    pub fn source(&self) -> &Arc<SubstructureSpec> {
        &self.source
    }

    pub fn target(&self) -> &Arc<SubstructureSpec> {
        &self.target
    }

    pub fn pairs(&self) -> &[(Element, Element)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Element> {
        self.pairs.iter().map(|p| &p.0)
    }

    pub fn range(&self) -> impl Iterator<Item = &Element> {
        self.pairs.iter().map(|p| &p.1)
    }

    /// Position of `a` in the sorted domain.
    pub fn position(&self, a: &Element) -> Option<usize> {
        self.pairs.binary_search_by(|p| p.0.cmp(a)).ok()
    }

    pub fn image_of(&self, a: &Element) -> Option<&Element> {
        self.position(a).map(|i| &self.pairs[i].1)
    }

    pub fn same_structures(&self, other: &Condition) -> bool {
        (Arc::ptr_eq(&self.source, &other.source) || self.source == other.source)
            && (Arc::ptr_eq(&self.target, &other.target) || self.target == other.target)
    }

    /// `p ⊆ q` as sets of pairs.
    pub fn is_subset_of(&self, other: &Condition) -> bool {
        self.pairs.iter().all(|(a, b)| other.image_of(a) == Some(b))
    }

    /// The sub-condition on the given positions of the sorted domain.
    pub fn restrict(&self, positions: &[usize]) -> Condition {
        let pairs = positions.iter().map(|&i| self.pairs[i].clone()).collect();
        Condition::from_members(self.source.clone(), self.target.clone(), pairs)
            .expect("restriction of an injective map is injective")
    }

    /// Checks that the map preserves the full atomic diagram: branches, meet
    /// lengths, and (in rational mode) the lexicographic order. Reports the
    /// first violation found, scanning branch checks first and then pairs
    /// `(i, j)` with `i < j`.
    pub fn validate(&self) -> Validation {
        for (index, (a, b)) in self.pairs.iter().enumerate() {
            if a.branch() != b.branch() {
                return Validation {
                    valid: false,
                    violation: Some(Violation::Branch {
                        index,
                        domain: a.literal(),
                        image: b.literal(),
                    }),
                };
            }
        }
        let ordered = self.source.mode == crate::seq::Mode::Qtree;
        for i in 0..self.pairs.len() {
            for j in i + 1..self.pairs.len() {
                let (ai, bi) = &self.pairs[i];
                let (aj, bj) = &self.pairs[j];
                let dc = ai.compare(aj).expect("same mode");
                let ic = bi.compare(bj).expect("same mode");
                let dm = dc.first_difference.expect("distinct domain elements");
                let im = ic.first_difference.expect("distinct images");
                if dm != im {
                    return Validation {
                        valid: false,
                        violation: Some(Violation::Meet {
                            i,
                            j,
                            domain_meet: dm,
                            image_meet: im,
                        }),
                    };
                }
                if ordered && dc.ordering != ic.ordering {
                    return Validation {
                        valid: false,
                        violation: Some(Violation::Order {
                            i,
                            j,
                            domain_position: dm,
                            image_position: im,
                        }),
                    };
                }
            }
        }
        Validation {
            valid: true,
            violation: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }

    /// Swaps source and target and every pair.
    pub fn invert(&self) -> Condition {
        let pairs = self
            .pairs
            .iter()
            .map(|(a, b)| (b.clone(), a.clone()))
            .collect();
        Condition::from_members(self.target.clone(), self.source.clone(), pairs)
            .expect("inverse of an injective map is injective")
    }

    /// `p ∪ q` as a set of pairs, without validation. Fails when some point
    /// would be mapped two ways or some image hit twice.
    pub fn union_raw(&self, other: &Condition) -> Result<Condition, ConditionError> {
        if !self.same_structures(other) {
            return Err(ConditionError::SpecMismatch);
        }
        let mut forward: BTreeMap<&Element, &Element> = BTreeMap::new();
        let mut backward: BTreeMap<&Element, &Element> = BTreeMap::new();
        for (a, b) in self.pairs.iter().chain(other.pairs.iter()) {
            if let Some(prev) = forward.insert(a, b) {
                if prev != b {
                    return Err(ConditionError::Clash(format!(
                        "{a} is mapped to both {prev} and {b}"
                    )));
                }
            }
            if let Some(prev) = backward.insert(b, a) {
                if prev != a {
                    return Err(ConditionError::Clash(format!(
                        "{b} is the image of both {prev} and {a}"
                    )));
                }
            }
        }
        let pairs = forward
            .into_iter()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        Condition::from_members(self.source.clone(), self.target.clone(), pairs)
    }

    /// Adds one pair; the caller has checked membership.
    pub(crate) fn with_pair(&self, a: Element, b: Element) -> Result<Condition, ConditionError> {
        let mut pairs = self.pairs.clone();
        pairs.push((a, b));
        Condition::from_members(self.source.clone(), self.target.clone(), pairs)
    }

    /// `source: …`/`target: …` header lines followed by one `pair:` line per
    /// pair, accepted by [`Condition::parse`].
    pub fn to_text(&self, source_ref: &str, target_ref: &str) -> String {
        let mut out = format!("source: {source_ref}\ntarget: {target_ref}\n");
        for (a, b) in &self.pairs {
            out.push_str(&format!("pair: {a} -> {b}\n"));
        }
        out
    }

    /// Parses a condition file, resolving the `source:`/`target:` references
    /// with `load`.
    pub fn parse<F>(text: &str, mut load: F) -> Result<Condition, ParseError>
    where
        F: FnMut(&str) -> Result<SubstructureSpec, String>,
    {
        let mut source: Option<Arc<SubstructureSpec>> = None;
        let mut target: Option<Arc<SubstructureSpec>> = None;
        let mut pairs = Vec::new();
        let mut last_line = 1;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let err = |col: usize, m: String| ParseError {
                line,
                column: indent + col,
                message: m,
            };
            if let Some(r) = trimmed.strip_prefix("source:") {
                source = Some(Arc::new(load(r.trim()).map_err(|m| err(8, m))?));
            } else if let Some(r) = trimmed.strip_prefix("target:") {
                target = Some(Arc::new(load(r.trim()).map_err(|m| err(8, m))?));
            } else if let Some(r) = trimmed.strip_prefix("pair:") {
                let (Some(s), Some(t)) = (&source, &target) else {
                    return Err(err(1, "`source:` and `target:` must precede pairs".into()));
                };
                let offset = indent + (trimmed.len() - r.len());
                let mut p = Cursor::new(r);
                let wrap = |e: ParseError| e.at_line(line, offset);
                let a = p.element_in(s.mode).map_err(wrap)?;
                p.skip_ws();
                p.expect("->").map_err(wrap)?;
                let b = p.element_in(t.mode).map_err(wrap)?;
                p.end().map_err(wrap)?;
                pairs.push((a, b));
            } else {
                return Err(err(1, format!("unrecognised line `{trimmed}`")));
            }
        }
        let (Some(s), Some(t)) = (source, target) else {
            return Err(ParseError {
                line: last_line,
                column: 1,
                message: "missing `source:` or `target:`".into(),
            });
        };
        Condition::new(s, t, pairs).map_err(|e| ParseError {
            line: 0,
            column: 0,
            message: e.to_string(),
        })
    }
}
