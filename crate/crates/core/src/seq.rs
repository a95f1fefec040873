//! Finite representations of the infinite sequences that make up the tree
//! structures: exact coordinates, eventually-constant branches, odd-coordinate
//! patterns and the elements built from them.
//!
//! An element denotes the sequence `σ` with `σ(2n) = branch(n)` and
//! `σ(2n + 1) = odd(n)`. Both halves are eventually constant, so the whole
//! sequence is eventually periodic with period at most two and every relation
//! below (lexicographic order, meet length, equality) is decidable by a finite
//! scan.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ParseError, SeqError};

/// Which coordinate domain a session works in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rational coordinates; the tree `Q^ω` with lexicographic order.
    Qtree,
    /// Binary coordinates; `2^ω` with the refining equivalence relations.
    Fer,
}

impl Mode {
    pub fn admits(self, c: &Coord) -> bool {
        match self {
            Mode::Qtree => true,
            Mode::Fer => c.is_zero() || c.is_one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Qtree => "qtree",
            Mode::Fer => "fer",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qtree" => Ok(Mode::Qtree),
            "fer" => Ok(Mode::Fer),
            other => Err(format!("unknown mode `{other}` (expected qtree or fer)")),
        }
    }
}

/// An exact rational coordinate value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord(BigRational);

impl Coord {
    pub fn zero() -> Coord {
        Coord(BigRational::zero())
    }

    pub fn one() -> Coord {
        Coord(BigRational::one())
    }

    pub fn int(v: i64) -> Coord {
        Coord(BigRational::from_integer(BigInt::from(v)))
    }

    /// `num / den`, reduced. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Coord {
        Coord(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn midpoint(&self, other: &Coord) -> Coord {
        Coord((&self.0 + &other.0) / BigInt::from(2))
    }

    pub fn add_int(&self, v: i64) -> Coord {
        Coord(&self.0 + BigRational::from_integer(BigInt::from(v)))
    }

    /// `1 - self`; flips a bit.
    pub fn complement(&self) -> Coord {
        Coord(BigRational::one() - &self.0)
    }

    /// Height `|p| + q - 1` of the reduced fraction `p/q`: 0 for zero,
    /// 1 for ±1, 2 for ±2 and ±1/2, and so on.
    pub fn height(&self) -> u64 {
        let num = self.0.numer().abs().to_u64().unwrap_or(u64::MAX / 4);
        let den = self.0.denom().to_u64().unwrap_or(u64::MAX / 4);
        num + den - 1
    }

    /// All nonzero rationals of the given height, in increasing order.
    pub fn of_height(h: u64) -> Vec<Coord> {
        let mut out = Vec::new();
        if h == 0 {
            return out;
        }
        for den in 1..=h {
            let num = h + 1 - den;
            if num == 0 || num.gcd(&den) != 1 {
                continue;
            }
            out.push(Coord::ratio(num as i64, den as i64));
            out.push(Coord::ratio(-(num as i64), den as i64));
        }
        out.sort();
        out
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Coord {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Cursor::new(s);
        let c = p.coord()?;
        p.end()?;
        Ok(c)
    }
}

impl Serialize for Coord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The even-coordinate sequence `η`: a finite prefix followed by a constant tail.
///
/// Always held in canonical form: the prefix never ends with the tail value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchSpec {
    prefix: Vec<Coord>,
    tail: Coord,
}

impl BranchSpec {
    pub fn new(mut prefix: Vec<Coord>, tail: Coord) -> BranchSpec {
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        BranchSpec { prefix, tail }
    }

    pub fn constant(tail: Coord) -> BranchSpec {
        BranchSpec {
            prefix: Vec::new(),
            tail,
        }
    }

    pub fn prefix(&self) -> &[Coord] {
        &self.prefix
    }

    pub fn tail(&self) -> &Coord {
        &self.tail
    }

    pub fn value(&self, n: usize) -> &Coord {
        self.prefix.get(n).unwrap_or(&self.tail)
    }

    pub fn coords(&self) -> impl Iterator<Item = &Coord> {
        self.prefix.iter().chain(std::iter::once(&self.tail))
    }

    fn check_mode(&self, mode: Mode) -> Result<(), SeqError> {
        match self.coords().find(|c| !mode.admits(c)) {
            Some(c) => Err(SeqError::OutOfDomain {
                value: c.to_string(),
                mode,
            }),
            None => Ok(()),
        }
    }

    /// `[p0,p1|t]`
    pub fn literal(&self) -> String {
        let body = self
            .prefix
            .iter()
            .map(Coord::to_string)
            .collect::<Vec<_>>()
            .join(",");
        format!("[{}|{}]", body, self.tail)
    }
}

impl fmt::Display for BranchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eta={}", self.literal())
    }
}

impl fmt::Debug for BranchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for BranchSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Cursor::new(s);
        let b = p.branch()?;
        p.end()?;
        Ok(b)
    }
}

/// The odd-coordinate sequence: finitely many nonzero entries, or the
/// constant-1 pattern of the designated element (binary mode only).
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OddPattern {
    support: BTreeMap<usize, Coord>,
    all_ones: bool,
}

impl OddPattern {
    pub fn empty() -> OddPattern {
        OddPattern::default()
    }

    pub fn all_ones() -> OddPattern {
        OddPattern {
            support: BTreeMap::new(),
            all_ones: true,
        }
    }

    /// Builds a finitely supported pattern, dropping zero entries.
    pub fn from_entries<I: IntoIterator<Item = (usize, Coord)>>(entries: I) -> OddPattern {
        let support = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        OddPattern {
            support,
            all_ones: false,
        }
    }

    pub fn support(&self) -> &BTreeMap<usize, Coord> {
        &self.support
    }

    pub fn is_all_ones(&self) -> bool {
        self.all_ones
    }

    pub fn value(&self, n: usize) -> Coord {
        if self.all_ones {
            return Coord::one();
        }
        self.support.get(&n).cloned().unwrap_or_else(Coord::zero)
    }

    /// The value the pattern is eventually constant at.
    pub fn eventual(&self) -> Coord {
        if self.all_ones {
            Coord::one()
        } else {
            Coord::zero()
        }
    }

    /// One past the largest index whose value differs from the eventual value.
    pub fn settled_from(&self) -> usize {
        self.support.keys().next_back().map_or(0, |n| n + 1)
    }

    pub fn with(&self, n: usize, v: Coord) -> OddPattern {
        let mut out = self.clone();
        if v.is_zero() {
            out.support.remove(&n);
        } else {
            out.support.insert(n, v);
        }
        out
    }

    fn check_mode(&self, mode: Mode) -> Result<(), SeqError> {
        if self.all_ones && mode != Mode::Fer {
            return Err(SeqError::DesignatedOutsideFer);
        }
        match self.support.values().find(|c| !mode.admits(c)) {
            Some(c) => Err(SeqError::OutOfDomain {
                value: c.to_string(),
                mode,
            }),
            None => Ok(()),
        }
    }

    pub fn literal(&self) -> String {
        if self.all_ones {
            return "ALL1".to_string();
        }
        let body = self
            .support
            .iter()
            .map(|(n, v)| format!("{n}:{v}"))
            .collect::<Vec<_>>()
            .join(",");
        format!("{{{body}}}")
    }
}

impl fmt::Debug for OddPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

/// A point of the tree structure.
///
/// `Ord` is the lexicographic order of the denoted sequences (elements of
/// different modes are ordered by mode first, which never happens inside a
/// session).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Element {
    mode: Mode,
    branch: BranchSpec,
    odd: OddPattern,
}

/// Result of a lexicographic comparison together with the first index at
/// which the two sequences differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub ordering: Ordering,
    pub first_difference: Option<usize>,
}

impl Element {
    pub fn new(mode: Mode, branch: BranchSpec, odd: OddPattern) -> Result<Element, SeqError> {
        branch.check_mode(mode)?;
        odd.check_mode(mode)?;
        Ok(Element { mode, branch, odd })
    }

    /// The all-zero odd pattern on `branch`.
    pub fn base(mode: Mode, branch: BranchSpec) -> Result<Element, SeqError> {
        Element::new(mode, branch, OddPattern::empty())
    }

    /// The designated element `b_η` of a binary branch.
    pub fn designated(branch: BranchSpec) -> Result<Element, SeqError> {
        Element::new(Mode::Fer, branch, OddPattern::all_ones())
    }

    pub fn parse(mode: Mode, s: &str) -> Result<Element, ParseError> {
        let mut p = Cursor::new(s);
        let (branch, odd) = p.element()?;
        p.end()?;
        Element::new(mode, branch, odd).map_err(|e| ParseError::new(0, e.to_string()))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn branch(&self) -> &BranchSpec {
        &self.branch
    }

    pub fn odd(&self) -> &OddPattern {
        &self.odd
    }

    pub fn is_designated(&self) -> bool {
        self.odd.all_ones
    }

    /// `σ(i)`.
    pub fn value(&self, i: usize) -> Coord {
        if i.is_multiple_of(2) {
            self.branch.value(i / 2).clone()
        } else {
            self.odd.value(i / 2)
        }
    }

    /// Every index at or beyond this bound lies in the periodic part of the
    /// sequence, so two sequences equal up to a common bound are equal.
    fn periodic_from(&self) -> usize {
        2 * self.branch.prefix.len().max(self.odd.settled_from())
    }

    pub fn compare(&self, other: &Element) -> Result<Comparison, SeqError> {
        if self.mode != other.mode {
            return Err(SeqError::ModeMismatch(self.mode, other.mode));
        }
        Ok(self.compare_same_mode(other))
    }

    fn compare_same_mode(&self, other: &Element) -> Comparison {
        let limit = self.periodic_from().max(other.periodic_from()) + 2;
        for t in 0..limit {
            let ord = if t % 2 == 0 {
                self.branch.value(t / 2).cmp(other.branch.value(t / 2))
            } else {
                cmp_odd(&self.odd, &other.odd, t / 2)
            };
            if ord != Ordering::Equal {
                return Comparison {
                    ordering: ord,
                    first_difference: Some(t),
                };
            }
        }
        Comparison {
            ordering: Ordering::Equal,
            first_difference: None,
        }
    }

    /// Length of the longest common initial segment `|x ∧ y|`.
    pub fn meet_length(&self, other: &Element) -> Result<usize, SeqError> {
        self.compare(other)?
            .first_difference
            .ok_or(SeqError::EqualElements)
    }

    pub fn prefix(&self, n: usize) -> PrefixWord {
        PrefixWord((0..n).map(|i| self.value(i)).collect())
    }

    pub fn literal(&self) -> String {
        format!("eta={} odd={}", self.branch.literal(), self.odd.literal())
    }
}

fn cmp_odd(a: &OddPattern, b: &OddPattern, n: usize) -> Ordering {
    match (a.all_ones, b.all_ones) {
        (false, false) => {
            let zero = Coord::zero();
            a.support
                .get(&n)
                .unwrap_or(&zero)
                .cmp(b.support.get(&n).unwrap_or(&zero))
        }
        _ => a.value(n).cmp(&b.value(n)),
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mode
            .cmp(&other.mode)
            .then_with(|| self.compare_same_mode(other).ordering)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

/// A finite word of coordinates, e.g. a restriction `a|k`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrefixWord(pub Vec<Coord>);

impl PrefixWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Coord] {
        &self.0
    }

    pub fn push(&mut self, c: Coord) {
        self.0.push(c);
    }

    pub fn concat(&self, c: Coord) -> PrefixWord {
        let mut out = self.clone();
        out.0.push(c);
        out
    }

    pub fn is_prefix_of(&self, other: &PrefixWord) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn literal(&self) -> String {
        let body = self
            .0
            .iter()
            .map(Coord::to_string)
            .collect::<Vec<_>>()
            .join(",");
        format!("[{body}]")
    }
}

impl fmt::Display for PrefixWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

impl fmt::Debug for PrefixWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

impl FromStr for PrefixWord {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Cursor::new(s);
        let w = p.word()?;
        p.end()?;
        Ok(w)
    }
}

/// Small recursive-descent reader shared by all literal grammars.
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.pos + 1, msg)
    }

    pub(crate) fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub(crate) fn end(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected trailing input `{}`", self.rest())))
        }
    }

    pub(crate) fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn digits(&mut self) -> Option<&'a str> {
        let start = self.pos;
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        self.pos += len;
        (len > 0).then(|| &self.src[start..start + len])
    }

    pub(crate) fn index(&mut self) -> Result<usize, ParseError> {
        let at = self.pos;
        let d = self.digits().ok_or_else(|| self.err("expected an index"))?;
        d.parse()
            .map_err(|_| ParseError::new(at + 1, "index out of range"))
    }

    pub(crate) fn coord(&mut self) -> Result<Coord, ParseError> {
        let at = self.pos;
        let neg = self.eat("-");
        let num = self
            .digits()
            .ok_or_else(|| self.err("expected a coordinate"))?;
        let mut num: BigInt = num
            .parse()
            .map_err(|_| ParseError::new(at + 1, "bad integer"))?;
        if neg {
            num = -num;
        }
        let den: BigInt = if self.eat("/") {
            let d = self
                .digits()
                .ok_or_else(|| self.err("expected a positive denominator"))?;
            d.parse()
                .map_err(|_| ParseError::new(at + 1, "bad denominator"))?
        } else {
            BigInt::one()
        };
        if den.is_zero() {
            return Err(ParseError::new(at + 1, "denominator must be positive"));
        }
        Ok(Coord(BigRational::new(num, den)))
    }

    fn coord_list(&mut self, stop: char) -> Result<Vec<Coord>, ParseError> {
        let mut out = Vec::new();
        if self.rest().starts_with(stop) {
            return Ok(out);
        }
        loop {
            out.push(self.coord()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    /// `[c,c|c]`, with or without the leading `eta=`.
    pub(crate) fn branch(&mut self) -> Result<BranchSpec, ParseError> {
        self.skip_ws();
        self.eat("eta=");
        self.expect("[")?;
        let prefix = self.coord_list('|')?;
        self.expect("|")?;
        let tail = self.coord()?;
        self.expect("]")?;
        Ok(BranchSpec::new(prefix, tail))
    }

    pub(crate) fn odd(&mut self) -> Result<OddPattern, ParseError> {
        if self.eat("ALL1") {
            return Ok(OddPattern::all_ones());
        }
        self.expect("{")?;
        let mut support = BTreeMap::new();
        if !self.eat("}") {
            loop {
                let at = self.pos;
                let n = self.index()?;
                self.expect(":")?;
                let v = self.coord()?;
                if v.is_zero() {
                    return Err(ParseError::new(
                        at + 1,
                        "odd support values must be nonzero",
                    ));
                }
                if support.insert(n, v).is_some() {
                    return Err(ParseError::new(at + 1, format!("duplicate odd index {n}")));
                }
                if self.eat("}") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(OddPattern {
            support,
            all_ones: false,
        })
    }

    pub(crate) fn element(&mut self) -> Result<(BranchSpec, OddPattern), ParseError> {
        self.skip_ws();
        self.expect("eta=")?;
        let branch = self.branch()?;
        if !self.eat(" odd=") {
            return Err(ParseError::new(self.pos + 1, "expected ` odd=`"));
        }
        let odd = self.odd()?;
        Ok((branch, odd))
    }

    pub(crate) fn word(&mut self) -> Result<PrefixWord, ParseError> {
        self.skip_ws();
        self.expect("[")?;
        let values = self.coord_list(']')?;
        self.expect("]")?;
        Ok(PrefixWord(values))
    }

    pub(crate) fn element_in(&mut self, mode: Mode) -> Result<Element, ParseError> {
        let start = self.pos;
        let (branch, odd) = self.element()?;
        Element::new(mode, branch, odd).map_err(|e| ParseError::new(start + 1, e.to_string()))
    }
}
