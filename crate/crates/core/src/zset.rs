//! Eventually periodic subsets of ℤ under the shift `n ↦ n + 1`.
//!
//! A set is stored as two periodic tails (one for `n < 0`, one for `n ≥ 0`)
//! plus a finite set of integers whose membership is flipped. This houses
//! every finite and cofinite set, the half lines, and periodic sets such as
//! the even numbers.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZSetError {
    #[error("empty period pattern")]
    EmptyPattern,
    #[error("pattern `{0}` must consist of 0 and 1")]
    BadPattern(String),
    #[error("not a commensurated set: its tails are not constant")]
    NotCommensurated,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZSubset {
    below: Vec<bool>,
    above: Vec<bool>,
    flips: BTreeSet<i64>,
}

fn primitive(pattern: &[bool]) -> Vec<bool> {
    let n = pattern.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (p..n).all(|i| pattern[i] == pattern[i - p]) {
            return pattern[..p].to_vec();
        }
    }
    pattern.to_vec()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn tail_at(pattern: &[bool], n: i64) -> bool {
    pattern[n.rem_euclid(pattern.len() as i64) as usize]
}

fn merge(a: &[bool], b: &[bool], f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    let l = a.len() / gcd(a.len(), b.len()) * b.len();
    (0..l).map(|i| f(a[i % a.len()], b[i % b.len()])).collect()
}

fn parse_bits(text: &str) -> Result<Vec<bool>, ZSetError> {
    if text.is_empty() {
        return Err(ZSetError::EmptyPattern);
    }
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(ZSetError::BadPattern(text.to_string())),
        })
        .collect()
}

fn bits(pattern: &[bool]) -> String {
    pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl ZSubset {
    /// `below[n mod p]` decides `n < 0`, `above[n mod q]` decides `n ≥ 0`,
    /// and every integer in `flips` has its membership toggled.
    pub fn new(below: Vec<bool>, above: Vec<bool>, flips: BTreeSet<i64>) -> Result<Self, ZSetError> {
        if below.is_empty() || above.is_empty() {
            return Err(ZSetError::EmptyPattern);
        }
        Ok(ZSubset { below: primitive(&below), above: primitive(&above), flips })
    }

    /// Parses the tail patterns as bit strings such as `0`, `1` or `10`.
    pub fn from_bits(below: &str, above: &str, flips: impl IntoIterator<Item = i64>) -> Result<Self, ZSetError> {
        ZSubset::new(parse_bits(below)?, parse_bits(above)?, flips.into_iter().collect())
    }

    pub fn empty() -> Self {
        ZSubset { below: vec![false], above: vec![false], flips: BTreeSet::new() }
    }

    pub fn all() -> Self {
        ZSubset { below: vec![true], above: vec![true], flips: BTreeSet::new() }
    }

    /// `ℕ = {0, 1, 2, ..}`.
    pub fn naturals() -> Self {
        ZSubset { below: vec![false], above: vec![true], flips: BTreeSet::new() }
    }

    pub fn nonpositive() -> Self {
        ZSubset { below: vec![true], above: vec![false], flips: BTreeSet::from([0]) }
    }

    pub fn finite(points: impl IntoIterator<Item = i64>) -> Self {
        ZSubset { below: vec![false], above: vec![false], flips: points.into_iter().collect() }
    }

    pub fn evens() -> Self {
        ZSubset { below: vec![true, false], above: vec![true, false], flips: BTreeSet::new() }
    }

    pub fn below_pattern(&self) -> &[bool] {
        &self.below
    }

    pub fn above_pattern(&self) -> &[bool] {
        &self.above
    }

    pub fn flips(&self) -> &BTreeSet<i64> {
        &self.flips
    }

    fn tail(&self, n: i64) -> bool {
        if n >= 0 {
            tail_at(&self.above, n)
        } else {
            tail_at(&self.below, n)
        }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.tail(n) ^ self.flips.contains(&n)
    }

    fn combine(&self, other: &ZSubset, f: impl Fn(bool, bool) -> bool + Copy) -> ZSubset {
        let below = merge(&self.below, &other.below, f);
        let above = merge(&self.above, &other.above, f);
        let mut out = ZSubset { below: primitive(&below), above: primitive(&above), flips: BTreeSet::new() };
        for &n in self.flips.union(&other.flips) {
            if f(self.contains(n), other.contains(n)) != out.tail(n) {
                out.flips.insert(n);
            }
        }
        out
    }

    pub fn union(&self, other: &ZSubset) -> ZSubset {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ZSubset) -> ZSubset {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &ZSubset) -> ZSubset {
        self.combine(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &ZSubset) -> ZSubset {
        self.combine(other, |a, b| a != b)
    }

    pub fn complement(&self) -> ZSubset {
        ZSubset {
            below: self.below.iter().map(|b| !b).collect(),
            above: self.above.iter().map(|b| !b).collect(),
            flips: self.flips.clone(),
        }
    }

    /// `X + k`.
    pub fn shift(&self, k: i64) -> ZSubset {
        let rotate = |p: &[bool]| -> Vec<bool> { (0..p.len() as i64).map(|r| tail_at(p, r - k)).collect() };
        let mut out = ZSubset { below: rotate(&self.below), above: rotate(&self.above), flips: BTreeSet::new() };
        let seam = k.min(0)..k.max(0);
        let candidates: BTreeSet<i64> = self.flips.iter().map(|n| n + k).chain(seam).collect();
        for n in candidates {
            if self.contains(n - k) != out.tail(n) {
                out.flips.insert(n);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.below.iter().all(|b| !b) && self.above.iter().all(|b| !b)
    }

    pub fn is_cofinite(&self) -> bool {
        self.below.iter().all(|&b| b) && self.above.iter().all(|&b| b)
    }

    pub fn is_empty(&self) -> bool {
        self.is_finite() && self.flips.is_empty()
    }

    /// Members of a finite set, in increasing order.
    pub fn finite_elements(&self) -> Option<Vec<i64>> {
        self.is_finite().then(|| self.flips.iter().copied().collect())
    }

    /// `X △ (X + 1)` finite, which for the shift is equivalent to
    /// commensuration: both tails are constant.
    pub fn is_commensurated(&self) -> bool {
        self.below.len() == 1 && self.above.len() == 1
    }

    /// Members in `lo..=hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).filter(|&n| self.contains(n)).collect()
    }

    /// Largest absolute value among flipped integers, or 0.
    pub fn radius(&self) -> i64 {
        self.flips.iter().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn to_symbolic(&self) -> Result<SymbolicZSet, ZSetError> {
        SymbolicZSet::try_from(self)
    }
}

impl fmt::Display for ZSubset {
    /// `below <bits> above <bits> [flip n ..]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "below {} above {}", bits(&self.below), bits(&self.above))?;
        if !self.flips.is_empty() {
            write!(f, " flip")?;
            for n in &self.flips {
                write!(f, " {n}")?;
            }
        }
        Ok(())
    }
}

/// The four commensurated shapes up to finite difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZBase {
    Empty,
    All,
    NonNegative,
    NonPositive,
}

impl ZBase {
    pub fn name(self) -> &'static str {
        match self {
            ZBase::Empty => "empty",
            ZBase::All => "all",
            ZBase::NonNegative => "nonnegative",
            ZBase::NonPositive => "nonpositive",
        }
    }

    pub fn subset(self) -> ZSubset {
        match self {
            ZBase::Empty => ZSubset::empty(),
            ZBase::All => ZSubset::all(),
            ZBase::NonNegative => ZSubset::naturals(),
            ZBase::NonPositive => ZSubset::nonpositive(),
        }
    }
}

/// A commensurated subset of ℤ: `base △ delta` with `delta` finite.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicZSet {
    pub base: ZBase,
    pub delta: BTreeSet<i64>,
}

impl SymbolicZSet {
    pub fn to_subset(&self) -> ZSubset {
        self.base.subset().symmetric_difference(&ZSubset::finite(self.delta.iter().copied()))
    }
}

impl TryFrom<&ZSubset> for SymbolicZSet {
    type Error = ZSetError;

    fn try_from(x: &ZSubset) -> Result<Self, ZSetError> {
        if !x.is_commensurated() {
            return Err(ZSetError::NotCommensurated);
        }
        let base = match (x.below[0], x.above[0]) {
            (false, false) => ZBase::Empty,
            (true, true) => ZBase::All,
            (false, true) => ZBase::NonNegative,
            (true, false) => ZBase::NonPositive,
        };
        let delta = x.symmetric_difference(&base.subset()).flips;
        Ok(SymbolicZSet { base, delta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: i64 = 40;

    fn members(x: &ZSubset) -> Vec<i64> {
        x.window(-W, W)
    }

    fn arb_zset() -> impl Strategy<Value = ZSubset> {
        (
            prop::collection::vec(any::<bool>(), 1..4),
            prop::collection::vec(any::<bool>(), 1..4),
            prop::collection::btree_set(-8i64..8, 0..5),
        )
            .prop_map(|(b, a, f)| ZSubset::new(b, a, f).unwrap())
    }

    #[test]
    fn named_sets() {
        assert_eq!(ZSubset::naturals().window(-2, 2), vec![0, 1, 2]);
        assert_eq!(ZSubset::nonpositive().window(-2, 2), vec![-2, -1, 0]);
        assert_eq!(ZSubset::evens().window(-3, 3), vec![-2, 0, 2]);
        assert!(ZSubset::naturals().is_commensurated());
        assert!(!ZSubset::evens().is_commensurated());
    }

    #[test]
    fn shift_of_naturals() {
        let x = ZSubset::naturals().shift(1);
        assert_eq!(x.window(-2, 3), vec![1, 2, 3]);
        assert_eq!(ZSubset::naturals().symmetric_difference(&x), ZSubset::finite([0]));
    }

    #[test]
    fn symbolic_forms() {
        let s = ZSubset::finite([0]).to_symbolic().unwrap();
        assert_eq!(s, SymbolicZSet { base: ZBase::Empty, delta: [0].into() });
        let s = ZSubset::nonpositive().shift(-1).to_symbolic().unwrap();
        assert_eq!(s, SymbolicZSet { base: ZBase::NonPositive, delta: [0].into() });
        assert_eq!(ZSubset::evens().to_symbolic(), Err(ZSetError::NotCommensurated));
    }

    #[test]
    fn display_is_stable() {
        assert_eq!(ZSubset::nonpositive().to_string(), "below 1 above 0 flip 0");
        assert_eq!(ZSubset::from_bits("1010", "01", [3]).unwrap().to_string(), "below 10 above 01 flip 3");
    }

    proptest! {
        #[test]
        fn shift_matches_window(x in arb_zset(), k in -6i64..6) {
            let y = x.shift(k);
            let expect: Vec<i64> = (-W..=W).filter(|&n| x.contains(n - k)).collect();
            prop_assert_eq!(members(&y), expect);
            prop_assert_eq!(y.shift(-k), x);
        }

        #[test]
        fn boolean_ops_match_window(x in arb_zset(), y in arb_zset()) {
            let check = |z: ZSubset, f: fn(bool, bool) -> bool| {
                let expect: Vec<i64> = (-W..=W).filter(|&n| f(x.contains(n), y.contains(n))).collect();
                members(&z) == expect
            };
            prop_assert!(check(x.union(&y), |a, b| a || b));
            prop_assert!(check(x.intersection(&y), |a, b| a && b));
            prop_assert!(check(x.difference(&y), |a, b| a && !b));
            prop_assert!(check(x.symmetric_difference(&y), |a, b| a != b));
            prop_assert!(check(x.complement(), |a, _| !a));
        }

        #[test]
        fn commensurated_iff_finite_boundary(x in arb_zset()) {
            let boundary = x.symmetric_difference(&x.shift(1));
            prop_assert_eq!(x.is_commensurated(), boundary.is_finite());
        }

        #[test]
        fn symbolic_round_trip(x in arb_zset()) {
            if let Ok(s) = x.to_symbolic() {
                prop_assert_eq!(s.to_subset(), x);
            }
        }
    }
}
