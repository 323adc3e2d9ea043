//! Partial bijections on finite carriers and partial group actions.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::group::{Group, GroupError, GroupKind, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartialError {
    #[error("carrier mismatch: {left} points vs {right} points")]
    CarrierMismatch { left: usize, right: usize },
    #[error("point {0} is outside the carrier")]
    PointOutOfRange(usize),
    #[error("source {0} is mapped twice")]
    RepeatedSource(usize),
    #[error("target {0} is hit twice")]
    RepeatedTarget(usize),
    #[error("duplicate point identifier `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point identifier `{0}`")]
    UnknownPoint(String),
    #[error("expected {expected} images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Finite ordered set of point identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Carrier {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Carrier {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, PartialError> {
        let mut index = HashMap::new();
        let mut out = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), i).is_some() {
                return Err(PartialError::DuplicatePoint(n));
            }
            out.push(n);
        }
        Ok(Carrier { names: out, index })
    }

    /// Carrier `0, 1, .., n-1`.
    pub fn numbered(n: usize) -> Self {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Carrier::new(&names).expect("numbered names are distinct")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, PartialError> {
        self.index.get(name).copied().ok_or_else(|| PartialError::UnknownPoint(name.to_string()))
    }

    pub fn sub(&self, subset: &BTreeSet<usize>) -> Carrier {
        let names: Vec<&str> = subset.iter().map(|&i| self.names[i].as_str()).collect();
        Carrier::new(&names).expect("subset of distinct names")
    }
}

/// Injective partial map on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialBijection {
    forward: Vec<Option<usize>>,
    backward: Vec<Option<usize>>,
}

impl PartialBijection {
    pub fn empty(n: usize) -> Self {
        PartialBijection { forward: vec![None; n], backward: vec![None; n] }
    }

    pub fn identity(n: usize) -> Self {
        let v: Vec<Option<usize>> = (0..n).map(Some).collect();
        PartialBijection { forward: v.clone(), backward: v }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, PartialError> {
        let mut f = PartialBijection::empty(n);
        for (x, y) in pairs {
            f.insert(x, y)?;
        }
        Ok(f)
    }

    /// Total bijection from a permutation vector.
    pub fn from_permutation(perm: &[usize]) -> Result<Self, PartialError> {
        PartialBijection::from_pairs(perm.len(), perm.iter().copied().enumerate())
    }

    pub fn insert(&mut self, x: usize, y: usize) -> Result<(), PartialError> {
        let n = self.forward.len();
        if x >= n {
            return Err(PartialError::PointOutOfRange(x));
        }
        if y >= n {
            return Err(PartialError::PointOutOfRange(y));
        }
        if self.forward[x].is_some() {
            return Err(PartialError::RepeatedSource(x));
        }
        if self.backward[y].is_some() {
            return Err(PartialError::RepeatedTarget(y));
        }
        self.forward[x] = Some(y);
        self.backward[y] = Some(x);
        Ok(())
    }

    pub fn carrier_len(&self) -> usize {
        self.forward.len()
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        self.forward.get(x).copied().flatten()
    }

    pub fn apply_inverse(&self, y: usize) -> Option<usize> {
        self.backward.get(y).copied().flatten()
    }

    pub fn domain(&self) -> BTreeSet<usize> {
        (0..self.forward.len()).filter(|&x| self.forward[x].is_some()).collect()
    }

    pub fn image(&self) -> BTreeSet<usize> {
        (0..self.backward.len()).filter(|&y| self.backward[y].is_some()).collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forward.iter().enumerate().filter_map(|(x, y)| y.map(|y| (x, y)))
    }

    pub fn len(&self) -> usize {
        self.forward.iter().filter(|y| y.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_total(&self) -> bool {
        self.forward.iter().all(Option::is_some)
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(x, y)| *y == Some(x))
    }

    pub fn inverse(&self) -> PartialBijection {
        PartialBijection { forward: self.backward.clone(), backward: self.forward.clone() }
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &PartialBijection) -> Result<PartialBijection, PartialError> {
        compose(self, other)
    }

    /// `self ⊇ other` as sets of pairs.
    pub fn contains(&self, other: &PartialBijection) -> bool {
        other.forward.len() == self.forward.len() && other.pairs().all(|(x, y)| self.forward[x] == Some(y))
    }

    /// Pairs of `self` with both ends in `subset`.
    pub fn restrict_to(&self, subset: &BTreeSet<usize>) -> PartialBijection {
        let mut out = PartialBijection::empty(self.forward.len());
        for (x, y) in self.pairs() {
            if subset.contains(&x) && subset.contains(&y) {
                out.forward[x] = Some(y);
                out.backward[y] = Some(x);
            }
        }
        out
    }

    /// Re-index onto the carrier `subset` (positions in its sorted order).
    pub(crate) fn reindex(&self, subset: &BTreeSet<usize>) -> PartialBijection {
        let pos: HashMap<usize, usize> = subset.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut out = PartialBijection::empty(subset.len());
        for (x, y) in self.pairs() {
            if let (Some(&a), Some(&b)) = (pos.get(&x), pos.get(&y)) {
                out.forward[a] = Some(b);
                out.backward[b] = Some(a);
            }
        }
        out
    }
}

/// Relational composition `g ∘ f`: pairs `(x, g(f(x)))`.
pub fn compose(f: &PartialBijection, g: &PartialBijection) -> Result<PartialBijection, PartialError> {
    if f.carrier_len() != g.carrier_len() {
        return Err(PartialError::CarrierMismatch { left: f.carrier_len(), right: g.carrier_len() });
    }
    let n = f.carrier_len();
    let mut out = PartialBijection::empty(n);
    for x in 0..n {
        if let Some(z) = f.forward[x].and_then(|y| g.forward[y]) {
            out.forward[x] = Some(z);
            out.backward[z] = Some(x);
        }
    }
    Ok(out)
}

/// A violated partial-action axiom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// `α(1)` differs from the identity at `point`.
    Identity { point: usize },
    /// `α(g⁻¹) ≠ α(g)⁻¹`, witnessed at `point` in the domain of one side.
    Inverse { element: Word, point: usize },
    /// `g(h x)` is defined but `(gh) x` is undefined or different.
    Containment { g: Word, h: Word, point: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub bound: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A group handle, a carrier and the partial bijections assigned to it.
///
/// For free and infinite cyclic groups `images` holds one entry per
/// generator and `α(w)` is the composition along `w`. For finite groups
/// `images` holds `α(g)` for every element, indexed like the table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAction {
    group: Group,
    carrier: Carrier,
    images: Vec<PartialBijection>,
}

impl PartialAction {
    pub fn new(group: Group, carrier: Carrier, images: Vec<PartialBijection>) -> Result<Self, PartialError> {
        let expected = match group.kind() {
            GroupKind::Finite(t) => t.order(),
            _ => group.generator_count(),
        };
        if images.len() != expected {
            return Err(PartialError::ImageCount { expected, got: images.len() });
        }
        if let Some(f) = images.iter().find(|f| f.carrier_len() != carrier.len()) {
            return Err(PartialError::CarrierMismatch { left: f.carrier_len(), right: carrier.len() });
        }
        Ok(PartialAction { group, carrier, images })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn images(&self) -> &[PartialBijection] {
        &self.images
    }

    /// Image of generator `i` (its letter, for finite groups).
    pub fn generator_image(&self, i: usize) -> &PartialBijection {
        match self.group.finite_table() {
            Some(t) => &self.images[t.generator_elements()[i]],
            None => &self.images[i],
        }
    }

    pub fn evaluate(&self, w: &Word) -> Result<PartialBijection, PartialError> {
        self.group.check_word(w)?;
        if let Some(t) = self.group.finite_table() {
            let e = self.group.element_index(w).expect("finite group");
            debug_assert!(e < t.order());
            return Ok(self.images[e].clone());
        }
        let w = self.group.normalize(w)?;
        let n = self.carrier.len();
        let mut acc = PartialBijection::identity(n);
        // w = l1 .. lk acts as l1 ∘ .. ∘ lk, so apply the last letter first.
        for l in w.letters().iter().rev() {
            let f = &self.images[l.generator];
            let step = if l.inverse { f.inverse() } else { f.clone() };
            acc = compose(&acc, &step)?;
        }
        Ok(acc)
    }

    /// Every image is a total bijection (the action is global).
    pub fn is_global(&self) -> bool {
        self.images.iter().all(PartialBijection::is_total)
    }

    /// Checks the three axioms: exhaustively over all element pairs for
    /// finite groups, over all word pairs of length at most `bound` otherwise.
    pub fn validate(&self, bound: usize) -> ValidationReport {
        let mut violations = Vec::new();
        match self.group.finite_table() {
            Some(t) => {
                let n = self.carrier.len();
                let id = &self.images[t.identity()];
                for x in 0..n {
                    if id.apply(x) != Some(x) || id.apply_inverse(x) != Some(x) {
                        violations.push(Violation::Identity { point: x });
                    }
                }
                for &g in t.canonical_order() {
                    let gi = &self.images[t.inverse(g)];
                    let ginv = self.images[g].inverse();
                    if let Some(x) = (0..n).find(|&x| gi.apply(x) != ginv.apply(x)) {
                        violations.push(Violation::Inverse { element: t.canonical_word(g).clone(), point: x });
                    }
                }
                for &g in t.canonical_order() {
                    for &h in t.canonical_order() {
                        let gh = &self.images[t.multiply(g, h)];
                        for x in 0..n {
                            let Some(z) = self.images[h].apply(x).and_then(|y| self.images[g].apply(y)) else {
                                continue;
                            };
                            if gh.apply(x) != Some(z) {
                                violations.push(Violation::Containment {
                                    g: t.canonical_word(g).clone(),
                                    h: t.canonical_word(h).clone(),
                                    point: x,
                                });
                            }
                        }
                    }
                }
            }
            None => self.validate_words(bound, &mut violations),
        }
        ValidationReport { bound, violations }
    }

    fn validate_words(&self, bound: usize, violations: &mut Vec<Violation>) {
        let ball = self.group.ball(Some(bound));
        let cache: HashMap<&Word, PartialBijection> =
            ball.iter().map(|w| (w, self.evaluate(w).expect("ball words are valid"))).collect();
        let n = self.carrier.len();
        if !cache[&Word::identity()].is_identity() {
            violations.extend((0..n).map(|point| Violation::Identity { point }).take(1));
        }
        for w in &ball {
            let inv = self.group.inverse(w);
            let (a, b) = (&cache[w].inverse(), &cache[&inv]);
            if let Some(point) = (0..n).find(|&x| a.apply(x) != b.apply(x)) {
                violations.push(Violation::Inverse { element: w.clone(), point });
            }
        }
        for g in &ball {
            for h in &ball {
                // reduced(g h) = g' h' with g = g' c and h = c⁻¹ h'
                let (gl, hl) = (g.letters(), h.letters());
                let mut c = 0;
                while c < gl.len().min(hl.len()) && gl[gl.len() - 1 - c] == hl[c].inv() {
                    c += 1;
                }
                let gp = Word::from_letters(gl[..gl.len() - c].to_vec());
                let hp = Word::from_letters(hl[c..].to_vec());
                let gh = compose(&cache[&hp], &cache[&gp]).expect("same carrier");
                let composed = compose(&cache[h], &cache[g]).expect("same carrier");
                let bad = composed.pairs().find(|&(x, z)| gh.apply(x) != Some(z));
                if let Some((x, _)) = bad {
                    violations.push(Violation::Containment { g: g.clone(), h: h.clone(), point: x });
                }
            }
        }
    }

    /// Restricted partial action on `subset`: every stored image intersected
    /// with `subset × subset`, re-indexed onto the sub-carrier.
    pub fn restrict(&self, subset: &BTreeSet<usize>) -> Result<PartialAction, PartialError> {
        if let Some(&p) = subset.iter().find(|&&p| p >= self.carrier.len()) {
            return Err(PartialError::PointOutOfRange(p));
        }
        let images = self.images.iter().map(|f| f.reindex(subset)).collect();
        Ok(PartialAction { group: self.group.clone(), carrier: self.carrier.sub(subset), images })
    }
}
