//! Commensurated and transfixed subsets, Neumann witnesses, and the
//! dictionary between G-sets and partial actions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::globalization::{globalize, Globalization, GlobalizationError};
use crate::group::{Group, Letter, Word};
use crate::partial::{PartialAction, PartialError};
use crate::perm::{invert_perm, is_permutation, Perm};
use crate::union_find::DisjointSet;
use crate::zset::{ZBase, ZSubset};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommensurationError {
    #[error("subset is not expressible in this backend: {0}")]
    Inexpressible(String),
    #[error("subset is not commensurated")]
    NotCommensurated,
    #[error("the set F must be finite")]
    InfiniteSet,
    #[error("no witness among words of length at most {bound}{}", if *hypothesis_violated { " (F meets a finite orbit)" } else { "" })]
    NoWitnessWithinBound { bound: usize, hypothesis_violated: bool },
    #[error("invalid transfixing certificate: {0}")]
    InvalidCertificate(CertificateViolation),
    #[error("strategy `{0}` does not apply to this backend")]
    StrategyMismatch(&'static str),
    #[error("not a G-set: {0}")]
    NotAGSet(String),
    #[error(transparent)]
    Globalization(#[from] GlobalizationError),
    #[error(transparent)]
    Partial(#[from] PartialError),
}

/// Why a user-supplied invariant set was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateViolation {
    /// `point` and `letter · point` differ in membership.
    NotInvariant { letter: String, point: String },
    /// `Y △ X` is infinite.
    InfiniteDelta { evidence: String },
    /// A stage strip does not leave a finely transfixed remainder.
    BadStrip { stage: usize, point: String },
}

impl std::fmt::Display for CertificateViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertificateViolation::NotInvariant { letter, point } => {
                write!(f, "{point} and {letter}.{point} differ in membership")
            }
            CertificateViolation::InfiniteDelta { evidence } => write!(f, "infinite symmetric difference ({evidence})"),
            CertificateViolation::BadStrip { stage, point } => {
                write!(f, "stage {stage}: the orbit of {point} straddles the stripped set")
            }
        }
    }
}

/// A finite set with a total action, one permutation per generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGSet {
    group: Group,
    names: Vec<String>,
    /// Indexed by letter rank.
    letters: Vec<Perm>,
}

impl FiniteGSet {
    pub fn new(group: Group, names: Vec<String>, generators: Vec<Perm>) -> Result<Self, CommensurationError> {
        let n = names.len();
        if generators.len() != group.generator_count() {
            return Err(CommensurationError::NotAGSet("one permutation per generator expected".into()));
        }
        if let Some(i) = generators.iter().position(|p| p.len() != n || !is_permutation(p)) {
            return Err(CommensurationError::NotAGSet(format!("`{}` is not a permutation", group.symbols()[i])));
        }
        let mut letters = generators.clone();
        letters.extend(generators.iter().map(|p| invert_perm(p)));
        let set = FiniteGSet { group, names, letters };
        if let Some(t) = set.group.finite_table() {
            // the generator permutations must respect the multiplication table
            let perms: Vec<Perm> = (0..t.order()).map(|e| set.perm_of(t.canonical_word(e))).collect();
            for a in 0..t.order() {
                for b in 0..t.order() {
                    let ab = &perms[t.multiply(a, b)];
                    if (0..n).any(|x| ab[x] != perms[a][perms[b][x]]) {
                        return Err(CommensurationError::NotAGSet(format!(
                            "relation {}*{} fails",
                            t.elements()[a],
                            t.elements()[b]
                        )));
                    }
                }
            }
        }
        Ok(set)
    }

    /// The action itself, when it is global.
    pub fn from_action(a: &PartialAction) -> Result<Self, CommensurationError> {
        let perms = (0..a.group().generator_count())
            .map(|i| {
                let f = a.generator_image(i);
                (0..f.carrier_len()).map(|x| f.apply(x)).collect::<Option<Perm>>()
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CommensurationError::NotAGSet("some generator is not total".into()))?;
        FiniteGSet::new(a.group().clone(), a.carrier().names().to_vec(), perms)
    }

    pub fn from_globalization(g: &Globalization) -> Result<Self, CommensurationError> {
        g.require_exact()?;
        let perms = g.letter_permutations().expect("exact");
        let k = g.group().generator_count();
        FiniteGSet::new(g.group().clone(), g.point_names(), perms[..k].to_vec())
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn act_letter(&self, l: Letter, x: usize) -> usize {
        self.letters[l.rank(self.group.generator_count())][x]
    }

    pub fn act(&self, w: &Word, x: usize) -> usize {
        w.letters().iter().rev().fold(x, |y, &l| self.act_letter(l, y))
    }

    pub fn perm_of(&self, w: &Word) -> Perm {
        (0..self.len()).map(|x| self.act(w, x)).collect()
    }

    pub fn image(&self, w: &Word, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        set.iter().map(|&x| self.act(w, x)).collect()
    }

    /// Orbits sorted by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut ds = DisjointSet::new(self.len());
        for p in &self.letters {
            for (x, &y) in p.iter().enumerate() {
                ds.union(x, y);
            }
        }
        ds.classes()
    }

    /// `G · set`.
    pub fn saturate(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        self.orbits().into_iter().filter(|o| o.iter().any(|x| set.contains(x))).flatten().collect()
    }

    pub fn is_invariant(&self, set: &BTreeSet<usize>) -> bool {
        self.letters.iter().all(|p| set.iter().all(|&x| set.contains(&p[x])))
    }
}

#[derive(Clone, Debug)]
pub enum GSetBackend {
    Finite(FiniteGSet),
    /// ℤ acting on itself by the shift; the group names the generator.
    SymbolicZ(Group),
    /// A truncated globalization; answers carry its radius.
    LazyBall(Globalization),
}

impl GSetBackend {
    pub fn shift() -> Self {
        GSetBackend::SymbolicZ(Group::cyclic_infinite("u").expect("valid symbol"))
    }

    /// Finite when the globalization is exact, lazy otherwise.
    pub fn from_globalization(g: Globalization) -> Result<Self, CommensurationError> {
        if g.is_exact() {
            Ok(GSetBackend::Finite(FiniteGSet::from_globalization(&g)?))
        } else {
            Ok(GSetBackend::LazyBall(g))
        }
    }

    pub fn group(&self) -> &Group {
        match self {
            GSetBackend::Finite(e) => e.group(),
            GSetBackend::SymbolicZ(g) => g,
            GSetBackend::LazyBall(g) => g.group(),
        }
    }

    pub fn radius(&self) -> Option<usize> {
        match self {
            GSetBackend::LazyBall(g) => g.radius(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Subset {
    Points(BTreeSet<usize>),
    Integers(ZSubset),
}

impl Subset {
    pub fn points(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Subset::Points(p) => Some(p),
            Subset::Integers(_) => None,
        }
    }

    pub fn integers(&self) -> Option<&ZSubset> {
        match self {
            Subset::Integers(z) => Some(z),
            Subset::Points(_) => None,
        }
    }
}

fn expect_points(x: &Subset, len: usize) -> Result<&BTreeSet<usize>, CommensurationError> {
    match x {
        Subset::Points(p) if p.iter().all(|&q| q < len) => Ok(p),
        Subset::Points(_) => Err(CommensurationError::Inexpressible("point out of range".into())),
        Subset::Integers(_) => Err(CommensurationError::Inexpressible("integer set on a finite backend".into())),
    }
}

fn expect_integers(x: &Subset) -> Result<&ZSubset, CommensurationError> {
    x.integers().ok_or_else(|| CommensurationError::Inexpressible("point set on the shift backend".into()))
}

fn shift_amount(w: &Word) -> i64 {
    w.letters().iter().map(|l| if l.inverse { -1 } else { 1 }).sum()
}

/// Per-generator size of `X △ sX`; `None` when infinite or unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommensurationReport {
    pub commensurated: bool,
    pub per_generator: Vec<(String, Option<usize>)>,
    pub radius: Option<usize>,
}

/// Decides whether `X ∖ g⁻¹X` is finite for every `g`. Checking generators
/// suffices for finitely generated groups.
pub fn is_commensurated(e: &GSetBackend, x: &Subset) -> Result<CommensurationReport, CommensurationError> {
    let group = e.group();
    let k = group.generator_count();
    let mut per_generator = Vec::with_capacity(k);
    let commensurated = match e {
        GSetBackend::Finite(set) => {
            let xs = expect_points(x, set.len())?;
            for i in 0..k {
                let image = set.image(&Word::letter(Letter::positive(i)), xs);
                per_generator.push((group.symbols()[i].clone(), Some(xs.symmetric_difference(&image).count())));
            }
            true
        }
        GSetBackend::SymbolicZ(_) => {
            let z = expect_integers(x)?;
            let boundary = z.symmetric_difference(&z.shift(1));
            per_generator.push((group.symbols()[0].clone(), boundary.finite_elements().map(|v| v.len())));
            z.is_commensurated()
        }
        GSetBackend::LazyBall(g) => {
            let xs = expect_points(x, g.len())?;
            for i in 0..k {
                let l = Letter::positive(i);
                let mut count = Some(0);
                let outward = xs.iter().map(|&p| g.act_letter(l, p));
                let inward = xs.iter().map(|&p| g.act_letter(l.inv(), p));
                for image in outward.chain(inward) {
                    count = match (count, image) {
                        (Some(c), Some(q)) => Some(c + usize::from(!xs.contains(&q))),
                        _ => None,
                    };
                }
                per_generator.push((group.symbols()[i].clone(), count));
            }
            // X is a finite set of explored points, so X ∖ g⁻¹X is finite
            true
        }
    };
    Ok(CommensurationReport { commensurated, per_generator, radius: e.radius() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransfixVerdict {
    Transfixed { y: Subset, delta: Subset },
    NotTransfixed { obstruction: String },
    Inconclusive { radius: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransfixCertificate {
    pub verdict: TransfixVerdict,
    /// Some invariant `Y ⊇ X` has `Y ∖ X` finite; the set is `G · X`.
    pub above: Option<Subset>,
    /// Every finite orbit meeting `X` lies in `X`, and `X` is transfixed above.
    pub finely_above: bool,
    /// Minimal finite `F ⊆ X` with `X ∖ F` finely transfixed above.
    pub fine_strip: Option<Subset>,
}

impl TransfixCertificate {
    pub fn is_transfixed(&self) -> bool {
        matches!(self.verdict, TransfixVerdict::Transfixed { .. })
    }
}

/// Points of `x` whose orbit is not contained in `x`.
pub fn straddling_points(set: &FiniteGSet, x: &BTreeSet<usize>) -> BTreeSet<usize> {
    set.orbits().into_iter().filter(|o| !o.iter().all(|p| x.contains(p))).flatten().filter(|p| x.contains(p)).collect()
}

/// Finds an invariant `Y` at finite distance from `X`, minimizing `|Y △ X|`.
pub fn transfix(e: &GSetBackend, x: &Subset) -> Result<TransfixCertificate, CommensurationError> {
    match e {
        GSetBackend::Finite(set) => {
            let xs = expect_points(x, set.len())?;
            let mut y = BTreeSet::new();
            for orbit in set.orbits() {
                let inside = orbit.iter().filter(|p| xs.contains(p)).count();
                // ties stay out of Y
                if 2 * inside > orbit.len() {
                    y.extend(orbit);
                }
            }
            let delta: BTreeSet<usize> = y.symmetric_difference(xs).copied().collect();
            let strip = straddling_points(set, xs);
            Ok(TransfixCertificate {
                verdict: TransfixVerdict::Transfixed { y: Subset::Points(y), delta: Subset::Points(delta) },
                above: Some(Subset::Points(set.saturate(xs))),
                finely_above: strip.is_empty(),
                fine_strip: Some(Subset::Points(strip)),
            })
        }
        GSetBackend::SymbolicZ(_) => {
            let z = expect_integers(x)?;
            let sym = z.to_symbolic().map_err(|_| CommensurationError::NotCommensurated)?;
            // the only invariant subsets are ∅ and ℤ, and there are no finite orbits
            let delta = Subset::Integers(ZSubset::finite(sym.delta.iter().copied()));
            Ok(match sym.base {
                ZBase::Empty => TransfixCertificate {
                    verdict: TransfixVerdict::Transfixed { y: Subset::Integers(ZSubset::empty()), delta },
                    above: z.is_empty().then(|| Subset::Integers(ZSubset::empty())),
                    finely_above: z.is_empty(),
                    fine_strip: Some(Subset::Integers(z.clone())),
                },
                ZBase::All => TransfixCertificate {
                    verdict: TransfixVerdict::Transfixed { y: Subset::Integers(ZSubset::all()), delta },
                    above: Some(Subset::Integers(ZSubset::all())),
                    finely_above: true,
                    fine_strip: Some(Subset::Integers(ZSubset::empty())),
                },
                base => TransfixCertificate {
                    verdict: TransfixVerdict::NotTransfixed {
                        obstruction: format!(
                            "base {}: both X △ empty and X △ Z are infinite, and empty and Z are the only invariant sets",
                            base.name()
                        ),
                    },
                    above: None,
                    finely_above: false,
                    fine_strip: None,
                },
            })
        }
        GSetBackend::LazyBall(g) => {
            expect_points(x, g.len())?;
            Ok(TransfixCertificate {
                verdict: TransfixVerdict::Inconclusive { radius: g.radius().unwrap_or(0) },
                above: None,
                finely_above: false,
                fine_strip: None,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeumannWitness {
    pub g: Word,
    pub checked_bound: usize,
    /// F meets a finite orbit, so the lemma did not promise a witness.
    pub hypothesis_violated: bool,
}

/// Words of length at most `bound`, length-lex.
fn candidate_words(group: &Group, bound: usize) -> Vec<Word> {
    group.ball(Some(bound))
}

/// First `g` in length-lex order with `F ∩ gF = ∅`.
pub fn neumann_witness(e: &GSetBackend, f: &Subset, bound: usize) -> Result<NeumannWitness, CommensurationError> {
    let group = e.group();
    let (found, hypothesis_violated) = match e {
        GSetBackend::Finite(set) => {
            let fs = expect_points(f, set.len())?;
            // every orbit of a finite set is finite
            let violated = !fs.is_empty();
            let found = candidate_words(group, bound).into_iter().find(|w| set.image(w, fs).is_disjoint(fs));
            (found, violated)
        }
        GSetBackend::SymbolicZ(_) => {
            let z = expect_integers(f)?;
            let fs = z.finite_elements().ok_or(CommensurationError::InfiniteSet)?;
            let set: BTreeSet<i64> = fs.iter().copied().collect();
            let found = candidate_words(group, bound)
                .into_iter()
                .find(|w| fs.iter().all(|n| !set.contains(&(n + shift_amount(w)))));
            (found, false)
        }
        GSetBackend::LazyBall(g) => {
            let fs = expect_points(f, g.len())?;
            let closed: BTreeSet<usize> =
                g.components().into_iter().filter(|(_, closed)| *closed).flat_map(|(c, _)| c).collect();
            let violated = fs.iter().any(|p| closed.contains(p));
            let found = candidate_words(group, bound)
                .into_iter()
                .find(|w| fs.iter().all(|&p| matches!(g.act(w, p), Some(q) if !fs.contains(&q))));
            (found, violated)
        }
    };
    match found {
        Some(g) => Ok(NeumannWitness { g, checked_bound: bound, hypothesis_violated }),
        None => Err(CommensurationError::NoWitnessWithinBound { bound, hypothesis_violated }),
    }
}

/// Re-checks `F ∩ gF = ∅` from scratch.
pub fn check_neumann(e: &GSetBackend, f: &Subset, g: &Word) -> bool {
    match (e, f) {
        (GSetBackend::Finite(set), Subset::Points(fs)) => set.image(g, fs).is_disjoint(fs),
        (GSetBackend::SymbolicZ(_), Subset::Integers(z)) => {
            z.is_finite() && z.shift(shift_amount(g)).intersection(z).is_empty()
        }
        (GSetBackend::LazyBall(gl), Subset::Points(fs)) => {
            fs.iter().all(|&p| matches!(gl.act(g, p), Some(q) if !fs.contains(&q)))
        }
        _ => false,
    }
}

/// Corollary form: for `X` inside a finite G-set, finds `g` with
/// `G·X = X ∪ gX` by searching a Neumann witness for `F = G·X ∖ X`.
pub fn neumann_cover(
    set: &FiniteGSet,
    x: &BTreeSet<usize>,
    bound: usize,
) -> Result<NeumannWitness, CommensurationError> {
    let hull = set.saturate(x);
    let f: BTreeSet<usize> = hull.difference(x).copied().collect();
    let w = neumann_witness(&GSetBackend::Finite(set.clone()), &Subset::Points(f), bound)?;
    debug_assert_eq!(x.union(&set.image(&w.g, x)).copied().collect::<BTreeSet<_>>(), hull);
    Ok(w)
}

/// Both sides of one notion: partial-action language and G-set language.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotionPair {
    pub partial: bool,
    pub gset: bool,
}

impl NotionPair {
    pub fn agrees(&self) -> bool {
        self.partial == self.gset
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictionaryReport {
    pub exact: bool,
    pub radius: Option<usize>,
    /// `|X ∖ D_s|` per generator.
    pub missing_domain: Vec<(String, usize)>,
    pub cofinite_commensurated: NotionPair,
    /// The remaining rows need the whole globalization.
    pub transfixed: Option<NotionPair>,
    pub transfixed_above: Option<NotionPair>,
    pub finely_transfixed_above: Option<NotionPair>,
}

impl DictionaryReport {
    pub fn mismatches(&self) -> Vec<&'static str> {
        let rows = [
            ("cofinite/commensurated", Some(self.cofinite_commensurated)),
            ("transfixed", self.transfixed),
            ("transfixed above", self.transfixed_above),
            ("finely transfixed above", self.finely_transfixed_above),
        ];
        rows.into_iter().filter(|(_, p)| p.is_some_and(|p| !p.agrees())).map(|(n, _)| n).collect()
    }
}

/// Computes every notion for the carrier `X` twice: from the partial action
/// and from `X` as a subset of its globalization, and reports both.
pub fn dictionary_check(a: &PartialAction, radius: usize) -> Result<DictionaryReport, CommensurationError> {
    let glob = globalize(a, radius)?;
    let x = Subset::Points(glob.embedded());
    let k = a.group().generator_count();
    let missing_domain: Vec<(String, usize)> = (0..k)
        .map(|i| {
            let f = a.generator_image(i);
            (a.group().symbols()[i].clone(), a.carrier().len() - f.len())
        })
        .collect();
    // the carrier is finite, so every X ∖ D_g is finite
    let cofinite = true;
    let exact = glob.is_exact();
    let radius_used = glob.radius();
    let backend = GSetBackend::from_globalization(glob.clone())?;
    let commensurated = is_commensurated(&backend, &x)?.commensurated;
    let mut report = DictionaryReport {
        exact,
        radius: radius_used,
        missing_domain,
        cofinite_commensurated: NotionPair { partial: cofinite, gset: commensurated },
        transfixed: None,
        transfixed_above: None,
        finely_transfixed_above: None,
    };
    let GSetBackend::Finite(set) = &backend else {
        return Ok(report);
    };
    let cert = transfix(&backend, &x)?;

    // partial-action side, from X̂ directly
    let outside: BTreeSet<usize> = (0..glob.len()).filter(|p| !glob.embedded().contains(p)).collect();
    let above_partial = true; // X̂ is finite here
    let finite_orbit_points: BTreeSet<usize> = set.orbits().into_iter().flatten().collect();
    let finely_partial = above_partial && outside.is_disjoint(&finite_orbit_points);
    // transfixed: X ∖ F transfixed above for some finite F; F = ∅ already works
    // once X̂ ∖ X is finite, and otherwise F = X leaves the empty partial set
    let transfixed_partial = above_partial || globalize(&a.restrict(&BTreeSet::new())?, radius)?.is_empty();

    report.transfixed = Some(NotionPair { partial: transfixed_partial, gset: cert.is_transfixed() });
    report.transfixed_above = Some(NotionPair { partial: above_partial, gset: cert.above.is_some() });
    report.finely_transfixed_above = Some(NotionPair { partial: finely_partial, gset: cert.finely_above });
    Ok(report)
}

/// Strategy standing in for Property FW: something that produces the
/// transfixing data the regularization pipeline consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transfixer {
    /// Exhaustive search on finite backends.
    FiniteExact,
    /// A user-supplied invariant set `Y`, validated before use.
    Certificate(Subset),
    /// User-supplied strips `L`, keyed by stage dimension.
    Staged(BTreeMap<usize, BTreeSet<usize>>),
    /// Exact decisions on the shift backend.
    Symbolic,
}

impl Transfixer {
    pub fn name(&self) -> &'static str {
        match self {
            Transfixer::FiniteExact => "exact",
            Transfixer::Certificate(_) => "cert",
            Transfixer::Staged(_) => "cert",
            Transfixer::Symbolic => "symbolic",
        }
    }
}

/// Runs a strategy on `X`.
pub fn apply_transfixer(
    strategy: &Transfixer,
    e: &GSetBackend,
    x: &Subset,
) -> Result<TransfixCertificate, CommensurationError> {
    match (strategy, e) {
        (Transfixer::FiniteExact, GSetBackend::Finite(_)) => transfix(e, x),
        (Transfixer::Symbolic, GSetBackend::SymbolicZ(_)) => transfix(e, x),
        (Transfixer::Certificate(y), _) => check_invariant_certificate(e, x, y),
        (s, _) => Err(CommensurationError::StrategyMismatch(s.name())),
    }
}

/// Validates a user-supplied `Y`: invariant under every letter and at
/// finite distance from `X`.
pub fn check_invariant_certificate(
    e: &GSetBackend,
    x: &Subset,
    y: &Subset,
) -> Result<TransfixCertificate, CommensurationError> {
    let group = e.group();
    let bad = |letter: Letter, point: String| {
        CommensurationError::InvalidCertificate(CertificateViolation::NotInvariant {
            letter: group.format_word(&Word::letter(letter)),
            point,
        })
    };
    match e {
        GSetBackend::Finite(set) => {
            let xs = expect_points(x, set.len())?;
            let ys = expect_points(y, set.len())?;
            for l in group.letters() {
                for p in 0..set.len() {
                    if ys.contains(&p) != ys.contains(&set.act_letter(l, p)) {
                        return Err(bad(l, set.names()[p].clone()));
                    }
                }
            }
            let delta: BTreeSet<usize> = ys.symmetric_difference(xs).copied().collect();
            let strip = straddling_points(set, xs);
            Ok(TransfixCertificate {
                above: Some(Subset::Points(set.saturate(xs))),
                finely_above: strip.is_empty(),
                fine_strip: Some(Subset::Points(strip)),
                verdict: TransfixVerdict::Transfixed { y: y.clone(), delta: Subset::Points(delta) },
            })
        }
        GSetBackend::SymbolicZ(_) => {
            let xz = expect_integers(x)?;
            let yz = expect_integers(y)?;
            for l in group.letters() {
                let step = if l.inverse { -1 } else { 1 };
                // points whose membership changes under the letter
                let moved = yz.symmetric_difference(&yz.shift(-step));
                let first = match moved.finite_elements() {
                    Some(v) => v.first().copied(),
                    None => Some(moved.window(-1, 1).first().copied().unwrap_or(0)),
                };
                if let Some(p) = first {
                    return Err(bad(l, p.to_string()));
                }
            }
            let delta = yz.symmetric_difference(xz);
            if !delta.is_finite() {
                let w = 3 * (xz.radius().max(yz.radius()) + 1);
                return Err(CommensurationError::InvalidCertificate(CertificateViolation::InfiniteDelta {
                    evidence: format!("{} points of Y xor X in [-{w}, {w}]", delta.window(-w, w).len()),
                }));
            }
            let above = yz.difference(xz).is_empty() || xz.is_cofinite();
            Ok(TransfixCertificate {
                above: above.then(|| Subset::Integers(if xz.is_empty() { ZSubset::empty() } else { ZSubset::all() })),
                finely_above: above,
                fine_strip: Some(Subset::Integers(if yz.is_empty() { xz.clone() } else { ZSubset::empty() })),
                verdict: TransfixVerdict::Transfixed { y: y.clone(), delta: Subset::Integers(delta) },
            })
        }
        GSetBackend::LazyBall(_) => Err(CommensurationError::StrategyMismatch("cert")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial::{Carrier, PartialBijection};

    fn z2_on(n: usize, swap: &[(usize, usize)]) -> FiniteGSet {
        let mut p: Perm = (0..n).collect();
        for &(a, b) in swap {
            p.swap(a, b);
        }
        let names = (0..n).map(|i| format!("p{i}")).collect();
        FiniteGSet::new(Group::cyclic(2, "s").unwrap(), names, vec![p]).unwrap()
    }

    fn ints(x: ZSubset) -> Subset {
        Subset::Integers(x)
    }

    fn pts(v: &[usize]) -> Subset {
        Subset::Points(v.iter().copied().collect())
    }

    #[test]
    fn shift_examples() {
        let e = GSetBackend::shift();
        assert!(is_commensurated(&e, &ints(ZSubset::naturals())).unwrap().commensurated);
        assert!(!is_commensurated(&e, &ints(ZSubset::evens())).unwrap().commensurated);
        let n = transfix(&e, &ints(ZSubset::naturals())).unwrap();
        assert!(!n.is_transfixed());
        let s = transfix(&e, &ints(ZSubset::finite([0]))).unwrap();
        assert_eq!(
            s.verdict,
            TransfixVerdict::Transfixed { y: ints(ZSubset::empty()), delta: ints(ZSubset::finite([0])) }
        );
        assert!(s.above.is_none());
        assert_eq!(transfix(&e, &ints(ZSubset::evens())), Err(CommensurationError::NotCommensurated));
    }

    #[test]
    fn neumann_on_the_shift() {
        let e = GSetBackend::shift();
        let w = neumann_witness(&e, &ints(ZSubset::finite([0, 3])), 10).unwrap();
        assert_eq!(e.group().format_word(&w.g), "u");
        let w = neumann_witness(&e, &ints(ZSubset::finite([0, 1, 3])), 10).unwrap();
        // shifts by ±1, ±2, ±3 all collide; +4 is first
        assert_eq!(shift_amount(&w.g), 4);
        assert!(check_neumann(&e, &ints(ZSubset::finite([0, 1, 3])), &w.g));
        assert_eq!(neumann_witness(&e, &ints(ZSubset::empty()), 0).unwrap().g, Word::identity());
    }

    #[test]
    fn neumann_finite_orbit() {
        let e = GSetBackend::Finite(z2_on(2, &[(0, 1)]));
        assert_eq!(
            neumann_witness(&e, &pts(&[0, 1]), 5),
            Err(CommensurationError::NoWitnessWithinBound { bound: 5, hypothesis_violated: true })
        );
        let w = neumann_witness(&e, &pts(&[0]), 5).unwrap();
        assert!(w.hypothesis_violated);
        assert_eq!(w.g.len(), 1);
    }

    #[test]
    fn finite_transfix_per_orbit() {
        // orbits {0,1}, {2,3}, {4}
        let set = z2_on(5, &[(0, 1), (2, 3)]);
        let e = GSetBackend::Finite(set.clone());
        let c = transfix(&e, &pts(&[0, 1])).unwrap();
        assert_eq!(c.verdict, TransfixVerdict::Transfixed { y: pts(&[0, 1]), delta: pts(&[]) });
        assert!(c.finely_above);
        let c = transfix(&e, &pts(&[0, 4])).unwrap();
        // tie on {0,1} stays out
        assert_eq!(c.verdict, TransfixVerdict::Transfixed { y: pts(&[4]), delta: pts(&[0]) });
        assert_eq!(c.above, Some(pts(&[0, 1, 4])));
        assert_eq!(c.fine_strip, Some(pts(&[0])));
        assert!(!c.finely_above);
        assert_eq!(neumann_cover(&set, &[0, 4].into(), 3).unwrap().g.len(), 1);
    }

    #[test]
    fn transfix_is_minimal_over_orbit_unions() {
        let set = z2_on(6, &[(0, 1), (2, 3)]);
        let e = GSetBackend::Finite(set.clone());
        let orbits = set.orbits();
        for mask in 0u32..64 {
            let x: BTreeSet<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
            let c = transfix(&e, &Subset::Points(x.clone())).unwrap();
            let TransfixVerdict::Transfixed { delta: Subset::Points(d), .. } = c.verdict else { panic!() };
            let best = (0u32..1 << orbits.len())
                .map(|m| {
                    let y: BTreeSet<usize> = orbits
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| m >> i & 1 == 1)
                        .flat_map(|(_, o)| o.clone())
                        .collect();
                    y.symmetric_difference(&x).count()
                })
                .min()
                .unwrap();
            assert_eq!(d.len(), best);
        }
    }

    #[test]
    fn certificates_for_the_shift() {
        let e = GSetBackend::shift();
        let c = apply_transfixer(&Transfixer::Certificate(ints(ZSubset::empty())), &e, &ints(ZSubset::finite([0])))
            .unwrap();
        assert_eq!(
            c.verdict,
            TransfixVerdict::Transfixed { y: ints(ZSubset::empty()), delta: ints(ZSubset::finite([0])) }
        );
        let err = apply_transfixer(&Transfixer::Certificate(ints(ZSubset::naturals())), &e, &ints(ZSubset::naturals()))
            .unwrap_err();
        assert_eq!(
            err,
            CommensurationError::InvalidCertificate(CertificateViolation::NotInvariant {
                letter: "u".into(),
                point: "-1".into()
            })
        );
        let err = apply_transfixer(&Transfixer::Certificate(ints(ZSubset::all())), &e, &ints(ZSubset::naturals()))
            .unwrap_err();
        assert!(matches!(err, CommensurationError::InvalidCertificate(CertificateViolation::InfiniteDelta { .. })));
    }

    #[test]
    fn finite_exact_strategy_delegates() {
        let e = GSetBackend::Finite(z2_on(3, &[(0, 1)]));
        let x = pts(&[0]);
        assert_eq!(apply_transfixer(&Transfixer::FiniteExact, &e, &x).unwrap(), transfix(&e, &x).unwrap());
        assert!(apply_transfixer(&Transfixer::Symbolic, &e, &x).is_err());
    }

    #[test]
    fn dictionary_on_a_restricted_swap() {
        let g = Group::cyclic(2, "s").unwrap();
        let swap = PartialBijection::from_pairs(3, [(0, 1), (1, 0), (2, 2)]).unwrap();
        let a = PartialAction::new(g, Carrier::numbered(3), vec![PartialBijection::identity(3), swap]).unwrap();
        let r = dictionary_check(&a, 1).unwrap();
        assert!(r.mismatches().is_empty());
        assert_eq!(r.finely_transfixed_above, Some(NotionPair { partial: true, gset: true }));
        let sub = a.restrict(&[0, 2].into()).unwrap();
        let r = dictionary_check(&sub, 1).unwrap();
        assert!(r.mismatches().is_empty());
        assert_eq!(r.finely_transfixed_above, Some(NotionPair { partial: false, gset: false }));
        assert_eq!(r.missing_domain, vec![("s".into(), 1)]);
    }
}
