//! Universal globalization of a partial action.
//!
//! Points are classes of `G × X` under `(g,x) ~ (h,y)` whenever some `k`
//! makes `(kg)x` and `(kh)y` defined and equal. For infinite groups the
//! quotient is explored on `ball(radius) × X` with `k` ranging over the same
//! ball; since `k = h⁻¹` already lies in the ball, the explored classes are
//! exactly the true classes cut down to the ball, and the result is complete
//! as soon as the explored classes are closed under every letter.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::group::{Group, Letter, Word};
use crate::partial::{PartialAction, PartialBijection, PartialError};
use crate::union_find::DisjointSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GlobalizationError {
    #[error("exploration radius must be at least 1 for infinite groups")]
    ZeroRadius,
    #[error("truncated quotient at radius {radius} is not closed under the generators")]
    TruncationInconclusive { radius: usize },
    #[error("the action is not global: `{element}` is not a total bijection")]
    NotGlobal { element: String },
    #[error("orbits not meeting the subset: {orbits:?}")]
    OrbitMissed { orbits: Vec<Vec<String>> },
    #[error("globalization does not recover the G-set: {0}")]
    NotRecovered(String),
    #[error(transparent)]
    Partial(#[from] PartialError),
}

/// Canonical representative of a class: its length-lex minimal `(word, point)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalPoint {
    pub word: Word,
    pub point: usize,
}

#[derive(Clone, Debug)]
pub struct Globalization {
    group: Group,
    carrier_names: Vec<String>,
    points: Vec<GlobalPoint>,
    /// `action[letter rank][class]`; `None` where the image left the ball.
    action: Vec<Vec<Option<usize>>>,
    members: HashMap<(Word, usize), usize>,
    ball: Vec<Word>,
    radius: Option<usize>,
    exact: bool,
}

/// Builds `Compl(G, X)`. `radius` is ignored for finite groups.
pub fn globalize(a: &PartialAction, radius: usize) -> Result<Globalization, GlobalizationError> {
    let group = a.group().clone();
    let radius = if group.is_finite() {
        None
    } else if radius == 0 {
        return Err(GlobalizationError::ZeroRadius);
    } else {
        Some(radius)
    };
    let ball = group.ball(radius);
    let pos: HashMap<&Word, usize> = ball.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let n = a.carrier().len();
    let mut ds = DisjointSet::new(ball.len() * n);
    let mut cache: HashMap<Word, PartialBijection> = HashMap::new();
    for k in &ball {
        let mut holder: Vec<Option<usize>> = vec![None; n];
        for (gi, g) in ball.iter().enumerate() {
            let kg = group.multiply(k, g);
            if !cache.contains_key(&kg) {
                let f = a.evaluate(&kg)?;
                cache.insert(kg.clone(), f);
            }
            for (x, z) in cache[&kg].pairs() {
                let id = gi * n + x;
                match holder[z] {
                    None => holder[z] = Some(id),
                    Some(other) => {
                        ds.union(other, id);
                    }
                }
            }
        }
    }
    // classes come out ordered by smallest member, which is the canonical
    // representative because the ball is sorted length-lex
    let classes = ds.classes();
    let mut class_of = vec![0usize; ball.len() * n];
    let mut points = Vec::with_capacity(classes.len());
    for (c, members) in classes.iter().enumerate() {
        for &id in members {
            class_of[id] = c;
        }
        points.push(GlobalPoint { word: ball[members[0] / n].clone(), point: members[0] % n });
    }
    let letters = group.letters();
    let mut action = vec![vec![None; classes.len()]; letters.len()];
    for (r, &l) in letters.iter().enumerate() {
        let lw = Word::letter(l);
        for (c, members) in classes.iter().enumerate() {
            for &id in members {
                let lg = group.multiply(&lw, &ball[id / n]);
                if let Some(&j) = pos.get(&lg) {
                    let image = class_of[j * n + id % n];
                    debug_assert!(action[r][c].is_none_or(|prev| prev == image));
                    action[r][c] = Some(image);
                    break;
                }
            }
        }
    }
    // an image can be unreachable from the class's own members yet known
    // through the inverse letter
    let k = group.generator_count();
    for (r, &l) in letters.iter().enumerate() {
        let back = l.inv().rank(k);
        for d in 0..classes.len() {
            if let Some(c) = action[back][d] {
                action[r][c].get_or_insert(d);
            }
        }
    }
    let exact = action.iter().all(|row| row.iter().all(Option::is_some));
    let members = (0..ball.len() * n).map(|id| ((ball[id / n].clone(), id % n), class_of[id])).collect();
    Ok(Globalization {
        group,
        carrier_names: a.carrier().names().to_vec(),
        points,
        action,
        members,
        ball,
        radius,
        exact,
    })
}

impl Globalization {
    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GlobalPoint] {
        &self.points
    }

    pub fn carrier_names(&self) -> &[String] {
        &self.carrier_names
    }

    pub fn carrier_len(&self) -> usize {
        self.carrier_names.len()
    }

    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn require_exact(&self) -> Result<&Self, GlobalizationError> {
        if self.exact {
            Ok(self)
        } else {
            Err(GlobalizationError::TruncationInconclusive { radius: self.radius.unwrap_or(0) })
        }
    }

    /// Explored words, length-lex.
    pub fn ball(&self) -> &[Word] {
        &self.ball
    }

    /// Class of the explored pair `(g, x)`.
    pub fn class_of(&self, g: &Word, x: usize) -> Option<usize> {
        self.members.get(&(g.clone(), x)).copied()
    }

    /// Class of `(1, x)`.
    pub fn embed(&self, x: usize) -> usize {
        self.members[&(Word::identity(), x)]
    }

    pub fn embedded(&self) -> BTreeSet<usize> {
        (0..self.carrier_len()).map(|x| self.embed(x)).collect()
    }

    pub fn act_letter(&self, l: Letter, p: usize) -> Option<usize> {
        self.action[l.rank(self.group.generator_count())][p]
    }

    /// `w · p`, or `None` when the truncated table runs out.
    pub fn act(&self, w: &Word, p: usize) -> Option<usize> {
        w.letters().iter().rev().try_fold(p, |q, &l| self.act_letter(l, q))
    }

    /// Letter action as a table indexed by letter rank.
    pub fn action_table(&self) -> &[Vec<Option<usize>>] {
        &self.action
    }

    /// Letter permutations; only for exact globalizations.
    pub fn letter_permutations(&self) -> Option<Vec<Vec<usize>>> {
        self.action.iter().map(|row| row.iter().copied().collect::<Option<Vec<_>>>()).collect()
    }

    pub fn point_name(&self, p: usize) -> String {
        let gp = &self.points[p];
        let base = &self.carrier_names[gp.point];
        if gp.word.is_identity() {
            base.clone()
        } else {
            format!("{}.{}", self.group.format_word(&gp.word), base)
        }
    }

    pub fn point_names(&self) -> Vec<String> {
        (0..self.len()).map(|p| self.point_name(p)).collect()
    }

    /// Connected components of the (possibly truncated) letter action, with a
    /// flag telling whether the component is closed under every letter.
    pub fn components(&self) -> Vec<(Vec<usize>, bool)> {
        let mut ds = DisjointSet::new(self.len());
        for row in &self.action {
            for (c, d) in row.iter().enumerate() {
                if let Some(d) = d {
                    ds.union(c, *d);
                }
            }
        }
        ds.classes()
            .into_iter()
            .map(|comp| {
                let closed = comp.iter().all(|&c| self.action.iter().all(|row| row[c].is_some()));
                (comp, closed)
            })
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn corrupt_entry(&mut self, rank: usize, class: usize, value: Option<usize>) {
        self.action[rank][class] = value;
    }
}

/// True iff restricting the global action to the embedded carrier gives back
/// `a` on every letter (and, for finite groups, on every element).
pub fn check_restriction(g: &Globalization, a: &PartialAction) -> bool {
    let n = a.carrier().len();
    if n != g.carrier_len() {
        return false;
    }
    let embedded: HashMap<usize, usize> = (0..n).map(|x| (g.embed(x), x)).collect();
    let mut words: Vec<Word> = a.group().letters().into_iter().map(Word::letter).collect();
    if a.group().is_finite() {
        words.extend(a.group().ball(None));
    }
    for w in &words {
        let Ok(f) = a.evaluate(w) else { return false };
        for x in 0..n {
            let global = g.act(w, g.embed(x)).and_then(|p| embedded.get(&p).copied());
            if f.apply(x) != global {
                // the truncated table may not know images far from X
                if f.apply(x).is_some() || g.act(w, g.embed(x)).is_some() || g.is_exact() {
                    return false;
                }
            }
        }
    }
    true
}

/// Outcome of rebuilding a finite G-set from its restriction to a subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryReport {
    /// Points of `E` hit by each globalization point.
    pub bijection: Vec<usize>,
    pub globalization_size: usize,
}

/// Globalizes `restrict(E, X)` and returns the `G`-equivariant bijection onto
/// `E` that fixes `X`.
pub fn recover_action_on_subset(
    e: &PartialAction,
    subset: &BTreeSet<usize>,
) -> Result<RecoveryReport, GlobalizationError> {
    let group = e.group();
    for (i, f) in e.images().iter().enumerate() {
        if !f.is_total() {
            let element = match group.finite_table() {
                Some(t) => t.elements()[i].clone(),
                None => group.symbols()[i].clone(),
            };
            return Err(GlobalizationError::NotGlobal { element });
        }
    }
    let n = e.carrier().len();
    // orbits of E
    let mut ds = DisjointSet::new(n);
    for (gi, _) in group.symbols().iter().enumerate() {
        for (x, y) in e.generator_image(gi).pairs() {
            ds.union(x, y);
        }
    }
    let missed: Vec<Vec<String>> = ds
        .classes()
        .into_iter()
        .filter(|orbit| !orbit.iter().any(|x| subset.contains(x)))
        .map(|orbit| orbit.iter().map(|&x| e.carrier().name(x).to_string()).collect())
        .collect();
    if !missed.is_empty() {
        return Err(GlobalizationError::OrbitMissed { orbits: missed });
    }
    let restricted = e.restrict(subset)?;
    let glob = globalize(&restricted, 1)?;
    let glob = glob.require_exact()?;
    let sub: Vec<usize> = subset.iter().copied().collect();
    let mut bijection = vec![usize::MAX; glob.len()];
    for ((w, x), &c) in &glob.members {
        let target =
            e.evaluate(w)?.apply(sub[*x]).ok_or_else(|| GlobalizationError::NotRecovered("partial image".into()))?;
        if bijection[c] != usize::MAX && bijection[c] != target {
            return Err(GlobalizationError::NotRecovered(format!("class {c} is not well defined")));
        }
        bijection[c] = target;
    }
    let hit: BTreeSet<usize> = bijection.iter().copied().collect();
    if hit.len() != glob.len() || glob.len() != n {
        return Err(GlobalizationError::NotRecovered(format!("{} classes onto {} points", glob.len(), n)));
    }
    for (i, &x) in sub.iter().enumerate() {
        if bijection[glob.embed(i)] != x {
            return Err(GlobalizationError::NotRecovered(format!("point {x} is moved")));
        }
    }
    for l in group.letters() {
        let f = e.evaluate(&Word::letter(l))?;
        for c in 0..glob.len() {
            let image = glob.act_letter(l, c).expect("exact");
            if f.apply(bijection[c]) != Some(bijection[image]) {
                return Err(GlobalizationError::NotRecovered("not equivariant".into()));
            }
        }
    }
    Ok(RecoveryReport { bijection, globalization_size: glob.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial::Carrier;

    fn pb(n: usize, pairs: &[(usize, usize)]) -> PartialBijection {
        PartialBijection::from_pairs(n, pairs.iter().copied()).unwrap()
    }

    fn z2_swap() -> PartialAction {
        let g = Group::cyclic(2, "s").unwrap();
        PartialAction::new(
            g,
            Carrier::new(&["1", "2"]).unwrap(),
            vec![PartialBijection::identity(2), pb(2, &[(0, 1), (1, 0)])],
        )
        .unwrap()
    }

    fn shift_window(broken: bool) -> PartialAction {
        // carrier: eta, -3..3; u fixes eta and shifts by one inside the window
        let mut names = vec!["eta".to_string()];
        names.extend((-3..=3).map(|i: i32| i.to_string()));
        let idx = |v: i32| (v + 4) as usize;
        let mut pairs = vec![(0, 0)];
        for v in -3..3 {
            if broken && v == 0 {
                continue;
            }
            pairs.push((idx(v), idx(v + 1)));
        }
        let u = pb(8, &pairs);
        PartialAction::new(Group::cyclic_infinite("u").unwrap(), Carrier::new(&names).unwrap(), vec![u]).unwrap()
    }

    #[test]
    fn global_action_globalizes_to_itself() {
        let a = z2_swap();
        let g = globalize(&a, 1).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.is_exact());
        assert_eq!(g.embedded().len(), 2);
        assert!(check_restriction(&g, &a));
    }

    #[test]
    fn swap_restricted_to_one_point() {
        let a = z2_swap().restrict(&[0].into()).unwrap();
        let g = globalize(&a, 1).unwrap();
        assert_eq!(g.len(), 2);
        let s = a.group().parse_word("s").unwrap();
        assert_eq!(g.points()[1], GlobalPoint { word: s.clone(), point: 0 });
        assert_eq!(g.act(&s, 0), Some(1));
        assert_eq!(g.act(&s, 1), Some(0));
        assert!(check_restriction(&g, &a));
    }

    #[test]
    fn unbroken_window_recovers_the_shift() {
        let a = shift_window(false);
        let g = globalize(&a, 3).unwrap();
        let u = a.group().parse_word("u").unwrap();
        let one = a.carrier().index_of("1").unwrap();
        let zero = a.carrier().index_of("0").unwrap();
        // witness k = u^-1: (k u)·0 = 0 and k·1 = 0
        let k = a.group().parse_word("u^-1").unwrap();
        let ku = a.group().multiply(&k, &u);
        assert_eq!(a.evaluate(&ku).unwrap().apply(zero), Some(zero));
        assert_eq!(a.evaluate(&k).unwrap().apply(one), Some(zero));
        assert_eq!(g.class_of(&u, zero), Some(g.embed(one)));
        assert!(check_restriction(&g, &a));
        // an infinite orbit never closes up
        assert!(!g.is_exact());
    }

    #[test]
    fn broken_shift_keeps_the_break() {
        let a = shift_window(true);
        let g = globalize(&a, 3).unwrap();
        let u = a.group().parse_word("u").unwrap();
        let one = a.carrier().index_of("1").unwrap();
        let zero = a.carrier().index_of("0").unwrap();
        assert_ne!(g.class_of(&u, zero), Some(g.embed(one)));
        assert!(check_restriction(&g, &a));
        // eta is its own orbit; the two half windows sit on separate orbits
        let comps = g.components();
        assert_eq!(comps.iter().filter(|(_, closed)| *closed).count(), 1);
        assert_eq!(comps.len(), 3);
    }

    #[test]
    fn partition_is_stable_under_larger_radius() {
        for a in [shift_window(true), shift_window(false)] {
            let small = globalize(&a, 2).unwrap();
            let big = globalize(&a, 5).unwrap();
            for p in small.ball() {
                for q in small.ball() {
                    for x in 0..a.carrier().len() {
                        for y in 0..a.carrier().len() {
                            let same_small = small.class_of(p, x) == small.class_of(q, y);
                            let same_big = big.class_of(p, x) == big.class_of(q, y);
                            assert_eq!(same_small, same_big);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exact_flag_is_stable() {
        // a free action that is already global on a finite set
        let g = Group::free(&["a"]).unwrap();
        let a = PartialAction::new(g, Carrier::numbered(3), vec![pb(3, &[(0, 1), (1, 2), (2, 0)])]).unwrap();
        let r1 = globalize(&a, 1).unwrap();
        assert!(r1.is_exact());
        assert_eq!(r1.len(), 3);
        let r3 = globalize(&a, 3).unwrap();
        assert!(r3.is_exact());
        assert_eq!(r3.len(), 3);
    }

    #[test]
    fn corrupted_table_fails_restriction_check() {
        let a = z2_swap().restrict(&[0].into()).unwrap();
        let mut g = globalize(&a, 1).unwrap();
        assert!(check_restriction(&g, &a));
        g.corrupt_entry(0, 0, Some(0));
        assert!(!check_restriction(&g, &a));
    }

    fn regular_z3() -> PartialAction {
        let g = Group::cyclic(3, "a").unwrap();
        let t = g.finite_table().unwrap();
        let images = (0..3).map(|e| PartialBijection::from_permutation(&t.table()[e]).unwrap()).collect();
        PartialAction::new(g, Carrier::new(&["0", "1", "2"]).unwrap(), images).unwrap()
    }

    #[test]
    fn recover_regular_z3_from_one_point() {
        let e = regular_z3();
        let r = recover_action_on_subset(&e, &[0].into()).unwrap();
        assert_eq!(r.globalization_size, 3);
        let mut sorted = r.bijection.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_eq!(r.bijection[0], 0);
    }

    #[test]
    fn recover_from_everything_is_identity() {
        let e = regular_z3();
        let r = recover_action_on_subset(&e, &[0, 1, 2].into()).unwrap();
        assert_eq!(r.bijection, vec![0, 1, 2]);
    }

    #[test]
    fn missed_orbit_is_named() {
        let g = Group::cyclic(2, "s").unwrap();
        let e = PartialAction::new(
            g,
            Carrier::new(&["a", "b", "c", "d"]).unwrap(),
            vec![PartialBijection::identity(4), pb(4, &[(0, 1), (1, 0), (2, 3), (3, 2)])],
        )
        .unwrap();
        let err = recover_action_on_subset(&e, &[0].into()).unwrap_err();
        assert_eq!(err, GlobalizationError::OrbitMissed { orbits: vec![vec!["c".into(), "d".into()]] });
    }
}
