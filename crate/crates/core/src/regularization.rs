//! The glued topology on a globalization and the dimension-descending
//! pipeline that finds a dense invariant open subset with the pair property.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::commensuration::{CertificateViolation, Transfixer};
use crate::globalization::{globalize, Globalization, GlobalizationError};
use crate::group::{Group, Word};
use crate::noetherian::{check_core, noetherian_core, restrict_group, CoreCertificate, CoreError};
use crate::partial::{Carrier, PartialAction, PartialBijection, PartialError};
use crate::perm::{compose_perm, PermGroup};
use crate::space::{FiniteSpace, PointSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularizationError {
    #[error("the carrier space is not irreducible")]
    NotIrreducible,
    #[error("the domain of `{0}` is not dense")]
    DomainNotDense(String),
    #[error("`{0}` is not a partial homeomorphism between open subsets")]
    NotPartialHomeomorphism(String),
    #[error("space has {space} points but the carrier has {carrier}")]
    SizeMismatch { space: usize, carrier: usize },
    #[error("chart `{0}` is not homeomorphic to the carrier")]
    NonHomeomorphicChart(String),
    #[error("stage {stage}: transfixer `{strategy}` produced no strip")]
    TransfixerFailed { stage: usize, strategy: &'static str },
    #[error("invalid transfixing certificate: {0}")]
    InvalidCertificate(CertificateViolation),
    #[error("stage {stage}: no Neumann witness in the group")]
    NeumannFailed { stage: usize },
    #[error("stage {stage}: {what}")]
    StageInvariant { stage: usize, what: String },
    #[error(transparent)]
    Globalization(#[from] GlobalizationError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Partial(#[from] PartialError),
}

/// A globalization with its glued topology and the finite group of
/// permutations the action induces on it.
#[derive(Clone, Debug)]
pub struct TopGlobalization {
    glob: Globalization,
    carrier: FiniteSpace,
    space: FiniteSpace,
    group: PermGroup,
    embedded: Vec<usize>,
    dense: bool,
}

/// Glues the charts `gX`, each a copy of the carrier, into one preorder.
pub fn glued_topology(glob: &Globalization, carrier: &FiniteSpace) -> Result<TopGlobalization, RegularizationError> {
    glob.require_exact()?;
    if carrier.len() != glob.carrier_len() {
        return Err(RegularizationError::SizeMismatch { space: carrier.len(), carrier: glob.carrier_len() });
    }
    let k = glob.group().generator_count();
    let perms = glob.letter_permutations().expect("exact");
    let group = PermGroup::generate(glob.len(), glob.group().symbols().to_vec(), perms[..k].to_vec());
    let embedded: Vec<usize> = (0..carrier.len()).map(|x| glob.embed(x)).collect();
    let n = carrier.len();
    let mut relations = Vec::new();
    for p in group.elements() {
        for x in 0..n {
            for y in 0..n {
                if carrier.le(x, y) {
                    relations.push((p[embedded[x]], p[embedded[y]]));
                }
            }
        }
    }
    let space = FiniteSpace::new(&glob.point_names(), &relations).expect("indices in range");
    for (p, w) in group.elements().iter().zip(group.words()) {
        let chart: PointSet = embedded.iter().map(|&e| p[e]).collect();
        let iso = (0..n).all(|x| (0..n).all(|y| space.le(p[embedded[x]], p[embedded[y]]) == carrier.le(x, y)));
        if !space.is_open(&chart) || !iso {
            return Err(RegularizationError::NonHomeomorphicChart(group.format_word(w)));
        }
    }
    let dense = space.is_dense(&embedded.iter().copied().collect());
    Ok(TopGlobalization { glob: glob.clone(), carrier: carrier.clone(), space, group, embedded, dense })
}

impl TopGlobalization {
    pub fn globalization(&self) -> &Globalization {
        &self.glob
    }

    pub fn carrier(&self) -> &FiniteSpace {
        &self.carrier
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    /// The action on the globalization as a permutation group.
    pub fn group(&self) -> &PermGroup {
        &self.group
    }

    pub fn embedded(&self) -> PointSet {
        self.embedded.iter().copied().collect()
    }

    pub fn embed(&self, x: usize) -> usize {
        self.embedded[x]
    }

    /// The carrier is dense in the glued space.
    pub fn is_dense(&self) -> bool {
        self.dense
    }

    pub fn image(&self, g: usize, set: &PointSet) -> PointSet {
        let p = &self.group.elements()[g];
        set.iter().map(|&x| p[x]).collect()
    }

    /// `⋃_{g ∈ J} gZ`.
    pub fn sweep(&self, j: &[usize], z: &PointSet) -> PointSet {
        j.iter().flat_map(|&g| self.image(g, z)).collect()
    }

    pub fn is_invariant(&self, set: &PointSet) -> bool {
        self.group.generators().iter().all(|g| set.iter().all(|&x| set.contains(&g[x])))
    }

    pub fn saturate(&self, set: &PointSet) -> PointSet {
        self.group.orbits().into_iter().filter(|o| o.iter().any(|x| set.contains(x))).flatten().collect()
    }

    fn inverse_index(&self, g: usize) -> usize {
        let inv = crate::perm::invert_perm(&self.group.elements()[g]);
        self.group.index_of(&inv).expect("closed under inverses")
    }

    /// The global action restricted to an invariant subset, with the
    /// subspace topology, in the input format of [`regularize`].
    pub fn restricted_action(&self, set: &PointSet) -> Result<(PartialAction, FiniteSpace), RegularizationError> {
        let sub = self.space.subspace(set);
        let pts: Vec<usize> = set.iter().copied().collect();
        let pos: BTreeMap<usize, usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let source: &Group = self.glob.group();
        let as_bijection = |w: &Word| -> Result<PartialBijection, PartialError> {
            let p = self.group.perm_of_word(w).expect("same generators");
            PartialBijection::from_pairs(pts.len(), pts.iter().map(|&x| (pos[&x], pos[&p[x]])))
        };
        let images = match source.finite_table() {
            Some(t) => (0..t.order()).map(|e| as_bijection(t.canonical_word(e))).collect::<Result<Vec<_>, _>>()?,
            None => (0..source.generator_count())
                .map(|i| as_bijection(&Word::letter(crate::group::Letter::positive(i))))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let action = PartialAction::new(source.clone(), Carrier::new(sub.names())?, images)?;
        Ok((action, sub))
    }
}

/// Everything one induction stage computed, in the order it computed it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub i: usize,
    /// Element indices into the group of the glued space.
    pub j: Vec<usize>,
    pub z: PointSet,
    pub y: PointSet,
    pub k: PointSet,
    pub y_i: PointSet,
    /// Largest `|hK_i ∩ Y_i|` over the group.
    pub max_hk_meet: usize,
    pub l: PointSet,
    pub l_dot: PointSet,
    pub z_prime: PointSet,
    pub y_prime: PointSet,
    pub y_prime_i: PointSet,
    /// `G · Y'_i`.
    pub hull: PointSet,
    pub h: usize,
    /// `Y'_i` was already invariant, so `h` is the identity without search.
    pub degenerate: bool,
    pub j_next: Vec<usize>,
}

fn stratum(dims: &[usize], set: &PointSet, i: usize) -> PointSet {
    set.iter().copied().filter(|&x| dims[x] == i).collect()
}

fn at_least(dims: &[usize], set: &PointSet, i: usize) -> PointSet {
    set.iter().copied().filter(|&x| dims[x] >= i).collect()
}

/// One step of the induction at dimension `i`, from `J` and `Z`.
pub fn sepcore_stage(
    t: &TopGlobalization,
    i: usize,
    j: &[usize],
    z: &PointSet,
    transfixer: &Transfixer,
) -> Result<StageRecord, RegularizationError> {
    let space = t.space();
    let dims = space.dimensions();
    let y = t.sweep(j, z);
    let k = space.complement(&y);
    let y_i = stratum(&dims, &y, i);
    let k_i = stratum(&dims, &k, i);
    let max_hk_meet = (0..t.group.order()).map(|h| t.image(h, &k_i).intersection(&y_i).count()).max().unwrap_or(0);

    let orbits = t.group.orbits();
    let l = match transfixer {
        Transfixer::FiniteExact => orbits
            .iter()
            .filter(|o| !o.iter().all(|p| y_i.contains(p)))
            .flatten()
            .copied()
            .filter(|p| y_i.contains(p))
            .collect::<PointSet>(),
        Transfixer::Staged(strips) => {
            let l = strips.get(&i).cloned().unwrap_or_default();
            check_strip(t, i, &y_i, &l)?;
            l
        }
        other => return Err(RegularizationError::TransfixerFailed { stage: i, strategy: other.name() }),
    };
    let l_dot = space.closure(&l);
    let mut removed = PointSet::new();
    for &g in j {
        removed.extend(t.image(t.inverse_index(g), &l_dot));
    }
    let z_prime: PointSet = z.difference(&removed).copied().collect();
    let y_prime = t.sweep(j, &z_prime);
    let y_prime_i = stratum(&dims, &y_prime, i);
    let hull = t.saturate(&y_prime_i);

    let (h, degenerate) = if hull == y_prime_i {
        (0, true)
    } else {
        let h = (0..t.group.order())
            .find(|&h| y_prime_i.union(&t.image(h, &y_prime_i)).copied().collect::<PointSet>() == hull)
            .ok_or(RegularizationError::NeumannFailed { stage: i })?;
        (h, false)
    };
    let mut next: BTreeSet<usize> = j.iter().copied().collect();
    for &g in j {
        let hg = compose_perm(&t.group.elements()[h], &t.group.elements()[g]);
        next.insert(t.group.index_of(&hg).expect("closed"));
    }
    let j_next: Vec<usize> = next.into_iter().collect();
    Ok(StageRecord {
        i,
        j: j.to_vec(),
        z: z.clone(),
        y,
        k,
        y_i,
        max_hk_meet,
        l,
        l_dot,
        z_prime,
        y_prime,
        y_prime_i,
        hull,
        h,
        degenerate,
        j_next,
    })
}

/// `L ⊆ Y_i` and every orbit meeting `Y_i ∖ L` lies inside it.
fn check_strip(t: &TopGlobalization, i: usize, y_i: &PointSet, l: &PointSet) -> Result<(), RegularizationError> {
    let rest: PointSet = y_i.difference(l).copied().collect();
    let bad = |p: usize| {
        RegularizationError::InvalidCertificate(CertificateViolation::BadStrip {
            stage: i,
            point: t.space.name(p).to_string(),
        })
    };
    if let Some(&p) = l.iter().find(|p| !y_i.contains(p)) {
        return Err(bad(p));
    }
    for orbit in t.group.orbits() {
        if orbit.iter().any(|p| rest.contains(p)) {
            if let Some(&p) = orbit.iter().find(|p| !rest.contains(p)) {
                return Err(bad(p));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RegularizationResult {
    pub top: TopGlobalization,
    pub d: usize,
    pub stages: Vec<StageRecord>,
    pub final_j: Vec<usize>,
    pub final_z: PointSet,
    pub noetherian_open: PointSet,
    /// Points of the noetherian open, in increasing order; the core
    /// certificate is indexed by position in this list.
    pub core_points: Vec<usize>,
    pub core: CoreCertificate,
}

impl RegularizationResult {
    pub fn word(&self, g: usize) -> &Word {
        &self.top.group.words()[g]
    }

    pub fn final_words(&self) -> Vec<&Word> {
        self.final_j.iter().map(|&g| self.word(g)).collect()
    }

    /// The core `U`, in points of the glued space.
    pub fn u(&self) -> PointSet {
        self.core.u.iter().map(|&p| self.core_points[p]).collect()
    }

    pub fn core_space(&self) -> FiniteSpace {
        self.top.space.subspace(&self.noetherian_open)
    }

    pub fn core_group(&self) -> PermGroup {
        restrict_group(&self.top.group, &self.noetherian_open)
    }

    /// Re-checks every stage and the final output; empty when sound.
    pub fn verify(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let t = &self.top;
        let dims = t.space.dimensions();
        let mut j = vec![0usize];
        let mut z = t.embedded();
        for (step, stage) in self.stages.iter().enumerate() {
            let i = self.d - step;
            if stage.i != i || stage.j != j || stage.z != z {
                problems.push(format!("stage {i}: inputs do not chain from the previous stage"));
            }
            let strips = BTreeMap::from([(i, stage.l.clone())]);
            match sepcore_stage(t, i, &j, &z, &Transfixer::Staged(strips)) {
                Ok(replay) if replay == *stage => {}
                Ok(_) => problems.push(format!("stage {i}: replay differs from the record")),
                Err(e) => problems.push(format!("stage {i}: {e}")),
            }
            let swept = at_least(&dims, &t.sweep(&stage.j_next, &stage.z_prime), i);
            if !t.is_invariant(&swept) {
                problems.push(format!("stage {i}: sweep above dimension {i} is not invariant"));
            }
            if stage.j_next.len() > 1 << (self.d - i) {
                problems.push(format!("stage {i}: |J| = {} exceeds 2^{}", stage.j_next.len(), self.d - i));
            }
            j = stage.j_next.clone();
            z = stage.z_prime.clone();
        }
        if self.stages.len() != self.d + 1 {
            problems.push("wrong number of stages".into());
        }
        if self.final_j != j || self.final_z != z {
            problems.push("final J, Z do not match the last stage".into());
        }
        let y = t.sweep(&self.final_j, &self.final_z);
        if y != self.noetherian_open {
            problems.push("noetherian open is not the sweep of the final J, Z".into());
        }
        if !t.space.is_open(&y) || !t.space.is_dense(&y) || !t.is_invariant(&y) {
            problems.push("noetherian open is not open, dense and invariant".into());
        }
        if self.core_points != y.iter().copied().collect::<Vec<_>>() {
            problems.push("core point list does not match the noetherian open".into());
        }
        let x_in_y: PointSet =
            (0..self.core_points.len()).filter(|&p| t.embedded.contains(&self.core_points[p])).collect();
        if self.core.x != x_in_y {
            problems.push("core was not computed for X inside Y".into());
        }
        let space = self.core_space();
        let group = self.core_group();
        match noetherian_core(&space, &group, &x_in_y) {
            Ok(c) if c == self.core => {}
            Ok(_) => problems.push("core certificate differs from recomputation".into()),
            Err(e) => problems.push(format!("core: {e}")),
        }
        problems.extend(check_core(&space, &group, &self.core).into_iter().map(|p| format!("core: {p}")));
        problems
    }
}

fn domain_checks(a: &PartialAction, space: &FiniteSpace) -> Result<(), RegularizationError> {
    let group = a.group();
    let named: Vec<(String, &PartialBijection)> = match group.finite_table() {
        Some(t) => t.elements().iter().cloned().zip(a.images()).collect(),
        None => group.symbols().iter().cloned().zip(a.images()).collect(),
    };
    for (name, f) in named {
        if !space.is_partial_homeomorphism(space, f) {
            return Err(RegularizationError::NotPartialHomeomorphism(name));
        }
        if !space.is_dense(&f.domain()) {
            return Err(RegularizationError::DomainNotDense(name));
        }
    }
    Ok(())
}

/// Runs the whole pipeline on a partial action by partial homeomorphisms of
/// an irreducible finite space.
pub fn regularize(
    a: &PartialAction,
    space: &FiniteSpace,
    radius: usize,
    transfixer: &Transfixer,
) -> Result<RegularizationResult, RegularizationError> {
    if space.len() != a.carrier().len() {
        return Err(RegularizationError::SizeMismatch { space: space.len(), carrier: a.carrier().len() });
    }
    if !space.is_irreducible() {
        return Err(RegularizationError::NotIrreducible);
    }
    domain_checks(a, space)?;
    let glob = globalize(a, radius)?;
    let top = glued_topology(&glob, space)?;
    let d = space.dimension();
    let dims = top.space.dimensions();
    let mut j = vec![0usize];
    let mut z = top.embedded();
    let mut stages = Vec::with_capacity(d + 1);
    for i in (0..=d).rev() {
        let stage = sepcore_stage(&top, i, &j, &z, transfixer)?;
        let swept = at_least(&dims, &top.sweep(&stage.j_next, &stage.z_prime), i);
        if !top.is_invariant(&swept) {
            return Err(RegularizationError::StageInvariant { stage: i, what: "sweep is not invariant".into() });
        }
        if stage.j_next.len() > 1 << (d - i) {
            return Err(RegularizationError::StageInvariant { stage: i, what: "J is too large".into() });
        }
        j = stage.j_next.clone();
        z = stage.z_prime.clone();
        stages.push(stage);
    }
    let noetherian_open = top.sweep(&j, &z);
    let core_points: Vec<usize> = noetherian_open.iter().copied().collect();
    let sub = top.space.subspace(&noetherian_open);
    let group = restrict_group(&top.group, &noetherian_open);
    let x_in_y: PointSet = (0..core_points.len()).filter(|&p| top.embedded.contains(&core_points[p])).collect();
    let core = noetherian_core(&sub, &group, &x_in_y)?;
    let result = RegularizationResult { top, d, stages, final_j: j, final_z: z, noetherian_open, core_points, core };
    if let Some(problem) = result.verify().into_iter().next() {
        return Err(RegularizationError::StageInvariant { stage: 0, what: problem });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> PointSet {
        v.iter().copied().collect()
    }

    /// η above c0, c1, c2; the involution fixes η, swaps c1 and c2, and is
    /// undefined at c0.
    fn z2_line() -> (PartialAction, FiniteSpace) {
        let space = FiniteSpace::new(&["eta", "c0", "c1", "c2"], &[(1, 0), (2, 0), (3, 0)]).unwrap();
        let g = Group::cyclic(2, "s").unwrap();
        let s = PartialBijection::from_pairs(4, [(0, 0), (2, 3), (3, 2)]).unwrap();
        let a = PartialAction::new(g, Carrier::new(space.names()).unwrap(), vec![PartialBijection::identity(4), s])
            .unwrap();
        (a, space)
    }

    fn names(t: &TopGlobalization, s: &PointSet) -> Vec<String> {
        s.iter().map(|&p| t.space().name(p).to_string()).collect()
    }

    #[test]
    fn glued_line_adds_one_closed_point() {
        let (a, space) = z2_line();
        let glob = globalize(&a, 1).unwrap();
        let t = glued_topology(&glob, &space).unwrap();
        assert_eq!(t.space().len(), 5);
        assert_eq!(t.space().name(4), "s.c0");
        assert!(t.space().le(4, 0));
        assert_eq!(t.space().maximal_points(), set(&[0]));
        assert!(t.is_dense());
        let s = &t.group().generators()[0];
        assert_eq!(s[1], 4);
    }

    #[test]
    fn z2_line_pipeline() {
        let (a, space) = z2_line();
        let r = regularize(&a, &space, 1, &Transfixer::FiniteExact).unwrap();
        assert_eq!(r.d, 1);
        let stage0 = &r.stages[1];
        assert_eq!(names(&r.top, &stage0.k), vec!["s.c0"]);
        assert_eq!(names(&r.top, &stage0.y_i), vec!["c0", "c1", "c2"]);
        assert_eq!(names(&r.top, &stage0.l), vec!["c0"]);
        assert_eq!(names(&r.top, &stage0.l_dot), vec!["c0"]);
        assert_eq!(names(&r.top, &stage0.z_prime), vec!["eta", "c1", "c2"]);
        assert!(stage0.degenerate);
        assert_eq!(r.final_j, vec![0]);
        assert_eq!(names(&r.top, &r.noetherian_open), vec!["eta", "c1", "c2"]);
        assert_eq!(names(&r.top, &r.u()), vec!["eta", "c1", "c2"]);
        assert!(r.core.pair_witness.values().all(Word::is_identity));
        assert!(r.verify().is_empty());
    }

    #[test]
    fn global_action_is_left_alone() {
        let space = FiniteSpace::new(&["eta", "c0", "c1", "c2"], &[(1, 0), (2, 0), (3, 0)]).unwrap();
        let g = Group::cyclic(2, "s").unwrap();
        let s = PartialBijection::from_pairs(4, [(0, 0), (1, 1), (2, 3), (3, 2)]).unwrap();
        let a = PartialAction::new(g, Carrier::new(space.names()).unwrap(), vec![PartialBijection::identity(4), s])
            .unwrap();
        let r = regularize(&a, &space, 1, &Transfixer::FiniteExact).unwrap();
        assert_eq!(r.top.space(), &space);
        assert_eq!(r.u(), space.all());
        assert_eq!(r.final_j, vec![0]);
        assert!(r.stages.iter().all(|s| s.l.is_empty() && s.h == 0));
    }

    #[test]
    fn idempotent_on_the_core() {
        let (a, space) = z2_line();
        let r = regularize(&a, &space, 1, &Transfixer::FiniteExact).unwrap();
        let (b, sub) = r.top.restricted_action(&r.u()).unwrap();
        let again = regularize(&b, &sub, 1, &Transfixer::FiniteExact).unwrap();
        assert_eq!(again.u(), sub.all());
        assert_eq!(again.top.space(), &sub);
    }

    #[test]
    fn staged_strips_are_checked() {
        let (a, space) = z2_line();
        let bad = Transfixer::Staged(BTreeMap::from([(0, set(&[]))]));
        assert!(matches!(
            regularize(&a, &space, 1, &bad),
            Err(RegularizationError::InvalidCertificate(CertificateViolation::BadStrip { stage: 0, .. }))
        ));
        let good = Transfixer::Staged(BTreeMap::from([(0, set(&[1]))]));
        let r = regularize(&a, &space, 1, &good).unwrap();
        assert_eq!(r.u().len(), 3);
    }

    #[test]
    fn non_dense_domain_is_rejected() {
        let space = FiniteSpace::new(&["eta", "c0"], &[(1, 0)]).unwrap();
        let g = Group::cyclic(2, "s").unwrap();
        let a = PartialAction::new(
            g,
            Carrier::new(space.names()).unwrap(),
            vec![PartialBijection::identity(2), PartialBijection::empty(2)],
        )
        .unwrap();
        assert_eq!(
            regularize(&a, &space, 1, &Transfixer::FiniteExact).unwrap_err(),
            RegularizationError::DomainNotDense("s".into())
        );
        // two disjoint copies: X stays open but is no longer dense
        let t = glued_topology(&globalize(&a, 1).unwrap(), &space).unwrap();
        assert_eq!(t.space().len(), 4);
        assert!(t.space().is_open(&t.embedded()));
        assert!(!t.is_dense());
    }

    #[test]
    fn reducible_carrier_is_rejected() {
        let space = FiniteSpace::numbered(2, &[]).unwrap();
        let g = Group::free(&["s"]).unwrap();
        let a =
            PartialAction::new(g, Carrier::new(space.names()).unwrap(), vec![PartialBijection::identity(2)]).unwrap();
        assert_eq!(
            regularize(&a, &space, 1, &Transfixer::FiniteExact).unwrap_err(),
            RegularizationError::NotIrreducible
        );
    }
}
