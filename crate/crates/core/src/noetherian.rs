//! Dense invariant open sets whose pairs can be moved into a given dense open.
//!
//! For a finite space `Y`, a group acting by homeomorphisms and a dense open
//! `X`, computes `U` dense, open and invariant such that every pair of points
//! of `U` is sent into `X` by a single group element.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::group::Word;
use crate::perm::PermGroup;
use crate::space::{FiniteSpace, PointSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("X is not a dense open subset")]
    XNotDenseOpen,
    #[error("generator `{0}` is not a homeomorphism")]
    ActionNotContinuous(String),
    #[error("group degree {degree} does not match {points} points")]
    DegreeMismatch { degree: usize, points: usize },
    #[error("internal check failed: {0}")]
    Internal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreCertificate {
    pub x: PointSet,
    /// `U_x` for every point.
    pub u_sets: Vec<PointSet>,
    pub minimal_dense_open: PointSet,
    pub k: PointSet,
    pub w: PointSet,
    pub u_prime: PointSet,
    pub u: PointSet,
    /// First element, in canonical order, sending both points into `X`.
    pub pair_witness: BTreeMap<(usize, usize), Word>,
}

/// `U_x = {y : ∃g, gx ∈ X and gy ∈ X}`, from the group's element list.
pub fn u_set(group: &PermGroup, x_set: &PointSet, x: usize) -> PointSet {
    let mut out = PointSet::new();
    for g in group.elements() {
        if x_set.contains(&g[x]) {
            out.extend((0..group.degree()).filter(|&y| x_set.contains(&g[y])));
        }
    }
    out
}

pub fn noetherian_core(space: &FiniteSpace, group: &PermGroup, x_set: &PointSet) -> Result<CoreCertificate, CoreError> {
    let n = space.len();
    if group.degree() != n {
        return Err(CoreError::DegreeMismatch { degree: group.degree(), points: n });
    }
    if !space.is_open(x_set) || !space.is_dense(x_set) || x_set.iter().any(|&p| p >= n) {
        return Err(CoreError::XNotDenseOpen);
    }
    for (s, g) in group.symbols().iter().zip(group.generators()) {
        if !space.is_automorphism(g) {
            return Err(CoreError::ActionNotContinuous(s.clone()));
        }
    }
    let u_sets: Vec<PointSet> = (0..n).map(|x| u_set(group, x_set, x)).collect();
    for x in 0..n {
        for y in 0..n {
            if u_sets[x].contains(&y) != u_sets[y].contains(&x) {
                return Err(CoreError::Internal(format!("symmetry fails at ({x}, {y})")));
            }
        }
    }
    for h in group.elements() {
        for x in 0..n {
            let moved: PointSet = u_sets[x].iter().map(|&y| h[y]).collect();
            if moved != u_sets[h[x]] {
                return Err(CoreError::Internal(format!("equivariance fails at {x}")));
            }
        }
    }
    // K = closure of the union of the F_x over the minimal dense open
    let minimal = space.minimal_dense_open();
    let mut f_union = PointSet::new();
    for &x in &minimal {
        f_union.extend(space.complement(&u_sets[x]));
    }
    let k = space.closure(&f_union);
    let w = space.complement(&k);
    let mut meet = space.all();
    for &y in &w {
        meet = meet.intersection(&u_sets[y]).copied().collect();
    }
    let u_prime = space.interior(&meet);
    let u: PointSet = u_prime.intersection(&w).copied().collect();
    let mut pair_witness = BTreeMap::new();
    for &a in &u {
        for &b in &u {
            let g = first_pair_witness(group, x_set, a, b)
                .ok_or_else(|| CoreError::Internal(format!("no witness for ({a}, {b})")))?;
            pair_witness.insert((a, b), group.words()[g].clone());
        }
    }
    Ok(CoreCertificate { x: x_set.clone(), u_sets, minimal_dense_open: minimal, k, w, u_prime, u, pair_witness })
}

/// Index of the first element sending `a` and `b` into `X`.
pub fn first_pair_witness(group: &PermGroup, x_set: &PointSet, a: usize, b: usize) -> Option<usize> {
    group.elements().iter().position(|g| x_set.contains(&g[a]) && x_set.contains(&g[b]))
}

/// Violations of the output contract, empty when `cert` is sound.
pub fn check_core(space: &FiniteSpace, group: &PermGroup, cert: &CoreCertificate) -> Vec<String> {
    let mut problems = Vec::new();
    let u = &cert.u;
    if !space.is_open(u) {
        problems.push("U is not open".to_string());
    }
    if !space.is_dense(u) {
        problems.push("U is not dense".to_string());
    }
    for g in group.generators() {
        if u.iter().any(|&p| !u.contains(&g[p])) {
            problems.push("U is not invariant".to_string());
            break;
        }
    }
    let expected: Vec<(usize, usize)> = u.iter().flat_map(|&a| u.iter().map(move |&b| (a, b))).collect();
    if cert.pair_witness.keys().copied().collect::<Vec<_>>() != expected {
        problems.push("pair witness table does not cover U x U".to_string());
    }
    for (&(a, b), w) in &cert.pair_witness {
        let Some(g) = group.perm_of_word(w) else {
            problems.push(format!("witness for ({a}, {b}) uses unknown generators"));
            continue;
        };
        if !cert.x.contains(&g[a]) || !cert.x.contains(&g[b]) {
            problems.push(format!("witness for ({a}, {b}) does not land in X"));
        } else if group.word_of(&g) != Some(w) || first_pair_witness(group, &cert.x, a, b) != group.index_of(&g) {
            problems.push(format!("witness for ({a}, {b}) is not the first one"));
        }
    }
    problems
}

/// `U_{hx} = h U_x` for every element and point.
pub fn equivariance_holds(group: &PermGroup, u_sets: &[PointSet]) -> bool {
    group
        .elements()
        .iter()
        .all(|h| (0..u_sets.len()).all(|x| u_sets[x].iter().map(|&y| h[y]).collect::<PointSet>() == u_sets[h[x]]))
}

/// The group generated by `group` restricted to an invariant subset,
/// renumbered like [`FiniteSpace::subspace`].
pub fn restrict_group(group: &PermGroup, subset: &PointSet) -> PermGroup {
    let pts: Vec<usize> = subset.iter().copied().collect();
    let pos: BTreeMap<usize, usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let gens = group.generators().iter().map(|g| pts.iter().map(|&p| pos[&g[p]]).collect()).collect();
    PermGroup::generate(pts.len(), group.symbols().to_vec(), gens)
}

/// Exhaustive search for an invariant dense open set with the pair property.
pub fn brute_force_core_exists(space: &FiniteSpace, group: &PermGroup, x_set: &PointSet) -> bool {
    space.dense_opens().into_iter().any(|o| {
        group.generators().iter().all(|g| o.iter().all(|&p| o.contains(&g[p])))
            && o.iter().all(|&a| o.iter().all(|&b| first_pair_witness(group, x_set, a, b).is_some()))
    })
}
