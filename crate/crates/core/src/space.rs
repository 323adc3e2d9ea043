//! Finite topological spaces as preorders.
//!
//! `x ≤ y` means `x` lies in the closure of `{y}`. Open sets are up-sets,
//! closures are down-sets, and generic points are maximal.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::partial::PartialBijection;
use crate::perm::Perm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("point index {0} out of range")]
    OutOfRange(usize),
    #[error("relation matrix is not a preorder")]
    NotPreorder,
    #[error("{points} points exceed the cap of {cap}")]
    CapExceeded { points: usize, cap: usize },
}

pub type PointSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    names: Vec<String>,
    le: Vec<Vec<bool>>,
}

impl FiniteSpace {
    /// Reflexive-transitive closure of the given `(x, y)` pairs, `x ≤ y`.
    pub fn new<S: AsRef<str>>(names: &[S], relations: &[(usize, usize)]) -> Result<Self, SpaceError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(SpaceError::DuplicatePoint(n.clone()));
            }
        }
        let n = names.len();
        let mut le = vec![vec![false; n]; n];
        for (x, row) in le.iter_mut().enumerate() {
            row[x] = true;
        }
        for &(x, y) in relations {
            if x >= n || y >= n {
                return Err(SpaceError::OutOfRange(x.max(y)));
            }
            le[x][y] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if le[i][k] {
                    let row = le[k].clone();
                    for (cell, &via) in le[i].iter_mut().zip(&row) {
                        *cell |= via;
                    }
                }
            }
        }
        Ok(FiniteSpace { names, le })
    }

    /// Points named `0, 1, ..`.
    pub fn numbered(n: usize, relations: &[(usize, usize)]) -> Result<Self, SpaceError> {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        FiniteSpace::new(&names, relations)
    }

    /// From a full relation matrix, which must already be a preorder.
    pub fn from_matrix(names: Vec<String>, le: Vec<Vec<bool>>) -> Result<Self, SpaceError> {
        let n = names.len();
        if le.len() != n || le.iter().any(|r| r.len() != n) {
            return Err(SpaceError::NotPreorder);
        }
        let reflexive = (0..n).all(|x| le[x][x]);
        let transitive = (0..n).all(|x| (0..n).all(|y| !le[x][y] || (0..n).all(|z| !le[y][z] || le[x][z])));
        if !reflexive || !transitive {
            return Err(SpaceError::NotPreorder);
        }
        Ok(FiniteSpace { names, le })
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

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn le(&self, x: usize, y: usize) -> bool {
        self.le[x][y]
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        self.le[x][y] && !self.le[y][x]
    }

    pub fn matrix(&self) -> &[Vec<bool>] {
        &self.le
    }

    pub fn all(&self) -> PointSet {
        (0..self.len()).collect()
    }

    pub fn complement(&self, s: &PointSet) -> PointSet {
        (0..self.len()).filter(|x| !s.contains(x)).collect()
    }

    /// Down-closure.
    pub fn closure(&self, s: &PointSet) -> PointSet {
        (0..self.len()).filter(|&x| s.iter().any(|&y| self.le[x][y])).collect()
    }

    /// Up-closure: the smallest open set containing `s`.
    pub fn up_closure(&self, s: &PointSet) -> PointSet {
        (0..self.len()).filter(|&y| s.iter().any(|&x| self.le[x][y])).collect()
    }

    /// Largest up-closed subset.
    pub fn interior(&self, s: &PointSet) -> PointSet {
        s.iter().copied().filter(|&x| (0..self.len()).all(|y| !self.le[x][y] || s.contains(&y))).collect()
    }

    pub fn is_open(&self, s: &PointSet) -> bool {
        s.iter().all(|&x| (0..self.len()).all(|y| !self.le[x][y] || s.contains(&y)))
    }

    pub fn is_closed(&self, s: &PointSet) -> bool {
        self.is_open(&self.complement(s))
    }

    pub fn is_dense(&self, s: &PointSet) -> bool {
        self.closure(s).len() == self.len()
    }

    /// Length of the longest strict chain ending at each point.
    pub fn dimensions(&self) -> Vec<usize> {
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        // points below x come first: sort by the size of their closures
        let below: Vec<usize> = (0..n).map(|x| (0..n).filter(|&y| self.le[y][x]).count()).collect();
        order.sort_by_key(|&x| below[x]);
        let mut dim = vec![0; n];
        for &x in &order {
            dim[x] = (0..n).filter(|&y| self.lt(y, x)).map(|y| dim[y] + 1).max().unwrap_or(0);
        }
        dim
    }

    pub fn dimension(&self) -> usize {
        self.dimensions().into_iter().max().unwrap_or(0)
    }

    /// `X_0, X_1, ..`, up to the dimension of the space.
    pub fn strata(&self) -> Vec<PointSet> {
        let dims = self.dimensions();
        let mut out = vec![PointSet::new(); self.dimension() + 1];
        for (x, &d) in dims.iter().enumerate() {
            out[d].insert(x);
        }
        out
    }

    /// `X_{≥i}`.
    pub fn at_least(&self, i: usize) -> PointSet {
        self.dimensions().into_iter().enumerate().filter(|&(_, d)| d >= i).map(|(x, _)| x).collect()
    }

    /// The generic point, when exactly one point has the whole space as
    /// its closure.
    pub fn generic_point(&self) -> Option<usize> {
        let tops: Vec<usize> = (0..self.len()).filter(|&x| (0..self.len()).all(|y| self.le[y][x])).collect();
        match tops.as_slice() {
            [eta] => Some(*eta),
            _ => None,
        }
    }

    pub fn is_irreducible(&self) -> bool {
        self.generic_point().is_some()
    }

    pub fn maximal_points(&self) -> PointSet {
        (0..self.len()).filter(|&x| (0..self.len()).all(|y| !self.lt(x, y))).collect()
    }

    /// The smallest dense open set: the maximal points.
    pub fn minimal_dense_open(&self) -> PointSet {
        self.maximal_points()
    }

    /// Every open set, as sorted point sets; only for small spaces.
    pub fn opens(&self) -> Vec<PointSet> {
        let n = self.len();
        assert!(n <= 20, "open-set enumeration is exponential");
        let up: Vec<u32> = (0..n).map(|x| (0..n).filter(|&y| self.le[x][y]).fold(0u32, |m, y| m | 1 << y)).collect();
        (0u32..1 << n)
            .filter(|&m| (0..n).all(|x| m >> x & 1 == 0 || up[x] & !m == 0))
            .map(|m| (0..n).filter(|&x| m >> x & 1 == 1).collect())
            .collect()
    }

    pub fn dense_opens(&self) -> Vec<PointSet> {
        let maximal = self.maximal_points();
        self.opens().into_iter().filter(|o| maximal.is_subset(o)).collect()
    }

    /// Induced preorder on `s`, points renumbered in increasing order.
    pub fn subspace(&self, s: &PointSet) -> FiniteSpace {
        let pts: Vec<usize> = s.iter().copied().collect();
        FiniteSpace {
            names: pts.iter().map(|&x| self.names[x].clone()).collect(),
            le: pts.iter().map(|&x| pts.iter().map(|&y| self.le[x][y]).collect()).collect(),
        }
    }

    /// `x ≤ y ⟹ f(x) ≤ f(y)` on the domain.
    pub fn is_monotone(&self, target: &FiniteSpace, f: &PartialBijection) -> bool {
        f.pairs().all(|(x, fx)| f.pairs().all(|(y, fy)| !self.le[x][y] || target.le[fx][fy]))
    }

    /// Order isomorphism between an open subset of `self` and an open
    /// subset of `target`.
    pub fn is_partial_homeomorphism(&self, target: &FiniteSpace, f: &PartialBijection) -> bool {
        f.carrier_len() == self.len()
            && self.len() == target.len()
            && self.is_open(&f.domain())
            && target.is_open(&f.image())
            && f.pairs().all(|(x, fx)| f.pairs().all(|(y, fy)| self.le[x][y] == target.le[fx][fy]))
    }

    pub fn is_automorphism(&self, p: &[usize]) -> bool {
        let n = self.len();
        p.len() == n && (0..n).all(|x| (0..n).all(|y| self.le[x][y] == self.le[p[x]][p[y]]))
    }

    /// All order automorphisms, lexicographically.
    pub fn automorphisms(&self, cap: usize) -> Result<Vec<Perm>, SpaceError> {
        let n = self.len();
        if n > cap {
            return Err(SpaceError::CapExceeded { points: n, cap });
        }
        let mut out = Vec::new();
        let mut image = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.extend_automorphism(&mut image, &mut used, &mut out);
        Ok(out)
    }

    fn extend_automorphism(&self, image: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Perm>) {
        let x = image.len();
        if x == self.len() {
            out.push(image.clone());
            return;
        }
        for y in 0..self.len() {
            if used[y] {
                continue;
            }
            let fits = (0..x).all(|z| self.le[z][x] == self.le[image[z]][y] && self.le[x][z] == self.le[y][image[z]])
                && self.le[x][x] == self.le[y][y];
            if fits {
                used[y] = true;
                image.push(y);
                self.extend_automorphism(image, used, out);
                image.pop();
                used[y] = false;
            }
        }
    }

    /// Covering pairs `x < y` with nothing strictly between, plus one cycle
    /// per equivalence class; their reflexive-transitive closure is `≤`.
    pub fn generating_relations(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        let rep: Vec<usize> = (0..n).map(|x| (0..n).find(|&y| self.le[x][y] && self.le[y][x]).unwrap()).collect();
        for x in 0..n {
            let class: Vec<usize> = (0..n).filter(|&y| rep[y] == rep[x]).collect();
            if rep[x] == x && class.len() > 1 {
                for w in class.windows(2) {
                    out.push((w[0], w[1]));
                }
                out.push((class[class.len() - 1], class[0]));
            }
        }
        for x in (0..n).filter(|&x| rep[x] == x) {
            for y in (0..n).filter(|&y| rep[y] == y) {
                if self.lt(x, y) && !(0..n).any(|z| self.lt(x, z) && self.lt(z, y)) {
                    out.push((x, y));
                }
            }
        }
        out.sort_unstable();
        out
    }
}
