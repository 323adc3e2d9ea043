//! Built-in instances: the Cremona involution over small fields, ℤ-shift
//! instances and a handful of finite-group actions on curve-like spaces.

use std::collections::{BTreeSet, HashMap};

use crate::field::{Field, UnsupportedField};
use crate::format::Instance;
use crate::group::Group;
use crate::partial::{Carrier, PartialAction, PartialBijection};
use crate::perm::{compose_perm, invert_perm};
use crate::space::FiniteSpace;
use crate::zset::ZSubset;

/// Every name accepted by [`example`], in listing order.
pub const NAMES: &[&str] = &[
    "z2-a1",
    "z2-a1-global",
    "z2-a2",
    "z3-a1",
    "s3-a1",
    "z2-swap",
    "z2-broken",
    "free-global",
    "cremona-2",
    "cremona-3",
    "cremona-4",
    "cremona-5",
    "cremona-7",
    "cremona-8",
    "cremona-9",
    "zshift-N",
    "zshift-singleton",
    "zshift-evens",
    "zshift-broken",
    "zshift-window",
];

pub fn example(name: &str) -> Option<Instance> {
    let inst = match name {
        "z2-a1" => z2_a1(false),
        "z2-a1-global" => z2_a1(true),
        "z2-a2" => z2_a2(),
        "z3-a1" => z3_a1(),
        "s3-a1" => s3_a1(),
        "z2-swap" => z2_swap(),
        "z2-broken" => z2_broken(),
        "free-global" => free_global(),
        "zshift-N" => gen_zshift(ZShift::Naturals),
        "zshift-singleton" => gen_zshift(ZShift::Singleton),
        "zshift-evens" => gen_zshift(ZShift::Evens),
        "zshift-broken" => gen_zshift(ZShift::BrokenWindow),
        "zshift-window" => gen_zshift(ZShift::Window),
        other => {
            let q = other.strip_prefix("cremona-")?.parse().ok()?;
            gen_cremona(q).ok()?
        }
    };
    Some(inst)
}

/// All named instances.
pub fn corpus() -> Vec<(&'static str, Instance)> {
    NAMES.iter().map(|&n| (n, example(n).expect("listed example"))).collect()
}

/// Named instances whose action satisfies the axioms (everything except
/// `z2-broken`).
pub fn valid_corpus() -> Vec<(&'static str, Instance)> {
    corpus().into_iter().filter(|(n, _)| *n != "z2-broken").collect()
}

fn build(space: FiniteSpace, group: Group, images: Vec<PartialBijection>) -> Instance {
    let carrier = Carrier::new(space.names()).expect("distinct names");
    let action = PartialAction::new(group, carrier, images).expect("well-formed example");
    Instance::action(space, action)
}

fn pb(n: usize, pairs: &[(usize, usize)]) -> PartialBijection {
    PartialBijection::from_pairs(n, pairs.iter().copied()).expect("bijective pairs")
}

/// Generic point `eta` over closed points `c0..c{n-1}`.
fn line(n: usize) -> FiniteSpace {
    let mut names = vec!["eta".to_string()];
    names.extend((0..n).map(|i| format!("c{i}")));
    let rel: Vec<(usize, usize)> = (1..=n).map(|i| (i, 0)).collect();
    FiniteSpace::new(&names, &rel).expect("line model")
}

/// ℤ/2 swapping `c1`, `c2`; undefined at `c0` unless `global`.
fn z2_a1(global: bool) -> Instance {
    let mut s = vec![(0, 0), (2, 3), (3, 2)];
    if global {
        s.push((1, 1));
    }
    build(line(3), Group::cyclic(2, "s").unwrap(), vec![PartialBijection::identity(4), pb(4, &s)])
}

/// Surface-like model: two curves `A`, `B` through `o`, with one extra closed
/// point on each; `s` swaps the curves but is undefined on the extra points.
fn z2_a2() -> Instance {
    let names = ["eta", "A", "B", "a0", "b0", "o"];
    let rel = [(1, 0), (2, 0), (3, 1), (4, 2), (5, 1), (5, 2)];
    let space = FiniteSpace::new(&names, &rel).unwrap();
    let s = pb(6, &[(0, 0), (1, 2), (2, 1), (5, 5)]);
    build(space, Group::cyclic(2, "s").unwrap(), vec![PartialBijection::identity(6), s])
}

/// ℤ/3 rotating `c1 -> c2 -> c3`, undefined at `c0`.
fn z3_a1() -> Instance {
    let a = pb(5, &[(0, 0), (2, 3), (3, 4), (4, 2)]);
    let a2 = a.inverse();
    build(line(4), Group::cyclic(3, "a").unwrap(), vec![PartialBijection::identity(5), a, a2])
}

/// The symmetric group on `c1, c2, c3` restricted to `eta, c1, c2`.
fn s3_a1() -> Instance {
    let gens = [vec![0, 2, 3, 1], vec![0, 2, 1, 3]];
    let group = Group::from_permutations(&["r", "t"], &gens).unwrap();
    let table = group.finite_table().unwrap().clone();
    // each element's permutation, read off its canonical word
    let images: Vec<PartialBijection> = (0..table.order())
        .map(|e| {
            let mut p: Vec<usize> = (0..4).collect();
            for l in table.canonical_word(e).letters() {
                let g = &gens[l.generator];
                let g = if l.inverse { invert_perm(g) } else { g.clone() };
                p = compose_perm(&p, &g);
            }
            PartialBijection::from_permutation(&p).unwrap()
        })
        .collect();
    let full = build(line(3), group, images);
    let keep: BTreeSet<usize> = [0, 2, 3].into();
    let action = full.partial_action().unwrap().restrict(&keep).unwrap();
    Instance::action(full.space().unwrap().subspace(&keep), action)
}

/// ℤ/2 swapping two discrete points, with `X = {1}`.
fn z2_swap() -> Instance {
    let space = FiniteSpace::new(&["1", "2"], &[]).unwrap();
    build(space, Group::cyclic(2, "s").unwrap(), vec![PartialBijection::identity(2), pb(2, &[(0, 1), (1, 0)])])
        .with_subset("X", [0])
}

/// Violates the axioms: `s` is not an involution where defined.
fn z2_broken() -> Instance {
    let space = FiniteSpace::new(&["1", "2", "3"], &[]).unwrap();
    build(space, Group::cyclic(2, "s").unwrap(), vec![PartialBijection::identity(3), pb(3, &[(0, 1), (1, 2)])])
}

/// Free group on two letters acting globally on the line model.
fn free_global() -> Instance {
    let s = pb(4, &[(0, 0), (1, 2), (2, 3), (3, 1)]);
    let t = pb(4, &[(0, 0), (1, 2), (2, 1), (3, 3)]);
    build(line(3), Group::free(&["s", "t"]).unwrap(), vec![s, t])
}

fn point_name(p: &[usize; 3]) -> String {
    format!("[{}:{}:{}]", p[0], p[1], p[2])
}

/// The standard quadratic involution `s = (yz:xz:xy)` on the points of
/// P²(F_q) with `xyz ≠ 0`, together with the total bijections `t` (swap x, y)
/// and `r` (cycle the coordinates), for the free group on `s, t, r`.
pub fn gen_cremona(q: usize) -> Result<Instance, UnsupportedField> {
    let f = Field::new(q)?;
    let pts = f.projective_plane();
    let n = pts.len();
    let index: HashMap<[usize; 3], usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let at = |v: [usize; 3]| index[&f.normalize(v).expect("nonzero vector")];
    let mut s = Vec::new();
    let mut t = Vec::new();
    let mut r = Vec::new();
    for (i, &[x, y, z]) in pts.iter().enumerate() {
        if x != 0 && y != 0 && z != 0 {
            s.push((i, at([f.mul(y, z), f.mul(x, z), f.mul(x, y)])));
        }
        t.push((i, at([y, x, z])));
        r.push((i, at([y, z, x])));
    }
    let names: Vec<String> = pts.iter().map(point_name).collect();
    let space = FiniteSpace::new(&names, &[]).expect("distinct points");
    Ok(build(space, Group::free(&["s", "t", "r"]).unwrap(), vec![pb(n, &s), pb(n, &t), pb(n, &r)]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZShift {
    /// ℤ acting on itself with `N = {n ≥ 0}`.
    Naturals,
    /// ℤ acting on itself with `{0}`.
    Singleton,
    /// ℤ acting on itself with the even integers.
    Evens,
    /// Window `-3..3` plus a fixed `eta`, the shift undefined at `0`.
    BrokenWindow,
    /// The same window with the shift defined on all of `-3..2`.
    Window,
}

pub fn gen_zshift(variant: ZShift) -> Instance {
    let shift = || Instance::shift(Group::cyclic_infinite("u").unwrap());
    match variant {
        ZShift::Naturals => shift().with_zset("X", ZSubset::naturals()),
        ZShift::Singleton => shift().with_zset("X", ZSubset::finite([0])),
        ZShift::Evens => shift().with_zset("X", ZSubset::evens()),
        ZShift::BrokenWindow | ZShift::Window => {
            let mut names = vec!["eta".to_string()];
            names.extend((-3..=3).map(|i: i32| i.to_string()));
            let idx = |v: i32| (v + 4) as usize;
            let mut pairs = vec![(0, 0)];
            for v in -3..3 {
                if variant == ZShift::Window || v != 0 {
                    pairs.push((idx(v), idx(v + 1)));
                }
            }
            let space = FiniteSpace::new(&names, &[]).unwrap();
            build(space, Group::cyclic_infinite("u").unwrap(), vec![pb(8, &pairs)])
        }
    }
}
