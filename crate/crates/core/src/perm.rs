//! Finite permutation groups with canonical words.
//!
//! Used wherever a finite group acts on a finite set of points: homeomorphism
//! groups of finite spaces and the action of `G` on an exact globalization.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::group::{Letter, Word};

/// `p[x]` is the image of `x`.
pub type Perm = Vec<usize>;

pub fn identity_perm(n: usize) -> Perm {
    (0..n).collect()
}

/// `(p ∘ q)(x) = p(q(x))`.
pub fn compose_perm(p: &[usize], q: &[usize]) -> Perm {
    q.iter().map(|&x| p[x]).collect()
}

pub fn invert_perm(p: &[usize]) -> Perm {
    let mut out = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        out[y] = x;
    }
    out
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&y| y < p.len() && !std::mem::replace(&mut seen[y], true))
}

/// The group generated by named permutations, with every element listed in
/// length-lex order of its canonical word.
#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    symbols: Vec<String>,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
    words: Vec<Word>,
    index: HashMap<Perm, usize>,
}

impl PermGroup {
    pub fn generate(degree: usize, symbols: Vec<String>, generators: Vec<Perm>) -> Self {
        assert_eq!(symbols.len(), generators.len());
        assert!(generators.iter().all(|g| g.len() == degree && is_permutation(g)));
        let k = generators.len();
        let letter_perm: Vec<Perm> = (0..2 * k)
            .map(|r| {
                let l = Letter::from_rank(r, k);
                let g = &generators[l.generator];
                if l.inverse {
                    invert_perm(g)
                } else {
                    g.clone()
                }
            })
            .collect();
        let id = identity_perm(degree);
        let mut elements = vec![id.clone()];
        let mut words = vec![Word::identity()];
        let mut index = HashMap::from([(id, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(e) = queue.pop_front() {
            for (r, lp) in letter_perm.iter().enumerate() {
                let f = compose_perm(&elements[e], lp);
                if !index.contains_key(&f) {
                    let mut letters = words[e].letters().to_vec();
                    letters.push(Letter::from_rank(r, k));
                    index.insert(f.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(f);
                    words.push(Word::from_letters(letters));
                }
            }
        }
        PermGroup { degree, symbols, generators, elements, words, index }
    }

    /// Generators named `h0, h1, ..`.
    pub fn anonymous(degree: usize, generators: Vec<Perm>) -> Self {
        let symbols = (0..generators.len()).map(|i| format!("h{i}")).collect();
        PermGroup::generate(degree, symbols, generators)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    /// Elements in canonical order; index 0 is the identity.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn index_of(&self, p: &[usize]) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn word_of(&self, p: &[usize]) -> Option<&Word> {
        self.index_of(p).map(|i| &self.words[i])
    }

    /// Permutation of a word over this group's generators.
    pub fn perm_of_word(&self, w: &Word) -> Option<Perm> {
        let mut acc = identity_perm(self.degree);
        for l in w.letters() {
            let g = self.generators.get(l.generator)?;
            let step = if l.inverse { invert_perm(g) } else { g.clone() };
            acc = compose_perm(&acc, &step);
        }
        Some(acc)
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".into();
        }
        w.letters()
            .iter()
            .map(|l| {
                let s = &self.symbols[l.generator];
                if l.inverse {
                    format!("{s}^-1")
                } else {
                    s.clone()
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn parse_word(&self, text: &str) -> Option<Word> {
        let text = text.trim();
        if text == "1" {
            return Some(Word::identity());
        }
        let mut letters = Vec::new();
        for tok in text.split('*') {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let generator = self.symbols.iter().position(|s| s == name)?;
            letters.push(Letter { generator, inverse });
        }
        Some(Word::from_letters(letters))
    }

    /// Orbits of points, each sorted, ordered by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree];
        let mut out = Vec::new();
        for x in 0..self.degree {
            if seen[x] {
                continue;
            }
            let mut orbit = vec![x];
            seen[x] = true;
            let mut i = 0;
            while i < orbit.len() {
                let y = orbit[i];
                for g in &self.generators {
                    if !seen[g[y]] {
                        seen[g[y]] = true;
                        orbit.push(g[y]);
                    }
                }
                i += 1;
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }

    /// All subgroups, each given as a generated `PermGroup`, in discovery order
    /// starting from the trivial subgroup.
    pub fn subgroups(&self) -> Vec<PermGroup> {
        let n = self.elements.len();
        let words = n.div_ceil(64);
        let mul: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).map(|b| self.index[&compose_perm(&self.elements[a], &self.elements[b])]).collect())
            .collect();
        let bit = |set: &[u64], e: usize| set[e / 64] >> (e % 64) & 1 == 1;
        let close = |start: &[usize], gens: &[usize]| -> Vec<u64> {
            let mut set = vec![0u64; words];
            let mut list: Vec<usize> = Vec::new();
            for &e in start.iter().chain(std::iter::once(&0)) {
                if set[e / 64] >> (e % 64) & 1 == 0 {
                    set[e / 64] |= 1 << (e % 64);
                    list.push(e);
                }
            }
            let mut i = 0;
            while i < list.len() {
                for &g in gens {
                    let f = mul[list[i]][g];
                    if set[f / 64] >> (f % 64) & 1 == 0 {
                        set[f / 64] |= 1 << (f % 64);
                        list.push(f);
                    }
                }
                i += 1;
            }
            set
        };
        let members = |set: &[u64]| (0..n).filter(|&e| bit(set, e)).collect::<Vec<_>>();

        // one generator per cyclic subgroup
        let mut cyclic: Vec<(usize, Vec<u64>)> = Vec::new();
        let mut seen_cyclic = HashSet::new();
        for e in 1..n {
            let c = close(&[], &[e]);
            if seen_cyclic.insert(c.clone()) {
                cyclic.push((e, c));
            }
        }
        let trivial = close(&[], &[]);
        let mut found: Vec<(Vec<usize>, Vec<u64>)> = vec![(Vec::new(), trivial.clone())];
        let mut seen = HashSet::from([trivial]);
        let mut i = 0;
        while i < found.len() {
            let (gens, set) = found[i].clone();
            let elems = members(&set);
            for (c, cset) in &cyclic {
                if cset.iter().zip(&set).all(|(a, b)| a & !b == 0) {
                    continue;
                }
                let mut g2 = gens.clone();
                g2.push(*c);
                let k = close(&elems, &g2);
                if seen.insert(k.clone()) {
                    found.push((g2, k));
                }
            }
            i += 1;
        }
        found
            .into_iter()
            .map(|(gens, _)| {
                PermGroup::anonymous(self.degree, gens.iter().map(|&g| self.elements[g].clone()).collect())
            })
            .collect()
    }
}
