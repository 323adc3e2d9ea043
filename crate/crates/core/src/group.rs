//! Group handles and normalized words.
//!
//! Every [`Word`] handed out by a [`Group`] is in normal form: freely reduced
//! for free and infinite cyclic groups, and the length-lex minimal spelling of
//! the element for finite groups. Equality of normalized words is therefore
//! equality of group elements.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown generator symbol `{0}`")]
    UnknownSymbol(String),
    #[error("generator index {0} out of range")]
    UnknownGenerator(usize),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("a free group needs at least one generator")]
    NoGenerators,
    #[error("multiplication table is not square: {0}")]
    TableShape(String),
    #[error("multiplication table has no identity element")]
    NoIdentity,
    #[error("element `{0}` has no inverse")]
    NoInverse(String),
    #[error("multiplication is not associative: ({0}*{1})*{2} != {0}*({1}*{2})")]
    NotAssociative(String, String, String),
    #[error("generators do not generate the group (missing `{0}`)")]
    NotGenerating(String),
    #[error("empty word token")]
    EmptyToken,
}

/// A generator or its inverse.
///
/// The derived order puts every positive letter before every inverse letter,
/// and letters of the same sign in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub inverse: bool,
    pub generator: usize,
}

impl Letter {
    pub fn positive(generator: usize) -> Self {
        Letter { inverse: false, generator }
    }

    pub fn negative(generator: usize) -> Self {
        Letter { inverse: true, generator }
    }

    pub fn inv(self) -> Self {
        Letter { inverse: !self.inverse, generator: self.generator }
    }

    /// Position of the letter in the alphabet `s1 < .. < sk < s1^-1 < .. < sk^-1`.
    pub fn rank(self, generators: usize) -> usize {
        if self.inverse {
            generators + self.generator
        } else {
            self.generator
        }
    }

    pub fn from_rank(rank: usize, generators: usize) -> Self {
        if rank < generators {
            Letter::positive(rank)
        } else {
            Letter::negative(rank - generators)
        }
    }
}

/// A sequence of letters. `w = l1 l2 .. ln` acts as `l1 ∘ l2 ∘ .. ∘ ln`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letter(letter: Letter) -> Self {
        Word(vec![letter])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation followed by free reduction.
    pub fn reduced_product(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn formal_inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    fn freely_reduce(letters: &[Letter]) -> Word {
        Word::identity().reduced_product(&Word(letters.to_vec()))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finite group given by its multiplication table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteTable {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
    /// Element index of each generator symbol.
    generators: Vec<usize>,
    /// Canonical (length-lex minimal) word of each element.
    canonical: Vec<Word>,
    /// Element indices sorted by canonical word.
    order: Vec<usize>,
}

impl FiniteTable {
    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, e: usize) -> usize {
        self.inverses[e]
    }

    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn generator_elements(&self) -> &[usize] {
        &self.generators
    }

    pub fn canonical_word(&self, e: usize) -> &Word {
        &self.canonical[e]
    }

    /// Element indices in length-lex order of their canonical words.
    pub fn canonical_order(&self) -> &[usize] {
        &self.order
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    fn letter_element(&self, l: Letter) -> usize {
        let g = self.generators[l.generator];
        if l.inverse {
            self.inverses[g]
        } else {
            g
        }
    }

    fn evaluate(&self, w: &Word) -> usize {
        w.letters().iter().fold(self.identity, |acc, &l| self.table[acc][self.letter_element(l)])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Free,
    CyclicInfinite,
    Finite(FiniteTable),
}

/// A group handle: kind plus the ordered generator symbols used for words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    symbols: Vec<String>,
    kind: GroupKind,
}

impl Group {
    pub fn free<S: AsRef<str>>(symbols: &[S]) -> Result<Self, GroupError> {
        let symbols = check_symbols(symbols)?;
        if symbols.is_empty() {
            return Err(GroupError::NoGenerators);
        }
        Ok(Group { symbols, kind: GroupKind::Free })
    }

    pub fn cyclic_infinite(symbol: &str) -> Result<Self, GroupError> {
        let symbols = check_symbols(&[symbol])?;
        Ok(Group { symbols, kind: GroupKind::CyclicInfinite })
    }

    /// Finite group from a table: `table[a][b]` is the index of `a*b`.
    /// `generators` lists element names; when empty, every non-identity
    /// element is used.
    pub fn finite<S: AsRef<str>>(elements: &[S], table: Vec<Vec<usize>>, generators: &[S]) -> Result<Self, GroupError> {
        let elements = check_symbols(elements)?;
        let n = elements.len();
        if n == 0 || table.len() != n {
            return Err(GroupError::TableShape(format!("{} rows for {} elements", table.len(), n)));
        }
        for row in &table {
            if row.len() != n || row.iter().any(|&e| e >= n) {
                return Err(GroupError::TableShape("row with wrong length or entry".into()));
            }
        }
        let identity =
            (0..n).find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x)).ok_or(GroupError::NoIdentity)?;
        let mut inverses = Vec::with_capacity(n);
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| GroupError::NoInverse(elements[a].clone()))?;
            inverses.push(inv);
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(GroupError::NotAssociative(
                            elements[a].clone(),
                            elements[b].clone(),
                            elements[c].clone(),
                        ));
                    }
                }
            }
        }
        let index: HashMap<&str, usize> = elements.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let gens: Vec<usize> = if generators.is_empty() {
            (0..n).filter(|&e| e != identity).collect()
        } else {
            let mut v = Vec::new();
            for g in generators {
                let g = g.as_ref();
                let i = *index.get(g).ok_or_else(|| GroupError::UnknownSymbol(g.to_string()))?;
                if v.contains(&i) {
                    return Err(GroupError::DuplicateSymbol(g.to_string()));
                }
                v.push(i);
            }
            v
        };
        let symbols: Vec<String> = gens.iter().map(|&g| elements[g].clone()).collect();

        // Breadth-first search appending letters in alphabet order yields the
        // length-lex minimal word of every element, discovered in sorted order.
        let k = gens.len();
        let letter_el = |l: Letter| if l.inverse { inverses[gens[l.generator]] } else { gens[l.generator] };
        let mut canonical: Vec<Option<Word>> = vec![None; n];
        canonical[identity] = Some(Word::identity());
        let mut order = vec![identity];
        let mut queue = VecDeque::from([identity]);
        while let Some(e) = queue.pop_front() {
            for rank in 0..2 * k {
                let l = Letter::from_rank(rank, k);
                let f = table[e][letter_el(l)];
                if canonical[f].is_none() {
                    let mut w = canonical[e].clone().unwrap();
                    w.0.push(l);
                    canonical[f] = Some(w);
                    order.push(f);
                    queue.push_back(f);
                }
            }
        }
        if let Some(missing) = canonical.iter().position(Option::is_none) {
            return Err(GroupError::NotGenerating(elements[missing].clone()));
        }
        let canonical = canonical.into_iter().map(Option::unwrap).collect();
        Ok(Group {
            symbols,
            kind: GroupKind::Finite(FiniteTable {
                elements,
                table,
                identity,
                inverses,
                generators: gens,
                canonical,
                order,
            }),
        })
    }

    /// Cyclic group of order `n` with elements `e, a, a2, ..` and generator `a`.
    pub fn cyclic(n: usize, symbol: &str) -> Result<Self, GroupError> {
        let mut names = vec!["e".to_string(), symbol.to_string()];
        names.extend((2..n).map(|i| format!("{symbol}{i}")));
        names.truncate(n.max(1));
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let gens: Vec<String> = if n > 1 { vec![symbol.to_string()] } else { vec![] };
        Group::finite(&names, table, &gens)
    }

    /// Finite group generated by permutations of `0..degree`; elements are
    /// named `e, g1, g2, ..` in discovery order and the generators are the
    /// given permutations (named by `names`).
    pub fn from_permutations(names: &[&str], perms: &[Vec<usize>]) -> Result<Self, GroupError> {
        let degree = perms.first().map_or(0, Vec::len);
        let id: Vec<usize> = (0..degree).collect();
        let mut elems = vec![id];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(elems[0].clone(), 0)]);
        let mut i = 0;
        while i < elems.len() {
            for p in perms {
                let q: Vec<usize> = (0..degree).map(|x| elems[i][p[x]]).collect();
                if !index.contains_key(&q) {
                    index.insert(q.clone(), elems.len());
                    elems.push(q);
                }
            }
            i += 1;
        }
        let n = elems.len();
        let mut labels = vec!["e".to_string()];
        labels.extend((1..n).map(|i| format!("g{i}")));
        for (p, name) in perms.iter().zip(names) {
            labels[index[p]] = name.to_string();
        }
        let table = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let q: Vec<usize> = (0..degree).map(|x| elems[a][elems[b][x]]).collect();
                        index[&q]
                    })
                    .collect()
            })
            .collect();
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        Group::finite(&labels, table, &names)
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn finite_table(&self) -> Option<&FiniteTable> {
        match &self.kind {
            GroupKind::Finite(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite(_))
    }

    pub fn order(&self) -> Option<usize> {
        self.finite_table().map(FiniteTable::order)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn generator_count(&self) -> usize {
        self.symbols.len()
    }

    /// All letters in alphabet order.
    pub fn letters(&self) -> Vec<Letter> {
        let k = self.symbols.len();
        (0..2 * k).map(|r| Letter::from_rank(r, k)).collect()
    }

    pub fn check_word(&self, w: &Word) -> Result<(), GroupError> {
        match w.letters().iter().find(|l| l.generator >= self.symbols.len()) {
            Some(l) => Err(GroupError::UnknownGenerator(l.generator)),
            None => Ok(()),
        }
    }

    pub fn normalize(&self, w: &Word) -> Result<Word, GroupError> {
        self.check_word(w)?;
        Ok(match &self.kind {
            GroupKind::Free | GroupKind::CyclicInfinite => Word::freely_reduce(w.letters()),
            GroupKind::Finite(t) => t.canonical[t.evaluate(w)].clone(),
        })
    }

    /// Product of two normalized words.
    pub fn multiply(&self, a: &Word, b: &Word) -> Word {
        match &self.kind {
            GroupKind::Free | GroupKind::CyclicInfinite => a.reduced_product(b),
            GroupKind::Finite(t) => {
                let e = t.table[t.evaluate(a)][t.evaluate(b)];
                t.canonical[e].clone()
            }
        }
    }

    pub fn inverse(&self, a: &Word) -> Word {
        match &self.kind {
            GroupKind::Free | GroupKind::CyclicInfinite => a.formal_inverse(),
            GroupKind::Finite(t) => t.canonical[t.inverses[t.evaluate(a)]].clone(),
        }
    }

    /// Element index of a word in a finite group.
    pub fn element_index(&self, w: &Word) -> Option<usize> {
        self.finite_table().map(|t| t.evaluate(w))
    }

    /// Normalized elements whose normal form has length at most `radius`
    /// (`None`: no bound, finite groups only), in length-lex order.
    pub fn ball(&self, radius: Option<usize>) -> Vec<Word> {
        match &self.kind {
            GroupKind::Finite(t) => t
                .order
                .iter()
                .map(|&e| t.canonical[e].clone())
                .filter(|w| radius.is_none_or(|r| w.len() <= r))
                .collect(),
            GroupKind::Free | GroupKind::CyclicInfinite => {
                let radius = radius.expect("an infinite group ball needs a radius");
                let letters = self.letters();
                let mut out = vec![Word::identity()];
                let mut layer = vec![Word::identity()];
                for _ in 0..radius {
                    let mut next = Vec::new();
                    for w in &layer {
                        for &l in &letters {
                            if w.letters().last() == Some(&l.inv()) {
                                continue;
                            }
                            let mut v = w.clone();
                            v.0.push(l);
                            next.push(v);
                        }
                    }
                    out.extend(next.iter().cloned());
                    layer = next;
                }
                out
            }
        }
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
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

    /// Parses `1`, `s`, `s^-1`, `s*t^-1`, .. and, for finite groups, element
    /// names. The result is normalized.
    pub fn parse_word(&self, text: &str) -> Result<Word, GroupError> {
        let text = text.trim();
        if text == "1" {
            return Ok(Word::identity());
        }
        let mut letters = Vec::new();
        for token in text.split('*') {
            let token = token.trim();
            if token.is_empty() {
                return Err(GroupError::EmptyToken);
            }
            let (name, inverse) = match token.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (token, false),
            };
            if let Some(g) = self.symbols.iter().position(|s| s == name) {
                letters.push(Letter { generator: g, inverse });
                continue;
            }
            let table = self.finite_table().ok_or_else(|| GroupError::UnknownSymbol(name.into()))?;
            let e =
                table.elements.iter().position(|s| s == name).ok_or_else(|| GroupError::UnknownSymbol(name.into()))?;
            let e = if inverse { table.inverses[e] } else { e };
            letters.extend_from_slice(table.canonical[e].letters());
        }
        self.normalize(&Word(letters))
    }
}

fn check_symbols<S: AsRef<str>>(symbols: &[S]) -> Result<Vec<String>, GroupError> {
    let mut out: Vec<String> = Vec::with_capacity(symbols.len());
    for s in symbols {
        let s = s.as_ref();
        if s.is_empty() || s == "1" || s.contains(['*', '^', ':', ' ']) {
            return Err(GroupError::UnknownSymbol(s.to_string()));
        }
        if out.iter().any(|o| o == s) {
            return Err(GroupError::DuplicateSymbol(s.to_string()));
        }
        out.push(s.to_string());
    }
    Ok(out)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "x{}", l.generator)?;
            if l.inverse {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> Group {
        Group::from_permutations(&["t", "r"], &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap()
    }

    #[test]
    fn free_ball_sizes_and_order() {
        let g = Group::free(&["a", "b"]).unwrap();
        let ball = g.ball(Some(2));
        assert_eq!(ball.len(), 1 + 4 + 12);
        assert!(ball.windows(2).all(|w| w[0] < w[1]));
        let names: Vec<String> = ball[..5].iter().map(|w| g.format_word(w)).collect();
        assert_eq!(names, ["1", "a", "b", "a^-1", "b^-1"]);
    }

    #[test]
    fn cyclic_infinite_enumeration_order() {
        let z = Group::cyclic_infinite("u").unwrap();
        let names: Vec<String> = z.ball(Some(2)).iter().map(|w| z.format_word(w)).collect();
        assert_eq!(names, ["1", "u", "u^-1", "u*u", "u^-1*u^-1"]);
    }

    #[test]
    fn finite_table_checks() {
        let bad = Group::finite(&["e", "a"], vec![vec![0, 1], vec![1, 1]], &[]);
        assert!(matches!(bad, Err(GroupError::NoInverse(_))));
        let z4 = Group::cyclic(4, "a").unwrap();
        assert_eq!(z4.order(), Some(4));
        let a = z4.parse_word("a").unwrap();
        let a3 = z4.parse_word("a*a*a").unwrap();
        assert_eq!(a3, z4.parse_word("a^-1").unwrap());
        assert_eq!(z4.multiply(&a, &a3), Word::identity());
    }

    #[test]
    fn canonical_words_are_length_lex_minimal() {
        let g = s3();
        let t = g.finite_table().unwrap();
        let words = g.ball(None);
        assert_eq!(words.len(), 6);
        assert!(words.windows(2).all(|w| w[0] < w[1]));
        // brute force: every word of length <= 3 normalizes to something no larger
        let letters = g.letters();
        let mut all = vec![Word::identity()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for w in &all {
                for &l in &letters {
                    let mut v = w.letters().to_vec();
                    v.push(l);
                    next.push(Word::from_letters(v));
                }
            }
            all.extend(next);
        }
        for w in all {
            let n = g.normalize(&w).unwrap();
            assert!(n <= w);
            assert_eq!(t.evaluate(&n), t.evaluate(&w));
        }
    }

    #[test]
    fn free_reduction() {
        let g = Group::free(&["a", "b"]).unwrap();
        let w = g.parse_word("a*b*b^-1*a^-1*b").unwrap();
        assert_eq!(g.format_word(&w), "b");
        let x = g.parse_word("a*b^-1").unwrap();
        assert_eq!(g.multiply(&x, &g.inverse(&x)), Word::identity());
    }
}
