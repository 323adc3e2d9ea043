//! Line-oriented instance files.
//!
//! ```text
//! # the involution on the line model, undefined at c0
//! points eta c0 c1 c2
//! le c0 eta
//! le c1 eta
//! le c2 eta
//! group finite e s
//! table e: e s
//! table s: s e
//! generators s
//! map s: eta -> eta
//! map s: c1 -> c2
//! map s: c2 -> c1
//! subset X: c0 c1
//! ```
//!
//! `group` is one of `free SYMBOLS`, `cyclic SYMBOL` (infinite cyclic),
//! `finite ELEMENTS` followed by `table` rows, or `zshift SYMBOL` for ℤ acting
//! on itself, which takes `zset NAME: below BITS above BITS [flip INTS]`
//! declarations instead of points. For finite groups `map` lines name
//! elements and the identity defaults to the identity map.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::group::{Group, GroupKind};
use crate::partial::{Carrier, PartialAction, PartialBijection};
use crate::space::FiniteSpace;
use crate::zset::ZSubset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Action { space: FiniteSpace, action: PartialAction },
    Shift { group: Group },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub body: Body,
    pub subsets: BTreeMap<String, BTreeSet<usize>>,
    pub zsets: BTreeMap<String, ZSubset>,
}

impl Instance {
    pub fn action(space: FiniteSpace, action: PartialAction) -> Self {
        Instance { body: Body::Action { space, action }, subsets: BTreeMap::new(), zsets: BTreeMap::new() }
    }

    pub fn shift(group: Group) -> Self {
        Instance { body: Body::Shift { group }, subsets: BTreeMap::new(), zsets: BTreeMap::new() }
    }

    pub fn with_subset(mut self, name: &str, points: impl IntoIterator<Item = usize>) -> Self {
        self.subsets.insert(name.to_string(), points.into_iter().collect());
        self
    }

    pub fn with_zset(mut self, name: &str, set: ZSubset) -> Self {
        self.zsets.insert(name.to_string(), set);
        self
    }

    pub fn group(&self) -> &Group {
        match &self.body {
            Body::Action { action, .. } => action.group(),
            Body::Shift { group } => group,
        }
    }

    pub fn partial_action(&self) -> Option<&PartialAction> {
        match &self.body {
            Body::Action { action, .. } => Some(action),
            Body::Shift { .. } => None,
        }
    }

    pub fn space(&self) -> Option<&FiniteSpace> {
        match &self.body {
            Body::Action { space, .. } => Some(space),
            Body::Shift { .. } => None,
        }
    }

    /// Canonical text: parsing it gives back an equal instance.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        match &self.body {
            Body::Action { space, action } => {
                if !space.is_empty() {
                    let _ = writeln!(out, "points {}", space.names().join(" "));
                }
                for (x, y) in space.generating_relations() {
                    let _ = writeln!(out, "le {} {}", space.name(x), space.name(y));
                }
                write_group(&mut out, action.group());
                let names = space.names();
                let group = action.group();
                let labelled: Vec<(String, &PartialBijection)> = match group.finite_table() {
                    Some(t) => t
                        .elements()
                        .iter()
                        .cloned()
                        .zip(action.images())
                        .enumerate()
                        .filter(|&(e, (_, f))| e != t.identity() || !f.is_identity())
                        .map(|(_, p)| p)
                        .collect(),
                    None => group.symbols().iter().cloned().zip(action.images()).collect(),
                };
                for (label, f) in labelled {
                    for (x, y) in f.pairs() {
                        let _ = writeln!(out, "map {label}: {} -> {}", names[x], names[y]);
                    }
                }
                for (name, set) in &self.subsets {
                    let pts: Vec<&str> = set.iter().map(|&p| names[p].as_str()).collect();
                    let _ = writeln!(out, "subset {name}:{}{}", if pts.is_empty() { "" } else { " " }, pts.join(" "));
                }
            }
            Body::Shift { group } => {
                let _ = writeln!(out, "group zshift {}", group.symbols()[0]);
            }
        }
        for (name, z) in &self.zsets {
            let _ = writeln!(out, "zset {name}: {z}");
        }
        out
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }
}

fn write_group(out: &mut String, group: &Group) {
    match group.kind() {
        GroupKind::Free => {
            let _ = writeln!(out, "group free {}", group.symbols().join(" "));
        }
        GroupKind::CyclicInfinite => {
            let _ = writeln!(out, "group cyclic {}", group.symbols()[0]);
        }
        GroupKind::Finite(t) => {
            let _ = writeln!(out, "group finite {}", t.elements().join(" "));
            for (a, row) in t.table().iter().enumerate() {
                let cells: Vec<&str> = row.iter().map(|&b| t.elements()[b].as_str()).collect();
                let _ = writeln!(out, "table {}: {}", t.elements()[a], cells.join(" "));
            }
            let _ = writeln!(out, "generators {}", group.symbols().join(" "));
        }
    }
}

struct Tok<'a> {
    col: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in content.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Tok { col: s + 1, text: &content[s..i] });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Tok { col: s + 1, text: &content[s..] });
    }
    out
}

enum GroupDecl {
    Free(Vec<String>),
    Cyclic(String),
    Finite(Vec<String>),
    Shift(String),
}

struct Builder {
    points: Vec<String>,
    index: HashMap<String, usize>,
    relations: Vec<(usize, usize)>,
    group: Option<(GroupDecl, usize)>,
    table: BTreeMap<usize, Vec<usize>>,
    generators: Option<Vec<String>>,
    maps: Vec<(usize, String, usize, usize, usize)>,
    subsets: BTreeMap<String, BTreeSet<usize>>,
    zsets: BTreeMap<String, ZSubset>,
}

pub fn parse(text: &str) -> Result<Instance, ParseError> {
    let mut b = Builder {
        points: Vec::new(),
        index: HashMap::new(),
        relations: Vec::new(),
        group: None,
        table: BTreeMap::new(),
        generators: None,
        maps: Vec::new(),
        subsets: BTreeMap::new(),
        zsets: BTreeMap::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize(line);
        if !toks.is_empty() {
            b.line(i + 1, &toks)?;
        }
    }
    b.finish()
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

/// Splits `NAME:` off the token list; the colon may also stand alone.
fn labelled<'a, 'b>(
    line: usize,
    toks: &'b [Tok<'a>],
    what: &str,
) -> Result<(&'a str, usize, &'b [Tok<'a>]), ParseError> {
    let Some(first) = toks.first() else {
        return Err(err(line, 1, format!("expected `{what} NAME:`")));
    };
    if let Some(name) = first.text.strip_suffix(':') {
        if name.is_empty() {
            return Err(err(line, first.col, "empty label"));
        }
        return Ok((name, first.col, &toks[1..]));
    }
    match toks.get(1) {
        Some(t) if t.text == ":" => Ok((first.text, first.col, &toks[2..])),
        _ => Err(err(line, first.col, format!("expected `:` after `{}`", first.text))),
    }
}

impl Builder {
    fn point(&self, line: usize, t: &Tok<'_>) -> Result<usize, ParseError> {
        self.index.get(t.text).copied().ok_or_else(|| err(line, t.col, format!("unknown point `{}`", t.text)))
    }

    fn line(&mut self, line: usize, toks: &[Tok<'_>]) -> Result<(), ParseError> {
        let rest = &toks[1..];
        let end_col = toks.last().map_or(1, |t| t.col + t.text.len());
        match toks[0].text {
            "points" => {
                for t in rest {
                    if t.text == "->" || t.text.ends_with(':') {
                        return Err(err(line, t.col, format!("invalid point name `{}`", t.text)));
                    }
                    if self.index.insert(t.text.to_string(), self.points.len()).is_some() {
                        return Err(err(line, t.col, format!("duplicate point `{}`", t.text)));
                    }
                    self.points.push(t.text.to_string());
                }
            }
            "le" => {
                let [a, c] = rest else {
                    return Err(err(line, end_col, "expected `le A B`"));
                };
                self.relations.push((self.point(line, a)?, self.point(line, c)?));
            }
            "group" => {
                if self.group.is_some() {
                    return Err(err(line, toks[0].col, "group declared twice"));
                }
                let Some(kind) = rest.first() else {
                    return Err(err(line, end_col, "expected group kind"));
                };
                let names: Vec<String> = rest[1..].iter().map(|t| t.text.to_string()).collect();
                let single = |names: &[String]| -> Result<String, ParseError> {
                    match names {
                        [s] => Ok(s.clone()),
                        _ => Err(err(line, kind.col, format!("`{}` takes exactly one symbol", kind.text))),
                    }
                };
                let decl = match kind.text {
                    "free" => GroupDecl::Free(names),
                    "cyclic" => GroupDecl::Cyclic(single(&names)?),
                    "finite" => GroupDecl::Finite(names),
                    "zshift" => GroupDecl::Shift(single(&names)?),
                    other => return Err(err(line, kind.col, format!("unknown group kind `{other}`"))),
                };
                self.group = Some((decl, line));
            }
            "table" => {
                let Some((GroupDecl::Finite(elements), _)) = &self.group else {
                    return Err(err(line, toks[0].col, "`table` needs a finite group"));
                };
                let (name, col, cells) = labelled(line, rest, "table")?;
                let pos = |t: &str| elements.iter().position(|e| e == t);
                let row_of = pos(name).ok_or_else(|| err(line, col, format!("unknown element `{name}`")))?;
                let row = cells
                    .iter()
                    .map(|t| pos(t.text).ok_or_else(|| err(line, t.col, format!("unknown element `{}`", t.text))))
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() != elements.len() {
                    return Err(err(
                        line,
                        end_col,
                        format!("row has {} entries, expected {}", row.len(), elements.len()),
                    ));
                }
                if self.table.insert(row_of, row).is_some() {
                    return Err(err(line, col, format!("row `{name}` given twice")));
                }
            }
            "generators" => {
                self.generators = Some(rest.iter().map(|t| t.text.to_string()).collect());
            }
            "map" => {
                let (label, col, pair) = labelled(line, rest, "map")?;
                let [a, arrow, c] = pair else {
                    return Err(err(line, end_col, "expected `map G: A -> B`"));
                };
                if arrow.text != "->" {
                    return Err(err(line, arrow.col, "expected `->`"));
                }
                let (x, y) = (self.point(line, a)?, self.point(line, c)?);
                self.maps.push((line, label.to_string(), col, x, y));
            }
            "subset" => {
                let (name, col, pts) = labelled(line, rest, "subset")?;
                let set = pts.iter().map(|t| self.point(line, t)).collect::<Result<BTreeSet<_>, _>>()?;
                if self.subsets.insert(name.to_string(), set).is_some() {
                    return Err(err(line, col, format!("subset `{name}` declared twice")));
                }
            }
            "zset" => {
                let (name, col, spec) = labelled(line, rest, "zset")?;
                let z = parse_zset(line, spec, end_col)?;
                if self.zsets.insert(name.to_string(), z).is_some() {
                    return Err(err(line, col, format!("zset `{name}` declared twice")));
                }
            }
            other => return Err(err(line, toks[0].col, format!("unknown directive `{other}`"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<Instance, ParseError> {
        let Some((decl, gline)) = self.group else {
            return Err(err(1, 1, "missing `group` line"));
        };
        let gerr = |e: crate::group::GroupError| err(gline, 1, e.to_string());
        let group = match &decl {
            GroupDecl::Free(s) => Group::free(s).map_err(gerr)?,
            GroupDecl::Cyclic(s) => Group::cyclic_infinite(s).map_err(gerr)?,
            GroupDecl::Shift(s) => {
                if !self.points.is_empty() || !self.maps.is_empty() || !self.subsets.is_empty() {
                    return Err(err(gline, 1, "zshift instances take only zset declarations"));
                }
                let group = Group::cyclic_infinite(s).map_err(gerr)?;
                return Ok(Instance { body: Body::Shift { group }, subsets: BTreeMap::new(), zsets: self.zsets });
            }
            GroupDecl::Finite(elements) => {
                if self.table.len() != elements.len() {
                    return Err(err(
                        gline,
                        1,
                        format!("expected {} table rows, got {}", elements.len(), self.table.len()),
                    ));
                }
                let table: Vec<Vec<usize>> = self.table.into_values().collect();
                let gens = self.generators.clone().unwrap_or_default();
                Group::finite(elements, table, &gens).map_err(gerr)?
            }
        };
        if !self.zsets.is_empty() {
            return Err(err(gline, 1, "zset declarations need `group zshift`"));
        }
        let n = self.points.len();
        let space = FiniteSpace::new(&self.points, &self.relations).map_err(|e| err(1, 1, e.to_string()))?;
        let labels: Vec<String> = match group.finite_table() {
            Some(t) => t.elements().to_vec(),
            None => group.symbols().to_vec(),
        };
        let mut images = vec![PartialBijection::empty(n); labels.len()];
        let mut touched = vec![false; labels.len()];
        for (line, label, col, x, y) in self.maps {
            let i = labels
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| err(line, col, format!("unknown group element `{label}`")))?;
            touched[i] = true;
            images[i].insert(x, y).map_err(|e| err(line, col, e.to_string()))?;
        }
        if let Some(t) = group.finite_table() {
            if !touched[t.identity()] {
                images[t.identity()] = PartialBijection::identity(n);
            }
        }
        let carrier = Carrier::new(&self.points).map_err(|e| err(1, 1, e.to_string()))?;
        let action = PartialAction::new(group, carrier, images).map_err(|e| err(gline, 1, e.to_string()))?;
        Ok(Instance { body: Body::Action { space, action }, subsets: self.subsets, zsets: BTreeMap::new() })
    }
}

fn parse_zset(line: usize, spec: &[Tok<'_>], end_col: usize) -> Result<ZSubset, ParseError> {
    let [below_kw, below, above_kw, above, flips @ ..] = spec else {
        return Err(err(line, end_col, "expected `below BITS above BITS [flip INTS]`"));
    };
    if below_kw.text != "below" {
        return Err(err(line, below_kw.col, "expected `below`"));
    }
    if above_kw.text != "above" {
        return Err(err(line, above_kw.col, "expected `above`"));
    }
    let ints = match flips {
        [] => Vec::new(),
        [kw, rest @ ..] if kw.text == "flip" => rest
            .iter()
            .map(|t| t.text.parse::<i64>().map_err(|_| err(line, t.col, format!("bad integer `{}`", t.text))))
            .collect::<Result<Vec<_>, _>>()?,
        [kw, ..] => return Err(err(line, kw.col, "expected `flip`")),
    };
    ZSubset::from_bits(below.text, above.text, ints).map_err(|e| err(line, below.col, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "\
# involution on the line model
points eta c0 c1 c2
le c0 eta
le c1 eta
le c2 eta
group finite e s
table e: e s
table s: s e
generators s
map s: eta -> eta
map s: c1 -> c2
map s: c2 -> c1
subset X: c0 c1
";

    #[test]
    fn parses_and_round_trips() {
        let inst = parse(LINE).unwrap();
        let text = inst.serialize();
        assert_eq!(parse(&text).unwrap(), inst);
        assert_eq!(parse(&text).unwrap().serialize(), text);
        let a = inst.partial_action().unwrap();
        assert_eq!(a.images()[0], PartialBijection::identity(4));
        assert_eq!(a.images()[1].len(), 3);
        assert_eq!(inst.subsets["X"], BTreeSet::from([1, 2]));
        // comments and blank lines do not matter
        assert_eq!(text.lines().next(), Some("points eta c0 c1 c2"));
    }

    #[test]
    fn shift_instances() {
        let inst = parse("group zshift u\nzset N: below 0 above 1\nzset S: below 0 above 0 flip 0\n").unwrap();
        assert_eq!(inst.zsets["N"], ZSubset::naturals());
        assert_eq!(inst.zsets["S"], ZSubset::finite([0]));
        assert_eq!(parse(&inst.serialize()).unwrap(), inst);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("points a b\nle a c\ngroup free s\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        let e = parse("points a b\ngroup free s\nmap s: a => b\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 10));
        let e = parse("points a b\ngroup free s\nmap t: a -> b\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 5));
        let e = parse("points a a\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
        let e = parse("points a b\ngroup free s\nmap s: a -> b\nmap s: b -> b\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(parse("points a\n").is_err());
        assert!(parse("group zshift u\nzset N: below 2 above 1\n").is_err());
    }

    #[test]
    fn digest_is_stable() {
        let a = parse(LINE).unwrap();
        let b = parse(&a.serialize()).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
