//! Commands over instances, their certificates and the certificate checker.
//!
//! A certificate is plain text:
//!
//! ```text
//! fwreg-certificate 1
//! command neumann --radius 3 --bound 8 --subset X
//! digest 5f1c..
//! instance 2
//! group zshift u
//! zset X: below 0 above 0 flip 0 1 3
//! subset X
//! bound 8
//! witness u*u*u*u
//! hypothesis-violated false
//! seal 0b7e..
//! end
//! ```
//!
//! The instance is embedded, so a certificate is checked on its own. The
//! seal is a SHA-256 of every preceding byte, so edits that leave the claims
//! true (say, a radius that a finite group ignores) are still rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::commensuration::{
    apply_transfixer, check_neumann, dictionary_check, is_commensurated, neumann_witness, CommensurationError,
    GSetBackend, Subset, TransfixVerdict, Transfixer,
};
use crate::format::{self, Body, Instance, ParseError};
use crate::globalization::{globalize, Globalization, GlobalizationError};
use crate::group::Word;
use crate::noetherian::{check_core, noetherian_core, CoreCertificate};
use crate::partial::Violation;
use crate::perm::PermGroup;
use crate::regularization::{glued_topology, regularize, RegularizationError, RegularizationResult};
use crate::space::{FiniteSpace, PointSet};
use crate::zset::ZSubset;

pub const HEADER: &str = "fwreg-certificate 1";

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid action: {0}")]
    Validation(String),
    #[error(transparent)]
    Globalization(#[from] GlobalizationError),
    #[error(transparent)]
    Commensuration(#[from] CommensurationError),
    #[error("{0}")]
    Core(String),
    #[error(transparent)]
    Regularization(#[from] RegularizationError),
    #[error("certificate rejected: {}", .0.join("; "))]
    Rejected(Vec<String>),
}

impl DriverError {
    /// Process exit status for this error family.
    pub fn exit_code(&self) -> u8 {
        match self {
            DriverError::Usage(_) => 2,
            DriverError::Io(_) => 3,
            DriverError::Parse(_) => 4,
            DriverError::Validation(_) => 5,
            DriverError::Globalization(_) => 6,
            DriverError::Commensuration(_) => 7,
            DriverError::Core(_) => 8,
            DriverError::Regularization(_) => 9,
            DriverError::Rejected(_) => 10,
        }
    }
}

/// User-supplied transfixing data: strips `L` per stage and/or an invariant
/// set `Y`, both written with point names of the globalization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CertStrategy {
    pub strips: BTreeMap<usize, Vec<String>>,
    pub y: Option<Vec<String>>,
}

impl CertStrategy {
    /// Lines `strip I: a b` and `y: a b` (or `y: below .. above ..`).
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut out = CertStrategy::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| ParseError { line: i + 1, column: 1, message: msg.to_string() };
            let (head, rest) = line.split_once(':').ok_or_else(|| bad("expected `strip I:` or `y:`"))?;
            let tokens: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            match head.split_whitespace().collect::<Vec<_>>()[..] {
                ["strip", stage] => {
                    let stage = stage.parse().map_err(|_| bad("bad stage number"))?;
                    if out.strips.insert(stage, tokens).is_some() {
                        return Err(bad("stage given twice"));
                    }
                }
                ["y"] => {
                    if out.y.replace(tokens).is_some() {
                        return Err(bad("`y` given twice"));
                    }
                }
                _ => return Err(bad("expected `strip I:` or `y:`")),
            }
        }
        Ok(out)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, pts) in &self.strips {
            let _ = writeln!(out, "{}", labelled(&format!("strip {i}"), pts));
        }
        if let Some(y) = &self.y {
            let _ = writeln!(out, "{}", labelled("y", y));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransfixerSpec {
    Exact,
    Symbolic,
    Cert(CertStrategy),
}

impl TransfixerSpec {
    fn name(&self) -> &'static str {
        match self {
            TransfixerSpec::Exact => "exact",
            TransfixerSpec::Symbolic => "symbolic",
            TransfixerSpec::Cert(_) => "cert",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Validate { bound: usize },
    Globalize { radius: usize },
    Commensurated { radius: usize, subset: Option<String> },
    Transfix { radius: usize, subset: Option<String>, transfixer: Option<TransfixerSpec> },
    Neumann { radius: usize, bound: usize, subset: Option<String> },
    NoetherianCore { radius: usize, subset: Option<String> },
    Regularize { radius: usize, transfixer: Option<TransfixerSpec> },
}

pub const DEFAULT_RADIUS: usize = 3;
pub const DEFAULT_BOUND: usize = 8;

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Globalize { .. } => "globalize",
            Command::Commensurated { .. } => "commensurated",
            Command::Transfix { .. } => "transfix",
            Command::Neumann { .. } => "neumann",
            Command::NoetherianCore { .. } => "noetherian-core",
            Command::Regularize { .. } => "regularize",
        }
    }

    fn transfixer(&self) -> Option<&TransfixerSpec> {
        match self {
            Command::Transfix { transfixer, .. } | Command::Regularize { transfixer, .. } => transfixer.as_ref(),
            _ => None,
        }
    }

    /// `command ...` plus `param ...` lines.
    fn echo(&self) -> String {
        let mut flags: Vec<(&str, String)> = Vec::new();
        match self {
            Command::Validate { bound } => flags.push(("bound", bound.to_string())),
            Command::Globalize { radius } => flags.push(("radius", radius.to_string())),
            Command::Commensurated { radius, subset } | Command::NoetherianCore { radius, subset } => {
                flags.push(("radius", radius.to_string()));
                flags.extend(subset.iter().map(|s| ("subset", s.clone())));
            }
            Command::Transfix { radius, subset, .. } => {
                flags.push(("radius", radius.to_string()));
                flags.extend(subset.iter().map(|s| ("subset", s.clone())));
            }
            Command::Neumann { radius, bound, subset } => {
                flags.push(("radius", radius.to_string()));
                flags.push(("bound", bound.to_string()));
                flags.extend(subset.iter().map(|s| ("subset", s.clone())));
            }
            Command::Regularize { radius, .. } => flags.push(("radius", radius.to_string())),
        }
        if let Some(t) = self.transfixer() {
            flags.push(("transfixer", t.name().to_string()));
        }
        let mut out = format!("command {}", self.name());
        for (k, v) in flags {
            let _ = write!(out, " --{k} {v}");
        }
        out.push('\n');
        if let Some(TransfixerSpec::Cert(c)) = self.transfixer() {
            for line in c.serialize().lines() {
                let _ = writeln!(out, "param {line}");
            }
        }
        out
    }

    /// Inverse of [`Command::echo`].
    fn from_echo(line: &str, params: &str) -> Result<Command, String> {
        let mut toks = line.split_whitespace();
        let name = toks.next().ok_or("empty command")?;
        let mut flags: BTreeMap<String, String> = BTreeMap::new();
        while let Some(flag) = toks.next() {
            let key = flag.strip_prefix("--").ok_or_else(|| format!("unexpected `{flag}`"))?;
            let value = toks.next().ok_or_else(|| format!("flag `{flag}` without value"))?;
            if flags.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("flag `{flag}` repeated"));
            }
        }
        let mut take_num = |k: &str| -> Result<usize, String> {
            let v = flags.remove(k).ok_or_else(|| format!("missing --{k}"))?;
            v.parse().map_err(|_| format!("bad --{k} `{v}`"))
        };
        let radius = if name == "validate" { 0 } else { take_num("radius")? };
        let bound = if matches!(name, "validate" | "neumann") { take_num("bound")? } else { 0 };
        let subset = flags.remove("subset");
        let transfixer = match flags.remove("transfixer").as_deref() {
            None => None,
            Some("exact") => Some(TransfixerSpec::Exact),
            Some("symbolic") => Some(TransfixerSpec::Symbolic),
            Some("cert") => Some(TransfixerSpec::Cert(CertStrategy::parse(params).map_err(|e| e.to_string())?)),
            Some(other) => return Err(format!("unknown transfixer `{other}`")),
        };
        let cmd = match name {
            "validate" => Command::Validate { bound },
            "globalize" => Command::Globalize { radius },
            "commensurated" => Command::Commensurated { radius, subset },
            "transfix" => Command::Transfix { radius, subset, transfixer },
            "neumann" => Command::Neumann { radius, bound, subset },
            "noetherian-core" => Command::NoetherianCore { radius, subset },
            "regularize" => Command::Regularize { radius, transfixer },
            other => return Err(format!("unknown command `{other}`")),
        };
        if let Some(k) = flags.keys().next() {
            return Err(format!("unexpected flag --{k}"));
        }
        if cmd.echo() != format!("command {line}\n{}", prefixed(params)) {
            return Err("command line is not in canonical form".into());
        }
        Ok(cmd)
    }

    /// Fills in the default transfixer for the instance kind.
    fn resolved(self, inst: &Instance) -> Command {
        let default = || match inst.body {
            Body::Shift { .. } => TransfixerSpec::Symbolic,
            Body::Action { .. } => TransfixerSpec::Exact,
        };
        match self {
            Command::Transfix { radius, subset, transfixer } => {
                Command::Transfix { radius, subset, transfixer: Some(transfixer.unwrap_or_else(default)) }
            }
            Command::Regularize { radius, transfixer } => {
                Command::Regularize { radius, transfixer: Some(transfixer.unwrap_or_else(default)) }
            }
            other => other,
        }
    }
}

fn prefixed(params: &str) -> String {
    params.lines().map(|l| format!("param {l}\n")).collect()
}

fn labelled<S: AsRef<str>>(key: &str, items: &[S]) -> String {
    let mut out = format!("{key}:");
    for s in items {
        out.push(' ');
        out.push_str(s.as_ref());
    }
    out
}

fn named(names: &[String], set: &BTreeSet<usize>) -> Vec<String> {
    set.iter().map(|&p| names[p].clone()).collect()
}

/// A produced certificate and the exit status it calls for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub text: String,
    pub status: u8,
}

/// Runs `cmd` on `inst` and writes the certificate.
pub fn run(cmd: Command, inst: &Instance) -> Result<Certificate, DriverError> {
    let cmd = cmd.resolved(inst);
    let (body, status) = body(&cmd, inst)?;
    let text = inst.serialize();
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    out.push_str(&cmd.echo());
    let _ = writeln!(out, "digest {}", inst.digest());
    let _ = writeln!(out, "instance {}", text.lines().count());
    out.push_str(&text);
    out.push_str(&body);
    let _ = writeln!(out, "seal {}", hex::encode(Sha256::digest(out.as_bytes())));
    out.push_str("end\n");
    Ok(Certificate { text: out, status })
}

fn action_parts<'a>(
    inst: &'a Instance,
    what: &str,
) -> Result<(&'a FiniteSpace, &'a crate::partial::PartialAction), DriverError> {
    match &inst.body {
        Body::Action { space, action } => Ok((space, action)),
        Body::Shift { .. } => Err(DriverError::Usage(format!("`{what}` needs an instance with points and maps"))),
    }
}

/// The subset a command works on, inside the backend's point set.
fn pick_subset(
    inst: &Instance,
    subset: Option<&str>,
    glob: Option<&Globalization>,
) -> Result<(String, Subset), DriverError> {
    match (&inst.body, glob) {
        (Body::Shift { .. }, _) => {
            let name = match subset {
                Some(n) => n.to_string(),
                None if inst.zsets.len() == 1 => inst.zsets.keys().next().unwrap().clone(),
                None => return Err(DriverError::Usage("choose a zset with --subset".into())),
            };
            let z = inst.zsets.get(&name).ok_or_else(|| DriverError::Usage(format!("no zset `{name}`")))?;
            Ok((name, Subset::Integers(z.clone())))
        }
        (Body::Action { space, .. }, Some(g)) => {
            let pts: BTreeSet<usize> = match subset {
                None => space.all(),
                Some(n) => {
                    inst.subsets.get(n).cloned().ok_or_else(|| DriverError::Usage(format!("no subset `{n}`")))?
                }
            };
            let label = subset.unwrap_or("all").to_string();
            Ok((label, Subset::Points(pts.iter().map(|&p| g.embed(p)).collect())))
        }
        (Body::Action { .. }, None) => unreachable!("action subsets live in a globalization"),
    }
}

fn backend(inst: &Instance, radius: usize) -> Result<(GSetBackend, Option<Globalization>), DriverError> {
    match &inst.body {
        Body::Shift { group } => Ok((GSetBackend::SymbolicZ(group.clone()), None)),
        Body::Action { action, .. } => {
            let g = globalize(action, radius)?;
            Ok((GSetBackend::from_globalization(g.clone())?, Some(g)))
        }
    }
}

fn subset_text(s: &Subset, names: Option<&[String]>) -> Vec<String> {
    match (s, names) {
        (Subset::Points(p), Some(n)) => named(n, p),
        (Subset::Points(p), None) => p.iter().map(usize::to_string).collect(),
        (Subset::Integers(z), _) => vec![z.to_string()],
    }
}

fn body(cmd: &Command, inst: &Instance) -> Result<(String, u8), DriverError> {
    let mut out = String::new();
    let mut status = 0;
    macro_rules! emit {
        ($($t:tt)*) => {{ let _ = writeln!(out, $($t)*); }};
    }
    match cmd {
        Command::Validate { bound } => {
            let (space, a) = action_parts(inst, "validate")?;
            let report = a.validate(*bound);
            emit!("bound {bound}");
            emit!("valid {}", report.is_valid());
            let names = space.names();
            let fmt = |w: &Word| a.group().format_word(w);
            for v in &report.violations {
                match v {
                    Violation::Identity { point } => emit!("violation identity {}", names[*point]),
                    Violation::Inverse { element, point } => {
                        emit!("violation inverse {} {}", fmt(element), names[*point])
                    }
                    Violation::Containment { g, h, point } => {
                        emit!("violation containment {} {} {}", fmt(g), fmt(h), names[*point])
                    }
                }
            }
            if !report.is_valid() {
                status = 5;
            }
        }
        Command::Globalize { radius } => {
            let (_, a) = action_parts(inst, "globalize")?;
            let g = globalize(a, *radius)?;
            write_globalization(&mut out, &g, *radius);
        }
        Command::Commensurated { radius, subset } => {
            let (e, glob) = backend(inst, *radius)?;
            let (label, x) = pick_subset(inst, subset.as_deref(), glob.as_ref())?;
            let r = is_commensurated(&e, &x)?;
            emit!("subset {label}");
            emit!("commensurated {}", r.commensurated);
            for (s, c) in &r.per_generator {
                emit!("generator {s} {}", c.map_or("infinite".to_string(), |c| c.to_string()));
            }
            emit!("radius {}", r.radius.map_or("none".to_string(), |r| r.to_string()));
            if let (Body::Action { action, .. }, None) = (&inst.body, subset) {
                let d = dictionary_check(action, *radius)?;
                let rows = [
                    ("cofinite-commensurated", Some(d.cofinite_commensurated)),
                    ("transfixed", d.transfixed),
                    ("transfixed-above", d.transfixed_above),
                    ("finely-transfixed-above", d.finely_transfixed_above),
                ];
                for (name, row) in rows {
                    match row {
                        Some(p) => emit!("dictionary {name} {} {}", p.partial, p.gset),
                        None => emit!("dictionary {name} unknown"),
                    }
                }
            }
        }
        Command::Transfix { radius, subset, transfixer } => {
            let (e, glob) = backend(inst, *radius)?;
            let names = glob.as_ref().map(Globalization::point_names);
            let (label, x) = pick_subset(inst, subset.as_deref(), glob.as_ref())?;
            let strategy = match transfixer.as_ref().expect("resolved") {
                TransfixerSpec::Exact => Transfixer::FiniteExact,
                TransfixerSpec::Symbolic => Transfixer::Symbolic,
                TransfixerSpec::Cert(c) => {
                    let y =
                        c.y.as_ref().ok_or_else(|| DriverError::Usage("certificate file has no `y:` line".into()))?;
                    Transfixer::Certificate(resolve_set(y, names.as_deref())?)
                }
            };
            let cert = apply_transfixer(&strategy, &e, &x)?;
            let n = names.as_deref();
            emit!("subset {label}");
            match &cert.verdict {
                TransfixVerdict::Transfixed { y, delta } => {
                    emit!("verdict transfixed");
                    emit!("{}", labelled("y", &subset_text(y, n)));
                    emit!("{}", labelled("delta", &subset_text(delta, n)));
                }
                TransfixVerdict::NotTransfixed { obstruction } => {
                    emit!("verdict not-transfixed");
                    emit!("obstruction {obstruction}");
                }
                TransfixVerdict::Inconclusive { radius } => {
                    emit!("verdict inconclusive");
                    emit!("radius {radius}");
                }
            }
            match &cert.above {
                Some(a) => emit!("{}", labelled("above", &subset_text(a, n))),
                None => emit!("above none"),
            }
            emit!("finely-above {}", cert.finely_above);
            match &cert.fine_strip {
                Some(s) => emit!("{}", labelled("fine-strip", &subset_text(s, n))),
                None => emit!("fine-strip none"),
            }
        }
        Command::Neumann { radius, bound, subset } => {
            let (e, glob) = backend(inst, *radius)?;
            let (label, f) = pick_subset(inst, subset.as_deref(), glob.as_ref())?;
            let w = neumann_witness(&e, &f, *bound)?;
            emit!("subset {label}");
            emit!("bound {bound}");
            emit!("witness {}", e.group().format_word(&w.g));
            emit!("hypothesis-violated {}", w.hypothesis_violated);
        }
        Command::NoetherianCore { radius, subset } => {
            let (space, a) = action_parts(inst, "noetherian-core")?;
            let glob = globalize(a, *radius)?;
            let t = glued_topology(&glob, space).map_err(|e| DriverError::Core(e.to_string()))?;
            let x: PointSet = match subset {
                None => t.embedded(),
                Some(n) => inst
                    .subsets
                    .get(n)
                    .ok_or_else(|| DriverError::Usage(format!("no subset `{n}`")))?
                    .iter()
                    .map(|&p| t.embed(p))
                    .collect(),
            };
            let core = noetherian_core(t.space(), t.group(), &x).map_err(|e| DriverError::Core(e.to_string()))?;
            emit!("radius {radius}");
            emit!("{}", labelled("space", t.space().names()));
            write_space_order(&mut out, t.space());
            write_group(&mut out, t.group());
            write_core(&mut out, t.space().names(), t.group(), &core);
        }
        Command::Regularize { radius, transfixer } => {
            let (space, a) = action_parts(inst, "regularize")?;
            let strategy = match transfixer.as_ref().expect("resolved") {
                TransfixerSpec::Exact => Transfixer::FiniteExact,
                TransfixerSpec::Symbolic => Transfixer::Symbolic,
                TransfixerSpec::Cert(c) => {
                    let glob = globalize(a, *radius)?;
                    let names = glob.point_names();
                    let mut strips = BTreeMap::new();
                    for (&i, pts) in &c.strips {
                        let Subset::Points(p) = resolve_set(pts, Some(&names))? else { unreachable!() };
                        strips.insert(i, p);
                    }
                    Transfixer::Staged(strips)
                }
            };
            let r = regularize(a, space, *radius, &strategy)?;
            write_regularization(&mut out, &r, *radius);
        }
    }
    Ok((out, status))
}

fn resolve_set(tokens: &[String], names: Option<&[String]>) -> Result<Subset, DriverError> {
    match names {
        Some(names) => tokens
            .iter()
            .map(|t| {
                names.iter().position(|n| n == t).ok_or_else(|| DriverError::Usage(format!("unknown point `{t}`")))
            })
            .collect::<Result<BTreeSet<_>, _>>()
            .map(Subset::Points),
        None => {
            let (below, above, flips) =
                zset_fields(tokens).ok_or_else(|| DriverError::Usage("bad zset in `y:`".into()))?;
            ZSubset::from_bits(&below, &above, flips)
                .map(Subset::Integers)
                .map_err(|e| DriverError::Usage(e.to_string()))
        }
    }
}

fn zset_fields(t: &[String]) -> Option<(String, String, Vec<i64>)> {
    match t {
        [b, below, a, above, rest @ ..] if b == "below" && a == "above" => {
            let flips = match rest {
                [] => Vec::new(),
                [f, ns @ ..] if f == "flip" => ns.iter().map(|n| n.parse().ok()).collect::<Option<_>>()?,
                _ => return None,
            };
            Some((below.clone(), above.clone(), flips))
        }
        _ => None,
    }
}

fn write_globalization(out: &mut String, g: &Globalization, radius: usize) {
    let names = g.point_names();
    let group = g.group();
    let _ = writeln!(out, "radius {radius}");
    let _ = writeln!(out, "exact {}", g.is_exact());
    let _ = writeln!(out, "points {}", g.len());
    for (p, gp) in g.points().iter().enumerate() {
        let _ = writeln!(out, "point {} {} {}", names[p], group.format_word(&gp.word), g.carrier_names()[gp.point]);
    }
    for l in group.letters() {
        let sym = group.format_word(&Word::letter(l));
        for p in 0..g.len() {
            if let Some(q) = g.act_letter(l, p) {
                let _ = writeln!(out, "act {sym}: {} -> {}", names[p], names[q]);
            }
        }
    }
}

fn write_space_order(out: &mut String, space: &FiniteSpace) {
    for (x, y) in space.generating_relations() {
        let _ = writeln!(out, "le {} {}", space.name(x), space.name(y));
    }
}

fn write_group(out: &mut String, group: &PermGroup) {
    let _ = writeln!(out, "group-order {}", group.order());
}

fn write_core(out: &mut String, names: &[String], group: &PermGroup, core: &CoreCertificate) {
    let _ = writeln!(out, "{}", labelled("x", &named(names, &core.x)));
    for (p, u) in core.u_sets.iter().enumerate() {
        let _ = writeln!(out, "{}", labelled(&format!("u-set {}", names[p]), &named(names, u)));
    }
    let _ = writeln!(out, "{}", labelled("minimal-dense-open", &named(names, &core.minimal_dense_open)));
    let _ = writeln!(out, "{}", labelled("k", &named(names, &core.k)));
    let _ = writeln!(out, "{}", labelled("w", &named(names, &core.w)));
    let _ = writeln!(out, "{}", labelled("u-prime", &named(names, &core.u_prime)));
    let _ = writeln!(out, "{}", labelled("u", &named(names, &core.u)));
    for (&(a, b), w) in &core.pair_witness {
        let _ = writeln!(out, "witness {} {}: {}", names[a], names[b], group.format_word(w));
    }
}

fn write_regularization(out: &mut String, r: &RegularizationResult, radius: usize) {
    let t = &r.top;
    let names = t.space().names();
    let group = t.group();
    let words = |j: &[usize]| -> Vec<String> { j.iter().map(|&g| group.format_word(r.word(g))).collect() };
    let _ = writeln!(out, "radius {radius}");
    let _ = writeln!(out, "{}", labelled("glued", names));
    write_space_order(out, t.space());
    write_group(out, group);
    let _ = writeln!(out, "d {}", r.d);
    for s in &r.stages {
        let i = s.i;
        let sets = [
            ("z", &s.z),
            ("y", &s.y),
            ("k", &s.k),
            ("y-i", &s.y_i),
            ("l", &s.l),
            ("l-dot", &s.l_dot),
            ("z-prime", &s.z_prime),
            ("y-prime", &s.y_prime),
            ("y-prime-i", &s.y_prime_i),
            ("hull", &s.hull),
        ];
        let _ = writeln!(out, "{}", labelled(&format!("stage {i} j"), &words(&s.j)));
        for (key, set) in sets {
            let _ = writeln!(out, "{}", labelled(&format!("stage {i} {key}"), &named(names, set)));
        }
        let _ = writeln!(out, "stage {i} max-hk-meet {}", s.max_hk_meet);
        let _ = writeln!(out, "stage {i} h {}", group.format_word(r.word(s.h)));
        let _ = writeln!(out, "stage {i} degenerate {}", s.degenerate);
        let _ = writeln!(out, "{}", labelled(&format!("stage {i} j-next"), &words(&s.j_next)));
    }
    let _ = writeln!(out, "{}", labelled("final-j", &words(&r.final_j)));
    let _ = writeln!(out, "{}", labelled("final-z", &named(names, &r.final_z)));
    let _ = writeln!(out, "{}", labelled("noetherian-open", &named(names, &r.noetherian_open)));
    let sub: Vec<String> = r.core_points.iter().map(|&p| names[p].clone()).collect();
    write_core(out, &sub, &r.core_group(), &r.core);
}

/// A parsed certificate, before any semantic checking.
struct Parsed {
    command: Command,
    instance: Instance,
    body: Vec<String>,
}

fn parse_certificate(text: &str) -> Result<Parsed, String> {
    let mut lines = text.split_inclusive('\n');
    let mut next =
        |what: &str| lines.next().map(|l| l.strip_suffix('\n').unwrap_or(l)).ok_or(format!("missing {what}"));
    if next("header")? != HEADER {
        return Err("bad header".into());
    }
    let command = next("command")?.strip_prefix("command ").ok_or("missing command line")?.to_string();
    let mut params = String::new();
    let mut line = next("digest")?;
    while let Some(p) = line.strip_prefix("param ") {
        params.push_str(p);
        params.push('\n');
        line = next("digest")?;
    }
    let digest = line.strip_prefix("digest ").ok_or("missing digest line")?.to_string();
    let count: usize =
        next("instance")?.strip_prefix("instance ").and_then(|n| n.parse().ok()).ok_or("bad instance line")?;
    let mut inst_text = String::new();
    for _ in 0..count {
        inst_text.push_str(next("instance text")?);
        inst_text.push('\n');
    }
    if hex::encode(Sha256::digest(inst_text.as_bytes())) != digest {
        return Err("instance digest mismatch".into());
    }
    let instance = format::parse(&inst_text).map_err(|e| format!("embedded instance: {e}"))?;
    if instance.serialize() != inst_text {
        return Err("embedded instance is not canonical".into());
    }
    let mut body = Vec::new();
    loop {
        let l = next("end")?;
        if l == "end" {
            break;
        }
        body.push(l.to_string());
    }
    let seal = body.pop().and_then(|l| l.strip_prefix("seal ").map(str::to_string)).ok_or("missing seal")?;
    let sealed = text.len() - "end\n".len() - "seal \n".len() - seal.len();
    if !text.is_char_boundary(sealed) || hex::encode(Sha256::digest(&text.as_bytes()[..sealed])) != seal {
        return Err("seal does not match the certificate contents".into());
    }
    if lines.next().is_some() {
        return Err("text after `end`".into());
    }
    if !text.ends_with("end\n") {
        return Err("missing final newline".into());
    }
    let command = Command::from_echo(&command, &params)?;
    Ok(Parsed { command, instance, body })
}

/// Checks a certificate: structure and digest, each recorded witness against
/// the embedded instance, then every remaining field against a deterministic
/// replay. Returns the problems found, empty when accepted.
pub fn verify(text: &str) -> Vec<String> {
    let parsed = match parse_certificate(text) {
        Ok(p) => p,
        Err(e) => return vec![e],
    };
    let mut problems = check_claims(&parsed);
    match run(parsed.command.clone(), &parsed.instance) {
        Ok(replay) if replay.text == text => {}
        Ok(replay) => {
            let mine = replay.text.lines().skip_while(|l| !l.starts_with("instance ")).collect::<Vec<_>>();
            let theirs = text.lines().skip_while(|l| !l.starts_with("instance ")).collect::<Vec<_>>();
            let at = mine.iter().zip(&theirs).position(|(a, b)| a != b).unwrap_or(mine.len().min(theirs.len()));
            problems.push(format!(
                "field differs from replay: `{}` (expected `{}`)",
                theirs.get(at).unwrap_or(&"<missing>"),
                mine.get(at).unwrap_or(&"<missing>")
            ));
        }
        Err(e) => problems.push(format!("replay failed: {e}")),
    }
    problems
}

fn field<'a>(body: &'a [String], key: &str) -> Option<&'a str> {
    body.iter().find_map(|l| l.strip_prefix(key))
}

fn tokens_after(body: &[String], key: &str) -> Option<Vec<String>> {
    field(body, &format!("{key}:")).map(|r| r.split_whitespace().map(str::to_string).collect())
}

/// Witness-level checks that do not depend on re-running any search.
fn check_claims(p: &Parsed) -> Vec<String> {
    let mut problems = Vec::new();
    let inst = &p.instance;
    match &p.command {
        Command::Validate { .. } => {
            let Some(a) = inst.partial_action() else {
                return vec!["validate certificate on a shift instance".into()];
            };
            let names = a.carrier().names();
            for l in p.body.iter().filter_map(|l| l.strip_prefix("violation containment ")) {
                let t: Vec<&str> = l.split_whitespace().collect();
                let [g, h, x] = t[..] else {
                    problems.push(format!("malformed violation `{l}`"));
                    continue;
                };
                let (Ok(g), Ok(h), Some(x)) =
                    (a.group().parse_word(g), a.group().parse_word(h), names.iter().position(|n| n == x))
                else {
                    problems.push(format!("unknown names in violation `{l}`"));
                    continue;
                };
                let (Ok(fg), Ok(fh), Ok(fgh)) =
                    (a.evaluate(&g), a.evaluate(&h), a.evaluate(&a.group().multiply(&g, &h)))
                else {
                    problems.push(format!("cannot evaluate violation `{l}`"));
                    continue;
                };
                let two_step = fh.apply(x).and_then(|y| fg.apply(y));
                if two_step.is_none() || two_step == fgh.apply(x) {
                    problems.push(format!("violation `{l}` is not a violation"));
                }
            }
        }
        Command::Neumann { radius, bound, subset } => {
            let Some(w) = field(&p.body, "witness ") else {
                return vec!["missing witness".into()];
            };
            let Ok((e, glob)) = backend(inst, *radius) else {
                return vec!["backend could not be rebuilt".into()];
            };
            let Ok(w) = e.group().parse_word(w) else {
                return vec![format!("witness `{w}` is not a word")];
            };
            let Ok((_, f)) = pick_subset(inst, subset.as_deref(), glob.as_ref()) else {
                return vec!["subset could not be rebuilt".into()];
            };
            if !check_neumann(&e, &f, &w) {
                problems.push("witness does not separate F from gF".into());
            }
            let earlier =
                e.group().ball(Some(*bound)).into_iter().take_while(|v| *v != w).find(|v| check_neumann(&e, &f, v));
            if let Some(v) = earlier {
                problems.push(format!("witness is not minimal: `{}` comes first", e.group().format_word(&v)));
            }
        }
        Command::NoetherianCore { radius, .. } | Command::Regularize { radius, .. } => {
            problems.extend(check_core_claims(p, *radius));
        }
        _ => {}
    }
    problems
}

fn check_core_claims(p: &Parsed, radius: usize) -> Vec<String> {
    let Some(a) = p.instance.partial_action() else {
        return vec!["core certificate on a shift instance".into()];
    };
    let space = p.instance.space().expect("action instance");
    let Ok(glob) = globalize(a, radius) else {
        return vec!["globalization could not be rebuilt".into()];
    };
    let Ok(t) = glued_topology(&glob, space) else {
        return vec!["glued space could not be rebuilt".into()];
    };
    // core sets are named by points of the glued space
    let y = t.space();
    let lookup = |names: &[String]| -> Option<PointSet> {
        names.iter().map(|n| y.names().iter().position(|m| m == n)).collect()
    };
    let mut problems = Vec::new();
    let (Some(u), Some(x)) =
        (tokens_after(&p.body, "u").and_then(|v| lookup(&v)), tokens_after(&p.body, "x").and_then(|v| lookup(&v)))
    else {
        return vec!["missing or unknown `u:`/`x:` sets".into()];
    };
    let host: PointSet = match tokens_after(&p.body, "noetherian-open") {
        Some(v) => match lookup(&v) {
            Some(s) => s,
            None => return vec!["unknown points in `noetherian-open:`".into()],
        },
        None => y.all(),
    };
    let sub = y.subspace(&host);
    let group = crate::noetherian::restrict_group(t.group(), &host);
    let pos = |q: usize| host.iter().position(|&h| h == q);
    let (Some(u_local), Some(x_local)) = (
        u.iter().map(|&q| pos(q)).collect::<Option<PointSet>>(),
        x.iter().map(|&q| pos(q)).collect::<Option<PointSet>>(),
    ) else {
        return vec!["core sets leave the noetherian open".into()];
    };
    if !t.is_invariant(&host) || !y.is_open(&host) || !y.is_dense(&host) {
        problems.push("noetherian open is not an invariant dense open".into());
    }
    let mut witnesses = BTreeMap::new();
    for l in p.body.iter().filter_map(|l| l.strip_prefix("witness ")) {
        let Some((pair, w)) = l.split_once(": ") else {
            problems.push(format!("malformed witness `{l}`"));
            continue;
        };
        let pts: Vec<Option<usize>> =
            pair.split_whitespace().map(|n| y.names().iter().position(|m| m == n).and_then(pos)).collect();
        match (&pts[..], group.parse_word(w)) {
            ([Some(a), Some(b)], Some(w)) => {
                witnesses.insert((*a, *b), w);
            }
            _ => problems.push(format!("unknown names in witness `{l}`")),
        }
    }
    let cert = CoreCertificate {
        x: x_local,
        u_sets: Vec::new(),
        minimal_dense_open: PointSet::new(),
        k: PointSet::new(),
        w: PointSet::new(),
        u_prime: PointSet::new(),
        u: u_local,
        pair_witness: witnesses,
    };
    problems.extend(check_core(&sub, &group, &cert));
    problems
}

/// Parses, checks and returns the verdict as a certificate-style error.
pub fn verify_or_reject(text: &str) -> Result<(), DriverError> {
    let problems = verify(text);
    if problems.is_empty() {
        Ok(())
    } else {
        Err(DriverError::Rejected(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::example;

    /// Recomputes the seal so a forged field reaches the claim checks.
    fn reseal(text: &str) -> String {
        let body = &text[..text.rfind("seal ").unwrap()];
        format!("{body}seal {}\nend\n", hex::encode(Sha256::digest(body.as_bytes())))
    }

    fn cert(cmd: Command, name: &str) -> Certificate {
        run(cmd, &example(name).unwrap()).unwrap()
    }

    #[test]
    fn shift_transfix_verdict() {
        let c = cert(Command::Transfix { radius: 3, subset: None, transfixer: None }, "zshift-N");
        assert!(c.text.contains("verdict not-transfixed\n"), "{}", c.text);
        assert!(c.text.contains("--transfixer symbolic"));
        assert!(verify(&c.text).is_empty());
        let c = cert(Command::Transfix { radius: 3, subset: None, transfixer: None }, "zshift-singleton");
        assert!(c.text.contains("verdict transfixed\ny: below 0 above 0\n"), "{}", c.text);
        assert!(c.text.contains("above none\n"));
    }

    #[test]
    fn broken_validation() {
        let c = cert(Command::Validate { bound: 3 }, "z2-broken");
        assert_eq!(c.status, 5);
        assert!(c.text.contains("valid false\n"));
        assert!(c.text.contains("violation containment s s 1\n"), "{}", c.text);
        assert!(verify(&c.text).is_empty(), "{:?}", verify(&c.text));
    }

    #[test]
    fn regularize_line_model() {
        let c = cert(Command::Regularize { radius: 3, transfixer: None }, "z2-a1");
        assert!(c.text.contains("\nu: eta c1 c2\n"), "{}", c.text);
        assert!(c.text.contains("\nnoetherian-open: eta c1 c2\n"));
        assert!(verify(&c.text).is_empty(), "{:?}", verify(&c.text));
        let forged = reseal(&c.text.replace("\nu: eta c1 c2\n", "\nu: eta c1\n"));
        let problems = verify(&forged);
        assert!(problems.iter().any(|p| p.contains("core:") || p.contains("U ")), "{problems:?}");
    }

    #[test]
    fn staged_strips_from_a_file() {
        let strategy = CertStrategy::parse("strip 0: c0\n").unwrap();
        let cmd = Command::Regularize { radius: 3, transfixer: Some(TransfixerSpec::Cert(strategy)) };
        let c = cert(cmd, "z2-a1");
        assert!(c.text.contains("param strip 0: c0\n"));
        assert!(verify(&c.text).is_empty(), "{:?}", verify(&c.text));
        let bad = CertStrategy::parse("strip 0: c1\n").unwrap();
        let err = run(
            Command::Regularize { radius: 3, transfixer: Some(TransfixerSpec::Cert(bad)) },
            &example("z2-a1").unwrap(),
        );
        assert_eq!(err.unwrap_err().exit_code(), 9);
    }

    #[test]
    fn neumann_on_shift() {
        let inst = format::parse("group zshift u\nzset F: below 0 above 0 flip 0 1 3\n").unwrap();
        let c = run(Command::Neumann { radius: 3, bound: 8, subset: None }, &inst).unwrap();
        assert!(c.text.contains("witness u*u*u*u\n"), "{}", c.text);
        assert!(verify(&c.text).is_empty());
        let forged = c.text.replace("witness u*u*u*u", "witness u*u*u*u*u");
        assert_eq!(verify(&forged), vec!["seal does not match the certificate contents".to_string()]);
        let problems = verify(&reseal(&forged));
        assert!(problems.iter().any(|p| p.contains("not minimal")), "{problems:?}");
    }

    #[test]
    fn deterministic_and_tamper_evident() {
        for (cmd, name) in [
            (Command::Globalize { radius: 2 }, "zshift-window"),
            (Command::Commensurated { radius: 3, subset: None }, "z2-a1"),
            (Command::NoetherianCore { radius: 3, subset: None }, "z2-a2"),
        ] {
            let a = cert(cmd.clone(), name);
            let b = cert(cmd, name);
            assert_eq!(a, b);
            assert!(verify(&a.text).is_empty(), "{name}: {:?}", verify(&a.text));
            let digest_line = a.text.lines().find(|l| l.starts_with("digest ")).unwrap();
            let mut flipped = digest_line.to_string();
            let last = flipped.pop().unwrap();
            flipped.push(if last == '0' { '1' } else { '0' });
            assert!(!verify(&a.text.replace(digest_line, &flipped)).is_empty());
        }
    }

    #[test]
    fn echo_round_trips() {
        let cmds = [
            Command::Validate { bound: 2 },
            Command::Neumann { radius: 1, bound: 4, subset: Some("F".into()) },
            Command::Transfix { radius: 2, subset: None, transfixer: Some(TransfixerSpec::Exact) },
            Command::Regularize {
                radius: 2,
                transfixer: Some(TransfixerSpec::Cert(CertStrategy::parse("strip 1:\nstrip 0: a b\n").unwrap())),
            },
        ];
        for c in cmds {
            let echo = c.echo();
            let (first, rest) = echo.split_once('\n').unwrap();
            let params: String = rest.lines().map(|l| format!("{}\n", l.strip_prefix("param ").unwrap())).collect();
            assert_eq!(Command::from_echo(first.strip_prefix("command ").unwrap(), &params).unwrap(), c);
        }
    }
}
