//! On/Off delta catalogs: a seed cluster plus, for every smaller size, the
//! sites to drop and add. Any catalogued cluster is rebuilt by walking the
//! chain down from the seed and relaxing once.
//!
//! Text form (`MIFCAT 1`):
//!
//! ```text
//! MIFCAT 1
//! sites <count>
//! <index> <x> <y> <z>
//! entries <n_min> <n_max>
//! n=<n> on=<i,...|-> off=<i,...|-> type=<1|2|3|5|-> e_init=<v|-> e_min=<v|-> adj=<k|->
//! ```
//!
//! Entry lines run from `n_max` down to `n_min`. Lines starting with `#` and
//! blank lines are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point3, Rotation};
use crate::lattice::{gen_if, shells_enclosing, Lattice, Site};
use crate::minimize::{relax, RelaxOptions, RelaxResult};
use crate::ops::{adj, classify, GeometricType, IndexCluster, AXIS_TOL};
use crate::potential::{cluster_energy, PotentialModel};

/// Tolerance for matching catalog and rotated coordinates to lattice sites.
pub const SITE_TOL: f64 = 1e-6;
/// Expected and computed energies further apart than this are flagged.
pub const ENERGY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub n: usize,
    pub on: Vec<usize>,
    pub off: Vec<usize>,
    pub kind: Option<GeometricType>,
    pub e_init: Option<f64>,
    pub e_min: Option<f64>,
    pub adj: Option<usize>,
}

impl CatalogEntry {
    pub fn new(n: usize, on: Vec<usize>, off: Vec<usize>) -> Self {
        CatalogEntry {
            n,
            on,
            off,
            kind: None,
            e_init: None,
            e_min: None,
            adj: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    sites: Lattice,
    if_index: Vec<usize>,
    entries: BTreeMap<usize, CatalogEntry>,
}

fn integrity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::CatalogIntegrity(msg.into()))
}

impl Catalog {
    /// Validates the table and the delta chain. Every table point must be a
    /// site of the IF lattice; its shell and sublattice are taken from there.
    pub fn new(site_table: Vec<Point3>, entries: Vec<CatalogEntry>) -> Result<Self> {
        if site_table.is_empty() {
            return integrity("empty site table");
        }
        let radius = site_table.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let lattice = gen_if(shells_enclosing(radius).max(1))?;
        let mut sites = Vec::with_capacity(site_table.len());
        let mut if_index = Vec::with_capacity(site_table.len());
        for (k, &p) in site_table.iter().enumerate() {
            let Some(i) = lattice.locate(p, SITE_TOL)? else {
                return integrity(format!(
                    "site {k} ({}, {}, {}) is not an IF lattice site",
                    p.x, p.y, p.z
                ));
            };
            if if_index.contains(&i) {
                return integrity(format!("site {k} duplicates an earlier site"));
            }
            let s = lattice.site(i).unwrap();
            sites.push(Site {
                position: p,
                shell: s.shell,
                sublattice: s.sublattice,
                index: k,
            });
            if_index.push(i);
        }

        let mut map = BTreeMap::new();
        for e in entries {
            let n = e.n;
            if map.insert(n, e).is_some() {
                return integrity(format!("duplicate entry n={n}"));
            }
        }
        let (Some(&n_min), Some(&n_max)) = (map.keys().next(), map.keys().next_back()) else {
            return integrity("no entries (the seed entry is missing)");
        };
        if n_min < 2 {
            return integrity(format!("entry n={n_min} is below 2"));
        }
        if map.len() != n_max - n_min + 1 {
            return integrity(format!("entries between {n_min} and {n_max} are not contiguous"));
        }
        let cat = Catalog {
            sites: Lattice::from_sites(sites)?,
            if_index,
            entries: map,
        };
        cat.check_chain()?;
        Ok(cat)
    }

    fn check_chain(&self) -> Result<()> {
        let count = self.sites.len();
        let seed = &self.entries[&self.n_max()];
        if !seed.off.is_empty() {
            return integrity(format!("seed entry n={} has a non-empty off list", seed.n));
        }
        let mut current = BTreeSet::new();
        for e in self.entries.values().rev() {
            for list in [&e.on, &e.off] {
                if let Some(&i) = list.iter().find(|&&i| i >= count) {
                    return integrity(format!("entry n={}: site {i} is outside the table", e.n));
                }
                if list.iter().collect::<BTreeSet<_>>().len() != list.len() {
                    return integrity(format!("entry n={}: repeated site index", e.n));
                }
            }
            for i in &e.off {
                if !current.remove(i) {
                    return integrity(format!("entry n={}: off site {i} is not in cluster {}", e.n, e.n + 1));
                }
            }
            for &i in &e.on {
                if !current.insert(i) {
                    return integrity(format!("entry n={}: on site {i} is already present", e.n));
                }
            }
            if current.len() != e.n {
                return integrity(format!("entry n={}: chain yields {} sites", e.n, current.len()));
            }
            if e.n != self.n_max() {
                if let Some(a) = e.adj {
                    if a != e.on.len() + e.off.len() {
                        return integrity(format!(
                            "entry n={}: adj={a} but |on|+|off|={}",
                            e.n,
                            e.on.len() + e.off.len()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The site table as a lattice with dense indices `0..count`.
    pub fn sites(&self) -> &Lattice {
        &self.sites
    }

    /// IF lattice index of each table site.
    pub fn if_indices(&self) -> &[usize] {
        &self.if_index
    }

    pub fn site_table(&self) -> Vec<Point3> {
        self.sites.sites().iter().map(|s| s.position).collect()
    }

    pub fn entries(&self) -> impl DoubleEndedIterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    pub fn entry(&self, n: usize) -> Option<&CatalogEntry> {
        self.entries.get(&n)
    }

    pub fn n_min(&self) -> usize {
        *self.entries.keys().next().unwrap()
    }

    pub fn n_max(&self) -> usize {
        *self.entries.keys().next_back().unwrap()
    }

    /// Replaces the stored type and energies of entry `n`.
    pub fn annotate(
        &mut self,
        n: usize,
        kind: Option<GeometricType>,
        e_init: Option<f64>,
        e_min: Option<f64>,
    ) -> Result<()> {
        let Some(e) = self.entries.get_mut(&n) else {
            return integrity(format!("no entry for n={n}"));
        };
        e.kind = kind;
        e.e_init = e_init;
        e.e_min = e_min;
        Ok(())
    }
}

/// Rebuilds the catalogued cluster of size `n` by applying the deltas from
/// the seed downwards.
pub fn reconstruct(cat: &Catalog, n: usize) -> Result<IndexCluster<'_>> {
    if !cat.entries.contains_key(&n) {
        return integrity(format!(
            "no entry for n={n} (catalog covers {}..{})",
            cat.n_min(),
            cat.n_max()
        ));
    }
    let mut current = BTreeSet::new();
    for e in cat.entries.range(n..).rev().map(|(_, e)| e) {
        for i in &e.off {
            current.remove(i);
        }
        current.extend(e.on.iter().copied());
    }
    if current.len() != n {
        return integrity(format!("entry n={n}: chain yields {} sites", current.len()));
    }
    IndexCluster::new(&cat.sites, current)
}

#[derive(Debug, Clone)]
pub struct LookupReport<'a> {
    pub n: usize,
    pub cluster: IndexCluster<'a>,
    pub relaxed: RelaxResult,
    pub kind: GeometricType,
    pub e_init: f64,
    pub e_min: f64,
    pub expected: Option<CatalogEntry>,
    /// Set when a stored energy differs from the computed one by more than
    /// [`ENERGY_TOL`].
    pub mismatch: bool,
}

/// Reconstructs entry `n`, relaxes it from the lattice positions and
/// compares against the stored energies.
pub fn lookup_and_relax<'a>(
    cat: &'a Catalog,
    m: &PotentialModel,
    n: usize,
    opts: &RelaxOptions,
) -> Result<LookupReport<'a>> {
    let cluster = reconstruct(cat, n)?;
    let start = cluster.lattice_cluster();
    let (e_init, relaxed) = if n >= 2 {
        (cluster_energy(m, &start)?, relax(m, &start, opts)?)
    } else {
        return integrity("lookup needs at least two particles");
    };
    let kind = classify(&cluster, &relaxed.cluster)?;
    let expected = cat.entry(n).cloned();
    let off = |stored: Option<f64>, got: f64| stored.is_some_and(|v| (v - got).abs() > ENERGY_TOL);
    let mismatch = expected
        .as_ref()
        .is_some_and(|e| off(e.e_init, e_init) || off(e.e_min, relaxed.energy));
    Ok(LookupReport {
        n,
        cluster,
        e_min: relaxed.energy,
        relaxed,
        kind,
        e_init,
        expected,
        mismatch,
    })
}

/// Builds a catalog from clusters of sizes `n_max, n_max−1, ...` drawn from
/// one lattice. Referenced sites are renumbered densely in ascending order
/// of their lattice index.
pub fn build_catalog(clusters: &[IndexCluster]) -> Result<Catalog> {
    let Some(first) = clusters.first() else {
        return invalid("build_catalog needs at least one cluster");
    };
    for w in clusters.windows(2) {
        if w[1].len() + 1 != w[0].len() {
            return invalid(format!("sizes {} and {} are not consecutive", w[0].len(), w[1].len()));
        }
        adj(&w[0], &w[1])?;
    }
    if clusters.last().unwrap().len() < 2 {
        return invalid("catalogued clusters need at least two particles");
    }
    let used: BTreeSet<usize> = clusters.iter().flat_map(|c| c.indices().iter().copied()).collect();
    let dense: BTreeMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let lattice = first.lattice();
    let table = used.iter().map(|&i| lattice.position(i)).collect::<Result<Vec<_>>>()?;
    let remap = |s: &mut dyn Iterator<Item = &usize>| s.map(|i| dense[i]).collect::<Vec<_>>();

    let mut entries = vec![CatalogEntry::new(
        first.len(),
        remap(&mut first.indices().iter()),
        vec![],
    )];
    for w in clusters.windows(2) {
        let (big, small) = (w[0].indices(), w[1].indices());
        let mut e = CatalogEntry::new(
            w[1].len(),
            remap(&mut small.difference(big)),
            remap(&mut big.difference(small)),
        );
        e.adj = Some(e.on.len() + e.off.len());
        entries.push(e);
    }
    Catalog::new(table, entries)
}

/// Best rotation of `movable` towards `fixed`.
#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    pub rotation_index: usize,
    pub rotation: Rotation,
    pub adj: usize,
    pub cluster: IndexCluster<'a>,
}

fn rotate_or_violation<'a>(c: &IndexCluster<'a>, r: &Rotation, k: usize) -> Result<IndexCluster<'a>> {
    let l = c.lattice();
    let mut out = Vec::with_capacity(c.len());
    for &i in c.indices() {
        match l.locate(r.apply(l.position(i)?), SITE_TOL)? {
            Some(j) => out.push(j),
            None => return Err(Error::SymmetryViolation { rotation: k, site: i }),
        }
    }
    IndexCluster::new(l, out)
}

/// The rotation from `rotations` minimising Adj between `fixed` and the
/// rotated `movable`; ties go to the earliest rotation.
pub fn align_min_adj<'a>(
    fixed: &IndexCluster<'a>,
    movable: &IndexCluster<'a>,
    rotations: &[Rotation],
) -> Result<Alignment<'a>> {
    adj(fixed, movable)?;
    let mut best: Option<Alignment> = None;
    for (k, r) in rotations.iter().enumerate() {
        let rc = rotate_or_violation(movable, r, k)?;
        let a = adj(fixed, &rc)?;
        if best.as_ref().is_none_or(|b| a < b.adj) {
            best = Some(Alignment {
                rotation_index: k,
                rotation: *r,
                adj: a,
                cluster: rc,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no rotations given".into()))
}

fn y_plus_count(c: &IndexCluster) -> usize {
    c.indices()
        .iter()
        .filter(|&&i| {
            let p = c.lattice().position(i).unwrap();
            let r = p.norm();
            r > 0.0 && (p.y / r).clamp(-1.0, 1.0).acos() <= AXIS_TOL
        })
        .count()
}

/// Orients a descending chain for a compact site table: the seed is turned
/// to put as many members as possible on the Y⁺ semi-axis, then each
/// smaller cluster is rotated to minimise Adj against its predecessor.
pub fn mif_chain<'a>(clusters: &[IndexCluster<'a>], rotations: &[Rotation]) -> Result<Vec<IndexCluster<'a>>> {
    let Some(seed) = clusters.first() else {
        return Ok(vec![]);
    };
    let mut best: Option<(usize, IndexCluster)> = None;
    for (k, r) in rotations.iter().enumerate() {
        let rc = rotate_or_violation(seed, r, k)?;
        let count = y_plus_count(&rc);
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, rc));
        }
    }
    let mut out = vec![best.map(|b| b.1).unwrap_or_else(|| seed.clone())];
    for c in &clusters[1..] {
        let next = align_min_adj(out.last().unwrap(), c, rotations)?.cluster;
        out.push(next);
    }
    Ok(out)
}

/// Decimal text with at least 12 significant digits that parses back to the
/// same value.
pub fn format_real(v: f64) -> String {
    let mut s = format!("{v}");
    let digits = s
        .trim_start_matches('-')
        .trim_start_matches(['0', '.'])
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    if digits < 12 {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = if v == 0.0 { 11 } else { 12 - digits };
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

fn list(v: &[usize]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        let mut sorted = v.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn serialize_catalog(cat: &Catalog) -> String {
    let mut out = String::from("MIFCAT 1\n");
    let _ = writeln!(out, "sites {}", cat.sites.len());
    for s in cat.sites.sites() {
        let p = s.position;
        let _ = writeln!(
            out,
            "{} {} {} {}",
            s.index,
            format_real(p.x),
            format_real(p.y),
            format_real(p.z)
        );
    }
    let _ = writeln!(out, "entries {} {}", cat.n_min(), cat.n_max());
    for e in cat.entries.values().rev() {
        let _ = writeln!(
            out,
            "n={} on={} off={} type={} e_init={} e_min={} adj={}",
            e.n,
            list(&e.on),
            list(&e.off),
            opt(e.kind.map(|t| t.code())),
            opt(e.e_init.map(format_real)),
            opt(e.e_min.map(format_real)),
            opt(e.adj),
        );
    }
    out
}

struct Lines<'t> {
    inner: std::iter::Enumerate<std::str::Lines<'t>>,
    last: usize,
}

impl<'t> Lines<'t> {
    fn next(&mut self) -> Option<(usize, &'t str)> {
        for (k, l) in self.inner.by_ref() {
            self.last = k + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((k + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'t str)> {
        self.next().ok_or_else(|| Error::Syntax {
            line: self.last + 1,
            message: format!("expected {what}, found end of input"),
        })
    }
}

fn syntax<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Syntax {
        line,
        message: message.into(),
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse().or_else(|_| syntax(line, format!("invalid {what} '{s}'")))
}

fn parse_real(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = parse_num(line, what, s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        syntax(line, format!("non-finite {what}"))
    }
}

fn header<'t>(line: usize, text: &'t str, key: &str, count: usize) -> Result<Vec<&'t str>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.first() != Some(&key) || tokens.len() != count + 1 {
        return syntax(line, format!("expected '{key}' followed by {count} value(s)"));
    }
    Ok(tokens[1..].to_vec())
}

fn parse_entry(line: usize, text: &str) -> Result<CatalogEntry> {
    const KEYS: [&str; 7] = ["n", "on", "off", "type", "e_init", "e_min", "adj"];
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != KEYS.len() {
        return syntax(line, format!("entry needs exactly the fields {}", KEYS.join(" ")));
    }
    let mut values = Vec::with_capacity(KEYS.len());
    for (tok, key) in tokens.iter().zip(KEYS) {
        match tok.split_once('=') {
            Some((k, v)) if k == key => values.push(v),
            Some((k, _)) if !KEYS.contains(&k) => return syntax(line, format!("unknown key '{k}'")),
            _ => return syntax(line, format!("expected '{key}=' but found '{tok}'")),
        }
    }
    let absent = |v: &str| v == "-";
    let idx_list = |v: &str, what: &str| -> Result<Vec<usize>> {
        if absent(v) {
            return Ok(vec![]);
        }
        v.split(',').map(|s| parse_num(line, what, s)).collect()
    };
    let n: usize = parse_num(line, "size", values[0])?;
    let kind = if absent(values[3]) {
        None
    } else {
        let code: u8 = parse_num(line, "type", values[3])?;
        Some(GeometricType::from_code(code).ok_or_else(|| Error::Syntax {
            line,
            message: format!("unknown type code {code}"),
        })?)
    };
    let real = |v: &str, what: &str| {
        if absent(v) {
            Ok(None)
        } else {
            parse_real(line, what, v).map(Some)
        }
    };
    Ok(CatalogEntry {
        n,
        on: idx_list(values[1], "on index")?,
        off: idx_list(values[2], "off index")?,
        kind,
        e_init: real(values[4], "e_init")?,
        e_min: real(values[5], "e_min")?,
        adj: if absent(values[6]) {
            None
        } else {
            Some(parse_num(line, "adj", values[6])?)
        },
    })
}

pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, magic) = lines.expect("'MIFCAT 1'")?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["MIFCAT", "1"] {
        return syntax(ln, "expected 'MIFCAT 1'");
    }
    let (ln, t) = lines.expect("'sites <count>'")?;
    let count: usize = parse_num(ln, "site count", header(ln, t, "sites", 1)?[0])?;
    let mut table = Vec::with_capacity(count);
    for k in 0..count {
        let (ln, t) = lines.expect("a site line")?;
        let tokens: Vec<&str> = t.split_whitespace().collect();
        if tokens.len() != 4 {
            return syntax(ln, "site line must be '<index> <x> <y> <z>'");
        }
        let idx: usize = parse_num(ln, "site index", tokens[0])?;
        if idx != k {
            return syntax(ln, format!("site index {idx} out of order, expected {k}"));
        }
        table.push(Point3::new(
            parse_real(ln, "coordinate", tokens[1])?,
            parse_real(ln, "coordinate", tokens[2])?,
            parse_real(ln, "coordinate", tokens[3])?,
        ));
    }
    let (ln, t) = lines.expect("'entries <n_min> <n_max>'")?;
    let h = header(ln, t, "entries", 2)?;
    let (n_min, n_max): (usize, usize) = (parse_num(ln, "n_min", h[0])?, parse_num(ln, "n_max", h[1])?);
    if n_min > n_max {
        return syntax(ln, "n_min exceeds n_max");
    }
    let mut entries = Vec::new();
    for n in (n_min..=n_max).rev() {
        let Some((ln, t)) = lines.next() else {
            break;
        };
        let e = parse_entry(ln, t)?;
        if e.n != n {
            return syntax(ln, format!("expected entry n={n}, found n={}", e.n));
        }
        entries.push(e);
    }
    if let Some((ln, _)) = lines.next() {
        return syntax(ln, "unexpected content after the last entry");
    }
    if entries.len() != n_max + 1 - n_min {
        return integrity(format!(
            "header declares entries {n_min}..{n_max} but {} are present",
            entries.len()
        ));
    }
    Catalog::new(table, entries)
}
