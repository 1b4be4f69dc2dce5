//! Plain and extended XYZ text.
//!
//! Atom lines are `X x y z`; the extended form appends a vector `vx vy vz`.
//! Trailing non-numeric tokens (such as lattice site tags) are ignored.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::lattice::Lattice;

/// Element symbol written for reduced-unit particles.
pub const SYMBOL: &str = "X";

#[derive(Debug, Clone, PartialEq)]
pub struct XyzFrame {
    pub comment: String,
    pub points: Vec<Point3>,
    /// Per-atom vectors of the extended form, when every line carries one.
    pub vectors: Option<Vec<Point3>>,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_xyz(text: &str) -> Result<XyzFrame> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let count: usize = first
        .trim()
        .parse()
        .map_err(|_| syntax(1, format!("expected atom count, got '{}'", first.trim())))?;
    let comment = lines.next().map(|(_, l)| l.to_string()).unwrap_or_default();

    let mut points = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if points.len() == count {
            return Err(syntax(lineno, "more atom lines than the declared count"));
        }
        if tokens.len() < 4 {
            return Err(syntax(
                lineno,
                format!("expected 'symbol x y z', got '{}'", line.trim()),
            ));
        }
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(lineno, format!("invalid number '{t}'")))
        };
        points.push(Point3::new(num(tokens[1])?, num(tokens[2])?, num(tokens[3])?));
        let extra: Vec<f64> = tokens[4..].iter().map_while(|t| t.parse::<f64>().ok()).collect();
        if extra.len() >= 3 {
            vectors.push(Point3::new(extra[0], extra[1], extra[2]));
        }
    }
    if points.len() != count {
        return Err(syntax(
            text.lines().count().max(1),
            format!("declared {count} atoms, found {}", points.len()),
        ));
    }
    let vectors = (vectors.len() == count && count > 0).then_some(vectors);
    Ok(XyzFrame {
        comment,
        points,
        vectors,
    })
}

fn header(out: &mut String, n: usize, comment: &str) {
    let _ = writeln!(out, "{n}");
    let _ = writeln!(out, "{}", comment.replace('\n', " "));
}

pub fn write_xyz(points: &[Point3], comment: &str) -> String {
    let mut out = String::new();
    header(&mut out, points.len(), comment);
    for p in points {
        let _ = writeln!(out, "{SYMBOL} {:.15} {:.15} {:.15}", p.x, p.y, p.z);
    }
    out
}

/// Extended XYZ: position followed by a per-atom vector.
pub fn write_xyz_with_vectors(points: &[Point3], vectors: &[Point3], comment: &str) -> String {
    let mut out = String::new();
    header(&mut out, points.len(), comment);
    for (p, v) in points.iter().zip(vectors) {
        let _ = writeln!(
            out,
            "{SYMBOL} {:.15} {:.15} {:.15} {:.15} {:.15} {:.15}",
            p.x, p.y, p.z, v.x, v.y, v.z
        );
    }
    out
}

/// Lattice sites, each atom line tagged `shell=<k> sub=<IC|FC> idx=<i>`.
pub fn write_lattice_xyz(lattice: &Lattice, comment: &str) -> String {
    let mut out = String::new();
    header(&mut out, lattice.len(), comment);
    for s in lattice.sites() {
        let p = s.position;
        let _ = writeln!(
            out,
            "{SYMBOL} {:.15} {:.15} {:.15} shell={} sub={} idx={}",
            p.x, p.y, p.z, s.shell, s.sublattice, s.index
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::gen_if;
    use crate::reference::c13;

    #[test]
    fn round_trip_to_twelve_decimals() {
        let pts = c13().points().to_vec();
        let frame = parse_xyz(&write_xyz(&pts, "E=-44.3 source=test")).unwrap();
        assert_eq!(frame.comment, "E=-44.3 source=test");
        assert!(frame.vectors.is_none());
        for (a, b) in pts.iter().zip(&frame.points) {
            assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn extended_and_tagged_lines() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0)];
        let v = vec![Point3::new(0.0, -1.0, 0.5)];
        let f = parse_xyz(&write_xyz_with_vectors(&pts, &v, "")).unwrap();
        assert_eq!(f.vectors.unwrap(), v);

        let l = gen_if(2).unwrap();
        let text = write_lattice_xyz(&l, "IF75");
        assert!(text.lines().nth(2).unwrap().ends_with("shell=0 sub=IC idx=0"));
        let f = parse_xyz(&text).unwrap();
        assert_eq!(f.points.len(), 75);
        assert!(f.vectors.is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_xyz(""), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_xyz("two\n\n"), Err(Error::Syntax { line: 1, .. })));
        let bad = "2\nc\nX 0 0 0\nX 1 zz 0\n";
        assert!(matches!(parse_xyz(bad), Err(Error::Syntax { line: 4, .. })));
        let short = "3\nc\nX 0 0 0\n";
        assert!(parse_xyz(short).is_err());
        let long = "1\nc\nX 0 0 0\nX 1 1 1\n";
        assert!(matches!(parse_xyz(long), Err(Error::Syntax { line: 4, .. })));
    }
}
