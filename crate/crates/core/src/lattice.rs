//! The IF lattice: Mackay icosahedral (IC) shells plus the face-centred
//! stacking (FC) sites of each shell.
//!
//! Shell `k` carries `10k² + 2` IC sites (vertices at radius `k·step`, edge
//! and face sites interpolated linearly between scaled vertices) and
//! `10k(k−1)` FC sites at the centroids of the downward sub-triangles of
//! each face grid, in the face plane.
//!
//! Sites are indexed by shell, IC before FC within a shell, and then by
//! cylindrical order, so `gen_if(s)` is a prefix of `gen_if(s + 1)`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    cylindrical_key, distance, icosahedron_directions, icosahedron_edges, icosahedron_faces, Point3,
};
use crate::potential::LJ_PROPERTIES;

/// Radial spacing between consecutive shells.
pub const IF_STEP: f64 = 1.08183839;

/// Default neighbour cutoff as a multiple of the nearest-neighbour distance:
/// the upper end of the LJ convexity interval over the pair minimum.
pub fn default_cutoff_factor() -> f64 {
    LJ_PROPERTIES.basin_hi / LJ_PROPERTIES.r_star
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublattice {
    Ic,
    Fc,
}

impl fmt::Display for Sublattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sublattice::Ic => "IC",
            Sublattice::Fc => "FC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub position: Point3,
    pub shell: usize,
    pub sublattice: Sublattice,
    pub index: usize,
}

/// Number of sites of `gen_if(shells)`.
pub fn if_site_count(shells: usize) -> usize {
    1 + (1..=shells).map(|k| 10 * k * k + 2 + 10 * k * (k - 1)).sum::<usize>()
}

/// Uniform grid of cells for short-range queries.
#[derive(Debug, Clone)]
struct CellGrid {
    size: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl CellGrid {
    fn new(size: f64, points: impl Iterator<Item = Point3>) -> Self {
        let mut cells: HashMap<_, Vec<usize>> = HashMap::new();
        for (slot, p) in points.enumerate() {
            cells.entry(Self::key(size, p)).or_default().push(slot);
        }
        CellGrid { size, cells }
    }

    fn key(size: f64, p: Point3) -> (i64, i64, i64) {
        (
            (p.x / size).floor() as i64,
            (p.y / size).floor() as i64,
            (p.z / size).floor() as i64,
        )
    }

    /// Slots in the 27 cells around `p`.
    fn around(&self, p: Point3) -> impl Iterator<Item = usize> + '_ {
        let (a, b, c) = Self::key(self.size, p);
        (-1..=1).flat_map(move |i| {
            (-1..=1).flat_map(move |j| {
                (-1..=1).flat_map(move |k| self.cells.get(&(a + i, b + j, c + k)).into_iter().flatten().copied())
            })
        })
    }
}

#[derive(Debug, Clone)]
pub struct Lattice {
    sites: Vec<Site>,
    shells: usize,
    step: f64,
    nn_distance: f64,
    grid: CellGrid,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.shells == other.shells && self.step == other.step && self.sites == other.sites
    }
}

impl Lattice {
    /// Builds a lattice from explicit sites. Sites are ordered by index;
    /// indices must be unique.
    pub fn from_sites(mut sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return invalid("a lattice needs at least one site");
        }
        sites.sort_by_key(|s| s.index);
        if sites.windows(2).any(|w| w[0].index == w[1].index) {
            return invalid("duplicate site index");
        }
        let shells = sites.iter().map(|s| s.shell).max().unwrap_or(0);
        let nn = IF_STEP;
        let grid = CellGrid::new(nn * default_cutoff_factor(), sites.iter().map(|s| s.position));
        Ok(Lattice {
            sites,
            shells,
            step: IF_STEP,
            nn_distance: nn,
            grid,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Outermost shell present.
    pub fn shells(&self) -> usize {
        self.shells
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Nearest-neighbour separation of the IC sublattice (the shell step).
    pub fn nn_distance(&self) -> f64 {
        self.nn_distance
    }

    pub fn default_cutoff(&self) -> f64 {
        default_cutoff_factor() * self.nn_distance
    }

    fn slot(&self, index: usize) -> Option<usize> {
        match self.sites.get(index) {
            Some(s) if s.index == index => Some(index),
            _ => self.sites.binary_search_by_key(&index, |s| s.index).ok(),
        }
    }

    pub fn site(&self, index: usize) -> Option<&Site> {
        self.slot(index).map(|k| &self.sites[k])
    }

    pub fn contains(&self, index: usize) -> bool {
        self.slot(index).is_some()
    }

    pub fn position(&self, index: usize) -> Result<Point3> {
        self.site(index)
            .map(|s| s.position)
            .ok_or_else(|| Error::InvalidArgument(format!("site {index} is not in the lattice")))
    }

    /// Site indices within `cutoff` of site `i`, ascending, excluding `i`.
    pub fn neighbors(&self, i: usize, cutoff: f64) -> Result<Vec<usize>> {
        if !(cutoff > 0.0) {
            return invalid("cutoff must be positive");
        }
        let p = self.position(i)?;
        let mut out: Vec<usize> = if cutoff <= self.grid.size {
            self.grid
                .around(p)
                .map(|k| &self.sites[k])
                .filter(|s| s.index != i && distance(s.position, p) <= cutoff)
                .map(|s| s.index)
                .collect()
        } else {
            self.sites
                .iter()
                .filter(|s| s.index != i && distance(s.position, p) <= cutoff)
                .map(|s| s.index)
                .collect()
        };
        out.sort_unstable();
        Ok(out)
    }

    /// The unique site within `tol` of `p`, if any.
    pub fn locate(&self, p: Point3, tol: f64) -> Result<Option<usize>> {
        if !(tol > 0.0) {
            return invalid("locate tolerance must be positive");
        }
        let hits: Vec<usize> = if tol <= self.grid.size {
            self.grid
                .around(p)
                .filter(|&k| distance(self.sites[k].position, p) <= tol)
                .map(|k| self.sites[k].index)
                .collect()
        } else {
            self.sites
                .iter()
                .filter(|s| distance(s.position, p) <= tol)
                .map(|s| s.index)
                .collect()
        };
        match hits.len() {
            0 => Ok(None),
            1 => Ok(Some(hits[0])),
            _ => Err(Error::Ambiguous {
                x: p.x,
                y: p.y,
                z: p.z,
                tol,
            }),
        }
    }

    /// Like [`Lattice::locate`] but a miss is an error.
    pub fn locate_strict(&self, p: Point3, tol: f64) -> Result<usize> {
        self.locate(p, tol)?.ok_or(Error::OffLattice {
            x: p.x,
            y: p.y,
            z: p.z,
            tol,
        })
    }

    /// Keeps only the sites accepted by `keep`, with their indices.
    pub fn filtered(&self, keep: impl Fn(&Site) -> bool) -> Result<Lattice> {
        Lattice::from_sites(self.sites.iter().filter(|s| keep(s)).copied().collect())
    }

    /// Site count per shell, split by sublattice: `(shell, ic, fc)`.
    pub fn shell_breakdown(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = (0..=self.shells).map(|k| (k, 0, 0)).collect();
        for s in &self.sites {
            match s.sublattice {
                Sublattice::Ic => out[s.shell].1 += 1,
                Sublattice::Fc => out[s.shell].2 += 1,
            }
        }
        out
    }
}

fn sorted_cylindrical(mut pts: Vec<Point3>) -> Vec<Point3> {
    pts.sort_by(|a, b| cylindrical_key(*a).cmp_order(&cylindrical_key(*b)));
    pts
}

/// IC sites of shell `k >= 1`.
fn ic_shell(k: usize, step: f64) -> Vec<Point3> {
    let v = icosahedron_directions();
    let kf = k as f64;
    let mut pts: Vec<Point3> = v.iter().map(|&d| d * (kf * step)).collect();
    for (a, b) in icosahedron_edges() {
        for i in 1..k {
            let (wa, wb) = ((k - i) as f64, i as f64);
            pts.push((v[a] * wa + v[b] * wb) * step);
        }
    }
    for [a, b, c] in icosahedron_faces() {
        for i in 1..k {
            for j in 1..k - i {
                let l = k - i - j;
                pts.push((v[a] * l as f64 + v[b] * i as f64 + v[c] * j as f64) * step);
            }
        }
    }
    pts
}

/// FC sites of shell `k`: downward sub-triangle centroids of each face grid.
fn fc_shell(k: usize, step: f64) -> Vec<Point3> {
    let v = icosahedron_directions();
    let mut pts = Vec::new();
    if k < 2 {
        return pts;
    }
    for [a, b, c] in icosahedron_faces() {
        for i in 0..=k - 2 {
            for j in 0..=k - 2 - i {
                let wa = (3 * (k - i - j)) as f64 - 4.0;
                let wb = (3 * i + 2) as f64;
                let wc = (3 * j + 2) as f64;
                pts.push((v[a] * wa + v[b] * wb + v[c] * wc) * (step / 3.0));
            }
        }
    }
    pts
}

fn generate(shells: usize, include: &[Sublattice]) -> Result<Lattice> {
    if shells < 1 {
        return invalid("at least one shell is required");
    }
    let mut sites = Vec::with_capacity(if_site_count(shells));
    let mut index = 0;
    let mut emit = |pts: Vec<Point3>, shell: usize, sublattice: Sublattice, sites: &mut Vec<Site>| {
        for position in sorted_cylindrical(pts) {
            if include.contains(&sublattice) {
                sites.push(Site {
                    position,
                    shell,
                    sublattice,
                    index,
                });
            }
            index += 1;
        }
    };
    emit(vec![Point3::ORIGIN], 0, Sublattice::Ic, &mut sites);
    for k in 1..=shells {
        emit(ic_shell(k, IF_STEP), k, Sublattice::Ic, &mut sites);
        emit(fc_shell(k, IF_STEP), k, Sublattice::Fc, &mut sites);
    }
    let mut lattice = Lattice::from_sites(sites)?;
    lattice.shells = shells;
    Ok(lattice)
}

/// The full IF lattice with `shells` shells around the centre site.
pub fn gen_if(shells: usize) -> Result<Lattice> {
    generate(shells, &[Sublattice::Ic, Sublattice::Fc])
}

/// IC sites of `gen_if(shells)`, keeping their IF indices.
pub fn gen_ic(shells: usize) -> Result<Lattice> {
    generate(shells, &[Sublattice::Ic])
}

/// FC sites of `gen_if(shells)`, keeping their IF indices.
pub fn gen_fc(shells: usize) -> Result<Lattice> {
    generate(shells, &[Sublattice::Fc])
}

/// Smallest shell count whose outer vertex sphere encloses radius `r`.
pub fn shells_enclosing(r: f64) -> usize {
    ((r - 1e-6) / IF_STEP).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::c13;

    #[test]
    fn site_counts() {
        assert_eq!(gen_if(1).unwrap().len(), 13);
        assert_eq!(gen_if(2).unwrap().len(), 75);
        assert_eq!(gen_if(3).unwrap().len(), 227);
        assert_eq!(gen_if(4).unwrap().len(), 509);
        assert_eq!(gen_ic(1).unwrap().len(), 13);
        assert_eq!(gen_ic(3).unwrap().len(), 147);
        assert_eq!(gen_fc(2).unwrap().len(), 20);
        for s in 1..=6 {
            assert_eq!(gen_if(s).unwrap().len(), if_site_count(s));
        }
    }

    #[test]
    fn shell_one_reproduces_c13() {
        let l = gen_if(1).unwrap();
        for p in c13().points() {
            assert!(l.locate(*p, 1e-6).unwrap().is_some());
        }
        assert_eq!(l.sites()[0].position, Point3::ORIGIN);
    }

    #[test]
    fn sublattice_indices_are_consistent() {
        let full = gen_if(3).unwrap();
        let ic = gen_ic(3).unwrap();
        let fc = gen_fc(3).unwrap();
        for s in ic.sites().iter().chain(fc.sites()) {
            assert_eq!(full.site(s.index).unwrap(), s);
        }
        assert_eq!(ic.len() + fc.len(), full.len());
    }

    #[test]
    fn prefix_stability() {
        let big = gen_if(4).unwrap();
        for s in 1..4 {
            let small = gen_if(s).unwrap();
            assert_eq!(&big.sites()[..small.len()], small.sites());
        }
    }

    #[test]
    fn radii_lie_between_face_plane_and_vertex_sphere() {
        // flat faces: the face centre sits at the inradius/circumradius ratio
        let v = icosahedron_directions();
        let inner = ((v[0] + v[1] + v[2]) * (1.0 / 3.0)).norm();
        let l = gen_if(5).unwrap();
        for s in l.sites() {
            let r = s.position.norm();
            let k = s.shell as f64;
            assert!(r <= k * IF_STEP + 1e-9, "{s:?}");
            assert!(r >= k * IF_STEP * inner - 1e-9, "{s:?}");
        }
    }

    #[test]
    fn no_near_duplicate_sites() {
        let l = gen_if(4).unwrap();
        let nn = l.nn_distance();
        for (i, a) in l.sites().iter().enumerate() {
            for b in &l.sites()[i + 1..] {
                assert!(distance(a.position, b.position) >= 0.5 * nn);
            }
        }
    }

    #[test]
    fn neighbor_examples() {
        let l = gen_if(1).unwrap();
        let nn = l.nn_distance();
        assert_eq!(l.neighbors(0, 1.2 * nn).unwrap(), (1..13).collect::<Vec<_>>());
        for i in 1..13 {
            let nb = l.neighbors(i, 1.2 * nn).unwrap();
            assert_eq!(nb.len(), 6);
            assert_eq!(nb[0], 0);
        }
        assert!(l.neighbors(0, 0.1 * nn).unwrap().is_empty());
        assert!(l.neighbors(99, nn).is_err());
        // large cutoffs take the brute-force path
        assert_eq!(l.neighbors(0, 10.0).unwrap().len(), 12);
    }

    #[test]
    fn neighbors_agree_with_brute_force() {
        let l = gen_if(3).unwrap();
        let cut = l.default_cutoff();
        for s in l.sites().iter().step_by(7) {
            let brute: Vec<usize> = l
                .sites()
                .iter()
                .filter(|o| o.index != s.index && distance(o.position, s.position) <= cut)
                .map(|o| o.index)
                .collect();
            assert_eq!(l.neighbors(s.index, cut).unwrap(), brute);
        }
    }

    #[test]
    fn locate_examples() {
        let l = gen_if(2).unwrap();
        let s = l.sites()[17];
        assert_eq!(l.locate(s.position, 1e-6).unwrap(), Some(17));
        let off = s.position + Point3::new(2e-6, 0.0, 0.0);
        assert_eq!(l.locate(off, 1e-6).unwrap(), None);
        assert!(matches!(l.locate(Point3::ORIGIN, 5.0), Err(Error::Ambiguous { .. })));
        assert!(l.locate_strict(off, 1e-6).is_err());
    }

    #[test]
    fn breakdown_per_shell() {
        let l = gen_if(3).unwrap();
        assert_eq!(
            l.shell_breakdown(),
            vec![(0, 1, 0), (1, 12, 0), (2, 42, 20), (3, 92, 60)]
        );
        assert!(gen_if(0).is_err());
    }
}
