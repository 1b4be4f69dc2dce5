//! Set algebra on lattice clusters, the greedy peeling moves and the
//! geometric classifier.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{center_of_mass, distance, icosahedron_directions, icosahedron_faces, Cluster, Point3, Rotation};
use crate::lattice::{Lattice, Sublattice};
use crate::minimize::{relax, RelaxOptions, RelaxResult};
use crate::potential::{cluster_energy, PotentialModel};

/// Proximity of an ID axis particle to the relaxed centre of mass, in units
/// of the nearest-neighbour distance.
pub const ID_COM_FACTOR: f64 = 0.6;
/// Angular tolerance (rad) for a site to count as lying on the Y⁺ semi-axis.
pub const AXIS_TOL: f64 = 1e-3;
/// Tolerance on the cone coefficients of the TO test.
pub const CONE_TOL: f64 = 1e-6;

/// A cluster given as a set of site indices of one lattice.
#[derive(Debug, Clone)]
pub struct IndexCluster<'a> {
    lattice: &'a Lattice,
    indices: BTreeSet<usize>,
}

impl PartialEq for IndexCluster<'_> {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(self.lattice, other.lattice) && self.indices == other.indices
    }
}

fn same_lattice(a: &Lattice, b: &Lattice) -> bool {
    std::ptr::eq(a, b) || a == b
}

fn check_same(a: &IndexCluster, b: &IndexCluster) -> Result<()> {
    if same_lattice(a.lattice, b.lattice) {
        Ok(())
    } else {
        invalid("clusters are drawn from different lattices")
    }
}

impl<'a> IndexCluster<'a> {
    pub fn new(lattice: &'a Lattice, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if indices.is_empty() {
            return invalid("a cluster needs at least one site");
        }
        if let Some(&i) = indices.iter().find(|&&i| !lattice.contains(i)) {
            return invalid(format!("site {i} is not in the lattice"));
        }
        Ok(IndexCluster { lattice, indices })
    }

    /// Locates every point on the lattice (strictly, within `tol`).
    pub fn from_points(lattice: &'a Lattice, points: &[Point3], tol: f64) -> Result<Self> {
        let mut indices = BTreeSet::new();
        for &p in points {
            if !indices.insert(lattice.locate_strict(p, tol)?) {
                return invalid(format!("two points map to the site near ({}, {}, {})", p.x, p.y, p.z));
            }
        }
        IndexCluster::new(lattice, indices)
    }

    pub fn lattice(&self) -> &'a Lattice {
        self.lattice
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    /// Particles at their exact lattice positions, labelled by site index,
    /// in ascending index order.
    pub fn lattice_cluster(&self) -> Cluster {
        let labels: Vec<usize> = self.indices.iter().copied().collect();
        let points = labels.iter().map(|&i| self.lattice.position(i).unwrap()).collect();
        Cluster::with_labels(points, labels).expect("lattice sites are distinct")
    }

    /// Image of the cluster under a rotation that permutes lattice sites.
    pub fn rotated(&self, r: &Rotation, tol: f64) -> Result<IndexCluster<'a>> {
        let pts: Vec<Point3> = self
            .indices
            .iter()
            .map(|&i| r.apply(self.lattice.position(i).unwrap()))
            .collect();
        IndexCluster::from_points(self.lattice, &pts, tol)
    }

    fn with_set(&self, indices: BTreeSet<usize>) -> IndexCluster<'a> {
        IndexCluster {
            lattice: self.lattice,
            indices,
        }
    }
}

/// Sites present in `b` but not in `a`.
pub fn on_count(a: &IndexCluster, b: &IndexCluster) -> Result<usize> {
    check_same(a, b)?;
    Ok(b.indices.difference(&a.indices).count())
}

/// Sites present in `a` but not in `b`.
pub fn off_count(a: &IndexCluster, b: &IndexCluster) -> Result<usize> {
    check_same(a, b)?;
    Ok(a.indices.difference(&b.indices).count())
}

/// Size of the symmetric difference.
pub fn adj(a: &IndexCluster, b: &IndexCluster) -> Result<usize> {
    Ok(on_count(a, b)? + off_count(a, b)?)
}

/// Removable members: those with a vacant neighbour, plus the centre site
/// when it is occupied. Sites of the outermost generated shell always have
/// vacant neighbours beyond the generated region.
pub fn k_c(c: &IndexCluster) -> BTreeSet<usize> {
    let l = c.lattice;
    let cut = l.default_cutoff();
    c.indices
        .iter()
        .copied()
        .filter(|&i| {
            let site = l.site(i).unwrap();
            i == 0 || site.shell >= l.shells() || l.neighbors(i, cut).unwrap().iter().any(|j| !c.contains(*j))
        })
        .collect()
}

/// Addable frontier: vacant sites adjacent to at least one member.
pub fn k_if(c: &IndexCluster) -> BTreeSet<usize> {
    let l = c.lattice;
    let cut = l.default_cutoff();
    c.indices
        .iter()
        .flat_map(|&i| l.neighbors(i, cut).unwrap())
        .filter(|j| !c.contains(*j))
        .collect()
}

/// Outcome of one peeling move.
#[derive(Debug, Clone)]
pub struct PeelStep<'a> {
    pub cluster: IndexCluster<'a>,
    pub relaxed: RelaxResult,
    /// Energy of the seeded starting geometry of the chosen candidate.
    pub e_init: f64,
    pub removed: Option<usize>,
    pub added: Option<usize>,
}

/// Current coordinates of the members: taken from `seed` (matched by label)
/// when given, lattice positions otherwise.
fn member_coordinates(c: &IndexCluster, seed: Option<&Cluster>) -> Result<Vec<(usize, Point3)>> {
    let Some(seed) = seed else {
        return Ok(c.indices.iter().map(|&i| (i, c.lattice.position(i).unwrap())).collect());
    };
    let labels = seed
        .labels()
        .ok_or_else(|| Error::InvalidArgument("seed geometry must be labelled by site".into()))?;
    let mut pairs: Vec<(usize, Point3)> = labels.iter().copied().zip(seed.points().iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    if pairs.len() != c.len() || pairs.iter().zip(&c.indices).any(|(p, i)| p.0 != *i) {
        return invalid("seed labels do not match the cluster sites");
    }
    Ok(pairs)
}

struct Candidate {
    removed: Option<usize>,
    added: Option<usize>,
}

fn evaluate(
    m: &PotentialModel,
    c: &IndexCluster,
    members: &[(usize, Point3)],
    cand: &Candidate,
    opts: &RelaxOptions,
) -> Result<(f64, RelaxResult)> {
    let mut pts: Vec<(usize, Point3)> = members.iter().copied().filter(|p| Some(p.0) != cand.removed).collect();
    if let Some(j) = cand.added {
        pts.push((j, c.lattice.position(j)?));
        pts.sort_by_key(|p| p.0);
    }
    let start = Cluster::with_labels(pts.iter().map(|p| p.1).collect(), pts.iter().map(|p| p.0).collect())?;
    let e_init = cluster_energy(m, &start)?;
    Ok((e_init, relax(m, &start, opts)?))
}

/// Relaxes every candidate in parallel and keeps the lowest energy; energies
/// within `1e-9·max(1, |E|)` tie and the earlier candidate wins.
fn best_of<'a>(
    m: &PotentialModel,
    c: &IndexCluster<'a>,
    seed: Option<&Cluster>,
    candidates: Vec<Candidate>,
    opts: &RelaxOptions,
) -> Result<PeelStep<'a>> {
    opts.validate()?;
    let members = member_coordinates(c, seed)?;
    let results: Vec<Result<(f64, RelaxResult)>> = candidates
        .par_iter()
        .map(|cand| evaluate(m, c, &members, cand, opts))
        .collect();

    let mut best: Option<(usize, f64, RelaxResult)> = None;
    for (k, r) in results.into_iter().enumerate() {
        let (e_init, relaxed) = r?;
        let better = match &best {
            None => true,
            Some((_, _, b)) => relaxed.energy < b.energy - 1e-9 * b.energy.abs().max(1.0),
        };
        if better {
            best = Some((k, e_init, relaxed));
        }
    }
    let (k, e_init, relaxed) = best.ok_or(Error::FrontierExhausted)?;
    let cand = &candidates[k];
    let mut set = c.indices.clone();
    if let Some(i) = cand.removed {
        set.remove(&i);
    }
    if let Some(j) = cand.added {
        set.insert(j);
    }
    Ok(PeelStep {
        cluster: c.with_set(set),
        relaxed,
        e_init,
        removed: cand.removed,
        added: cand.added,
    })
}

/// Best single addition from the frontier, after relaxation.
///
/// Members start from `seed` (labelled by site) or their lattice positions;
/// the added site starts at its lattice position. Ties go to the lowest
/// site index.
pub fn peel_forward<'a>(
    m: &PotentialModel,
    c: &IndexCluster<'a>,
    seed: Option<&Cluster>,
    opts: &RelaxOptions,
) -> Result<PeelStep<'a>> {
    let cands: Vec<Candidate> = k_if(c)
        .into_iter()
        .map(|j| Candidate {
            removed: None,
            added: Some(j),
        })
        .collect();
    if cands.is_empty() {
        return Err(Error::FrontierExhausted);
    }
    best_of(m, c, seed, cands, opts)
}

/// Best single removal among the removable members, after relaxation.
pub fn peel_backward<'a>(
    m: &PotentialModel,
    c: &IndexCluster<'a>,
    seed: Option<&Cluster>,
    opts: &RelaxOptions,
) -> Result<PeelStep<'a>> {
    if c.len() < 3 {
        return invalid("backward move needs at least three particles");
    }
    let cands: Vec<Candidate> = k_c(c)
        .into_iter()
        .map(|i| Candidate {
            removed: Some(i),
            added: None,
        })
        .collect();
    if cands.is_empty() {
        return Err(Error::FrontierExhausted);
    }
    best_of(m, c, seed, cands, opts)
}

/// Best single swap (remove one removable member, add one frontier site).
/// The unchanged cluster is the first candidate, so it is returned when no
/// swap is strictly better.
pub fn peel_itself<'a>(
    m: &PotentialModel,
    c: &IndexCluster<'a>,
    seed: Option<&Cluster>,
    opts: &RelaxOptions,
) -> Result<PeelStep<'a>> {
    if c.len() < 2 {
        return invalid("swap move needs at least two particles");
    }
    let frontier = k_if(c);
    let mut cands = vec![Candidate {
        removed: None,
        added: None,
    }];
    for i in k_c(c) {
        for &j in &frontier {
            cands.push(Candidate {
                removed: Some(i),
                added: Some(j),
            });
        }
    }
    best_of(m, c, seed, cands, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometricType {
    Ic = 1,
    Id = 2,
    To = 3,
    Fc = 5,
}

impl GeometricType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(GeometricType::Ic),
            2 => Some(GeometricType::Id),
            3 => Some(GeometricType::To),
            5 => Some(GeometricType::Fc),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometricType::Ic => "IC",
            GeometricType::Id => "ID",
            GeometricType::To => "TO",
            GeometricType::Fc => "FC",
        }
    }
}

impl fmt::Display for GeometricType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.code(), self.name())
    }
}

/// Barycentric-like coefficients of `p` in the basis of three directions.
fn cone_coefficients(p: Point3, a: Point3, b: Point3, c: Point3) -> [f64; 3] {
    let det = a.dot(b.cross(c));
    [
        p.dot(b.cross(c)) / det,
        a.dot(p.cross(c)) / det,
        a.dot(b.cross(p)) / det,
    ]
}

fn in_one_cone(points: &[Point3]) -> bool {
    let v = icosahedron_directions();
    icosahedron_faces().iter().any(|&[a, b, c]| {
        points.iter().all(|&p| {
            let scale = p.norm().max(1.0);
            cone_coefficients(p, v[a], v[b], v[c])
                .iter()
                .all(|&k| k >= -CONE_TOL * scale)
        })
    })
}

fn on_y_plus(p: Point3) -> bool {
    let r = p.norm();
    r > 0.0 && (p.y / r).clamp(-1.0, 1.0).acos() <= AXIS_TOL
}

/// Geometric type of a lattice cluster given its relaxed geometry.
///
/// `relaxed` must be labelled by site index (as produced by relaxing
/// [`IndexCluster::lattice_cluster`] or a peeling step).
pub fn classify(c: &IndexCluster, relaxed: &Cluster) -> Result<GeometricType> {
    let labels = relaxed
        .labels()
        .ok_or_else(|| Error::InvalidArgument("classification needs a site-labelled cluster".into()))?;
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    if sorted.len() != c.len() || sorted.iter().zip(&c.indices).any(|(a, b)| a != b) {
        return invalid("relaxed labels do not match the cluster sites");
    }
    let l = c.lattice;
    if c.indices
        .iter()
        .any(|&i| l.site(i).unwrap().sublattice == Sublattice::Fc)
    {
        return Ok(GeometricType::Fc);
    }
    let sites: Vec<Point3> = c.indices.iter().map(|&i| l.position(i).unwrap()).collect();
    if in_one_cone(&sites) {
        return Ok(GeometricType::To);
    }
    let com = center_of_mass(relaxed);
    let near = ID_COM_FACTOR * l.nn_distance();
    let axis_particle = labels
        .iter()
        .zip(relaxed.points())
        .any(|(&i, &p)| on_y_plus(l.position(i).unwrap()) && distance(p, com) <= near);
    if axis_particle {
        return Ok(GeometricType::Id);
    }
    Ok(GeometricType::Ic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::y_axis_rotations;
    use crate::lattice::{gen_if, IF_STEP};

    fn shell1(l: &Lattice) -> IndexCluster<'_> {
        IndexCluster::new(l, 0..13).unwrap()
    }

    #[test]
    fn set_counts() {
        let l = gen_if(1).unwrap();
        let a = IndexCluster::new(&l, [1, 2]).unwrap();
        let b = IndexCluster::new(&l, [2, 3]).unwrap();
        assert_eq!((on_count(&a, &b).unwrap(), off_count(&a, &b).unwrap()), (1, 1));
        assert_eq!(adj(&a, &b).unwrap(), 2);
        assert_eq!(adj(&a, &a).unwrap(), 0);

        let other = gen_if(2).unwrap();
        let c = IndexCluster::new(&other, [1, 2]).unwrap();
        assert!(adj(&a, &c).is_err());
        assert!(IndexCluster::new(&l, []).is_err());
        assert!(IndexCluster::new(&l, [13]).is_err());
    }

    #[test]
    fn surface_and_frontier_sets() {
        let l1 = gen_if(1).unwrap();
        assert_eq!(k_c(&shell1(&l1)).len(), 13);
        assert!(k_if(&shell1(&l1)).is_empty());
        let centre = IndexCluster::new(&l1, [0]).unwrap();
        assert_eq!(k_c(&centre), BTreeSet::from([0]));
        assert_eq!(k_if(&centre), (1..13).collect());

        let l2 = gen_if(2).unwrap();
        let ico = shell1(&l2);
        assert_eq!(k_c(&ico).len(), 13);
        let frontier = k_if(&ico);
        let cut = l2.default_cutoff();
        let brute: BTreeSet<usize> = l2
            .sites()
            .iter()
            .filter(|s| s.index >= 13)
            .filter(|s| (1..13).any(|i| distance(s.position, l2.position(i).unwrap()) <= cut))
            .map(|s| s.index)
            .collect();
        assert_eq!(frontier, brute);
        assert!(frontier.iter().all(|&j| l2.site(j).unwrap().shell == 2));
    }

    #[test]
    fn trimer_moves() {
        let l = gen_if(2).unwrap();
        let m = PotentialModel::lj();
        let opts = RelaxOptions::default();
        let nb = l.neighbors(1, 1.2 * IF_STEP).unwrap();
        let partner = *nb.iter().find(|&&j| j != 0 && j < 13).unwrap();
        let dimer = IndexCluster::new(&l, [1, partner]).unwrap();
        let up = peel_forward(&m, &dimer, None, &opts).unwrap();
        assert_eq!(up.cluster.len(), 3);
        assert!((up.relaxed.energy + 3.0).abs() < 1e-6);

        let tri = IndexCluster::new(&l, [0, 1, partner]).unwrap();
        let down = peel_backward(&m, &tri, None, &opts).unwrap();
        assert_eq!(down.cluster.len(), 2);
        assert!((down.relaxed.energy + 1.0).abs() < 1e-9);
        assert!(peel_backward(&m, &dimer, None, &opts).is_err());
    }

    #[test]
    fn icosahedron_is_a_fixed_point_of_itself() {
        let l = gen_if(2).unwrap();
        let m = PotentialModel::lj();
        let step = peel_itself(&m, &shell1(&l), None, &RelaxOptions::default()).unwrap();
        assert_eq!(step.cluster, shell1(&l));
        assert_eq!((step.removed, step.added), (None, None));
        assert!((step.relaxed.energy + 44.326801).abs() < 1e-5);
    }

    #[test]
    fn full_lattice_has_no_frontier() {
        let l = gen_if(1).unwrap();
        let m = PotentialModel::lj();
        assert!(matches!(
            peel_forward(&m, &shell1(&l), None, &RelaxOptions::default()),
            Err(Error::FrontierExhausted)
        ));
    }

    #[test]
    fn classification_examples() {
        let l = gen_if(3).unwrap();
        let m = PotentialModel::lj();
        let opts = RelaxOptions::default();
        let ico = shell1(&l);
        let r = relax(&m, &ico.lattice_cluster(), &opts).unwrap();
        assert_eq!(classify(&ico, &r.cluster).unwrap(), GeometricType::Ic);
        assert!(classify(&ico, &r.cluster.clone().unlabeled()).is_err());

        let mackay = IndexCluster::new(
            &l,
            l.sites()
                .iter()
                .filter(|s| s.shell <= 2 && s.sublattice == Sublattice::Ic)
                .map(|s| s.index),
        )
        .unwrap();
        assert_eq!(mackay.len(), 55);
        let lc = mackay.lattice_cluster();
        assert_eq!(classify(&mackay, &lc).unwrap(), GeometricType::Ic);

        let fc = l.sites().iter().find(|s| s.sublattice == Sublattice::Fc).unwrap().index;
        let with_fc = IndexCluster::new(&l, (0..13).chain([fc])).unwrap();
        assert_eq!(
            classify(&with_fc, &with_fc.lattice_cluster()).unwrap(),
            GeometricType::Fc
        );

        // centre plus the Y+ vertex sits in one face cone
        let pair = IndexCluster::new(&l, [0, 1]).unwrap();
        assert_eq!(classify(&pair, &pair.lattice_cluster()).unwrap(), GeometricType::To);
    }

    #[test]
    fn classification_is_invariant_under_y_rotations() {
        let l = gen_if(2).unwrap();
        let c = IndexCluster::new(&l, [0, 1, 2, 3, 7, 8, 14]).unwrap();
        let base = classify(&c, &c.lattice_cluster()).unwrap();
        for r in y_axis_rotations() {
            let rc = c.rotated(&r, 1e-6).unwrap();
            assert_eq!(classify(&rc, &rc.lattice_cluster()).unwrap(), base);
        }
    }

    #[test]
    fn codes_round_trip() {
        for t in [
            GeometricType::Ic,
            GeometricType::Id,
            GeometricType::To,
            GeometricType::Fc,
        ] {
            assert_eq!(GeometricType::from_code(t.code()), Some(t));
        }
        assert_eq!(GeometricType::from_code(4), None);
        assert_eq!(GeometricType::Ic.to_string(), "1 IC");
    }
}
