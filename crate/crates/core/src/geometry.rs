//! Points, clusters, the cylindrical ordering of cluster points and the
//! icosahedral rotation group in the lattice frame.
//!
//! The frame is fixed by the centred 13-particle icosahedron: the Y axis
//! passes through two opposite vertices, and the upper vertex ring starts on
//! the +X half of the XY plane.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, Result};

/// Minimum separation accepted between two points of a [`Cluster`].
pub const MIN_SEPARATION: f64 = 1e-9;

/// Resolution at which cylindrical keys are compared.
const KEY_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Point3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Euclidean distance between two points.
pub fn distance(p: Point3, q: Point3) -> f64 {
    (p - q).norm()
}

/// Cylindrical ordering key of a point.
///
/// `alpha` is the angle from the +Y semi-axis, `beta` the azimuth about Y,
/// measured from +X towards +Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalKey {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CylindricalKey {
    /// Inverse of [`cylindrical_key`].
    pub fn to_point(self) -> Point3 {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        Point3::new(self.rho * sa * cb, self.rho * ca, self.rho * sa * sb)
    }

    fn quantized(self) -> (i64, i64, i64) {
        let q = |v: f64| (v / KEY_RESOLUTION).round() as i64;
        let (rho, alpha) = (q(self.rho), q(self.alpha));
        // the azimuth is meaningless on the axis and wraps at 2π
        let beta = if rho == 0 || alpha == 0 || alpha == q(PI) {
            0
        } else {
            let b = q(self.beta);
            if b >= q(2.0 * PI) {
                0
            } else {
                b
            }
        };
        (rho, alpha, beta)
    }

    /// Lexicographic comparison on (rho, alpha, beta) at 1e-9 resolution.
    pub fn cmp_order(&self, other: &CylindricalKey) -> Ordering {
        self.quantized().cmp(&other.quantized())
    }
}

pub fn cylindrical_key(p: Point3) -> CylindricalKey {
    let rho = p.norm();
    if rho == 0.0 {
        return CylindricalKey {
            rho: 0.0,
            alpha: 0.0,
            beta: 0.0,
        };
    }
    let alpha = (p.y / rho).clamp(-1.0, 1.0).acos();
    let mut beta = p.z.atan2(p.x);
    if beta < 0.0 {
        beta += 2.0 * PI;
    }
    if beta >= 2.0 * PI {
        beta = 0.0;
    }
    CylindricalKey { rho, alpha, beta }
}

/// An ordered set of particle positions, optionally labelled with the
/// lattice sites they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    points: Vec<Point3>,
    labels: Option<Vec<usize>>,
}

impl Cluster {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        validate_points(&points)?;
        Ok(Cluster { points, labels: None })
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<usize>) -> Result<Self> {
        validate_points(&points)?;
        if labels.len() != points.len() {
            return invalid(format!("{} labels for {} points", labels.len(), points.len()));
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return invalid("cluster labels must be distinct");
        }
        Ok(Cluster {
            points,
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Flat `[x0, y0, z0, x1, ...]` coordinate vector.
    pub fn coordinates(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.to_array()).collect()
    }

    /// Same labels, new coordinates from a flat vector.
    pub fn with_coordinates(&self, coords: &[f64]) -> Result<Cluster> {
        if coords.len() != 3 * self.len() {
            return invalid("coordinate vector length does not match cluster size");
        }
        let points = coords.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        match &self.labels {
            Some(l) => Cluster::with_labels(points, l.clone()),
            None => Cluster::new(points),
        }
    }

    /// Drops labels.
    pub fn unlabeled(mut self) -> Cluster {
        self.labels = None;
        self
    }

    pub fn max_radius(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn validate_points(points: &[Point3]) -> Result<()> {
    if points.is_empty() {
        return invalid("a cluster needs at least one point");
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return invalid(format!("point {i} has a non-finite coordinate"));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if distance(points[i], points[j]) < MIN_SEPARATION {
                return invalid(format!("points {i} and {j} coincide"));
            }
        }
    }
    Ok(())
}

/// Sorts points by their cylindrical key; labels follow their points.
pub fn canonical_order(c: &Cluster) -> Cluster {
    let keys: Vec<CylindricalKey> = c.points.iter().map(|&p| cylindrical_key(p)).collect();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp_order(&keys[b]));
    Cluster {
        points: order.iter().map(|&i| c.points[i]).collect(),
        labels: c.labels.as_ref().map(|l| order.iter().map(|&i| l[i]).collect()),
    }
}

pub fn center_of_mass(c: &Cluster) -> Point3 {
    let sum = c.points.iter().fold(Point3::ORIGIN, |acc, &p| acc + p);
    sum * (1.0 / c.len() as f64)
}

/// A proper rotation of 3-space, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Checks orthogonality and unit determinant within 1e-12.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation { m };
        let p = r.compose(&r.transpose());
        for (i, row) in p.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (v - expect).abs() > 1e-12 {
                    return invalid("matrix is not orthogonal");
                }
            }
        }
        if (r.determinant() - 1.0).abs() > 1e-12 {
            return invalid("matrix is not a proper rotation");
        }
        Ok(r)
    }

    /// Rotation by `angle` about +Y, advancing the azimuth `beta`.
    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation { m }
    }

    pub fn transpose(&self) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[j][i];
            }
        }
        Rotation { m }
    }

    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Rotation) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    /// Columns are the orthonormal frame built from `u` and the part of `w`
    /// orthogonal to it.
    fn frame(u: Point3, w: Point3) -> Rotation {
        let e1 = u.normalized();
        let e2 = (w - e1 * e1.dot(w)).normalized();
        let e3 = e1.cross(e2);
        Rotation {
            m: [[e1.x, e2.x, e3.x], [e1.y, e2.y, e3.y], [e1.z, e2.z, e3.z]],
        }
    }
}

pub fn rotate(c: &Cluster, r: &Rotation) -> Cluster {
    Cluster {
        points: c.points.iter().map(|&p| r.apply(p)).collect(),
        labels: c.labels.clone(),
    }
}

/// Unit vertex directions of the lattice icosahedron, in the order
/// top, upper ring (azimuth 0°, 72°, ...), lower ring (36°, 108°, ...), bottom.
pub fn icosahedron_directions() -> [Point3; 12] {
    let h = 1.0 / 5f64.sqrt();
    let ring = 2.0 * h;
    let mut v = [Point3::ORIGIN; 12];
    v[0] = Point3::new(0.0, 1.0, 0.0);
    for k in 0..5 {
        let up = 2.0 * PI * k as f64 / 5.0;
        let down = up + PI / 5.0;
        v[1 + k] = Point3::new(ring * up.cos(), h, ring * up.sin());
        v[6 + k] = Point3::new(ring * down.cos(), -h, ring * down.sin());
    }
    v[11] = Point3::new(0.0, -1.0, 0.0);
    v
}

/// Pairs of adjacent icosahedron vertices (indices into
/// [`icosahedron_directions`]), each pair once with `i < j`.
pub fn icosahedron_edges() -> Vec<(usize, usize)> {
    let v = icosahedron_directions();
    let edge = distance(v[0], v[1]);
    let mut edges = Vec::with_capacity(30);
    for i in 0..12 {
        for j in i + 1..12 {
            if (distance(v[i], v[j]) - edge).abs() < 1e-9 {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Triangular faces as ascending vertex index triples.
pub fn icosahedron_faces() -> Vec<[usize; 3]> {
    let edges = icosahedron_edges();
    let adjacent = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    let mut faces = Vec::with_capacity(20);
    for &(i, j) in &edges {
        for k in j + 1..12 {
            if adjacent(i, k) && adjacent(j, k) {
                faces.push([i, j, k]);
            }
        }
    }
    faces
}

/// The 60 proper rotations of the icosahedral group in the lattice frame,
/// identity first.
///
/// Each rotation carries the top vertex and its first ring neighbour onto an
/// ordered pair of adjacent vertices.
pub fn icosahedral_rotations() -> Vec<Rotation> {
    let v = icosahedron_directions();
    let edges = icosahedron_edges();
    let reference = Rotation::frame(v[0], v[1]);
    let mut out = Vec::with_capacity(60);
    for i in 0..12 {
        let mut nbrs: Vec<usize> = edges
            .iter()
            .filter_map(|&(a, b)| match (a == i, b == i) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        nbrs.sort_unstable();
        for j in nbrs {
            if (i, j) == (0, 1) {
                out.push(Rotation::IDENTITY);
                continue;
            }
            let target = Rotation::frame(v[i], v[j]);
            out.push(target.compose(&reference.transpose()));
        }
    }
    out
}

/// The five rotations about Y by multiples of 2π/5, identity first.
pub fn y_axis_rotations() -> Vec<Rotation> {
    (0..5).map(|k| Rotation::about_y(2.0 * PI * k as f64 / 5.0)).collect()
}
