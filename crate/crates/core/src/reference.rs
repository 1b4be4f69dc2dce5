//! Reference geometries.

use crate::geometry::{Cluster, Point3};

/// The centred 13-particle LJ icosahedron, 12-decimal coordinates.
pub const C13_COORDINATES: [[f64; 3]; 13] = [
    [0.000000000000, 0.000000000000, 0.000000000000],
    [0.000000000000, 1.081838288553, 0.000000000000],
    [0.967625581547, 0.483812790773, 0.000000000000],
    [0.299012748890, 0.483812790773, -0.920266614664],
    [-0.782825539663, 0.483812790773, -0.568756046574],
    [-0.782825539663, 0.483812790773, 0.568756046574],
    [0.299012748890, 0.483812790773, 0.920266614664],
    [0.782825539663, -0.483812790773, -0.568756046574],
    [-0.299012748890, -0.483812790773, -0.920266614664],
    [-0.967625581547, -0.483812790773, 0.000000000000],
    [-0.299012748890, -0.483812790773, 0.920266614664],
    [0.782825539663, -0.483812790773, 0.568756046574],
    [0.000000000000, -1.081838288553, 0.000000000000],
];

/// Putative LJ13 minimum energy in reduced units.
pub const C13_ENERGY: f64 = -44.326801;

pub fn c13() -> Cluster {
    Cluster::new(C13_COORDINATES.iter().map(|&a| Point3::from_array(a)).collect())
        .expect("reference coordinates are well separated")
}
