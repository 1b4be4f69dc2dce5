//! Fixtures shared by the benchmarks.

use ifcluster::{gen_ic, reference::c13, Cluster};

/// Mackay icosahedron made of every IC site up to `shells` (13, 55, 147, ...).
pub fn mackay(shells: usize) -> Cluster {
    let l = gen_ic(shells).expect("shells >= 1");
    Cluster::new(l.sites().iter().map(|s| s.position).collect()).expect("distinct sites")
}

/// The 13-particle icosahedron uniformly scaled away from its minimum.
pub fn stretched_c13(factor: f64) -> Cluster {
    Cluster::new(c13().points().iter().map(|&p| p * factor).collect()).expect("distinct points")
}
