//! Search for optimal atomic clusters of well pair potentials on the IF
//! lattice: icosahedral (IC) and face-centred (FC) sites at a fixed shell
//! step.
//!
//! The crate covers
//! * pair potentials (LJ, Morse, Buckingham, Kihara) with analytic gradients,
//! * conjugate-gradient relaxation,
//! * IF lattice generation with neighbour and site lookup,
//! * On/Off/Adj set algebra and the greedy forward/backward/itself moves,
//! * On/Off delta catalogs that rebuild a cluster of any size from a seed.

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod minimize;
pub mod ops;
pub mod potential;
pub mod reference;
pub mod xyz;

pub use catalog::{
    align_min_adj, build_catalog, lookup_and_relax, mif_chain, parse_catalog, reconstruct, serialize_catalog,
    Alignment, Catalog, CatalogEntry, LookupReport,
};
pub use error::{Error, Result};
pub use geometry::{
    canonical_order, center_of_mass, cylindrical_key, distance, icosahedral_rotations, rotate, y_axis_rotations,
    Cluster, CylindricalKey, Point3, Rotation,
};
pub use lattice::{gen_fc, gen_ic, gen_if, Lattice, Site, Sublattice, IF_STEP};
pub use minimize::{is_stationary, relax, RelaxOptions, RelaxResult, TraceRow};
pub use ops::{
    adj, classify, k_c, k_if, off_count, on_count, peel_backward, peel_forward, peel_itself, GeometricType,
    IndexCluster, PeelStep,
};
pub use potential::{
    classed_energy, cluster_energy, cluster_gradient, distance_classes, normalized_gradient, pair_energy,
    pair_energy_d1, pair_energy_d2, DistanceClass, LjScalarProperties, PotentialModel, LJ_PROPERTIES,
};
