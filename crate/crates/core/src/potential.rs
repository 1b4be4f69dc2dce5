//! Pair potentials, whole-cluster energy and gradient, and the
//! distance-class evaluator that exploits repeated pair distances.

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, Cluster};

/// A pair potential with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialModel {
    /// `4ε[(σ/r)¹² − (σ/r)⁶]`
    LennardJones { epsilon0: f64, sigma: f64 },
    /// `(1 − e^{α(1−r)})² − 1`, well depth 1 at r = 1.
    Morse { alpha: f64 },
    /// `α e^{βr} + γ/r⁶`
    Buckingham { alpha: f64, beta: f64, gamma: f64 },
    /// `4ε[u¹² − u⁶]` with `u = (1−γ)/(r/σ − γ)`
    Kihara { epsilon0: f64, sigma: f64, gamma: f64 },
}

impl Default for PotentialModel {
    fn default() -> Self {
        PotentialModel::LennardJones {
            epsilon0: 1.0,
            sigma: 1.0,
        }
    }
}

impl PotentialModel {
    pub fn lj() -> Self {
        Self::default()
    }

    pub fn lennard_jones(epsilon0: f64, sigma: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && sigma > 0.0) {
            return invalid("Lennard-Jones needs epsilon0 > 0 and sigma > 0");
        }
        Ok(PotentialModel::LennardJones { epsilon0, sigma })
    }

    pub fn morse(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return invalid("Morse needs alpha > 0");
        }
        Ok(PotentialModel::Morse { alpha })
    }

    pub fn buckingham(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return invalid("Buckingham parameters must be finite");
        }
        Ok(PotentialModel::Buckingham { alpha, beta, gamma })
    }

    pub fn kihara(epsilon0: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && sigma > 0.0 && gamma.is_finite()) {
            return invalid("Kihara needs epsilon0 > 0, sigma > 0 and finite gamma");
        }
        Ok(PotentialModel::Kihara { epsilon0, sigma, gamma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialModel::LennardJones { .. } => "LJ",
            PotentialModel::Morse { .. } => "MO",
            PotentialModel::Buckingham { .. } => "BU",
            PotentialModel::Kihara { .. } => "KI",
        }
    }

    /// Energy and its first two radial derivatives.
    fn eval(&self, r: f64) -> Result<[f64; 3]> {
        if !(r > 0.0) {
            return Err(Error::Domain { model: self.name(), r });
        }
        Ok(match *self {
            PotentialModel::LennardJones { epsilon0, sigma } => power_well(epsilon0, sigma, r),
            PotentialModel::Kihara { epsilon0, sigma, gamma } => {
                let s = r - sigma * gamma;
                if s == 0.0 {
                    return Err(Error::Domain { model: self.name(), r });
                }
                power_well(epsilon0, (1.0 - gamma) * sigma, s)
            }
            PotentialModel::Morse { alpha } => {
                let e = (alpha * (1.0 - r)).exp();
                [
                    e * e - 2.0 * e,
                    2.0 * alpha * e * (1.0 - e),
                    2.0 * alpha * alpha * e * (2.0 * e - 1.0),
                ]
            }
            PotentialModel::Buckingham { alpha, beta, gamma } => {
                let ex = alpha * (beta * r).exp();
                let r6 = r.powi(6);
                [
                    ex + gamma / r6,
                    beta * ex - 6.0 * gamma / (r6 * r),
                    beta * beta * ex + 42.0 * gamma / (r6 * r * r),
                ]
            }
        })
    }
}

/// `4ε[(c/s)¹² − (c/s)⁶]` and its derivatives in `s`.
fn power_well(epsilon0: f64, c: f64, s: f64) -> [f64; 3] {
    let u6 = (c / s).powi(6);
    let u12 = u6 * u6;
    let k = 4.0 * epsilon0;
    [
        k * (u12 - u6),
        k * (-12.0 * u12 + 6.0 * u6) / s,
        k * (156.0 * u12 - 42.0 * u6) / (s * s),
    ]
}

pub fn pair_energy(m: &PotentialModel, r: f64) -> Result<f64> {
    Ok(m.eval(r)?[0])
}

pub fn pair_energy_d1(m: &PotentialModel, r: f64) -> Result<f64> {
    Ok(m.eval(r)?[1])
}

pub fn pair_energy_d2(m: &PotentialModel, r: f64) -> Result<f64> {
    Ok(m.eval(r)?[2])
}

/// Scalar properties of the reduced LJ pair `E(r) = 4(r⁻¹² − r⁻⁶)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjScalarProperties {
    /// Location of the pair minimum, `2^(1/6)`.
    pub r_star: f64,
    pub e_at_r_star: f64,
    /// Convexity interval of the pair energy.
    pub basin_lo: f64,
    pub basin_hi: f64,
    /// Upper bound of the energy inside the basin.
    pub basin_energy_bound: f64,
    /// Quadratic coefficient of the expansion about `r_star`, `18·2^(2/3)`.
    pub series_k: f64,
}

pub const LJ_PROPERTIES: LjScalarProperties = LjScalarProperties {
    r_star: 1.122_462_048_309_373,
    e_at_r_star: -1.0,
    basin_lo: 1.0536668,
    basin_hi: 1.2444551,
    basin_energy_bound: -0.78698215,
    series_k: 28.573_218_935_427_59,
};

/// Number of unordered pairs in a cluster of `n` points.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Energy of a flat coordinate vector. Used by the minimizer.
pub(crate) fn energy_of(m: &PotentialModel, x: &[f64]) -> Result<f64> {
    let n = x.len() / 3;
    let mut e = 0.0;
    for i in 0..n {
        let (xi, yi, zi) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        for j in i + 1..n {
            let dx = xi - x[3 * j];
            let dy = yi - x[3 * j + 1];
            let dz = zi - x[3 * j + 2];
            e += m.eval((dx * dx + dy * dy + dz * dz).sqrt())?[0];
        }
    }
    Ok(e)
}

/// Energy and gradient of a flat coordinate vector; `grad` is overwritten.
pub(crate) fn energy_and_gradient(m: &PotentialModel, x: &[f64], grad: &mut [f64]) -> Result<f64> {
    let n = x.len() / 3;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut e = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = [
                x[3 * i] - x[3 * j],
                x[3 * i + 1] - x[3 * j + 1],
                x[3 * i + 2] - x[3 * j + 2],
            ];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let [v, dv, _] = m.eval(r)?;
            e += v;
            let f = dv / r;
            for k in 0..3 {
                grad[3 * i + k] += f * d[k];
                grad[3 * j + k] -= f * d[k];
            }
        }
    }
    Ok(e)
}

fn require_pairs(c: &Cluster) -> Result<()> {
    if c.len() < 2 {
        return invalid("energy needs at least two particles");
    }
    Ok(())
}

pub fn cluster_energy(m: &PotentialModel, c: &Cluster) -> Result<f64> {
    require_pairs(c)?;
    energy_of(m, &c.coordinates())
}

/// Analytic gradient, laid out as `[∂x0, ∂y0, ∂z0, ∂x1, ...]`.
pub fn cluster_gradient(m: &PotentialModel, c: &Cluster) -> Result<Vec<f64>> {
    require_pairs(c)?;
    let x = c.coordinates();
    let mut g = vec![0.0; x.len()];
    energy_and_gradient(m, &x, &mut g)?;
    Ok(g)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Gradient scaled to unit Euclidean norm.
pub fn normalized_gradient(m: &PotentialModel, c: &Cluster) -> Result<Vec<f64>> {
    let mut g = cluster_gradient(m, c)?;
    let n = norm(&g);
    if !(n > 1e-14) {
        return Err(Error::DegenerateDirection { norm: n });
    }
    g.iter_mut().for_each(|a| *a /= n);
    Ok(g)
}

/// A group of pair distances that agree within the grouping tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceClass {
    pub representative_distance: f64,
    pub multiplicity: usize,
}

/// Groups the pair distances of `c`: after sorting, a gap larger than `tol`
/// starts a new class. Each class is represented by its mean distance.
pub fn distance_classes(c: &Cluster, tol: f64) -> Result<Vec<DistanceClass>> {
    require_pairs(c)?;
    if !(tol > 0.0) {
        return invalid("class tolerance must be positive");
    }
    let p = c.points();
    let mut d = Vec::with_capacity(pair_count(p.len()));
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d.push(distance(p[i], p[j]));
        }
    }
    d.sort_by(f64::total_cmp);

    let mut classes = Vec::new();
    let mut start = 0;
    for k in 1..=d.len() {
        if k == d.len() || d[k] - d[k - 1] > tol {
            let members = &d[start..k];
            classes.push(DistanceClass {
                representative_distance: members.iter().sum::<f64>() / members.len() as f64,
                multiplicity: members.len(),
            });
            start = k;
        }
    }
    Ok(classes)
}

/// `Σ multiplicity · V(representative)`.
pub fn classed_energy(m: &PotentialModel, classes: &[DistanceClass]) -> Result<f64> {
    if classes.is_empty() {
        return invalid("no distance classes");
    }
    classes.iter().try_fold(0.0, |acc, c| {
        Ok(acc + c.multiplicity as f64 * pair_energy(m, c.representative_distance)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::reference::{c13, C13_ENERGY};

    fn models() -> Vec<PotentialModel> {
        vec![
            PotentialModel::lj(),
            PotentialModel::lennard_jones(0.7, 1.3).unwrap(),
            PotentialModel::morse(6.0).unwrap(),
            PotentialModel::buckingham(1000.0, -9.0, -1.5).unwrap(),
            PotentialModel::kihara(1.0, 1.0, 0.2).unwrap(),
        ]
    }

    #[test]
    fn lj_pair_values() {
        let lj = PotentialModel::lj();
        let rs = 2f64.powf(1.0 / 6.0);
        assert!((pair_energy(&lj, rs).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pair_energy(&lj, 1.0).unwrap(), 0.0);
        assert!(pair_energy_d1(&lj, rs).unwrap().abs() < 1e-10);
        assert!(pair_energy_d2(&lj, rs).unwrap() > 0.0);
        assert!((LJ_PROPERTIES.r_star - rs).abs() < 1e-15);
        assert!((LJ_PROPERTIES.series_k - 18.0 * 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn lj_derivatives_match_closed_forms() {
        let lj = PotentialModel::lj();
        for r in [0.95_f64, 1.1, 1.7, 2.5] {
            let d1 = 24.0 * (-2.0 + r.powi(6)) / r.powi(13);
            let d2 = -24.0 * (-26.0 + 7.0 * r.powi(6)) / r.powi(14);
            assert!((pair_energy_d1(&lj, r).unwrap() - d1).abs() < 1e-12 * d1.abs().max(1.0));
            assert!((pair_energy_d2(&lj, r).unwrap() - d2).abs() < 1e-12 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn morse_minimum_at_unit_distance() {
        for alpha in [3.0, 6.0, 14.0] {
            let m = PotentialModel::morse(alpha).unwrap();
            assert_eq!(pair_energy(&m, 1.0).unwrap(), -1.0);
            assert_eq!(pair_energy_d1(&m, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for m in models() {
            for r in [1.0, 1.1, 1.5, 2.0] {
                let fd1 = (pair_energy(&m, r + h).unwrap() - pair_energy(&m, r - h).unwrap()) / (2.0 * h);
                let d1 = pair_energy_d1(&m, r).unwrap();
                assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0), "{m:?} d1 at {r}");
                let fd2 = (pair_energy_d1(&m, r + h).unwrap() - pair_energy_d1(&m, r - h).unwrap()) / (2.0 * h);
                let d2 = pair_energy_d2(&m, r).unwrap();
                assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(1.0), "{m:?} d2 at {r}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        let lj = PotentialModel::lj();
        assert!(matches!(pair_energy(&lj, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(pair_energy(&lj, -1.0), Err(Error::Domain { .. })));
        let ki = PotentialModel::kihara(1.0, 2.0, 0.25).unwrap();
        assert!(matches!(pair_energy(&ki, 0.5), Err(Error::Domain { .. })));
        assert!(PotentialModel::lennard_jones(0.0, 1.0).is_err());
        assert!(PotentialModel::morse(-1.0).is_err());
    }

    #[test]
    fn small_cluster_energies() {
        let lj = PotentialModel::lj();
        let rs = LJ_PROPERTIES.r_star;
        let dimer = Cluster::new(vec![Point3::ORIGIN, Point3::new(rs, 0.0, 0.0)]).unwrap();
        assert!((cluster_energy(&lj, &dimer).unwrap() + 1.0).abs() < 1e-12);
        assert!(norm(&cluster_gradient(&lj, &dimer).unwrap()) < 1e-10);
        let tri = Cluster::new(vec![
            Point3::ORIGIN,
            Point3::new(rs, 0.0, 0.0),
            Point3::new(rs / 2.0, rs * 3f64.sqrt() / 2.0, 0.0),
        ])
        .unwrap();
        assert!((cluster_energy(&lj, &tri).unwrap() + 3.0).abs() < 1e-12);
        let single = Cluster::new(vec![Point3::ORIGIN]).unwrap();
        assert!(cluster_energy(&lj, &single).is_err());
    }

    #[test]
    fn c13_energy_and_gradient() {
        let lj = PotentialModel::lj();
        let e = cluster_energy(&lj, &c13()).unwrap();
        assert!((e - C13_ENERGY).abs() < 1e-5, "{e}");
        assert!(norm(&cluster_gradient(&lj, &c13()).unwrap()) <= 1e-4);
    }

    #[test]
    fn stretched_dimer_direction() {
        let lj = PotentialModel::lj();
        let r = 1.5 * LJ_PROPERTIES.r_star;
        let dimer = Cluster::new(vec![Point3::ORIGIN, Point3::new(r, 0.0, 0.0)]).unwrap();
        let g = normalized_gradient(&lj, &dimer).unwrap();
        assert!((norm(&g) - 1.0).abs() < 1e-12);
        // attraction: moving the second particle outwards raises the energy
        assert!(g[3] > 0.0 && g[0] < 0.0);
        assert!((g[3] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        for k in [1, 2, 4, 5] {
            assert_eq!(g[k], 0.0);
        }
    }

    #[test]
    fn vanishing_gradient_has_no_direction() {
        let lj = PotentialModel::lj();
        let dimer = Cluster::new(vec![
            Point3::new(-LJ_PROPERTIES.r_star / 2.0, 0.0, 0.0),
            Point3::new(LJ_PROPERTIES.r_star / 2.0, 0.0, 0.0),
        ])
        .unwrap();
        let g = cluster_gradient(&lj, &dimer).unwrap();
        if norm(&g) <= 1e-14 {
            assert!(matches!(
                normalized_gradient(&lj, &dimer),
                Err(Error::DegenerateDirection { .. })
            ));
        }
    }

    #[test]
    fn distance_class_examples() {
        let dimer = Cluster::new(vec![Point3::ORIGIN, Point3::new(1.2, 0.0, 0.0)]).unwrap();
        let cl = distance_classes(&dimer, 1e-6).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].multiplicity, 1);

        let s = 1.3;
        let square = Cluster::new(vec![
            Point3::ORIGIN,
            Point3::new(s, 0.0, 0.0),
            Point3::new(s, s, 0.0),
            Point3::new(0.0, s, 0.0),
        ])
        .unwrap();
        let m: Vec<usize> = distance_classes(&square, 1e-6)
            .unwrap()
            .iter()
            .map(|c| c.multiplicity)
            .collect();
        assert_eq!(m, vec![4, 2]);

        let cl = distance_classes(&c13(), 1e-6).unwrap();
        let m: Vec<usize> = cl.iter().map(|c| c.multiplicity).collect();
        assert_eq!(m, vec![12, 30, 30, 6]);
        let lj = PotentialModel::lj();
        let e = classed_energy(&lj, &cl).unwrap();
        assert!((e - C13_ENERGY).abs() < 1e-5);
        assert!((e - cluster_energy(&lj, &c13()).unwrap()).abs() < 1e-9);

        let dimer_class = [DistanceClass {
            representative_distance: LJ_PROPERTIES.r_star,
            multiplicity: 1,
        }];
        assert!((classed_energy(&lj, &dimer_class).unwrap() + 1.0).abs() < 1e-12);
        assert!(classed_energy(&lj, &[]).is_err());
    }
}
