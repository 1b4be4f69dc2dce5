//! Local relaxation by Polak–Ribière (PR+) nonlinear conjugate gradients
//! with a strong-Wolfe line search.

use crate::error::{invalid, Error, Result};
use crate::geometry::Cluster;
use crate::potential::{cluster_energy, cluster_gradient, energy_and_gradient, norm, PotentialModel};

/// Maximum energy/gradient evaluations in one line search.
const MAX_LINE_TRIALS: usize = 40;

/// Absolute gradient bound used by [`is_stationary`].
pub const STATIONARY_GRAD_BOUND: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOptions {
    /// Convergence threshold on the Euclidean norm of the full gradient.
    pub grad_tol: f64,
    /// Defaults to `200·n`.
    pub max_iters: Option<usize>,
    /// Defaults to `3·n`.
    pub restart_period: Option<usize>,
    pub line_search_c1: f64,
    pub line_search_c2: f64,
    /// Relative stationarity threshold, see [`is_stationary`].
    pub delta0: f64,
    /// Keep one [`TraceRow`] per iteration.
    pub record_trace: bool,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            grad_tol: 1e-8,
            max_iters: None,
            restart_period: None,
            line_search_c1: 1e-4,
            line_search_c2: 0.4,
            delta0: 1e-6,
            record_trace: false,
        }
    }
}

impl RelaxOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return invalid("grad_tol must be positive");
        }
        if self.max_iters == Some(0) || self.restart_period == Some(0) {
            return invalid("iteration limits must be positive");
        }
        let (c1, c2) = (self.line_search_c1, self.line_search_c2);
        if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
            return invalid("line search constants need 0 < c1 < c2 < 1");
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return invalid("delta0 must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn max_iters_for(&self, n: usize) -> usize {
        self.max_iters.unwrap_or(200 * n)
    }

    pub fn restart_period_for(&self, n: usize) -> usize {
        self.restart_period.unwrap_or(3 * n).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Euclidean length of the accepted displacement in coordinate space.
    pub step_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxResult {
    pub cluster: Cluster,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

struct Probe {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

struct LineSearch<'a> {
    model: &'a PotentialModel,
    x0: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    /// Energy differences below this are treated as round-off.
    noise: f64,
    evals: usize,
}

impl LineSearch<'_> {
    fn probe(&mut self, alpha: f64) -> Probe {
        self.evals += 1;
        let x: Vec<f64> = self.x0.iter().zip(self.d).map(|(a, b)| a + alpha * b).collect();
        let mut g = vec![0.0; x.len()];
        match energy_and_gradient(self.model, &x, &mut g) {
            Ok(f) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let slope = g.iter().zip(self.d).map(|(a, b)| a * b).sum();
                Probe { alpha, f, slope, x, g }
            }
            // a clash or overflow: treat as an overly long step
            _ => Probe {
                alpha,
                f: f64::INFINITY,
                slope: f64::NAN,
                x,
                g,
            },
        }
    }

    fn sufficient(&self, p: &Probe) -> bool {
        p.f.is_finite() && p.f <= self.f0 + self.c1 * p.alpha * self.slope0 + self.noise
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= self.c2 * self.slope0.abs()
    }

    /// Returns an accepted probe, or the best decreasing probe seen when the
    /// Wolfe conditions could not be met within the trial budget.
    fn run(&mut self, alpha0: f64) -> Option<Probe> {
        let mut prev: Option<Probe> = None;
        let mut alpha = alpha0;
        while self.evals < MAX_LINE_TRIALS {
            let p = self.probe(alpha);
            if self.sufficient(&p) && self.curvature(&p) {
                return Some(p);
            }
            if !self.sufficient(&p) || p.slope >= 0.0 {
                return self.zoom(prev, p);
            }
            alpha *= 2.0;
            prev = Some(p);
        }
        prev
    }

    /// Bracket refinement; `lo` (None = the origin) has negative slope,
    /// `hi` either rose too much or has non-negative slope.
    fn zoom(&mut self, mut lo: Option<Probe>, mut hi: Probe) -> Option<Probe> {
        while self.evals < MAX_LINE_TRIALS {
            let (a_lo, f_lo, s_lo) = match &lo {
                Some(p) => (p.alpha, p.f, p.slope),
                None => (0.0, self.f0, self.slope0),
            };
            let width = hi.alpha - a_lo;
            if width.abs() <= 1e-16 * hi.alpha.abs().max(1e-300) {
                break;
            }
            let mut a = interpolate(a_lo, f_lo, s_lo, hi.alpha, hi.f, hi.slope);
            let (left, right) = (a_lo + 0.1 * width, hi.alpha - 0.1 * width);
            if !a.is_finite() || a < left.min(right) || a > left.max(right) {
                a = a_lo + 0.5 * width;
            }
            let p = self.probe(a);
            if self.sufficient(&p) && self.curvature(&p) {
                return Some(p);
            }
            if !self.sufficient(&p) || p.slope >= 0.0 {
                hi = p;
            } else {
                lo = Some(p);
            }
        }
        lo
    }
}

/// Minimizer of the cubic (or quadratic, when `hi` has no slope) model
/// through the bracket ends.
fn interpolate(a0: f64, f0: f64, s0: f64, a1: f64, f1: f64, s1: f64) -> f64 {
    if !f1.is_finite() {
        return f64::NAN;
    }
    let h = a1 - a0;
    if !s1.is_finite() {
        let denom = 2.0 * (f1 - f0 - s0 * h);
        return a0 - s0 * h * h / denom;
    }
    let d1 = s0 + s1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = d1 * d1 - s0 * s1;
    if disc < 0.0 {
        return f64::NAN;
    }
    let d2 = h.signum() * disc.sqrt();
    a1 - h * (s1 + d2 - d1) / (s1 - s0 + 2.0 * d2)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relaxes `c` to a nearby local minimum of the cluster energy.
///
/// Never aborts on a stalled line search: the best iterate is returned with
/// `converged = false`. Labels of `c` are carried over to the result.
pub fn relax(m: &PotentialModel, c: &Cluster, opts: &RelaxOptions) -> Result<RelaxResult> {
    opts.validate()?;
    let n = c.len();
    if n < 2 {
        return invalid("relaxation needs at least two particles");
    }
    let max_iters = opts.max_iters_for(n);
    let restart_period = opts.restart_period_for(n);

    let x_start = c.coordinates();
    let mut x = x_start.clone();
    let mut g = vec![0.0; x.len()];
    let f_start = energy_and_gradient(m, &x, &mut g)?;
    if !f_start.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBreakdown(
            "non-finite energy at the starting geometry".into(),
        ));
    }
    let mut f = f_start;
    let mut gnorm = norm(&g);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut steepest = true;
    let mut since_restart = 0;
    let mut last: Option<(f64, f64)> = None; // (alpha, slope) of the previous search
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = gnorm <= opts.grad_tol;

    while !converged && iterations < max_iters {
        let mut slope0 = dot(&g, &d);
        if !(slope0 < 0.0) {
            d = g.iter().map(|v| -v).collect();
            slope0 = -gnorm * gnorm;
            steepest = true;
            since_restart = 0;
        }
        let dnorm = norm(&d);
        let cap = 1.0 / dnorm;
        let alpha0 = match last {
            Some((a, s)) if !steepest => (a * s / slope0).min(cap),
            _ => cap,
        };
        let mut ls = LineSearch {
            model: m,
            x0: &x,
            d: &d,
            f0: f,
            slope0,
            c1: opts.line_search_c1,
            c2: opts.line_search_c2,
            noise: 1e-13 * f.abs().max(1.0),
            evals: 0,
        };
        let accepted = ls.run(alpha0);
        iterations += 1;
        let Some(p) = accepted else {
            if steepest {
                break;
            }
            // retry from steepest descent
            d = g.iter().map(|v| -v).collect();
            steepest = true;
            since_restart = 0;
            last = None;
            continue;
        };

        let step_length = p.alpha * dnorm;
        let beta = {
            let num: f64 = p.g.iter().zip(&g).map(|(gn, go)| gn * (gn - go)).sum();
            (num / (gnorm * gnorm)).max(0.0)
        };
        last = Some((p.alpha, slope0));
        x = p.x;
        g = p.g;
        f = p.f;
        gnorm = norm(&g);
        since_restart += 1;
        let restart = since_restart >= restart_period || beta == 0.0;
        if restart {
            since_restart = 0;
            d = g.iter().map(|v| -v).collect();
        } else {
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi + beta * *di;
            }
        }
        steepest = restart;
        if opts.record_trace {
            trace.push(TraceRow {
                iter: iterations,
                energy: f,
                grad_norm: gnorm,
                step_length,
            });
        }
        converged = gnorm <= opts.grad_tol;
    }

    if f > f_start {
        // only reachable through round-off on an already stationary input
        x = x_start;
        f = f_start;
        energy_and_gradient(m, &x, &mut g)?;
        gnorm = norm(&g);
        converged = gnorm <= opts.grad_tol;
    }

    let cluster = c
        .with_coordinates(&x)
        .map_err(|e| Error::NumericBreakdown(format!("relaxed geometry is invalid: {e}")))?;
    Ok(RelaxResult {
        cluster,
        energy: f,
        grad_norm: gnorm,
        iterations,
        converged,
        trace,
    })
}

/// Stationarity test: small absolute gradient and small gradient/energy ratio.
pub fn is_stationary(m: &PotentialModel, c: &Cluster, delta0: f64) -> Result<bool> {
    let e = cluster_energy(m, c)?;
    if e == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let gnorm = norm(&cluster_gradient(m, c)?);
    Ok(gnorm <= STATIONARY_GRAD_BOUND && gnorm / e.abs() < delta0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, rotate, Point3, Rotation};
    use crate::potential::LJ_PROPERTIES;
    use crate::reference::{c13, C13_ENERGY};

    fn dimer(r: f64) -> Cluster {
        Cluster::new(vec![Point3::ORIGIN, Point3::new(r, 0.0, 0.0)]).unwrap()
    }

    #[test]
    fn stretched_dimer_relaxes_to_pair_minimum() {
        let lj = PotentialModel::lj();
        let res = relax(&lj, &dimer(1.5), &RelaxOptions::default()).unwrap();
        assert!(res.converged);
        let p = res.cluster.points();
        assert!((distance(p[0], p[1]) - LJ_PROPERTIES.r_star).abs() < 1e-6);
        assert!((res.energy + 1.0).abs() < 1e-9);
    }

    #[test]
    fn c13_needs_no_relaxation() {
        let lj = PotentialModel::lj();
        let start = c13();
        let res = relax(&lj, &start, &RelaxOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.energy - C13_ENERGY).abs() < 1e-5);
        for (a, b) in start.points().iter().zip(res.cluster.points()) {
            assert!(distance(*a, *b) <= 1e-3);
        }
        assert!(is_stationary(&lj, &res.cluster, 1e-6).unwrap());
    }

    #[test]
    fn result_energy_matches_cluster_energy() {
        let lj = PotentialModel::lj();
        let c = rotate(&c13(), &Rotation::about_y(0.3));
        let mut pts = c.points().to_vec();
        pts[3] = pts[3] + Point3::new(0.04, -0.02, 0.03);
        let res = relax(&lj, &Cluster::new(pts).unwrap(), &RelaxOptions::default()).unwrap();
        let e = cluster_energy(&lj, &res.cluster).unwrap();
        assert!((e - res.energy).abs() <= 1e-12);
    }

    #[test]
    fn trace_is_monotone() {
        let lj = PotentialModel::lj();
        let mut pts = c13().points().to_vec();
        for (k, p) in pts.iter_mut().enumerate() {
            let s = 0.03 * ((k * 7 % 5) as f64 - 2.0);
            *p = *p + Point3::new(s, -s, 0.5 * s);
        }
        let opts = RelaxOptions {
            record_trace: true,
            ..Default::default()
        };
        let res = relax(&lj, &Cluster::new(pts).unwrap(), &opts).unwrap();
        assert!(res.converged);
        assert_eq!(res.trace.len(), res.iterations);
        for w in res.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs());
        }
    }

    #[test]
    fn stationarity_examples() {
        let lj = PotentialModel::lj();
        let relaxed = relax(&lj, &dimer(1.5), &RelaxOptions::default()).unwrap().cluster;
        assert!(is_stationary(&lj, &relaxed, 1e-6).unwrap());
        // |E'(1.5)| / |E(1.5)| is far above 1e-6
        let r: f64 = 1.5;
        let ratio = (24.0 * (r.powi(6) - 2.0) / r.powi(13)).abs() / (4.0 * (r.powi(-12) - r.powi(-6))).abs();
        assert!(ratio > 1e-6);
        assert!(!is_stationary(&lj, &dimer(1.5), 1e-6).unwrap());
        assert_eq!(is_stationary(&lj, &dimer(1.0), 1e-6), Err(Error::UndefinedRatio));
    }

    #[test]
    fn hits_iteration_limit() {
        let lj = PotentialModel::lj();
        let opts = RelaxOptions {
            max_iters: Some(1),
            ..Default::default()
        };
        let mut pts = c13().points().to_vec();
        pts[1] = pts[1] * 1.2;
        let res = relax(&lj, &Cluster::new(pts).unwrap(), &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn rejects_bad_options() {
        let lj = PotentialModel::lj();
        let bad = RelaxOptions {
            line_search_c1: 0.5,
            line_search_c2: 0.4,
            ..Default::default()
        };
        assert!(relax(&lj, &dimer(1.5), &bad).is_err());
        let single = Cluster::new(vec![Point3::ORIGIN]).unwrap();
        assert!(relax(&lj, &single, &RelaxOptions::default()).is_err());
    }
}
