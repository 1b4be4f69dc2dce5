use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use ifcluster::catalog::mif_chain;
use ifcluster::lattice::shells_enclosing;
use ifcluster::xyz::{parse_xyz, write_lattice_xyz, write_xyz, write_xyz_with_vectors, XyzFrame};
use ifcluster::{
    adj, build_catalog, classify as classify_type, cluster_energy, cluster_gradient, gen_if, icosahedral_rotations,
    lookup_and_relax, parse_catalog, peel_backward, peel_forward, peel_itself, relax as relax_cluster,
    serialize_catalog, Catalog, Cluster, Error, IndexCluster, Lattice, Point3, PotentialModel, RelaxOptions,
    RelaxResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Config, PeelOp, Potential};

/// Below this raw norm the gradient direction is treated as undefined.
const VANISHING_GRADIENT: f64 = 1e-10;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    fail(2, anyhow!(msg.into()))
}

/// Exit code for a library error: 4 for numeric trouble, 3 for bad input.
fn lib(e: Error) -> Failure {
    let code = match e {
        Error::Domain { .. }
        | Error::NumericBreakdown(_)
        | Error::DegenerateDirection { .. }
        | Error::UndefinedRatio => 4,
        _ => 3,
    };
    fail(code, e)
}

fn model(c: &Config) -> Result<PotentialModel, Failure> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this potential")));
    let m = match c.potential {
        Potential::Lj => PotentialModel::lennard_jones(c.eps.unwrap_or(1.0), c.sigma.unwrap_or(1.0)),
        Potential::Morse => PotentialModel::morse(need(c.alpha, "alpha")?),
        Potential::Bu => {
            PotentialModel::buckingham(need(c.alpha, "alpha")?, need(c.beta, "beta")?, need(c.gamma, "gamma")?)
        }
        Potential::Ki => PotentialModel::kihara(c.eps.unwrap_or(1.0), c.sigma.unwrap_or(1.0), need(c.gamma, "gamma")?),
    };
    m.map_err(|e| usage(e.to_string()))
}

fn options(c: &Config) -> Result<RelaxOptions, Failure> {
    let opts = RelaxOptions {
        grad_tol: c.grad_tol,
        max_iters: c.max_iters,
        record_trace: c.verbose,
        ..RelaxOptions::default()
    };
    opts.validate().map_err(|e| usage(e.to_string()))?;
    Ok(opts)
}

fn read_frame(path: &Path) -> Result<XyzFrame, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| fail(3, e))?;
    parse_xyz(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| fail(3, e))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|e| fail(3, e))
}

fn lattice_for(c: &Config, points: &[Point3]) -> Result<Lattice, Failure> {
    let shells = match c.shells {
        Some(s) => s,
        None => {
            let r = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
            shells_enclosing(r) + 1
        }
    };
    gen_if(shells).map_err(|e| usage(e.to_string()))
}

fn located<'a>(c: &Config, lattice: &'a Lattice, points: &[Point3]) -> Result<IndexCluster<'a>, Failure> {
    IndexCluster::from_points(lattice, points, c.tol).map_err(lib)
}

fn print_trace(c: &Config, r: &RelaxResult) {
    if c.verbose {
        for row in &r.trace {
            eprintln!(
                "iter={} E={:.12} |g|={:.3e} step={:.3e}",
                row.iter, row.energy, row.grad_norm, row.step_length
            );
        }
    }
}

pub fn lattice(c: &Config) -> Outcome {
    let shells = c.shells.ok_or_else(|| usage("--shells is required"))?;
    let l = gen_if(shells).map_err(|e| usage(e.to_string()))?;
    if let Some(out) = &c.out {
        write_file(
            out,
            &write_lattice_xyz(&l, &format!("IF{} shells={shells} source=lattice", l.len())),
        )?;
    }
    println!("sites={}", l.len());
    println!("shell IC FC");
    for (k, ic, fc) in l.shell_breakdown() {
        println!("{k} {ic} {fc}");
    }
    Ok(())
}

pub fn relax(c: &Config, input: &Path, perturb: Option<f64>) -> Outcome {
    let m = model(c)?;
    let opts = options(c)?;
    let mut points = read_frame(input)?.points;
    if let Some(a) = perturb {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(usage("--perturb must be a non-negative amplitude"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        for p in &mut points {
            *p = *p + Point3::new(rng.gen_range(-a..=a), rng.gen_range(-a..=a), rng.gen_range(-a..=a));
        }
    }
    let start = Cluster::new(points).map_err(lib)?;
    let e_init = cluster_energy(&m, &start).map_err(lib)?;
    let r = match relax_cluster(&m, &start, &opts) {
        Ok(r) => r,
        Err(e) => {
            if let Some(out) = &c.out {
                write_file(
                    out,
                    &write_xyz(start.points(), &format!("E={e_init} source=relax-failed")),
                )?;
            }
            return Err(lib(e));
        }
    };
    print_trace(c, &r);
    if let Some(out) = &c.out {
        write_file(
            out,
            &write_xyz(r.cluster.points(), &format!("E={} source=relax", r.energy)),
        )?;
    }
    println!(
        "n={} E_init={:.10} E_min={:.10} |g|={:.3e} iters={} converged={}",
        start.len(),
        e_init,
        r.energy,
        r.grad_norm,
        r.iterations,
        r.converged
    );
    Ok(())
}

pub fn gradient(c: &Config, input: &Path) -> Outcome {
    let m = model(c)?;
    let cluster = Cluster::new(read_frame(input)?.points).map_err(lib)?;
    let g = cluster_gradient(&m, &cluster).map_err(lib)?;
    let raw = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = if raw <= VANISHING_GRADIENT {
        eprintln!("warning: gradient norm {raw:.3e} vanishes, writing zero vectors");
        vec![0.0; g.len()]
    } else {
        g.iter().map(|v| v / raw).collect()
    };
    let vectors: Vec<Point3> = unit.chunks_exact(3).map(|v| Point3::new(v[0], v[1], v[2])).collect();
    let e = cluster_energy(&m, &cluster).map_err(lib)?;
    let text = write_xyz_with_vectors(cluster.points(), &vectors, &format!("E={e} source=gradient"));
    match &c.out {
        Some(out) => {
            write_file(out, &text)?;
            println!("|g|={raw:.6e}");
        }
        None => {
            print!("{text}");
            eprintln!("|g|={raw:.6e}");
        }
    }
    Ok(())
}

/// One row of a peeling run.
struct Row<'a> {
    cluster: IndexCluster<'a>,
    relaxed: RelaxResult,
    e_init: f64,
    adj: usize,
}

/// Runs `steps` moves, stopping early (with a notice) when no move is possible.
fn run_peel<'a>(
    c: &Config,
    m: &PotentialModel,
    start: &IndexCluster<'a>,
    op: PeelOp,
    steps: usize,
) -> Result<Vec<Row<'a>>, Failure> {
    let opts = options(c)?;
    let mut rows: Vec<Row> = Vec::new();
    let mut current = start.clone();
    let mut seed: Option<Cluster> = None;
    for step in 1..=steps {
        if op == PeelOp::Backward && current.len() < 3 {
            eprintln!(
                "notice: stopped after {} step(s): backward needs at least three particles",
                step - 1
            );
            break;
        }
        let res = match op {
            PeelOp::Forward => peel_forward(m, &current, seed.as_ref(), &opts),
            PeelOp::Backward => peel_backward(m, &current, seed.as_ref(), &opts),
            PeelOp::Itself => peel_itself(m, &current, seed.as_ref(), &opts),
        };
        let s = match res {
            Ok(s) => s,
            Err(Error::FrontierExhausted) => {
                eprintln!("notice: stopped after {} step(s): frontier exhausted", step - 1);
                break;
            }
            Err(e) => return Err(lib(e)),
        };
        print_trace(c, &s.relaxed);
        let a = adj(&current, &s.cluster).map_err(lib)?;
        seed = Some(s.relaxed.cluster.clone());
        current = s.cluster.clone();
        rows.push(Row {
            cluster: s.cluster,
            relaxed: s.relaxed,
            e_init: s.e_init,
            adj: a,
        });
    }
    Ok(rows)
}

fn op_name(op: PeelOp) -> &'static str {
    match op {
        PeelOp::Forward => "forward",
        PeelOp::Backward => "backward",
        PeelOp::Itself => "itself",
    }
}

pub fn peel(c: &Config, input: &Path, op: PeelOp, steps: usize) -> Outcome {
    let m = model(c)?;
    let points = read_frame(input)?.points;
    let l = lattice_for(c, &points)?;
    let start = located(c, &l, &points)?;
    let rows = run_peel(c, &m, &start, op, steps)?;
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(|e| fail(3, e))?;
    }
    println!("n E_init E_min adj type");
    for (k, row) in rows.iter().enumerate() {
        let t = classify_type(&row.cluster, &row.relaxed.cluster).map_err(lib)?;
        println!(
            "{} {:.10} {:.10} {} {}",
            row.cluster.len(),
            row.e_init,
            row.relaxed.energy,
            row.adj,
            t.code()
        );
        if let Some(dir) = &c.out {
            let path = dir.join(format!("{}_{:03}_n{}.xyz", op_name(op), k + 1, row.cluster.len()));
            let comment = format!("E={} source=peel-{}", row.relaxed.energy, op_name(op));
            write_file(&path, &write_xyz(row.relaxed.cluster.points(), &comment))?;
        }
    }
    Ok(())
}

pub fn catalog_build(c: &Config, input: &Path, op: PeelOp, steps: usize) -> Outcome {
    if op == PeelOp::Itself {
        return Err(usage("a catalog chain needs --op forward or --op backward"));
    }
    let m = model(c)?;
    let opts = options(c)?;
    let points = read_frame(input)?.points;
    let l = lattice_for(c, &points)?;
    let start = located(c, &l, &points)?;
    let mut chain = vec![start.clone()];
    chain.extend(run_peel(c, &m, &start, op, steps)?.into_iter().map(|r| r.cluster));
    if op == PeelOp::Forward {
        chain.reverse();
    }
    if chain.last().is_some_and(|s| s.len() < 2) {
        return Err(usage("catalogued clusters need at least two particles"));
    }
    let chain = mif_chain(&chain, &icosahedral_rotations()).map_err(lib)?;
    let mut cat = build_catalog(&chain).map_err(lib)?;
    annotate(&mut cat, &m, &opts)?;
    let text = serialize_catalog(&cat);
    match &c.out {
        Some(out) => write_file(out, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "catalog: {} sites, entries {}..{}",
        cat.sites().len(),
        cat.n_min(),
        cat.n_max()
    );
    Ok(())
}

/// Stores the computed type and energies of every entry.
fn annotate(cat: &mut Catalog, m: &PotentialModel, opts: &RelaxOptions) -> Outcome {
    let mut values = Vec::new();
    for n in cat.n_min()..=cat.n_max() {
        let r = lookup_and_relax(cat, m, n, opts).map_err(lib)?;
        values.push((n, r.kind, r.e_init, r.e_min));
    }
    for (n, kind, e_init, e_min) in values {
        cat.annotate(n, Some(kind), Some(e_init), Some(e_min)).map_err(lib)?;
    }
    Ok(())
}

fn read_catalog(path: &Path) -> Result<Catalog, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| fail(3, e))?;
    parse_catalog(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| fail(3, e))
}

fn stored(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.10}"))
}

/// Prints one comparison line; returns whether it is a mismatch.
fn report(cat: &Catalog, m: &PotentialModel, n: usize, opts: &RelaxOptions, c: &Config) -> Result<bool, Failure> {
    let r = lookup_and_relax(cat, m, n, opts)
        .with_context(|| format!("catalog entry n={n}"))
        .map_err(|e| {
            let code = match e.downcast_ref::<Error>() {
                Some(inner) => lib(inner.clone()).code,
                None => 3,
            };
            fail(code, e)
        })?;
    print_trace(c, &r.relaxed);
    let entry = r.expected.as_ref();
    println!(
        "n={} type={} {} E_init={:.10} E_min={:.10} |g|={:.3e} converged={} stored_type={} stored_E_init={} stored_E_min={} status={}",
        n,
        r.kind.code(),
        r.kind.name(),
        r.e_init,
        r.e_min,
        r.relaxed.grad_norm,
        r.relaxed.converged,
        entry.and_then(|e| e.kind).map_or_else(|| "-".into(), |t| t.code().to_string()),
        stored(entry.and_then(|e| e.e_init)),
        stored(entry.and_then(|e| e.e_min)),
        if r.mismatch { "MISMATCH" } else { "ok" },
    );
    Ok(r.mismatch)
}

pub fn catalog_lookup(c: &Config, path: &Path, n: usize) -> Outcome {
    let m = model(c)?;
    let opts = options(c)?;
    let cat = read_catalog(path)?;
    let mismatch = report(&cat, &m, n, &opts, c)?;
    if let Some(out) = &c.out {
        let r = lookup_and_relax(&cat, &m, n, &opts).map_err(lib)?;
        write_file(
            out,
            &write_xyz(
                r.relaxed.cluster.points(),
                &format!("E={} source=catalog-lookup", r.e_min),
            ),
        )?;
    }
    if mismatch {
        return Err(fail(1, anyhow!("entry n={n} differs from the stored energies")));
    }
    Ok(())
}

pub fn catalog_verify(c: &Config, path: &Path) -> Outcome {
    let m = model(c)?;
    let opts = options(c)?;
    let cat = read_catalog(path)?;
    let mut bad = 0;
    for n in cat.n_min()..=cat.n_max() {
        if report(&cat, &m, n, &opts, c)? {
            bad += 1;
        }
    }
    let total = cat.n_max() - cat.n_min() + 1;
    println!("verified {total} entries, {bad} mismatch(es)");
    if bad > 0 {
        return Err(fail(1, anyhow!("{bad} mismatch(es)")));
    }
    Ok(())
}

pub fn classify(c: &Config, input: &Path) -> Outcome {
    let m = model(c)?;
    let opts = options(c)?;
    let points = read_frame(input)?.points;
    let l = lattice_for(c, &points)?;
    let cluster = located(c, &l, &points)?;
    let start = cluster.lattice_cluster();
    let relaxed = if cluster.len() >= 2 {
        relax_cluster(&m, &start, &opts).map_err(lib)?.cluster
    } else {
        start
    };
    let t = classify_type(&cluster, &relaxed).map_err(lib)?;
    println!("{} {}", t.code(), t.name());
    Ok(())
}
