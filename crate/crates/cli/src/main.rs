//! `ppsim` - experiment runner. Subcommands: sample, verify, cost, gxz,
//! wobble, fdd, render. Exit codes: 0 success, 2 precondition/usage error,
//! 3 statistical acceptance failure under `--assert`.
//!
//! Seeds resolve as flag > `--config` file > `PPSIM_SEED` > 0; outputs with
//! identical inputs are byte-identical.

mod render;

use clap::{Args, Parser, Subcommand};
use ppsim::cost::{graphing_cost, gxz_convergence_experiment, vertical_cost_experiment, GxzRow};
use ppsim::graph::{iid_percolation_population, GraphingRule};
use ppsim::palm::{
    verify_clmm, verify_mecke_slivnyak, verify_mtp, verify_palm_of_thickening, Functional,
    Transport, WindowFunctional,
};
use ppsim::process::{
    constant_thicken, decode_marks, delta_thin, dequantize_mark, encode_marks, iid_mark, p_thin,
    sample_poisson, Configuration, ProcessSpec,
};
use ppsim::report::{fmt, VerifierReport};
use ppsim::rng::{roles, stream_rng};
use ppsim::space::{Displacement, Point, Region, Space};
use ppsim::stats::{pearson_corr, poisson_gof, summarize};
use ppsim::weakconv::{
    abert_weiss_colouring, colour_of_mark, far_pair_colour_table, fdd_compare, uniform_gof,
    wobble_distance, FddWindow, FddWindowSet,
};
use ppsim::{Error, Result};
use rand::Rng;
use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ppsim",
    version,
    about = "Invariant point process simulation and verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a configuration and write it in the PPC1 text format
    Sample(SampleArgs),
    /// Statistical verifiers (poisson, mecke, clmm, mtp, thickpalm,
    /// thinning, percolation, colouring, encoding)
    Verify(VerifyArgs),
    /// Graphing-cost estimates, including the vertical cost-1 experiment
    Cost(CostArgs),
    /// Straightening convergence table on the discrete cylinder
    Gxz(GxzArgs),
    /// Bottleneck wobble distance between two PPC1 files
    Wobble(WobbleArgs),
    /// Finite-dimensional distribution comparison of two processes
    Fdd(FddArgs),
    /// Render a configuration (optionally with a factor graph) to SVG
    Render(RenderArgs),
}

/// Line-oriented `key=value` experiment file; flags override file values.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: &Option<PathBuf>) -> Result<FileConfig> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            for (i, line) in fs::read_to_string(p)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or(Error::Parse {
                    line: i + 1,
                    msg: "expected key=value".to_string(),
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::precondition(format!("bad value for `{key}` in config file"))),
            None => Ok(default),
        }
    }
}

fn default_seed() -> u64 {
    std::env::var("PPSIM_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn write_out(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replica: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_sample(a: SampleArgs) -> Result<()> {
    let cfg = FileConfig::load(&a.config)?;
    let space = Space::parse(&cfg.get(a.space, "space", "torus2:10".into())?)?;
    let spec = ProcessSpec::parse(&cfg.get(a.process, "process", "poisson:1".into())?)?;
    let seed = cfg.get(a.seed, "seed", default_seed())?;
    let replica = cfg.get(a.replica, "replica", 0)?;
    let config = spec.sample_replica(&space, seed, replica)?;
    write_out(&a.out, &ppsim::io::write_ppc(&config))
}

#[derive(Args)]
struct VerifyArgs {
    /// which verifier: poisson | mecke | clmm | mtp | thickpalm | thinning |
    /// percolation | colouring | encoding
    which: String,
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// transport for `mtp`: ball:R | nn | spawn:S
    #[arg(long)]
    transport: Option<String>,
    /// statistic for mecke/thickpalm: nn:R | count:R
    #[arg(long)]
    statistic: Option<String>,
    /// offset step for `thickpalm` (F = {0,(s,0)})
    #[arg(long)]
    offset: Option<f64>,
    /// percolation parameter for `percolation`
    #[arg(long)]
    eps: Option<f64>,
    /// graph radius for `percolation`
    #[arg(long)]
    radius: Option<f64>,
    /// colours for `colouring`
    #[arg(long)]
    d: Option<u32>,
    /// locality radius for `colouring`
    #[arg(long)]
    rho: Option<f64>,
    /// separation for `encoding`
    #[arg(long)]
    delta: Option<f64>,
    /// exit 3 when the statistical acceptance threshold fails
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_statistic(desc: &str) -> Result<Functional> {
    let parts: Vec<&str> = desc.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Descriptor(desc.into(), "expected a radius".into()))
    };
    match parts.as_slice() {
        ["nn", r] => Ok(Functional::nn_distance(num(r)?)),
        ["count", r] => Ok(Functional::count_within(num(r)?, None)),
        _ => Err(Error::Descriptor(desc.into(), "unknown statistic".into())),
    }
}

fn run_verify(a: VerifyArgs) -> Result<bool> {
    let cfg = FileConfig::load(&a.config)?;
    let space = Space::parse(&cfg.get(a.space.clone(), "space", "torus2:20".into())?)?;
    let t = cfg.get(a.t, "t", 1.0)?;
    let replicas = cfg.get(a.replicas, "replicas", 2000)?;
    let seed = cfg.get(a.seed, "seed", default_seed())?;
    let mut rows = vec![VerifierReport::csv_header().to_string()];
    let ok;
    match a.which.as_str() {
        "poisson" => {
            let spec = ProcessSpec::poisson(t);
            let side = space.sides().first().copied().unwrap_or(1.0);
            let half = Region::Box {
                lo: [0.0; 3],
                hi: [side / 2.0, side / 2.0, 0.0],
                level: None,
            };
            let other = Region::Box {
                lo: [side / 2.0, side / 2.0, 0.0],
                hi: [side, side, 0.0],
                level: None,
            };
            let mut counts = Vec::new();
            let (mut na, mut nb) = (Vec::new(), Vec::new());
            for r in 0..replicas {
                let c = spec.sample_replica(&space, seed, r)?;
                counts.push(c.len() as u64);
                na.push(c.points.iter().filter(|p| half.contains(&space, p)).count() as f64);
                nb.push(
                    c.points
                        .iter()
                        .filter(|p| other.contains(&space, p))
                        .count() as f64,
                );
            }
            let lambda = t * space.volume();
            let gof = poisson_gof(&counts, lambda);
            let s = summarize(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
            let rho = pearson_corr(&na, &nb);
            ok = gof.p > 0.01 && rho.abs() < 0.05;
            rows.push(
                VerifierReport {
                    verifier: "poisson_gof".into(),
                    statistic: "window_count".into(),
                    n: counts.len(),
                    lhs: s.mean,
                    rhs: lambda,
                    stderr: s.stderr,
                    pvalue: gof.p,
                    seed,
                }
                .csv_row(),
            );
            rows.push(
                VerifierReport {
                    verifier: "poisson_indep".into(),
                    statistic: "disjoint_box_corr".into(),
                    n: counts.len(),
                    lhs: rho,
                    rhs: 0.0,
                    stderr: (1.0 / (replicas as f64)).sqrt(),
                    pvalue: if rho.abs() < 0.05 { 1.0 } else { 0.0 },
                    seed,
                }
                .csv_row(),
            );
        }
        "mecke" => {
            let stat =
                parse_statistic(&cfg.get(a.statistic.clone(), "statistic", "nn:8".into())?)?;
            let rep = verify_mecke_slivnyak(t, &space, &stat, replicas, seed)?;
            ok = rep.passes(0.01);
            rows.push(rep.csv_row());
        }
        "clmm" => {
            let side = space.sides().first().copied().unwrap_or(1.0);
            let f = WindowFunctional {
                window: Region::Box {
                    lo: [0.0; 3],
                    hi: [side / 4.0, side / 4.0, 0.0],
                    level: None,
                },
                h: Functional::count_within(1.0, Some(10)),
            };
            let rep = verify_clmm(&ProcessSpec::poisson(t), &space, &f, 200, replicas, seed)?;
            ok = rep.sigma < 3.0;
            let p = statrs::function::erf::erfc(rep.sigma / 2.0_f64.sqrt());
            rows.push(
                VerifierReport {
                    verifier: "clmm".into(),
                    statistic: rep.name.clone(),
                    n: replicas as usize,
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    stderr: (rep.lhs_stderr.powi(2) + rep.rhs_stderr.powi(2)).sqrt(),
                    pvalue: p,
                    seed,
                }
                .csv_row(),
            );
        }
        "mtp" => {
            let tdesc = cfg.get(a.transport.clone(), "transport", "ball:2".into())?;
            let parts: Vec<&str> = tdesc.split(':').collect();
            let (spec, transport) = match parts.as_slice() {
                ["ball", r] => (
                    ProcessSpec::poisson(t),
                    Transport::ball_indicator(
                        r.parse()
                            .map_err(|_| Error::Descriptor(tdesc.clone(), "bad radius".into()))?,
                    ),
                ),
                ["nn"] => (
                    ProcessSpec::poisson(t),
                    Transport::nearest_neighbour(space.half_extent() * 0.98),
                ),
                ["spawn", s] => {
                    let s: f64 = s
                        .parse()
                        .map_err(|_| Error::Descriptor(tdesc.clone(), "bad offset".into()))?;
                    let offsets = vec![
                        Displacement::d2(0.0, 0.0),
                        Displacement::d2(s, 0.0),
                        Displacement::d2(0.0, s),
                    ];
                    (
                        ProcessSpec::parse(&format!("poisson:{t}|thicken3:{s}"))?,
                        Transport::spawn_indicator(offsets, s * 2.0),
                    )
                }
                _ => return Err(Error::Descriptor(tdesc, "unknown transport".into())),
            };
            let rep = verify_mtp(&spec, &space, &transport, replicas, seed)?;
            ok = rep.max_rel_gap < 1e-9;
            rows.push(
                VerifierReport {
                    verifier: "mtp".into(),
                    statistic: rep.transport.clone(),
                    n: replicas as usize,
                    lhs: rep.mean_out,
                    rhs: rep.mean_in,
                    stderr: rep.max_rel_gap,
                    pvalue: if ok { 1.0 } else { 0.0 },
                    seed,
                }
                .csv_row(),
            );
        }
        "thickpalm" => {
            let s = cfg.get(a.offset, "offset", 0.3)?;
            let stat =
                parse_statistic(&cfg.get(a.statistic.clone(), "statistic", "nn:8".into())?)?;
            let rep = verify_palm_of_thickening(
                t,
                &space,
                &[Displacement::d2(0.0, 0.0), Displacement::d2(s, 0.0)],
                &stat,
                replicas,
                seed,
            )?;
            ok = rep.passes(0.01);
            rows.push(rep.csv_row());
        }
        "thinning" => {
            let p = 0.3;
            let counts: Vec<u64> = (0..replicas)
                .map(|r| {
                    let mut rng = stream_rng(seed, roles::SAMPLE, r);
                    let c = sample_poisson(&space, t, &mut rng).expect("sample");
                    let m = iid_mark(&c, &mut rng).expect("mark");
                    p_thin(&m, p).expect("thin").len() as u64
                })
                .collect();
            let gof = poisson_gof(&counts, p * t * space.volume());
            let offsets = vec![
                Displacement::d2(0.0, 0.0),
                Displacement::d2(0.2, 0.0),
                Displacement::d2(0.0, 0.2),
            ];
            let mut exact = 0usize;
            for r in 0..1000u64 {
                let mut rng = stream_rng(seed.wrapping_add(1), roles::SAMPLE, r);
                let c = sample_poisson(&space, t / 2.0, &mut rng)?;
                if constant_thicken(&c, &offsets)
                    .map(|o| o.len() == 3 * c.len())
                    .unwrap_or(false)
                {
                    exact += 1;
                }
            }
            ok = gof.p > 0.01 && exact == 1000;
            rows.push(
                VerifierReport {
                    verifier: "pthin_gof".into(),
                    statistic: format!("pthin_{p}"),
                    n: counts.len(),
                    lhs: summarize(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()).mean,
                    rhs: p * t * space.volume(),
                    stderr: 0.0,
                    pvalue: gof.p,
                    seed,
                }
                .csv_row(),
            );
            rows.push(
                VerifierReport {
                    verifier: "thicken_count".into(),
                    statistic: "exact_runs".into(),
                    n: 1000,
                    lhs: exact as f64,
                    rhs: 1000.0,
                    stderr: 0.0,
                    pvalue: if exact == 1000 { 1.0 } else { 0.0 },
                    seed,
                }
                .csv_row(),
            );
        }
        "percolation" => {
            let eps = cfg.get(a.eps, "eps", 0.35)?;
            let radius = cfg.get(a.radius, "radius", 2.0)?;
            let pop = iid_percolation_population(&space, t, radius, eps, replicas, seed)?;
            let frac = pop.survivors as f64 / pop.total_edges.max(1) as f64;
            let se = (eps * (1.0 - eps) / pop.total_edges.max(1) as f64).sqrt();
            ok = pop.total_edges >= 10_000 && (frac - eps).abs() < 3.0 * se && pop.monotone;
            rows.push(
                VerifierReport {
                    verifier: "percolation".into(),
                    statistic: format!("eps_{eps}"),
                    n: pop.total_edges as usize,
                    lhs: frac,
                    rhs: eps,
                    stderr: se,
                    pvalue: if ok { 1.0 } else { 0.0 },
                    seed,
                }
                .csv_row(),
            );
        }
        "colouring" => {
            let d = cfg.get(a.d, "d", 2)?;
            let rho = cfg.get(a.rho, "rho", 2.0)?;
            let spec = ProcessSpec::poisson(t);
            let mut marg = vec![0u64; d as usize];
            let mut coloured = Vec::new();
            for r in 0..replicas {
                let c = spec.sample_replica(&space, seed, r)?;
                if let Ok(col) = abert_weiss_colouring(&c, d, rho, 0.05, seed.wrapping_add(1)) {
                    for p in &col.points {
                        marg[colour_of_mark(p.mark.unwrap(), d) as usize] += 1;
                    }
                    coloured.push(col);
                }
            }
            let mgof = uniform_gof(&marg);
            let table = far_pair_colour_table(&coloured, d, 2.0 * rho);
            let jgof = uniform_gof(&table);
            ok = mgof.p > 0.01 && jgof.p > 0.01;
            rows.push(
                VerifierReport {
                    verifier: "colouring_marginal".into(),
                    statistic: format!("d_{d}"),
                    n: marg.iter().sum::<u64>() as usize,
                    lhs: marg[0] as f64,
                    rhs: marg.iter().sum::<u64>() as f64 / d as f64,
                    stderr: 0.0,
                    pvalue: mgof.p,
                    seed,
                }
                .csv_row(),
            );
            rows.push(
                VerifierReport {
                    verifier: "colouring_farpair".into(),
                    statistic: format!("d_{d}_rho_{rho}"),
                    n: table.iter().sum::<u64>() as usize,
                    lhs: table[0] as f64,
                    rhs: table.iter().sum::<u64>() as f64 / (d * d) as f64,
                    stderr: 0.0,
                    pvalue: jgof.p,
                    seed,
                }
                .csv_row(),
            );
        }
        "encoding" => {
            let delta = cfg.get(a.delta, "delta", 0.5)?;
            let mut exact = 0usize;
            let mut total = 0usize;
            for r in 0..replicas.min(1000) {
                let mut rng = stream_rng(seed, roles::SAMPLE, r);
                let base = delta_thin(&sample_poisson(&space, t / 2.0, &mut rng)?, delta)?;
                if base.is_empty() {
                    continue;
                }
                total += 1;
                let points: Vec<Point> = base
                    .points
                    .iter()
                    .map(|p| p.with_mark(dequantize_mark(rng.random::<u16>())))
                    .collect();
                let marked = Configuration::new(space.clone(), points, true)?;
                let decoded = decode_marks(&encode_marks(&marked, delta)?, delta)?;
                let same = decoded.len() == marked.len()
                    && decoded
                        .points
                        .iter()
                        .zip(&marked.points)
                        .all(|(x, y)| x == y);
                if same {
                    exact += 1;
                }
            }
            ok = total > 0 && exact == total;
            rows.push(
                VerifierReport {
                    verifier: "encoding".into(),
                    statistic: format!("delta_{delta}"),
                    n: total,
                    lhs: exact as f64,
                    rhs: total as f64,
                    stderr: 0.0,
                    pvalue: if ok { 1.0 } else { 0.0 },
                    seed,
                }
                .csv_row(),
            );
        }
        other => {
            return Err(Error::precondition(format!("unknown verifier `{other}`")));
        }
    }
    write_out(&a.out, &(rows.join("\n") + "\n"))?;
    Ok(!a.assert || ok)
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    process: Option<String>,
    /// graphing family: dist:R | cayley:spacing | nn:k
    #[arg(long)]
    graphing: Option<String>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// run the vertical cost-1 experiment with this many levels
    #[arg(long)]
    vertical_levels: Option<u32>,
    /// comma-separated percolation parameters for the vertical experiment
    #[arg(long)]
    eps: Option<String>,
    /// exit 3 unless the connected fraction reaches this value
    #[arg(long)]
    min_connected: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_cost(a: CostArgs) -> Result<bool> {
    let cfg = FileConfig::load(&a.config)?;
    let space = Space::parse(&cfg.get(a.space.clone(), "space", "torus2:16".into())?)?;
    let spec = ProcessSpec::parse(&cfg.get(a.process.clone(), "process", "lattice:1".into())?)?;
    let rule = GraphingRule::parse(&cfg.get(a.graphing.clone(), "graphing", "cayley:1".into())?)?;
    let replicas = cfg.get(a.replicas, "replicas", 100)?;
    let seed = cfg.get(a.seed, "seed", default_seed())?;
    let mut rows = vec![ppsim::cost::CostEstimate::csv_header().to_string()];
    let mut min_frac = 1.0f64;
    match cfg.get(a.vertical_levels, "vertical_levels", 0)? {
        0 => {
            let est = graphing_cost(&spec, &space, &rule, None, replicas, seed)?;
            min_frac = est.connected_frac;
            rows.push(est.csv_row());
        }
        levels => {
            let eps_str = cfg.get(a.eps.clone(), "eps", "0.2".into())?;
            let eps: Vec<f64> = eps_str
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Descriptor(eps_str.clone(), "bad eps list".into()))
                })
                .collect::<Result<_>>()?;
            let reports =
                vertical_cost_experiment(&spec, &space, &rule, &eps, levels, replicas, seed)?;
            for rep in &reports {
                min_frac = min_frac.min(rep.estimate.connected_frac);
                rows.push(rep.estimate.csv_row());
                rows.push(format!(
                    "# eps={} predicted_cost={} base_mean_degree={} base_connected_frac={} healed_given_base={}",
                    rep.estimate.eps.unwrap_or(f64::NAN),
                    fmt(rep.predicted_cost),
                    fmt(rep.base_mean_degree),
                    fmt(rep.base_connected_frac),
                    fmt(rep.connected_frac_given_base)
                ));
            }
        }
    }
    write_out(&a.out, &(rows.join("\n") + "\n"))?;
    Ok(a.min_connected.is_none_or(|m| min_frac >= m))
}

#[derive(Args)]
struct GxzArgs {
    /// cylinder descriptor (`cyl:L:levels` or `cylR:L:H`); overrides --side/--levels
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    levels: Option<u32>,
    /// comma-separated straightening steps
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    eps_succ: Option<f64>,
    #[arg(long)]
    wobble_radius: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// exit 3 unless every row meets the successor bound and strip GOF
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_gxz(a: GxzArgs) -> Result<bool> {
    let cfg = FileConfig::load(&a.config)?;
    let t = cfg.get(a.t, "t", 1.0)?;
    let side = cfg.get(a.side, "side", 20.0)?;
    let levels = cfg.get(a.levels, "levels", 40)?;
    let space = match cfg.get(a.space.clone(), "space", String::new())? {
        d if d.is_empty() => Space::cyl_z(side, levels)?,
        d => Space::parse(&d)?,
    };
    let n_str = cfg.get(a.n.clone(), "n", "2,5,10,20".into())?;
    let n_list: Vec<u32> = n_str
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Descriptor(n_str.clone(), "bad n list".into()))
        })
        .collect::<Result<_>>()?;
    let eps_succ = cfg.get(a.eps_succ, "eps_succ", 0.05)?;
    let wobble_radius = cfg.get(a.wobble_radius, "wobble_radius", 2.0)?;
    let replicas = cfg.get(a.replicas, "replicas", 2000)?;
    let seed = cfg.get(a.seed, "seed", default_seed())?;
    let rows =
        gxz_convergence_experiment(t, &n_list, &space, eps_succ, wobble_radius, replicas, seed)?;
    let mut out = vec![GxzRow::csv_header().to_string()];
    let mut ok = true;
    for row in &rows {
        ok &= row.successor_prob >= row.successor_bound - 0.02 && row.strip_gof_p > 0.01;
        out.push(row.csv_row());
    }
    write_out(&a.out, &(out.join("\n") + "\n"))?;
    Ok(!a.assert || ok)
}

#[derive(Args)]
struct WobbleArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_wobble(args: WobbleArgs) -> Result<()> {
    let cfg = FileConfig::load(&args.config)?;
    let radius = cfg.get(args.radius, "radius", 2.0)?;
    let a = ppsim::io::read_ppc(&fs::read_to_string(&args.a)?)?;
    let b = ppsim::io::read_ppc(&fs::read_to_string(&args.b)?)?;
    let w = wobble_distance(&a, &b, radius)?;
    let content = format!(
        "feasible,eps,R,n_a,n_b\n{},{},{},{},{}\n",
        w.feasible,
        w.eps.map(fmt).unwrap_or_default(),
        fmt(radius),
        w.count_a,
        w.count_b
    );
    write_out(&args.out, &content)
}

#[derive(Args)]
struct FddArgs {
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    process_a: Option<String>,
    #[arg(long)]
    process_b: Option<String>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed_a: Option<u64>,
    #[arg(long)]
    seed_b: Option<u64>,
    /// windows as `x0,y0,x1,y1[@level]`, repeatable; default is the unit box
    #[arg(long)]
    window: Vec<String>,
    /// truncate counts at this value (default: pooled 0.999 quantile)
    #[arg(long)]
    trunc: Option<u32>,
    /// with --assert: expected verdict, `same` or `different`
    #[arg(long)]
    expect: Option<String>,
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_window(desc: &str) -> Result<FddWindow> {
    let err = |m: &str| Error::Descriptor(desc.into(), m.into());
    let (coords, level) = match desc.split_once('@') {
        Some((c, l)) => (c, Some(l.parse::<i64>().map_err(|_| err("bad level"))?)),
        None => (desc, None),
    };
    let vals: Vec<f64> = coords
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| err("bad coordinate")))
        .collect::<Result<_>>()?;
    match vals.as_slice() {
        [x0, y0, x1, y1] => Ok(FddWindow {
            region: Region::Box {
                lo: [*x0, *y0, 0.0],
                hi: [*x1, *y1, 0.0],
                level,
            },
            mark_range: None,
        }),
        [x0, x1] => Ok(FddWindow {
            region: Region::Box {
                lo: [*x0, 0.0, 0.0],
                hi: [*x1, 0.0, 0.0],
                level,
            },
            mark_range: None,
        }),
        _ => Err(err("expected x0,x1 or x0,y0,x1,y1")),
    }
}

fn run_fdd(a: FddArgs) -> Result<bool> {
    let cfg = FileConfig::load(&a.config)?;
    let space = Space::parse(&cfg.get(a.space.clone(), "space", "torus2:10".into())?)?;
    let spec_a =
        ProcessSpec::parse(&cfg.get(a.process_a.clone(), "process_a", "poisson:1".into())?)?;
    let spec_b =
        ProcessSpec::parse(&cfg.get(a.process_b.clone(), "process_b", "poisson:1".into())?)?;
    let replicas = cfg.get(a.replicas, "replicas", 5000)?;
    let seed_a = cfg.get(a.seed_a, "seed_a", default_seed())?;
    let seed_b = cfg.get(a.seed_b, "seed_b", default_seed().wrapping_add(1))?;
    let windows = if a.window.is_empty() {
        vec![FddWindow {
            region: Region::unit_box(space.dim().min(2)),
            mark_range: None,
        }]
    } else {
        a.window
            .iter()
            .map(|w| parse_window(w))
            .collect::<Result<_>>()?
    };
    let descriptors: Vec<String> = a
        .window
        .iter()
        .cloned()
        .chain(a.window.is_empty().then(|| "unit_box".to_string()))
        .collect();
    let ws = FddWindowSet::new(&space, windows)?;
    let arm = |spec: &ProcessSpec, seed: u64| -> Result<Vec<Configuration>> {
        (0..replicas)
            .map(|r| spec.sample_replica(&space, seed, r))
            .collect()
    };
    let rep = fdd_compare(&arm(&spec_a, seed_a)?, &arm(&spec_b, seed_b)?, &ws, a.trunc)?;
    let content = format!(
        "tv,chi2,dof,pvalue,truncation,n_a,n_b,windows\n{},{},{},{},{},{},{},{}\n",
        fmt(rep.tv),
        fmt(rep.chi2),
        rep.dof,
        fmt(rep.p),
        rep.truncation,
        rep.n_a,
        rep.n_b,
        descriptors.join(";")
    );
    write_out(&a.out, &content)?;
    let ok = match a.expect.as_deref() {
        Some("same") => rep.p > 0.01,
        Some("different") => rep.p < 0.01,
        Some(other) => {
            return Err(Error::precondition(format!(
                "--expect must be `same` or `different`, got `{other}`"
            )))
        }
        None => true,
    };
    Ok(!a.assert || ok)
}

#[derive(Args)]
struct RenderArgs {
    input: PathBuf,
    /// optional factor graph: dist:R | cayley:spacing | nn:k
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_render(a: RenderArgs) -> Result<()> {
    let config = ppsim::io::read_ppc(&fs::read_to_string(&a.input)?)?;
    let graph = match &a.graph {
        Some(desc) => Some(GraphingRule::parse(desc)?.build(&config)?),
        None => None,
    };
    write_out(&a.out, &render::render_svg(&config, graph.as_ref()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Sample(a) => run_sample(a).map(|_| true),
        Cmd::Verify(a) => run_verify(a),
        Cmd::Cost(a) => run_cost(a),
        Cmd::Gxz(a) => run_gxz(a),
        Cmd::Wobble(a) => run_wobble(a).map(|_| true),
        Cmd::Fdd(a) => run_fdd(a),
        Cmd::Render(a) => run_render(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("statistical acceptance failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
