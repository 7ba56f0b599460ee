//! Cost estimators: the lattice cost formula, graphing-cost upper bounds
//! from Palm mean degrees, the vertical cost-1 construction, the
//! straightening convergence experiment, and the factor-monotonicity spot
//! check.
//!
//! Cost is always reported as an upper bound attached to a named graphing
//! family together with its connectivity rate; the infimum over all
//! graphings is not computable.

use crate::error::{Error, Result};
use crate::graph::{
    connected_components, lift_graph, percolate_edges, vertical_edges, FactorGraph, GraphingRule,
};
use crate::parallel::run_replicas;
use crate::process::{
    iid_mark, straighten_phi_n_detailed, vertical_coupling, Configuration, ProcessSpec,
};
use crate::report::fmt;
use crate::rng::{roles, stream_rng};
use crate::space::{Region, Space, SpaceKind};
use crate::stats::{poisson_gof, summarize};
use crate::weakconv::wobble_distance;

/// Cost upper bound for one graphing family:
/// `cost = 1 + intensity * (mean_degree / 2 - 1)`.
#[derive(Clone, Debug)]
pub struct CostEstimate {
    pub graphing: String,
    pub eps: Option<f64>,
    pub n: Option<u32>,
    pub levels: Option<u32>,
    pub replicas: u64,
    pub mean_degree: f64,
    pub stderr: f64,
    pub intensity: f64,
    pub cost: f64,
    pub cost_stderr: f64,
    pub connected_frac: f64,
    pub seed: u64,
}

impl CostEstimate {
    pub fn csv_header() -> &'static str {
        "graphing,eps,n,levels,replicas,mean_degree,stderr,intensity,cost,cost_stderr,connected_frac,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.graphing,
            self.eps.map(fmt).unwrap_or_default(),
            self.n.map(|v| v.to_string()).unwrap_or_default(),
            self.levels.map(|v| v.to_string()).unwrap_or_default(),
            self.replicas,
            fmt(self.mean_degree),
            fmt(self.stderr),
            fmt(self.intensity),
            fmt(self.cost),
            fmt(self.cost_stderr),
            fmt(self.connected_frac),
            self.seed
        )
    }
}

/// Cost of the lattice shift of a rank-`d_rank` lattice with the given
/// covolume: `1 + (d_rank - 1) / covol`.
pub fn lattice_cost(d_rank: u32, covol: f64) -> Result<f64> {
    if d_rank == 0 {
        return Err(Error::precondition("lattice rank must be at least 1"));
    }
    if !(covol > 0.0) {
        return Err(Error::precondition(format!("nonpositive covolume {covol}")));
    }
    Ok(1.0 + (d_rank as f64 - 1.0) / covol)
}

/// Mean Palm degree per replica is the realization average `degsum / N`
/// (exhaustive rerooting over the window). This keeps the degree estimate
/// exact on degree-regular graphs - vertical edges report cost exactly 1 on
/// a unit-intensity process - at the price of an O(1/E N) ratio bias that is
/// far inside every shipped tolerance.
fn cost_from_degree_rows(
    graphing: String,
    rows: &[(f64, f64, bool)],
    intensity: Option<f64>,
    space_volume: f64,
    replicas: u64,
    seed: u64,
) -> Result<CostEstimate> {
    let t = match intensity {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(Error::precondition("zero-intensity process")),
        None => {
            let mean: f64 = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
            if mean == 0.0 {
                return Err(Error::precondition("zero-intensity process"));
            }
            mean / space_volume
        }
    };
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.1 > 0.0)
        .map(|r| r.0 / r.1)
        .collect();
    if vals.is_empty() {
        return Err(Error::precondition("every replica was empty"));
    }
    let s = summarize(&vals);
    let connected = rows.iter().filter(|r| r.2).count() as f64 / rows.len() as f64;
    Ok(CostEstimate {
        graphing,
        eps: None,
        n: None,
        levels: None,
        replicas,
        mean_degree: s.mean,
        stderr: s.stderr,
        intensity: t,
        cost: 1.0 + t * (0.5 * s.mean - 1.0),
        cost_stderr: t * 0.5 * s.stderr,
        connected_frac: connected,
        seed,
    })
}

/// Estimate the cost upper bound of a graphing rule over seeded replicas,
/// flagging the connectivity rate.
pub fn graphing_cost(
    spec: &ProcessSpec,
    space: &Space,
    rule: &GraphingRule,
    intensity: Option<f64>,
    replicas: u64,
    seed: u64,
) -> Result<CostEstimate> {
    if replicas == 0 {
        return Err(Error::precondition("need at least one replica"));
    }
    let rows: Vec<(f64, f64, bool)> = run_replicas(replicas, |r| {
        let config = spec
            .sample_replica(space, seed, r)
            .expect("sampling failed");
        if config.is_empty() {
            return (0.0, 0.0, false);
        }
        let graph = rule.build(&config).expect("graph build failed");
        let degsum: u64 = graph.degrees().iter().map(|&d| d as u64).sum();
        (
            degsum as f64,
            config.len() as f64,
            connected_components(&graph).connected,
        )
    });
    cost_from_degree_rows(
        rule.descriptor(),
        &rows,
        intensity.or_else(|| spec.known_intensity()),
        space.volume(),
        replicas,
        seed,
    )
}

/// One row of the vertical cost-1 experiment.
#[derive(Clone, Debug)]
pub struct VerticalCostReport {
    pub estimate: CostEstimate,
    pub base_mean_degree: f64,
    pub base_connected_frac: f64,
    /// fraction of runs with connected cylinder graph among runs whose base
    /// graphing was connected (the healing rate of the level percolation)
    pub connected_frac_given_base: f64,
    /// `1 + intensity * eps * base_mean_degree / 2`
    pub predicted_cost: f64,
}

/// Vertical cost-1 construction: IID-mark the vertical coupling of the base
/// process, lift the base graphing to every level, percolate the lifted
/// edges, and join the vertical edges. All `eps` values share base draws and
/// marks, so cost is monotone across them by percolation monotonicity.
pub fn vertical_cost_experiment(
    base_spec: &ProcessSpec,
    base_space: &Space,
    base_rule: &GraphingRule,
    eps_list: &[f64],
    levels: u32,
    replicas: u64,
    seed: u64,
) -> Result<Vec<VerticalCostReport>> {
    if !matches!(base_space.kind, SpaceKind::Torus { dim: 1, .. }) {
        return Err(Error::precondition(
            "the vertical experiment needs a torus_1 base",
        ));
    }
    for &eps in eps_list {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::precondition(format!("eps {eps} outside [0,1]")));
        }
    }
    if replicas == 0 || eps_list.is_empty() {
        return Err(Error::precondition("need replicas and at least one eps"));
    }
    struct Row {
        base_degsum: f64,
        base_n: f64,
        base_connected: bool,
        per_eps: Vec<(f64, bool)>, // cylinder (degsum, connected)
        cyl_n: f64,
    }
    let rows: Vec<Row> = run_replicas(replicas, |r| {
        let base = base_spec
            .sample_replica(base_space, seed, r)
            .expect("sampling failed");
        if base.is_empty() {
            return Row {
                base_degsum: 0.0,
                base_n: 0.0,
                base_connected: false,
                per_eps: vec![(0.0, false); eps_list.len()],
                cyl_n: 0.0,
            };
        }
        let base_graph = base_rule.build(&base).expect("base graph build failed");
        let base_connected = connected_components(&base_graph).connected;
        let base_degsum: u64 = base_graph.degrees().iter().map(|&d| d as u64).sum();
        let cyl = vertical_coupling(&base, levels).expect("vertical coupling failed");
        let mut mark_rng = stream_rng(seed, roles::MARK, r);
        let marked = iid_mark(&cyl, &mut mark_rng).expect("marking failed");
        let lifted = lift_graph(&base_graph, &cyl).expect("lift failed");
        let vert = vertical_edges(&cyl).expect("vertical edges failed");
        let per_eps = eps_list
            .iter()
            .map(|&eps| {
                let perc = percolate_edges(&lifted, &marked, eps).expect("percolation failed");
                let graph = vert.union(&perc).expect("union failed");
                let degsum: u64 = graph.degrees().iter().map(|&d| d as u64).sum();
                (degsum as f64, connected_components(&graph).connected)
            })
            .collect();
        Row {
            base_degsum: base_degsum as f64,
            base_n: base.len() as f64,
            base_connected,
            per_eps,
            cyl_n: cyl.len() as f64,
        }
    });
    let base_connected_frac =
        rows.iter().filter(|r| r.base_connected).count() as f64 / replicas as f64;
    if base_connected_frac < 0.5 {
        return Err(Error::precondition(format!(
            "base graphing {} is disconnected too often (connected fraction {base_connected_frac:.3} < 0.5)",
            base_rule.descriptor()
        )));
    }
    let base_vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.base_n > 0.0)
        .map(|r| r.base_degsum / r.base_n)
        .collect();
    let base_mean_degree = summarize(&base_vals).mean;
    let cyl_space = Space::cyl_z(
        match base_space.kind {
            SpaceKind::Torus { side, .. } => side,
            _ => unreachable!(),
        },
        levels,
    )?;
    let intensity = base_spec.known_intensity().unwrap_or_else(|| {
        rows.iter().map(|r| r.cyl_n).sum::<f64>() / (replicas as f64 * cyl_space.volume())
    });
    let mut out = Vec::with_capacity(eps_list.len());
    for (k, &eps) in eps_list.iter().enumerate() {
        let deg_rows: Vec<(f64, f64, bool)> = rows
            .iter()
            .map(|r| (r.per_eps[k].0, r.cyl_n, r.per_eps[k].1))
            .collect();
        let mut est = cost_from_degree_rows(
            format!("vertical+{}", base_rule.descriptor()),
            &deg_rows,
            Some(intensity),
            cyl_space.volume(),
            replicas,
            seed,
        )?;
        est.eps = Some(eps);
        est.levels = Some(levels);
        let healed = rows
            .iter()
            .filter(|r| r.base_connected && r.per_eps[k].1)
            .count() as f64;
        let base_ok = rows.iter().filter(|r| r.base_connected).count() as f64;
        out.push(VerticalCostReport {
            predicted_cost: 1.0 + intensity * eps * base_mean_degree / 2.0,
            base_mean_degree,
            base_connected_frac,
            connected_frac_given_base: if base_ok > 0.0 { healed / base_ok } else { 0.0 },
            estimate: est,
        });
    }
    Ok(out)
}

/// One row of the straightening convergence table.
#[derive(Clone, Debug)]
pub struct GxzRow {
    pub n: u32,
    /// Palm probability that the root has a point in
    /// `B_base(0, eps_succ) x {level + 1}`
    pub successor_prob: f64,
    /// the construction's lower bound (n-1)/n
    pub successor_bound: f64,
    /// chi-square p-value of single-strip counts against Poisson(t vol)
    pub strip_gof_p: f64,
    /// fraction of replicas whose window restriction matches some vertical
    /// configuration (count-feasible wobble)
    pub wobble_feasible_frac: f64,
    /// mean bottleneck eps over the feasible replicas
    pub wobble_mean_eps: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl GxzRow {
    pub fn csv_header() -> &'static str {
        "n,successor_prob,successor_bound,strip_gof_p,wobble_feasible_frac,wobble_mean_eps,replicas,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            fmt(self.successor_prob),
            fmt(self.successor_bound),
            fmt(self.strip_gof_p),
            fmt(self.wobble_feasible_frac),
            fmt(self.wobble_mean_eps),
            self.replicas,
            self.seed
        )
    }
}

/// Straightening convergence experiment on a cylinder window (`cyl:L:levels`
/// or `cylR:L:H` with integer H): for each n, the epsilon-successor
/// probability against its (n-1)/n bound, a strip Poisson GOF, and the
/// wobble distance from straightened samples to the vertical extension of
/// their own base slice.
pub fn gxz_convergence_experiment(
    t: f64,
    n_list: &[u32],
    space: &Space,
    eps_succ: f64,
    wobble_radius: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<GxzRow>> {
    let (side, level_count, discrete) = match space.kind {
        SpaceKind::CylZ { side, levels } => (side, levels as f64, true),
        SpaceKind::CylR { side, height } => {
            let h = height.round();
            if (height - h).abs() > 1e-9 {
                return Err(Error::precondition(
                    "the straightening experiment on cylR needs an integer height",
                ));
            }
            (side, h, false)
        }
        _ => {
            return Err(Error::precondition(
                "the straightening experiment needs a cylinder",
            ))
        }
    };
    for &n in n_list {
        if n == 0 || n as f64 > level_count / 2.0 {
            return Err(Error::precondition(format!(
                "straightening step n={n} exceeds half the level window {level_count}"
            )));
        }
    }
    let strip = if discrete {
        Region::Box {
            lo: [0.0; 3],
            hi: [4.0, 0.0, 0.0],
            level: Some(3),
        }
    } else {
        Region::Box {
            lo: [0.0, 3.0, 0.0],
            hi: [4.0, 4.0, 0.0],
            level: None,
        }
    };
    let strip_vol = 4.0;
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rows: Vec<(u64, u64, u64, Option<f64>)> = run_replicas(replicas, |r| {
            let mut rng = stream_rng(seed, roles::SAMPLE, r);
            let c = crate::process::sample_poisson(space, t, &mut rng).expect("sampling failed");
            let m = iid_mark(&c, &mut rng).expect("marking failed");
            let s = straighten_phi_n_detailed(&m, n).expect("straightening failed");
            let cfg = &s.config;
            // successor counting over every root (exhaustive Palm): a point
            // one level up within the eps_succ base ball
            let mut with_succ = 0u64;
            for p in &cfg.points {
                let hit = cfg.points.iter().any(|q| {
                    let level_up = if discrete {
                        q.level == Some((p.level.unwrap() + 1).rem_euclid(level_count as i64))
                    } else {
                        let dh = (q.coords[1] - p.coords[1]).rem_euclid(level_count);
                        (dh - 1.0).abs() <= 1e-9
                    };
                    level_up && wrap_dist_1d(q.coords[0] - p.coords[0], side) <= eps_succ
                });
                if hit {
                    with_succ += 1;
                }
            }
            let strip_count = cfg
                .points
                .iter()
                .filter(|p| strip.contains(space, p))
                .count() as u64;
            // wobble to the vertical extension of the base slice
            let wob = match vertical_from_slice(space, cfg) {
                Ok(v) => wobble_distance(cfg, &v, wobble_radius)
                    .ok()
                    .and_then(|w| w.eps),
                Err(_) => None,
            };
            (with_succ, cfg.len() as u64, strip_count, wob)
        });
        let total_pts: u64 = rows.iter().map(|r| r.1).sum();
        let total_succ: u64 = rows.iter().map(|r| r.0).sum();
        let strip_counts: Vec<u64> = rows.iter().map(|r| r.2).collect();
        let feasible: Vec<f64> = rows.iter().filter_map(|r| r.3).collect();
        out.push(GxzRow {
            n,
            successor_prob: if total_pts > 0 {
                total_succ as f64 / total_pts as f64
            } else {
                0.0
            },
            successor_bound: (n as f64 - 1.0) / n as f64,
            strip_gof_p: poisson_gof(&strip_counts, t * strip_vol).p,
            wobble_feasible_frac: feasible.len() as f64 / replicas as f64,
            wobble_mean_eps: if feasible.is_empty() {
                f64::NAN
            } else {
                feasible.iter().sum::<f64>() / feasible.len() as f64
            },
            replicas,
            seed,
        });
    }
    Ok(out)
}

fn wrap_dist_1d(d: f64, side: f64) -> f64 {
    let d = d.rem_euclid(side);
    d.min(side - d)
}

/// Vertical extension of a configuration's base slice: level 0 on the
/// discrete cylinder, heights in [0, 1) on the continuous one.
fn vertical_from_slice(space: &Space, cfg: &Configuration) -> Result<Configuration> {
    let mut points = Vec::new();
    match space.kind {
        SpaceKind::CylZ { levels, .. } => {
            for p in cfg.points.iter().filter(|p| p.level == Some(0)) {
                for l in 0..levels {
                    points.push(crate::space::Point::d1(p.coords[0]).with_level(l as i64));
                }
            }
        }
        SpaceKind::CylR { height, .. } => {
            let k = height.round() as u64;
            for p in cfg.points.iter().filter(|p| p.coords[1] < 1.0) {
                for j in 0..k {
                    points.push(crate::space::Point::d2(p.coords[0], p.coords[1] + j as f64));
                }
            }
        }
        _ => return Err(Error::precondition("cylinder space required")),
    }
    Configuration::new(space.clone(), points, false)
}

#[derive(Clone, Debug)]
pub struct SpotcheckReport {
    pub source: CostEstimate,
    pub factor: CostEstimate,
    /// true when the source bound exceeds the factor bound by more than
    /// three combined standard errors; the bounds are not infima, so this
    /// is a warning, never a failure
    pub warning: bool,
}

/// Cost-monotonicity spot check: graphing-cost upper bounds for a source
/// process and a factor of it, on shared seeds.
pub fn monotonicity_spotcheck(
    source: &ProcessSpec,
    factor: &ProcessSpec,
    space: &Space,
    source_rule: &GraphingRule,
    factor_rule: &GraphingRule,
    replicas: u64,
    seed: u64,
) -> Result<SpotcheckReport> {
    let a = graphing_cost(source, space, source_rule, None, replicas, seed)?;
    let b = graphing_cost(factor, space, factor_rule, None, replicas, seed)?;
    let se = (a.cost_stderr * a.cost_stderr + b.cost_stderr * b.cost_stderr).sqrt();
    let warning = a.cost > b.cost + 3.0 * se;
    Ok(SpotcheckReport {
        source: a,
        factor: b,
        warning,
    })
}

/// Distance graphing of the vertical experiment as a spec-level helper: the
/// cylinder graph `V union percolated lift` for one replica, exposed for
/// rendering and tests.
pub fn vertical_graph_once(
    base_spec: &ProcessSpec,
    base_space: &Space,
    base_rule: &GraphingRule,
    eps: f64,
    levels: u32,
    seed: u64,
    replica: u64,
) -> Result<(Configuration, FactorGraph)> {
    let base = base_spec.sample_replica(base_space, seed, replica)?;
    if base.is_empty() {
        return Err(Error::precondition("empty base draw"));
    }
    let base_graph = base_rule.build(&base)?;
    let cyl = vertical_coupling(&base, levels)?;
    let mut mark_rng = stream_rng(seed, roles::MARK, replica);
    let marked = iid_mark(&cyl, &mut mark_rng)?;
    let lifted = lift_graph(&base_graph, &cyl)?;
    let vert = vertical_edges(&cyl)?;
    let perc = percolate_edges(&lifted, &marked, eps)?;
    let graph = vert.union(&perc)?;
    Ok((cyl, graph))
}

/// Distance-graph cost at matched parameters, used by tests and the CLI to
/// reproduce the continuum percolation example.
pub fn distance_cost_example(
    spec: &ProcessSpec,
    space: &Space,
    r: f64,
    replicas: u64,
    seed: u64,
) -> Result<CostEstimate> {
    graphing_cost(
        spec,
        space,
        &GraphingRule::Distance { r },
        None,
        replicas,
        seed,
    )
}
