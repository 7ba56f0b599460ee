//! Palm-measure estimation by window rerooting, and statistical verifiers
//! for the exact identities: Mecke-Slivnyak, the refined Campbell (CLMM)
//! formula, the Mass Transport Principle, and the Palm calculus of constant
//! thickenings.
//!
//! The Palm expectation of h is estimated from the defining count formula
//! `E0[h] = E[ sum_{x in U} h(x^-1 Pi) ] / (intensity * vol(U))`, rerooting
//! exhaustively over all window points. On tori U is the whole window; on
//! the free-boundary disk roots come from the margin-eroded subwindow
//! (minus sampling).

use crate::error::{Error, Result};
use crate::grid::NeighborGrid;
use crate::parallel::run_replicas;
use crate::process::{
    constant_thicken, sample_poisson, voronoi_assign, Configuration, ProcessSpec,
};
use crate::report::{EstimateReport, VerifierReport};
use crate::rng::{roles, stream_rng};
use crate::space::{hyperbolic_area, Displacement, Point, Region, Space, SpaceKind};
use crate::stats::{ks_two_sample, summarize};
use rand::Rng;
use std::sync::Arc;

/// A configuration recentred so a distinguished point sits at the origin.
#[derive(Clone, Debug)]
pub struct RootedSample {
    pub space: Space,
    pub points: Vec<Point>,
    pub root_index: usize,
    /// original coordinates of the root in its source configuration
    pub root_origin: Point,
}

impl RootedSample {
    pub fn root(&self) -> &Point {
        &self.points[self.root_index]
    }

    /// Distance from the root to its nearest other point, `None` when the
    /// root is alone.
    pub fn nearest_other_distance(&self) -> Option<f64> {
        let origin = self.space.origin();
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.root_index)
            .map(|(_, p)| self.space.distance(&origin, p))
            .min_by(f64::total_cmp)
    }

    /// Number of non-root points within distance `r` of the root.
    pub fn count_within(&self, r: f64) -> usize {
        let origin = self.space.origin();
        self.points
            .iter()
            .enumerate()
            .filter(|(i, p)| *i != self.root_index && self.space.distance(&origin, p) <= r)
            .count()
    }
}

/// Translate a configuration so the point at `root_idx` lands on the origin.
/// On the disk this is Mobius transport; points leaving the window are
/// dropped there (range-bounded functionals never see them).
pub fn reroot_at(config: &Configuration, root_idx: usize) -> Result<RootedSample> {
    let space = &config.space;
    let n = config.len();
    if root_idx >= n {
        return Err(Error::precondition(format!(
            "root index {root_idx} out of range {n}"
        )));
    }
    let root = config.points[root_idx];
    let mut points = Vec::with_capacity(n);
    let mut new_root_index = root_idx;
    match &space.kind {
        SpaceKind::Hyperbolic { radius, .. } => {
            let mut kept = 0usize;
            for (i, p) in config.points.iter().enumerate() {
                let (x, y) = crate::space::mobius_recenter(
                    root.coords[0],
                    root.coords[1],
                    p.coords[0],
                    p.coords[1],
                );
                let q = Point {
                    coords: [x, y, 0.0],
                    level: None,
                    mark: p.mark,
                };
                if crate::space::hyperbolic_distance(0.0, 0.0, x, y) <= *radius + 1e-12 {
                    if i == root_idx {
                        new_root_index = kept;
                    }
                    points.push(q);
                    kept += 1;
                }
            }
        }
        _ => {
            for p in &config.points {
                let mut q = *p;
                for (a, side) in space.sides().iter().enumerate() {
                    q.coords[a] = (p.coords[a] - root.coords[a]).rem_euclid(*side);
                }
                if space.has_levels() {
                    let levels = space.levels().unwrap() as i64;
                    q.level = Some((p.level.unwrap() - root.level.unwrap()).rem_euclid(levels));
                }
                points.push(q);
            }
        }
    }
    Ok(RootedSample {
        space: space.clone(),
        points,
        root_index: new_root_index,
        root_origin: root,
    })
}

/// One rooted sample per point of the statistics window: the whole window on
/// periodic kinds, the `range`-eroded window on the free-boundary disk.
pub fn palm_reroot(config: &Configuration, range: f64) -> Vec<RootedSample> {
    (0..config.len())
        .filter(|&i| {
            config
                .space
                .root_in_statistics_window(&config.points[i], range)
        })
        .map(|i| reroot_at(config, i).expect("index in range"))
        .collect()
}

/// Volume of the statistics window roots are drawn from.
pub fn statistics_window_volume(space: &Space, range: f64) -> f64 {
    match space.kind {
        SpaceKind::Hyperbolic { radius, margin } => hyperbolic_area(radius - margin.max(range)),
        _ => space.volume(),
    }
}

/// A borrowed view of one root of a configuration. Statistics computed
/// through the view agree exactly with those of the materialized
/// `RootedSample` (the metric is translation invariant), without cloning the
/// point list; an optional neighbour grid accelerates range queries.
pub struct RootedView<'a> {
    pub config: &'a Configuration,
    pub root_index: usize,
    grid: Option<(&'a NeighborGrid<'a>, f64)>,
}

impl<'a> RootedView<'a> {
    pub fn new(config: &'a Configuration, root_index: usize) -> RootedView<'a> {
        RootedView {
            config,
            root_index,
            grid: None,
        }
    }

    pub(crate) fn with_grid(
        config: &'a Configuration,
        root_index: usize,
        grid: &'a NeighborGrid<'a>,
        grid_radius: f64,
    ) -> RootedView<'a> {
        RootedView {
            config,
            root_index,
            grid: Some((grid, grid_radius)),
        }
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    pub fn root(&self) -> &Point {
        &self.config.points[self.root_index]
    }

    pub fn distance_to_root(&self, j: usize) -> f64 {
        self.config
            .space
            .distance(self.root(), &self.config.points[j])
    }

    /// Visit every non-root point within `r` of the root.
    pub fn for_each_within(&self, r: f64, mut f: impl FnMut(usize, f64)) {
        match self.grid {
            Some((grid, gr)) if r <= gr => {
                let mut near = Vec::new();
                grid.neighbors_within(self.root(), &mut near);
                for &j in &near {
                    let j = j as usize;
                    if j != self.root_index {
                        let d = self.distance_to_root(j);
                        if d <= r {
                            f(j, d);
                        }
                    }
                }
            }
            _ => {
                for j in 0..self.config.len() {
                    if j != self.root_index {
                        let d = self.distance_to_root(j);
                        if d <= r {
                            f(j, d);
                        }
                    }
                }
            }
        }
    }

    pub fn count_within(&self, r: f64) -> usize {
        let mut c = 0;
        self.for_each_within(r, |_, _| c += 1);
        c
    }

    /// Distance to the nearest other point within `search`, if any.
    pub fn nearest_other_within(&self, search: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        self.for_each_within(search, |_, d| {
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        });
        best
    }
}

/// A nonnegative statistic of a rooted configuration that ignores everything
/// beyond `range` of the root.
#[derive(Clone)]
pub struct Functional {
    pub name: String,
    pub range: f64,
    eval: Arc<dyn Fn(&RootedView<'_>) -> f64 + Send + Sync>,
}

impl Functional {
    pub fn new(
        name: impl Into<String>,
        range: f64,
        eval: impl Fn(&RootedView<'_>) -> f64 + Send + Sync + 'static,
    ) -> Functional {
        Functional {
            name: name.into(),
            range,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, view: &RootedView<'_>) -> f64 {
        (self.eval)(view)
    }

    pub fn constant_one() -> Functional {
        Functional::new("one", 0.0, |_| 1.0)
    }

    /// Distance to the nearest other point, truncated at `range`.
    pub fn nn_distance(range: f64) -> Functional {
        Functional::new("nn_distance", range, move |v| {
            v.nearest_other_within(range).unwrap_or(range)
        })
    }

    /// Indicator that no other point lies within `r`.
    pub fn isolated(r: f64) -> Functional {
        Functional::new(format!("isolated_{r}"), r, move |v| {
            if v.count_within(r) == 0 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Number of non-root points within `r`, optionally capped.
    pub fn count_within(r: f64, cap: Option<usize>) -> Functional {
        Functional::new(format!("count_within_{r}"), r, move |v| {
            let c = v.count_within(r);
            cap.map_or(c, |m| c.min(m)) as f64
        })
    }
}

/// Sum of `h` over all statistics-window roots of a configuration, with a
/// neighbour grid when the range allows one.
pub fn palm_sum(config: &Configuration, h: &Functional) -> f64 {
    let grid = (h.range > 0.0 && config.len() > 1)
        .then(|| NeighborGrid::new(&config.space, &config.points, h.range));
    let mut sum = 0.0;
    for i in 0..config.len() {
        if !config
            .space
            .root_in_statistics_window(&config.points[i], h.range)
        {
            continue;
        }
        let view = match &grid {
            Some(g) => RootedView::with_grid(config, i, g, h.range),
            None => RootedView::new(config, i),
        };
        sum += h.eval(&view);
    }
    sum
}

/// Snap verifier statistics to the crate's metric resolution before a KS
/// comparison. Statistics with atoms (the thickened nearest-neighbour
/// distance sits exactly on an F-offset) otherwise smear across a few ulp
/// depending on which wraparound branch computed them.
fn snap_resolution(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = (*v / crate::space::SIMPLE_EPS).round() * crate::space::SIMPLE_EPS;
    }
}

fn check_range(space: &Space, range: f64) -> Result<()> {
    match space.kind {
        SpaceKind::Hyperbolic { radius, margin } => {
            if range > radius - margin {
                return Err(Error::precondition(format!(
                    "functional range {range} exceeds the eroded window"
                )));
            }
        }
        _ => {
            if range > space.half_extent() {
                return Err(Error::precondition(format!(
                    "functional range {range} exceeds half the window side"
                )));
            }
        }
    }
    Ok(())
}

/// Estimate the Palm expectation of `h` under the spec's law.
/// `intensity`: pass the known value or `None` to estimate it jointly.
pub fn estimate_palm_expectation(
    spec: &ProcessSpec,
    space: &Space,
    h: &Functional,
    intensity: Option<f64>,
    replicas: u64,
    seed: u64,
) -> Result<EstimateReport> {
    check_range(space, h.range)?;
    if replicas == 0 {
        return Err(Error::precondition("need at least one replica"));
    }
    if spec.known_intensity() == Some(0.0) || intensity == Some(0.0) {
        return Err(Error::precondition("zero-intensity process"));
    }
    let window_volume = statistics_window_volume(space, h.range);
    let rows: Vec<(f64, f64)> = run_replicas(replicas, |r| {
        let config = spec
            .sample_replica(space, seed, r)
            .expect("sampling failed");
        (palm_sum(&config, h), config.len() as f64)
    });
    let t = match intensity.or_else(|| spec.known_intensity()) {
        Some(t) => t,
        None => {
            let mean_count: f64 = rows.iter().map(|r| r.1).sum::<f64>() / replicas as f64;
            mean_count / space.volume()
        }
    };
    if t <= 0.0 {
        return Err(Error::precondition("zero-intensity process"));
    }
    let values: Vec<f64> = rows.iter().map(|r| r.0 / (t * window_volume)).collect();
    let s = summarize(&values);
    Ok(EstimateReport {
        name: h.name.clone(),
        estimate: s.mean,
        stderr: s.stderr,
        replicas,
        seed,
        space: space.descriptor(),
        window_volume,
    })
}

/// Mecke-Slivnyak check: the rerooted Poisson against the Poisson with the
/// origin adjoined, compared by a two-sample KS test on `statistic`.
pub fn verify_mecke_slivnyak(
    t: f64,
    space: &Space,
    statistic: &Functional,
    replicas: u64,
    seed: u64,
) -> Result<VerifierReport> {
    check_range(space, statistic.range)?;
    if replicas < 100 {
        return Err(Error::precondition("need at least 100 samples per arm"));
    }
    if t == 0.0 {
        // both arms are the lone root; equality is degenerate
        return Ok(VerifierReport {
            verifier: "mecke".into(),
            statistic: statistic.name.clone(),
            n: 0,
            lhs: 0.0,
            rhs: 0.0,
            stderr: 0.0,
            pvalue: 1.0,
            seed,
        });
    }
    let arm_a: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_A, r);
        let config = sample_poisson(space, t, &mut rng).expect("sampling failed");
        let roots: Vec<usize> = (0..config.len())
            .filter(|&i| {
                config
                    .space
                    .root_in_statistics_window(&config.points[i], statistic.range)
            })
            .collect();
        if roots.is_empty() {
            return f64::NAN;
        }
        let pick = roots[rng.random_range(0..roots.len())];
        statistic.eval(&RootedView::new(&config, pick))
    });
    let arm_b: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_B, r);
        let config = sample_poisson(space, t, &mut rng).expect("sampling failed");
        let mut points = config.points;
        points.push(space.origin());
        match Configuration::new(space.clone(), points, false) {
            Ok(c) => statistic.eval(&RootedView::new(&c, c.len() - 1)),
            Err(_) => f64::NAN, // a sample point collided with the origin
        }
    });
    let mut a: Vec<f64> = arm_a.into_iter().filter(|v| v.is_finite()).collect();
    let mut b: Vec<f64> = arm_b.into_iter().filter(|v| v.is_finite()).collect();
    if a.len() < 100 || b.len() < 100 {
        return Err(Error::precondition(
            "too few non-degenerate samples (< 100 per arm)",
        ));
    }
    snap_resolution(&mut a);
    snap_resolution(&mut b);
    let ks = ks_two_sample(&a, &b);
    let sa = summarize(&a);
    let sb = summarize(&b);
    Ok(VerifierReport {
        verifier: "mecke".into(),
        statistic: statistic.name.clone(),
        n: a.len().min(b.len()),
        lhs: sa.mean,
        rhs: sb.mean,
        stderr: (sa.stderr * sa.stderr + sb.stderr * sb.stderr).sqrt(),
        pvalue: ks.p,
        seed,
    })
}

/// `f(x, omega) = 1[x in window] * h(omega)`, the product form used by the
/// CLMM verifier. The x-marginal is integrated by quadrature.
#[derive(Clone)]
pub struct WindowFunctional {
    pub window: Region,
    pub h: Functional,
}

/// Midpoint-rule volume of a region, on a grid of `cells` cells per axis
/// spanning the periodic window.
pub fn quadrature_region_volume(space: &Space, region: &Region, cells: usize) -> f64 {
    let sides = space.sides();
    let dim = space.dim();
    let level_count = space.levels().map_or(1, |l| l as i64);
    let mut cellvol: f64 = sides.iter().map(|s| s / cells as f64).product();
    if space.has_levels() {
        cellvol *= 1.0; // unit level spacing
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; dim];
    loop {
        let mut p = Point::new([0.0; 3]);
        for a in 0..dim {
            p.coords[a] = (idx[a] as f64 + 0.5) * sides[a] / cells as f64;
        }
        for l in 0..level_count {
            let mut q = p;
            if space.has_levels() {
                q.level = Some(l);
            }
            if region.contains(space, &q) {
                total += cellvol;
            }
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < cells {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == dim {
                return total;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClmmReport {
    pub name: String,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// |LHS - RHS| over the combined standard error
    pub sigma: f64,
    pub replicas: u64,
    pub seed: u64,
}

/// Verify the refined Campbell identity
/// `E[sum_x f(x, x^-1 w)] = intensity * E0[ integral f(x, w) dx ]`
/// for a product functional, with independent Monte Carlo streams on the two
/// sides and quadrature for the inner integral.
pub fn verify_clmm(
    spec: &ProcessSpec,
    space: &Space,
    f: &WindowFunctional,
    quad_cells: usize,
    replicas: u64,
    seed: u64,
) -> Result<ClmmReport> {
    check_range(space, f.h.range)?;
    let t = spec
        .known_intensity()
        .ok_or_else(|| Error::precondition("CLMM verifier needs a process with known intensity"))?;
    if t <= 0.0 {
        return Err(Error::precondition("zero-intensity process"));
    }
    let window_vol_quad = quadrature_region_volume(space, &f.window, quad_cells);
    // LHS: direct Monte Carlo of the configuration-side sum
    let lhs_vals: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_A, r);
        let config = spec.sample(space, &mut rng).expect("sampling failed");
        let grid = (f.h.range > 0.0 && config.len() > 1)
            .then(|| NeighborGrid::new(&config.space, &config.points, f.h.range));
        let mut sum = 0.0;
        for i in 0..config.len() {
            if f.window.contains(space, &config.points[i]) {
                let view = match &grid {
                    Some(g) => RootedView::with_grid(&config, i, g, f.h.range),
                    None => RootedView::new(&config, i),
                };
                sum += f.h.eval(&view);
            }
        }
        sum
    });
    // RHS: Palm average via window rerooting times the quadrature volume
    let full_vol = space.volume();
    let rhs_vals: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_B, r);
        let config = spec.sample(space, &mut rng).expect("sampling failed");
        let palm_mean = palm_sum(&config, &f.h) / (t * full_vol);
        t * window_vol_quad * palm_mean
    });
    let sl = summarize(&lhs_vals);
    let sr = summarize(&rhs_vals);
    let combined = (sl.stderr * sl.stderr + sr.stderr * sr.stderr).sqrt();
    let sigma = if combined > 0.0 {
        (sl.mean - sr.mean).abs() / combined
    } else {
        0.0
    };
    Ok(ClmmReport {
        name: f.h.name.clone(),
        lhs: sl.mean,
        lhs_stderr: sl.stderr,
        rhs: sr.mean,
        rhs_stderr: sr.stderr,
        sigma,
        replicas,
        seed,
    })
}

/// A diagonally invariant transport `T(x, y; w) >= 0`: the evaluator sees the
/// configuration plus two indices and must depend only on relative
/// displacements (checked by a translation probe).
#[derive(Clone)]
pub struct Transport {
    pub name: String,
    pub range: f64,
    eval: Arc<dyn Fn(&Configuration, usize, usize) -> f64 + Send + Sync>,
}

impl Transport {
    pub fn new(
        name: impl Into<String>,
        range: f64,
        eval: impl Fn(&Configuration, usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Transport {
        Transport {
            name: name.into(),
            range,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, config: &Configuration, from: usize, to: usize) -> f64 {
        (self.eval)(config, from, to)
    }

    /// Symmetric unit mass across every pair within distance `r`.
    pub fn ball_indicator(r: f64) -> Transport {
        Transport::new(format!("ball_{r}"), r, move |c, i, j| {
            if i != j && c.space.distance(&c.points[i], &c.points[j]) <= r {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Unit mass from each point to its tie-broken nearest neighbour.
    pub fn nearest_neighbour(range: f64) -> Transport {
        Transport::new("nearest_neighbour", range, move |c, i, j| {
            if i == j || c.len() < 2 {
                return 0.0;
            }
            let space = &c.space;
            let pi = &c.points[i];
            let mut best: Option<(usize, f64, Displacement)> = None;
            for (k, q) in c.points.iter().enumerate() {
                if k == i {
                    continue;
                }
                let d = space.distance(pi, q);
                let disp = space.displacement(pi, q);
                let better = match &best {
                    None => true,
                    Some((_, bd, bdisp)) => match d.total_cmp(bd) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => crate::process::lex_less(&disp, bdisp),
                    },
                };
                if better {
                    best = Some((k, d, disp));
                }
            }
            if best.map(|(k, _, _)| k) == Some(j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Spawn indicator of the constant thickening by `F`: `x` sends unit
    /// mass to each member of `xF` (itself included) when the whole
    /// translate `xF` is present. Progenitors are recognised metrically.
    pub fn spawn_indicator(offsets: Vec<Displacement>, range: f64) -> Transport {
        Transport::new("spawn", range, move |c, i, j| {
            let space = &c.space;
            let x = &c.points[i];
            let is_progenitor = offsets.iter().all(|f| {
                let target = space.translate(f, x).expect("translate");
                c.points.iter().any(|p| space.points_eq(p, &target))
            });
            if !is_progenitor {
                return 0.0;
            }
            let hit = offsets.iter().any(|f| {
                let target = space.translate(f, x).expect("translate");
                space.points_eq(&c.points[j], &target)
            });
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct MtpReport {
    pub transport: String,
    pub replicas: u64,
    /// mean mass sent per point, averaged over replicas
    pub mean_out: f64,
    /// mean mass received per point
    pub mean_in: f64,
    /// mean mass sent among points that send anything
    pub mean_out_senders: f64,
    /// worst per-replica |out_total - in_total| / max(out_total, 1)
    pub max_rel_gap: f64,
    pub seed: u64,
}

/// Mass transport check on a periodic window: per realization, the total
/// mass out and total mass in are accumulated along the two index orders and
/// must agree to machine precision.
pub fn verify_mtp(
    spec: &ProcessSpec,
    space: &Space,
    transport: &Transport,
    replicas: u64,
    seed: u64,
) -> Result<MtpReport> {
    check_range(space, transport.range)?;
    if matches!(space.kind, SpaceKind::Hyperbolic { .. }) {
        return Err(Error::precondition(
            "per-sample mass transport checks need a periodic window",
        ));
    }
    translation_probe(spec, space, transport, seed)?;
    let rows: Vec<(f64, f64, f64, f64, f64)> = run_replicas(replicas, |r| {
        let config = spec
            .sample_replica(space, seed, r)
            .expect("sampling failed");
        let n = config.len();
        if n == 0 {
            return (0.0, 0.0, 0.0, 0.0, 0.0);
        }
        // mass out: row-major accumulation
        let mut out = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                out[i] += transport.eval(&config, i, j);
            }
        }
        // mass in: column-major accumulation
        let mut inn = vec![0.0f64; n];
        for j in 0..n {
            for i in 0..n {
                inn[j] += transport.eval(&config, i, j);
            }
        }
        let out_total: f64 = out.iter().sum();
        let in_total: f64 = inn.iter().sum();
        let gap = (out_total - in_total).abs() / out_total.max(1.0);
        let senders = out.iter().filter(|&&v| v > 0.0).count();
        let sender_mass: f64 = out.iter().filter(|&&v| v > 0.0).sum();
        (
            out_total / n as f64,
            in_total / n as f64,
            gap,
            if senders > 0 {
                sender_mass / senders as f64
            } else {
                0.0
            },
            n as f64,
        )
    });
    let kept: Vec<&(f64, f64, f64, f64, f64)> = rows.iter().filter(|r| r.4 > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::precondition("all replicas were empty"));
    }
    let mean = |f: &dyn Fn(&(f64, f64, f64, f64, f64)) -> f64| {
        kept.iter().map(|r| f(r)).sum::<f64>() / kept.len() as f64
    };
    Ok(MtpReport {
        transport: transport.name.clone(),
        replicas,
        mean_out: mean(&|r| r.0),
        mean_in: mean(&|r| r.1),
        mean_out_senders: mean(&|r| r.3),
        max_rel_gap: kept.iter().map(|r| r.2).fold(0.0, f64::max),
        seed,
    })
}

/// Reject transports that read absolute coordinates: translate a sample
/// configuration and require identical values on all pairs.
fn translation_probe(
    spec: &ProcessSpec,
    space: &Space,
    transport: &Transport,
    seed: u64,
) -> Result<()> {
    let mut rng = stream_rng(seed, roles::JITTER, 0);
    for _ in 0..8 {
        let config = spec
            .sample(space, &mut rng)
            .map_err(|e| Error::precondition(format!("translation probe could not sample: {e}")))?;
        let n = config.len();
        if n == 0 || n > 64 {
            continue;
        }
        let mut g = Displacement::shift([
            rng.random::<f64>() * space.sides().first().copied().unwrap_or(1.0),
            rng.random::<f64>() * space.sides().get(1).copied().unwrap_or(0.0),
            0.0,
        ]);
        if space.has_levels() {
            g = g.with_level(rng.random_range(0..space.levels().unwrap() as i64));
        }
        let moved: Vec<Point> = config
            .points
            .iter()
            .map(|p| space.translate(&g, p).expect("translate"))
            .collect();
        let translated = Configuration::new(space.clone(), moved, config.marked)
            .expect("translated configuration stays valid");
        for i in 0..n {
            for j in 0..n {
                let a = transport.eval(&config, i, j);
                let b = transport.eval(&translated, i, j);
                if (a - b).abs() > 1e-9 {
                    return Err(Error::precondition(format!(
                        "transport {} inspects absolute coordinates (probe mismatch at pair {i},{j})",
                        transport.name
                    )));
                }
            }
        }
        return Ok(());
    }
    Ok(()) // no usable probe configuration; sampling is degenerate anyway
}

/// Palm calculus of constant thickenings: rerooting the thickened process
/// against thickening the Mecke-Slivnyak Palm version and rerooting at a
/// uniform element of F. Two-sample KS on `statistic`.
pub fn verify_palm_of_thickening(
    t: f64,
    space: &Space,
    offsets: &[Displacement],
    statistic: &Functional,
    replicas: u64,
    seed: u64,
) -> Result<VerifierReport> {
    check_range(space, statistic.range)?;
    if replicas < 100 {
        return Err(Error::precondition("need at least 100 samples per arm"));
    }
    if !offsets.iter().any(|f| f.is_zero()) {
        return Err(Error::precondition("the displacement set F must contain 0"));
    }
    let arm_a: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_A, r);
        let base = sample_poisson(space, t, &mut rng).expect("sampling failed");
        let thick = match constant_thicken(&base, offsets) {
            Ok(c) => c,
            Err(_) => return f64::NAN, // F-separation failed for this draw
        };
        if thick.is_empty() {
            return f64::NAN;
        }
        let pick = rng.random_range(0..thick.len());
        statistic.eval(&RootedView::new(&thick, pick))
    });
    let arm_b: Vec<f64> = run_replicas(replicas, |r| {
        let mut rng = stream_rng(seed, roles::ARM_B, r);
        let base = sample_poisson(space, t, &mut rng).expect("sampling failed");
        let mut points = base.points;
        points.push(space.origin());
        let palm = match Configuration::new(space.clone(), points, false) {
            Ok(c) => c,
            Err(_) => return f64::NAN,
        };
        let thick = match constant_thicken(&palm, offsets) {
            Ok(c) => c,
            Err(_) => return f64::NAN,
        };
        // root at X^-1 of the origin's translate, X uniform in F
        let x = &offsets[rng.random_range(0..offsets.len())];
        let target = space.translate(x, &space.origin()).expect("translate");
        let idx = thick
            .points
            .iter()
            .position(|p| space.points_eq(p, &target))
            .expect("origin translate present in thickening");
        statistic.eval(&RootedView::new(&thick, idx))
    });
    let mut a: Vec<f64> = arm_a.into_iter().filter(|v| v.is_finite()).collect();
    let mut b: Vec<f64> = arm_b.into_iter().filter(|v| v.is_finite()).collect();
    if a.len() < 100 || b.len() < 100 {
        return Err(Error::precondition(
            "too few non-degenerate samples (< 100 per arm)",
        ));
    }
    snap_resolution(&mut a);
    snap_resolution(&mut b);
    let ks = ks_two_sample(&a, &b);
    let sa = summarize(&a);
    let sb = summarize(&b);
    Ok(VerifierReport {
        verifier: "thickpalm".into(),
        statistic: statistic.name.clone(),
        n: a.len().min(b.len()),
        lhs: sa.mean,
        rhs: sb.mean,
        stderr: (sa.stderr * sa.stderr + sb.stderr * sb.stderr).sqrt(),
        pvalue: ks.p,
        seed,
    })
}

/// Helper used by verifiers that need a Voronoi-style owner: kept here so the
/// tie-break matches `voronoi_assign` exactly.
pub fn nearest_point_index(config: &Configuration, query: &Point) -> Result<usize> {
    voronoi_assign(config, query)
}
