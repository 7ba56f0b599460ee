//! Weak-convergence diagnostics: (eps, R)-wobble matching, finite
//! dimensional distribution comparison, stochastic-continuity-set scanning,
//! tightness tables, and the hash-based factor colouring.

use crate::error::{Error, Result};
use crate::grid::NeighborGrid;
use crate::process::Configuration;
use crate::rng::hash_words;
use crate::space::{Point, Region, Space, SpaceKind};
use crate::stats::{chi2_sf, chi2_two_sample, tv_distance, GofResult};
use std::collections::HashMap;

/// Result of a bottleneck matching between two window restrictions.
#[derive(Clone, Debug)]
pub struct WobbleResult {
    pub feasible: bool,
    /// bottleneck value: the largest pair distance of the optimal matching
    pub eps: Option<f64>,
    /// matched index pairs (into the restricted point lists)
    pub matching: Vec<(usize, usize)>,
    pub count_a: usize,
    pub count_b: usize,
}

fn restrict_to_ball(config: &Configuration, r: f64) -> Vec<Point> {
    let origin = config.space.origin();
    config
        .points
        .iter()
        .filter(|p| config.space.distance(&origin, p) <= r)
        .copied()
        .collect()
}

/// Bottleneck matching distance between the restrictions of two
/// configurations to the ball B(0, R). Infeasible (with the count witness)
/// when the restrictions have different sizes; otherwise the minimal eps
/// whose distance-eps bipartite graph carries a perfect matching.
pub fn wobble_distance(a: &Configuration, b: &Configuration, r: f64) -> Result<WobbleResult> {
    if a.space != b.space {
        return Err(Error::precondition(
            "wobble comparison across different spaces",
        ));
    }
    let limit = match a.space.kind {
        SpaceKind::Hyperbolic { radius, .. } => radius,
        _ => a.space.half_extent(),
    };
    if r > limit + 1e-12 {
        return Err(Error::precondition(format!(
            "wobble radius {r} exceeds the window constraint {limit}"
        )));
    }
    let pa = restrict_to_ball(a, r);
    let pb = restrict_to_ball(b, r);
    if pa.len() != pb.len() {
        return Ok(WobbleResult {
            feasible: false,
            eps: None,
            matching: vec![],
            count_a: pa.len(),
            count_b: pb.len(),
        });
    }
    let n = pa.len();
    if n == 0 {
        return Ok(WobbleResult {
            feasible: true,
            eps: Some(0.0),
            matching: vec![],
            count_a: 0,
            count_b: 0,
        });
    }
    let mut dist = vec![0.0f64; n * n];
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d = a.space.distance(&pa[i], &pb[j]);
            dist[i * n + j] = d;
            values.push(d);
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    // threshold search: smallest distance value admitting a perfect matching
    let mut lo = 0usize;
    let mut hi = values.len() - 1;
    if matching_size(&dist, n, values[hi]).0 < n {
        unreachable!("complete bipartite graph always matches");
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matching_size(&dist, n, values[mid]).0 == n {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (size, matching) = matching_size(&dist, n, values[lo]);
    debug_assert_eq!(size, n);
    Ok(WobbleResult {
        feasible: true,
        eps: Some(values[lo]),
        matching,
        count_a: n,
        count_b: n,
    })
}

/// Kuhn augmenting-path matching over edges with distance <= threshold.
fn matching_size(dist: &[f64], n: usize, threshold: f64) -> (usize, Vec<(usize, usize)>) {
    let mut match_b: Vec<Option<usize>> = vec![None; n];
    let mut size = 0;
    for i in 0..n {
        let mut seen = vec![false; n];
        if augment(dist, n, threshold, i, &mut seen, &mut match_b) {
            size += 1;
        }
    }
    let pairs = match_b
        .iter()
        .enumerate()
        .filter_map(|(j, m)| m.map(|i| (i, j)))
        .collect();
    (size, pairs)
}

fn augment(
    dist: &[f64],
    n: usize,
    threshold: f64,
    i: usize,
    seen: &mut [bool],
    match_b: &mut [Option<usize>],
) -> bool {
    for j in 0..n {
        if dist[i * n + j] <= threshold && !seen[j] {
            seen[j] = true;
            if match_b[j].is_none()
                || augment(dist, n, threshold, match_b[j].unwrap(), seen, match_b)
            {
                match_b[j] = Some(i);
                return true;
            }
        }
    }
    false
}

/// A test window for finite-dimensional distributions: a region plus an
/// optional mark interval.
#[derive(Clone, Debug)]
pub struct FddWindow {
    pub region: Region,
    pub mark_range: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct FddWindowSet {
    pub windows: Vec<FddWindow>,
}

impl FddWindowSet {
    pub fn new(space: &Space, windows: Vec<FddWindow>) -> Result<FddWindowSet> {
        for (i, a) in windows.iter().enumerate() {
            for b in windows.iter().skip(i + 1) {
                let marks_disjoint = match (a.mark_range, b.mark_range) {
                    (Some((a0, a1)), Some((b0, b1))) => a1 <= b0 || b1 <= a0,
                    _ => false,
                };
                if a.region.intersects(&b.region, space) && !marks_disjoint {
                    return Err(Error::precondition(format!(
                        "fdd windows {i} and {} overlap",
                        i + 1
                    )));
                }
            }
        }
        Ok(FddWindowSet { windows })
    }

    pub fn count_vector(&self, config: &Configuration, trunc: u32) -> Vec<u32> {
        self.windows
            .iter()
            .map(|w| {
                let c = config
                    .points
                    .iter()
                    .filter(|p| {
                        w.region.contains(&config.space, p)
                            && w.mark_range
                                .is_none_or(|(lo, hi)| p.mark.is_some_and(|m| m >= lo && m < hi))
                    })
                    .count() as u32;
                c.min(trunc)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct FddReport {
    pub tv: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub truncation: u32,
}

/// Compare the joint window-count distributions of two sample ensembles:
/// total variation distance plus a two-sample chi-square on the truncated
/// table. Truncation defaults to the pooled 0.999 quantile.
pub fn fdd_compare(
    samples_a: &[Configuration],
    samples_b: &[Configuration],
    windows: &FddWindowSet,
    truncation: Option<u32>,
) -> Result<FddReport> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::precondition("empty sample arm"));
    }
    let trunc = truncation.unwrap_or_else(|| {
        let mut all: Vec<u32> = Vec::new();
        for c in samples_a.iter().chain(samples_b) {
            all.extend(windows.count_vector(c, u32::MAX));
        }
        all.sort_unstable();
        let idx = ((all.len() as f64) * 0.999).floor() as usize;
        all[idx.min(all.len() - 1)].max(1)
    });
    let mut table: HashMap<Vec<u32>, (u64, u64)> = HashMap::new();
    for c in samples_a {
        table.entry(windows.count_vector(c, trunc)).or_default().0 += 1;
    }
    for c in samples_b {
        table.entry(windows.count_vector(c, trunc)).or_default().1 += 1;
    }
    let mut cells: Vec<(Vec<u32>, (u64, u64))> = table.into_iter().collect();
    cells.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let flat: Vec<(u64, u64)> = cells.iter().map(|c| c.1).collect();
    let gof = chi2_two_sample(&flat, 10);
    Ok(FddReport {
        tv: tv_distance(&flat),
        chi2: gof.stat,
        dof: gof.dof,
        p: gof.p,
        n_a: samples_a.len(),
        n_b: samples_b.len(),
        truncation: trunc,
    })
}

#[derive(Clone, Debug)]
pub struct ContinuityRow {
    pub radius: f64,
    pub hit_rate: f64,
    pub flagged: bool,
}

/// Scan radii for boundary-hitting spheres: a radius is flagged when the
/// empirical probability that some point lies within `tol` of the sphere of
/// that radius exceeds `threshold`. Flagged radii are unusable as stochastic
/// continuity sets.
pub fn scan_continuity(
    samples: &[Configuration],
    center: &Point,
    radii: &[f64],
    tol: f64,
    threshold: f64,
) -> Vec<ContinuityRow> {
    radii
        .iter()
        .map(|&r| {
            let hits = samples
                .iter()
                .filter(|c| {
                    c.points
                        .iter()
                        .any(|p| (c.space.distance(center, p) - r).abs() < tol)
                })
                .count();
            let rate = hits as f64 / samples.len().max(1) as f64;
            ContinuityRow {
                radius: r,
                hit_rate: rate,
                flagged: rate > threshold,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TightnessReport {
    /// per-ensemble (label, empirical (1-q) quantile of the window count)
    pub rows: Vec<(String, u64)>,
    pub sup: u64,
    /// whether the quantiles have stopped growing along the ensemble order
    pub stabilized: bool,
}

/// Uniform-tightness table: for each ensemble the empirical (1-q) quantile
/// of the count in `region`, plus their supremum.
pub fn tightness_check(
    ensembles: &[(String, Vec<Configuration>)],
    region: &Region,
    q: f64,
) -> Result<TightnessReport> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::precondition(format!(
            "quantile level {q} outside [0,1)"
        )));
    }
    let mut rows = Vec::new();
    for (label, samples) in ensembles {
        let mut counts: Vec<u64> = samples
            .iter()
            .map(|c| {
                c.points
                    .iter()
                    .filter(|p| region.contains(&c.space, p))
                    .count() as u64
            })
            .collect();
        if counts.is_empty() {
            rows.push((label.clone(), 0));
            continue;
        }
        counts.sort_unstable();
        let idx = ((counts.len() as f64) * (1.0 - q)).ceil() as usize;
        rows.push((label.clone(), counts[idx.min(counts.len() - 1)]));
    }
    let sup = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let tail_max = rows
        .iter()
        .skip(rows.len() / 2)
        .map(|r| r.1)
        .max()
        .unwrap_or(0);
    Ok(TightnessReport {
        rows,
        sup,
        stabilized: tail_max >= sup,
    })
}

/// Quantized local signature of a point: displacements of its
/// rho-neighbours snapped to the delta_cell grid, sorted.
fn local_signature(
    config: &Configuration,
    grid: &NeighborGrid,
    idx: usize,
    rho: f64,
    delta_cell: f64,
) -> Vec<[i64; 4]> {
    let space = &config.space;
    let p = &config.points[idx];
    let mut near = Vec::new();
    grid.neighbors_within(p, &mut near);
    let mut sig: Vec<[i64; 4]> = near
        .iter()
        .filter(|&&j| j as usize != idx)
        .filter(|&&j| space.distance(p, &config.points[j as usize]) <= rho)
        .map(|&j| {
            let d = space.displacement(p, &config.points[j as usize]);
            [
                (d.coords[0] / delta_cell).round() as i64,
                (d.coords[1] / delta_cell).round() as i64,
                (d.coords[2] / delta_cell).round() as i64,
                d.level,
            ]
        })
        .collect();
    sig.sort_unstable();
    sig
}

/// Factor colouring by hashing quantized local neighbourhoods: each point's
/// colour in `0..d` is a seeded hash of the displacements of its
/// rho-neighbours snapped to the `delta_cell` grid. Deterministic given the
/// seed; errors when two points of the sample share a signature (the
/// empirical freeness requirement). Colour c is stored as mark (c + 1/2)/d.
pub fn abert_weiss_colouring(
    config: &Configuration,
    d: u32,
    rho: f64,
    delta_cell: f64,
    seed: u64,
) -> Result<Configuration> {
    if d == 0 {
        return Err(Error::precondition("need at least one colour"));
    }
    if config.marked {
        return Err(Error::precondition(
            "colouring expects an unmarked configuration",
        ));
    }
    if !(delta_cell > 0.0) || !(rho > 0.0) {
        return Err(Error::precondition("rho and delta_cell must be positive"));
    }
    if rho > config.space.half_extent() {
        return Err(Error::precondition(
            "locality radius exceeds half the window side",
        ));
    }
    let grid = NeighborGrid::new(&config.space, &config.points, rho);
    let mut signatures: HashMap<Vec<[i64; 4]>, usize> = HashMap::new();
    let mut points = Vec::with_capacity(config.len());
    for i in 0..config.len() {
        let sig = local_signature(config, &grid, i, rho, delta_cell);
        if let Some(&other) = signatures.get(&sig) {
            return Err(Error::precondition(format!(
                "points {other} and {i} share a quantized {rho}-neighbourhood signature \
                 (freeness violation at resolution {delta_cell})"
            )));
        }
        signatures.insert(sig.clone(), i);
        let mut words = vec![sig.len() as u64];
        for cell in &sig {
            for v in cell {
                words.push(*v as u64);
            }
        }
        let h = hash_words(seed, words);
        let colour = (h % d as u64) as u32;
        points.push(config.points[i].with_mark((colour as f64 + 0.5) / d as f64));
    }
    let mut out = Configuration::new(config.space.clone(), points, true)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Recover the colour index from a colouring mark.
pub fn colour_of_mark(mark: f64, d: u32) -> u32 {
    ((mark * d as f64).floor() as u32).min(d - 1)
}

/// Joint colour counts over far pairs (distance > min_distance) of coloured
/// samples, as a d x d table in row-major order. One pair per sample.
pub fn far_pair_colour_table(samples: &[Configuration], d: u32, min_distance: f64) -> Vec<u64> {
    let mut table = vec![0u64; (d * d) as usize];
    for c in samples {
        let space = &c.space;
        'outer: for i in 0..c.len() {
            for j in (i + 1)..c.len() {
                if space.distance(&c.points[i], &c.points[j]) > min_distance {
                    let ci = colour_of_mark(c.points[i].mark.unwrap(), d);
                    let cj = colour_of_mark(c.points[j].mark.unwrap(), d);
                    table[(ci * d + cj) as usize] += 1;
                    break 'outer;
                }
            }
        }
    }
    table
}

/// Chi-square test of a count table against the uniform distribution.
pub fn uniform_gof(counts: &[u64]) -> GofResult {
    let n: u64 = counts.iter().sum();
    let k = counts.len();
    if n == 0 || k < 2 {
        return GofResult {
            stat: 0.0,
            dof: 1,
            p: 1.0,
        };
    }
    let e = n as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&o| (o as f64 - e) * (o as f64 - e) / e)
        .sum();
    GofResult {
        stat,
        dof: k - 1,
        p: chi2_sf(stat, (k - 1) as f64),
    }
}
