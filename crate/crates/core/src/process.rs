//! Point-process samplers and the equivariant factor maps acting on sampled
//! configurations: IID marking, independent and metric thinning, constant
//! thickening, Voronoi assignment, Poisson gluing, local mark encoding, net
//! completion, vertical coupling, and column straightening.

use crate::error::{Error, Result};
use crate::grid::NeighborGrid;
use crate::rng::{mark_rng, roles, stream_rng};
use crate::space::{Displacement, Point, Space, SpaceKind, SIMPLE_EPS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Record of the generator stream a configuration was drawn from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub replica: u64,
    pub label: String,
}

/// A finite simple point set inside a window, optionally carrying unit
/// interval marks. Immutable after construction; factor maps return new
/// configurations.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub space: Space,
    pub points: Vec<Point>,
    pub marked: bool,
    pub provenance: Provenance,
}

impl Configuration {
    pub fn new(space: Space, points: Vec<Point>, marked: bool) -> Result<Configuration> {
        for (i, p) in points.iter().enumerate() {
            if !space.contains(p) {
                return Err(Error::precondition(format!(
                    "point {i} lies outside the window of {}",
                    space.descriptor()
                )));
            }
            match (marked, p.mark) {
                (true, Some(m)) if (0.0..=1.0).contains(&m) => {}
                (true, _) => {
                    return Err(Error::precondition(format!(
                        "marked configuration requires a mark in [0,1] on point {i}"
                    )))
                }
                (false, None) => {}
                (false, Some(_)) => {
                    return Err(Error::precondition(format!(
                        "unmarked configuration carries a mark on point {i}"
                    )))
                }
            }
        }
        check_simple(&space, &points)?;
        Ok(Configuration {
            space,
            points,
            marked,
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, seed: u64, replica: u64, label: &str) -> Configuration {
        self.provenance = Provenance {
            seed,
            replica,
            label: label.to_string(),
        };
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Minimum pairwise distance, `None` for fewer than two points. Exact
    /// (all pairs); meant for tests and small configurations.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.points.len();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.space.distance(&self.points[i], &self.points[j]));
            }
        }
        Some(best)
    }
}

fn check_simple(space: &Space, points: &[Point]) -> Result<()> {
    if points.len() < 2 {
        return Ok(());
    }
    if matches!(space.kind, SpaceKind::Hyperbolic { .. }) || points.len() <= 64 {
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if space.points_eq(&points[i], &points[j]) {
                    return Err(Error::NotSimple(i, j));
                }
            }
        }
        return Ok(());
    }
    let grid = NeighborGrid::new(space, points, SIMPLE_EPS * 2.0);
    let mut near = Vec::new();
    for (i, p) in points.iter().enumerate() {
        grid.neighbors_within(p, &mut near);
        for &j in &near {
            if j as usize != i && space.points_eq(p, &points[j as usize]) {
                return Err(Error::NotSimple(i.min(j as usize), i.max(j as usize)));
            }
        }
    }
    Ok(())
}

/// Process families the engine can sample directly.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Poisson { t: f64 },
    LatticeShift { covol: f64 },
    IidPoisson { t: f64 },
    VerticalPoisson { t: f64 },
}

/// Optional factor maps applied after the base family is sampled.
#[derive(Clone, Debug, PartialEq)]
pub enum PipelineStep {
    IidMark,
    PThin { p: f64 },
    DeltaThin { delta: f64 },
    CompleteToNet { r: f64 },
    Thicken { offsets: Vec<Displacement> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub family: Family,
    pub pipeline: Vec<PipelineStep>,
}

impl ProcessSpec {
    pub fn poisson(t: f64) -> ProcessSpec {
        ProcessSpec {
            family: Family::Poisson { t },
            pipeline: vec![],
        }
    }

    pub fn lattice(covol: f64) -> ProcessSpec {
        ProcessSpec {
            family: Family::LatticeShift { covol },
            pipeline: vec![],
        }
    }

    /// Parse `poisson:1`, `lattice:1`, `iidpoisson:1`, `vertpoisson:1`,
    /// optionally followed by `|mark`, `|pthin:p`, `|dthin:d`, `|net:R`.
    pub fn parse(desc: &str) -> Result<ProcessSpec> {
        let err = |msg: &str| Error::Descriptor(desc.to_string(), msg.to_string());
        let mut parts = desc.split('|');
        let fam = parts.next().ok_or_else(|| err("empty descriptor"))?;
        let fparts: Vec<&str> = fam.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("expected a number"));
        let family = match fparts.as_slice() {
            ["poisson", t] => Family::Poisson { t: num(t)? },
            ["lattice", c] => Family::LatticeShift { covol: num(c)? },
            ["iidpoisson", t] => Family::IidPoisson { t: num(t)? },
            ["vertpoisson", t] => Family::VerticalPoisson { t: num(t)? },
            _ => return Err(err("unknown process family")),
        };
        let mut pipeline = Vec::new();
        for step in parts {
            let sp: Vec<&str> = step.split(':').collect();
            pipeline.push(match sp.as_slice() {
                ["mark"] => PipelineStep::IidMark,
                ["pthin", p] => PipelineStep::PThin { p: num(p)? },
                ["dthin", d] => PipelineStep::DeltaThin { delta: num(d)? },
                ["net", r] => PipelineStep::CompleteToNet { r: num(r)? },
                ["thicken2", v] => PipelineStep::Thicken {
                    offsets: vec![Displacement::d2(0.0, 0.0), Displacement::d2(num(v)?, 0.0)],
                },
                ["thicken3", v] => PipelineStep::Thicken {
                    offsets: vec![
                        Displacement::d2(0.0, 0.0),
                        Displacement::d2(num(v)?, 0.0),
                        Displacement::d2(0.0, num(v)?),
                    ],
                },
                _ => return Err(err("unknown pipeline step")),
            });
        }
        Ok(ProcessSpec { family, pipeline })
    }

    pub fn descriptor(&self) -> String {
        let mut s = match &self.family {
            Family::Poisson { t } => format!("poisson:{t}"),
            Family::LatticeShift { covol } => format!("lattice:{covol}"),
            Family::IidPoisson { t } => format!("iidpoisson:{t}"),
            Family::VerticalPoisson { t } => format!("vertpoisson:{t}"),
        };
        for step in &self.pipeline {
            s.push('|');
            s.push_str(&match step {
                PipelineStep::IidMark => "mark".to_string(),
                PipelineStep::PThin { p } => format!("pthin:{p}"),
                PipelineStep::DeltaThin { delta } => format!("dthin:{delta}"),
                PipelineStep::CompleteToNet { r } => format!("net:{r}"),
                PipelineStep::Thicken { offsets } => match offsets.len() {
                    2 => format!("thicken2:{}", offsets[1].coords[0]),
                    _ => format!("thicken3:{}", offsets[1].coords[0]),
                },
            });
        }
        s
    }

    /// Exact intensity when the family and pipeline force one.
    pub fn known_intensity(&self) -> Option<f64> {
        let mut t = match self.family {
            Family::Poisson { t } | Family::IidPoisson { t } | Family::VerticalPoisson { t } => t,
            Family::LatticeShift { covol } => 1.0 / covol,
        };
        for step in &self.pipeline {
            match step {
                PipelineStep::IidMark => {}
                PipelineStep::PThin { p } => t *= p,
                PipelineStep::Thicken { offsets } => t *= offsets.len() as f64,
                PipelineStep::DeltaThin { .. } | PipelineStep::CompleteToNet { .. } => return None,
            }
        }
        Some(t)
    }

    pub fn sample(&self, space: &Space, rng: &mut ChaCha8Rng) -> Result<Configuration> {
        let mut config = match self.family {
            Family::Poisson { t } => sample_poisson(space, t, rng)?,
            Family::LatticeShift { covol } => sample_lattice_shift(space, covol, rng)?,
            Family::IidPoisson { t } => {
                let base = sample_poisson(space, t, rng)?;
                iid_mark(&base, rng)?
            }
            Family::VerticalPoisson { t } => sample_vertical_poisson(space, t, rng)?,
        };
        for step in &self.pipeline {
            config = match step {
                PipelineStep::IidMark => iid_mark(&config, rng)?,
                PipelineStep::PThin { p } => p_thin(&config, *p)?,
                PipelineStep::DeltaThin { delta } => delta_thin(&config, *delta)?,
                PipelineStep::CompleteToNet { r } => complete_to_net(&config, *r)?,
                PipelineStep::Thicken { offsets } => constant_thicken(&config, offsets)?,
            };
        }
        Ok(config)
    }

    /// Sample replica `replica` of the seeded ensemble.
    pub fn sample_replica(&self, space: &Space, seed: u64, replica: u64) -> Result<Configuration> {
        let mut rng = stream_rng(seed, roles::SAMPLE, replica);
        Ok(self
            .sample(space, &mut rng)?
            .with_provenance(seed, replica, &self.descriptor()))
    }
}

/// Poisson sample of intensity `t`: total count Poisson(t vol), locations
/// independent and uniform.
pub fn sample_poisson(space: &Space, t: f64, rng: &mut impl Rng) -> Result<Configuration> {
    if t < 0.0 {
        return Err(Error::precondition(format!("negative intensity {t}")));
    }
    let lambda = t * space.volume();
    let n = sample_poisson_count(lambda, rng);
    let points: Vec<Point> = (0..n).map(|_| space.sample_uniform(rng)).collect();
    Configuration::new(space.clone(), points, false)
}

pub(crate) fn sample_poisson_count(lambda: f64, rng: &mut impl Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

/// Shifted lattice `a + spacing Z^d` with `a` uniform in a fundamental cell;
/// spacing is `covol^(1/d)` and must divide the window side.
pub fn sample_lattice_shift(
    space: &Space,
    covol: f64,
    rng: &mut impl Rng,
) -> Result<Configuration> {
    let (dim, side) = match space.kind {
        SpaceKind::Torus { dim, side } => (dim, side),
        SpaceKind::LatticeOrbit { .. } => (2, space.lattice_side()),
        _ => {
            return Err(Error::precondition(
                "lattice shifts need a periodic torus window",
            ))
        }
    };
    if !(covol > 0.0) {
        return Err(Error::precondition(format!("nonpositive covolume {covol}")));
    }
    let spacing = covol.powf(1.0 / dim as f64);
    let cells = side / spacing;
    let m = cells.round();
    if (cells - m).abs() > 1e-9 || m < 1.0 {
        return Err(Error::precondition(format!(
            "window side {side} is not a multiple of the lattice spacing {spacing}"
        )));
    }
    let m = m as u64;
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * spacing).collect();
    let mut points = Vec::with_capacity(m.pow(dim as u32) as usize);
    let mut idx = vec![0u64; dim];
    loop {
        let mut p = Point::new([0.0; 3]);
        for a in 0..dim {
            p.coords[a] = shift[a] + idx[a] as f64 * spacing;
        }
        points.push(space.wrap(p));
        // odometer over the d-dimensional index
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == dim {
                return Configuration::new(space.clone(), points, false);
            }
        }
    }
}

fn sample_vertical_poisson(space: &Space, t: f64, rng: &mut impl Rng) -> Result<Configuration> {
    match space.kind {
        SpaceKind::CylZ { side, levels } => {
            let base = sample_poisson(&Space::torus(1, side)?, t, rng)?;
            vertical_coupling(&base, levels)
        }
        SpaceKind::CylR { side, height } => {
            let k = integer_height(height)?;
            let lambda = t * side;
            let n = sample_poisson_count(lambda, rng);
            let mut points = Vec::with_capacity((n * k) as usize);
            for _ in 0..n {
                let x = rng.random::<f64>() * side;
                let u = rng.random::<f64>();
                for j in 0..k {
                    points.push(Point::d2(x, u + j as f64));
                }
            }
            Configuration::new(space.clone(), points, false)
        }
        _ => Err(Error::precondition(
            "vertical Poisson needs a cylinder space",
        )),
    }
}

fn integer_height(height: f64) -> Result<u64> {
    let k = height.round();
    if (height - k).abs() > 1e-9 || k < 1.0 {
        return Err(Error::precondition(format!(
            "vertical constructions on cylR need an integer height, got {height}"
        )));
    }
    Ok(k as u64)
}

/// Attach IID Unif[0,1] marks to an unmarked configuration.
pub fn iid_mark(config: &Configuration, rng: &mut impl Rng) -> Result<Configuration> {
    if config.marked {
        return Err(Error::precondition("configuration is already marked"));
    }
    let points = config
        .points
        .iter()
        .map(|p| p.with_mark(rng.random::<f64>()))
        .collect();
    let mut out = Configuration::new(config.space.clone(), points, true)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Independent p-thinning read off the marks: retain points with mark <= p.
/// Output is unmarked.
pub fn p_thin(config: &Configuration, p: f64) -> Result<Configuration> {
    if !config.marked {
        return Err(Error::precondition(
            "p-thinning needs a marked configuration",
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::precondition(format!(
            "retention probability {p} outside [0,1]"
        )));
    }
    let points = config
        .points
        .iter()
        .filter(|q| q.mark.unwrap() <= p)
        .map(|q| Point { mark: None, ..*q })
        .collect();
    let mut out = Configuration::new(config.space.clone(), points, false)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Metric thinning: keep `g` iff the rest of the configuration stays further
/// than `delta` away. The output is always delta-separated; marks pass
/// through unchanged.
pub fn delta_thin(config: &Configuration, delta: f64) -> Result<Configuration> {
    if delta < 0.0 {
        return Err(Error::precondition(format!("negative separation {delta}")));
    }
    let keep: Vec<Point> = if delta == 0.0 || config.len() < 2 {
        config.points.clone()
    } else {
        let grid = NeighborGrid::new(&config.space, &config.points, delta);
        let mut near = Vec::new();
        config
            .points
            .iter()
            .enumerate()
            .filter(|(i, p)| {
                grid.neighbors_within(p, &mut near);
                near.iter().all(|&j| j as usize == *i)
            })
            .map(|(_, p)| *p)
            .collect()
    };
    let mut out = Configuration::new(config.space.clone(), keep, config.marked)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Constant thickening by a finite displacement set `F` containing 0: the
/// output is the union of the translates `g F`. Requires an F-separated
/// (and unmarked) input; the count identity `|out| = |F| |in|` then holds
/// exactly.
pub fn constant_thicken(config: &Configuration, offsets: &[Displacement]) -> Result<Configuration> {
    if config.marked {
        return Err(Error::precondition(
            "constant thickening of a marked configuration is not defined; drop marks first",
        ));
    }
    if !offsets.iter().any(|f| f.is_zero()) {
        return Err(Error::precondition("the displacement set F must contain 0"));
    }
    let mut points = Vec::with_capacity(config.len() * offsets.len());
    for g in &config.points {
        for f in offsets {
            points.push(config.space.translate(f, g)?);
        }
    }
    let mut out = Configuration::new(config.space.clone(), points, false).map_err(|e| match e {
        Error::NotSimple(i, j) => Error::precondition(format!(
            "input is not F-separated: translates collide (output points {i}, {j})"
        )),
        other => other,
    })?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Index of the configuration point owning `query` in the tie-broken Voronoi
/// partition: nearest point, ties resolved by lexicographic order on the
/// relative displacement (the Borel tie-break).
pub fn voronoi_assign(config: &Configuration, query: &Point) -> Result<usize> {
    if config.is_empty() {
        return Err(Error::precondition(
            "voronoi assignment on an empty configuration",
        ));
    }
    let space = &config.space;
    let mut best: Option<(usize, f64, Displacement)> = None;
    for (i, g) in config.points.iter().enumerate() {
        let d = space.distance(query, g);
        let disp = space.displacement(query, g);
        let replace = match &best {
            None => true,
            Some((_, bd, bdisp)) => match d.total_cmp(bd) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => lex_less(&disp, bdisp),
            },
        };
        if replace {
            best = Some((i, d, disp));
        }
    }
    Ok(best.unwrap().0)
}

pub(crate) fn lex_less(a: &Displacement, b: &Displacement) -> bool {
    for i in 0..3 {
        match a.coords[i].total_cmp(&b.coords[i]) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    a.level < b.level
}

/// Glue independent Poisson(t) samples into the tie-broken Voronoi cells of
/// a marked configuration. Each cell's sample is seeded from its owner's
/// mark, so the map is a deterministic factor of the marked input; the
/// output law is Poisson(t).
pub fn glue_poisson_in_cells(config: &Configuration, t: f64) -> Result<Configuration> {
    if !config.marked {
        return Err(Error::precondition("gluing needs a marked configuration"));
    }
    if config.is_empty() {
        return Err(Error::precondition("gluing needs a nonempty configuration"));
    }
    let space = &config.space;
    let mut points = Vec::new();
    for (i, g) in config.points.iter().enumerate() {
        let mut rng = mark_rng(g.mark.unwrap(), roles::GLUE);
        let n = sample_poisson_count(t * space.volume(), &mut rng);
        let mut disp = Displacement::shift(g.coords);
        if space.has_levels() {
            disp = disp.with_level(g.level.unwrap_or(0));
        }
        for _ in 0..n {
            let u = space.sample_uniform(&mut rng);
            let candidate = space.translate(&disp, &u)?;
            if voronoi_assign(config, &candidate)? == i {
                points.push(candidate);
            }
        }
    }
    let mut out = Configuration::new(space.clone(), points, false)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Local mark encoding. A 16-bit quantized mark becomes a satellite pattern
// inside B(g, delta/100): a presence pair plus one pair per set bit, all laid
// along the first axis. The progenitor stays isolated at scale delta/200
// while every satellite has a companion within delta/200, which is what the
// decoder keys on.

const ENC_UNIT: f64 = 1e-3; // radii are expressed in units of delta * ENC_UNIT
const ENC_PRESENCE: f64 = 5.2;
const ENC_PAIR_GAP: f64 = 0.1;
const ENC_BIT0: f64 = 5.5;
const ENC_BIT_STEP: f64 = 0.25;
const ENC_TOL: f64 = 0.02;
const ENC_MIN_DELTA: f64 = 1e-4;

pub fn quantize_mark(mark: f64) -> u16 {
    (mark.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn dequantize_mark(q: u16) -> f64 {
    q as f64 / 65535.0
}

fn satellite_radii(q: u16, delta: f64) -> Vec<f64> {
    let mut radii = vec![ENC_PRESENCE, ENC_PRESENCE + ENC_PAIR_GAP];
    for bit in 0..16 {
        if q & (1 << bit) != 0 {
            let r = ENC_BIT0 + ENC_BIT_STEP * bit as f64;
            radii.push(r);
            radii.push(r + ENC_PAIR_GAP);
        }
    }
    radii.iter().map(|r| r * delta * ENC_UNIT).collect()
}

/// Spatially encode 16-bit quantized marks of a delta-separated marked
/// configuration as satellite patterns; `decode_marks` is an exact inverse.
pub fn encode_marks(config: &Configuration, delta: f64) -> Result<Configuration> {
    if !config.marked {
        return Err(Error::precondition("encoding needs a marked configuration"));
    }
    if delta < ENC_MIN_DELTA {
        return Err(Error::precondition(format!(
            "separation {delta} is below 200x the encoding resolution"
        )));
    }
    if matches!(config.space.kind, SpaceKind::Hyperbolic { .. }) {
        return Err(Error::precondition(
            "local encoding needs a periodic window",
        ));
    }
    if let Some(min) = min_pairwise_via_grid(config, delta) {
        if min <= delta {
            return Err(Error::precondition(format!(
                "input is not {delta}-separated (min gap {min})"
            )));
        }
    }
    let space = &config.space;
    let mut points = Vec::new();
    for g in &config.points {
        points.push(Point { mark: None, ..*g });
        let q = quantize_mark(g.mark.unwrap());
        for r in satellite_radii(q, delta) {
            let mut disp = Displacement::d1(r);
            if space.has_levels() {
                disp = disp.with_level(0);
            }
            points.push(space.translate(&disp, &Point { mark: None, ..*g })?);
        }
    }
    let mut out = Configuration::new(space.clone(), points, false)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

fn min_pairwise_via_grid(config: &Configuration, radius: f64) -> Option<f64> {
    if config.len() < 2 {
        return None;
    }
    let grid = NeighborGrid::new(&config.space, &config.points, radius);
    let mut near = Vec::new();
    let mut best = f64::INFINITY;
    for (i, p) in config.points.iter().enumerate() {
        grid.neighbors_within(p, &mut near);
        for &j in &near {
            if j as usize != i {
                best = best.min(config.space.distance(p, &config.points[j as usize]));
            }
        }
    }
    (best < f64::INFINITY).then_some(best)
}

/// Recover the marked configuration from an encoded one. Errors on anything
/// that is not an exact encoder output (missing presence pair, stray points,
/// unknown satellite radii).
pub fn decode_marks(config: &Configuration, delta: f64) -> Result<Configuration> {
    if config.marked {
        return Err(Error::precondition(
            "decoding expects an unmarked configuration",
        ));
    }
    if delta < ENC_MIN_DELTA {
        return Err(Error::precondition(format!(
            "separation {delta} is below 200x the encoding resolution"
        )));
    }
    let space = &config.space;
    let iso_scale = delta / 200.0;
    let zone = delta / 100.0;
    let grid = NeighborGrid::new(space, &config.points, zone);
    let mut near = Vec::new();
    let mut is_isolated = vec![false; config.len()];
    for (i, p) in config.points.iter().enumerate() {
        grid.neighbors_within(p, &mut near);
        is_isolated[i] = near
            .iter()
            .all(|&j| j as usize == i || space.distance(p, &config.points[j as usize]) > iso_scale);
    }
    let mut consumed = vec![false; config.len()];
    let mut out = Vec::new();
    let tol = ENC_TOL * delta * ENC_UNIT;
    for (i, g) in config.points.iter().enumerate() {
        if !is_isolated[i] {
            continue;
        }
        grid.neighbors_within(g, &mut near);
        let mut radii: Vec<(f64, usize)> = near
            .iter()
            .filter(|&&j| j as usize != i)
            .map(|&j| (space.distance(g, &config.points[j as usize]), j as usize))
            .collect();
        radii.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut q: u16 = 0;
        let mut saw_presence = false;
        let mut idx = 0;
        while idx < radii.len() {
            if idx + 1 >= radii.len() {
                return Err(Error::precondition(format!(
                    "point {i}: unpaired satellite at radius {}",
                    radii[idx].0
                )));
            }
            let (r1, j1) = radii[idx];
            let (r2, j2) = radii[idx + 1];
            let unit = delta * ENC_UNIT;
            if (r2 - r1 - ENC_PAIR_GAP * unit).abs() > tol {
                return Err(Error::precondition(format!(
                    "point {i}: satellite radii {r1}, {r2} do not form a pair"
                )));
            }
            if (r1 - ENC_PRESENCE * unit).abs() <= tol {
                saw_presence = true;
            } else {
                let bit = (r1 / unit - ENC_BIT0) / ENC_BIT_STEP;
                let b = bit.round();
                if (bit - b).abs() * ENC_BIT_STEP * unit > tol || !(0.0..16.0).contains(&b) {
                    return Err(Error::precondition(format!(
                        "point {i}: satellite radius {r1} matches no bit slot"
                    )));
                }
                q |= 1 << (b as u16);
            }
            consumed[j1] = true;
            consumed[j2] = true;
            idx += 2;
        }
        if !saw_presence {
            return Err(Error::precondition(format!(
                "point {i}: isolated point without a presence pair (not an encoded configuration)"
            )));
        }
        out.push(g.with_mark(dequantize_mark(q)));
    }
    for (i, p) in config.points.iter().enumerate() {
        if !is_isolated[i] && !consumed[i] {
            return Err(Error::precondition(format!(
                "point {i} at {:?} belongs to no satellite pattern",
                p.coords
            )));
        }
    }
    if out.is_empty() {
        return Err(Error::precondition("no encoded points found"));
    }
    let mut cfg = Configuration::new(space.clone(), out, true)?;
    cfg.provenance = config.provenance.clone();
    Ok(cfg)
}

/// Complete a configuration to an R-coarsely-dense one by scanning a fixed
/// grid of spacing <= R/2 and accepting grid points at distance >= R/2 from
/// everything kept so far. Added points are R/2-separated; on a torus the
/// output covers every location within radius R.
pub fn complete_to_net(config: &Configuration, r: f64) -> Result<Configuration> {
    let space = &config.space;
    if config.marked {
        return Err(Error::precondition(
            "net completion of a marked configuration",
        ));
    }
    let sides = match space.kind {
        SpaceKind::Torus { .. } | SpaceKind::LatticeOrbit { .. } => space.sides(),
        _ => {
            return Err(Error::precondition(
                "net completion needs a periodic torus window",
            ))
        }
    };
    if !(r > 0.0) {
        return Err(Error::precondition(format!("nonpositive net radius {r}")));
    }
    if r > space.half_extent() {
        return Err(Error::precondition(format!(
            "net radius {r} exceeds half the window side"
        )));
    }
    let dim = space.dim();
    let half = r / 2.0;
    let mut counts = [1usize; 3];
    let mut spacing = [0.0f64; 3];
    for a in 0..dim {
        counts[a] = (sides[a] / half).ceil() as usize;
        spacing[a] = sides[a] / counts[a] as f64;
    }
    let input_grid = (config.len() >= 2).then(|| NeighborGrid::new(space, &config.points, half));
    let mut near = Vec::new();
    let mut accepted: Vec<Point> = Vec::new();
    let mut idx = [0usize; 3];
    'scan: loop {
        let mut cand = Point::new([0.0; 3]);
        for a in 0..dim {
            cand.coords[a] = idx[a] as f64 * spacing[a];
        }
        let mut dist = f64::INFINITY;
        if let Some(grid) = &input_grid {
            grid.neighbors_within(&cand, &mut near);
            for &j in &near {
                dist = dist.min(space.distance(&cand, &config.points[j as usize]));
            }
        } else {
            for p in &config.points {
                dist = dist.min(space.distance(&cand, p));
            }
        }
        for p in &accepted {
            dist = dist.min(space.distance(&cand, p));
        }
        if dist >= half {
            accepted.push(cand);
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < counts[a] {
                continue 'scan;
            }
            idx[a] = 0;
            a += 1;
            if a == dim {
                break 'scan;
            }
        }
    }
    let mut points = config.points.clone();
    points.extend(accepted);
    let mut out = Configuration::new(space.clone(), points, false)?;
    out.provenance = config.provenance.clone();
    Ok(out)
}

/// Vertical coupling: stack a torus_1 configuration on every level of the
/// discrete cylinder. Output point `i * levels + l` is copy `l` of base
/// point `i` (the graph lift relies on this ordering).
pub fn vertical_coupling(base: &Configuration, levels: u32) -> Result<Configuration> {
    let side = match base.space.kind {
        SpaceKind::Torus { dim: 1, side } => side,
        _ => {
            return Err(Error::precondition(
                "vertical coupling needs a torus_1 base",
            ))
        }
    };
    if base.marked {
        return Err(Error::precondition(
            "vertical coupling of a marked configuration",
        ));
    }
    let space = Space::cyl_z(side, levels)?;
    let mut points = Vec::with_capacity(base.len() * levels as usize);
    for p in &base.points {
        for l in 0..levels {
            points.push(Point::d1(p.coords[0]).with_level(l as i64));
        }
    }
    let mut out = Configuration::new(space, points, false)?;
    out.provenance = base.provenance.clone();
    Ok(out)
}

/// Output of [`straighten_phi_n_detailed`] with the progenitor bookkeeping.
pub struct Straightened {
    pub config: Configuration,
    /// for each output point, the index of its progenitor in the output
    pub progenitor: Vec<u32>,
    /// whether the output point is itself a progenitor (offset 0)
    pub is_progenitor: Vec<bool>,
}

/// The straightening map: keep points with mark <= 1/n (progenitors), then
/// thicken each by the column `{0} x {0..n-1}` (levels wrap on the window).
/// Intensity is preserved in expectation; output is unmarked.
pub fn straighten_phi_n(config: &Configuration, n: u32) -> Result<Configuration> {
    straighten_phi_n_detailed(config, n).map(|s| s.config)
}

pub fn straighten_phi_n_detailed(config: &Configuration, n: u32) -> Result<Straightened> {
    if !config.marked {
        return Err(Error::precondition(
            "straightening needs a marked configuration",
        ));
    }
    if n == 0 {
        return Err(Error::precondition(
            "straightening step n must be at least 1",
        ));
    }
    let space = &config.space;
    let threshold = 1.0 / n as f64;
    let mut points = Vec::new();
    let mut progenitor = Vec::new();
    let mut is_progenitor = Vec::new();
    match space.kind {
        SpaceKind::CylZ { levels, .. } => {
            for p in &config.points {
                if p.mark.unwrap() > threshold {
                    continue;
                }
                let base_idx = points.len() as u32;
                for k in 0..n.min(levels) {
                    let l = (p.level.unwrap() + k as i64).rem_euclid(levels as i64);
                    points.push(Point::d1(p.coords[0]).with_level(l));
                    progenitor.push(base_idx);
                    is_progenitor.push(k == 0);
                }
            }
        }
        SpaceKind::CylR { height, .. } => {
            let k_max = integer_height(height)?.min(n as u64);
            for p in &config.points {
                if p.mark.unwrap() > threshold {
                    continue;
                }
                let base_idx = points.len() as u32;
                for k in 0..k_max {
                    let h = (p.coords[1] + k as f64).rem_euclid(height);
                    points.push(Point::d2(p.coords[0], h));
                    progenitor.push(base_idx);
                    is_progenitor.push(k == 0);
                }
            }
        }
        _ => return Err(Error::precondition("straightening needs a cylinder space")),
    }
    let mut out = Configuration::new(space.clone(), points, false)?;
    out.provenance = config.provenance.clone();
    Ok(Straightened {
        config: out,
        progenitor,
        is_progenitor,
    })
}
