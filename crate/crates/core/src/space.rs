//! Homogeneous windows: periodic tori, cylinders (discrete or periodic
//! continuous levels), a free-boundary hyperbolic disk, and the lattice-orbit
//! window. A `Space` owns the invariant metric, the volume, the translation
//! action, and uniform sampling; everything downstream is generic over it.
//!
//! Conventions: torus coordinates live in `[0, side)` per axis, cylinder
//! levels in `0..levels` with unit spacing, hyperbolic points are Euclidean
//! coordinates in the Poincare disk with curvature -1 (so `d(0,z) =
//! 2 artanh |z|`). The free-boundary disk supports only rotations about the
//! origin as translations; rerooting uses Mobius transport instead.

use crate::error::{Error, Result};
use rand::Rng;

/// Points closer than this are treated as equal; configurations violating it
/// are non-simple.
pub const SIMPLE_EPS: f64 = 1e-9;

/// Cells per axis used to realize the lattice-orbit window (`lat2:covol`) as
/// a periodic torus holding 16x16 fundamental cells.
pub const LATTICE_ORBIT_CELLS: f64 = 16.0;

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    /// Flat torus, `dim` in 1..=3, side length `side` per axis.
    Torus { dim: usize, side: f64 },
    /// torus_1 base of length `side` times a discrete level circle `Z_levels`.
    CylZ { side: f64, levels: u32 },
    /// torus_1 base of length `side` times a continuous height circle.
    CylR { side: f64, height: f64 },
    /// Poincare disk of hyperbolic radius `radius`, free boundary; statistics
    /// only use roots within `radius - margin` of the centre.
    Hyperbolic { radius: f64, margin: f64 },
    /// Z^2 scaled to covolume `covol`, windowed on a torus of
    /// `LATTICE_ORBIT_CELLS` cells per axis.
    LatticeOrbit { covol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    pub kind: SpaceKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub coords: [f64; 3],
    pub level: Option<i64>,
    pub mark: Option<f64>,
}

impl Point {
    pub fn new(coords: [f64; 3]) -> Point {
        Point {
            coords,
            level: None,
            mark: None,
        }
    }
    pub fn d1(x: f64) -> Point {
        Point::new([x, 0.0, 0.0])
    }
    pub fn d2(x: f64, y: f64) -> Point {
        Point::new([x, y, 0.0])
    }
    pub fn d3(x: f64, y: f64, z: f64) -> Point {
        Point::new([x, y, z])
    }
    pub fn with_level(mut self, level: i64) -> Point {
        self.level = Some(level);
        self
    }
    pub fn with_mark(mut self, mark: f64) -> Point {
        self.mark = Some(mark);
        self
    }
}

/// A displacement of the translation action. On periodic kinds this is a
/// coordinate shift (plus a level shift on cylinders); on the hyperbolic disk
/// only rotations about the origin are available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Displacement {
    pub coords: [f64; 3],
    pub level: i64,
    rotation: bool,
}

impl Displacement {
    pub fn shift(coords: [f64; 3]) -> Displacement {
        Displacement {
            coords,
            level: 0,
            rotation: false,
        }
    }
    pub fn d1(x: f64) -> Displacement {
        Displacement::shift([x, 0.0, 0.0])
    }
    pub fn d2(x: f64, y: f64) -> Displacement {
        Displacement::shift([x, y, 0.0])
    }
    pub fn with_level(mut self, dl: i64) -> Displacement {
        self.level = dl;
        self
    }
    pub fn rotation(theta: f64) -> Displacement {
        Displacement {
            coords: [theta, 0.0, 0.0],
            level: 0,
            rotation: true,
        }
    }
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.abs() <= SIMPLE_EPS) && self.level == 0 && !self.rotation
    }
}

impl Space {
    pub fn torus(dim: usize, side: f64) -> Result<Space> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidSpace(format!(
                "torus dimension {dim} not in 1..=3"
            )));
        }
        if !(side > 0.0) {
            return Err(Error::InvalidSpace(format!(
                "nonpositive side length {side}"
            )));
        }
        Ok(Space {
            kind: SpaceKind::Torus { dim, side },
        })
    }

    pub fn cyl_z(side: f64, levels: u32) -> Result<Space> {
        if !(side > 0.0) {
            return Err(Error::InvalidSpace(format!(
                "nonpositive side length {side}"
            )));
        }
        if levels == 0 {
            return Err(Error::InvalidSpace(
                "cylinder needs a positive level count".into(),
            ));
        }
        Ok(Space {
            kind: SpaceKind::CylZ { side, levels },
        })
    }

    pub fn cyl_r(side: f64, height: f64) -> Result<Space> {
        if !(side > 0.0) || !(height > 0.0) {
            return Err(Error::InvalidSpace(
                "nonpositive cylinder dimensions".into(),
            ));
        }
        Ok(Space {
            kind: SpaceKind::CylR { side, height },
        })
    }

    pub fn hyperbolic(radius: f64, margin: f64) -> Result<Space> {
        if !(radius > 0.0) {
            return Err(Error::InvalidSpace(format!(
                "nonpositive disk radius {radius}"
            )));
        }
        if !(0.0..radius).contains(&margin) {
            return Err(Error::InvalidSpace(format!(
                "hyperbolic margin {margin} must satisfy 0 <= margin < radius {radius}"
            )));
        }
        Ok(Space {
            kind: SpaceKind::Hyperbolic { radius, margin },
        })
    }

    pub fn lattice_orbit(covol: f64) -> Result<Space> {
        if !(covol > 0.0) {
            return Err(Error::InvalidSpace(format!("nonpositive covolume {covol}")));
        }
        Ok(Space {
            kind: SpaceKind::LatticeOrbit { covol },
        })
    }

    /// Parse a CLI descriptor: `torus1:L`, `torus2:L`, `torus3:L`,
    /// `cyl:L:levels`, `cylR:L:H`, `hyp:Rmax:margin`, `lat2:covol`.
    pub fn parse(desc: &str) -> Result<Space> {
        let err = |msg: &str| Error::Descriptor(desc.to_string(), msg.to_string());
        let parts: Vec<&str> = desc.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("expected a number"));
        match parts.as_slice() {
            ["torus1", l] => Space::torus(1, num(l)?),
            ["torus2", l] => Space::torus(2, num(l)?),
            ["torus3", l] => Space::torus(3, num(l)?),
            ["cyl", l, lv] => {
                let levels = lv
                    .parse::<u32>()
                    .map_err(|_| err("level count must be an integer"))?;
                Space::cyl_z(num(l)?, levels)
            }
            ["cylR", l, h] => Space::cyl_r(num(l)?, num(h)?),
            ["hyp", r, m] => Space::hyperbolic(num(r)?, num(m)?),
            ["lat2", c] => Space::lattice_orbit(num(c)?),
            _ => Err(err("unknown space descriptor")),
        }
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            SpaceKind::Torus { dim, side } => format!("torus{dim}:{side}"),
            SpaceKind::CylZ { side, levels } => format!("cyl:{side}:{levels}"),
            SpaceKind::CylR { side, height } => format!("cylR:{side}:{height}"),
            SpaceKind::Hyperbolic { radius, margin } => format!("hyp:{radius}:{margin}"),
            SpaceKind::LatticeOrbit { covol } => format!("lat2:{covol}"),
        }
    }

    /// Number of continuous base coordinates a point carries.
    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::Torus { dim, .. } => *dim,
            SpaceKind::CylZ { .. } => 1,
            SpaceKind::CylR { .. } => 2,
            SpaceKind::Hyperbolic { .. } => 2,
            SpaceKind::LatticeOrbit { .. } => 2,
        }
    }

    pub fn has_levels(&self) -> bool {
        matches!(self.kind, SpaceKind::CylZ { .. })
    }

    pub fn levels(&self) -> Option<u32> {
        match self.kind {
            SpaceKind::CylZ { levels, .. } => Some(levels),
            _ => None,
        }
    }

    /// Per-axis periodic side lengths (levels excluded).
    pub fn sides(&self) -> Vec<f64> {
        match &self.kind {
            SpaceKind::Torus { dim, side } => vec![*side; *dim],
            SpaceKind::CylZ { side, .. } => vec![*side],
            SpaceKind::CylR { side, height } => vec![*side, *height],
            SpaceKind::Hyperbolic { .. } => vec![],
            SpaceKind::LatticeOrbit { .. } => vec![self.lattice_side(); 2],
        }
    }

    pub fn lattice_side(&self) -> f64 {
        match self.kind {
            SpaceKind::LatticeOrbit { covol } => LATTICE_ORBIT_CELLS * covol.sqrt(),
            _ => panic!("lattice_side on non-lattice space"),
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            SpaceKind::Torus { dim, side } => side.powi(*dim as i32),
            SpaceKind::CylZ { side, levels } => side * *levels as f64,
            SpaceKind::CylR { side, height } => side * height,
            SpaceKind::Hyperbolic { radius, .. } => hyperbolic_area(*radius),
            SpaceKind::LatticeOrbit { .. } => self.lattice_side().powi(2),
        }
    }

    /// Half the smallest period: the largest radius at which distances (and
    /// range-bounded statistics) are unambiguous on periodic kinds.
    pub fn half_extent(&self) -> f64 {
        match &self.kind {
            SpaceKind::Torus { side, .. } => side / 2.0,
            SpaceKind::CylZ { side, levels } => (side / 2.0).min(*levels as f64 / 2.0),
            SpaceKind::CylR { side, height } => (side / 2.0).min(height / 2.0),
            SpaceKind::Hyperbolic { radius, .. } => *radius,
            SpaceKind::LatticeOrbit { .. } => self.lattice_side() / 2.0,
        }
    }

    pub fn origin(&self) -> Point {
        let mut p = Point::new([0.0; 3]);
        if self.has_levels() {
            p.level = Some(0);
        }
        p
    }

    /// Canonicalize a point into the window (wrap periodic coordinates).
    pub fn wrap(&self, mut p: Point) -> Point {
        match &self.kind {
            SpaceKind::Hyperbolic { .. } => p,
            SpaceKind::CylZ { side, levels } => {
                p.coords[0] = p.coords[0].rem_euclid(*side);
                p.level = Some(p.level.unwrap_or(0).rem_euclid(*levels as i64));
                p
            }
            _ => {
                for (i, s) in self.sides().iter().enumerate() {
                    p.coords[i] = p.coords[i].rem_euclid(*s);
                }
                p
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match &self.kind {
            SpaceKind::Hyperbolic { radius, .. } => {
                p.level.is_none() && self.distance(&self.origin(), p) <= radius + 1e-12
            }
            SpaceKind::CylZ { side, levels } => {
                p.coords[0] >= 0.0
                    && p.coords[0] < *side
                    && p.level.is_some_and(|l| l >= 0 && l < *levels as i64)
            }
            _ => {
                p.level.is_none()
                    && self
                        .sides()
                        .iter()
                        .enumerate()
                        .all(|(i, s)| p.coords[i] >= 0.0 && p.coords[i] < *s)
            }
        }
    }

    /// Invariant distance. Points must belong to this space's kind (level
    /// present iff the space is a discrete cylinder); mismatches panic, they
    /// are caught earlier at configuration construction.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match &self.kind {
            SpaceKind::Hyperbolic { .. } => {
                hyperbolic_distance(a.coords[0], a.coords[1], b.coords[0], b.coords[1])
            }
            SpaceKind::CylZ { side, levels } => {
                assert!(
                    a.level.is_some() && b.level.is_some(),
                    "cylinder points need levels (mismatched space kinds)"
                );
                let dx = wrap_diff(a.coords[0] - b.coords[0], *side);
                let dl = wrap_level(a.level.unwrap() - b.level.unwrap(), *levels as i64) as f64;
                (dx * dx + dl * dl).sqrt()
            }
            _ => {
                assert!(
                    a.level.is_none() && b.level.is_none(),
                    "levels on a non-cylinder space (mismatched space kinds)"
                );
                let mut s2 = 0.0;
                for (i, side) in self.sides().iter().enumerate() {
                    let d = wrap_diff(a.coords[i] - b.coords[i], *side);
                    s2 += d * d;
                }
                s2.sqrt()
            }
        }
    }

    /// Apply a displacement. Distance-preserving on every kind; the
    /// hyperbolic disk only accepts rotations about the origin.
    pub fn translate(&self, g: &Displacement, p: &Point) -> Result<Point> {
        match &self.kind {
            SpaceKind::Hyperbolic { .. } => {
                if !g.rotation {
                    if g.is_zero() {
                        return Ok(*p);
                    }
                    return Err(Error::precondition(
                        "hyperbolic disk supports only rotations about the origin",
                    ));
                }
                let (s, c) = g.coords[0].sin_cos();
                let (x, y) = (p.coords[0], p.coords[1]);
                let mut q = *p;
                q.coords[0] = c * x - s * y;
                q.coords[1] = s * x + c * y;
                Ok(q)
            }
            _ => {
                if g.rotation {
                    return Err(Error::precondition(
                        "rotation displacement on a periodic space",
                    ));
                }
                let mut q = *p;
                for i in 0..self.dim() {
                    q.coords[i] += g.coords[i];
                }
                if self.has_levels() {
                    q.level = Some(q.level.unwrap_or(0) + g.level);
                } else if g.level != 0 {
                    return Err(Error::precondition("level shift on a space without levels"));
                }
                Ok(self.wrap(q))
            }
        }
    }

    /// Relative position of `to` as seen from `from`: the wrapped centred
    /// displacement on periodic kinds, Mobius-recentred coordinates on the
    /// disk. This is the translation-invariant quantity used for tie-breaking
    /// and local signatures.
    pub fn displacement(&self, from: &Point, to: &Point) -> Displacement {
        match &self.kind {
            SpaceKind::Hyperbolic { .. } => {
                let (x, y) =
                    mobius_recenter(from.coords[0], from.coords[1], to.coords[0], to.coords[1]);
                Displacement::shift([x, y, 0.0])
            }
            SpaceKind::CylZ { side, levels } => {
                let dx = wrap_diff_centered(to.coords[0] - from.coords[0], *side);
                let dl = wrap_level_centered(
                    to.level.unwrap_or(0) - from.level.unwrap_or(0),
                    *levels as i64,
                );
                Displacement {
                    coords: [dx, 0.0, 0.0],
                    level: dl,
                    rotation: false,
                }
            }
            _ => {
                let mut c = [0.0; 3];
                for (i, side) in self.sides().iter().enumerate() {
                    c[i] = wrap_diff_centered(to.coords[i] - from.coords[i], *side);
                }
                Displacement {
                    coords: c,
                    level: 0,
                    rotation: false,
                }
            }
        }
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Point {
        match &self.kind {
            SpaceKind::Hyperbolic { radius, .. } => {
                let u: f64 = rng.random();
                let r = (1.0 + u * ((*radius).cosh() - 1.0)).acosh();
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let eu = (r / 2.0).tanh();
                Point::d2(eu * theta.cos(), eu * theta.sin())
            }
            SpaceKind::CylZ { side, levels } => {
                let x = rng.random::<f64>() * side;
                let l = rng.random_range(0..*levels) as i64;
                Point::d1(x).with_level(l)
            }
            _ => {
                let mut p = Point::new([0.0; 3]);
                for (i, s) in self.sides().iter().enumerate() {
                    p.coords[i] = rng.random::<f64>() * s;
                }
                p
            }
        }
    }

    /// Points considered equal at the simplicity threshold.
    pub fn points_eq(&self, a: &Point, b: &Point) -> bool {
        self.distance(a, b) <= SIMPLE_EPS
    }

    /// Whether a root is usable for statistics of the given range: always on
    /// periodic kinds (ranges are checked against the half extent instead),
    /// inside the eroded window on the free-boundary disk.
    pub fn root_in_statistics_window(&self, p: &Point, range: f64) -> bool {
        match self.kind {
            SpaceKind::Hyperbolic { radius, margin } => {
                self.distance(&self.origin(), p) <= radius - margin.max(range)
            }
            _ => true,
        }
    }
}

fn wrap_diff(d: f64, side: f64) -> f64 {
    let d = d.rem_euclid(side);
    d.min(side - d)
}

fn wrap_diff_centered(d: f64, side: f64) -> f64 {
    let d = d.rem_euclid(side);
    if d >= side / 2.0 {
        d - side
    } else {
        d
    }
}

fn wrap_level(dl: i64, levels: i64) -> i64 {
    let d = dl.rem_euclid(levels);
    d.min(levels - d)
}

fn wrap_level_centered(dl: i64, levels: i64) -> i64 {
    let d = dl.rem_euclid(levels);
    if 2 * d >= levels {
        d - levels
    } else {
        d
    }
}

/// Area of the hyperbolic disk of radius r at curvature -1.
pub fn hyperbolic_area(r: f64) -> f64 {
    std::f64::consts::TAU * (r.cosh() - 1.0)
}

/// Distance in the Poincare disk model (curvature -1), points given by
/// Euclidean coordinates in the unit disk.
pub fn hyperbolic_distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
    let na = 1.0 - (ax * ax + ay * ay);
    let nb = 1.0 - (bx * bx + by * by);
    (1.0 + 2.0 * d2 / (na * nb)).acosh()
}

/// Mobius transformation taking `a` to the origin, applied to `z`:
/// (z - a) / (1 - conj(a) z). An isometry of the disk.
pub fn mobius_recenter(ax: f64, ay: f64, zx: f64, zy: f64) -> (f64, f64) {
    // numerator (zx - ax) + i (zy - ay)
    let nx = zx - ax;
    let ny = zy - ay;
    // denominator 1 - (ax - i ay)(zx + i zy)
    let dx = 1.0 - (ax * zx + ay * zy);
    let dy = -(ax * zy - ay * zx);
    let den = dx * dx + dy * dy;
    ((nx * dx + ny * dy) / den, (ny * dx - nx * dy) / den)
}

/// Bounded test region inside a window: an axis box (optionally pinned to one
/// cylinder level) or a metric ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Box {
        lo: [f64; 3],
        hi: [f64; 3],
        level: Option<i64>,
    },
    Ball {
        center: Point,
        r: f64,
    },
}

impl Region {
    pub fn unit_box(dim: usize) -> Region {
        let mut hi = [0.0; 3];
        for h in hi.iter_mut().take(dim) {
            *h = 1.0;
        }
        Region::Box {
            lo: [0.0; 3],
            hi,
            level: None,
        }
    }

    pub fn contains(&self, space: &Space, p: &Point) -> bool {
        match self {
            Region::Box { lo, hi, level } => {
                if let Some(l) = level {
                    if p.level != Some(*l) {
                        return false;
                    }
                }
                (0..space.dim()).all(|i| p.coords[i] >= lo[i] && p.coords[i] < hi[i])
            }
            Region::Ball { center, r } => space.distance(center, p) <= *r,
        }
    }

    pub fn volume(&self, space: &Space) -> f64 {
        match self {
            Region::Box { lo, hi, level } => {
                let base: f64 = (0..space.dim()).map(|i| (hi[i] - lo[i]).max(0.0)).product();
                if space.has_levels() && level.is_some() {
                    base
                } else if space.has_levels() {
                    base * space.levels().unwrap() as f64
                } else {
                    base
                }
            }
            Region::Ball { r, .. } => match &space.kind {
                SpaceKind::Torus { dim: 1, .. } => 2.0 * r,
                SpaceKind::Torus { dim: 2, .. } | SpaceKind::LatticeOrbit { .. } => {
                    std::f64::consts::PI * r * r
                }
                SpaceKind::Torus { dim: 3, .. } => 4.0 / 3.0 * std::f64::consts::PI * r.powi(3),
                SpaceKind::Hyperbolic { .. } => hyperbolic_area(*r),
                _ => panic!("ball volume not defined on this space kind"),
            },
        }
    }

    /// Disjointness test used to validate finite-dimensional window sets.
    pub fn intersects(&self, other: &Region, space: &Space) -> bool {
        // conservative: boxes exactly, ball pairs via centres, mixed via
        // sampling the box corners
        match (self, other) {
            (
                Region::Box {
                    lo: a0,
                    hi: a1,
                    level: la,
                },
                Region::Box {
                    lo: b0,
                    hi: b1,
                    level: lb,
                },
            ) => {
                if let (Some(x), Some(y)) = (la, lb) {
                    if x != y {
                        return false;
                    }
                }
                (0..space.dim()).all(|i| a0[i] < b1[i] && b0[i] < a1[i])
            }
            (Region::Ball { center: ca, r: ra }, Region::Ball { center: cb, r: rb }) => {
                space.distance(ca, cb) <= ra + rb
            }
            (Region::Box { .. }, Region::Ball { .. }) => other.intersects(self, space),
            (Region::Ball { center, r }, b @ Region::Box { .. }) => {
                // cheap conservative check: ball centre in the box, or any
                // box corner within the ball
                if b.contains(space, center) {
                    return true;
                }
                if let Region::Box { lo, hi, level } = b {
                    let corners = box_corners(space.dim(), lo, hi);
                    corners.iter().any(|c| {
                        let mut p = Point::new(*c);
                        p.level = *level;
                        if !space.has_levels() {
                            p.level = None;
                        }
                        space.distance(center, &p) <= *r
                    })
                } else {
                    unreachable!()
                }
            }
        }
    }
}

fn box_corners(dim: usize, lo: &[f64; 3], hi: &[f64; 3]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << dim) {
        let mut c = [0.0; 3];
        for i in 0..dim {
            c[i] = if mask & (1 << i) != 0 { hi[i] } else { lo[i] };
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    // quadrature oracle for the hyperbolic area: integrate the length of the
    // circle of radius r (2 pi sinh r) by composite Simpson
    fn hyperbolic_area_oracle(r: f64) -> f64 {
        let n = 2000;
        let h = r / n as f64;
        let f = |x: f64| std::f64::consts::TAU * x.sinh();
        let mut s = f(0.0) + f(r);
        for i in 1..n {
            let x = i as f64 * h;
            s += if i % 2 == 0 { 2.0 * f(x) } else { 4.0 * f(x) };
        }
        s * h / 3.0
    }

    // geodesic-integration oracle for the radial distance: ds = 2/(1-t^2) dt
    fn radial_distance_oracle(eu: f64) -> f64 {
        let n = 4000;
        let h = eu / n as f64;
        let f = |t: f64| 2.0 / (1.0 - t * t);
        let mut s = f(0.0) + f(eu);
        for i in 1..n {
            let t = i as f64 * h;
            s += if i % 2 == 0 { 2.0 * f(t) } else { 4.0 * f(t) };
        }
        s * h / 3.0
    }

    #[test]
    fn volumes() {
        assert_abs_diff_eq!(Space::torus(2, 10.0).unwrap().volume(), 100.0);
        let cyl = Space::cyl_z(20.0, 40).unwrap();
        assert_abs_diff_eq!(cyl.volume(), 800.0);
        assert_eq!(cyl.levels(), Some(40));
        // frozen from the quadrature oracle; closed form 2 pi (cosh 2 - 1)
        let oracle = hyperbolic_area_oracle(2.0);
        assert_abs_diff_eq!(oracle, 17.355387381771436, epsilon = 1e-6);
        assert_abs_diff_eq!(
            Space::hyperbolic(2.0, 0.1).unwrap().volume(),
            oracle,
            epsilon = 1e-6
        );
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(Space::torus(2, 0.0).is_err());
        assert!(Space::torus(4, 1.0).is_err());
        assert!(Space::hyperbolic(2.0, 2.0).is_err());
        assert!(Space::cyl_z(5.0, 0).is_err());
    }

    #[test]
    fn torus_wraparound_distance() {
        let s = Space::torus(1, 10.0).unwrap();
        let d = s.distance(&Point::d1(0.5), &Point::d1(9.8));
        assert_abs_diff_eq!(d, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(s.distance(&Point::d1(4.0), &Point::d1(4.0)), 0.0);
    }

    #[test]
    fn hyperbolic_distance_matches_geodesic_oracle() {
        let s = Space::hyperbolic(2.0, 0.0).unwrap();
        let d = s.distance(&Point::d2(0.0, 0.0), &Point::d2(0.5, 0.0));
        // 2 artanh(1/2) = ln 3, frozen
        assert_abs_diff_eq!(d, 1.0986122886681098, epsilon = 1e-9);
        assert_abs_diff_eq!(d, radial_distance_oracle(0.5), epsilon = 1e-9);
        // an off-axis pair cross-checked against the Mobius pullback of the
        // radial oracle
        let (zx, zy) = mobius_recenter(0.3, 0.2, -0.1, 0.4);
        let eu = (zx * zx + zy * zy).sqrt();
        let d2 = s.distance(&Point::d2(0.3, 0.2), &Point::d2(-0.1, 0.4));
        assert_abs_diff_eq!(d2, radial_distance_oracle(eu), epsilon = 1e-9);
    }

    #[test]
    fn translate_examples() {
        let s = Space::torus(2, 10.0).unwrap();
        let q = s
            .translate(&Displacement::d2(3.0, 4.0), &Point::d2(8.0, 8.0))
            .unwrap();
        assert_abs_diff_eq!(q.coords[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.coords[1], 2.0, epsilon = 1e-12);
        let id = s
            .translate(&Displacement::d2(0.0, 0.0), &Point::d2(3.0, 7.0))
            .unwrap();
        assert_eq!(id, Point::d2(3.0, 7.0));

        let cyl = Space::cyl_z(20.0, 40).unwrap();
        let q = cyl
            .translate(
                &Displacement::d1(1.5).with_level(2),
                &Point::d1(19.0).with_level(39),
            )
            .unwrap();
        assert_abs_diff_eq!(q.coords[0], 0.5, epsilon = 1e-12);
        assert_eq!(q.level, Some(1));
    }

    #[test]
    fn hyperbolic_translate_is_rotation_only() {
        let s = Space::hyperbolic(2.0, 0.0).unwrap();
        let p = Point::d2(0.3, 0.0);
        assert!(s.translate(&Displacement::d2(0.1, 0.0), &p).is_err());
        let q = s
            .translate(&Displacement::rotation(std::f64::consts::FRAC_PI_2), &p)
            .unwrap();
        assert_abs_diff_eq!(q.coords[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.coords[1], 0.3, epsilon = 1e-12);
    }

    #[test]
    fn translation_preserves_distances() {
        let spaces = [
            Space::torus(1, 10.0).unwrap(),
            Space::torus(2, 10.0).unwrap(),
            Space::torus(3, 5.0).unwrap(),
            Space::cyl_z(20.0, 40).unwrap(),
            Space::cyl_r(20.0, 8.0).unwrap(),
        ];
        let mut rng = crate::rng::stream_rng(3, 1, 0);
        for s in &spaces {
            for _ in 0..200 {
                let a = s.sample_uniform(&mut rng);
                let b = s.sample_uniform(&mut rng);
                let mut g = Displacement::shift([
                    rng.random::<f64>() * 7.0,
                    rng.random::<f64>() * 7.0,
                    rng.random::<f64>() * 3.0,
                ]);
                if s.has_levels() {
                    g = g.with_level(rng.random_range(0..40));
                }
                let ta = s.translate(&g, &a).unwrap();
                let tb = s.translate(&g, &b).unwrap();
                assert_abs_diff_eq!(s.distance(&a, &b), s.distance(&ta, &tb), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn triangle_inequality_sampled() {
        let spaces = [
            Space::torus(2, 10.0).unwrap(),
            Space::torus(3, 6.0).unwrap(),
            Space::cyl_z(20.0, 40).unwrap(),
            Space::hyperbolic(2.0, 0.1).unwrap(),
        ];
        let mut rng = crate::rng::stream_rng(4, 1, 0);
        for s in &spaces {
            for _ in 0..2500 {
                let a = s.sample_uniform(&mut rng);
                let b = s.sample_uniform(&mut rng);
                let c = s.sample_uniform(&mut rng);
                let ab = s.distance(&a, &b);
                let bc = s.distance(&b, &c);
                let ac = s.distance(&a, &c);
                assert!(
                    ac <= ab + bc + 1e-9,
                    "triangle violated on {}",
                    s.descriptor()
                );
                assert!(ab >= 0.0 && (a != b || ab == 0.0));
            }
        }
    }

    #[test]
    fn uniform_sampling_moments() {
        let s = Space::torus(1, 10.0).unwrap();
        let mut rng = crate::rng::stream_rng(5, 1, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| s.sample_uniform(&mut rng).coords[0])
            .sum::<f64>()
            / n as f64;
        // sd of the mean is (10/sqrt(12))/sqrt(n)
        let se = 10.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn hyperbolic_sampling_radial_law() {
        // fraction of draws within hyperbolic radius 1 equals the area ratio
        let s = Space::hyperbolic(2.0, 0.0).unwrap();
        let ratio = hyperbolic_area_oracle(1.0) / hyperbolic_area_oracle(2.0);
        assert_abs_diff_eq!(ratio, 0.19661193324148182, epsilon = 1e-9);
        let mut rng = crate::rng::stream_rng(6, 1, 0);
        let n = 100_000;
        let o = s.origin();
        let hits = (0..n)
            .filter(|_| s.distance(&o, &s.sample_uniform(&mut rng)) < 1.0)
            .count();
        let frac = hits as f64 / n as f64;
        let se = (ratio * (1.0 - ratio) / n as f64).sqrt();
        assert!((frac - ratio).abs() < 4.0 * se, "frac {frac} vs {ratio}");
        // and every draw lands in the window
        for _ in 0..1000 {
            assert!(s.contains(&s.sample_uniform(&mut rng)));
        }
    }

    #[test]
    fn region_volume_additivity() {
        let s = Space::torus(2, 10.0).unwrap();
        let a = Region::Box {
            lo: [0.0; 3],
            hi: [3.0, 2.0, 0.0],
            level: None,
        };
        let b = Region::Box {
            lo: [3.0, 0.0, 0.0],
            hi: [5.0, 2.0, 0.0],
            level: None,
        };
        let union = Region::Box {
            lo: [0.0; 3],
            hi: [5.0, 2.0, 0.0],
            level: None,
        };
        assert_abs_diff_eq!(a.volume(&s) + b.volume(&s), union.volume(&s));
        assert!(!a.intersects(&b, &s)); // half-open boxes share only a face
    }

    #[test]
    fn descriptor_round_trip() {
        for d in [
            "torus1:20",
            "torus2:10",
            "torus3:5",
            "cyl:20:40",
            "cylR:20:8",
            "hyp:2:0.1",
            "lat2:1",
        ] {
            let s = Space::parse(d).unwrap();
            assert_eq!(Space::parse(&s.descriptor()).unwrap(), s);
        }
        assert!(Space::parse("torus2:-1").is_err());
        assert!(Space::parse("blah:3").is_err());
    }
}
