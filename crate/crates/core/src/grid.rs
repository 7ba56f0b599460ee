//! Uniform-grid neighbour index over a point slice. Cells are at least as
//! wide as the query radius, so a query only has to visit the 3^d ring around
//! the query point's cell. Periodic axes wrap; the hyperbolic disk falls back
//! to a single bucket (windows there are small).
//!
//! Results are always identical to the all-pairs scan; the index is an
//! optimization only, and the graph builders assert as much in tests.

use crate::space::{Point, Space, SpaceKind};
use std::collections::HashMap;

pub(crate) struct NeighborGrid<'a> {
    space: &'a Space,
    points: &'a [Point],
    radius: f64,
    cell: [f64; 3],
    ncells: [i64; 3],
    level_cell: f64,
    nlevel_cells: i64,
    buckets: HashMap<[i64; 4], Vec<u32>>,
}

impl<'a> NeighborGrid<'a> {
    pub fn new(space: &'a Space, points: &'a [Point], radius: f64) -> Self {
        assert!(radius > 0.0);
        let sides = space.sides();
        let mut cell = [f64::INFINITY; 3];
        let mut ncells = [1i64; 3];
        if !matches!(space.kind, SpaceKind::Hyperbolic { .. }) {
            for (i, s) in sides.iter().enumerate() {
                let n = (s / radius).floor().max(1.0) as i64;
                ncells[i] = n;
                cell[i] = s / n as f64;
            }
        }
        // the level axis is binned like a continuous axis of length `levels`
        // so the +-1 cell ring stays correct under wraparound
        let (level_cell, nlevel_cells) = match space.kind {
            SpaceKind::CylZ { levels, .. } => {
                let n = ((levels as f64) / radius).floor().max(1.0) as i64;
                (levels as f64 / n as f64, n)
            }
            _ => (1.0, 1),
        };
        let mut grid = NeighborGrid {
            space,
            points,
            radius,
            cell,
            ncells,
            level_cell,
            nlevel_cells,
            buckets: HashMap::new(),
        };
        for (idx, p) in points.iter().enumerate() {
            let key = grid.key(p);
            grid.buckets.entry(key).or_default().push(idx as u32);
        }
        grid
    }

    fn key(&self, p: &Point) -> [i64; 4] {
        let mut k = [0i64; 4];
        for i in 0..self.space.dim() {
            if self.ncells[i] > 1 {
                k[i] = ((p.coords[i] / self.cell[i]).floor() as i64).rem_euclid(self.ncells[i]);
            }
        }
        if self.nlevel_cells > 1 {
            k[3] = ((p.level.unwrap_or(0) as f64 / self.level_cell).floor() as i64)
                .rem_euclid(self.nlevel_cells);
        }
        k
    }

    /// Indices of all points within `radius` of `p` (possibly including `p`
    /// itself when it is part of the indexed slice).
    pub fn neighbors_within(&self, p: &Point, out: &mut Vec<u32>) {
        out.clear();
        let center = self.key(p);
        let dim = self.space.dim();
        let mut ring: Vec<[i64; 4]> = vec![center];
        for axis in 0..dim {
            if self.ncells[axis] > 1 {
                let mut next = Vec::with_capacity(ring.len() * 3);
                for k in &ring {
                    for off in [-1i64, 0, 1] {
                        let mut kk = *k;
                        kk[axis] = (k[axis] + off).rem_euclid(self.ncells[axis]);
                        next.push(kk);
                    }
                }
                ring = next;
            }
        }
        if self.nlevel_cells > 1 {
            let mut next = Vec::with_capacity(ring.len() * 3);
            for k in &ring {
                for off in [-1i64, 0, 1] {
                    let mut kk = *k;
                    kk[3] = (k[3] + off).rem_euclid(self.nlevel_cells);
                    next.push(kk);
                }
            }
            ring = next;
        }
        ring.sort_unstable();
        ring.dedup();
        for k in ring {
            if let Some(bucket) = self.buckets.get(&k) {
                for &j in bucket {
                    if self.space.distance(p, &self.points[j as usize]) <= self.radius {
                        out.push(j);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}
