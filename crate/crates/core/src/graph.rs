//! Factor-graph builders over configurations (distance, Cayley, nearest
//! neighbour, vertical edges, lifts, edge percolation), a union-find
//! connectivity pass, and the Palm mean-degree estimator.

use crate::error::{Error, Result};
use crate::grid::NeighborGrid;
use crate::parallel::run_replicas;
use crate::process::{lex_less, Configuration, ProcessSpec};
use crate::report::EstimateReport;
use crate::space::{Displacement, Point, Space, SpaceKind};
use std::collections::HashSet;

/// Threshold above which the distance builder switches to the spatial index.
/// Both paths produce identical edge lists.
const ALL_PAIRS_LIMIT: usize = 10_000;

/// Edges over the indices of a configuration. Undirected graphs store each
/// edge once as `(i, j)` with `i < j`; directed graphs store ordered pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub directed: bool,
}

impl FactorGraph {
    pub fn new(n: usize, mut edges: Vec<(u32, u32)>, directed: bool) -> Result<FactorGraph> {
        if !directed {
            for e in edges.iter_mut() {
                if e.0 > e.1 {
                    *e = (e.1, e.0);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for &(i, j) in &edges {
            if i == j {
                return Err(Error::precondition(format!("self-loop at vertex {i}")));
            }
            if i as usize >= n || j as usize >= n {
                return Err(Error::precondition(format!(
                    "edge ({i},{j}) out of range {n}"
                )));
            }
        }
        Ok(FactorGraph { n, edges, directed })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected degree sequence (directed edges count once at each end).
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for &(i, j) in &self.edges {
            deg[i as usize] += 1;
            deg[j as usize] += 1;
        }
        deg
    }

    /// Out-degree sequence of a directed graph.
    pub fn out_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for &(i, _) in &self.edges {
            deg[i as usize] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for &(_, j) in &self.edges {
            deg[j as usize] += 1;
        }
        deg
    }

    /// Forget orientations and collapse duplicate edges.
    pub fn to_undirected(&self) -> FactorGraph {
        FactorGraph::new(self.n, self.edges.clone(), false).expect("valid edges stay valid")
    }

    /// Union of two edge sets over the same vertex set.
    pub fn union(&self, other: &FactorGraph) -> Result<FactorGraph> {
        if self.n != other.n {
            return Err(Error::precondition(
                "graph union over different vertex sets",
            ));
        }
        let mut edges = self.edges.clone();
        edges.extend(&other.edges);
        FactorGraph::new(self.n, edges, self.directed && other.directed)
    }
}

/// Distance-R factor graph: an edge whenever `d(g, h) <= R`.
pub fn distance_graph(config: &Configuration, r: f64) -> Result<FactorGraph> {
    if !(r > 0.0) {
        return Err(Error::precondition(format!("nonpositive graph radius {r}")));
    }
    if !matches!(config.space.kind, SpaceKind::Hyperbolic { .. }) && r >= config.space.half_extent()
    {
        return Err(Error::precondition(format!(
            "graph radius {r} is not below half the window side"
        )));
    }
    let n = config.len();
    let mut edges = Vec::new();
    if n <= ALL_PAIRS_LIMIT {
        for i in 0..n {
            for j in (i + 1)..n {
                if config.space.distance(&config.points[i], &config.points[j]) <= r {
                    edges.push((i as u32, j as u32));
                }
            }
        }
    } else {
        let grid = NeighborGrid::new(&config.space, &config.points, r);
        let mut near = Vec::new();
        for (i, p) in config.points.iter().enumerate() {
            grid.neighbors_within(p, &mut near);
            for &j in &near {
                if (j as usize) > i {
                    edges.push((i as u32, j));
                }
            }
        }
    }
    FactorGraph::new(n, edges, false)
}

/// Cayley factor graph of a lattice shift: edges `(g, gs)` for each
/// generator displacement. Errors when some translate is missing from the
/// configuration (non-lattice input).
pub fn cayley_graph(config: &Configuration, generators: &[Displacement]) -> Result<FactorGraph> {
    let space = &config.space;
    let n = config.len();
    let mut edges = Vec::new();
    for (i, g) in config.points.iter().enumerate() {
        for s in generators {
            let target = space.translate(s, g)?;
            let j = config
                .points
                .iter()
                .position(|p| space.points_eq(p, &target))
                .ok_or_else(|| {
                    Error::precondition(format!(
                        "not a lattice shift: {:?} has no neighbour at generator offset",
                        g.coords
                    ))
                })?;
            edges.push((i as u32, j as u32));
        }
    }
    FactorGraph::new(n, edges, false)
}

/// Generators `{+-e_a * spacing}` of the grid lattice.
pub fn grid_generators(dim: usize, spacing: f64) -> Vec<Displacement> {
    let mut gens = Vec::new();
    for a in 0..dim {
        for sign in [1.0, -1.0] {
            let mut c = [0.0; 3];
            c[a] = sign * spacing;
            gens.push(Displacement::shift(c));
        }
    }
    gens
}

/// Directed k-nearest-neighbour graph with the Voronoi tie-break.
pub fn nn_graph(config: &Configuration, k: usize) -> Result<FactorGraph> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let n = config.len();
    if n <= k {
        return Err(Error::precondition(format!(
            "need more than k={k} points, have {n}"
        )));
    }
    let space = &config.space;
    let mut edges = Vec::with_capacity(n * k);
    for (i, p) in config.points.iter().enumerate() {
        let mut order: Vec<(f64, Displacement, u32)> = config
            .points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, q)| (space.distance(p, q), space.displacement(p, q), j as u32))
            .collect();
        order.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                if lex_less(&a.1, &b.1) {
                    std::cmp::Ordering::Less
                } else if lex_less(&b.1, &a.1) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
        });
        for (_, _, j) in order.into_iter().take(k) {
            edges.push((i as u32, j));
        }
    }
    FactorGraph::new(n, edges, true)
}

/// Keep an edge iff the endpoint marks sum to less than `eps` modulo one.
/// Symmetric in the endpoints, monotone in `eps` for fixed marks.
pub fn percolate_edges(
    graph: &FactorGraph,
    config: &Configuration,
    eps: f64,
) -> Result<FactorGraph> {
    if !config.marked {
        return Err(Error::precondition(
            "edge percolation needs a marked configuration",
        ));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::precondition(format!(
            "percolation parameter {eps} outside [0,1]"
        )));
    }
    if graph.n != config.len() {
        return Err(Error::precondition(
            "graph does not match the configuration",
        ));
    }
    let survives = |i: u32, j: u32| {
        let a = config.points[i as usize].mark.unwrap();
        let b = config.points[j as usize].mark.unwrap();
        (a + b).rem_euclid(1.0) < eps
    };
    let edges = graph
        .edges
        .iter()
        .copied()
        .filter(|&(i, j)| survives(i, j))
        .collect();
    FactorGraph::new(graph.n, edges, graph.directed)
}

/// Group the points of a cylinder configuration into vertical columns;
/// errors unless every column occupies all levels (the vertical-coupling
/// structure).
fn column_structure(config: &Configuration) -> Result<Vec<Vec<u32>>> {
    let levels = config
        .space
        .levels()
        .ok_or_else(|| Error::precondition("vertical edges need a discrete cylinder"))?
        as usize;
    let mut columns: Vec<(f64, Vec<u32>)> = Vec::new();
    for (i, p) in config.points.iter().enumerate() {
        match columns
            .iter_mut()
            .find(|(x, _)| (*x - p.coords[0]).abs() <= 1e-9)
        {
            Some((_, v)) => v.push(i as u32),
            None => columns.push((p.coords[0], vec![i as u32])),
        }
    }
    let mut out = Vec::with_capacity(columns.len());
    for (x, mut v) in columns {
        if v.len() != levels {
            return Err(Error::precondition(format!(
                "configuration is not vertical: column at {x} occupies {} of {levels} levels",
                v.len()
            )));
        }
        v.sort_by_key(|&i| config.points[i as usize].level.unwrap());
        out.push(v);
    }
    Ok(out)
}

/// Vertical edges (g, l) -- (g, l+1 mod levels) of a vertical configuration.
pub fn vertical_edges(config: &Configuration) -> Result<FactorGraph> {
    let columns = column_structure(config)?;
    let levels = config.space.levels().unwrap() as usize;
    let mut edges = Vec::new();
    for col in &columns {
        for l in 0..levels {
            let a = col[l];
            let b = col[(l + 1) % levels];
            if a != b {
                edges.push((a, b));
            }
        }
    }
    FactorGraph::new(config.len(), edges, false)
}

/// Copy each base edge onto every level of a vertical configuration built by
/// `vertical_coupling` (base point i, level l sits at index i*levels + l).
pub fn lift_graph(base: &FactorGraph, cyl: &Configuration) -> Result<FactorGraph> {
    let levels = cyl
        .space
        .levels()
        .ok_or_else(|| Error::precondition("graph lift needs a discrete cylinder"))?
        as usize;
    if base.n * levels != cyl.len() {
        return Err(Error::precondition(
            "cylinder configuration is not the vertical coupling of the base",
        ));
    }
    let mut edges = Vec::with_capacity(base.edge_count() * levels);
    for &(i, j) in &base.edges {
        for l in 0..levels {
            edges.push((i * levels as u32 + l as u32, j * levels as u32 + l as u32));
        }
    }
    FactorGraph::new(cyl.len(), edges, base.directed)
}

/// Connectivity labelling of a factor graph.
#[derive(Clone, Debug)]
pub struct ComponentReport {
    pub component_count: usize,
    pub largest: usize,
    pub connected: bool,
    pub labels: Vec<u32>,
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            self.parent[i as usize] = self.parent[self.parent[i as usize] as usize];
            i = self.parent[i as usize];
        }
        i
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

pub fn connected_components(graph: &FactorGraph) -> ComponentReport {
    let n = graph.n;
    let mut uf = UnionFind::new(n);
    for &(i, j) in &graph.edges {
        uf.union(i, j);
    }
    let mut labels = vec![0u32; n];
    let mut roots: Vec<u32> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = uf.find(i as u32);
        let pos = match roots.iter().position(|&x| x == r) {
            Some(p) => p,
            None => {
                roots.push(r);
                sizes.push(0);
                roots.len() - 1
            }
        };
        labels[i] = pos as u32;
        sizes[pos] += 1;
    }
    let component_count = roots.len();
    ComponentReport {
        component_count,
        largest: sizes.iter().copied().max().unwrap_or(0),
        connected: component_count == 1,
        labels,
    }
}

/// A named rule producing a factor graph per configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphingRule {
    Distance {
        r: f64,
    },
    /// grid Cayley graph with generators `{+-e_a * spacing}`
    CayleyGrid {
        spacing: f64,
    },
    Nn {
        k: usize,
    },
}

impl GraphingRule {
    pub fn parse(desc: &str) -> Result<GraphingRule> {
        let err = |msg: &str| Error::Descriptor(desc.to_string(), msg.to_string());
        let parts: Vec<&str> = desc.split(':').collect();
        match parts.as_slice() {
            ["dist", r] => Ok(GraphingRule::Distance {
                r: r.parse().map_err(|_| err("expected a radius"))?,
            }),
            ["cayley", s] => Ok(GraphingRule::CayleyGrid {
                spacing: s.parse().map_err(|_| err("expected a spacing"))?,
            }),
            ["nn", k] => Ok(GraphingRule::Nn {
                k: k.parse().map_err(|_| err("expected k"))?,
            }),
            _ => Err(err("unknown graphing rule")),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            GraphingRule::Distance { r } => format!("dist:{r}"),
            GraphingRule::CayleyGrid { spacing } => format!("cayley:{spacing}"),
            GraphingRule::Nn { k } => format!("nn:{k}"),
        }
    }

    pub fn build(&self, config: &Configuration) -> Result<FactorGraph> {
        match self {
            GraphingRule::Distance { r } => distance_graph(config, *r),
            GraphingRule::CayleyGrid { spacing } => {
                cayley_graph(config, &grid_generators(config.space.dim(), *spacing))
            }
            GraphingRule::Nn { k } => Ok(nn_graph(config, *k)?.to_undirected()),
        }
    }
}

/// Palm mean degree of a graphing rule over seeded replicas:
/// `E0[deg] = E[ sum_{x in U} deg_x ] / (intensity vol(U))` on the full
/// window, with replica stderr.
pub fn degree_stats(
    spec: &ProcessSpec,
    space: &Space,
    rule: &GraphingRule,
    intensity: Option<f64>,
    replicas: u64,
    seed: u64,
) -> Result<EstimateReport> {
    let rows: Vec<(f64, f64)> = run_replicas(replicas, |r| {
        let config = spec
            .sample_replica(space, seed, r)
            .expect("sampling failed");
        if config.is_empty() {
            return (0.0, 0.0);
        }
        let graph = rule.build(&config).expect("graph build failed");
        let degsum: u64 = graph.degrees().iter().map(|&d| d as u64).sum();
        (degsum as f64, config.len() as f64)
    });
    let t = match intensity.or_else(|| spec.known_intensity()) {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(Error::precondition("zero-intensity process")),
        None => {
            let mean: f64 = rows.iter().map(|r| r.1).sum::<f64>() / replicas as f64;
            if mean == 0.0 {
                return Err(Error::precondition("empty process"));
            }
            mean / space.volume()
        }
    };
    let vol = space.volume();
    let vals: Vec<f64> = rows.iter().map(|r| r.0 / (t * vol)).collect();
    let s = crate::stats::summarize(&vals);
    Ok(EstimateReport {
        name: format!("palm_degree[{}]", rule.descriptor()),
        estimate: s.mean,
        stderr: s.stderr,
        replicas,
        seed,
        space: space.descriptor(),
        window_volume: vol,
    })
}

/// Pooled edge-survival census of the mod-1 mark percolation over seeded
/// replicas, including a shared-marks monotonicity check at eps/2 vs eps.
#[derive(Clone, Debug)]
pub struct PercolationPopulation {
    pub total_edges: u64,
    pub survivors: u64,
    pub monotone: bool,
}

pub fn iid_percolation_population(
    space: &Space,
    t: f64,
    graph_radius: f64,
    eps: f64,
    replicas: u64,
    seed: u64,
) -> Result<PercolationPopulation> {
    use std::collections::HashSet;
    let rows: Vec<(u64, u64, bool)> = run_replicas(replicas, |r| {
        let mut rng = crate::rng::stream_rng(seed, crate::rng::roles::SAMPLE, r);
        let c = crate::process::sample_poisson(space, t, &mut rng).expect("sampling failed");
        let m = crate::process::iid_mark(&c, &mut rng).expect("marking failed");
        let g = distance_graph(&m, graph_radius).expect("graph build failed");
        let kept = percolate_edges(&g, &m, eps).expect("percolation failed");
        let half: HashSet<(u32, u32)> = percolate_edges(&g, &m, eps / 2.0)
            .expect("percolation failed")
            .edges
            .into_iter()
            .collect();
        let full: HashSet<(u32, u32)> = kept.edges.iter().copied().collect();
        (
            g.edge_count() as u64,
            full.len() as u64,
            half.is_subset(&full),
        )
    });
    Ok(PercolationPopulation {
        total_edges: rows.iter().map(|r| r.0).sum(),
        survivors: rows.iter().map(|r| r.1).sum(),
        monotone: rows.iter().all(|r| r.2),
    })
}

/// Translation covariance probe used in tests: build-after-translate equals
/// translate-after-build (as index pairs, since translation keeps order).
pub fn translated_copy(config: &Configuration, g: &Displacement) -> Result<Configuration> {
    let moved: Vec<Point> = config
        .points
        .iter()
        .map(|p| config.space.translate(g, p))
        .collect::<Result<_>>()?;
    Configuration::new(config.space.clone(), moved, config.marked)
}

/// Convenience for tests: assert no duplicate undirected edges.
pub fn has_duplicate_edges(graph: &FactorGraph) -> bool {
    let mut seen = HashSet::new();
    for &e in &graph.edges {
        let key = if graph.directed || e.0 < e.1 {
            e
        } else {
            (e.1, e.0)
        };
        if !seen.insert(key) {
            return true;
        }
    }
    false
}
