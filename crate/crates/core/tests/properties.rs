//! Property tests for the metric and factor-map invariants.

use ppsim::graph::{distance_graph, percolate_edges};
use ppsim::io::{read_ppc, write_ppc};
use ppsim::process::{voronoi_assign, Configuration};
use ppsim::space::{Displacement, Point, Space};
use ppsim::weakconv::wobble_distance;
use proptest::prelude::*;

fn torus2_points(side: f64, max_n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..side, 0.0..side), 1..max_n)
}

fn build(space: &Space, pts: &[(f64, f64)], marks: Option<&[f64]>) -> Option<Configuration> {
    let points: Vec<Point> = pts
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let p = Point::d2(x, y);
            match marks {
                Some(m) => p.with_mark(m[i]),
                None => p,
            }
        })
        .collect();
    Configuration::new(space.clone(), points, marks.is_some()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms_on_torus(
        side in 4.0f64..24.0,
        pts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 3)
    ) {
        let space = Space::torus(2, side).unwrap();
        let p: Vec<Point> = pts.iter().map(|&(x, y)| Point::d2(x * side, y * side)).collect();
        let d01 = space.distance(&p[0], &p[1]);
        let d10 = space.distance(&p[1], &p[0]);
        let d02 = space.distance(&p[0], &p[2]);
        let d12 = space.distance(&p[1], &p[2]);
        prop_assert!((d01 - d10).abs() < 1e-12);
        prop_assert!(d01 >= 0.0);
        prop_assert!(d02 <= d01 + d12 + 1e-9);
    }

    #[test]
    fn translation_is_an_isometry(
        side in 4.0f64..24.0,
        a in (0.0..1.0f64, 0.0..1.0f64),
        b in (0.0..1.0f64, 0.0..1.0f64),
        g in (-30.0..30.0f64, -30.0..30.0f64)
    ) {
        let space = Space::torus(2, side).unwrap();
        let pa = Point::d2(a.0 * side, a.1 * side);
        let pb = Point::d2(b.0 * side, b.1 * side);
        let disp = Displacement::d2(g.0, g.1);
        let ta = space.translate(&disp, &pa).unwrap();
        let tb = space.translate(&disp, &pb).unwrap();
        prop_assert!(space.contains(&ta));
        prop_assert!((space.distance(&pa, &pb) - space.distance(&ta, &tb)).abs() < 1e-9);
    }

    #[test]
    fn ppc_round_trip_is_exact(
        pts in torus2_points(10.0, 40),
        marks in prop::collection::vec(0.0..1.0f64, 40)
    ) {
        let space = Space::torus(2, 10.0).unwrap();
        let m = &marks[..pts.len()];
        if let Some(config) = build(&space, &pts, Some(m)) {
            let text = write_ppc(&config);
            let back = read_ppc(&text).unwrap();
            prop_assert_eq!(&back.points, &config.points);
            prop_assert_eq!(write_ppc(&back), text);
        }
    }

    #[test]
    fn percolation_monotone_in_eps(
        pts in torus2_points(10.0, 40),
        marks in prop::collection::vec(0.0..1.0f64, 40),
        e1 in 0.0..1.0f64,
        e2 in 0.0..1.0f64
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let space = Space::torus(2, 10.0).unwrap();
        let m = &marks[..pts.len()];
        if let Some(config) = build(&space, &pts, Some(m)) {
            let g = distance_graph(&config, 2.5).unwrap();
            let a = percolate_edges(&g, &config, lo).unwrap();
            let b = percolate_edges(&g, &config, hi).unwrap();
            let bset: std::collections::HashSet<_> = b.edges.iter().copied().collect();
            prop_assert!(a.edges.iter().all(|e| bset.contains(e)));
        }
    }

    #[test]
    fn wobble_identity_and_symmetry(
        pts_a in torus2_points(10.0, 25),
        pts_b in torus2_points(10.0, 25)
    ) {
        let space = Space::torus(2, 10.0).unwrap();
        if let (Some(a), Some(b)) = (build(&space, &pts_a, None), build(&space, &pts_b, None)) {
            let self_w = wobble_distance(&a, &a, 4.0).unwrap();
            prop_assert!(self_w.feasible);
            prop_assert_eq!(self_w.eps, Some(0.0));
            let ab = wobble_distance(&a, &b, 4.0).unwrap();
            let ba = wobble_distance(&b, &a, 4.0).unwrap();
            prop_assert_eq!(ab.feasible, ba.feasible);
            if ab.feasible {
                prop_assert!((ab.eps.unwrap() - ba.eps.unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn voronoi_owner_is_nearest(
        pts in torus2_points(10.0, 30),
        q in (0.0..10.0f64, 0.0..10.0f64)
    ) {
        let space = Space::torus(2, 10.0).unwrap();
        if let Some(config) = build(&space, &pts, None) {
            let query = Point::d2(q.0, q.1);
            let owner = voronoi_assign(&config, &query).unwrap();
            let d = space.distance(&query, &config.points[owner]);
            for p in &config.points {
                prop_assert!(space.distance(&query, p) >= d - 1e-12);
            }
        }
    }
}
