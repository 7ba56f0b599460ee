//! Minimal SVG rendering: points as circles, edges as line segments, marks
//! as a colour ramp. Edges that wrap around the torus are skipped rather
//! than drawn across the window.

use ppsim::graph::FactorGraph;
use ppsim::process::Configuration;
use ppsim::space::SpaceKind;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

fn mark_colour(mark: Option<f64>) -> String {
    match mark {
        Some(m) => format!("hsl({:.0},80%,45%)", 240.0 * (1.0 - m.clamp(0.0, 1.0))),
        None => "#1f4e79".to_string(),
    }
}

pub fn render_svg(config: &Configuration, graph: Option<&FactorGraph>) -> String {
    let (w, h, map): (f64, f64, Box<dyn Fn(&ppsim::space::Point) -> (f64, f64)>) =
        match &config.space.kind {
            SpaceKind::Torus { dim: 1, side } => {
                let s = *side;
                (s, 1.0, Box::new(move |p| (p.coords[0], 0.5)))
            }
            SpaceKind::CylZ { side, levels } => {
                let lv = *levels as f64;
                let s = *side;
                let _ = s;
                (
                    s,
                    lv,
                    Box::new(move |p| (p.coords[0], p.level.unwrap_or(0) as f64 + 0.5)),
                )
            }
            SpaceKind::CylR { side, height } => {
                let (_s, _h) = (*side, *height);
                (
                    *side,
                    *height,
                    Box::new(move |p| (p.coords[0], p.coords[1])),
                )
            }
            SpaceKind::Hyperbolic { .. } => (
                2.0,
                2.0,
                Box::new(move |p| (p.coords[0] + 1.0, p.coords[1] + 1.0)),
            ),
            SpaceKind::Torus { side, .. } => {
                let s = *side;
                let _ = s;
                (*side, *side, Box::new(move |p| (p.coords[0], p.coords[1])))
            }
            SpaceKind::LatticeOrbit { .. } => {
                let s = config.space.lattice_side();
                (s, s, Box::new(move |p| (p.coords[0], p.coords[1])))
            }
        };
    let scale = (SIZE - 2.0 * MARGIN) / w.max(h);
    let to_px = |x: f64, y: f64| (MARGIN + x * scale, MARGIN + (h - y) * scale);
    let width = MARGIN * 2.0 + w * scale;
    let height = MARGIN * 2.0 + h * scale;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.1} {height:.1}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
    );
    if let Some(g) = graph {
        for &(i, j) in &g.edges {
            let (xi, yi) = map(&config.points[i as usize]);
            let (xj, yj) = map(&config.points[j as usize]);
            // wraparound edges would smear across the whole window
            if (xi - xj).abs() > w / 2.0 || (yi - yj).abs() > h / 2.0 {
                continue;
            }
            let (x1, y1) = to_px(xi, yi);
            let (x2, y2) = to_px(xj, yj);
            svg.push_str(&format!(
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
                 stroke=\"#999999\" stroke-width=\"1\"/>\n"
            ));
        }
    }
    for p in &config.points {
        let (x, y) = map(p);
        let (cx, cy) = to_px(x, y);
        svg.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"3\" fill=\"{}\"/>\n",
            mark_colour(p.mark)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
