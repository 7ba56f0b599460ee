//! Text formats. `PPC1` serialises a configuration (header plus one point
//! per line, coordinates then optional level then optional mark, 17
//! significant digits so floats round-trip exactly); `PPG1` wraps a PPC1
//! block with an edge list. `#` lines are comments.

use crate::error::{Error, Result};
use crate::graph::FactorGraph;
use crate::process::Configuration;
use crate::report::fmt;
use crate::space::{Point, Space};

pub fn write_ppc(config: &Configuration) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "PPC1 {} marked={} n={}\n",
        config.space.descriptor(),
        if config.marked { 1 } else { 0 },
        config.len()
    ));
    for p in &config.points {
        out.push_str(&point_line(&config.space, p, config.marked));
        out.push('\n');
    }
    out
}

fn point_line(space: &Space, p: &Point, marked: bool) -> String {
    let mut cols: Vec<String> = (0..space.dim()).map(|a| fmt(p.coords[a])).collect();
    if space.has_levels() {
        cols.push(p.level.unwrap_or(0).to_string());
    }
    if marked {
        cols.push(fmt(p.mark.unwrap()));
    }
    cols.join(" ")
}

pub fn read_ppc(text: &str) -> Result<Configuration> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let perr = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    if parts.len() != 4 || parts[0] != "PPC1" {
        return Err(perr(
            hline,
            "expected `PPC1 <space> marked=<0|1> n=<count>`",
        ));
    }
    let space = Space::parse(parts[1])?;
    let marked = match parts[2] {
        "marked=0" => false,
        "marked=1" => true,
        _ => return Err(perr(hline, "expected marked=0 or marked=1")),
    };
    let n: usize = parts[3]
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(hline, "expected n=<count>"))?;
    let mut points = Vec::with_capacity(n);
    let mut want_cols = space.dim();
    if space.has_levels() {
        want_cols += 1;
    }
    if marked {
        want_cols += 1;
    }
    for _ in 0..n {
        let (lno, line) = lines.next().ok_or_else(|| Error::Parse {
            line: text.lines().count(),
            msg: format!("truncated: expected {n} points"),
        })?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != want_cols {
            return Err(perr(
                lno,
                &format!("expected {want_cols} columns, found {}", cols.len()),
            ));
        }
        let mut p = Point::new([0.0; 3]);
        let mut k = 0;
        for a in 0..space.dim() {
            p.coords[a] = cols[k].parse().map_err(|_| perr(lno, "bad coordinate"))?;
            k += 1;
        }
        if space.has_levels() {
            p.level = Some(cols[k].parse().map_err(|_| perr(lno, "bad level"))?);
            k += 1;
        }
        if marked {
            p.mark = Some(cols[k].parse().map_err(|_| perr(lno, "bad mark"))?);
        }
        points.push(p);
    }
    if let Some((lno, _)) = lines.next() {
        return Err(perr(lno, "trailing content after the declared points"));
    }
    Configuration::new(space, points, marked)
}

pub fn write_ppg(config: &Configuration, graph: &FactorGraph) -> Result<String> {
    if graph.n != config.len() {
        return Err(Error::precondition(
            "graph does not match the configuration",
        ));
    }
    let mut out = format!("PPG1 n={} m={}\n", graph.n, graph.edge_count());
    out.push_str(&write_ppc(config));
    for &(i, j) in &graph.edges {
        out.push_str(&format!("{i} {j}\n"));
    }
    Ok(out)
}

pub fn read_ppg(text: &str) -> Result<(Configuration, FactorGraph)> {
    let mut line_no = 0usize;
    let mut lines = text.lines();
    let header = loop {
        let l = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        line_no += 1;
        if !l.trim().is_empty() && !l.trim_start().starts_with('#') {
            break l;
        }
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let perr = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    if parts.len() != 3 || parts[0] != "PPG1" {
        return Err(perr(line_no, "expected `PPG1 n=<points> m=<edges>`"));
    }
    let n: usize = parts[1]
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(line_no, "expected n=<points>"))?;
    let m: usize = parts[2]
        .strip_prefix("m=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(line_no, "expected m=<edges>"))?;
    let rest: Vec<&str> = lines.collect();
    // the configuration block is everything up to the last m edge lines
    let mut config_lines = Vec::new();
    let mut edge_lines = Vec::new();
    let mut content = 0usize;
    for l in &rest {
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            continue;
        }
        content += 1;
        if content <= n + 1 {
            config_lines.push(*l);
        } else {
            edge_lines.push(*l);
        }
    }
    let config = read_ppc(&config_lines.join("\n"))?;
    if config.len() != n {
        return Err(perr(
            line_no,
            "configuration size does not match the PPG1 header",
        ));
    }
    if edge_lines.len() != m {
        return Err(perr(
            line_no,
            &format!("expected {m} edge lines, found {}", edge_lines.len()),
        ));
    }
    let mut edges = Vec::with_capacity(m);
    for (k, l) in edge_lines.iter().enumerate() {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(perr(line_no + n + 2 + k, "expected `i j`"));
        }
        let i: u32 = cols[0]
            .parse()
            .map_err(|_| perr(line_no + n + 2 + k, "bad index"))?;
        let j: u32 = cols[1]
            .parse()
            .map_err(|_| perr(line_no + n + 2 + k, "bad index"))?;
        edges.push((i, j));
    }
    let graph = FactorGraph::new(n, edges, false)?;
    Ok((config, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::distance_graph;
    use crate::process::ProcessSpec;

    #[test]
    fn ppc_round_trip_exact() {
        for desc in ["torus2:10", "torus1:20", "cyl:20:40", "torus3:5"] {
            let space = Space::parse(desc).unwrap();
            for r in 0..25 {
                let spec = ProcessSpec::parse("poisson:0.8|mark").unwrap();
                let c = spec.sample_replica(&space, 90, r).unwrap();
                let text = write_ppc(&c);
                let back = read_ppc(&text).unwrap();
                assert_eq!(back.marked, c.marked);
                assert_eq!(back.points, c.points, "exact round trip on {desc}");
                // and the serialisation is bit-stable
                assert_eq!(write_ppc(&back), text);
            }
        }
    }

    #[test]
    fn ppc_comments_ignored() {
        let space = Space::parse("torus2:10").unwrap();
        let c = ProcessSpec::poisson(0.5)
            .sample_replica(&space, 91, 0)
            .unwrap();
        let text = write_ppc(&c);
        let commented = format!(
            "# header comment\n{}",
            text.replace('\n', "\n# mid comment\n")
        );
        let back = read_ppc(&commented).unwrap();
        assert_eq!(back.points, c.points);
    }

    #[test]
    fn ppc_error_cases() {
        // truncated
        let err = read_ppc("PPC1 torus2:10 marked=0 n=2\n1.0 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        // marked flag mismatch with columns
        let err = read_ppc("PPC1 torus2:10 marked=1 n=1\n1.0 1.0\n").unwrap_err();
        assert!(err.to_string().contains("columns"), "{err}");
        // out-of-window points
        let err = read_ppc("PPC1 torus2:10 marked=0 n=1\n11.0 1.0\n").unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
        // malformed header
        assert!(read_ppc("PPC 1 torus2:10\n").is_err());
        // trailing garbage
        assert!(read_ppc("PPC1 torus2:10 marked=0 n=1\n1.0 1.0\n2.0 2.0\n").is_err());
    }

    #[test]
    fn ppg_round_trip() {
        let space = Space::parse("torus2:10").unwrap();
        let c = ProcessSpec::poisson(1.0)
            .sample_replica(&space, 92, 0)
            .unwrap();
        let g = distance_graph(&c, 1.5).unwrap();
        let text = write_ppg(&c, &g).unwrap();
        let (c2, g2) = read_ppg(&text).unwrap();
        assert_eq!(c2.points, c.points);
        assert_eq!(g2.edges, g.edges);
    }
}
