use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;

use super::{GraphError, PoseGraph};
use crate::belief::PoseKey;
use crate::lie::Se2;

fn fields<const N: usize>(tokens: &[&str], line: usize, tag: &str) -> Result<[f64; N], GraphError> {
    if tokens.len() < N {
        return Err(GraphError::Parse {
            line,
            message: format!("{tag} needs {N} numeric fields, found {}", tokens.len()),
        });
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(tokens) {
        *o = t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| GraphError::Parse {
                line,
                message: format!("{tag}: bad number {t:?}"),
            })?;
    }
    Ok(out)
}

fn key(token: Option<&&str>, line: usize) -> Result<PoseKey, GraphError> {
    let t = token.ok_or_else(|| GraphError::Parse {
        line,
        message: "missing vertex id".into(),
    })?;
    t.parse().map_err(|_| GraphError::Parse {
        line,
        message: format!("bad vertex id {t:?}"),
    })
}

/// Parses g2o `VERTEX_SE2`/`EDGE_SE2` and TORO `VERTEX2`/`EDGE2` lines.
/// Edge information is the upper triangle `I11 I12 I13 I22 I23 I33`.
/// Unknown record types are counted and skipped.
pub fn parse_graph(text: &str) -> Result<PoseGraph, GraphError> {
    let mut g = PoseGraph::new();
    let mut skipped = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&tag) = tokens.first() else { continue };
        match tag {
            "VERTEX_SE2" | "VERTEX2" => {
                let id = key(tokens.get(1), line)?;
                let [x, y, th] = fields::<3>(&tokens[2..], line, tag)?;
                g.add_vertex(id, Se2::from_xy_theta(x, y, th))
                    .map_err(|e| GraphError::Parse {
                        line,
                        message: e.to_string(),
                    })?;
            }
            "EDGE_SE2" | "EDGE2" => {
                let from = key(tokens.get(1), line)?;
                let to = key(tokens.get(2), line)?;
                let v = fields::<9>(&tokens[3..], line, tag)?;
                let info = Matrix3::new(v[3], v[4], v[5], v[4], v[6], v[7], v[5], v[7], v[8]);
                g.add_edge(from, to, Se2::from_xy_theta(v[0], v[1], v[2]), info);
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unrecognized line(s)");
    }
    g.set_skipped(skipped);
    g.validate()?;
    Ok(g)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<PoseGraph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_graph(&text)
}

/// g2o text for `g`. Numbers use the shortest round-trip representation.
pub fn to_g2o(g: &PoseGraph) -> String {
    let mut s = String::new();
    for (k, v) in g.vertices() {
        let _ = writeln!(s, "VERTEX_SE2 {k} {} {} {}", v.x(), v.y(), v.theta());
    }
    for e in g.edges() {
        let m = &e.measurement;
        let i = &e.information;
        let _ = writeln!(
            s,
            "EDGE_SE2 {} {} {} {} {} {} {} {} {} {} {}",
            e.from,
            e.to,
            m.x(),
            m.y(),
            m.theta(),
            i[(0, 0)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 1)],
            i[(1, 2)],
            i[(2, 2)]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertices_one_edge() {
        let g =
            parse_graph("# header\nVERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1 0 0\nEDGE_SE2 0 1 1 0 0 1 0 0 1 0 1\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].information, Matrix3::identity());
    }

    #[test]
    fn toro_aliases_and_unknown_lines() {
        let g = parse_graph("VERTEX2 0 0 0 0\nVERTEX2 1 1 0 0\nFIX 0\nEDGE2 0 1 1 0 0 2 0 0 2 0 3\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.skipped_lines(), 1);
        assert_eq!(g.edges()[0].information[(2, 2)], 3.0);
    }

    #[test]
    fn missing_endpoint() {
        let e = parse_graph("VERTEX_SE2 0 0 0 0\nEDGE_SE2 0 7 1 0 0 1 0 0 1 0 1\n").unwrap_err();
        assert!(matches!(e, GraphError::MissingVertex { missing: 7, .. }));
    }

    #[test]
    fn malformed_number_reports_line() {
        let e = parse_graph("VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1 zz 0\n").unwrap_err();
        assert!(matches!(e, GraphError::Parse { line: 2, .. }));
    }

    #[test]
    fn round_trip() {
        let g =
            parse_graph("VERTEX_SE2 0 0.1 0.2 0.3\nVERTEX_SE2 1 1.5 -2 3\nEDGE_SE2 0 1 1 0.25 -0.5 10 1 0.5 20 2 30\n")
                .unwrap();
        assert_eq!(parse_graph(&to_g2o(&g)).unwrap(), g);
    }
}
