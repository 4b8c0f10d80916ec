//! SVG rendering of meshes. Every element edge becomes a polyline sampled
//! through the high-order edge map, so curved elements render curved. Edges
//! shared by two elements are drawn once. Output is fully deterministic:
//! identical meshes produce byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mapping::{map_point, RefBasis};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Default edge sampling; enough to show cubic curvature faithfully.
pub const DEFAULT_SAMPLES_PER_EDGE: usize = 8;

fn fmt_coord(v: f64) -> String {
    format!("{v:.6}")
}

/// Renders the mesh as an SVG document string. `samples_per_edge` is the
/// number of polyline segments per element edge, at least 2.
pub fn svg_to_string(mesh: &Mesh, samples_per_edge: usize) -> Result<String> {
    if samples_per_edge < 2 {
        return Err(Error::Config(format!(
            "samples_per_edge must be at least 2, got {samples_per_edge}"
        )));
    }
    let basis = RefBasis::for_mesh(mesh)?;

    // Sample every unique edge. Shared edges carry the same endpoint node
    // pair in both elements, in opposite orientations.
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut polylines: Vec<Vec<(f64, f64)>> = Vec::new();
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        let re = basis.get(el.shape);
        for edge in 0..el.shape.n_edges() {
            let (a, b) = re.edge_endpoints(edge);
            let (ga, gb) = (el.nodes[a], el.nodes[b]);
            let key = (ga.min(gb), ga.max(gb));
            if !seen.insert(key) {
                continue;
            }
            let pts = (0..=samples_per_edge)
                .map(|s| {
                    let t = s as f64 / samples_per_edge as f64;
                    let p = map_point(mesh, e, re, re.edge_point(edge, t));
                    (p.x, p.y)
                })
                .collect();
            polylines.push(pts);
        }
    }

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for line in &polylines {
        for &(x, y) in line {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
    let margin = 0.02 * span;
    let stroke = 0.0015 * span;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        fmt_coord(xmin - margin),
        fmt_coord(ymin - margin),
        fmt_coord(xmax - xmin + 2.0 * margin),
        fmt_coord(ymax - ymin + 2.0 * margin),
    );
    // Flip the y axis inside the drawing so the mesh appears in conventional
    // orientation while the viewBox stays in mesh coordinates.
    let flip = ymax + ymin;
    for line in &polylines {
        let mut d = String::new();
        for (i, &(x, y)) in line.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{}{} {} ", cmd, fmt_coord(x), fmt_coord(flip - y));
        }
        let _ = writeln!(
            out,
            r##"<path d="{}" fill="none" stroke="#1a1a1a" stroke-width="{}"/>"##,
            d.trim_end(),
            fmt_coord(stroke),
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

pub fn emit_svg(mesh: &Mesh, path: impl AsRef<Path>, samples_per_edge: usize) -> Result<()> {
    let text = svg_to_string(mesh, samples_per_edge)?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_unit_square_quad_mesh, Coord2};

    fn parse_paths(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<path"))
            .map(|l| {
                let d = l.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
                d.split(['M', 'L'])
                    .filter(|s| !s.trim().is_empty())
                    .map(|pair| {
                        let mut it = pair.split_whitespace();
                        (
                            it.next().unwrap().parse().unwrap(),
                            it.next().unwrap().parse().unwrap(),
                        )
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn affine_meshes_render_straight_polylines() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        let svg = svg_to_string(&mesh, 4).unwrap();
        for path in parse_paths(&svg) {
            let (x0, y0) = path[0];
            let (x1, y1) = *path.last().unwrap();
            for &(x, y) in &path {
                // Collinearity: cross product with the chord vanishes.
                let cross = (x - x0) * (y1 - y0) - (y - y0) * (x1 - x0);
                assert!(cross.abs() < 1e-9, "point off chord by {cross}");
            }
        }
    }

    #[test]
    fn shared_edges_are_drawn_once() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        let svg = svg_to_string(&mesh, 2).unwrap();
        // 2x2 quads: 16 element edges, 4 interior ones shared -> 12 unique.
        assert_eq!(svg.matches("<path").count(), 12);
    }

    #[test]
    fn curved_interior_edges_render_curved() {
        let mut mesh = generate_unit_square_quad_mesh(2, 3).unwrap();
        // Bow all free nodes upward; edge polylines must leave their chords.
        for i in 0..mesh.n_nodes() {
            if mesh.is_frozen(i) || mesh.binding(i).is_some() {
                continue;
            }
            let p = mesh.node(i);
            let bend = 0.05 * (std::f64::consts::PI * p.x).sin();
            mesh.set_node_raw(i, Coord2::new(p.x, p.y + bend));
        }
        let svg = svg_to_string(&mesh, 8).unwrap();
        let mut max_dev = 0.0_f64;
        for path in parse_paths(&svg) {
            let (x0, y0) = path[0];
            let (x1, y1) = *path.last().unwrap();
            let chord = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt().max(1e-12);
            for &(x, y) in &path {
                let dev = ((x - x0) * (y1 - y0) - (y - y0) * (x1 - x0)).abs() / chord;
                max_dev = max_dev.max(dev);
            }
        }
        assert!(
            max_dev > 1e-3,
            "no curvature rendered, max deviation {max_dev}"
        );
    }

    #[test]
    fn output_is_byte_deterministic() {
        let mesh = generate_unit_square_quad_mesh(3, 2).unwrap();
        let a = svg_to_string(&mesh, 8).unwrap();
        let b = svg_to_string(&mesh, 8).unwrap();
        assert_eq!(a, b);
        // And identical through a serialization round trip.
        let back = crate::io::parse_mesh(&crate::io::mesh_to_string(&mesh)).unwrap();
        assert_eq!(a, svg_to_string(&back, 8).unwrap());
    }

    #[test]
    fn degenerate_sampling_is_rejected() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        assert!(matches!(svg_to_string(&mesh, 1), Err(Error::Config(_))));
    }

    #[test]
    fn unwritable_path_reports_io_error() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = emit_svg(&mesh, dir.path(), 4);
        assert!(matches!(err, Err(Error::Io(_))));
    }
}
