//! Line-oriented plain-text mesh files and run reports.
//!
//! Format: `HOMESH 1 <dim> <order>` header, then `NODES <n>` with `id x y`
//! lines, `CURVES <c>` with `SEG id x0 y0 x1 y1` / `ARC id cx cy r th0 th1`,
//! `BINDINGS <b>` with `node_id curve_id t`, and `ELEMENTS <m>` with
//! `shape id n id...id`. Coordinates are printed with 17 significant digits so
//! a write/read round trip reproduces every f64 bit-exactly. Loading is
//! atomic: any malformed line fails the whole parse with its line number.
//!
//! Frozen nodes are not stored; on read, any node coinciding with a curve
//! endpoint (within the binding tolerance) is frozen, which reproduces the
//! generator convention of pinning domain corners.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::BoundaryCurve;
use crate::mesh::{Binding, Coord2, Element, Mesh, BINDING_TOL};
use crate::optimizer::AdaptReport;
use crate::reference::Shape;
use crate::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Content lines with their 1-based numbers; blank lines are skipped.
struct ContentLines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> ContentLines<'a> {
    fn new(text: &'a str) -> Self {
        ContentLines {
            lines: text.lines().enumerate(),
            last_line: 0,
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            self.last_line = idx + 1;
            if !raw.trim().is_empty() {
                return Some((idx + 1, raw.trim()));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| {
            perr(
                self.last_line + 1,
                format!("unexpected end of file, expected {what}"),
            )
        })
    }
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| perr(line, format!("invalid {what} '{tok}'")))
}

fn parse_f64(line: usize, tok: &str, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| perr(line, format!("invalid {what} '{tok}'")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("{what} must be finite, got '{tok}'")));
    }
    Ok(v)
}

/// Reads a block header `NAME <count>` and returns the count.
fn parse_block(lines: &mut ContentLines, name: &str) -> Result<usize> {
    let (ln, text) = lines.expect(&format!("{name} block"))?;
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != name {
        return Err(perr(ln, format!("expected '{name} <count>', got '{text}'")));
    }
    parse_usize(ln, toks[1], "count")
}

/// Parses mesh text; see the module docs for the grammar.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = ContentLines::new(text);

    let (ln, header) = lines.expect("header")?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "HOMESH" {
        return Err(perr(
            ln,
            format!("expected 'HOMESH 1 2 <order>', got '{header}'"),
        ));
    }
    if toks[1] != "1" {
        return Err(perr(
            ln,
            format!("unsupported format version '{}'", toks[1]),
        ));
    }
    if toks[2] != "2" {
        return Err(perr(ln, format!("unsupported dimension '{}'", toks[2])));
    }
    let order = parse_usize(ln, toks[3], "order")?;
    if order == 0 {
        return Err(perr(ln, "order must be at least 1"));
    }

    let n_nodes = parse_block(&mut lines, "NODES")?;
    let mut nodes = vec![None; n_nodes];
    for _ in 0..n_nodes {
        let (ln, text) = lines.expect("node line")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(perr(ln, format!("expected 'id x y', got '{text}'")));
        }
        let id = parse_usize(ln, toks[0], "node id")?;
        if id >= n_nodes {
            return Err(perr(
                ln,
                format!("node id {id} out of range (mesh has {n_nodes} nodes)"),
            ));
        }
        if nodes[id].is_some() {
            return Err(perr(ln, format!("duplicate node id {id}")));
        }
        let x = parse_f64(ln, toks[1], "x coordinate")?;
        let y = parse_f64(ln, toks[2], "y coordinate")?;
        nodes[id] = Some(Coord2::new(x, y));
    }
    let nodes: Vec<Coord2> = nodes.into_iter().map(|n| n.unwrap()).collect();

    let n_curves = parse_block(&mut lines, "CURVES")?;
    let mut curves = Vec::with_capacity(n_curves);
    for expect_id in 0..n_curves {
        let (ln, text) = lines.expect("curve line")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        let geom_err = |e: Error| perr(ln, format!("{e}"));
        let curve = match toks.first().copied() {
            Some("SEG") if toks.len() == 6 => {
                let id = parse_usize(ln, toks[1], "curve id")?;
                let p0 = Coord2::new(parse_f64(ln, toks[2], "x0")?, parse_f64(ln, toks[3], "y0")?);
                let p1 = Coord2::new(parse_f64(ln, toks[4], "x1")?, parse_f64(ln, toks[5], "y1")?);
                (id, BoundaryCurve::segment(id, p0, p1).map_err(geom_err)?)
            }
            Some("ARC") if toks.len() == 7 => {
                let id = parse_usize(ln, toks[1], "curve id")?;
                let center =
                    Coord2::new(parse_f64(ln, toks[2], "cx")?, parse_f64(ln, toks[3], "cy")?);
                let r = parse_f64(ln, toks[4], "radius")?;
                let th0 = parse_f64(ln, toks[5], "th0")?;
                let th1 = parse_f64(ln, toks[6], "th1")?;
                (
                    id,
                    BoundaryCurve::arc(id, center, r, th0, th1).map_err(geom_err)?,
                )
            }
            Some(tag @ ("SEG" | "ARC")) => {
                return Err(perr(
                    ln,
                    format!("wrong field count for {tag} curve: '{text}'"),
                ));
            }
            Some(tag) => return Err(perr(ln, format!("unknown curve tag '{tag}'"))),
            None => return Err(perr(ln, "empty curve line")),
        };
        if curve.0 != expect_id {
            return Err(perr(
                ln,
                format!("curve id {} out of order, expected {expect_id}", curve.0),
            ));
        }
        curves.push(curve.1);
    }

    let n_bindings = parse_block(&mut lines, "BINDINGS")?;
    let mut bindings = BTreeMap::new();
    for _ in 0..n_bindings {
        let (ln, text) = lines.expect("binding line")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(perr(
                ln,
                format!("expected 'node_id curve_id t', got '{text}'"),
            ));
        }
        let node = parse_usize(ln, toks[0], "node id")?;
        if node >= n_nodes {
            return Err(perr(
                ln,
                format!("binding references node {node} of a {n_nodes}-node mesh"),
            ));
        }
        let curve = parse_usize(ln, toks[1], "curve id")?;
        if curve >= n_curves {
            return Err(perr(
                ln,
                format!("binding references curve {curve} of {n_curves} curves"),
            ));
        }
        let t = parse_f64(ln, toks[2], "parameter")?;
        if !(0.0..=1.0).contains(&t) {
            return Err(perr(ln, format!("parameter {t} outside [0,1]")));
        }
        if bindings.insert(node, Binding { curve, t }).is_some() {
            return Err(perr(ln, format!("node {node} bound twice")));
        }
    }

    let n_elements = parse_block(&mut lines, "ELEMENTS")?;
    let mut elements = Vec::with_capacity(n_elements);
    for expect_id in 0..n_elements {
        let (ln, text) = lines.expect("element line")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(perr(
                ln,
                format!("expected 'shape id n id...', got '{text}'"),
            ));
        }
        let shape = Shape::from_tag(toks[0])
            .ok_or_else(|| perr(ln, format!("unknown shape tag '{}'", toks[0])))?;
        let id = parse_usize(ln, toks[1], "element id")?;
        if id != expect_id {
            return Err(perr(
                ln,
                format!("element id {id} out of order, expected {expect_id}"),
            ));
        }
        let count = parse_usize(ln, toks[2], "node count")?;
        if count != shape.n_nodes(order) {
            return Err(perr(
                ln,
                format!(
                    "{} element at order {order} needs {} nodes, line declares {count}",
                    toks[0],
                    shape.n_nodes(order)
                ),
            ));
        }
        if toks.len() != 3 + count {
            return Err(perr(
                ln,
                format!(
                    "element declares {count} nodes but lists {}",
                    toks.len() - 3
                ),
            ));
        }
        let mut ids = Vec::with_capacity(count);
        for tok in &toks[3..] {
            let nid = parse_usize(ln, tok, "node id")?;
            if nid >= n_nodes {
                return Err(perr(
                    ln,
                    format!("element references node {nid} of a {n_nodes}-node mesh"),
                ));
            }
            ids.push(nid);
        }
        elements.push(Element { shape, nodes: ids });
    }

    if let Some((ln, text)) = lines.next_content() {
        return Err(perr(ln, format!("unexpected trailing content '{text}'")));
    }

    // Nodes sitting on curve endpoints are the pinned ones (domain corners).
    let mut frozen = BTreeSet::new();
    for (i, p) in nodes.iter().enumerate() {
        for curve in &curves {
            let a = curve.eval_unchecked(0.0);
            let b = curve.eval_unchecked(1.0);
            if p.dist(a) <= BINDING_TOL || p.dist(b) <= BINDING_TOL {
                frozen.insert(i);
                break;
            }
        }
    }

    Mesh::new(order, nodes, elements, curves, bindings, frozen)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh(&text)
}

/// Serializes a mesh; inverse of [`parse_mesh`] up to the frozen-set
/// derivation described in the module docs.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "HOMESH 1 2 {}", mesh.order());
    let _ = writeln!(out, "NODES {}", mesh.n_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {:.16e} {:.16e}", p.x, p.y);
    }
    let _ = writeln!(out, "CURVES {}", mesh.curves().len());
    for curve in mesh.curves() {
        match &curve.kind {
            crate::geometry::CurveKind::Segment { p0, p1 } => {
                let _ = writeln!(
                    out,
                    "SEG {} {:.16e} {:.16e} {:.16e} {:.16e}",
                    curve.id, p0.x, p0.y, p1.x, p1.y
                );
            }
            crate::geometry::CurveKind::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let _ = writeln!(
                    out,
                    "ARC {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                    curve.id, center.x, center.y, radius, theta0, theta1
                );
            }
        }
    }
    let _ = writeln!(out, "BINDINGS {}", mesh.bindings().len());
    for (&node, b) in mesh.bindings() {
        let _ = writeln!(out, "{node} {} {:.16e}", b.curve, b.t);
    }
    let _ = writeln!(out, "ELEMENTS {}", mesh.n_elements());
    for (i, e) in mesh.elements().iter().enumerate() {
        let _ = write!(out, "{} {i} {}", e.shape.tag(), e.nodes.len());
        for &n in &e.nodes {
            let _ = write!(out, " {n}");
        }
        let _ = writeln!(out);
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

/// Plain `key = value` rendering of a run report.
pub fn report_to_string(report: &AdaptReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sweeps_run = {}", report.sweeps_run);
    let _ = writeln!(out, "converged = {}", report.converged);
    let _ = writeln!(out, "initial_energy = {:.16e}", report.initial_energy);
    let _ = writeln!(out, "final_energy = {:.16e}", report.final_energy);
    let _ = writeln!(
        out,
        "max_node_displacement = {:.16e}",
        report.max_node_displacement
    );
    let _ = writeln!(out, "min_detF_final = {:.16e}", report.min_det_f_final);
    let joined: Vec<String> = report
        .per_sweep_energy
        .iter()
        .map(|e| format!("{e:.16e}"))
        .collect();
    let _ = writeln!(out, "per_sweep_energy = {}", joined.join(" "));
    out
}

pub fn write_report(report: &AdaptReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, report_to_string(report))?;
    Ok(())
}
