//! Mesh representation: nodes, high-order elements, boundary bindings, and the
//! structured generators for the two experiment domains.
//!
//! A mesh keeps an immutable snapshot of its construction-time node coordinates;
//! the element built from an element's snapshot vertices is the ideal element,
//! the zero-deformation-energy shape that targets are derived from.

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::BoundaryCurve;
use crate::reference::{gauss_lobatto_points, Shape};
use crate::{Error, Result};

/// A point in the domain plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coord2 {
    pub x: f64,
    pub y: f64,
}

impl Coord2 {
    pub fn new(x: f64, y: f64) -> Self {
        Coord2 { x, y }
    }

    pub fn dist(self, other: Coord2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Coord2 {
    type Output = Coord2;
    fn add(self, o: Coord2) -> Coord2 {
        Coord2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Coord2 {
    type Output = Coord2;
    fn sub(self, o: Coord2) -> Coord2 {
        Coord2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Coord2 {
    type Output = Coord2;
    fn mul(self, s: f64) -> Coord2 {
        Coord2::new(self.x * s, self.y * s)
    }
}

/// High-order element: shape plus node ids ordered vertices, then edge-interior
/// nodes per edge in edge order, then element-interior nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub shape: Shape,
    pub nodes: Vec<usize>,
}

/// Attachment of a boundary node to a curve at parameter `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binding {
    pub curve: usize,
    pub t: f64,
}

/// Distance tolerance for a bound node to count as lying on its curve.
pub const BINDING_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Mesh {
    order: usize,
    nodes: Vec<Coord2>,
    elements: Vec<Element>,
    curves: Vec<BoundaryCurve>,
    bindings: BTreeMap<usize, Binding>,
    frozen: BTreeSet<usize>,
    initial_nodes: Vec<Coord2>,
}

impl Mesh {
    /// Validates and assembles a mesh. The current coordinates are snapshotted
    /// as the initial (ideal-element) configuration.
    pub fn new(
        order: usize,
        nodes: Vec<Coord2>,
        elements: Vec<Element>,
        curves: Vec<BoundaryCurve>,
        bindings: BTreeMap<usize, Binding>,
        frozen: BTreeSet<usize>,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidMesh("order must be >= 1".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !n.is_finite() {
                return Err(Error::InvalidMesh(format!("node {i} is not finite")));
            }
        }
        for (ei, e) in elements.iter().enumerate() {
            let expect = e.shape.n_nodes(order);
            if e.nodes.len() != expect {
                return Err(Error::InvalidMesh(format!(
                    "element {ei}: {} nodes, {:?} of order {order} needs {expect}",
                    e.nodes.len(),
                    e.shape
                )));
            }
            let mut seen = BTreeSet::new();
            for &n in &e.nodes {
                if n >= nodes.len() {
                    return Err(Error::InvalidMesh(format!(
                        "element {ei} references node {n} of {}",
                        nodes.len()
                    )));
                }
                if !seen.insert(n) {
                    return Err(Error::InvalidMesh(format!("element {ei} repeats node {n}")));
                }
            }
        }
        for (i, c) in curves.iter().enumerate() {
            if c.id != i {
                return Err(Error::InvalidMesh(format!(
                    "curve ids must be contiguous from 0; curve at position {i} has id {}",
                    c.id
                )));
            }
        }
        for (&n, b) in &bindings {
            if n >= nodes.len() {
                return Err(Error::InvalidMesh(format!("binding references node {n}")));
            }
            let curve = curves.get(b.curve).ok_or_else(|| {
                Error::InvalidMesh(format!("binding of node {n} references curve {}", b.curve))
            })?;
            let on_curve = curve.eval(b.t)?;
            if on_curve.dist(nodes[n]) >= BINDING_TOL {
                return Err(Error::InvalidMesh(format!(
                    "node {n} is {:.3e} away from curve {} at t = {}",
                    on_curve.dist(nodes[n]),
                    b.curve,
                    b.t
                )));
            }
        }
        for &n in &frozen {
            if n >= nodes.len() {
                return Err(Error::InvalidMesh(format!(
                    "frozen set references node {n}"
                )));
            }
        }
        let initial_nodes = nodes.clone();
        Ok(Mesh {
            order,
            nodes,
            elements,
            curves,
            bindings,
            frozen,
            initial_nodes,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, i: usize) -> Coord2 {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Coord2] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn curve(&self, c: usize) -> &BoundaryCurve {
        &self.curves[c]
    }

    pub fn bindings(&self) -> &BTreeMap<usize, Binding> {
        &self.bindings
    }

    pub fn binding(&self, node: usize) -> Option<Binding> {
        self.bindings.get(&node).copied()
    }

    pub fn is_frozen(&self, node: usize) -> bool {
        self.frozen.contains(&node)
    }

    pub fn frozen(&self) -> &BTreeSet<usize> {
        &self.frozen
    }

    /// Construction-time coordinate of node `i` (ideal-element snapshot).
    pub fn initial_node(&self, i: usize) -> Coord2 {
        self.initial_nodes[i]
    }

    pub fn initial_nodes(&self) -> &[Coord2] {
        &self.initial_nodes
    }

    /// Moves an unconstrained interior node. Frozen and bound nodes are
    /// rejected; bound nodes only move through [`Mesh::slide_bound_node`].
    pub fn set_free_node(&mut self, i: usize, p: Coord2) -> Result<()> {
        if self.frozen.contains(&i) {
            return Err(Error::InvalidMesh(format!("node {i} is frozen")));
        }
        if self.bindings.contains_key(&i) {
            return Err(Error::InvalidMesh(format!(
                "node {i} is bound to a curve; slide it instead"
            )));
        }
        if !p.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "new position for node {i} not finite"
            )));
        }
        self.nodes[i] = p;
        Ok(())
    }

    /// Moves a bound node along its curve to parameter `t`; the coordinate is
    /// produced by curve evaluation so the binding invariant holds exactly.
    pub fn slide_bound_node(&mut self, i: usize, t: f64) -> Result<()> {
        if self.frozen.contains(&i) {
            return Err(Error::InvalidMesh(format!("node {i} is frozen")));
        }
        let b = self
            .bindings
            .get_mut(&i)
            .ok_or_else(|| Error::InvalidMesh(format!("node {i} is not bound")))?;
        let curve = &self.curves[b.curve];
        let p = curve.eval(t)?;
        b.t = t;
        self.nodes[i] = p;
        Ok(())
    }

    /// Sets a node coordinate directly, bypassing binding and frozen checks.
    /// For oracles and tooling (finite-difference probes); optimizer code must
    /// use the checked mutators.
    pub fn set_node_raw(&mut self, i: usize, p: Coord2) {
        self.nodes[i] = p;
    }

    /// For each node, the elements containing it (each list ascending).
    pub fn node_to_elements(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (ei, e) in self.elements.iter().enumerate() {
            for &n in &e.nodes {
                adj[n].push(ei);
            }
        }
        adj
    }

    /// Arithmetic mean of the element's vertex coordinates taken from the
    /// initial snapshot; fixed for the whole run.
    pub fn barycentre(&self, e: usize) -> Coord2 {
        let el = &self.elements[e];
        let nv = el.shape.n_vertices();
        let mut sx = 0.0;
        let mut sy = 0.0;
        for &n in &el.nodes[..nv] {
            sx += self.initial_nodes[n].x;
            sy += self.initial_nodes[n].y;
        }
        Coord2::new(sx / nv as f64, sy / nv as f64)
    }

    /// Initial (snapshot) vertex coordinates of element `e`.
    pub fn initial_vertices(&self, e: usize) -> Vec<Coord2> {
        let el = &self.elements[e];
        el.nodes[..el.shape.n_vertices()]
            .iter()
            .map(|&n| self.initial_nodes[n])
            .collect()
    }
}

/// Structured mesh of `n` x `n` quad elements of order `p` tiling the unit
/// square. High-order nodes are placed by each element's affine map (the mesh
/// starts straight-sided); boundary nodes are bound to the four edge segments
/// and the four corners are frozen.
pub fn generate_unit_square_quad_mesh(n: usize, p: usize) -> Result<Mesh> {
    generate_square_quad_mesh(n, p, Coord2::new(0.0, 0.0), 1.0)
}

/// Structured quad mesh of an axis-aligned square with corner `origin` and side
/// `extent`; see [`generate_unit_square_quad_mesh`].
pub fn generate_square_quad_mesh(n: usize, p: usize, origin: Coord2, extent: f64) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(
            "need at least 2 elements per side".into(),
        ));
    }
    if !(extent > 0.0) {
        return Err(Error::InvalidMesh("square extent must be > 0".into()));
    }
    let gll = gauss_lobatto_points(p + 1);
    let m = n * p + 1;
    // Axis coordinates of the global tensor node grid. Shared element borders
    // evaluate to identical values on both sides (gll[0] = -1, gll[p] = 1).
    let mut ax = vec![0.0f64; m];
    for cell in 0..n {
        for i in 0..p {
            ax[cell * p + i] = origin.x + extent * (cell as f64 + 0.5 * (gll[i] + 1.0)) / n as f64;
        }
    }
    ax[m - 1] = origin.x + extent;
    let mut ay = vec![0.0f64; m];
    for cell in 0..n {
        for j in 0..p {
            ay[cell * p + j] = origin.y + extent * (cell as f64 + 0.5 * (gll[j] + 1.0)) / n as f64;
        }
    }
    ay[m - 1] = origin.y + extent;

    let mut nodes = Vec::with_capacity(m * m);
    for &y in &ay {
        for &x in &ax {
            nodes.push(Coord2::new(x, y));
        }
    }
    let gid = |i: usize, j: usize| j * m + i;

    let lattice = crate::reference::quad_lattice_for_mesh(p);
    let mut elements = Vec::with_capacity(n * n);
    for cj in 0..n {
        for ci in 0..n {
            let nodes_e = lattice
                .iter()
                .map(|&(i, j)| gid(ci * p + i, cj * p + j))
                .collect();
            elements.push(Element {
                shape: Shape::Quad,
                nodes: nodes_e,
            });
        }
    }

    let c00 = origin;
    let c10 = Coord2::new(origin.x + extent, origin.y);
    let c11 = Coord2::new(origin.x + extent, origin.y + extent);
    let c01 = Coord2::new(origin.x, origin.y + extent);
    let curves = vec![
        BoundaryCurve::segment(0, c00, c10)?,
        BoundaryCurve::segment(1, c10, c11)?,
        BoundaryCurve::segment(2, c11, c01)?,
        BoundaryCurve::segment(3, c01, c00)?,
    ];

    let mut bindings = BTreeMap::new();
    let last = m - 1;
    for i in 1..last {
        let tx = (ax[i] - origin.x) / extent;
        let ty = (ay[i] - origin.y) / extent;
        bindings.insert(gid(i, 0), Binding { curve: 0, t: tx });
        bindings.insert(gid(last, i), Binding { curve: 1, t: ty });
        bindings.insert(
            gid(i, last),
            Binding {
                curve: 2,
                t: 1.0 - tx,
            },
        );
        bindings.insert(
            gid(0, i),
            Binding {
                curve: 3,
                t: 1.0 - ty,
            },
        );
    }
    let frozen: BTreeSet<usize> = [gid(0, 0), gid(last, 0), gid(last, last), gid(0, last)]
        .into_iter()
        .collect();

    Mesh::new(p, nodes, elements, curves, bindings, frozen)
}

/// Triangulation of the upper-right quadrant of the unit square, i.e. the
/// square [0.5, 1]^2 cut from the full domain by two straight edges. A
/// structured grid is split into triangles with alternating diagonals; element
/// size tracks `h_target`. Boundary nodes are bound to the four edge segments
/// and the four corners are frozen.
pub fn generate_quadrant_tri_mesh(p: usize, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0) {
        return Err(Error::InvalidMesh("h_target must be > 0".into()));
    }
    let origin = Coord2::new(0.5, 0.5);
    let extent = 0.5;
    let n = ((extent / h_target).round() as usize).max(2);
    if n > 4096 {
        return Err(Error::InvalidMesh(format!(
            "h_target {h_target} would need {n} cells per side"
        )));
    }
    let m = n * p + 1;
    let step = extent / (n * p) as f64;
    let coord = |k: usize| -> f64 {
        if k == m - 1 {
            origin.x + extent
        } else {
            origin.x + step * k as f64
        }
    };

    let mut nodes = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            nodes.push(Coord2::new(coord(i), coord(j)));
        }
    }
    let gid = |i: usize, j: usize| j * m + i;

    let lattice = crate::reference::tri_lattice_for_mesh(p);
    // Triangle node (i, j) sits at V0 + (i/p)(V1-V0) + (j/p)(V2-V0); with cell
    // vertices on the fine grid the steps (V1-V0)/p and (V2-V0)/p are integer
    // grid offsets, so every high-order node lands on the global grid.
    let tri_nodes = |v0: (usize, usize), v1: (usize, usize), v2: (usize, usize)| -> Vec<usize> {
        let s1 = (
            (v1.0 as isize - v0.0 as isize) / p as isize,
            (v1.1 as isize - v0.1 as isize) / p as isize,
        );
        let s2 = (
            (v2.0 as isize - v0.0 as isize) / p as isize,
            (v2.1 as isize - v0.1 as isize) / p as isize,
        );
        lattice
            .iter()
            .map(|&(i, j)| {
                let gi = v0.0 as isize + i as isize * s1.0 + j as isize * s2.0;
                let gj = v0.1 as isize + i as isize * s1.1 + j as isize * s2.1;
                gid(gi as usize, gj as usize)
            })
            .collect()
    };

    let mut elements = Vec::with_capacity(2 * n * n);
    for cj in 0..n {
        for ci in 0..n {
            let a = (ci * p, cj * p);
            let b = ((ci + 1) * p, cj * p);
            let c = (ci * p, (cj + 1) * p);
            let d = ((ci + 1) * p, (cj + 1) * p);
            let pairs = if (ci + cj) % 2 == 0 {
                // Diagonal a-d.
                [(a, b, d), (a, d, c)]
            } else {
                // Diagonal b-c.
                [(a, b, c), (b, d, c)]
            };
            for (v0, v1, v2) in pairs {
                elements.push(Element {
                    shape: Shape::Tri,
                    nodes: tri_nodes(v0, v1, v2),
                });
            }
        }
    }

    let c00 = origin;
    let c10 = Coord2::new(origin.x + extent, origin.y);
    let c11 = Coord2::new(origin.x + extent, origin.y + extent);
    let c01 = Coord2::new(origin.x, origin.y + extent);
    let curves = vec![
        BoundaryCurve::segment(0, c00, c10)?,
        BoundaryCurve::segment(1, c10, c11)?,
        BoundaryCurve::segment(2, c11, c01)?,
        BoundaryCurve::segment(3, c01, c00)?,
    ];

    let mut bindings = BTreeMap::new();
    let last = m - 1;
    for i in 1..last {
        let t = (coord(i) - origin.x) / extent;
        bindings.insert(gid(i, 0), Binding { curve: 0, t });
        bindings.insert(gid(last, i), Binding { curve: 1, t });
        bindings.insert(
            gid(i, last),
            Binding {
                curve: 2,
                t: 1.0 - t,
            },
        );
        bindings.insert(
            gid(0, i),
            Binding {
                curve: 3,
                t: 1.0 - t,
            },
        );
    }
    let frozen: BTreeSet<usize> = [gid(0, 0), gid(last, 0), gid(last, last), gid(0, last)]
        .into_iter()
        .collect();

    Mesh::new(p, nodes, elements, curves, bindings, frozen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_linear_square_counts() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        assert_eq!(mesh.n_elements(), 4);
        assert_eq!(mesh.n_nodes(), 9);
    }

    #[test]
    fn cubic_square_node_count_closed_form() {
        let mesh = generate_unit_square_quad_mesh(24, 3).unwrap();
        assert_eq!(mesh.n_elements(), 576);
        assert_eq!(mesh.n_nodes(), (3 * 24 + 1) * (3 * 24 + 1));
        assert_eq!(mesh.n_nodes(), 5329);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = generate_unit_square_quad_mesh(5, 3).unwrap();
        let b = generate_unit_square_quad_mesh(5, 3).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.elements(), b.elements());
        let ta = generate_quadrant_tri_mesh(3, 0.1).unwrap();
        let tb = generate_quadrant_tri_mesh(3, 0.1).unwrap();
        assert_eq!(ta.nodes(), tb.nodes());
        assert_eq!(ta.elements(), tb.elements());
    }

    #[test]
    fn square_bindings_lie_on_curves_and_corners_freeze() {
        let mesh = generate_unit_square_quad_mesh(4, 3).unwrap();
        assert_eq!(mesh.frozen().len(), 4);
        // 4 sides x (4*3+1 - 2) bound nodes each.
        assert_eq!(mesh.bindings().len(), 4 * (4 * 3 - 1));
        for (&n, b) in mesh.bindings() {
            let p = mesh.curve(b.curve).eval(b.t).unwrap();
            assert!(p.dist(mesh.node(n)) < BINDING_TOL);
        }
    }

    #[test]
    fn tri_quadrant_counts_match_size_heuristic() {
        let mesh = generate_quadrant_tri_mesh(3, 0.1).unwrap();
        let heuristic = 2.0 * (0.5f64 / 0.1).powi(2);
        let count = mesh.n_elements() as f64;
        assert!(count > 0.5 * heuristic && count < 1.5 * heuristic);
    }

    #[test]
    fn tri_quadrant_triangles_positively_oriented() {
        let mesh = generate_quadrant_tri_mesh(3, 0.1).unwrap();
        for e in 0..mesh.n_elements() {
            let v = mesh.initial_vertices(e);
            let area2 =
                (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[1].y - v[0].y) * (v[2].x - v[0].x);
            assert!(area2 > 0.0);
        }
    }

    #[test]
    fn tri_quadrant_bindings_on_curves() {
        let mesh = generate_quadrant_tri_mesh(3, 0.07).unwrap();
        assert!(!mesh.bindings().is_empty());
        for (&n, b) in mesh.bindings() {
            let p = mesh.curve(b.curve).eval(b.t).unwrap();
            assert!(p.dist(mesh.node(n)) < BINDING_TOL);
        }
    }

    #[test]
    fn barycentre_means_vertices_and_ignores_later_motion() {
        let mut mesh = generate_unit_square_quad_mesh(2, 2).unwrap();
        let b = mesh.barycentre(0);
        assert_abs_diff_eq!(b.x, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(b.y, 0.25, epsilon = 1e-15);
        // Move a vertex of element 0; the barycentre uses the snapshot.
        let v0 = mesh.element(0).nodes[0];
        mesh.set_node_raw(v0, Coord2::new(0.1, 0.1));
        let b2 = mesh.barycentre(0);
        assert_eq!(b, b2);
    }

    #[test]
    fn adjacency_counts_match_double_counting() {
        let mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
        let adj = mesh.node_to_elements();
        // Center node of the 2x2 linear grid belongs to all 4 elements.
        assert_eq!(adj[4].len(), 4);
        // Corner node to exactly 1.
        assert_eq!(adj[0].len(), 1);
        let total: usize = adj.iter().map(|v| v.len()).sum();
        let expect: usize = mesh.elements().iter().map(|e| e.nodes.len()).sum();
        assert_eq!(total, expect);
    }

    #[test]
    fn checked_mutators_enforce_constraints() {
        let mut mesh = generate_unit_square_quad_mesh(2, 2).unwrap();
        let corner = *mesh.frozen().iter().next().unwrap();
        assert!(mesh.set_free_node(corner, Coord2::new(0.4, 0.4)).is_err());
        let (&bound, _) = mesh.bindings().iter().next().unwrap();
        assert!(mesh.set_free_node(bound, Coord2::new(0.4, 0.4)).is_err());
        mesh.slide_bound_node(bound, 0.25).unwrap();
        let b = mesh.binding(bound).unwrap();
        assert_eq!(b.t, 0.25);
        let p = mesh.curve(b.curve).eval(0.25).unwrap();
        assert_eq!(mesh.node(bound), p);
    }

    #[test]
    fn element_node_counts_validated() {
        let nodes = vec![
            Coord2::new(0.0, 0.0),
            Coord2::new(1.0, 0.0),
            Coord2::new(1.0, 1.0),
        ];
        let bad = Element {
            shape: Shape::Quad,
            nodes: vec![0, 1, 2],
        };
        let r = Mesh::new(
            1,
            nodes,
            vec![bad],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        );
        assert!(r.is_err());
    }
}
