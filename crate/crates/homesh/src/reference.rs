//! Reference elements: nodal sets, quadrature rules, and Lagrange bases.
//!
//! Conventions: Quad = [-1,1]^2 with Gauss-Lobatto-Legendre tensor nodes and a
//! tensor Gauss-Legendre quadrature; Tri = vertices (-1,-1), (1,-1), (-1,1) with
//! equispaced nodes and a symmetric rule built by averaging a collapsed-coordinate
//! Gauss rule over the six vertex permutations of the triangle.
//!
//! Node ordering for every element: vertices (counter-clockwise), then the
//! interior nodes of each edge in edge order (following the edge direction),
//! then element-interior nodes.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Element shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Quad,
    Tri,
}

impl Shape {
    pub fn n_vertices(self) -> usize {
        match self {
            Shape::Quad => 4,
            Shape::Tri => 3,
        }
    }

    pub fn n_edges(self) -> usize {
        self.n_vertices()
    }

    /// Nodes of an element of this shape at polynomial order `p`.
    pub fn n_nodes(self, p: usize) -> usize {
        match self {
            Shape::Quad => (p + 1) * (p + 1),
            Shape::Tri => (p + 1) * (p + 2) / 2,
        }
    }

    /// Tag used by the mesh file format.
    pub fn tag(self) -> &'static str {
        match self {
            Shape::Quad => "QUAD",
            Shape::Tri => "TRI",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Shape> {
        match tag {
            "QUAD" => Some(Shape::Quad),
            "TRI" => Some(Shape::Tri),
            _ => None,
        }
    }
}

/// Legendre polynomial value and derivative at `x`, by recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let pn = ((2.0 * kf + 1.0) * x * p - kf * pm) / (kf + 1.0);
        pm = p;
        p = pn;
    }
    // (x^2 - 1) P_n' = n (x P_n - P_{n-1}); valid away from x = +-1.
    let dp = n as f64 * (x * p - pm) / (x * x - 1.0);
    (p, dp)
}

/// Gauss-Legendre rule with `n` points on [-1,1]. Nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // i-th largest root, Newton from the Chebyshev estimate.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

/// Gauss-Lobatto-Legendre points: `n` points on [-1,1] including the endpoints.
/// Interior points are the roots of P'_{n-1}. Nodes ascending.
// The loop variable is the root number; it seeds the Chebyshev initial guess
// as well as addressing the slot.
#[allow(clippy::needless_range_loop)]
pub fn gauss_lobatto_points(n: usize) -> Vec<f64> {
    assert!(n >= 2, "Lobatto set needs at least the two endpoints");
    let p = n - 1;
    let mut xs = vec![0.0; n];
    xs[0] = -1.0;
    xs[n - 1] = 1.0;
    for i in 1..p {
        let mut x = -(PI * i as f64 / p as f64).cos();
        for _ in 0..60 {
            let (pp, dp) = legendre_with_deriv(p, x);
            let ddp = (2.0 * x * dp - (p * (p + 1)) as f64 * pp) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        xs[i] = x;
    }
    // Exact symmetry about 0.
    for i in 1..n / 2 {
        let s = 0.5 * (xs[i] - xs[n - 1 - i]);
        xs[i] = s;
        xs[n - 1 - i] = -s;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    xs
}

/// 1D Lagrange basis value l_i(x) on the node set `pts`, by direct product.
fn lagrange_1d(pts: &[f64], i: usize, x: f64) -> f64 {
    let xi = pts[i];
    let mut v = 1.0;
    for (j, &xj) in pts.iter().enumerate() {
        if j != i {
            v *= (x - xj) / (xi - xj);
        }
    }
    v
}

/// 1D Lagrange basis derivative l_i'(x), product-rule form (finite at nodes).
fn lagrange_1d_deriv(pts: &[f64], i: usize, x: f64) -> f64 {
    let xi = pts[i];
    let mut d = 0.0;
    for (k, &xk) in pts.iter().enumerate() {
        if k == i {
            continue;
        }
        let mut term = 1.0 / (xi - xk);
        for (j, &xj) in pts.iter().enumerate() {
            if j != i && j != k {
                term *= (x - xj) / (xi - xj);
            }
        }
        d += term;
    }
    d
}

/// Quad node ordering: lattice indices (i, j) on the (p+1)^2 GLL grid, listed
/// vertices / edge interiors / element interior.
fn quad_node_lattice(p: usize) -> Vec<(usize, usize)> {
    let mut ij = Vec::with_capacity((p + 1) * (p + 1));
    ij.push((0, 0));
    ij.push((p, 0));
    ij.push((p, p));
    ij.push((0, p));
    for i in 1..p {
        ij.push((i, 0)); // edge 0: v0 -> v1
    }
    for j in 1..p {
        ij.push((p, j)); // edge 1: v1 -> v2
    }
    for i in (1..p).rev() {
        ij.push((i, p)); // edge 2: v2 -> v3
    }
    for j in (1..p).rev() {
        ij.push((0, j)); // edge 3: v3 -> v0
    }
    for j in 1..p {
        for i in 1..p {
            ij.push((i, j));
        }
    }
    ij
}

/// Tri node ordering: barycentric lattice indices (i, j) with i+j <= p, where the
/// node sits at V0 + (i/p)(V1-V0) + (j/p)(V2-V0).
fn tri_node_lattice(p: usize) -> Vec<(usize, usize)> {
    let mut ij = Vec::with_capacity((p + 1) * (p + 2) / 2);
    ij.push((0, 0));
    ij.push((p, 0));
    ij.push((0, p));
    for i in 1..p {
        ij.push((i, 0)); // edge 0: v0 -> v1
    }
    for i in 1..p {
        ij.push((p - i, i)); // edge 1: v1 -> v2
    }
    for j in (1..p).rev() {
        ij.push((0, j)); // edge 2: v2 -> v0
    }
    for j in 1..p {
        for i in 1..p {
            if i + j < p {
                ij.push((i, j));
            }
        }
    }
    ij
}

/// Lattice orderings shared with the structured mesh generators, which place
/// global nodes on grids indexed the same way.
pub(crate) fn quad_lattice_for_mesh(p: usize) -> Vec<(usize, usize)> {
    quad_node_lattice(p)
}

pub(crate) fn tri_lattice_for_mesh(p: usize) -> Vec<(usize, usize)> {
    tri_node_lattice(p)
}

/// Symmetric triangle quadrature exact to degree >= 2n-1: a collapsed-coordinate
/// tensor Gauss rule averaged over all six vertex permutations of the triangle.
fn tri_quadrature(n: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(n);
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [1, 2, 0],
        [2, 0, 1],
        [0, 2, 1],
        [2, 1, 0],
        [1, 0, 2],
    ];
    let mut pts = Vec::with_capacity(6 * n * n);
    let mut ws = Vec::with_capacity(6 * n * n);
    for (ia, &a) in gx.iter().enumerate() {
        for (ib, &b) in gx.iter().enumerate() {
            let xi = 0.5 * (1.0 + a) * (1.0 - b) - 1.0;
            let eta = b;
            let w = gw[ia] * gw[ib] * 0.5 * (1.0 - b);
            let lam = [0.5 * (-xi - eta), 0.5 * (1.0 + xi), 0.5 * (1.0 + eta)];
            for perm in PERMS {
                let m1 = lam[perm[1]];
                let m2 = lam[perm[2]];
                pts.push([2.0 * m1 - 1.0, 2.0 * m2 - 1.0]);
                ws.push(w / 6.0);
            }
        }
    }
    (pts, ws)
}

/// Monomial exponents (a, b) for xi^a eta^b spanning total degree <= p.
fn tri_monomials(p: usize) -> Vec<(u32, u32)> {
    let mut exps = Vec::with_capacity((p + 1) * (p + 2) / 2);
    for d in 0..=p as u32 {
        for b in 0..=d {
            exps.push((d - b, b));
        }
    }
    exps
}

fn monomial_eval(a: u32, b: u32, x: f64, y: f64) -> f64 {
    x.powi(a as i32) * y.powi(b as i32)
}

fn monomial_grad(a: u32, b: u32, x: f64, y: f64) -> [f64; 2] {
    let dx = if a == 0 {
        0.0
    } else {
        a as f64 * x.powi(a as i32 - 1) * y.powi(b as i32)
    };
    let dy = if b == 0 {
        0.0
    } else {
        b as f64 * x.powi(a as i32) * y.powi(b as i32 - 1)
    };
    [dx, dy]
}

enum Basis {
    /// Tensor Lagrange on 1D GLL points; `lattice[i]` maps node i to its (i, j)
    /// grid indices.
    Tensor {
        pts1d: Vec<f64>,
        lattice: Vec<(usize, usize)>,
    },
    /// Nodal basis expressed in monomials: l_i(x) = sum_k coeffs[(k, i)] m_k(x).
    Monomial {
        coeffs: DMatrix<f64>,
        exps: Vec<(u32, u32)>,
    },
}

/// Reference element: node set, quadrature rule, and basis tables.
pub struct ReferenceElement {
    pub shape: Shape,
    pub order: usize,
    nodes: Vec<[f64; 2]>,
    qpoints: Vec<[f64; 2]>,
    qweights: Vec<f64>,
    /// Basis values at quadrature points, `[q * n_nodes + i]`.
    basis_q: Vec<f64>,
    /// Basis gradients at quadrature points, `[q * n_nodes + i]`.
    grad_q: Vec<[f64; 2]>,
    basis: Basis,
}

const MAX_QUAD_ORDER: usize = 8;
const MAX_TRI_ORDER: usize = 6;

impl ReferenceElement {
    /// Builds a reference element with the default quadrature: (P+2)^2 tensor
    /// Gauss points for quads, the symmetric degree >= 2P+1 rule for triangles.
    pub fn new(shape: Shape, order: usize) -> Result<Self> {
        let n_quad = match shape {
            Shape::Quad => order + 2,
            Shape::Tri => order + 1,
        };
        Self::with_quadrature(shape, order, n_quad)
    }

    /// Builds a reference element with `n_quad` Gauss points per direction.
    pub fn with_quadrature(shape: Shape, order: usize, n_quad: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Unsupported("element order must be >= 1".into()));
        }
        let max = match shape {
            Shape::Quad => MAX_QUAD_ORDER,
            Shape::Tri => MAX_TRI_ORDER,
        };
        if order > max {
            return Err(Error::Unsupported(format!(
                "{:?} elements support order 1..={max}, got {order}",
                shape
            )));
        }
        if n_quad < order + 1 {
            return Err(Error::Unsupported(format!(
                "need at least {} quadrature points per direction for order {order}",
                order + 1
            )));
        }

        let (nodes, qpoints, qweights, basis) = match shape {
            Shape::Quad => {
                let pts1d = gauss_lobatto_points(order + 1);
                let lattice = quad_node_lattice(order);
                let nodes: Vec<[f64; 2]> =
                    lattice.iter().map(|&(i, j)| [pts1d[i], pts1d[j]]).collect();
                let (gx, gw) = gauss_legendre(n_quad);
                let mut qpoints = Vec::with_capacity(n_quad * n_quad);
                let mut qweights = Vec::with_capacity(n_quad * n_quad);
                for (jb, &b) in gx.iter().enumerate() {
                    for (ja, &a) in gx.iter().enumerate() {
                        qpoints.push([a, b]);
                        qweights.push(gw[ja] * gw[jb]);
                    }
                }
                (nodes, qpoints, qweights, Basis::Tensor { pts1d, lattice })
            }
            Shape::Tri => {
                let lattice = tri_node_lattice(order);
                let pf = order as f64;
                let nodes: Vec<[f64; 2]> = lattice
                    .iter()
                    .map(|&(i, j)| [-1.0 + 2.0 * i as f64 / pf, -1.0 + 2.0 * j as f64 / pf])
                    .collect();
                let (qpoints, qweights) = tri_quadrature(n_quad);
                let exps = tri_monomials(order);
                let n = nodes.len();
                let vand = DMatrix::from_fn(n, n, |r, k| {
                    let (a, b) = exps[k];
                    monomial_eval(a, b, nodes[r][0], nodes[r][1])
                });
                let coeffs = vand.try_inverse().ok_or_else(|| {
                    Error::Singular(format!("triangle nodal basis at order {order}"))
                })?;
                (nodes, qpoints, qweights, Basis::Monomial { coeffs, exps })
            }
        };

        let mut elem = ReferenceElement {
            shape,
            order,
            nodes,
            qpoints,
            qweights,
            basis_q: Vec::new(),
            grad_q: Vec::new(),
            basis,
        };
        let n = elem.n_nodes();
        let mut basis_q = Vec::with_capacity(elem.qpoints.len() * n);
        let mut grad_q = Vec::with_capacity(elem.qpoints.len() * n);
        for q in 0..elem.qpoints.len() {
            let p = elem.qpoints[q];
            basis_q.extend(elem.eval_basis(p));
            grad_q.extend(elem.eval_basis_grad(p));
        }
        elem.basis_q = basis_q;
        elem.grad_q = grad_q;
        Ok(elem)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_qpoints(&self) -> usize {
        self.qpoints.len()
    }

    /// Reference-space node coordinates, in the element node-ordering convention.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn qpoints(&self) -> &[[f64; 2]] {
        &self.qpoints
    }

    pub fn qweights(&self) -> &[f64] {
        &self.qweights
    }

    /// Basis values at quadrature point `q`, one per node.
    pub fn basis_at(&self, q: usize) -> &[f64] {
        let n = self.n_nodes();
        &self.basis_q[q * n..(q + 1) * n]
    }

    /// Basis gradients (d/dxi, d/deta) at quadrature point `q`, one per node.
    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        let n = self.n_nodes();
        &self.grad_q[q * n..(q + 1) * n]
    }

    /// Evaluates all basis functions at an arbitrary reference point.
    pub fn eval_basis(&self, p: [f64; 2]) -> Vec<f64> {
        match &self.basis {
            Basis::Tensor { pts1d, lattice } => lattice
                .iter()
                .map(|&(i, j)| lagrange_1d(pts1d, i, p[0]) * lagrange_1d(pts1d, j, p[1]))
                .collect(),
            Basis::Monomial { coeffs, exps } => {
                let vals: Vec<f64> = exps
                    .iter()
                    .map(|&(a, b)| monomial_eval(a, b, p[0], p[1]))
                    .collect();
                (0..self.nodes.len())
                    .map(|i| {
                        exps.iter()
                            .enumerate()
                            .map(|(k, _)| coeffs[(k, i)] * vals[k])
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// Evaluates all basis gradients at an arbitrary reference point.
    pub fn eval_basis_grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        match &self.basis {
            Basis::Tensor { pts1d, lattice } => lattice
                .iter()
                .map(|&(i, j)| {
                    let li = lagrange_1d(pts1d, i, p[0]);
                    let lj = lagrange_1d(pts1d, j, p[1]);
                    let di = lagrange_1d_deriv(pts1d, i, p[0]);
                    let dj = lagrange_1d_deriv(pts1d, j, p[1]);
                    [di * lj, li * dj]
                })
                .collect(),
            Basis::Monomial { coeffs, exps } => {
                let grads: Vec<[f64; 2]> = exps
                    .iter()
                    .map(|&(a, b)| monomial_grad(a, b, p[0], p[1]))
                    .collect();
                (0..self.nodes.len())
                    .map(|i| {
                        let mut g = [0.0, 0.0];
                        for (k, gk) in grads.iter().enumerate() {
                            let c = coeffs[(k, i)];
                            g[0] += c * gk[0];
                            g[1] += c * gk[1];
                        }
                        g
                    })
                    .collect()
            }
        }
    }

    /// Node indices of the endpoints of edge `e` (element vertex numbering).
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let nv = self.shape.n_vertices();
        (e, (e + 1) % nv)
    }

    /// Reference coordinates of the point at fraction `s` in [0,1] along edge `e`.
    pub fn edge_point(&self, e: usize, s: f64) -> [f64; 2] {
        let (a, b) = self.edge_endpoints(e);
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    }
}
