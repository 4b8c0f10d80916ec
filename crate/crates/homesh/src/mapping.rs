//! The three element mappings and their Jacobians: reference -> current
//! curvilinear (J_M), reference -> ideal straight-sided (J_I), and reference ->
//! target (J_T = M J_I). The deformation gradient F = J_M (J_T)^-1 measures the
//! current element against its target and feeds the energy density.
//!
//! J_T depends only on the immutable initial mesh and the fixed metric field, so
//! it is assembled once per run into [`TargetTables`] together with the
//! target-space basis gradients used for fast F assembly.

use nalgebra::Matrix2;

use crate::mesh::{Coord2, Mesh};
use crate::metric::{gaussian_r, MetricField, MetricTensor};
use crate::reference::{ReferenceElement, Shape};
use crate::{Error, Result};

/// Reference elements for all shapes present in a mesh, at the mesh order.
pub struct RefBasis {
    order: usize,
    quad: Option<ReferenceElement>,
    tri: Option<ReferenceElement>,
}

impl RefBasis {
    pub fn for_mesh(mesh: &Mesh) -> Result<Self> {
        let mut basis = RefBasis {
            order: mesh.order(),
            quad: None,
            tri: None,
        };
        for e in mesh.elements() {
            match e.shape {
                Shape::Quad if basis.quad.is_none() => {
                    basis.quad = Some(ReferenceElement::new(Shape::Quad, mesh.order())?);
                }
                Shape::Tri if basis.tri.is_none() => {
                    basis.tri = Some(ReferenceElement::new(Shape::Tri, mesh.order())?);
                }
                _ => {}
            }
        }
        Ok(basis)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Reference element for `shape`; the mesh this basis was built for must
    /// contain the shape.
    pub fn get(&self, shape: Shape) -> &ReferenceElement {
        match shape {
            Shape::Quad => self.quad.as_ref().expect("no quad elements in this mesh"),
            Shape::Tri => self.tri.as_ref().expect("no tri elements in this mesh"),
        }
    }
}

/// Physical point of element `e` at reference coordinates `p` under the current
/// high-order map.
pub fn map_point(mesh: &Mesh, e: usize, re: &ReferenceElement, p: [f64; 2]) -> Coord2 {
    let el = mesh.element(e);
    let vals = re.eval_basis(p);
    let mut x = 0.0;
    let mut y = 0.0;
    for (i, &n) in el.nodes.iter().enumerate() {
        let c = mesh.node(n);
        x += c.x * vals[i];
        y += c.y * vals[i];
    }
    Coord2::new(x, y)
}

/// Current-map Jacobian of element `e` at an arbitrary reference point.
pub fn current_jacobian_at(
    mesh: &Mesh,
    e: usize,
    re: &ReferenceElement,
    p: [f64; 2],
) -> Matrix2<f64> {
    let el = mesh.element(e);
    let grads = re.eval_basis_grad(p);
    let mut j = Matrix2::zeros();
    for (i, &n) in el.nodes.iter().enumerate() {
        let c = mesh.node(n);
        let g = grads[i];
        j[(0, 0)] += c.x * g[0];
        j[(0, 1)] += c.x * g[1];
        j[(1, 0)] += c.y * g[0];
        j[(1, 1)] += c.y * g[1];
    }
    j
}

/// J_M at every quadrature point of element `e`: the Jacobian of the current
/// isoparametric map, sum of node coordinates times basis gradients.
pub fn eval_current_jacobian(mesh: &Mesh, e: usize, re: &ReferenceElement) -> Vec<Matrix2<f64>> {
    let el = mesh.element(e);
    let coords: Vec<Coord2> = el.nodes.iter().map(|&n| mesh.node(n)).collect();
    (0..re.n_qpoints())
        .map(|q| {
            let grads = re.grads_at(q);
            let mut j = Matrix2::zeros();
            for (c, g) in coords.iter().zip(grads) {
                j[(0, 0)] += c.x * g[0];
                j[(0, 1)] += c.x * g[1];
                j[(1, 0)] += c.y * g[0];
                j[(1, 1)] += c.y * g[1];
            }
            j
        })
        .collect()
}

/// Ideal-map Jacobian (linear vertex map of the initial element: affine for
/// triangles, bilinear for quads) at an arbitrary reference point.
pub fn ideal_jacobian_at(mesh: &Mesh, e: usize, p: [f64; 2]) -> Matrix2<f64> {
    let v = mesh.initial_vertices(e);
    match mesh.element(e).shape {
        Shape::Tri => Matrix2::new(
            0.5 * (v[1].x - v[0].x),
            0.5 * (v[2].x - v[0].x),
            0.5 * (v[1].y - v[0].y),
            0.5 * (v[2].y - v[0].y),
        ),
        Shape::Quad => {
            // Corner signs of the bilinear vertex map on [-1,1]^2.
            const SX: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
            const SY: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];
            let mut j = Matrix2::zeros();
            for k in 0..4 {
                let dndxi = 0.25 * SX[k] * (1.0 + p[1] * SY[k]);
                let dndeta = 0.25 * SY[k] * (1.0 + p[0] * SX[k]);
                j[(0, 0)] += v[k].x * dndxi;
                j[(0, 1)] += v[k].x * dndeta;
                j[(1, 0)] += v[k].y * dndxi;
                j[(1, 1)] += v[k].y * dndeta;
            }
            j
        }
    }
}

/// J_I at every quadrature point of element `e`, from the frozen initial
/// vertices. Errors on a degenerate (non-positive area) ideal element.
pub fn eval_ideal_jacobian(
    mesh: &Mesh,
    e: usize,
    re: &ReferenceElement,
) -> Result<Vec<Matrix2<f64>>> {
    let js: Vec<Matrix2<f64>> = re
        .qpoints()
        .iter()
        .map(|&p| ideal_jacobian_at(mesh, e, p))
        .collect();
    for j in &js {
        if !(j.determinant() > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "element {e}: ideal element degenerate (det J_I = {})",
                j.determinant()
            )));
        }
    }
    Ok(js)
}

/// Target Jacobian J_T = M * J_I for the element's barycentre metric `m`.
pub fn build_target_jacobian(j_ideal: &Matrix2<f64>, m: &MetricTensor) -> Matrix2<f64> {
    m.matrix() * j_ideal
}

/// Deformation gradient F = J_M * (J_T)^-1.
pub fn deformation_gradient(
    j_current: &Matrix2<f64>,
    j_target: &Matrix2<f64>,
) -> Result<Matrix2<f64>> {
    let inv = j_target
        .try_inverse()
        .ok_or_else(|| Error::Singular("target Jacobian".into()))?;
    Ok(j_current * inv)
}

/// How an element's barycentre metric acts on J_I. The scalar route implements
/// the identity M = r I acting as plain scaling (J_T = r J_I); the tensor route
/// is the general matrix product.
#[derive(Debug, Clone, Copy)]
pub enum TargetScaling {
    Scalar(f64),
    Tensor(MetricTensor),
}

impl TargetScaling {
    fn apply(self, j_ideal: &Matrix2<f64>) -> Matrix2<f64> {
        match self {
            TargetScaling::Scalar(r) => j_ideal * r,
            TargetScaling::Tensor(m) => build_target_jacobian(j_ideal, &m),
        }
    }
}

/// Fraction of the element target area used as the energy regularization floor.
pub const REGULARIZATION_DELTA_FACTOR: f64 = 1e-8;

/// Per-run cache of everything derived from the immutable initial mesh and the
/// fixed metric field: J_T, its inverse and determinant per quadrature point,
/// target-space basis gradients (J_T)^-T grad l_i for one-pass F assembly,
/// per-element target area and regularization floor.
pub struct TargetTables {
    /// Start of element e in the q-major arrays.
    offsets: Vec<usize>,
    /// Start of element e in `tgrad` (q-major, node-minor).
    grad_offsets: Vec<usize>,
    jt: Vec<Matrix2<f64>>,
    jt_inv: Vec<Matrix2<f64>>,
    det_jt: Vec<f64>,
    /// Quadrature weight times |det J_T|, the energy integration weight.
    wdet: Vec<f64>,
    tgrad: Vec<[f64; 2]>,
    area: Vec<f64>,
    delta: Vec<f64>,
}

impl TargetTables {
    /// Builds the cache for `field`, sampling one metric per element at the
    /// initial-vertex barycentre. Isotropic fields (including identity) go
    /// through the scalar route.
    pub fn build(mesh: &Mesh, basis: &RefBasis, field: &MetricField) -> Result<Self> {
        Self::build_with(mesh, basis, |bary| match field {
            MetricField::Identity => TargetScaling::Scalar(1.0),
            MetricField::Isotropic(profile) => {
                TargetScaling::Scalar(gaussian_r(bary.dist(profile.center), profile))
            }
            MetricField::Ring(profile) => {
                TargetScaling::Tensor(crate::metric::ring_metric_eval(bary.x, bary.y, profile))
            }
        })
    }

    /// Builds the cache with an explicit per-element scaling rule; `sample` is
    /// called once per element with its initial barycentre.
    pub fn build_with(
        mesh: &Mesh,
        basis: &RefBasis,
        sample: impl Fn(Coord2) -> TargetScaling,
    ) -> Result<Self> {
        let ne = mesh.n_elements();
        let mut t = TargetTables {
            offsets: Vec::with_capacity(ne + 1),
            grad_offsets: Vec::with_capacity(ne + 1),
            jt: Vec::new(),
            jt_inv: Vec::new(),
            det_jt: Vec::new(),
            wdet: Vec::new(),
            tgrad: Vec::new(),
            area: Vec::with_capacity(ne),
            delta: Vec::with_capacity(ne),
        };
        for e in 0..ne {
            t.offsets.push(t.det_jt.len());
            t.grad_offsets.push(t.tgrad.len());
            let re = basis.get(mesh.element(e).shape);
            let scaling = sample(mesh.barycentre(e));
            if let TargetScaling::Tensor(m) = scaling {
                if !m.is_spd() {
                    return Err(Error::InvalidMesh(format!(
                        "element {e}: metric at barycentre is not SPD"
                    )));
                }
            }
            let mut area = 0.0;
            for q in 0..re.n_qpoints() {
                let ji = ideal_jacobian_at(mesh, e, re.qpoints()[q]);
                let jt = scaling.apply(&ji);
                let det = jt.determinant();
                if !(det > 0.0) {
                    return Err(Error::InvalidMesh(format!(
                        "element {e}: target Jacobian has det {det} at quadrature point {q}"
                    )));
                }
                let inv = jt
                    .try_inverse()
                    .ok_or_else(|| Error::Singular(format!("target Jacobian of element {e}")))?;
                let w = re.qweights()[q] * det.abs();
                area += w;
                for g in re.grads_at(q) {
                    // (J_T)^-T grad: rows of the inverse against the gradient.
                    t.tgrad.push([
                        inv[(0, 0)] * g[0] + inv[(1, 0)] * g[1],
                        inv[(0, 1)] * g[0] + inv[(1, 1)] * g[1],
                    ]);
                }
                t.jt.push(jt);
                t.jt_inv.push(inv);
                t.det_jt.push(det);
                t.wdet.push(w);
            }
            t.area.push(area);
            t.delta.push(REGULARIZATION_DELTA_FACTOR * area);
        }
        t.offsets.push(t.det_jt.len());
        t.grad_offsets.push(t.tgrad.len());
        Ok(t)
    }

    pub fn jt(&self, e: usize, q: usize) -> &Matrix2<f64> {
        &self.jt[self.offsets[e] + q]
    }

    pub fn jt_inv(&self, e: usize, q: usize) -> &Matrix2<f64> {
        &self.jt_inv[self.offsets[e] + q]
    }

    pub fn det_jt(&self, e: usize, q: usize) -> f64 {
        self.det_jt[self.offsets[e] + q]
    }

    /// w_q * |det J_T| at quadrature point `q` of element `e`.
    pub fn weight(&self, e: usize, q: usize) -> f64 {
        self.wdet[self.offsets[e] + q]
    }

    /// Target-space basis gradients at quadrature point `q`, one per node.
    pub fn target_grads(&self, e: usize, q: usize, n_nodes: usize) -> &[[f64; 2]] {
        let base = self.grad_offsets[e] + q * n_nodes;
        &self.tgrad[base..base + n_nodes]
    }

    /// Target area of element `e` (quadrature measure of the target element).
    pub fn area(&self, e: usize) -> f64 {
        self.area[e]
    }

    /// Regularization floor for element `e`.
    pub fn delta(&self, e: usize) -> f64 {
        self.delta[e]
    }

    pub fn n_qpoints(&self, e: usize) -> usize {
        self.offsets[e + 1] - self.offsets[e]
    }

    /// Deformation gradient of element `e` at quadrature point `q` for the
    /// current node coordinates, assembled from the cached target gradients.
    pub fn deformation_at(&self, mesh: &Mesh, e: usize, q: usize) -> Matrix2<f64> {
        let el = mesh.element(e);
        let grads = self.target_grads(e, q, el.nodes.len());
        let mut f = Matrix2::zeros();
        for (&n, g) in el.nodes.iter().zip(grads) {
            let c = mesh.node(n);
            f[(0, 0)] += c.x * g[0];
            f[(0, 1)] += c.x * g[1];
            f[(1, 0)] += c.y * g[0];
            f[(1, 1)] += c.y * g[1];
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_quadrant_tri_mesh, generate_unit_square_quad_mesh, Element};
    use crate::metric::GaussianRingProfile;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, BTreeSet};

    /// Single straight-sided quad element covering [x0, x0+w] x [y0, y0+h].
    fn rect_mesh(order: usize, x0: f64, y0: f64, w: f64, h: f64) -> Mesh {
        let re = ReferenceElement::new(Shape::Quad, order).unwrap();
        let nodes: Vec<Coord2> = re
            .nodes()
            .iter()
            .map(|&[xi, eta]| Coord2::new(x0 + 0.5 * (xi + 1.0) * w, y0 + 0.5 * (eta + 1.0) * h))
            .collect();
        let element = Element {
            shape: Shape::Quad,
            nodes: (0..nodes.len()).collect(),
        };
        Mesh::new(
            order,
            nodes,
            vec![element],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        )
        .unwrap()
    }

    /// Single element whose nodes sit at the reference positions.
    fn reference_mesh(shape: Shape, order: usize) -> Mesh {
        let re = ReferenceElement::new(shape, order).unwrap();
        let nodes: Vec<Coord2> = re.nodes().iter().map(|&[x, y]| Coord2::new(x, y)).collect();
        let element = Element {
            shape,
            nodes: (0..nodes.len()).collect(),
        };
        Mesh::new(
            order,
            nodes,
            vec![element],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn reference_elements_map_to_identity_jacobian() {
        for shape in [Shape::Quad, Shape::Tri] {
            let mesh = reference_mesh(shape, 3);
            let re = ReferenceElement::new(shape, 3).unwrap();
            for j in eval_current_jacobian(&mesh, 0, &re) {
                assert_abs_diff_eq!(j[(0, 0)], 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(j[(1, 1)], 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(j[(0, 1)], 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(j[(1, 0)], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rectangle_has_constant_diagonal_jacobians() {
        let mesh = rect_mesh(3, 0.2, -0.1, 1.0, 1.0);
        let re = ReferenceElement::new(Shape::Quad, 3).unwrap();
        for j in eval_current_jacobian(&mesh, 0, &re) {
            assert_abs_diff_eq!(j[(0, 0)], 0.5, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(1, 1)], 0.5, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(0, 1)], 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(1, 0)], 0.0, epsilon = 1e-13);
        }
        let ji = ideal_jacobian_at(&mesh, 0, [0.3, -0.4]);
        assert_abs_diff_eq!(ji[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ji[(1, 1)], 0.5, epsilon = 1e-15);

        let wide = rect_mesh(2, 0.0, 0.0, 3.0, 0.5);
        let ji = ideal_jacobian_at(&wide, 0, [0.0, 0.0]);
        assert_abs_diff_eq!(ji[(0, 0)], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ji[(1, 1)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn current_jacobian_matches_finite_differences_on_curved_element() {
        let mut mesh = generate_unit_square_quad_mesh(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h_elem = 1.0 / 3.0;
        for i in 0..mesh.n_nodes() {
            let p = mesh.node(i);
            let dx = (rng.random::<f64>() - 0.5) * 0.1 * h_elem;
            let dy = (rng.random::<f64>() - 0.5) * 0.1 * h_elem;
            mesh.set_node_raw(i, Coord2::new(p.x + dx, p.y + dy));
        }
        let re = ReferenceElement::new(Shape::Quad, 3).unwrap();
        let h = 1e-6;
        for e in [0, 4, 8] {
            let js = eval_current_jacobian(&mesh, e, &re);
            for (q, &[xi, eta]) in re.qpoints().iter().enumerate() {
                let px = map_point(&mesh, e, &re, [xi + h, eta]);
                let mx = map_point(&mesh, e, &re, [xi - h, eta]);
                let py = map_point(&mesh, e, &re, [xi, eta + h]);
                let my = map_point(&mesh, e, &re, [xi, eta - h]);
                let fd = Matrix2::new(
                    (px.x - mx.x) / (2.0 * h),
                    (py.x - my.x) / (2.0 * h),
                    (px.y - mx.y) / (2.0 * h),
                    (py.y - my.y) / (2.0 * h),
                );
                let err = (js[q] - fd).abs().max();
                assert!(err < 1e-7, "element {e} qpoint {q}: fd error {err}");
            }
        }
    }

    #[test]
    fn current_jacobian_is_exact_for_polynomial_geometry() {
        // Nodes placed on x = xi + 0.2 xi^2 eta, y = eta + 0.1 xi^3: inside the
        // order-3 tensor space, so the interpolant reproduces the map exactly.
        let re = ReferenceElement::new(Shape::Quad, 3).unwrap();
        let f = |xi: f64, eta: f64| Coord2::new(xi + 0.2 * xi * xi * eta, eta + 0.1 * xi * xi * xi);
        let nodes: Vec<Coord2> = re.nodes().iter().map(|&[x, y]| f(x, y)).collect();
        let element = Element {
            shape: Shape::Quad,
            nodes: (0..nodes.len()).collect(),
        };
        let mesh = Mesh::new(
            3,
            nodes,
            vec![element],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        )
        .unwrap();
        for (q, &[xi, eta]) in re.qpoints().iter().enumerate() {
            let j = eval_current_jacobian(&mesh, 0, &re)[q];
            assert_abs_diff_eq!(j[(0, 0)], 1.0 + 0.4 * xi * eta, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(0, 1)], 0.2 * xi * xi, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(1, 0)], 0.3 * xi * xi, epsilon = 1e-13);
            assert_abs_diff_eq!(j[(1, 1)], 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn ideal_jacobian_of_reference_tri_is_identity() {
        let mesh = reference_mesh(Shape::Tri, 1);
        let j = ideal_jacobian_at(&mesh, 0, [-0.3, -0.2]);
        assert_eq!(j, Matrix2::identity());
    }

    #[test]
    fn sheared_quad_ideal_jacobian_matches_finite_differences() {
        // Bilinear map of an irregular quad evaluated independently in the test.
        let v = [
            Coord2::new(0.0, 0.0),
            Coord2::new(2.0, 0.3),
            Coord2::new(2.4, 1.9),
            Coord2::new(-0.2, 1.4),
        ];
        let bilinear = |xi: f64, eta: f64| {
            let n = [
                0.25 * (1.0 - xi) * (1.0 - eta),
                0.25 * (1.0 + xi) * (1.0 - eta),
                0.25 * (1.0 + xi) * (1.0 + eta),
                0.25 * (1.0 - xi) * (1.0 + eta),
            ];
            let mut p = Coord2::new(0.0, 0.0);
            for k in 0..4 {
                p = p + v[k] * n[k];
            }
            p
        };
        let re = ReferenceElement::new(Shape::Quad, 1).unwrap();
        let nodes: Vec<Coord2> = re.nodes().iter().map(|&[x, y]| bilinear(x, y)).collect();
        let element = Element {
            shape: Shape::Quad,
            nodes: (0..4).collect(),
        };
        let mesh = Mesh::new(
            1,
            nodes,
            vec![element],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        )
        .unwrap();
        let h = 1e-6;
        let mut distinct = Vec::new();
        for &[xi, eta] in re.qpoints() {
            let j = ideal_jacobian_at(&mesh, 0, [xi, eta]);
            let px = bilinear(xi + h, eta);
            let mx = bilinear(xi - h, eta);
            let py = bilinear(xi, eta + h);
            let my = bilinear(xi, eta - h);
            assert_abs_diff_eq!(j[(0, 0)], (px.x - mx.x) / (2.0 * h), epsilon = 1e-7);
            assert_abs_diff_eq!(j[(0, 1)], (py.x - my.x) / (2.0 * h), epsilon = 1e-7);
            assert_abs_diff_eq!(j[(1, 0)], (px.y - mx.y) / (2.0 * h), epsilon = 1e-7);
            assert_abs_diff_eq!(j[(1, 1)], (py.y - my.y) / (2.0 * h), epsilon = 1e-7);
            distinct.push(j[(0, 0)]);
        }
        // The bilinear Jacobian genuinely varies across quadrature points.
        let spread = distinct.iter().cloned().fold(f64::MIN, f64::max)
            - distinct.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-3);
    }

    #[test]
    fn target_jacobian_products() {
        let ji = Matrix2::identity();
        let m = MetricTensor::identity();
        assert_eq!(build_target_jacobian(&ji, &m), ji);

        let m = crate::metric::isotropic_metric(0.5);
        let jt = build_target_jacobian(&ji, &m);
        assert_eq!(jt, Matrix2::new(0.5, 0.0, 0.0, 0.5));
        // Scalar route agrees with the tensor route.
        let jt_scalar = TargetScaling::Scalar(0.5).apply(&ji);
        assert_eq!(jt, jt_scalar);

        let m = MetricTensor {
            m11: 0.1,
            m12: 0.0,
            m22: 1.0,
        };
        let ji = Matrix2::new(2.0, 0.0, 0.0, 3.0);
        let jt = build_target_jacobian(&ji, &m);
        assert_abs_diff_eq!(jt[(0, 0)], 0.2, epsilon = 1e-16);
        assert_abs_diff_eq!(jt[(1, 1)], 3.0, epsilon = 1e-16);
        assert_eq!(jt[(0, 1)], 0.0);
        assert_eq!(jt[(1, 0)], 0.0);
    }

    #[test]
    fn deformation_gradient_cases() {
        let j = Matrix2::new(0.7, 0.1, -0.2, 0.9);
        let f = deformation_gradient(&j, &j).unwrap();
        assert_abs_diff_eq!((f - Matrix2::identity()).abs().max(), 0.0, epsilon = 1e-14);

        let f = deformation_gradient(&(Matrix2::identity() * 2.0), &Matrix2::identity()).unwrap();
        assert_eq!(f, Matrix2::identity() * 2.0);

        let jt = Matrix2::new(0.5, 0.0, 0.0, 1.0);
        let f = deformation_gradient(&Matrix2::identity(), &jt).unwrap();
        assert_abs_diff_eq!(f[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[(1, 1)], 1.0, epsilon = 1e-15);

        let singular = Matrix2::new(1.0, 2.0, 0.5, 1.0);
        assert!(deformation_gradient(&Matrix2::identity(), &singular).is_err());
    }

    #[test]
    fn identity_metric_tables_reproduce_ideal_jacobian_exactly() {
        let mesh = generate_unit_square_quad_mesh(4, 3).unwrap();
        let basis = RefBasis::for_mesh(&mesh).unwrap();
        let tables = TargetTables::build(&mesh, &basis, &MetricField::Identity).unwrap();
        let re = basis.get(Shape::Quad);
        for e in 0..mesh.n_elements() {
            for (q, &p) in re.qpoints().iter().enumerate() {
                let ji = ideal_jacobian_at(&mesh, e, p);
                assert_eq!(*tables.jt(e, q), ji);
            }
            // Element target area of the uniform 4x4 grid.
            assert_abs_diff_eq!(tables.area(e), 1.0 / 16.0, epsilon = 1e-14);
            assert_abs_diff_eq!(
                tables.delta(e),
                REGULARIZATION_DELTA_FACTOR / 16.0,
                epsilon = 1e-22
            );
        }
    }

    #[test]
    fn identity_start_gives_identity_deformation() {
        for mesh in [
            generate_unit_square_quad_mesh(4, 3).unwrap(),
            generate_quadrant_tri_mesh(3, 0.125).unwrap(),
        ] {
            let basis = RefBasis::for_mesh(&mesh).unwrap();
            let tables = TargetTables::build(&mesh, &basis, &MetricField::Identity).unwrap();
            for e in 0..mesh.n_elements() {
                for q in 0..tables.n_qpoints(e) {
                    let f = tables.deformation_at(&mesh, e, q);
                    assert!((f - Matrix2::identity()).abs().max() < 1e-12);
                }
            }
        }
    }

    #[test]
    // q is the shared quadrature-point index into both jacobian sets.
    #[allow(clippy::needless_range_loop)]
    fn composition_consistency_under_ring_field() {
        let mut mesh = generate_unit_square_quad_mesh(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..mesh.n_nodes() {
            let p = mesh.node(i);
            let dx = (rng.random::<f64>() - 0.5) * 0.02;
            let dy = (rng.random::<f64>() - 0.5) * 0.02;
            mesh.set_node_raw(i, Coord2::new(p.x + dx, p.y + dy));
        }
        let basis = RefBasis::for_mesh(&mesh).unwrap();
        let profile = GaussianRingProfile::ring_at(Coord2::new(0.5, 0.5));
        let tables = TargetTables::build(&mesh, &basis, &MetricField::Ring(profile)).unwrap();
        let re = basis.get(Shape::Quad);
        for e in 0..mesh.n_elements() {
            let jm = eval_current_jacobian(&mesh, e, re);
            for q in 0..tables.n_qpoints(e) {
                let f = tables.deformation_at(&mesh, e, q);
                let lhs = f.determinant() * tables.det_jt(e, q);
                let rhs = jm[q].determinant();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn degenerate_ideal_element_is_rejected() {
        // Two coincident vertices give a zero-area ideal element.
        let nodes = vec![
            Coord2::new(0.0, 0.0),
            Coord2::new(1.0, 0.0),
            Coord2::new(1.0, 0.0),
        ];
        let element = Element {
            shape: Shape::Tri,
            nodes: vec![0, 1, 2],
        };
        let mesh = Mesh::new(
            1,
            nodes,
            vec![element],
            vec![],
            BTreeMap::new(),
            BTreeSet::new(),
        )
        .unwrap();
        let basis = RefBasis::for_mesh(&mesh).unwrap();
        assert!(TargetTables::build(&mesh, &basis, &MetricField::Identity).is_err());
        assert!(eval_ideal_jacobian(&mesh, 0, basis.get(Shape::Tri)).is_err());
    }
}
