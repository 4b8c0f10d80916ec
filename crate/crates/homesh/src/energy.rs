//! Hyperelastic distortion energy of the deformation F between current and
//! target elements:
//!
//!   W(F) = mu/2 (I1 - 2) - mu ln J_d + lambda/2 (ln J_d)^2,  I1 = ||F||_F^2
//!
//! J_d is the regularized determinant: the smooth floor
//! J_d = (J + sqrt(J^2 + 4 delta^2)) / 2 keeps W finite and C^1 through
//! inverted configurations (J <= 0) while being bitwise equal to J once
//! J exceeds a few thousand delta, so healthy elements see the exact density.

use nalgebra::Matrix2;

use crate::mapping::TargetTables;
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Elastic moduli of the distortion energy. Both must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialConstants {
    pub mu: f64,
    pub lambda: f64,
}

impl MaterialConstants {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(MaterialConstants { mu, lambda })
    }
}

impl Default for MaterialConstants {
    fn default() -> Self {
        MaterialConstants {
            mu: 1.0,
            lambda: 1.0,
        }
    }
}

/// Energy of a whole mesh, with the validity and regularization diagnostics
/// accumulated over every quadrature point.
#[derive(Debug, Clone)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub per_element: Vec<f64>,
    /// Smallest det F over all quadrature points; negative means inversion.
    pub min_det_f: f64,
    /// Quadrature points whose raw determinant sat below 10 delta.
    pub regularized_count: usize,
}

/// Energy and diagnostics of a single element.
#[derive(Debug, Clone, Copy)]
pub struct ElementEnergy {
    pub energy: f64,
    pub min_det_f: f64,
    pub regularized: usize,
}

/// Regularized determinant and its slope d(J_d)/dJ. For delta = 0 this is the
/// identity on positive J.
#[inline]
fn floor_det(j: f64, delta: f64) -> (f64, f64) {
    if delta == 0.0 {
        return (j, 1.0);
    }
    let s = (j * j + 4.0 * delta * delta).sqrt();
    (0.5 * (j + s), 0.5 * (1.0 + j / s))
}

/// Pointwise energy density W(F).
pub fn strain_energy_density(f: &Matrix2<f64>, c: &MaterialConstants, delta: f64) -> f64 {
    let i1 = f.norm_squared();
    let (jd, _) = floor_det(f.determinant(), delta);
    let lnj = jd.ln();
    0.5 * c.mu * (i1 - 2.0) - c.mu * lnj + 0.5 * c.lambda * lnj * lnj
}

/// W(F) together with its analytic derivative dW/dF.
pub fn strain_energy_density_df(
    f: &Matrix2<f64>,
    c: &MaterialConstants,
    delta: f64,
) -> (f64, Matrix2<f64>) {
    let i1 = f.norm_squared();
    let j = f.determinant();
    let (jd, slope) = floor_det(j, delta);
    let lnj = jd.ln();
    let w = 0.5 * c.mu * (i1 - 2.0) - c.mu * lnj + 0.5 * c.lambda * lnj * lnj;
    // dJ/dF for a 2x2 matrix, laid out like F itself.
    let cof = Matrix2::new(f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)]);
    let coef = (c.lambda * lnj - c.mu) / jd * slope;
    (w, f * c.mu + cof * coef)
}

/// Energy of element `e` under the current node positions: quadrature of W
/// against the target measure w_q |det J_T|.
pub fn element_energy(
    mesh: &Mesh,
    tables: &TargetTables,
    e: usize,
    c: &MaterialConstants,
) -> ElementEnergy {
    let delta = tables.delta(e);
    let mut energy = 0.0;
    let mut min_det_f = f64::INFINITY;
    let mut regularized = 0;
    for q in 0..tables.n_qpoints(e) {
        let f = tables.deformation_at(mesh, e, q);
        let j = f.determinant();
        if j < min_det_f {
            min_det_f = j;
        }
        if j < 10.0 * delta {
            regularized += 1;
        }
        energy += tables.weight(e, q) * strain_energy_density(&f, c, delta);
    }
    ElementEnergy {
        energy,
        min_det_f,
        regularized,
    }
}

/// Total energy with per-element contributions. The total is accumulated with
/// Neumaier compensation so repeated evaluations of large meshes stay stable
/// enough for monotonicity checks.
pub fn total_energy(mesh: &Mesh, tables: &TargetTables, c: &MaterialConstants) -> EnergyBreakdown {
    let ne = mesh.n_elements();
    let mut per_element = Vec::with_capacity(ne);
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut min_det_f = f64::INFINITY;
    let mut regularized_count = 0;
    for e in 0..ne {
        let ee = element_energy(mesh, tables, e, c);
        per_element.push(ee.energy);
        let t = sum + ee.energy;
        if sum.abs() >= ee.energy.abs() {
            comp += (sum - t) + ee.energy;
        } else {
            comp += (ee.energy - t) + sum;
        }
        sum = t;
        min_det_f = min_det_f.min(ee.min_det_f);
        regularized_count += ee.regularized;
    }
    EnergyBreakdown {
        total: sum + comp,
        per_element,
        min_det_f,
        regularized_count,
    }
}

/// Gradient of the total energy with respect to the position of `node`,
/// summed over the elements in `elems` (the node's adjacency). Elements not
/// containing the node contribute nothing.
pub fn node_energy_gradient(
    mesh: &Mesh,
    tables: &TargetTables,
    c: &MaterialConstants,
    node: usize,
    elems: &[usize],
) -> [f64; 2] {
    let mut g = [0.0, 0.0];
    for &e in elems {
        let el = mesh.element(e);
        let Some(local) = el.nodes.iter().position(|&n| n == node) else {
            continue;
        };
        let delta = tables.delta(e);
        for q in 0..tables.n_qpoints(e) {
            let f = tables.deformation_at(mesh, e, q);
            let (_, p) = strain_energy_density_df(&f, c, delta);
            let gt = tables.target_grads(e, q, el.nodes.len())[local];
            let w = tables.weight(e, q);
            g[0] += w * (p[(0, 0)] * gt[0] + p[(0, 1)] * gt[1]);
            g[1] += w * (p[(1, 0)] * gt[0] + p[(1, 1)] * gt[1]);
        }
    }
    g
}
