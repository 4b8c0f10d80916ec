//! Energy minimization by node relocation: Gauss-Seidel sweeps over movable
//! nodes, each taking an Armijo-backtracked step along its negative gradient.
//! Interior nodes move in the plane; boundary-bound nodes slide in curve
//! parameter; frozen nodes never move. A step is accepted only when the local
//! energy strictly decreases and every quadrature point of the adjacent
//! elements keeps a positive determinant, so validity is preserved
//! unconditionally.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::energy::{element_energy, node_energy_gradient, total_energy, MaterialConstants};
use crate::mapping::{RefBasis, TargetTables};
use crate::mesh::{Coord2, Mesh};
use crate::metric::MetricField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_sweeps: usize,
    /// Converged when no node of a sweep moves farther than this.
    pub node_step_tol: f64,
    /// Converged when a sweep's relative energy decrease falls below this.
    pub energy_rel_tol: f64,
    /// Line-search step shrink factor, in (0,1).
    pub ls_backtrack: f64,
    pub ls_max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub ls_armijo: f64,
    /// 0 = deterministic lexicographic sweep order; otherwise the seed of a
    /// per-sweep shuffle.
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_sweeps: 200,
            node_step_tol: 1e-8,
            energy_rel_tol: 1e-9,
            ls_backtrack: 0.5,
            ls_max_iters: 20,
            ls_armijo: 1e-4,
            rng_seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        if !(self.node_step_tol > 0.0) || !(self.energy_rel_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.ls_backtrack > 0.0 && self.ls_backtrack < 1.0) {
            return Err(Error::Config(format!(
                "ls_backtrack must lie in (0,1), got {}",
                self.ls_backtrack
            )));
        }
        if self.ls_max_iters == 0 {
            return Err(Error::Config("ls_max_iters must be at least 1".into()));
        }
        if !(self.ls_armijo > 0.0) {
            return Err(Error::Config("ls_armijo must be positive".into()));
        }
        Ok(())
    }
}

/// What an optimization run did, sweep by sweep.
#[derive(Debug, Clone)]
pub struct AdaptReport {
    pub sweeps_run: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Largest node movement of the last sweep.
    pub max_node_displacement: f64,
    /// Smallest det F over all quadrature points of the final mesh.
    pub min_det_f_final: f64,
    /// False when the run stopped only because max_sweeps was exhausted.
    pub converged: bool,
    /// Total energy after each sweep; non-increasing.
    pub per_sweep_energy: Vec<f64>,
}

/// Minimum det J_M over every element and quadrature point: positive means the
/// mesh is valid at quadrature resolution.
pub fn validity_scan(mesh: &Mesh, basis: &RefBasis) -> f64 {
    let mut min_det = f64::INFINITY;
    for e in 0..mesh.n_elements() {
        let re = basis.get(mesh.element(e).shape);
        for j in crate::mapping::eval_current_jacobian(mesh, e, re) {
            min_det = min_det.min(j.determinant());
        }
    }
    min_det
}

/// Minimizes the mesh energy under `field`, building the target cache
/// internally. The mesh is modified in place.
pub fn optimize(
    mesh: &mut Mesh,
    field: &MetricField,
    constants: &MaterialConstants,
    config: &OptimizerConfig,
) -> Result<AdaptReport> {
    let basis = RefBasis::for_mesh(mesh)?;
    let tables = TargetTables::build(mesh, &basis, field)?;
    optimize_with_tables(mesh, &tables, constants, config)
}

/// Local energy and validity over one node's adjacent elements.
fn local_state(
    mesh: &Mesh,
    tables: &TargetTables,
    c: &MaterialConstants,
    elems: &[usize],
) -> (f64, f64) {
    let mut energy = 0.0;
    let mut min_det = f64::INFINITY;
    for &e in elems {
        let ee = element_energy(mesh, tables, e, c);
        energy += ee.energy;
        min_det = min_det.min(ee.min_det_f);
    }
    (energy, min_det)
}

/// Minimizes against a prebuilt target cache; entry point for callers that
/// assemble J_T themselves.
pub fn optimize_with_tables(
    mesh: &mut Mesh,
    tables: &TargetTables,
    constants: &MaterialConstants,
    config: &OptimizerConfig,
) -> Result<AdaptReport> {
    config.validate()?;
    MaterialConstants::new(constants.mu, constants.lambda)?;

    let initial = total_energy(mesh, tables, constants);
    if !(initial.min_det_f > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "initial mesh is invalid: min det F = {} at quadrature resolution",
            initial.min_det_f
        )));
    }

    let adjacency = mesh.node_to_elements();
    let mut order: Vec<usize> = (0..mesh.n_nodes())
        .filter(|&n| !mesh.is_frozen(n))
        .collect();
    let mut rng = (config.rng_seed != 0).then(|| ChaCha8Rng::seed_from_u64(config.rng_seed));

    // Remembered line-search starting step per node, seeded from the local
    // element size; successful steps grow it, failures shrink it.
    let step_floor = 1e-3 * config.node_step_tol;
    let mut step_mem: Vec<f64> = (0..mesh.n_nodes())
        .map(|n| {
            let h = adjacency[n]
                .iter()
                .map(|&e| tables.area(e).sqrt())
                .fold(f64::INFINITY, f64::min);
            if h.is_finite() {
                0.2 * h
            } else {
                0.0
            }
        })
        .collect();

    let mut per_sweep_energy = Vec::new();
    let mut e_prev = initial.total;
    let mut converged = false;
    let mut sweeps_run = 0;
    let mut last_max_disp = 0.0;

    for _ in 0..config.max_sweeps {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut max_disp = 0.0_f64;

        for &n in &order {
            let elems = &adjacency[n][..];
            if elems.is_empty() {
                continue;
            }
            let g = node_energy_gradient(mesh, tables, constants, n, elems);
            let disp = if let Some(binding) = mesh.binding(n) {
                let (curve_id, t0) = (binding.curve, binding.t);
                let tau = mesh.curve(curve_id).velocity(t0);
                let slope = g[0] * tau.x + g[1] * tau.y;
                if slope == 0.0 {
                    continue;
                }
                slide_node(
                    mesh,
                    tables,
                    constants,
                    config,
                    elems,
                    n,
                    curve_id,
                    t0,
                    slope,
                    &mut step_mem[n],
                )
            } else {
                let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
                if norm == 0.0 {
                    continue;
                }
                move_node(
                    mesh,
                    tables,
                    constants,
                    config,
                    elems,
                    n,
                    [-g[0] / norm, -g[1] / norm],
                    norm,
                    &mut step_mem[n],
                )
            };
            if step_mem[n] < step_floor {
                step_mem[n] = step_floor;
            }
            max_disp = max_disp.max(disp);
        }

        let breakdown = total_energy(mesh, tables, constants);
        sweeps_run += 1;
        last_max_disp = max_disp;
        per_sweep_energy.push(breakdown.total);

        let rel_drop = (e_prev - breakdown.total) / e_prev.abs().max(1e-300);
        e_prev = breakdown.total;
        if max_disp <= config.node_step_tol || rel_drop < config.energy_rel_tol {
            converged = true;
            break;
        }
    }

    let final_breakdown = total_energy(mesh, tables, constants);
    Ok(AdaptReport {
        sweeps_run,
        initial_energy: initial.total,
        final_energy: final_breakdown.total,
        max_node_displacement: last_max_disp,
        min_det_f_final: final_breakdown.min_det_f,
        converged,
        per_sweep_energy,
    })
}

/// Backtracking step of a free node along `dir`; returns the accepted
/// displacement (0 when every trial was rejected).
#[allow(clippy::too_many_arguments)]
fn move_node(
    mesh: &mut Mesh,
    tables: &TargetTables,
    c: &MaterialConstants,
    config: &OptimizerConfig,
    elems: &[usize],
    n: usize,
    dir: [f64; 2],
    grad_norm: f64,
    step_mem: &mut f64,
) -> f64 {
    let origin = mesh.node(n);
    let (e0, _) = local_state(mesh, tables, c, elems);
    let mut step = *step_mem;
    for _ in 0..config.ls_max_iters {
        let trial = Coord2::new(origin.x + step * dir[0], origin.y + step * dir[1]);
        mesh.set_node_raw(n, trial);
        let (e1, min_det) = local_state(mesh, tables, c, elems);
        if min_det > 0.0 && e1 < e0 && e1 <= e0 - config.ls_armijo * step * grad_norm {
            *step_mem = 2.0 * step;
            return step;
        }
        step *= config.ls_backtrack;
    }
    mesh.set_node_raw(n, origin);
    *step_mem *= config.ls_backtrack;
    0.0
}

/// Backtracking slide of a bound node in curve parameter; the position always
/// comes from the curve evaluation, so the binding stays exact. Returns the
/// physical displacement.
#[allow(clippy::too_many_arguments)]
fn slide_node(
    mesh: &mut Mesh,
    tables: &TargetTables,
    c: &MaterialConstants,
    config: &OptimizerConfig,
    elems: &[usize],
    n: usize,
    curve_id: usize,
    t0: f64,
    slope: f64,
    step_mem: &mut f64,
) -> f64 {
    let origin = mesh.node(n);
    let speed = mesh.curve(curve_id).speed();
    if speed == 0.0 {
        return 0.0;
    }
    let (e0, _) = local_state(mesh, tables, c, elems);
    let dir = -slope.signum();
    // Step memory is kept in physical length; convert to parameter space.
    let mut dt = *step_mem / speed;
    for _ in 0..config.ls_max_iters {
        let t1 = (t0 + dir * dt).clamp(0.0, 1.0);
        if t1 != t0 {
            mesh.slide_bound_node(n, t1).expect("t clamped into range");
            let (e1, min_det) = local_state(mesh, tables, c, elems);
            let moved = (t1 - t0).abs();
            if min_det > 0.0 && e1 < e0 && e1 <= e0 - config.ls_armijo * moved * slope.abs() {
                *step_mem = 2.0 * moved * speed;
                return mesh.node(n).dist(origin);
            }
        }
        dt *= config.ls_backtrack;
    }
    mesh.slide_bound_node(n, t0)
        .expect("restoring original parameter");
    *step_mem *= config.ls_backtrack;
    0.0
}
