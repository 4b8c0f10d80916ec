//! Metric tensors and the Gaussian ring refinement field.
//!
//! A metric tensor prescribes directional size scaling for target elements:
//! eigenvalues are scale factors, eigenvectors their directions. The ring field
//! shrinks elements radially around a circle of radius `mean_d` about a center
//! point, leaving tangential sizes untouched.

use nalgebra::Matrix2;

use crate::mesh::Coord2;
use crate::{Error, Result};

/// Symmetric positive-definite 2x2 tensor (m21 = m12 implied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl MetricTensor {
    pub fn identity() -> Self {
        MetricTensor {
            m11: 1.0,
            m12: 0.0,
            m22: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn is_spd(&self) -> bool {
        self.m11 > 0.0 && self.det() > 0.0
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m11, self.m12, self.m12, self.m22)
    }

    /// Eigenvalues ascending, via the closed form for symmetric 2x2 matrices.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let tr = self.m11 + self.m22;
        let gap = ((self.m11 - self.m22).powi(2) + 4.0 * self.m12 * self.m12).sqrt();
        [0.5 * (tr - gap), 0.5 * (tr + gap)]
    }

    /// Unit eigenvector for eigenvalue `lam` (callers pick one of
    /// [`MetricTensor::eigenvalues`]); undefined direction for repeated
    /// eigenvalues returns the x-axis.
    pub fn eigenvector(&self, lam: f64) -> [f64; 2] {
        // (M - lam I) v = 0; pick the larger row for stability.
        let r1 = [self.m11 - lam, self.m12];
        let r2 = [self.m12, self.m22 - lam];
        let n1 = r1[0] * r1[0] + r1[1] * r1[1];
        let n2 = r2[0] * r2[0] + r2[1] * r2[1];
        let row = if n1 >= n2 { r1 } else { r2 };
        let norm = (row[0] * row[0] + row[1] * row[1]).sqrt();
        if norm == 0.0 {
            return [1.0, 0.0];
        }
        [-row[1] / norm, row[0] / norm]
    }
}

/// Scalar metric r*I.
pub fn isotropic_metric(r: f64) -> MetricTensor {
    assert!(r > 0.0, "isotropic metric needs r > 0");
    MetricTensor {
        m11: r,
        m12: 0.0,
        m22: r,
    }
}

/// Metric scaling by `r` along direction (cos alpha, sin alpha) and by 1 across
/// it: the symmetric conjugation R(alpha) diag(r, 1) R(alpha)^T in closed form.
pub fn compose_radial_metric(r: f64, alpha: f64) -> MetricTensor {
    assert!(r > 0.0, "radial metric needs r > 0");
    let (s, c) = alpha.sin_cos();
    MetricTensor {
        m11: 1.0 + (r - 1.0) * c * c,
        m12: (r - 1.0) * s * c,
        m22: 1.0 + (r - 1.0) * s * s,
    }
}

/// Radial scale profile r(d) = 1 - (A / sqrt(2 pi sigma^2)) exp(-(d - mean_d)^2 / (2 sigma^2)),
/// measured from `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRingProfile {
    pub mean_d: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub center: Coord2,
}

impl GaussianRingProfile {
    pub fn new(mean_d: f64, sigma: f64, amplitude: f64, center: Coord2) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Config("ring profile needs sigma > 0".into()));
        }
        let depth = amplitude / (std::f64::consts::TAU * sigma * sigma).sqrt();
        if !(depth > 0.0 && depth < 1.0) {
            return Err(Error::Config(format!(
                "ring profile depth A/sqrt(2 pi sigma^2) = {depth} outside (0,1); \
                 r(d) would not stay positive"
            )));
        }
        Ok(GaussianRingProfile {
            mean_d,
            sigma,
            amplitude,
            center,
        })
    }

    /// The published experiment profile: mean 0.5, sigma 0.05, amplitude
    /// 0.9*sqrt(2 pi sigma^2), giving min r = 0.1 on the ring d = 0.5.
    pub fn ring_at(center: Coord2) -> Self {
        let sigma = 0.05f64;
        let amplitude = 0.9 * (std::f64::consts::TAU * sigma * sigma).sqrt();
        GaussianRingProfile {
            mean_d: 0.5,
            sigma,
            amplitude,
            center,
        }
    }

    fn depth(&self) -> f64 {
        self.amplitude / (std::f64::consts::TAU * self.sigma * self.sigma).sqrt()
    }
}

/// Radial scale factor at distance `d` from the profile center.
pub fn gaussian_r(d: f64, profile: &GaussianRingProfile) -> f64 {
    debug_assert!(d >= 0.0);
    let z = d - profile.mean_d;
    1.0 - profile.depth() * (-z * z / (2.0 * profile.sigma * profile.sigma)).exp()
}

/// Ring metric at a domain point: radial direction from the profile center is
/// scaled by r(d), the tangential direction kept at 1. At the center itself the
/// direction is undefined and the field returns r(0)*I.
pub fn ring_metric_eval(x: f64, y: f64, profile: &GaussianRingProfile) -> MetricTensor {
    let dx = x - profile.center.x;
    let dy = y - profile.center.y;
    let d = dx.hypot(dy);
    let r = gaussian_r(d, profile);
    if d == 0.0 {
        return isotropic_metric(r);
    }
    compose_radial_metric(r, dy.atan2(dx))
}

/// Metric field over the domain. `Isotropic` applies the same radial profile in
/// every direction (targets shrink by r in all directions); `Ring` shrinks the
/// radial direction only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricField {
    Identity,
    Isotropic(GaussianRingProfile),
    Ring(GaussianRingProfile),
}

impl MetricField {
    pub fn eval(&self, p: Coord2) -> MetricTensor {
        match self {
            MetricField::Identity => MetricTensor::identity(),
            MetricField::Isotropic(profile) => {
                let d = p.dist(profile.center);
                isotropic_metric(gaussian_r(d, profile))
            }
            MetricField::Ring(profile) => ring_metric_eval(p.x, p.y, profile),
        }
    }
}
