//! Analytic boundary curves: line segments and circular arcs with parametric
//! evaluation and closed-form projection. Boundary nodes of a mesh are bound to
//! these curves and slide in parameter space during optimization.

use crate::mesh::Coord2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    Segment {
        p0: Coord2,
        p1: Coord2,
    },
    /// Circular arc traced from `theta0` to `theta1` (radians, either direction).
    Arc {
        center: Coord2,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCurve {
    pub id: usize,
    pub kind: CurveKind,
}

impl BoundaryCurve {
    pub fn segment(id: usize, p0: Coord2, p1: Coord2) -> Result<Self> {
        if p0 == p1 {
            return Err(Error::Geometry(format!(
                "segment {id} has coincident endpoints"
            )));
        }
        Ok(BoundaryCurve {
            id,
            kind: CurveKind::Segment { p0, p1 },
        })
    }

    pub fn arc(id: usize, center: Coord2, radius: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("arc {id} needs radius > 0")));
        }
        if theta0 == theta1 {
            return Err(Error::Geometry(format!("arc {id} has zero angular span")));
        }
        Ok(BoundaryCurve {
            id,
            kind: CurveKind::Arc {
                center,
                radius,
                theta0,
                theta1,
            },
        })
    }

    /// Point at parameter `t` in [0,1].
    pub fn eval(&self, t: f64) -> Result<Coord2> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Geometry(format!(
                "curve {} parameter {t} outside [0,1]",
                self.id
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> Coord2 {
        match self.kind {
            CurveKind::Segment { p0, p1 } => Coord2 {
                x: p0.x + t * (p1.x - p0.x),
                y: p0.y + t * (p1.y - p0.y),
            },
            CurveKind::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let th = theta0 + t * (theta1 - theta0);
                Coord2 {
                    x: center.x + radius * th.cos(),
                    y: center.y + radius * th.sin(),
                }
            }
        }
    }

    /// Derivative of `eval` with respect to `t`.
    pub fn velocity(&self, t: f64) -> Coord2 {
        match self.kind {
            CurveKind::Segment { p0, p1 } => Coord2 {
                x: p1.x - p0.x,
                y: p1.y - p0.y,
            },
            CurveKind::Arc {
                center: _,
                radius,
                theta0,
                theta1,
            } => {
                let dth = theta1 - theta0;
                let th = theta0 + t * dth;
                Coord2 {
                    x: -radius * dth * th.sin(),
                    y: radius * dth * th.cos(),
                }
            }
        }
    }

    /// |velocity|, constant along both curve kinds.
    pub fn speed(&self) -> f64 {
        match self.kind {
            CurveKind::Segment { p0, p1 } => (p1.x - p0.x).hypot(p1.y - p0.y),
            CurveKind::Arc {
                radius,
                theta0,
                theta1,
                ..
            } => radius * (theta1 - theta0).abs(),
        }
    }

    /// Parameter in [0,1] minimizing the distance to `p` (closed form, clamped).
    pub fn project(&self, p: Coord2) -> f64 {
        match self.kind {
            CurveKind::Segment { p0, p1 } => {
                let dx = p1.x - p0.x;
                let dy = p1.y - p0.y;
                let t = ((p.x - p0.x) * dx + (p.y - p0.y) * dy) / (dx * dx + dy * dy);
                t.clamp(0.0, 1.0)
            }
            CurveKind::Arc {
                center,
                theta0,
                theta1,
                ..
            } => {
                let th = (p.y - center.y).atan2(p.x - center.x);
                let dth = theta1 - theta0;
                // The angle is defined modulo 2*pi; try the nearby branches and
                // keep the candidate whose clamped point is closest.
                let mut best_t = 0.0;
                let mut best_d2 = f64::INFINITY;
                for k in [-1.0, 0.0, 1.0] {
                    let t = ((th + k * std::f64::consts::TAU - theta0) / dth).clamp(0.0, 1.0);
                    let q = self.eval_unchecked(t);
                    let d2 = (q.x - p.x).powi(2) + (q.y - p.y).powi(2);
                    if d2 < best_d2 - 1e-30 || (d2 <= best_d2 && t < best_t) {
                        best_d2 = d2;
                        best_t = t;
                    }
                }
                best_t
            }
        }
    }
}
