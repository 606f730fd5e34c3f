//! Two-stage collision probability: an oriented-box overlap gate followed by a
//! Mahalanobis-distance probability under Gaussian position uncertainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Determinant guard for covariance inversion, in m^4.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, half_length: f64, half_width: f64) -> Result<Self> {
        if !(half_length > 0.0 && half_width > 0.0) {
            return Err(Error::validation(
                "box",
                format!("half extents must be > 0, got {half_length} x {half_width}"),
            ));
        }
        if !(center.x.is_finite() && center.y.is_finite() && heading.is_finite()) {
            return Err(Error::validation("box", "non-finite pose"));
        }
        Ok(Self {
            center,
            heading,
            half_length,
            half_width,
        })
    }

    /// Same footprint moved to a new pose.
    pub fn moved_to(&self, center: Vec2, heading: f64) -> Self {
        Self {
            center,
            heading,
            ..*self
        }
    }

    /// Unit axes along the length and the width.
    pub fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_heading(self.heading);
        [u, u.perp()]
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let (a, b) = (u * self.half_length, v * self.half_width);
        let c = self.center;
        [c + a + b, c - a + b, c - a - b, c + a - b]
    }

    /// Radius of the circumscribed circle.
    pub fn bounding_radius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    fn projected_radius(&self, axis: Vec2) -> f64 {
        let [u, v] = self.axes();
        self.half_length * u.dot(axis).abs() + self.half_width * v.dot(axis).abs()
    }
}

/// Separating-axis test over the four edge normals. Touching boxes overlap.
pub fn sat_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let delta = b.center - a.center;
    a.axes().into_iter().chain(b.axes()).all(|axis| {
        delta.dot(axis).abs() <= a.projected_radius(axis) + b.projected_radius(axis)
    })
}

/// Symmetric 2x2 covariance in m^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Cov2 {
    /// Validated positive-definite covariance.
    pub fn new(xx: f64, xy: f64, yy: f64) -> Result<Self> {
        let c = Self { xx, xy, yy };
        if !(xx.is_finite() && xy.is_finite() && yy.is_finite()) || xx <= 0.0 || c.det() <= 0.0 {
            return Err(Error::validation(
                "covariance",
                format!("not positive definite: [[{xx}, {xy}], [{xy}, {yy}]]"),
            ));
        }
        Ok(c)
    }

    /// From a full matrix; rejects asymmetry beyond 1e-12.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        if (m[0][1] - m[1][0]).abs() > 1e-12 {
            return Err(Error::validation("covariance", "matrix is not symmetric"));
        }
        Self::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
    }

    pub fn isotropic(sigma: f64) -> Result<Self> {
        Self::new(sigma * sigma, 0.0, sigma * sigma)
    }

    /// `R diag(var_long, var_lat) R^T` for a frame rotated by `heading`.
    pub fn rotated_diag(var_long: f64, var_lat: f64, heading: f64) -> Result<Self> {
        let (s, c) = heading.sin_cos();
        Self::new(
            c * c * var_long + s * s * var_lat,
            c * s * (var_long - var_lat),
            s * s * var_long + c * c * var_lat,
        )
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            xx: self.xx * k,
            xy: self.xy * k,
            yy: self.yy * k,
        }
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - r, mean + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    World,
    Ego,
}

/// Predicted position distribution of one agent at one horizon step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: Vec2,
    pub covariance: Cov2,
    pub step: usize,
    pub frame: Frame,
}

/// `sqrt((p - mu)^T Sigma^-1 (p - mu))` via the closed-form 2x2 inverse.
pub fn mahalanobis_distance(point: Vec2, pred: &GaussianPrediction) -> Result<f64> {
    let c = &pred.covariance;
    let det = c.det();
    if !(det >= SINGULAR_DET) {
        return Err(Error::SingularCovariance { det });
    }
    let r = point - pred.mean;
    let q = (c.yy * r.x * r.x - 2.0 * c.xy * r.x * r.y + c.xx * r.y * r.y) / det;
    Ok(q.max(0.0).sqrt())
}

/// Survival function of the chi-squared distribution with two degrees of
/// freedom at `D^2`, which is `exp(-D^2 / 2)`.
pub fn mahalanobis_probability(distance: f64) -> f64 {
    (-0.5 * distance * distance).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEstimate {
    pub sat: bool,
    /// Mahalanobis distance; `None` when the gate rejected the pair and that
    /// stage was skipped.
    pub mahalanobis: Option<f64>,
    pub probability: f64,
}

/// Overlap gate on the mean footprints, then `P = P_sat * P_m`.
pub fn collision_probability(
    ego_box: &OrientedBox,
    ego_pos: Vec2,
    pred: &GaussianPrediction,
    other_box: &OrientedBox,
) -> Result<CollisionEstimate> {
    if !sat_overlap(ego_box, other_box) {
        return Ok(CollisionEstimate {
            sat: false,
            mahalanobis: None,
            probability: 0.0,
        });
    }
    let d = mahalanobis_distance(ego_pos, pred)?;
    Ok(CollisionEstimate {
        sat: true,
        mahalanobis: Some(d),
        probability: mahalanobis_probability(d),
    })
}
