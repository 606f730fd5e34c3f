//! Reference paths and conversion between Cartesian poses and Frenet
//! coordinates (arclength `l`, signed lateral offset `d`, left positive).
//!
//! Input polylines are resampled to a uniform spacing. Headings are stored per
//! vertex (mean of the adjacent segment headings) and interpolated linearly
//! along each segment, so the lateral normal sweeps continuously around
//! corners. Projection solves for the foot point under that interpolated
//! normal, which makes `project_to_frenet` and `frenet_to_cartesian` exact
//! inverses of each other away from the path ends.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPACING: f64 = 0.5;
pub const DEFAULT_CORRIDOR: f64 = 20.0;

/// Segments scanned on either side of a warm-start hint before falling back
/// to a full scan.
const WARM_WINDOW: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotated a quarter turn counter-clockwise.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Cartesian pose with scalar speed along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading,
            speed,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub l: f64,
    pub d: f64,
    pub l_dot: f64,
    pub d_dot: f64,
    pub l_ddot: f64,
    pub d_ddot: f64,
}

impl FrenetState {
    pub fn new(l: f64, d: f64, l_dot: f64, d_dot: f64) -> Self {
        Self {
            l,
            d,
            l_dot,
            d_dot,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.l, self.d, self.l_dot, self.d_dot, self.l_ddot, self.d_ddot]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Lane centerline defining the Frenet frame. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    points: Vec<Vec2>,
    arclength: Vec<f64>,
    heading: Vec<f64>,
    curvature: Vec<f64>,
    seg_len: Vec<f64>,
    seg_heading: Vec<f64>,
    corridor: f64,
}

/// Foot point of a projection: segment index and parameter along it.
#[derive(Debug, Clone, Copy)]
struct Foot {
    seg: usize,
    t: f64,
    d: f64,
    dist: f64,
}

impl ReferencePath {
    /// Builds a path from a polyline, resampled at [`DEFAULT_SPACING`].
    pub fn new(waypoints: &[Vec2]) -> Result<Self> {
        Self::with_spacing(waypoints, DEFAULT_SPACING)
    }

    pub fn with_spacing(waypoints: &[Vec2], spacing: f64) -> Result<Self> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(waypoints.len());
        for &p in waypoints {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::validation("reference_path", "non-finite waypoint"));
            }
            if pts.last().map_or(true, |&q: &Vec2| (p - q).norm() > 1e-9) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return Err(Error::DegeneratePath(pts.len()));
        }
        let resampled = resample(&pts, spacing);
        Ok(Self::from_resampled(resampled))
    }

    fn from_resampled(points: Vec<Vec2>) -> Self {
        let n = points.len();
        let mut seg_len = Vec::with_capacity(n - 1);
        let mut seg_heading = Vec::with_capacity(n - 1);
        for w in points.windows(2) {
            let v = w[1] - w[0];
            seg_len.push(v.norm());
            seg_heading.push(v.heading());
        }

        let mut arclength = Vec::with_capacity(n);
        arclength.push(0.0);
        for len in &seg_len {
            let last = *arclength.last().unwrap();
            arclength.push(last + len);
        }

        let mut heading = Vec::with_capacity(n);
        heading.push(seg_heading[0]);
        for i in 1..n - 1 {
            let turn = wrap_angle(seg_heading[i] - seg_heading[i - 1]);
            heading.push(wrap_angle(seg_heading[i - 1] + 0.5 * turn));
        }
        heading.push(seg_heading[n - 2]);

        let mut curvature = vec![0.0; n];
        for i in 1..n - 1 {
            let turn = wrap_angle(seg_heading[i] - seg_heading[i - 1]);
            curvature[i] = turn / (0.5 * (seg_len[i - 1] + seg_len[i]));
        }
        // one-sided at the ends
        if n > 2 {
            curvature[0] = curvature[1];
            curvature[n - 1] = curvature[n - 2];
        }

        Self {
            points,
            arclength,
            heading,
            curvature,
            seg_len,
            seg_heading,
            corridor: DEFAULT_CORRIDOR,
        }
    }

    pub fn with_corridor(mut self, corridor: f64) -> Self {
        self.corridor = corridor;
        self
    }

    pub fn corridor(&self) -> f64 {
        self.corridor
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn arclengths(&self) -> &[f64] {
        &self.arclength
    }

    pub fn headings(&self) -> &[f64] {
        &self.heading
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvature
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.seg_len
    }

    pub fn segment_headings(&self) -> &[f64] {
        &self.seg_heading
    }

    fn check_range(&self, l: f64) -> Result<()> {
        let length = self.length();
        if !(l.is_finite() && (-1e-9..=length + 1e-9).contains(&l)) {
            return Err(Error::OutOfPathRange { l, length });
        }
        Ok(())
    }

    /// Segment containing arclength `l` and the parameter along it.
    fn locate(&self, l: f64) -> (usize, f64) {
        let last = self.seg_len.len() - 1;
        let seg = match self.arclength.partition_point(|&s| s <= l) {
            0 => 0,
            k => (k - 1).min(last),
        };
        let t = (l - self.arclength[seg]) / self.seg_len[seg];
        (seg, t)
    }

    fn heading_at(&self, seg: usize, t: f64) -> f64 {
        let a = self.heading[seg];
        let turn = wrap_angle(self.heading[seg + 1] - a);
        wrap_angle(a + t * turn)
    }

    /// Road heading and curvature at arclength `l`, interpolated linearly
    /// between waypoints.
    pub fn heading_curvature(&self, l: f64) -> Result<(f64, f64)> {
        self.check_range(l)?;
        let l = l.clamp(0.0, self.length());
        let (seg, t) = self.locate(l);
        let t = t.clamp(0.0, 1.0);
        let kappa = self.curvature[seg] + t * (self.curvature[seg + 1] - self.curvature[seg]);
        Ok((self.heading_at(seg, t), kappa))
    }

    /// Solves for the foot point of `p` on segment `seg`, i.e. the `t` where
    /// `p - P(t)` is along the interpolated normal.
    fn foot_on_segment(&self, seg: usize, p: Vec2) -> Option<Foot> {
        let a = self.points[seg];
        let ab = self.points[seg + 1] - a;
        let h0 = self.heading[seg];
        let dh = wrap_angle(self.heading[seg + 1] - h0);

        let residual = |t: f64| {
            let tangent = Vec2::from_heading(h0 + t * dh);
            let r = p - (a + ab * t);
            let f = r.dot(tangent);
            let df = -ab.dot(tangent) + dh * r.dot(tangent.perp());
            (f, df)
        };

        let mut t = (p - a).dot(ab) / ab.dot(ab);
        for _ in 0..8 {
            let (f, df) = residual(t);
            if df.abs() < 1e-12 {
                break;
            }
            let step = f / df;
            t -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        if !t.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&t) {
            return None;
        }
        let t = t.clamp(0.0, 1.0);
        let foot = a + ab * t;
        let normal = Vec2::from_heading(h0 + t * dh).perp();
        let r = p - foot;
        let d = r.dot(normal);
        Some(Foot {
            seg,
            t,
            d,
            dist: r.norm(),
        })
    }

    /// Feet beyond either end of the path clamp to the endpoint.
    fn end_foot(&self, p: Vec2, at_end: bool) -> Foot {
        let (seg, t) = if at_end {
            (self.seg_len.len() - 1, 1.0)
        } else {
            (0, 0.0)
        };
        let idx = if at_end { self.points.len() - 1 } else { 0 };
        let r = p - self.points[idx];
        let normal = Vec2::from_heading(self.heading[idx]).perp();
        Foot {
            seg,
            t,
            d: r.dot(normal),
            dist: r.norm(),
        }
    }

    fn nearest_in(&self, p: Vec2, range: std::ops::Range<usize>) -> Option<Foot> {
        let mut best: Option<Foot> = None;
        for seg in range {
            if let Some(f) = self.foot_on_segment(seg, p) {
                if best.map_or(true, |b| f.dist < b.dist) {
                    best = Some(f);
                }
            }
        }
        best
    }

    fn nearest(&self, p: Vec2) -> Foot {
        let nseg = self.seg_len.len();
        let mut best = self.nearest_in(p, 0..nseg);
        for at_end in [false, true] {
            let f = self.end_foot(p, at_end);
            if best.map_or(true, |b| f.dist < b.dist - 1e-12) {
                best = Some(f);
            }
        }
        best.unwrap()
    }

    fn frenet_from_foot(&self, foot: Foot, pose: &Pose) -> Result<FrenetState> {
        if foot.dist > self.corridor {
            return Err(Error::PoseOffCorridor {
                distance: foot.dist,
                corridor: self.corridor,
            });
        }
        let chi = self.heading_at(foot.seg, foot.t);
        let rel = pose.heading - chi;
        Ok(FrenetState {
            l: self.arclength[foot.seg] + foot.t * self.seg_len[foot.seg],
            d: foot.d,
            l_dot: pose.speed * rel.cos(),
            d_dot: pose.speed * rel.sin(),
            l_ddot: 0.0,
            d_ddot: 0.0,
        })
    }

    /// Projects a Cartesian pose onto the path with a full linear scan.
    pub fn project_to_frenet(&self, pose: &Pose) -> Result<FrenetState> {
        let foot = self.nearest(pose.position());
        self.frenet_from_foot(foot, pose)
    }

    /// Projection that scans a window around `hint` (a segment index from a
    /// previous call) first, falling back to the full scan when the window
    /// minimum sits on the window edge. Updates `hint`.
    pub fn project_near(&self, pose: &Pose, hint: &mut usize) -> Result<FrenetState> {
        let nseg = self.seg_len.len();
        let p = pose.position();
        let lo = hint.saturating_sub(WARM_WINDOW);
        let hi = (*hint + WARM_WINDOW + 1).min(nseg);
        let foot = match self.nearest_in(p, lo..hi) {
            Some(f)
                if f.dist <= self.corridor
                    && (f.seg > lo || lo == 0)
                    && (f.seg + 1 < hi || hi == nseg) =>
            {
                f
            }
            _ => self.nearest(p),
        };
        *hint = foot.seg;
        self.frenet_from_foot(foot, pose)
    }

    /// Maps a Frenet state back to a Cartesian pose. `l` must lie on the path.
    pub fn frenet_to_cartesian(&self, fs: &FrenetState) -> Result<Pose> {
        self.check_range(fs.l)?;
        Ok(self.frenet_to_cartesian_unchecked(fs))
    }

    /// Like [`frenet_to_cartesian`](Self::frenet_to_cartesian) but extends the
    /// first and last segments straight for `l` outside the path.
    pub fn frenet_to_cartesian_extrapolated(&self, fs: &FrenetState) -> Pose {
        self.frenet_to_cartesian_unchecked(fs)
    }

    fn frenet_to_cartesian_unchecked(&self, fs: &FrenetState) -> Pose {
        let length = self.length();
        let (base, chi) = if fs.l < 0.0 {
            let h = self.heading[0];
            (self.points[0] + Vec2::from_heading(h) * fs.l, h)
        } else if fs.l > length {
            let h = *self.heading.last().unwrap();
            (
                *self.points.last().unwrap() + Vec2::from_heading(h) * (fs.l - length),
                h,
            )
        } else {
            let (seg, t) = self.locate(fs.l);
            let t = t.clamp(0.0, 1.0);
            let a = self.points[seg];
            let ab = self.points[seg + 1] - a;
            (a + ab * t, self.heading_at(seg, t))
        };
        let p = base + Vec2::from_heading(chi).perp() * fs.d;
        let speed = fs.l_dot.hypot(fs.d_dot);
        let heading = if speed > 0.0 {
            wrap_angle(chi + fs.d_dot.atan2(fs.l_dot))
        } else {
            chi
        };
        Pose::new(p.x, p.y, heading, speed)
    }
}

/// Resamples a polyline at uniform `spacing` along its length. The final
/// input point is always kept.
fn resample(pts: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = vec![pts[0]];
    let mut carry = 0.0; // distance travelled since the last emitted point
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg = (b - a).norm();
        let dir = (b - a) * (1.0 / seg);
        let mut pos = spacing - carry;
        while pos < seg - 1e-9 {
            out.push(a + dir * pos);
            pos += spacing;
        }
        carry = seg - (pos - spacing);
    }
    let last = *pts.last().unwrap();
    if (last - *out.last().unwrap()).norm() > 1e-6 {
        out.push(last);
    } else {
        *out.last_mut().unwrap() = last;
    }
    if out.len() < 2 {
        out.push(last);
    }
    out
}
