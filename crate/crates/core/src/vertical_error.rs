//! Exact L∞ vertical error between a quadratic and a linear interpolant.
//!
//! The deviation `d = f̂ − f` restricted to a triangle is itself a quadratic,
//! so its maximum modulus is attained at one of finitely many candidates:
//! the vertices, the stationary point of each edge restriction, and (for
//! definite surfaces only) the interior stationary point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadratic::QuadraticSurface;
use crate::{orient2, Vec2};

/// Strict-insideness margin on barycentric coordinates.
const INSIDE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Self(eps))
        } else {
            Err(Error::InvalidTolerance(eps))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    Vertex,
    EdgeMidpointOrCritical,
    Interior,
}

/// Where the maximum vertical deviation sits and how large it is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorWitness {
    pub value: f64,
    pub location: Vec2,
    pub kind: WitnessKind,
}

/// A planar triangle whose vertices are lifted to `f(pᵢ) + dz`, together with
/// the linear function `u·x + v·y + w` through the lifted vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxTriangle {
    vertices: [Vec2; 3],
    dz: f64,
    plane: [f64; 3],
}

impl ApproxTriangle {
    /// Reorders to counterclockwise if needed.
    pub fn new(q: &QuadraticSurface, p1: Vec2, p2: Vec2, p3: Vec2, dz: f64) -> Result<Self> {
        let orient = orient2(p1, p2, p3);
        if orient == 0.0 || !orient.is_finite() {
            return Err(Error::DegenerateTriangle);
        }
        let vertices = if orient > 0.0 { [p1, p2, p3] } else { [p1, p3, p2] };
        let heights = vertices.map(|p| q.eval(p) + dz);
        let plane = plane_through(&vertices, &heights);
        Ok(Self { vertices, dz, plane })
    }

    pub fn interpolating(q: &QuadraticSurface, p1: Vec2, p2: Vec2, p3: Vec2) -> Result<Self> {
        Self::new(q, p1, p2, p3, 0.0)
    }

    pub fn vertices(&self) -> &[Vec2; 3] {
        &self.vertices
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// `(u, v, w)` of `f̂(x,y) = u·x + v·y + w`.
    pub fn plane(&self) -> [f64; 3] {
        self.plane
    }

    pub fn eval_linear(&self, p: Vec2) -> f64 {
        self.plane[0] * p.x + self.plane[1] * p.y + self.plane[2]
    }

    pub fn area(&self) -> f64 {
        0.5 * orient2(self.vertices[0], self.vertices[1], self.vertices[2])
    }

    /// Edge vectors `p2 − p1`, `p3 − p1`.
    pub fn basis(&self) -> (Vec2, Vec2) {
        (self.vertices[1] - self.vertices[0], self.vertices[2] - self.vertices[0])
    }
}

fn plane_through(p: &[Vec2; 3], z: &[f64; 3]) -> [f64; 3] {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.x * e2.y - e1.y * e2.x;
    let dz1 = z[1] - z[0];
    let dz2 = z[2] - z[0];
    let u = (dz1 * e2.y - dz2 * e1.y) / det;
    let v = (e1.x * dz2 - e2.x * dz1) / det;
    [u, v, z[0] - u * p[0].x - v * p[0].y]
}

/// `d = f̂ − f` over a triangle, written around the first vertex:
/// `d(p₀ + h) = c₀ + s·h − f₀(h)`. Working relative to `p₀` keeps the
/// evaluation well conditioned far from the origin.
#[derive(Clone, Copy, Debug)]
pub struct Deviation {
    q: QuadraticSurface,
    origin: Vec2,
    c0: f64,
    slope: Vec2,
    vertices: [Vec2; 3],
}

impl Deviation {
    /// `offsets[i] = f̂(pᵢ) − f(pᵢ)`; vertices must be non-collinear.
    pub fn new(q: &QuadraticSurface, vertices: [Vec2; 3], offsets: [f64; 3]) -> Result<Self> {
        let e1 = vertices[1] - vertices[0];
        let e2 = vertices[2] - vertices[0];
        let det = e1.x * e2.y - e1.y * e2.x;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::DegenerateTriangle);
        }
        // s·e_k = offset_k − offset_0 + f₀(e_k)
        let r1 = offsets[1] - offsets[0] + q.quadratic_part(e1);
        let r2 = offsets[2] - offsets[0] + q.quadratic_part(e2);
        let slope = Vec2::new((r1 * e2.y - r2 * e1.y) / det, (e1.x * r2 - e2.x * r1) / det);
        Ok(Self {
            q: *q,
            origin: vertices[0],
            c0: offsets[0],
            slope,
            vertices,
        })
    }

    pub fn from_heights(q: &QuadraticSurface, vertices: [Vec2; 3], heights: [f64; 3]) -> Result<Self> {
        let offsets = [0, 1, 2].map(|i| heights[i] - q.eval(vertices[i]));
        Self::new(q, vertices, offsets)
    }

    pub fn of_triangle(q: &QuadraticSurface, t: &ApproxTriangle) -> Self {
        Self::new(q, t.vertices, [t.dz; 3]).expect("ApproxTriangle is non-degenerate")
    }

    #[inline]
    pub fn at_local(&self, h: Vec2) -> f64 {
        self.c0 + self.slope.dot(&h) - self.q.quadratic_part(h)
    }

    #[inline]
    pub fn at(&self, p: Vec2) -> f64 {
        self.at_local(p - self.origin)
    }

    /// Point at barycentric weights `(1 − s − t, s, t)`, relative to `p₀`.
    #[inline]
    fn local_bary(&self, s: f64, t: f64) -> Vec2 {
        (self.vertices[1] - self.origin) * s + (self.vertices[2] - self.origin) * t
    }

    /// Exact maximum of `|d|` over the closed triangle.
    pub fn max_abs(&self) -> ErrorWitness {
        let mut best = ErrorWitness {
            value: -1.0,
            location: self.origin,
            kind: WitnessKind::Vertex,
        };
        let mut offer = |h: Vec2, value: f64, kind: WitnessKind| {
            if value > best.value {
                best = ErrorWitness {
                    value,
                    location: self.origin + h,
                    kind,
                };
            }
        };

        let local = self.vertices.map(|p| p - self.origin);
        let vals = local.map(|h| self.at_local(h));
        for i in 0..3 {
            offer(local[i], vals[i].abs(), WitnessKind::Vertex);
        }

        // d(λ) = (1−λ)d(p) + λd(r) + λ(1−λ)f₀(r−p)
        for i in 0..3 {
            let j = (i + 1) % 3;
            let curvature = self.q.quadratic_part(local[j] - local[i]);
            if curvature == 0.0 {
                continue;
            }
            let lambda = 0.5 + (vals[j] - vals[i]) / (2.0 * curvature);
            if lambda > 0.0 && lambda < 1.0 {
                let h = local[i] + (local[j] - local[i]) * lambda;
                let value = (1.0 - lambda) * vals[i] + lambda * vals[j] + lambda * (1.0 - lambda) * curvature;
                offer(h, value.abs(), WitnessKind::EdgeMidpointOrCritical);
            }
        }

        // ∇d = s − 2H·h = 0; a strict interior maximum of |d| needs H definite
        let (a, b, c) = (self.q.a, self.q.b, self.q.c);
        let det = a * c - b * b;
        if det > 0.0 {
            let h = Vec2::new(
                0.5 * (c * self.slope.x - b * self.slope.y) / det,
                0.5 * (a * self.slope.y - b * self.slope.x) / det,
            );
            let (s, t) = self.barycentric_local(h);
            if s > INSIDE_EPS && t > INSIDE_EPS && 1.0 - s - t > INSIDE_EPS {
                offer(h, self.at_local(h).abs(), WitnessKind::Interior);
            }
        }
        best
    }

    fn barycentric_local(&self, h: Vec2) -> (f64, f64) {
        let e1 = self.vertices[1] - self.origin;
        let e2 = self.vertices[2] - self.origin;
        let det = e1.x * e2.y - e1.y * e2.x;
        ((h.x * e2.y - h.y * e2.x) / det, (e1.x * h.y - e1.y * h.x) / det)
    }

    /// Brute-force maximum of `|d|` on a barycentric lattice with `n` points
    /// per edge, followed by one finer pass around the best sample. Every
    /// sample lies in the closed triangle, so the result never exceeds the
    /// exact maximum. `keep` filters samples by absolute position.
    pub fn sampled_max_abs_where(&self, n: usize, keep: impl Fn(Vec2) -> bool) -> Option<f64> {
        let n = n.max(2);
        let step = 1.0 / (n - 1) as f64;
        let mut best: Option<(f64, f64, f64)> = None;
        for i in 0..n {
            for j in 0..(n - i) {
                let (s, t) = (i as f64 * step, j as f64 * step);
                let h = self.local_bary(s, t);
                if !keep(self.origin + h) {
                    continue;
                }
                let v = self.at_local(h).abs();
                if best.is_none_or(|(bv, _, _)| v > bv) {
                    best = Some((v, s, t));
                }
            }
        }
        let (mut value, s0, t0) = best?;
        // refinement: n×n sub-grid over the neighbouring cells
        let fine = step / (n - 1) as f64 * 2.0;
        for i in 0..n {
            for j in 0..n {
                // clamp onto the closed triangle so edge maxima are not skipped
                let s = (s0 - step + i as f64 * fine).max(0.0);
                let t = (t0 - step + j as f64 * fine).max(0.0);
                let (s, t) = if s + t > 1.0 { (s / (s + t), t / (s + t)) } else { (s, t) };
                let h = self.local_bary(s, t);
                if !keep(self.origin + h) {
                    continue;
                }
                value = value.max(self.at_local(h).abs());
            }
        }
        Some(value)
    }

    pub fn sampled_max_abs(&self, n: usize) -> f64 {
        self.sampled_max_abs_where(n, |_| true).expect("vertices are always sampled")
    }
}

/// Error along the chord between the graph points over `p` and `r`:
/// `|f₀(r − p)|/4` at the midpoint.
pub fn chord_error(q: &QuadraticSurface, p: Vec2, r: Vec2) -> ErrorWitness {
    ErrorWitness {
        value: q.quadratic_part(r - p).abs() / 4.0,
        location: (p + r) * 0.5,
        kind: WitnessKind::EdgeMidpointOrCritical,
    }
}

/// Chord between `f(p) + dz` and `f(r) + dz`. The deviation is
/// `dz + λ(1−λ)·f₀(r−p)`, so the maximum is `max{|dz|, |dz + f₀(r−p)/4|}`,
/// at an endpoint or the midpoint.
pub fn chord_error_offset(q: &QuadraticSurface, p: Vec2, r: Vec2, dz: f64) -> ErrorWitness {
    let mid = dz + q.quadratic_part(r - p) / 4.0;
    if mid.abs() > dz.abs() {
        ErrorWitness {
            value: mid.abs(),
            location: (p + r) * 0.5,
            kind: WitnessKind::EdgeMidpointOrCritical,
        }
    } else {
        ErrorWitness {
            value: dz.abs(),
            location: p,
            kind: WitnessKind::Vertex,
        }
    }
}

pub fn triangle_error(q: &QuadraticSurface, t: &ApproxTriangle) -> ErrorWitness {
    Deviation::of_triangle(q, t).max_abs()
}

/// Exact error of the linear function through arbitrary vertex heights.
pub fn triangle_error_with_heights(q: &QuadraticSurface, vertices: [Vec2; 3], heights: [f64; 3]) -> Result<ErrorWitness> {
    Ok(Deviation::from_heights(q, vertices, heights)?.max_abs())
}

pub fn sampled_triangle_error(q: &QuadraticSurface, t: &ApproxTriangle, n: usize) -> f64 {
    Deviation::of_triangle(q, t).sampled_max_abs(n)
}
