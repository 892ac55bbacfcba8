//! Closed-form largest-area triangles under a vertical error budget.
//!
//! Every constructor works in the canonical frame of its surface class
//! (`x² + y²`, `−x² − y²` or `2xy`). Saddle triangles have `p1` at the
//! origin; convex ones are centred on it. Tiling one of these triangles with
//! its 180° rotation gives triangle density `1/area`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::quadratic::CanonicalFrame;
use crate::quadratic::{QuadraticSurface, SurfaceClass};
use crate::vertical_error::{ApproxTriangle, Tolerance};
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Vertices on the surface, `dz = 0`.
    Interpolating,
    /// All vertices share one vertical offset `dz`.
    UniformOffset,
}

/// Area-preserving stretch `(x, y) ↦ (m·x, y/m)`; maps the graph of `2xy` to itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParam(f64);

impl ShapeParam {
    pub const IDENTITY: ShapeParam = ShapeParam(1.0);

    pub fn new(m: f64) -> Result<Self> {
        if m.is_finite() && m != 0.0 {
            Ok(Self(m))
        } else {
            Err(Error::InvalidShapeParam(m))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn apply(self, p: Vec2) -> Vec2 {
        Vec2::new(p.x * self.0, p.y / self.0)
    }

    pub fn inverse(self) -> Self {
        Self(1.0 / self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalResult {
    pub triangle: ApproxTriangle,
    pub dz: f64,
    pub area: f64,
    pub density: f64,
    pub frame: CanonicalFrame,
    pub eps: f64,
}

impl OptimalResult {
    fn build(frame: CanonicalFrame, eps: f64, p: [Vec2; 3], dz: f64, area: f64) -> Self {
        let triangle = ApproxTriangle::new(&frame.surface(), p[0], p[1], p[2], dz)
            .expect("closed-form triangles are non-degenerate");
        Self {
            triangle,
            dz,
            area,
            density: 1.0 / area,
            frame,
            eps,
        }
    }

    pub fn vertices(&self) -> [Vec2; 3] {
        *self.triangle.vertices()
    }

    pub fn surface(&self) -> QuadraticSurface {
        self.frame.surface()
    }

    /// Reflection `(x, y) ↦ (x, −y)`. On `2xy` it swaps ascending and
    /// descending edges, so the offset changes sign.
    pub fn mirrored(&self) -> Self {
        let p = self.vertices().map(|v| Vec2::new(v.x, -v.y));
        Self::build(self.frame, self.eps, p, -self.dz, self.area)
    }

    /// The same triangle for the vertically flipped surface (`f ↦ −f`).
    /// Only the convex and concave frames have a flipped partner.
    pub fn flipped_vertically(&self) -> Option<Self> {
        let frame = match self.frame {
            CanonicalFrame::Convex => CanonicalFrame::Concave,
            CanonicalFrame::Concave => CanonicalFrame::Convex,
            CanonicalFrame::SaddleXy => return None,
        };
        Some(Self::build(frame, self.eps, self.vertices(), -self.dz, self.area))
    }
}

fn check_eps(eps: f64) -> Result<f64> {
    Tolerance::new(eps).map(Tolerance::get)
}

/// Symmetric first-quadrant solution `p2 = (x, y)` with `xy = 2ε`,
/// `2(x − y)² = 4ε`: `x, y = √(ε/2)(√5 ± 1)`.
pub fn saddle_interpolating(eps: f64, m: f64) -> Result<OptimalResult> {
    let eps = check_eps(eps)?;
    let m = ShapeParam::new(m)?;
    let s = (eps / 2.0).sqrt();
    let r5 = 5f64.sqrt();
    let p2 = m.apply(Vec2::new(s * (r5 + 1.0), s * (r5 - 1.0)));
    let p3 = m.apply(Vec2::new(s * (r5 - 1.0), s * (r5 + 1.0)));
    Ok(OptimalResult::build(
        CanonicalFrame::SaddleXy,
        eps,
        [Vec2::zeros(), p2, p3],
        0.0,
        eps * r5,
    ))
}

/// First-quadrant symmetric point of the offset problem for a given `dz`
/// in the descending-dominant orientation:
/// `x, y = √½·(√(5ε + 3dz) ± √(ε − dz))`.
fn offset_first_quadrant(eps: f64, dz: f64) -> (f64, f64) {
    let big = (5.0 * eps + 3.0 * dz).sqrt();
    let small = (eps - dz).sqrt();
    let h = 0.5f64.sqrt();
    (h * (big + small), h * (big - small))
}

/// Area of the symmetric triangle with all three edge constraints tight at
/// offset `dz ∈ [−ε, ε]`: `√(5ε + 3dz)·√(ε − dz)`.
pub fn saddle_offset_area(eps: f64, dz: f64) -> f64 {
    (5.0 * eps + 3.0 * dz).max(0.0).sqrt() * (eps - dz).max(0.0).sqrt()
}

/// Largest symmetric triangle for a prescribed offset. The two edges at the
/// origin are descending with `xy = −2(ε + dz)`, the third ascending with
/// `f₀ = 4(ε − dz)`.
pub fn saddle_offset_with_dz(eps: f64, dz: f64, m: f64) -> Result<OptimalResult> {
    let eps = check_eps(eps)?;
    let m = ShapeParam::new(m)?;
    if !(dz >= -eps && dz < eps) {
        return Err(Error::InvalidTolerance(dz));
    }
    let (x, y) = offset_first_quadrant(eps, dz);
    let p2 = m.apply(Vec2::new(y, -x));
    let p3 = m.apply(Vec2::new(x, -y));
    Ok(OptimalResult::build(
        CanonicalFrame::SaddleXy,
        eps,
        [Vec2::zeros(), p2, p3],
        dz,
        saddle_offset_area(eps, dz),
    ))
}

/// Optimal uniform-offset triangle, `dz = −ε/3`, area `4ε/√3`.
///
/// Returned in the orientation whose offset is negative; [`OptimalResult::mirrored`]
/// gives the first-quadrant picture with `dz = +ε/3`.
pub fn saddle_offset(eps: f64, m: f64) -> Result<OptimalResult> {
    let eps = check_eps(eps)?;
    let mut r = saddle_offset_with_dz(eps, -eps / 3.0, m)?;
    r.area = 4.0 * eps / 3f64.sqrt();
    r.density = 1.0 / r.area;
    Ok(r)
}

/// Interpolating triangle with its base on the ruling `y = 0`: isosceles with
/// apex `(L/2, 4ε/L)`, both slanted edges tight, area `2ε` for any base `L`.
/// The base is fixed at `L = 2√(2ε)`.
pub fn saddle_ruled(eps: f64) -> Result<OptimalResult> {
    let eps = check_eps(eps)?;
    let base = 2.0 * (2.0 * eps).sqrt();
    let apex = Vec2::new(base / 2.0, 4.0 * eps / base);
    Ok(OptimalResult::build(
        CanonicalFrame::SaddleXy,
        eps,
        [Vec2::zeros(), Vec2::new(base, 0.0), apex],
        0.0,
        2.0 * eps,
    ))
}

/// Equilateral triangle inscribed in the circle of radius `√ε`
/// (interpolating) or `√(2ε)` lowered by `ε` (offset) around the origin.
pub fn convex_optimal(eps: f64, mode: Mode) -> Result<OptimalResult> {
    let eps = check_eps(eps)?;
    let (r2, dz) = match mode {
        Mode::Interpolating => (eps, 0.0),
        Mode::UniformOffset => (2.0 * eps, -eps),
    };
    let r = r2.sqrt();
    let p = [0, 1, 2].map(|k| {
        let a = PI / 2.0 + k as f64 * 2.0 * PI / 3.0;
        Vec2::new(r * a.cos(), r * a.sin())
    });
    Ok(OptimalResult::build(
        CanonicalFrame::Convex,
        eps,
        p,
        dz,
        r2 * 3.0 * 3f64.sqrt() / 4.0,
    ))
}

/// Optimal triangle in the canonical frame of `frame`.
pub fn optimal_for(frame: CanonicalFrame, eps: f64, mode: Mode, m: f64) -> Result<OptimalResult> {
    match (frame, mode) {
        (CanonicalFrame::SaddleXy, Mode::Interpolating) => saddle_interpolating(eps, m),
        (CanonicalFrame::SaddleXy, Mode::UniformOffset) => saddle_offset(eps, m),
        (CanonicalFrame::Convex, mode) => convex_optimal(eps, mode),
        (CanonicalFrame::Concave, mode) => Ok(convex_optimal(eps, mode)?
            .flipped_vertically()
            .expect("convex frame flips")),
    }
}

/// `C` in `density = (C/ε)·√|ac − b²|`.
pub fn density_constant(class: SurfaceClass, mode: Mode) -> Result<f64> {
    let c = match (class, mode) {
        (SurfaceClass::Indefinite, Mode::UniformOffset) => 3f64.sqrt() / 4.0,
        (SurfaceClass::Indefinite, Mode::Interpolating) => 1.0 / 5f64.sqrt(),
        (SurfaceClass::PositiveDefinite | SurfaceClass::NegativeDefinite, Mode::UniformOffset) => {
            2.0 / 27f64.sqrt()
        }
        (SurfaceClass::PositiveDefinite | SurfaceClass::NegativeDefinite, Mode::Interpolating) => {
            4.0 / 27f64.sqrt()
        }
        (SurfaceClass::Degenerate, _) => return Err(Error::DegenerateSurface { discriminant: 0.0 }),
    };
    Ok(c)
}

pub fn theoretical_density(q: &QuadraticSurface, eps: f64, mode: Mode) -> Result<f64> {
    let eps = check_eps(eps)?;
    let class = q.classify();
    if class == SurfaceClass::Degenerate {
        return Err(Error::DegenerateSurface {
            discriminant: q.discriminant(),
        });
    }
    Ok(density_constant(class, mode)? / eps * q.discriminant().abs().sqrt())
}
