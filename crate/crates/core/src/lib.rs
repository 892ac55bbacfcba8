//! Optimal-density piecewise-linear approximation of bivariate quadratics.
//!
//! A quadratic `f(x,y) = a·x² + 2b·x·y + c·y² + d·x + e·y + g` looks the same
//! at every point of its graph, so one triangle whose vertices all sit at the
//! same vertical offset from the surface can be copied (with its 180° rotation)
//! over the whole plane. The crate builds the largest such triangle for a given
//! vertical error budget, tiles it over a region and audits the result.
//!
//! - [`quadratic`]: surfaces, classification, graph automorphisms, normal form.
//! - [`vertical_error`]: exact and sampled L∞ vertical error over chords and triangles.
//! - [`optimal`]: closed-form optimal triangles and density constants.
//! - [`tiling`]: lattice meshes over rectangular regions and density reports.
//! - [`oracle`]: brute-force constrained area maximisation used to cross-check the closed forms.
//! - [`io`] and [`cli`]: mesh files, JSON reports and the command-line front end.

pub mod cli;
pub mod error;
pub mod io;
pub mod optimal;
pub mod oracle;
pub mod quadratic;
pub mod tiling;
pub mod vertical_error;

pub use error::{Error, Result};
pub use optimal::{Mode, OptimalResult, ShapeParam};
pub use quadratic::{CanonicalFrame, NormalForm, QuadraticSurface, SurfaceClass, SurfaceTransform};
pub use tiling::{DensityReport, MeshPatch, Region};
pub use vertical_error::{ApproxTriangle, ErrorWitness, Tolerance, WitnessKind};

/// Plan-view point or vector.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Twice the signed area of `(p1, p2, p3)`; positive for counterclockwise order.
#[inline]
pub fn orient2(p1: Vec2, p2: Vec2, p3: Vec2) -> f64 {
    let u = p2 - p1;
    let v = p3 - p1;
    u.x * v.y - u.y * v.x
}

/// Unsigned triangle area by the shoelace formula.
#[inline]
pub fn triangle_area(p: &[Vec2; 3]) -> f64 {
    0.5 * orient2(p[0], p[1], p[2]).abs()
}
