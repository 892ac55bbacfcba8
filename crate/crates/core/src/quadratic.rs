//! Bivariate quadratics and the affine maps of 3-space that preserve vertical distances.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// `f(x,y) = a·x² + 2b·x·y + c·y² + d·x + e·y + g`.
///
/// Note the factor 2 on the cross term: `b` is the off-diagonal entry of the
/// Hessian-over-two, not the raw `xy` coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSurface {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceClass {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

impl SurfaceClass {
    pub fn is_definite(self) -> bool {
        matches!(self, SurfaceClass::PositiveDefinite | SurfaceClass::NegativeDefinite)
    }
}

/// Canonical representative a surface normalises to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CanonicalFrame {
    /// `x² + y²`
    Convex,
    /// `−x² − y²`
    Concave,
    /// `2xy`
    SaddleXy,
}

impl CanonicalFrame {
    pub fn surface(self) -> QuadraticSurface {
        match self {
            CanonicalFrame::Convex => QuadraticSurface::quadratic_form(1.0, 0.0, 1.0),
            CanonicalFrame::Concave => QuadraticSurface::quadratic_form(-1.0, 0.0, -1.0),
            CanonicalFrame::SaddleXy => QuadraticSurface::quadratic_form(0.0, 1.0, 0.0),
        }
    }

    pub fn of_class(class: SurfaceClass) -> Option<Self> {
        match class {
            SurfaceClass::PositiveDefinite => Some(CanonicalFrame::Convex),
            SurfaceClass::NegativeDefinite => Some(CanonicalFrame::Concave),
            SurfaceClass::Indefinite => Some(CanonicalFrame::SaddleXy),
            SurfaceClass::Degenerate => None,
        }
    }
}

impl QuadraticSurface {
    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64, g: f64) -> Self {
        Self { a, b, c, d, e, g }
    }

    /// Pure quadratic form `a·x² + 2b·x·y + c·y²`.
    pub const fn quadratic_form(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn from_coefficients(coeffs: [f64; 6]) -> Self {
        let [a, b, c, d, e, g] = coeffs;
        Self::new(a, b, c, d, e, g)
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.g]
    }

    #[inline]
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + 2.0 * self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.g
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        self.evaluate(p.x, p.y)
    }

    /// The quadratic part `f₀` alone. Along any chord the linear part cancels,
    /// so chord errors only depend on `f₀(r − p)`.
    #[inline]
    pub fn quadratic_part(&self, v: Vec2) -> f64 {
        self.a * v.x * v.x + 2.0 * self.b * v.x * v.y + self.c * v.y * v.y
    }

    #[inline]
    pub fn gradient(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            2.0 * (self.a * p.x + self.b * p.y) + self.d,
            2.0 * (self.b * p.x + self.c * p.y) + self.e,
        )
    }

    /// Half the Hessian, `[[a, b], [b, c]]`.
    pub fn form_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.b, self.c)
    }

    pub fn discriminant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// `|ac − b²| ≤ 1e−12·max(1, a²+b²+c²)` counts as zero.
    pub fn is_degenerate(&self) -> bool {
        let scale = (self.a * self.a + self.b * self.b + self.c * self.c).max(1.0);
        self.discriminant().abs() <= 1e-12 * scale
    }

    pub fn classify(&self) -> SurfaceClass {
        if self.is_degenerate() {
            return SurfaceClass::Degenerate;
        }
        let disc = self.discriminant();
        if disc < 0.0 {
            SurfaceClass::Indefinite
        } else if self.a > 0.0 || (self.a == 0.0 && self.c > 0.0) {
            SurfaceClass::PositiveDefinite
        } else {
            SurfaceClass::NegativeDefinite
        }
    }

    /// Adds the linear function `d·x + e·y + g`.
    pub fn plus_linear(&self, d: f64, e: f64, g: f64) -> Self {
        Self::new(self.a, self.b, self.c, self.d + d, self.e + e, self.g + g)
    }
}

/// Affine map of 3-space `(p, z) ↦ (L·p + t, z + s·p + w)`.
///
/// Vertical lines go to vertical lines and vertical distances are unchanged,
/// so the L∞ error of an approximation is the same on both sides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTransform {
    pub plane: Matrix2<f64>,
    pub offset: Vec2,
    pub shear: Vec2,
    pub lift: f64,
}

impl Default for SurfaceTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SurfaceTransform {
    pub fn identity() -> Self {
        Self {
            plane: Matrix2::identity(),
            offset: Vec2::zeros(),
            shear: Vec2::zeros(),
            lift: 0.0,
        }
    }

    pub fn plane_only(plane: Matrix2<f64>) -> Self {
        Self {
            plane,
            ..Self::identity()
        }
    }

    /// `|det L|`, the factor by which plan-view areas grow.
    pub fn area_scale(&self) -> f64 {
        self.plane.determinant().abs()
    }

    #[inline]
    pub fn map_point(&self, p: Vec2) -> Vec2 {
        self.plane * p + self.offset
    }

    #[inline]
    pub fn apply(&self, p: Vec2, z: f64) -> (Vec2, f64) {
        (self.map_point(p), z + self.shear.dot(&p) + self.lift)
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &SurfaceTransform) -> SurfaceTransform {
        SurfaceTransform {
            plane: next.plane * self.plane,
            offset: next.plane * self.offset + next.offset,
            shear: self.shear + self.plane.transpose() * next.shear,
            lift: self.lift + next.lift + next.shear.dot(&self.offset),
        }
    }

    /// Panics if the plane part is singular; every transform built in this
    /// crate has a nonzero determinant.
    pub fn inverse(&self) -> SurfaceTransform {
        let inv = self
            .plane
            .try_inverse()
            .expect("surface transform with singular plane part");
        let back = inv * self.offset;
        SurfaceTransform {
            plane: inv,
            offset: -back,
            shear: -(inv.transpose() * self.shear),
            lift: self.shear.dot(&back) - self.lift,
        }
    }
}

/// The affine map carrying the graph point over `p1` to the graph point over
/// `p2` while mapping the graph of `q` onto itself.
pub fn graph_automorphism(q: &QuadraticSurface, p1: Vec2, p2: Vec2) -> SurfaceTransform {
    let delta = p2 - p1;
    SurfaceTransform {
        plane: Matrix2::identity(),
        offset: delta,
        shear: Vec2::new(
            2.0 * q.a * delta.x + 2.0 * q.b * delta.y,
            2.0 * q.b * delta.x + 2.0 * q.c * delta.y,
        ),
        lift: q.eval(delta) - q.g,
    }
}

/// Result of reducing a quadratic to `σ₁x² + σ₂y²` (and, for saddles, to `2xy`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalForm {
    pub sigma1: f64,
    pub sigma2: f64,
    /// Original coordinates to the `σ₁x² + σ₂y²` frame.
    pub transform: SurfaceTransform,
    /// Original coordinates to the `2xy` frame; present only for saddles.
    pub saddle_xy: Option<SurfaceTransform>,
    /// Rotation angle used to diagonalise the form.
    pub angle: f64,
}

impl NormalForm {
    pub fn frame(&self) -> CanonicalFrame {
        if self.saddle_xy.is_some() {
            CanonicalFrame::SaddleXy
        } else if self.sigma1 > 0.0 {
            CanonicalFrame::Convex
        } else {
            CanonicalFrame::Concave
        }
    }

    /// Transform into the frame the optimal triangles are stated in.
    pub fn canonical_transform(&self) -> SurfaceTransform {
        self.saddle_xy.unwrap_or(self.transform)
    }

    pub fn diagonal_surface(&self) -> QuadraticSurface {
        QuadraticSurface::quadratic_form(self.sigma1, 0.0, self.sigma2)
    }

    pub fn canonical_surface(&self) -> QuadraticSurface {
        self.frame().surface()
    }

    pub fn area_scale(&self) -> f64 {
        self.transform.area_scale()
    }
}

pub fn normalize(q: &QuadraticSurface) -> Result<NormalForm> {
    let class = q.classify();
    if class == SurfaceClass::Degenerate {
        return Err(Error::DegenerateSurface {
            discriminant: q.discriminant(),
        });
    }
    let (a, b, c) = (q.a, q.b, q.c);
    let disc = q.discriminant();

    // stationary point: 2H·p + (d, e) = 0
    let center = Vec2::new(
        -0.5 * (c * q.d - b * q.e) / disc,
        -0.5 * (a * q.e - b * q.d) / disc,
    );
    let to_center = SurfaceTransform {
        plane: Matrix2::identity(),
        offset: -center,
        shear: Vec2::zeros(),
        lift: -q.eval(center),
    };

    let angle = 0.5 * (2.0 * b).atan2(a - c);
    let (sin, cos) = angle.sin_cos();
    let lambda1 = a * cos * cos + 2.0 * b * sin * cos + c * sin * sin;
    let lambda2 = a * sin * sin - 2.0 * b * sin * cos + c * cos * cos;
    // coordinates along the eigenvectors (cos, sin) and (−sin, cos)
    let rotate = SurfaceTransform::plane_only(Matrix2::new(cos, sin, -sin, cos));
    let scale = SurfaceTransform::plane_only(Matrix2::new(
        lambda1.abs().sqrt(),
        0.0,
        0.0,
        lambda2.abs().sqrt(),
    ));
    let transform = to_center.then(&rotate).then(&scale);
    let sigma1 = lambda1.signum();
    let sigma2 = lambda2.signum();

    let saddle_xy = (class == SurfaceClass::Indefinite).then(|| {
        let h = FRAC_1_SQRT_2;
        // x² − y² = 2XY for X = (x+y)/√2, Y = (x−y)/√2; mirrored for −x² + y²
        let to_xy = if sigma1 > 0.0 {
            Matrix2::new(h, h, h, -h)
        } else {
            Matrix2::new(h, h, -h, h)
        };
        transform.then(&SurfaceTransform::plane_only(to_xy))
    });

    Ok(NormalForm {
        sigma1,
        sigma2,
        transform,
        saddle_xy,
        angle,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub fn surface_strategy() -> impl Strategy<Value = QuadraticSurface> {
        prop::array::uniform6(-3.0f64..3.0)
            .prop_map(QuadraticSurface::from_coefficients)
            .prop_filter("non-degenerate", |q| q.discriminant().abs() > 0.05)
    }

    fn pushed_residual(t: &SurfaceTransform, from: &QuadraticSurface, to: &QuadraticSurface, p: Vec2) -> f64 {
        let (p2, z2) = t.apply(p, from.eval(p));
        (to.eval(p2) - z2).abs()
    }

    #[test]
    fn classify_examples() {
        let identity = QuadraticSurface::quadratic_form(1.0, 0.0, 1.0);
        assert_eq!(identity.classify(), SurfaceClass::PositiveDefinite);
        let saddle = QuadraticSurface::quadratic_form(0.0, 1.0, 0.0);
        assert_eq!(saddle.classify(), SurfaceClass::Indefinite);
        assert_eq!(saddle.discriminant(), -1.0);
        let square = QuadraticSurface::quadratic_form(1.0, 1.0, 1.0);
        assert_eq!(square.classify(), SurfaceClass::Degenerate);
        assert_eq!(QuadraticSurface::new(0.0, 0.0, 0.0, 1.0, 2.0, 3.0).classify(), SurfaceClass::Degenerate);
        assert_eq!(
            QuadraticSurface::quadratic_form(-2.0, 0.5, -1.0).classify(),
            SurfaceClass::NegativeDefinite
        );
    }

    #[test]
    fn classify_tolerance_is_scale_aware() {
        let q = QuadraticSurface::quadratic_form(1e6, 1e6, 1e6 + 1e-8);
        assert_eq!(q.classify(), SurfaceClass::Degenerate);
        let q = QuadraticSurface::quadratic_form(1e-3, 0.0, 1e-3);
        assert_eq!(q.classify(), SurfaceClass::PositiveDefinite);
    }

    #[test]
    fn evaluate_matches_coefficients() {
        let q = QuadraticSurface::new(1.5, -0.5, 2.0, 3.0, -1.0, 0.25);
        let (x, y) = (0.7, -1.3);
        let expect = 1.5 * x * x + 2.0 * -0.5 * x * y + 2.0 * y * y + 3.0 * x - y + 0.25;
        assert_eq!(q.evaluate(x, y), expect);
    }

    #[test]
    fn automorphism_of_parabola() {
        let q = QuadraticSurface::quadratic_form(1.0, 0.0, 0.0);
        let t = graph_automorphism(&q, Vec2::zeros(), Vec2::new(1.0, 0.0));
        assert_eq!(t.shear, Vec2::new(2.0, 0.0));
        assert_eq!(t.lift, 1.0);
        for x in [-2.0, -0.5, 0.0, 1.25, 3.0] {
            let (p, z) = t.apply(Vec2::new(x, 0.3), x * x);
            assert_eq!(p, Vec2::new(x + 1.0, 0.3));
            assert!((z - (x + 1.0) * (x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn automorphism_identity_when_points_coincide() {
        let q = QuadraticSurface::new(1.0, 0.3, -2.0, 4.0, 5.0, 6.0);
        let p = Vec2::new(0.4, -1.1);
        let t = graph_automorphism(&q, p, p);
        assert_eq!(t.shear, Vec2::zeros());
        assert_eq!(t.lift, 0.0);
        assert_eq!(t.offset, Vec2::zeros());
    }

    #[test]
    fn automorphism_of_saddle() {
        let q = QuadraticSurface::quadratic_form(0.0, 1.0, 0.0);
        let t = graph_automorphism(&q, Vec2::zeros(), Vec2::new(1.0, 1.0));
        assert_eq!(t.shear, Vec2::new(2.0, 2.0));
        assert_eq!(t.lift, 2.0);
        let mut rng = 0x2545F4914F6CDD1Du64;
        for _ in 0..20 {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            let x = (rng % 10_000) as f64 / 1000.0 - 5.0;
            let y = ((rng >> 20) % 10_000) as f64 / 1000.0 - 5.0;
            let p = Vec2::new(x, y);
            assert!(pushed_residual(&t, &q, &q, p) < 1e-12);
        }
    }

    #[test]
    fn normalize_saddle_xy() {
        let q = QuadraticSurface::quadratic_form(0.0, 1.0, 0.0);
        let nf = normalize(&q).unwrap();
        assert_eq!(nf.frame(), CanonicalFrame::SaddleXy);
        assert!((nf.area_scale() - 1.0).abs() < 1e-12);
        assert_eq!(nf.sigma1 * nf.sigma2, -1.0);
        let t = nf.canonical_transform();
        for p in [Vec2::new(1.0, 2.0), Vec2::new(-3.0, 0.5), Vec2::new(0.1, -0.2)] {
            assert!(pushed_residual(&t, &q, &nf.canonical_surface(), p) < 1e-12);
            assert!(pushed_residual(&nf.transform, &q, &nf.diagonal_surface(), p) < 1e-12);
        }
    }

    #[test]
    fn normalize_identity_paraboloid() {
        let q = QuadraticSurface::quadratic_form(1.0, 0.0, 1.0);
        let nf = normalize(&q).unwrap();
        assert_eq!(nf.transform, SurfaceTransform::identity());
        assert_eq!(nf.area_scale(), 1.0);
        assert_eq!(nf.frame(), CanonicalFrame::Convex);
    }

    #[test]
    fn normalize_scaled_saddle_with_linear_term() {
        let q = QuadraticSurface::new(4.0, 0.0, -9.0, 2.0, 0.0, 0.0);
        let nf = normalize(&q).unwrap();
        assert!((nf.area_scale() - 6.0).abs() < 1e-12);
        let t = nf.canonical_transform();
        for i in 0..50 {
            let p = Vec2::new(i as f64 * 0.37 - 9.0, 7.0 - i as f64 * 0.29);
            assert!(pushed_residual(&t, &q, &nf.canonical_surface(), p) < 1e-9);
        }
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let q = QuadraticSurface::quadratic_form(1.0, 1.0, 1.0);
        assert!(matches!(normalize(&q), Err(Error::DegenerateSurface { .. })));
    }

    #[test]
    fn negative_saddle_orientation_still_reaches_2xy() {
        let q = QuadraticSurface::quadratic_form(-1.0, 0.0, 1.0);
        let nf = normalize(&q).unwrap();
        let t = nf.canonical_transform();
        for p in [Vec2::new(1.0, 2.0), Vec2::new(-3.0, 0.5)] {
            assert!(pushed_residual(&t, &q, &nf.canonical_surface(), p) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn automorphism_preserves_graph_and_verticals(
            q in surface_strategy(),
            p1 in prop::array::uniform2(-5.0f64..5.0),
            p2 in prop::array::uniform2(-5.0f64..5.0),
            pts in prop::collection::vec((prop::array::uniform2(-5.0f64..5.0), -3.0f64..3.0), 20),
        ) {
            let t = graph_automorphism(&q, Vec2::from(p1), Vec2::from(p2));
            let (img, z) = t.apply(Vec2::from(p1), q.eval(Vec2::from(p1)));
            prop_assert!((img - Vec2::from(p2)).norm() < 1e-12);
            prop_assert!((z - q.eval(Vec2::from(p2))).abs() < 1e-9);
            for (p, h) in pts {
                let p = Vec2::from(p);
                let (p_img, z_on) = t.apply(p, q.eval(p));
                prop_assert!((q.eval(p_img) - z_on).abs() < 1e-9);
                let (_, z_off) = t.apply(p, q.eval(p) + h);
                prop_assert!(((z_off - z_on) - h).abs() < 1e-9);
            }
        }

        #[test]
        fn normal_form_round_trip(q in surface_strategy(), pts in prop::collection::vec(prop::array::uniform2(-4.0f64..4.0), 20)) {
            let nf = normalize(&q).unwrap();
            prop_assert!((nf.area_scale() - q.discriminant().abs().sqrt()).abs() < 1e-12 * nf.area_scale().max(1.0));
            let t = nf.canonical_transform();
            let back = t.inverse();
            let target = nf.canonical_surface();
            for p in pts {
                let p = Vec2::from(p);
                let (pc, zc) = t.apply(p, q.eval(p));
                prop_assert!((target.eval(pc) - zc).abs() < 1e-9);
                let (pb, zb) = back.apply(pc, zc);
                prop_assert!((pb - p).norm() < 1e-9);
                prop_assert!((zb - q.eval(p)).abs() < 1e-9);
            }
        }

        #[test]
        fn inverse_composes_to_identity(q in surface_strategy(), p in prop::array::uniform2(-4.0f64..4.0), z in -10.0f64..10.0) {
            let t = normalize(&q).unwrap().canonical_transform();
            let id = t.then(&t.inverse());
            let (p2, z2) = id.apply(Vec2::from(p), z);
            prop_assert!((p2 - Vec2::from(p)).norm() < 1e-12 * (1.0 + t.plane.norm() * t.plane.try_inverse().unwrap().norm()).powi(2));
            prop_assert!((z2 - z).abs() < 1e-9);
        }

        #[test]
        fn classification_ignores_linear_part(q in surface_strategy(), d in -9.0f64..9.0, e in -9.0f64..9.0, g in -9.0f64..9.0) {
            prop_assert_eq!(q.classify(), q.plus_linear(d, e, g).classify());
        }
    }
}
