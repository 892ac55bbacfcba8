//! Lattice meshes built from one optimal triangle and its 180° rotation.
//!
//! In the canonical frame the triangle `T = p1 p2 p3` spans the lattice
//! `p1 + translate + i·e₁ + j·e₂` (`e₁ = p2 − p1`, `e₂ = p3 − p1`). Cell
//! `(i, j)` holds `T` on lattice points `(i,j), (i+1,j), (i,j+1)` and the
//! rotated copy `T′` on `(i+1,j+1), (i,j+1), (i+1,j)`. Vertices are keyed by
//! their integer lattice coordinates, so neighbouring triangles always share
//! indices exactly.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimal::{theoretical_density, CanonicalFrame, Mode, OptimalResult};
use crate::quadratic::{normalize, QuadraticSurface, SurfaceTransform};
use crate::vertical_error::Deviation;
use crate::Vec2;

/// Axis-aligned rectangle in original plan coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Region {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let finite = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite());
        if !finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidRegion(format!(
                "[{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Self { xmin, ymin, xmax, ymax })
    }

    /// `[−h, h]²`
    pub fn centered_square(half_width: f64) -> Result<Self> {
        Self::new(-half_width, -half_width, half_width, half_width)
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.xmin, self.ymin),
            Vec2::new(self.xmax, self.ymin),
            Vec2::new(self.xmax, self.ymax),
            Vec2::new(self.xmin, self.ymax),
        ]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn contains_strictly(&self, p: Vec2) -> bool {
        p.x > self.xmin && p.x < self.xmax && p.y > self.ymin && p.y < self.ymax
    }

    /// Closed triangle against closed rectangle, separating-axis test.
    pub fn intersects_triangle(&self, t: &[Vec2; 3]) -> bool {
        let (lo_x, hi_x) = min_max(t.iter().map(|p| p.x));
        let (lo_y, hi_y) = min_max(t.iter().map(|p| p.y));
        if hi_x < self.xmin || lo_x > self.xmax || hi_y < self.ymin || lo_y > self.ymax {
            return false;
        }
        let corners = self.corners();
        for i in 0..3 {
            let a = t[i];
            let b = t[(i + 1) % 3];
            let normal = Vec2::new(b.y - a.y, a.x - b.x);
            let own = normal.dot(&(t[(i + 2) % 3] - a));
            let (lo, hi) = min_max(corners.iter().map(|c| normal.dot(&(c - a))));
            if (own < 0.0 && lo > 0.0) || (own > 0.0 && hi < 0.0) {
                return false;
            }
        }
        true
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellHalf {
    /// Translate of `T`.
    Base,
    /// Translate of `T` rotated by 180°.
    Rotated,
}

/// Lattice cell and half a triangle came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub i: i64,
    pub j: i64,
    pub half: CellHalf,
}

impl CellId {
    /// Lattice coordinates of the three corners, in emission order.
    pub fn corners(&self) -> [(i64, i64); 3] {
        let (i, j) = (self.i, self.j);
        match self.half {
            CellHalf::Base => [(i, j), (i + 1, j), (i, j + 1)],
            CellHalf::Rotated => [(i + 1, j + 1), (i, j + 1), (i + 1, j)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshPatch {
    /// `(x, y, f(x, y) + dz)` in original coordinates.
    pub vertices: Vec<[f64; 3]>,
    /// Counterclockwise in plan view.
    pub triangles: Vec<[usize; 3]>,
    /// Integer lattice coordinates of each vertex.
    pub lattice_keys: Vec<(i64, i64)>,
    /// Cell of each triangle.
    pub cells: Vec<CellId>,
    /// Lattice origin `p1 + translate` in the canonical frame.
    pub lattice_origin: Vec2,
    /// `(e₁, e₂)` in the canonical frame.
    pub basis: (Vec2, Vec2),
    pub region: Region,
    pub dz: f64,
    pub frame: CanonicalFrame,
    /// Original coordinates to the canonical frame.
    pub transform: SurfaceTransform,
}

impl MeshPatch {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn plan_vertex(&self, k: usize) -> Vec2 {
        Vec2::new(self.vertices[k][0], self.vertices[k][1])
    }

    pub fn plan_triangle(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|k| self.plan_vertex(k))
    }

    pub fn heights(&self, t: usize) -> [f64; 3] {
        self.triangles[t].map(|k| self.vertices[k][2])
    }

    /// Canonical-frame position of lattice point `(i, j)`.
    pub fn lattice_point(&self, i: i64, j: i64) -> Vec2 {
        self.lattice_origin + self.basis.0 * i as f64 + self.basis.1 * j as f64
    }

    /// Undirected edge → incident triangle indices.
    pub fn edge_incidence(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    /// Every edge has at most two incident triangles, and shared edges are
    /// traversed in opposite directions (consistent orientation).
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        if directed.values().any(|&n| n > 1) {
            return false;
        }
        self.edge_incidence().values().all(|ts| ts.len() <= 2)
    }
}

/// Sequential equivalent of [`tile_region`]; kept for determinism checks.
pub fn tile_region_sequential(
    q: &QuadraticSurface,
    result: &OptimalResult,
    region: &Region,
    translate: Vec2,
) -> Result<MeshPatch> {
    tile_impl(q, result, region, translate, false)
}

pub fn tile_region(
    q: &QuadraticSurface,
    result: &OptimalResult,
    region: &Region,
    translate: Vec2,
) -> Result<MeshPatch> {
    tile_impl(q, result, region, translate, true)
}

fn tile_impl(
    q: &QuadraticSurface,
    result: &OptimalResult,
    region: &Region,
    translate: Vec2,
    parallel: bool,
) -> Result<MeshPatch> {
    let nf = normalize(q)?;
    if nf.frame() != result.frame {
        return Err(Error::CaseMismatch {
            built: result.frame,
            surface: nf.frame(),
        });
    }
    let transform = nf.canonical_transform();
    let back = transform.inverse();
    let flips = back.plane.determinant() < 0.0;

    let p = result.vertices();
    let (e1, e2) = (p[1] - p[0], p[2] - p[0]);
    let origin = p[0] + translate;
    let det = e1.x * e2.y - e1.y * e2.x;
    let to_lattice = |c: Vec2| {
        let r = c - origin;
        Vec2::new((r.x * e2.y - r.y * e2.x) / det, (e1.x * r.y - e1.y * r.x) / det)
    };
    let lattice_corners = region.corners().map(|c| to_lattice(transform.map_point(c)));
    let (s_lo, s_hi) = min_max(lattice_corners.iter().map(|c| c.x));
    let (t_lo, t_hi) = min_max(lattice_corners.iter().map(|c| c.y));
    let (i_lo, i_hi) = (s_lo.floor() as i64 - 1, s_hi.floor() as i64);
    let (j_lo, j_hi) = (t_lo.floor() as i64 - 1, t_hi.floor() as i64);

    let plan = |i: i64, j: i64| back.map_point(origin + e1 * i as f64 + e2 * j as f64);
    let row = |j: i64| -> Vec<CellId> {
        let mut out = Vec::new();
        for i in i_lo..=i_hi {
            for half in [CellHalf::Base, CellHalf::Rotated] {
                let cell = CellId { i, j, half };
                let tri = cell.corners().map(|(a, b)| plan(a, b));
                if region.intersects_triangle(&tri) {
                    out.push(cell);
                }
            }
        }
        out
    };
    let rows: Vec<Vec<CellId>> = if parallel {
        (j_lo..=j_hi).into_par_iter().map(row).collect()
    } else {
        (j_lo..=j_hi).map(row).collect()
    };

    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut lattice_keys = Vec::new();
    let mut triangles = Vec::new();
    let mut cells = Vec::new();
    for cell in rows.into_iter().flatten() {
        let mut tri = cell.corners().map(|key| {
            *index.entry(key).or_insert_with(|| {
                let pt = plan(key.0, key.1);
                vertices.push([pt.x, pt.y, q.eval(pt) + result.dz]);
                lattice_keys.push(key);
                vertices.len() - 1
            })
        });
        if flips {
            tri.swap(1, 2);
        }
        triangles.push(tri);
        cells.push(cell);
    }
    if triangles.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(MeshPatch {
        vertices,
        triangles,
        lattice_keys,
        cells,
        lattice_origin: origin,
        basis: (e1, e2),
        region: *region,
        dz: result.dz,
        frame: result.frame,
        transform,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub triangle_count: usize,
    pub region_area: f64,
    pub empirical_density: f64,
    pub theoretical_density: f64,
    pub sampled_max_error: f64,
}

/// Counts triangles meeting the patch region and audits the vertical error
/// of the mesh on the part of each triangle inside the region.
pub fn measure(
    q: &QuadraticSurface,
    patch: &MeshPatch,
    eps: f64,
    mode: Mode,
    samples_per_triangle: usize,
) -> Result<DensityReport> {
    let region = patch.region;
    let triangle_count = (0..patch.triangles.len())
        .filter(|&t| region.intersects_triangle(&patch.plan_triangle(t)))
        .count();
    let sampled_max_error = (0..patch.triangles.len())
        .into_par_iter()
        .map(|t| {
            let dev = Deviation::from_heights(q, patch.plan_triangle(t), patch.heights(t))?;
            Ok(dev
                .sampled_max_abs_where(samples_per_triangle, |p| region.contains(p))
                .unwrap_or(0.0))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let region_area = region.area();
    Ok(DensityReport {
        triangle_count,
        region_area,
        empirical_density: triangle_count as f64 / region_area,
        theoretical_density: theoretical_density(q, eps, mode)?,
        sampled_max_error,
    })
}

/// Vertices strictly inside `region`, per unit area.
pub fn vertex_density(patch: &MeshPatch, region: &Region) -> f64 {
    let inside = (0..patch.vertices.len())
        .filter(|&k| region.contains_strictly(patch.plan_vertex(k)))
        .count();
    inside as f64 / region.area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{convex_optimal, saddle_interpolating, saddle_offset};
    use crate::quadratic::SurfaceClass;
    use crate::vertical_error::triangle_error_with_heights;
    use std::collections::BTreeSet;

    fn saddle() -> QuadraticSurface {
        QuadraticSurface::quadratic_form(0.0, 1.0, 0.0)
    }

    /// Count of lattice translates of T and T′ meeting a w×h rectangle,
    /// from the area of the Minkowski sum rectangle ⊕ (−T): (wh + w·t_y + h·t_x + A)/A.
    fn minkowski_prediction(r: &OptimalResult, region: &Region) -> f64 {
        let p = r.vertices();
        let (lo_x, hi_x) = min_max(p.iter().map(|v| v.x));
        let (lo_y, hi_y) = min_max(p.iter().map(|v| v.y));
        let (w, h) = (region.width(), region.height());
        (w * h + w * (hi_y - lo_y) + h * (hi_x - lo_x) + r.area) / r.area
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Region::new(0.0, 2.0, 1.0, 1.0).is_err());
        assert!(Region::new(0.0, 0.0, f64::NAN, 1.0).is_err());
        assert_eq!(Region::centered_square(2.0).unwrap().area(), 16.0);
    }

    #[test]
    fn triangle_region_intersection() {
        let r = Region::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let inside = [Vec2::new(0.2, 0.2), Vec2::new(0.5, 0.2), Vec2::new(0.2, 0.5)];
        assert!(r.intersects_triangle(&inside));
        // covers the whole square
        let big = [Vec2::new(-10.0, -10.0), Vec2::new(10.0, -10.0), Vec2::new(0.0, 10.0)];
        assert!(r.intersects_triangle(&big));
        // bounding boxes overlap but the hypotenuse separates
        let corner = [Vec2::new(1.2, 2.0), Vec2::new(2.0, 1.2), Vec2::new(2.0, 2.0)];
        assert!(!r.intersects_triangle(&corner));
        let touching = [Vec2::new(1.0, 1.0), Vec2::new(2.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(r.intersects_triangle(&touching));
    }

    #[test]
    fn saddle_offset_mesh_is_tight_everywhere() {
        let q = saddle();
        let r = saddle_offset(1.0, 1.0).unwrap();
        let region = Region::centered_square(10.0).unwrap();
        let patch = tile_region(&q, &r, &region, Vec2::zeros()).unwrap();
        assert!(patch.is_watertight());
        for t in 0..patch.triangles.len() {
            let w = triangle_error_with_heights(&q, patch.plan_triangle(t), patch.heights(t)).unwrap();
            assert!((w.value - 1.0).abs() < 1e-9, "triangle {t}: {}", w.value);
        }
        let report = measure(&q, &patch, 1.0, Mode::UniformOffset, 12).unwrap();
        assert!(report.sampled_max_error <= 1.0 + 1e-9);
        assert_eq!(report.triangle_count, patch.triangles.len());
        assert_eq!(report.empirical_density, report.triangle_count as f64 / 400.0);
        assert!((report.theoretical_density - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_excess_follows_minkowski_count() {
        let q = saddle();
        let r = saddle_offset(1.0, 1.0).unwrap();
        for half in [10.0, 20.0, 40.0] {
            let region = Region::centered_square(half).unwrap();
            let patch = tile_region(&q, &r, &region, Vec2::zeros()).unwrap();
            let predicted = minkowski_prediction(&r, &region);
            let got = patch.triangles.len() as f64;
            assert!((got / predicted - 1.0).abs() < 0.02, "half {half}: {got} vs {predicted}");
        }
    }

    #[test]
    fn density_gap_shrinks_monotonically() {
        let q = saddle();
        let r = saddle_offset(1.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for half in [10.0, 20.0, 40.0] {
            let region = Region::centered_square(half).unwrap();
            let patch = tile_region(&q, &r, &region, Vec2::zeros()).unwrap();
            let rep = measure(&q, &patch, 1.0, Mode::UniformOffset, 3).unwrap();
            let gap = (rep.empirical_density / rep.theoretical_density - 1.0).abs();
            assert!(gap < last);
            // O(1/r): gap·r stays bounded
            assert!(gap * 2.0 * half < 5.0);
            last = gap;
        }
    }

    #[test]
    fn tiny_region_still_gets_a_triangle() {
        let q = saddle();
        let r = saddle_offset(1.0, 1.0).unwrap();
        let region = Region::new(0.31, 0.27, 0.32, 0.28).unwrap();
        let patch = tile_region(&q, &r, &region, Vec2::zeros()).unwrap();
        assert!(!patch.is_empty());
        assert!(vertex_density(&patch, &Region::centered_square(5.0).unwrap()) > 0.0);
    }

    #[test]
    fn translating_by_lattice_vector_relabels_only() {
        let q = saddle();
        let r = saddle_interpolating(1.0, 1.0).unwrap();
        let region = Region::new(-6.0, -4.0, 7.0, 5.0).unwrap();
        let t = Vec2::new(0.3, -0.1);
        let (e1, e2) = (r.vertices()[1], r.vertices()[2]);
        let a = tile_region(&q, &r, &region, t).unwrap();
        let b = tile_region(&q, &r, &region, t + e1).unwrap();
        let c = tile_region(&q, &r, &region, t + e1 * 2.0 - e2 * 3.0).unwrap();
        let key = |p: &MeshPatch| -> BTreeSet<[i64; 6]> {
            (0..p.triangles.len())
                .map(|k| {
                    let mut v: Vec<[i64; 2]> = p
                        .plan_triangle(k)
                        .iter()
                        .map(|v| [(v.x * 1e6).round() as i64, (v.y * 1e6).round() as i64])
                        .collect();
                    v.sort();
                    [v[0][0], v[0][1], v[1][0], v[1][1], v[2][0], v[2][1]]
                })
                .collect()
        };
        assert_eq!(key(&a), key(&b));
        assert_eq!(key(&a), key(&c));
    }

    #[test]
    fn parallel_matches_sequential() {
        let q = QuadraticSurface::new(1.0, 2.0, -1.5, 0.3, 0.1, -2.0);
        let r = saddle_offset(0.5, 1.7).unwrap();
        let region = Region::new(-9.0, -5.0, 8.0, 6.5).unwrap();
        let a = tile_region(&q, &r, &region, Vec2::new(0.1, 0.2)).unwrap();
        let b = tile_region_sequential(&q, &r, &region, Vec2::new(0.1, 0.2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn general_quadratics_keep_error_and_orientation() {
        let cases = [
            QuadraticSurface::new(1.0, 2.0, -1.5, 0.3, 0.1, -2.0),
            QuadraticSurface::new(-1.0, 0.0, 1.0, 0.0, 0.0, 0.0),
            QuadraticSurface::new(2.0, 0.5, 1.0, -1.0, 3.0, 0.5),
            QuadraticSurface::new(-2.0, 0.5, -1.0, 1.0, 0.0, 0.0),
        ];
        for q in cases {
            let frame = CanonicalFrame::of_class(q.classify()).unwrap();
            for mode in [Mode::Interpolating, Mode::UniformOffset] {
                let r = crate::optimal::optimal_for(frame, 0.25, mode, 1.0).unwrap();
                let region = Region::new(-3.0, -2.0, 4.0, 3.0).unwrap();
                let patch = tile_region(&q, &r, &region, Vec2::zeros()).unwrap();
                assert!(patch.is_watertight());
                for t in 0..patch.triangles.len() {
                    let p = patch.plan_triangle(t);
                    assert!(crate::orient2(p[0], p[1], p[2]) > 0.0);
                    let w = triangle_error_with_heights(&q, p, patch.heights(t)).unwrap();
                    assert!((w.value - 0.25).abs() < 1e-9, "{q:?} {mode:?}: {}", w.value);
                }
                let rep = measure(&q, &patch, 0.25, mode, 10).unwrap();
                assert!(rep.sampled_max_error <= 0.25 * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn mismatched_case_is_rejected() {
        let r = convex_optimal(1.0, Mode::Interpolating).unwrap();
        let region = Region::centered_square(3.0).unwrap();
        let err = tile_region(&saddle(), &r, &region, Vec2::zeros()).unwrap_err();
        assert!(matches!(err, Error::CaseMismatch { .. }));
        let deg = QuadraticSurface::quadratic_form(1.0, 1.0, 1.0);
        assert_eq!(deg.classify(), SurfaceClass::Degenerate);
        assert!(matches!(tile_region(&deg, &r, &region, Vec2::zeros()), Err(Error::DegenerateSurface { .. })));
    }

    #[test]
    fn vertex_density_is_half_triangle_density() {
        let q = saddle();
        let r = saddle_offset(1.0, 1.0).unwrap();
        let small = Region::centered_square(20.0).unwrap();
        let large = Region::centered_square(40.0).unwrap();
        let a = tile_region(&q, &r, &small, Vec2::zeros()).unwrap();
        let b = tile_region(&q, &r, &large, Vec2::zeros()).unwrap();
        let va = vertex_density(&a, &small);
        let vb = vertex_density(&b, &large);
        // lattice-point density is exactly 1/(2A)
        assert!((vb * r.area - 0.5).abs() < 0.02);
        let count = |v: f64, reg: &Region| v * reg.area();
        let ratio = count(vb, &large) / count(va, &small);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }
}
