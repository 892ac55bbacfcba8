//! Brute-force constrained area maximisation.
//!
//! Re-derives the closed-form optima without assuming their symmetry: `p1`
//! is pinned at the origin (every surface point looks the same), `p2` and
//! `p3` range over the right half of a box of half-width `k·√ε`, and the
//! search is a coarse grid followed by a derivative-free pattern search with
//! step halving. Everything is deterministic; parallel grid reductions break
//! ties by the lowest grid index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimal::saddle_offset_area;
use crate::quadratic::{CanonicalFrame, QuadraticSurface};
use crate::vertical_error::{Deviation, Tolerance};
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid points per coordinate.
    pub resolution: usize,
    pub refinement_rounds: usize,
    /// Box half-width in units of `√ε`.
    pub half_width: f64,
    /// Relative slack on the error budget, `err ≤ ε(1 + slack)`.
    pub feasibility_slack: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            resolution: 16,
            refinement_rounds: 40,
            half_width: 4.0,
            feasibility_slack: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::InvalidSearchConfig(format!("resolution {} < 8", self.resolution)));
        }
        if self.refinement_rounds < 1 {
            return Err(Error::InvalidSearchConfig("need at least one refinement round".into()));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidSearchConfig(format!("half width {}", self.half_width)));
        }
        if !(self.feasibility_slack.is_finite() && self.feasibility_slack >= 0.0) {
            return Err(Error::InvalidSearchConfig(format!("slack {}", self.feasibility_slack)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub p2: Vec2,
    pub p3: Vec2,
    pub dz: f64,
    pub area: f64,
    /// Achieved error minus `ε`.
    pub feasibility_residual: f64,
    /// Best area after each refinement round.
    pub round_areas: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
enum Budget {
    /// `|f₀(pᵢ − pⱼ)| ≤ 4ε` on each edge, interpolating.
    Chords,
    /// Exact triangle error including the offset.
    Triangle,
}

#[derive(Clone, Copy, Debug)]
struct Problem {
    surface: QuadraticSurface,
    eps: f64,
    budget: Budget,
    dz_range: (f64, f64),
}

impl Problem {
    fn dims(&self) -> usize {
        if self.dz_range.0 == self.dz_range.1 {
            4
        } else {
            5
        }
    }

    fn dz_of(&self, z: &[f64]) -> f64 {
        if self.dims() == 5 {
            z[4]
        } else {
            self.dz_range.0
        }
    }

    fn error(&self, z: &[f64]) -> Option<f64> {
        let p2 = Vec2::new(z[0], z[1]);
        let p3 = Vec2::new(z[2], z[3]);
        match self.budget {
            Budget::Chords => {
                let f0 = |v: Vec2| self.surface.quadratic_part(v).abs() / 4.0;
                Some(f0(p2).max(f0(p3)).max(f0(p3 - p2)))
            }
            Budget::Triangle => {
                let dz = self.dz_of(z);
                Deviation::new(&self.surface, [Vec2::zeros(), p2, p3], [dz; 3])
                    .ok()
                    .map(|d| d.max_abs().value)
            }
        }
    }

    /// Area if feasible.
    fn score(&self, z: &[f64], slack: f64) -> Option<f64> {
        let area = 0.5 * (z[0] * z[3] - z[1] * z[2]).abs();
        if area == 0.0 {
            return None;
        }
        let err = self.error(z)?;
        (err <= self.eps * (1.0 + slack)).then_some(area)
    }
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn contains(&self, z: &[f64]) -> bool {
        z.iter().zip(&self.lo).zip(&self.hi).all(|((v, lo), hi)| v >= lo && v <= hi)
    }
}

fn search(problem: &Problem, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let dims = problem.dims();
    let w = cfg.half_width * problem.eps.sqrt();
    let res = cfg.resolution;

    // x in (0, w], y in [−w, w], dz over its range
    let axis = |d: usize, k: usize| -> f64 {
        match d {
            0 | 2 => w * (k + 1) as f64 / res as f64,
            1 | 3 => -w + 2.0 * w * k as f64 / (res - 1) as f64,
            _ => problem.dz_range.0 + (problem.dz_range.1 - problem.dz_range.0) * k as f64 / (res - 1) as f64,
        }
    };
    let spacing: Vec<f64> = (0..dims)
        .map(|d| match d {
            0 | 2 => w / res as f64,
            1 | 3 => 2.0 * w / (res - 1) as f64,
            _ => (problem.dz_range.1 - problem.dz_range.0) / (res - 1) as f64,
        })
        .collect();
    let mut bounds = Bounds {
        lo: vec![0.0, -w, 0.0, -w],
        hi: vec![w, w, w, w],
    };
    if dims == 5 {
        bounds.lo.push(problem.dz_range.0);
        bounds.hi.push(problem.dz_range.1);
    }

    let point = |mut idx: usize| -> Vec<f64> {
        let mut z = vec![0.0; dims];
        for d in (0..dims).rev() {
            z[d] = axis(d, idx % res);
            idx /= res;
        }
        z
    };
    let total = res.pow(dims as u32);
    let mut feasible: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| problem.score(&point(idx), cfg.feasibility_slack).map(|a| (a, idx)))
        .collect();
    if feasible.is_empty() {
        return Err(Error::SearchBudgetExceeded);
    }
    // largest area first, lowest index among ties
    feasible.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let directions = pattern_directions(dims);
    const STARTS: usize = 8;
    let runs: Vec<(f64, Vec<f64>, Vec<f64>)> = feasible
        .iter()
        .take(STARTS)
        .map(|&(area, idx)| {
            let (best, z, history) =
                pattern_search(problem, cfg, &bounds, &directions, &spacing, point(idx), area);
            (best, z, history)
        })
        .collect();
    let (area, z, round_areas) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one start");

    let err = problem.error(&z).expect("accepted points are evaluable");
    Ok(SearchOutcome {
        p2: Vec2::new(z[0], z[1]),
        p3: Vec2::new(z[2], z[3]),
        dz: problem.dz_of(&z),
        area,
        feasibility_residual: err - problem.eps,
        round_areas,
    })
}

/// All nonzero vectors of `{−1, 0, 1}^dims`, lexicographic.
fn pattern_directions(dims: usize) -> Vec<Vec<f64>> {
    let count = 3usize.pow(dims as u32);
    (0..count)
        .map(|mut k| {
            let mut v = vec![0.0; dims];
            for d in (0..dims).rev() {
                v[d] = (k % 3) as f64 - 1.0;
                k /= 3;
            }
            v
        })
        .filter(|v| v.iter().any(|&x| x != 0.0))
        .collect()
}

fn pattern_search(
    problem: &Problem,
    cfg: &SearchConfig,
    bounds: &Bounds,
    directions: &[Vec<f64>],
    spacing: &[f64],
    mut z: Vec<f64>,
    mut best: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let mut step = spacing.to_vec();
    let mut history = Vec::with_capacity(cfg.refinement_rounds);
    let mut cand = z.clone();
    for _ in 0..cfg.refinement_rounds {
        for _ in 0..1000 {
            let mut improved = false;
            for dir in directions {
                for d in 0..z.len() {
                    cand[d] = z[d] + dir[d] * step[d];
                }
                if !bounds.contains(&cand) {
                    continue;
                }
                if let Some(area) = problem.score(&cand, cfg.feasibility_slack) {
                    if area > best {
                        best = area;
                        z.copy_from_slice(&cand);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        history.push(best);
        for s in step.iter_mut() {
            *s *= 0.5;
        }
    }
    (best, z, history)
}

fn checked_eps(eps: f64) -> Result<f64> {
    Tolerance::new(eps).map(Tolerance::get)
}

/// Largest interpolating triangle on `2xy` under the three chord constraints.
pub fn oracle_max_area_interpolating(eps: f64, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let eps = checked_eps(eps)?;
    search(
        &Problem {
            surface: CanonicalFrame::SaddleXy.surface(),
            eps,
            budget: Budget::Chords,
            dz_range: (0.0, 0.0),
        },
        cfg,
    )
}

/// Largest uniform-offset triangle on `2xy`, offset free in `[−ε, 0]`.
///
/// The reflection `(x, y) ↦ (x, −y)` keeps the half-plane and flips the
/// offset's sign, so non-positive offsets lose nothing.
pub fn oracle_max_area_offset(eps: f64, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let eps = checked_eps(eps)?;
    search(
        &Problem {
            surface: CanonicalFrame::SaddleXy.surface(),
            eps,
            budget: Budget::Triangle,
            dz_range: (-eps, 0.0),
        },
        cfg,
    )
}

/// Same as [`oracle_max_area_offset`] with the offset held at `dz`.
pub fn oracle_max_area_fixed_offset(eps: f64, dz: f64, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let eps = checked_eps(eps)?;
    search(
        &Problem {
            surface: CanonicalFrame::SaddleXy.surface(),
            eps,
            budget: Budget::Triangle,
            dz_range: (dz, dz),
        },
        cfg,
    )
}

/// Largest triangle on `x² + y²` with error at most `ε`; interpolating, or
/// with the offset free in `[−ε, ε]`.
pub fn oracle_convex(eps: f64, cfg: &SearchConfig, free_offset: bool) -> Result<SearchOutcome> {
    let eps = checked_eps(eps)?;
    search(
        &Problem {
            surface: CanonicalFrame::Convex.surface(),
            eps,
            budget: Budget::Triangle,
            dz_range: if free_offset { (-eps, eps) } else { (0.0, 0.0) },
        },
        cfg,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DzProfilePoint {
    pub dz: f64,
    pub closed_form_area: f64,
    pub searched_area: Option<f64>,
}

/// Constrained maximal area as a function of the offset; the searched column
/// is filled when `search_cfg` is given.
pub fn oracle_dz_profile(eps: f64, dz_grid: &[f64], search_cfg: Option<&SearchConfig>) -> Result<Vec<DzProfilePoint>> {
    let eps = checked_eps(eps)?;
    dz_grid
        .iter()
        .map(|&dz| {
            if !(dz >= -eps && dz <= eps) {
                return Err(Error::InvalidTolerance(dz));
            }
            let searched_area = match search_cfg {
                Some(cfg) if dz < eps => Some(oracle_max_area_fixed_offset(eps, dz, cfg)?.area),
                Some(_) => Some(0.0),
                None => None,
            };
            Ok(DzProfilePoint {
                dz,
                closed_form_area: saddle_offset_area(eps, dz),
                searched_area,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig { resolution: 4, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidSearchConfig(_))));
        let bad = SearchConfig { refinement_rounds: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SearchConfig { feasibility_slack: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn directions_cover_the_cube() {
        assert_eq!(pattern_directions(4).len(), 80);
        assert_eq!(pattern_directions(5).len(), 242);
    }

    #[test]
    fn tiny_box_still_finds_thin_triangles() {
        let cfg = SearchConfig { half_width: 0.05, refinement_rounds: 2, resolution: 8, ..Default::default() };
        let out = oracle_max_area_interpolating(1.0, &cfg).unwrap();
        assert!(out.area <= 0.05f64.powi(2) * 2.0);
    }

    #[test]
    fn infeasible_problem_reports_budget() {
        // a tiny tolerance with a huge box: every coarse grid point violates it
        let cfg = SearchConfig { half_width: 1e6, refinement_rounds: 1, resolution: 8, feasibility_slack: 0.0 };
        assert_eq!(oracle_convex(1e-12, &cfg, false).unwrap_err(), Error::SearchBudgetExceeded);
    }

    #[test]
    fn profile_closed_form_column() {
        let prof = oracle_dz_profile(1.0, &[0.0, -1.0 / 3.0, 1.0], None).unwrap();
        assert!((prof[0].closed_form_area - 5f64.sqrt()).abs() < 1e-15);
        assert!((prof[1].closed_form_area - 4.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(prof[2].closed_form_area, 0.0);
        assert!(oracle_dz_profile(1.0, &[1.5], None).is_err());
    }
}
