//! Exact projections of model cells onto a line through the origin.
//!
//! Directions use the direction-angle convention: the projection onto the
//! line with angle `φ` is `p_φ(x, y) = x cos φ + y sin φ`, `φ ∈ [0, π)`.
//! Rotating the set counterclockwise by `θ` and projecting onto the horizontal
//! axis is the same as `p_φ` with `φ = -θ mod π`, so Favard integrals over a
//! full half-turn agree in both conventions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    dot2, integrate_theta, sort_floats, step_from_endpoints, step_moment, sweep_sorted, Estimate,
    Interval, NeumaierSum, QuadratureSpec, StepFunction,
};
use crate::models::{Cell, CellTree, ModelId, ModelKind, Node};

/// Projection direction `φ ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    phi: f64,
    cos: f64,
    sin: f64,
}

impl Direction {
    /// Direction with angle `phi` reduced mod π.
    pub fn new(phi: f64) -> Self {
        let mut phi = phi.rem_euclid(PI);
        if phi >= PI {
            phi = 0.0;
        }
        Self {
            phi,
            cos: phi.cos(),
            sin: phi.sin(),
        }
    }

    /// Direction of the vector `(x, y)`, cosines computed by division so
    /// rational slopes stay exact in ratio (e.g. `(2, 1)` gives `cos = 2 sin`
    /// bit for bit).
    pub fn from_vector(x: f64, y: f64) -> Self {
        let (x, y) = if y < 0.0 || (y == 0.0 && x < 0.0) {
            (-x, -y)
        } else {
            (x, y)
        };
        let r = x.hypot(y);
        assert!(r > 0.0, "zero vector has no direction");
        let (cos, sin) = (x / r, y / r);
        let mut phi = y.atan2(x);
        if phi >= PI {
            phi = 0.0;
            return Self {
                phi,
                cos: 1.0,
                sin: 0.0,
            };
        }
        Self { phi, cos, sin }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    #[inline]
    pub fn project(&self, p: [f64; 2]) -> f64 {
        dot2(p[0], self.cos, p[1], self.sin)
    }
}

/// [`Direction`] specialized to a lattice: `p(X, Y) = (X·p(e1) + Y·p(e2)) / base^n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Projector {
    pe1: f64,
    pe2: f64,
    denom: f64,
    triangular: bool,
}

impl Projector {
    pub(crate) fn new(tree: &CellTree, dir: &Direction) -> Self {
        Self::with_denominator(tree.model, dir, tree.denominator() as f64)
    }

    pub(crate) fn with_denominator(model: ModelId, dir: &Direction, denom: f64) -> Self {
        let (e1, e2) = model.lattice_basis();
        let pe1 = dot2(e1[0], dir.cos, e1[1], dir.sin);
        let pe2 = dot2(e2[0], dir.cos, e2[1], dir.sin);
        Self {
            pe1,
            pe2,
            denom,
            triangular: model.is_triangular(),
        }
    }

    #[inline]
    pub(crate) fn vertex(&self, x: i64, y: i64) -> f64 {
        dot2(x as f64, self.pe1, y as f64, self.pe2) / self.denom
    }

    /// Projection interval of the cell with lattice corner `(x, y)` and side `s`.
    #[inline]
    pub(crate) fn cell(&self, x: i64, y: i64, s: i64) -> (f64, f64) {
        if self.triangular {
            let a = self.vertex(x, y);
            let b = self.vertex(x + s, y);
            let c = self.vertex(x, y + s);
            (a.min(b).min(c), a.max(b).max(c))
        } else if self.pe1 >= 0.0 {
            // p(e2) = sin φ >= 0 on [0, π)
            (self.vertex(x, y), self.vertex(x + s, y + s))
        } else {
            (self.vertex(x + s, y), self.vertex(x, y + s))
        }
    }

    #[inline]
    pub(crate) fn node(&self, node: &Node) -> (f64, f64) {
        self.cell(node.x, node.y, node.size)
    }
}

/// `[min, max]` of the projection over the cell's vertices.
pub fn project_cell(cell: &Cell, dir: &Direction) -> Interval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in cell.vertices() {
        let p = dir.project(v);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Interval::new(lo, hi)
}

/// Largest level handled exactly: `4^12` squares, `3^13` triangles by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactBudget {
    pub square_level: u32,
    pub triangle_level: u32,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self {
            square_level: 12,
            triangle_level: 13,
        }
    }
}

impl ExactBudget {
    pub fn check(&self, model: ModelId, n: u32) -> Result<()> {
        let cap = if model.is_triangular() {
            self.triangle_level
        } else {
            self.square_level
        };
        if n > cap {
            return Err(Error::BudgetExceeded {
                what: "exact projection",
                requested: n,
                cap,
            });
        }
        Ok(())
    }
}

/// Multiplicity function `f_{n,φ}` and its summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionProfile {
    pub direction: Direction,
    pub multiplicity: StepFunction,
    pub support_length: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

fn endpoints(model: ModelId, n: u32, dir: &Direction) -> (Vec<f64>, Vec<f64>) {
    let tree = CellTree::new(model, n);
    let proj = Projector::new(&tree, dir);
    let count = model.cell_count(n) as usize;
    let mut los = Vec::with_capacity(count);
    let mut his = Vec::with_capacity(count);
    for node in tree.leaves() {
        let (lo, hi) = proj.node(&node);
        los.push(lo);
        his.push(hi);
    }
    (los, his)
}

/// Both endpoint lists, sorted ascending.
///
/// For self-similar models the cell corners are built level by level as
/// translated copies of the previous level, each copy already sorted by
/// projection, so the merge sort only has to interleave presorted runs.
fn sorted_endpoints(model: ModelId, n: u32, dir: &Direction) -> (Vec<f64>, Vec<f64>) {
    if model.kind == ModelKind::Random {
        let (mut los, mut his) = endpoints(model, n, dir);
        sort_floats(&mut los);
        sort_floats(&mut his);
        return (los, his);
    }
    let base: i64 = if model.is_triangular() { 3 } else { 4 };
    let offsets: &[(i64, i64)] = if model.is_triangular() {
        &[(0, 0), (2, 0), (0, 2)]
    } else {
        &[(0, 0), (0, 3), (3, 0), (3, 3)]
    };
    let mut corners: Vec<(f64, i64, i64)> = vec![(0.0, 0, 0)];
    let mut next = Vec::with_capacity(model.cell_count(n) as usize);
    let mut denom: i64 = 1;
    for _ in 0..n {
        let step = denom;
        denom *= base;
        let proj = Projector::with_denominator(model, dir, denom as f64);
        next.clear();
        for &(ox, oy) in offsets {
            let (dx, dy) = (ox * step, oy * step);
            next.extend(corners.iter().map(|&(_, x, y)| {
                let (x, y) = (x + dx, y + dy);
                (proj.vertex(x, y), x, y)
            }));
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        std::mem::swap(&mut corners, &mut next);
    }
    let proj = Projector::with_denominator(model, dir, denom as f64);
    let mut los = Vec::with_capacity(corners.len());
    let mut his = Vec::with_capacity(corners.len());
    for &(_, x, y) in &corners {
        let (lo, hi) = proj.cell(x, y, 1);
        los.push(lo);
        his.push(hi);
    }
    los.sort_by(f64::total_cmp);
    his.sort_by(f64::total_cmp);
    (los, his)
}

/// Exact multiplicity profile over all level-`n` cells.
pub fn profile(model: ModelId, n: u32, dir: &Direction) -> Result<ProjectionProfile> {
    profile_with_budget(model, n, dir, &ExactBudget::default())
}

pub fn profile_with_budget(
    model: ModelId,
    n: u32,
    dir: &Direction,
    budget: &ExactBudget,
) -> Result<ProjectionProfile> {
    budget.check(model, n)?;
    let (mut los, mut his) = endpoints(model, n, dir);
    let multiplicity = step_from_endpoints(&mut los, &mut his);
    Ok(ProjectionProfile {
        direction: *dir,
        support_length: multiplicity.support_length(),
        first_moment: step_moment(&multiplicity, 1),
        second_moment: step_moment(&multiplicity, 2),
        multiplicity,
    })
}

/// Support length and first two moments of `f_{n,φ}` without materializing
/// the step function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub support_length: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

pub fn moments(model: ModelId, n: u32, dir: &Direction) -> Result<Moments> {
    ExactBudget::default().check(model, n)?;
    let (los, his) = sorted_endpoints(model, n, dir);
    let mut support = NeumaierSum::new();
    let mut first = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    sweep_sorted(&los, &his, |a, b, count| {
        if count > 0 {
            let w = b - a;
            let c = count as f64;
            support.add(w);
            first.add(c * w);
            second.add(c * c * w);
        }
    });
    Ok(Moments {
        support_length: support.value(),
        first_moment: first.value(),
        second_moment: second.value(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    lo_vertex: (i64, i64),
    hi_vertex: (i64, i64),
}

/// `|Proj_φ|` of the level-`n` iterate.
///
/// Self-similar models (four-corner, Sierpiński) use the recursion
/// `Proj K_k = ∪_o (p(o) + Proj K_{k-1} / base)`: the merged component list of
/// level `k - 1` is copied once per similarity, the presorted copies are
/// merged and re-unioned. Endpoints stay attached to exact lattice vertices so
/// no rounding accumulates across levels. The random model has no such
/// recursion and goes through the full endpoint sweep.
pub fn support_length(model: ModelId, n: u32, dir: &Direction) -> Result<f64> {
    ExactBudget::default().check(model, n)?;
    match model.kind {
        ModelKind::Random => Ok(CellCorners::new(model, n)?.support_length(dir)),
        _ => Ok(self_similar_support(model, n, dir)),
    }
}

/// `φ ↦ |Proj_φ|` for repeated evaluation. For the random model the cell
/// corners are generated once up front.
pub fn support_fn(model: ModelId, n: u32) -> Result<impl Fn(&Direction) -> f64 + Sync> {
    ExactBudget::default().check(model, n)?;
    let corners = match model.kind {
        ModelKind::Random => Some(CellCorners::new(model, n)?),
        _ => None,
    };
    Ok(move |dir: &Direction| match &corners {
        Some(c) => c.support_length(dir),
        None => self_similar_support(model, n, dir),
    })
}

/// Lattice corners of every level-`n` cell.
#[derive(Debug, Clone)]
pub struct CellCorners {
    model: ModelId,
    n: u32,
    corners: Vec<(i64, i64)>,
}

impl CellCorners {
    pub fn new(model: ModelId, n: u32) -> Result<Self> {
        ExactBudget::default().check(model, n)?;
        let corners = CellTree::new(model, n)
            .leaves()
            .map(|node| (node.x, node.y))
            .collect();
        Ok(Self { model, n, corners })
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    /// Union length of the projected cells, by one sort and a sweep.
    pub fn support_length(&self, dir: &Direction) -> f64 {
        let tree = CellTree::new(self.model, self.n);
        let proj = Projector::new(&tree, dir);
        let mut spans: Vec<(f64, f64)> = self
            .corners
            .iter()
            .map(|&(x, y)| proj.cell(x, y, 1))
            .collect();
        spans.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut total = NeumaierSum::new();
        let mut current: Option<(f64, f64)> = None;
        for (lo, hi) in spans {
            current = match current {
                Some((a, b)) if lo <= b => Some((a, b.max(hi))),
                Some((a, b)) => {
                    total.add(b - a);
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((a, b)) = current {
            total.add(b - a);
        }
        total.value()
    }
}

fn self_similar_support(model: ModelId, n: u32, dir: &Direction) -> f64 {
    let base: i64 = if model.is_triangular() { 3 } else { 4 };
    let mut denom: i64 = 1;
    let unit = CellTree::new(model, 0);
    let (verts, nv) = unit.vertices(&unit.root());
    let proj = Projector::with_denominator(model, dir, 1.0);
    let mut lo_v = verts[0];
    let mut hi_v = verts[0];
    for &v in &verts[1..nv] {
        if proj.vertex(v.0, v.1) < proj.vertex(lo_v.0, lo_v.1) {
            lo_v = v;
        }
        if proj.vertex(v.0, v.1) > proj.vertex(hi_v.0, hi_v.1) {
            hi_v = v;
        }
    }
    let mut segs = vec![Segment {
        lo: proj.vertex(lo_v.0, lo_v.1),
        hi: proj.vertex(hi_v.0, hi_v.1),
        lo_vertex: lo_v,
        hi_vertex: hi_v,
    }];
    let mut scratch: Vec<Segment> = Vec::new();
    for _ in 0..n {
        let step = denom; // base^(k-1) in level-k units is the old denominator
        denom *= base;
        let proj = Projector::with_denominator(model, dir, denom as f64);
        let offsets: &[(i64, i64)] = if model.is_triangular() {
            &[(0, 0), (2, 0), (0, 2)]
        } else {
            &[(0, 0), (0, 3), (3, 0), (3, 3)]
        };
        scratch.clear();
        for &(ox, oy) in offsets {
            let (dx, dy) = (ox * step, oy * step);
            scratch.extend(segs.iter().map(|s| {
                let lo_vertex = (s.lo_vertex.0 + dx, s.lo_vertex.1 + dy);
                let hi_vertex = (s.hi_vertex.0 + dx, s.hi_vertex.1 + dy);
                Segment {
                    lo: proj.vertex(lo_vertex.0, lo_vertex.1),
                    hi: proj.vertex(hi_vertex.0, hi_vertex.1),
                    lo_vertex,
                    hi_vertex,
                }
            }));
        }
        // stable merge sort finds the presorted runs
        scratch.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        segs.clear();
        let mut cur = scratch[0];
        for s in &scratch[1..] {
            if s.lo <= cur.hi {
                if s.hi > cur.hi {
                    cur.hi = s.hi;
                    cur.hi_vertex = s.hi_vertex;
                }
            } else {
                segs.push(cur);
                cur = *s;
            }
        }
        segs.push(cur);
    }
    segs.iter()
        .map(|s| s.hi - s.lo)
        .collect::<NeumaierSum>()
        .value()
}

/// `∫_range ∫ f_{n,φ}(x)^2 dx dφ`.
pub fn second_moment_theta(
    model: ModelId,
    n: u32,
    spec: &QuadratureSpec,
    range: (f64, f64),
) -> Result<Estimate> {
    ExactBudget::default().check(model, n)?;
    integrate_symmetric(
        model,
        |phi| {
            moments(model, n, &Direction::new(phi))
                .map(|m| m.second_moment)
                .unwrap_or(f64::NAN)
        },
        range,
        spec,
    )
}

/// [`integrate_theta`] that folds a full half-turn onto `[0, π/4]` when the
/// integrand has the dihedral symmetry of the four-corner set. Panel counts in
/// `spec` then refer to the folded range.
pub(crate) fn integrate_symmetric<F>(
    model: ModelId,
    g: F,
    range: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    let folds = model.kind == ModelKind::FourCorner && range == (0.0, PI);
    if !folds {
        return integrate_theta(g, range, spec);
    }
    let scale = |e: Estimate| Estimate {
        value: 4.0 * e.value,
        error_estimate: 4.0 * e.error_estimate,
        ..e
    };
    match integrate_theta(g, (0.0, PI / 4.0), spec) {
        Ok(e) => Ok(scale(e)),
        Err(Error::NonConvergence {
            value,
            error_estimate,
        }) => Err(Error::NonConvergence {
            value: 4.0 * value,
            error_estimate: 4.0 * error_estimate,
        }),
        Err(e) => Err(e),
    }
}

/// One row of a direction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub theta: f64,
    pub support_length: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

/// Profiles on the midpoint grid of `samples` directions in `[0, π)`.
pub fn profile_sweep(model: ModelId, n: u32, samples: usize) -> Result<Vec<ProfileRow>> {
    use rayon::prelude::*;
    ExactBudget::default().check(model, n)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let theta = (i as f64 + 0.5) * PI / samples as f64;
            let m = moments(model, n, &Direction::new(theta))?;
            Ok(ProfileRow {
                theta,
                support_length: m.support_length,
                first_moment: m.first_moment,
                second_moment: m.second_moment,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::union_length;
    use crate::models::{enumerate_squares, enumerate_triangles, Square};

    fn unit() -> Cell {
        Cell::Square(Square {
            corner: [0.0, 0.0],
            side: 1.0,
        })
    }

    fn half_angle() -> Direction {
        Direction::from_vector(2.0, 1.0)
    }

    #[test]
    fn direction_normalization() {
        assert!((Direction::new(-0.25).phi() - (PI - 0.25)).abs() < 1e-15);
        assert!((Direction::new(PI + 0.5).phi() - 0.5).abs() < 1e-15);
        assert_eq!(Direction::new(PI).phi(), 0.0);
        let d = Direction::from_vector(-2.0, -1.0);
        assert_eq!(d.cos(), 2.0 * d.sin());
        assert!((d.phi() - 0.5f64.atan()).abs() < 1e-15);
    }

    #[test]
    fn project_unit_square() {
        let iv = project_cell(&unit(), &Direction::new(0.0));
        assert_eq!((iv.lo, iv.hi), (0.0, 1.0));
        let iv = project_cell(&unit(), &Direction::new(PI / 4.0));
        assert!((iv.length() - 2f64.sqrt()).abs() < 1e-15);
        let iv = project_cell(&unit(), &Direction::new(0.5f64.atan()));
        assert!(iv.lo.abs() < 1e-15);
        assert!((iv.hi - 3.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn square_projection_length_formula() {
        for k in 0..50 {
            let dir = Direction::new(k as f64 * 0.0637);
            let s = Cell::Square(Square {
                corner: [0.3, 0.1],
                side: 0.25,
            });
            let iv = project_cell(&s, &dir);
            let want = 0.25 * (dir.cos().abs() + dir.sin().abs());
            assert!((iv.length() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn lattice_projector_matches_cartesian() {
        for model in [ModelId::four_corner(), ModelId::sierpinski(), ModelId::random(4)] {
            let tree = CellTree::new(model, 3);
            for k in 0..7 {
                let dir = Direction::new(0.1 + 0.45 * k as f64);
                let proj = Projector::new(&tree, &dir);
                for node in tree.leaves() {
                    let (lo, hi) = proj.node(&node);
                    let iv = project_cell(&tree.cell(&node), &dir);
                    assert!((lo - iv.lo).abs() < 1e-14 && (hi - iv.hi).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn half_angle_profile_is_a_single_tile() {
        let l = 3.0 / 5f64.sqrt();
        for n in 0..=6 {
            let p = profile(ModelId::four_corner(), n, &half_angle()).unwrap();
            assert_eq!(p.multiplicity.max_value(), 1, "n={n}");
            assert!((p.support_length - l).abs() < 1e-14);
            let via_atan = profile(ModelId::four_corner(), n, &Direction::new(0.5f64.atan())).unwrap();
            assert!((via_atan.support_length - l).abs() < 1e-13);
        }
    }

    #[test]
    fn axis_profile_counts_columns() {
        for n in 0..=6u32 {
            let p = profile(ModelId::four_corner(), n, &Direction::new(0.0)).unwrap();
            assert_eq!(p.support_length, 2f64.powi(-(n as i32)));
            assert_eq!(p.multiplicity.max_value(), 1 << n);
            assert_eq!(p.second_moment, 2f64.powi(n as i32));
        }
    }

    #[test]
    fn sierpinski_base_projection_is_unit() {
        for n in 0..=8 {
            let p = profile(ModelId::sierpinski(), n, &Direction::new(0.0)).unwrap();
            assert_eq!(p.support_length, 1.0);
            assert_eq!(support_length(ModelId::sierpinski(), n, &Direction::new(0.0)).unwrap(), 1.0);
        }
    }

    #[test]
    fn recursive_support_matches_brute_force() {
        for model in [ModelId::four_corner(), ModelId::sierpinski()] {
            for n in 0..=5 {
                for k in 0..40 {
                    let dir = Direction::new(0.013 + k as f64 * PI / 40.0);
                    let fast = support_length(model, n, &dir).unwrap();
                    let cells: Vec<Interval> = match model.kind {
                        crate::models::ModelKind::Sierpinski => enumerate_triangles(n)
                            .map(|t| project_cell(&Cell::Triangle(t), &dir))
                            .collect(),
                        _ => enumerate_squares(model, n)
                            .unwrap()
                            .map(|s| project_cell(&Cell::Square(s), &dir))
                            .collect(),
                    };
                    let brute = union_length(&cells);
                    assert!((fast - brute).abs() < 1e-13, "{model} n={n} k={k}: {fast} vs {brute}");
                }
            }
        }
    }

    #[test]
    fn random_support_matches_cell_union() {
        for seed in [1, 2, 3] {
            let model = ModelId::random(seed);
            for n in 0..=5 {
                let corners = CellCorners::new(model, n).unwrap();
                let tree = CellTree::new(model, n);
                for k in 0..20 {
                    let dir = Direction::new(0.07 + k as f64 * PI / 20.0);
                    let cells: Vec<Interval> = tree
                        .leaves()
                        .map(|node| project_cell(&tree.cell(&node), &dir))
                        .collect();
                    let brute = union_length(&cells);
                    let fast = corners.support_length(&dir);
                    assert!((fast - brute).abs() < 1e-13);
                    let swept = moments(model, n, &dir).unwrap().support_length;
                    assert!((swept - brute).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn first_moment_identity_and_cauchy_schwarz() {
        for model in [ModelId::four_corner(), ModelId::random(12)] {
            for n in 0..=5 {
                for k in 0..25 {
                    let dir = Direction::new(k as f64 * 0.1307);
                    let p = profile(model, n, &dir).unwrap();
                    let want = dir.cos().abs() + dir.sin().abs();
                    assert!((p.first_moment - want).abs() < 1e-12);
                    assert!(p.first_moment.powi(2) <= p.support_length * p.second_moment * (1.0 + 1e-12));
                    let m = moments(model, n, &dir).unwrap();
                    assert!((m.second_moment - p.second_moment).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn four_corner_symmetries_and_monotonicity() {
        for k in 0..30 {
            let phi = 0.021 + k as f64 * 0.0517;
            for n in 0..=5 {
                let s = support_length(ModelId::four_corner(), n, &Direction::new(phi)).unwrap();
                let mirrored = support_length(ModelId::four_corner(), n, &Direction::new(-phi)).unwrap();
                let turned =
                    support_length(ModelId::four_corner(), n, &Direction::new(phi + PI / 2.0)).unwrap();
                assert!((s - mirrored).abs() < 1e-13);
                assert!((s - turned).abs() < 1e-13);
                let next = support_length(ModelId::four_corner(), n + 1, &Direction::new(phi)).unwrap();
                assert!(next <= s + 1e-14);
            }
        }
    }

    #[test]
    fn sierpinski_reflection_symmetry() {
        // the unit triangle is symmetric about x = 1/2, i.e. φ ↦ π - φ
        for k in 0..20 {
            let phi = 0.05 + k as f64 * 0.14;
            let a = support_length(ModelId::sierpinski(), 4, &Direction::new(phi)).unwrap();
            let b = support_length(ModelId::sierpinski(), 4, &Direction::new(PI - phi)).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let tight = ExactBudget {
            square_level: 3,
            triangle_level: 4,
        };
        assert!(matches!(
            profile_with_budget(ModelId::four_corner(), 4, &Direction::new(0.3), &tight),
            Err(Error::BudgetExceeded { requested: 4, cap: 3, .. })
        ));
        assert!(profile_with_budget(ModelId::sierpinski(), 4, &Direction::new(0.3), &tight).is_ok());
        assert!(profile(ModelId::four_corner(), 13, &Direction::new(0.3)).is_err());
    }

    #[test]
    fn second_moment_theta_level_zero() {
        let spec = QuadratureSpec::new(4, 8, 1e-12);
        let e = second_moment_theta(ModelId::four_corner(), 0, &spec, (0.0, PI)).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
    }
}
