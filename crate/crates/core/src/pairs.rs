//! Pair bookkeeping in the 0X/0Y frame of the four-corner set.
//!
//! The 0X axis has direction `u = (2, 1)/√5`; every level-`n` square projects
//! onto it as a 4-adic interval of length `L·4^-n`, `L = 3/√5`, and these
//! intervals tile `[0, L]`. The 0Y axis has direction `u⊥ = (-1, 2)/√5`.
//! For two squares with corner difference `(ΔX, ΔY)` in units of `4^-n`, the
//! coordinate differences are `Δs = (2ΔX + ΔY)·4^-n/√5` and
//! `Δy = (2ΔY - ΔX)·4^-n/√5`; the integers `2ΔX + ΔY` and `2ΔY - ΔX` drive all
//! classification so that floor-log boundaries are decided exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::favard::axis_angle;
use crate::geometry::{ordered_sum, GaussLegendre, NeumaierSum, QuadratureSpec};
use crate::models::{axis_differences, ModelId, SquareAddress};
use crate::projection::{Direction, Projector};
use crate::rng::{unit_f64, SplitMix64};

/// Largest level accepted by [`count_buckets`].
pub const BUCKET_LEVEL_CAP: u32 = 8;
/// Largest level accepted by [`total_overlap`].
pub const OVERLAP_LEVEL_CAP: u32 = 7;
/// Fewest Gauss–Legendre nodes used on a smooth piece of an overlap
/// integrand; enough to integrate `a·cos + b·sin` over `[0, π/2]` to rounding.
pub const OVERLAP_MIN_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFrame {
    pub phi_star: Direction,
    pub l: f64,
    pub u: [f64; 2],
    pub u_perp: [f64; 2],
}

impl Default for AxisFrame {
    fn default() -> Self {
        let r = 5f64.sqrt();
        Self {
            phi_star: Direction::from_vector(2.0, 1.0),
            l: 3.0 / r,
            u: [2.0 / r, 1.0 / r],
            u_perp: [-1.0 / r, 2.0 / r],
        }
    }
}

impl AxisFrame {
    /// `p_u(x, y) = (2x + y)/√5`.
    pub fn s(&self, p: [f64; 2]) -> f64 {
        (2.0 * p[0] + p[1]) / 5f64.sqrt()
    }

    /// `p_{u⊥}(x, y) = (2y - x)/√5`.
    pub fn y(&self, p: [f64; 2]) -> f64 {
        (2.0 * p[1] - p[0]) / 5f64.sqrt()
    }
}

/// A square seen from the 0X/0Y frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPoint {
    /// 0X coordinate of the center.
    pub s: f64,
    /// 0Y coordinate of the center.
    pub y: f64,
    /// `σ_j = (2a_j + b_j)/3`.
    pub sigma: Vec<u8>,
    /// Corner of the square in units of `4^-n`.
    pub corner_units: (i64, i64),
}

impl AxisPoint {
    pub fn level(&self) -> u32 {
        self.sigma.len() as u32
    }
}

pub fn axis_coordinates(square: &SquareAddress) -> AxisPoint {
    let frame = AxisFrame::default();
    let center = square.square().center();
    let sigma = square
        .a_digits
        .iter()
        .zip(&square.b_digits)
        .map(|(&a, &b)| (2 * a + b) / 3)
        .collect();
    AxisPoint {
        s: frame.s(center),
        y: frame.y(center),
        sigma,
        corner_units: square.corner_units(),
    }
}

fn common_prefix(p1: &AxisPoint, p2: &AxisPoint) -> Result<u32> {
    if p1.level() != p2.level() {
        return Err(Error::InvalidInput(format!(
            "points from levels {} and {}",
            p1.level(),
            p2.level()
        )));
    }
    Ok(p1
        .sigma
        .iter()
        .zip(&p2.sigma)
        .take_while(|(a, b)| a == b)
        .count() as u32)
}

/// Length `L·4^-m` of the smallest 4-adic interval `I_σ` holding both points,
/// `m` the common prefix length of the σ words.
pub fn four_adic_distance(p1: &AxisPoint, p2: &AxisPoint) -> Result<f64> {
    let m = common_prefix(p1, p2)?;
    Ok(AxisFrame::default().l * 4f64.powi(-(m as i32)))
}

/// `(j, k)` bucket of a pair of distinct squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairBucket {
    pub j: u32,
    pub k: i32,
}

/// Bucket of a corner difference `(dx, dy)` in units of `4^-n`, or `None`
/// for the zero difference.
///
/// `j = max(0, ⌊log₄(|Δy|/|Δs|)⌋)` and `k = ⌊log₄(1/|Δs|)⌋ - j`, decided
/// in integers: with `S = 2dx + dy`, `Y = 2dy - dx`, `|Δy|/|Δs| = |Y|/|S|`
/// and `1/|Δs| = √5·4^n/|S|`.
pub fn classify_units(dx: i64, dy: i64, n: u32) -> Option<PairBucket> {
    let s = (2 * dx + dy).unsigned_abs() as u128;
    let y = (2 * dy - dx).unsigned_abs() as u128;
    if s == 0 {
        // only the zero difference has S = 0 in K_n
        debug_assert_eq!(y, 0);
        return None;
    }
    let mut j = 0u32;
    while s << (2 * (j + 1)) <= y {
        j += 1;
    }
    // largest m >= -1 with 4^m·|S| <= √5·4^n, i.e. 16^(m+1)·S² <= 80·16^n
    let bound = 80u128 << (4 * n);
    let s2 = s * s;
    let mut m: i32 = -1;
    while s2 << (4 * (m + 2)) as u32 <= bound {
        m += 1;
    }
    Some(PairBucket {
        j,
        k: m - j as i32,
    })
}

pub fn classify_pair(p1: &AxisPoint, p2: &AxisPoint) -> Result<PairBucket> {
    common_prefix(p1, p2)?;
    let dx = p2.corner_units.0 - p1.corner_units.0;
    let dy = p2.corner_units.1 - p1.corner_units.1;
    classify_units(dx, dy, p1.level()).ok_or(Error::DegeneratePair)
}

/// Bound `4^(2n - k - 2j)` on the bucket count.
pub fn bucket_bound(n: u32, bucket: PairBucket) -> f64 {
    4f64.powi(2 * n as i32 - bucket.k - 2 * bucket.j as i32)
}

/// Whether a bucket satisfies `0 <= k + j <= n + 1`.
pub fn is_nominal(n: u32, bucket: PairBucket) -> bool {
    let kj = bucket.k + bucket.j as i32;
    (0..=n as i32 + 1).contains(&kj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub j: u32,
    pub k: i32,
    pub count: u64,
    pub bound: f64,
    pub ratio: f64,
}

/// Counts `A_{j,k}` of distinct ordered pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTable {
    pub n: u32,
    /// Occupied buckets in `(j, k)` order.
    pub rows: Vec<BucketRow>,
}

impl BucketTable {
    pub fn count(&self, j: u32, k: i32) -> u64 {
        self.rows
            .iter()
            .find(|r| r.j == j && r.k == k)
            .map_or(0, |r| r.count)
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Buckets outside `0 <= k + j <= n + 1`.
    pub fn off_nominal(&self) -> Vec<PairBucket> {
        self.rows
            .iter()
            .map(|r| PairBucket { j: r.j, k: r.k })
            .filter(|b| !is_nominal(self.n, *b))
            .collect()
    }
}

fn table_from_counts(n: u32, counts: BTreeMap<PairBucket, u64>) -> BucketTable {
    let rows = counts
        .into_iter()
        .map(|(b, count)| {
            let bound = bucket_bound(n, b);
            BucketRow {
                j: b.j,
                k: b.k,
                count,
                bound,
                ratio: count as f64 / bound,
            }
        })
        .collect();
    BucketTable { n, rows }
}

/// Exact bucket counts, summed over difference classes weighted by their
/// ordered pair counts.
pub fn count_buckets(n: u32) -> Result<BucketTable> {
    if n > BUCKET_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "bucket counting",
            requested: n,
            cap: BUCKET_LEVEL_CAP,
        });
    }
    let axis = axis_differences(n);
    let counts = axis
        .par_iter()
        .map(|dx| {
            let mut local = BTreeMap::new();
            for dy in &axis {
                if let Some(b) = classify_units(dx.units, dy.units, n) {
                    *local.entry(b).or_insert(0u64) += dx.count * dy.count;
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(table_from_counts(n, counts))
}

/// Bucket counts by enumerating all `16^n` ordered pairs.
pub fn count_buckets_brute_force(n: u32) -> BucketTable {
    let points: Vec<AxisPoint> = (0..1u64 << (2 * n))
        .map(|i| axis_coordinates(&SquareAddress::from_index(n, i)))
        .collect();
    let mut counts = BTreeMap::new();
    for p in &points {
        for q in &points {
            if let Ok(b) = classify_pair(p, q) {
                *counts.entry(b).or_insert(0u64) += 1;
            }
        }
    }
    table_from_counts(n, counts)
}

/// `∫_0^π |Proj_φ Q ∩ Proj_φ Q'| dφ` for two axis-parallel squares of side
/// `side` whose corners differ by `delta`.
///
/// The integrand `max(0, side·(|cos φ| + sin φ) - |Δ·(cos φ, sin φ)|)` is a
/// trigonometric polynomial of degree one between its kinks, which are known
/// in closed form; each smooth piece gets one Gauss–Legendre panel.
pub fn overlap_integral(delta: [f64; 2], side: f64, order: usize) -> f64 {
    let [dx, dy] = delta;
    let mut cuts = vec![0.0, PI / 2.0, PI];
    let mut root = |a: f64, b: f64| {
        // a·cos φ + b·sin φ = 0
        if a != 0.0 || b != 0.0 {
            let phi = (-a).atan2(b).rem_euclid(PI);
            if phi > 0.0 && phi < PI {
                cuts.push(phi);
            }
        }
    };
    root(dx, dy);
    for sigma in [-1.0, 1.0] {
        for tau in [-1.0, 1.0] {
            root(side * sigma - tau * dx, side - tau * dy);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussLegendre::cached(order);
    let g = |phi: f64| {
        let (sn, c) = phi.sin_cos();
        (side * (c.abs() + sn) - (dx * c + dy * sn).abs()).max(0.0)
    };
    let mut sum = NeumaierSum::new();
    for w in cuts.windows(2) {
        sum.add(rule.integrate(w[0], w[1], g));
    }
    sum.value()
}

/// Overlap integral `p_P` of two level-`n` squares whose corners differ by
/// `delta`.
pub fn pair_overlap(delta: [f64; 2], n: u32, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    Ok(overlap_integral(
        delta,
        4f64.powi(-(n as i32)),
        spec.nodes_per_panel.clamp(OVERLAP_MIN_ORDER, 64),
    ))
}

pub fn pair_overlap_squares(
    q1: &SquareAddress,
    q2: &SquareAddress,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if q1.level() != q2.level() {
        return Err(Error::InvalidInput("squares from different levels".into()));
    }
    let n = q1.level();
    let scale = 4f64.powi(-(n as i32));
    let (x1, y1) = q1.corner_units();
    let (x2, y2) = q2.corner_units();
    pair_overlap(
        [(x2 - x1) as f64 * scale, (y2 - y1) as f64 * scale],
        n,
        spec,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub j: u32,
    pub k: i32,
    pub partial_sum: f64,
}

/// `Σ_{Q, Q'} p_P` with its bucket decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapTotals {
    pub n: u32,
    pub total: f64,
    /// Contribution of the `4^n` pairs `(Q, Q)`.
    pub diagonal: f64,
    pub rows: Vec<OverlapRow>,
    /// `max p_P · |Δy| · 16^n` over distinct pairs: the constant in
    /// `p_P ≤ C·4^-2n / |y1 - y2|`.
    pub pp1_constant: f64,
}

impl OverlapTotals {
    /// `Σ_k` of the bucket sums for each `j`, with the diagonal pairs counted
    /// in `j = 0`.
    pub fn per_j(&self) -> Vec<(u32, f64)> {
        let mut sums: BTreeMap<u32, NeumaierSum> = BTreeMap::new();
        sums.entry(0).or_default().add(self.diagonal);
        for r in &self.rows {
            sums.entry(r.j).or_default().add(r.partial_sum);
        }
        sums.into_iter().map(|(j, s)| (j, s.value())).collect()
    }
}

const CLASS_CHUNK: usize = 4096;

/// Sum of `p_P` over all ordered pairs of level-`n` squares.
pub fn total_overlap(n: u32, spec: &QuadratureSpec) -> Result<OverlapTotals> {
    if n > OVERLAP_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "overlap summation",
            requested: n,
            cap: OVERLAP_LEVEL_CAP,
        });
    }
    spec.validate()?;
    let order = spec.nodes_per_panel.clamp(OVERLAP_MIN_ORDER, 64);
    let side = 4f64.powi(-(n as i32));
    let axis = axis_differences(n);
    let m = axis.len();
    let classes = m * m;
    let sqrt5 = 5f64.sqrt();

    struct Partial {
        buckets: BTreeMap<PairBucket, NeumaierSum>,
        diagonal: f64,
        pp1: f64,
    }

    let partials: Vec<Partial> = (0..classes.div_ceil(CLASS_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut part = Partial {
                buckets: BTreeMap::new(),
                diagonal: 0.0,
                pp1: 0.0,
            };
            for i in c * CLASS_CHUNK..((c + 1) * CLASS_CHUNK).min(classes) {
                let (ax, ay) = (&axis[i / m], &axis[i % m]);
                let delta = [ax.units as f64 * side, ay.units as f64 * side];
                let p = overlap_integral(delta, side, order);
                let weight = (ax.count * ay.count) as f64;
                match classify_units(ax.units, ay.units, n) {
                    None => part.diagonal = weight * p,
                    Some(b) => {
                        part.buckets.entry(b).or_default().add(weight * p);
                        let dy = (2 * ay.units - ax.units).abs() as f64 * side / sqrt5;
                        part.pp1 = part.pp1.max(p * dy / (side * side));
                    }
                }
            }
            part
        })
        .collect();

    let mut buckets: BTreeMap<PairBucket, NeumaierSum> = BTreeMap::new();
    let mut diagonal = 0.0;
    let mut pp1: f64 = 0.0;
    for part in partials {
        for (b, s) in part.buckets {
            buckets.entry(b).or_default().add(s.value());
        }
        diagonal += part.diagonal;
        pp1 = pp1.max(part.pp1);
    }
    let rows: Vec<OverlapRow> = buckets
        .into_iter()
        .map(|(b, s)| OverlapRow {
            j: b.j,
            k: b.k,
            partial_sum: s.value(),
        })
        .collect();
    let mut all: Vec<f64> = rows.iter().map(|r| r.partial_sum).collect();
    all.push(diagonal);
    Ok(OverlapTotals {
        n,
        total: ordered_sum(&all),
        diagonal,
        rows,
        pp1_constant: pp1,
    })
}

/// A pair whose projections overlap inside `J_j` but which is classified
/// outside `[j - slack, j + slack]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Angle from the 0X axis.
    pub theta: f64,
    pub square1: SquareAddress,
    pub square2: SquareAddress,
    pub j_expected: u32,
    pub j_actual: u32,
    pub k_actual: i32,
    pub delta_s: f64,
    pub delta_y: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationReport {
    pub n: u32,
    pub j: u32,
    pub c1: f64,
    pub c2: f64,
    pub slack: u32,
    pub seed: u64,
    /// Sampled angles from the 0X axis.
    pub thetas: Vec<f64>,
    /// Overlapping distinct unordered pairs examined, over all samples.
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

/// Sample `sample_count` angles uniformly in `J_j` (angles from 0X clamped to
/// `[0, π/2]`), find every pair of level-`n` squares whose projections
/// overlap (closed intervals) and check its `j` label.
pub fn crucial_observation_check(
    n: u32,
    j: u32,
    c1: f64,
    c2: f64,
    sample_count: usize,
    seed: u64,
    slack: u32,
) -> Result<ObservationReport> {
    if n > BUCKET_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "observation check",
            requested: n,
            cap: BUCKET_LEVEL_CAP,
        });
    }
    let scale = 4f64.powi(-(j as i32));
    let lo = (c1 * scale).clamp(0.0, PI / 2.0);
    let hi = (c2 * scale).clamp(0.0, PI / 2.0);
    let mut report = ObservationReport {
        n,
        j,
        c1,
        c2,
        slack,
        seed,
        thetas: Vec::new(),
        pairs_checked: 0,
        violations: Vec::new(),
    };
    if !(lo < hi) {
        return Ok(report);
    }
    report.thetas = (0..sample_count as u64)
        .map(|i| lo + (hi - lo) * unit_f64(SplitMix64::at(seed, i + 1)))
        .collect();
    let count = 1u64 << (2 * n);
    let corners: Vec<(i64, i64)> = (0..count)
        .map(|i| SquareAddress::from_index(n, i).corner_units())
        .collect();
    let model = ModelId::four_corner();
    let alpha = axis_angle();
    let side = 4f64.powi(-(n as i32));
    let sqrt5 = 5f64.sqrt();

    let per_theta: Vec<(u64, Vec<Violation>)> = report
        .thetas
        .par_iter()
        .map(|&theta| {
            let dir = Direction::new(alpha + theta);
            let proj = Projector::with_denominator(model, &dir, (1u64 << (2 * n)) as f64);
            let mut intervals: Vec<(f64, f64, usize)> = corners
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| {
                    let (a, b) = proj.cell(x, y, 1);
                    (a, b, i)
                })
                .collect();
            intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            let mut active: Vec<(f64, f64, usize)> = Vec::new();
            let mut checked = 0u64;
            let mut found = Vec::new();
            for &cur in &intervals {
                active.retain(|a| a.1 >= cur.0);
                for &other in &active {
                    checked += 1;
                    let (p, q) = (corners[other.2], corners[cur.2]);
                    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
                    let bucket = classify_units(dx, dy, n).expect("distinct squares");
                    if bucket.j + slack < j || bucket.j > j + slack {
                        found.push(Violation {
                            theta,
                            square1: SquareAddress::from_index(n, other.2 as u64),
                            square2: SquareAddress::from_index(n, cur.2 as u64),
                            j_expected: j,
                            j_actual: bucket.j,
                            k_actual: bucket.k,
                            delta_s: (2 * dx + dy) as f64 * side / sqrt5,
                            delta_y: (2 * dy - dx) as f64 * side / sqrt5,
                            overlap: other.1.min(cur.1) - cur.0,
                        });
                    }
                }
                active.push(cur);
            }
            (checked, found)
        })
        .collect();
    for (checked, found) in per_theta {
        report.pairs_checked += checked;
        report.violations.extend(found);
    }
    Ok(report)
}

/// Sharp constants `max |Δs|/d` and `max |Δy|/d` over all distinct pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisConstants {
    pub n: u32,
    pub max_ds_over_d: f64,
    pub max_dy_over_d: f64,
    /// Whether every distinct pair has `Δs ≠ 0` and `Δy ≠ 0`.
    pub injective: bool,
}

/// Exhaustive over the `16^n` ordered pairs.
pub fn axis_constants(n: u32) -> Result<AxisConstants> {
    const CAP: u32 = 7;
    if n > CAP {
        return Err(Error::BudgetExceeded {
            what: "axis constants",
            requested: n,
            cap: CAP,
        });
    }
    let points: Vec<AxisPoint> = (0..1u64 << (2 * n))
        .map(|i| axis_coordinates(&SquareAddress::from_index(n, i)))
        .collect();
    let words: Vec<u64> = (0..1u64 << (2 * n)).collect();
    let l = AxisFrame::default().l;
    let (ds, dy, injective) = (0..points.len())
        .into_par_iter()
        .map(|a| {
            let mut out = (0.0f64, 0.0f64, true);
            for b in 0..points.len() {
                if a == b {
                    continue;
                }
                // σ words are the base-4 digits of the lexicographic index
                let diff = words[a] ^ words[b];
                let prefix = (diff.leading_zeros() - (64 - 2 * n)) / 2;
                let d = l * 4f64.powi(-(prefix as i32));
                let (p, q) = (&points[a], &points[b]);
                let (ds, dy) = ((p.s - q.s).abs(), (p.y - q.y).abs());
                out.0 = out.0.max(ds / d);
                out.1 = out.1.max(dy / d);
                let (dx_u, dy_u) = (
                    q.corner_units.0 - p.corner_units.0,
                    q.corner_units.1 - p.corner_units.1,
                );
                out.2 &= 2 * dx_u + dy_u != 0 && 2 * dy_u - dx_u != 0;
            }
            out
        })
        .reduce(
            || (0.0, 0.0, true),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 && b.2),
        );
    Ok(AxisConstants {
        n,
        max_ds_over_d: ds,
        max_dy_over_d: dy,
        injective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(a: &[u8], b: &[u8]) -> SquareAddress {
        SquareAddress::new(a.to_vec(), b.to_vec()).unwrap()
    }

    /// Floating-point floor-log classifier with snapping at exact powers.
    fn classify_float(p: &AxisPoint, q: &AxisPoint) -> Option<PairBucket> {
        let ds = (p.s - q.s).abs();
        let dy = (p.y - q.y).abs();
        if ds < 1e-300 {
            return None;
        }
        let snap = |x: f64| {
            let r = x.round();
            if (x - r).abs() < 1e-9 {
                r
            } else {
                x.floor()
            }
        };
        let j = snap((dy / ds).log(4.0)).max(0.0) as u32;
        let m = snap((1.0 / ds).log(4.0)) as i32;
        Some(PairBucket { j, k: m - j as i32 })
    }

    #[test]
    fn frame_constants() {
        let f = AxisFrame::default();
        assert!((f.l - 3.0 / 5f64.sqrt()).abs() < 1e-14);
        let expected = 2f64.sqrt() * (PI / 4.0 - axis_angle()).cos();
        assert!((f.l - expected).abs() < 1e-14);
        assert_eq!(f.phi_star.cos(), 2.0 * f.phi_star.sin());
    }

    #[test]
    fn level_one_axis_points() {
        let l = AxisFrame::default().l;
        let p = axis_coordinates(&addr(&[0], &[0]));
        assert!((p.s - l / 8.0).abs() < 1e-15);
        assert_eq!(p.sigma, vec![0]);
        let p = axis_coordinates(&addr(&[3], &[0]));
        assert!((p.s - 5.0 * l / 8.0).abs() < 1e-15);
        assert_eq!(p.sigma, vec![2]);
        let s: Vec<f64> = (0..4)
            .map(|i| axis_coordinates(&SquareAddress::from_index(1, i)).s)
            .collect();
        for (i, v) in s.iter().enumerate() {
            assert!((v - l * (2 * i + 1) as f64 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn distances() {
        let l = AxisFrame::default().l;
        let p = axis_coordinates(&SquareAddress::from_index(3, 5));
        assert!((four_adic_distance(&p, &p).unwrap() - l / 64.0).abs() < 1e-15);
        let q = axis_coordinates(&SquareAddress::from_index(3, 60));
        assert_eq!(four_adic_distance(&p, &q).unwrap(), l);
        let r = axis_coordinates(&SquareAddress::from_index(2, 0));
        assert!(four_adic_distance(&p, &r).is_err());
    }

    #[test]
    fn classifiers_agree_exhaustively() {
        for n in 1..=3 {
            let pts: Vec<AxisPoint> = (0..1u64 << (2 * n))
                .map(|i| axis_coordinates(&SquareAddress::from_index(n, i)))
                .collect();
            for p in &pts {
                for q in &pts {
                    assert_eq!(classify_pair(p, q).ok(), classify_float(p, q));
                }
            }
        }
    }

    #[test]
    fn degenerate_and_clamped_pairs() {
        let p = axis_coordinates(&SquareAddress::from_index(2, 3));
        assert_eq!(classify_pair(&p, &p), Err(Error::DegeneratePair));
        // horizontal neighbors: |Δy| = |Δs|/2
        let a = axis_coordinates(&addr(&[0], &[0]));
        let b = axis_coordinates(&addr(&[3], &[0]));
        assert!((a.y - b.y).abs() < (a.s - b.s).abs());
        assert_eq!(classify_pair(&a, &b).unwrap().j, 0);
    }

    #[test]
    fn adjacent_siblings_are_fine_scale() {
        let n = 3;
        let a = axis_coordinates(&SquareAddress::from_index(n, 8));
        let b = axis_coordinates(&SquareAddress::from_index(n, 9));
        let bucket = classify_pair(&a, &b).unwrap();
        let kj = bucket.k + bucket.j as i32;
        assert!((n as i32 - 1..=n as i32 + 1).contains(&kj), "{bucket:?}");
    }

    #[test]
    fn bucket_counts_match_brute_force() {
        for n in 0..=3 {
            let fast = count_buckets(n).unwrap();
            let slow = count_buckets_brute_force(n);
            assert_eq!(fast, slow);
            let pairs = (1u64 << (2 * n)) * ((1u64 << (2 * n)) - 1);
            assert_eq!(fast.total(), pairs);
        }
        assert_eq!(count_buckets(1).unwrap().total(), 12);
        assert!(matches!(
            count_buckets(9),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn overlap_examples() {
        let spec = QuadratureSpec::default();
        for n in 0..4 {
            let v = pair_overlap([0.0, 0.0], n, &spec).unwrap();
            let exact = 4f64.powi(1 - n as i32);
            assert!((v - exact).abs() <= 1e-15 * exact);
        }
        // corner-touching unit squares, against a dense midpoint grid
        let m = 100_000;
        let h = PI / m as f64;
        let grid: f64 = (0..m)
            .map(|i| {
                let (s, c) = ((i as f64 + 0.5) * h).sin_cos();
                h * ((c.abs() + s) - (c + s).abs()).max(0.0)
            })
            .sum();
        let v = pair_overlap([1.0, 1.0], 0, &spec).unwrap();
        assert!(v > 0.0 && (v - grid).abs() < 1e-6, "{v} vs {grid}");
    }

    #[test]
    fn overlap_is_symmetric() {
        let spec = QuadratureSpec::default();
        for i in 0..16 {
            for j in 0..16 {
                let a = SquareAddress::from_index(2, i);
                let b = SquareAddress::from_index(2, j);
                let p = pair_overlap_squares(&a, &b, &spec).unwrap();
                let q = pair_overlap_squares(&b, &a, &spec).unwrap();
                assert!((p - q).abs() <= 1e-14 * p.max(1e-300));
            }
        }
    }

    #[test]
    fn total_overlap_small_levels() {
        let spec = QuadratureSpec::default();
        let t0 = total_overlap(0, &spec).unwrap();
        assert!((t0.total - 4.0).abs() < 1e-14);
        assert!(t0.rows.is_empty());
        let t2 = total_overlap(2, &spec).unwrap();
        let brute: f64 = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .map(|(i, j)| {
                pair_overlap_squares(
                    &SquareAddress::from_index(2, i),
                    &SquareAddress::from_index(2, j),
                    &spec,
                )
                .unwrap()
            })
            .sum();
        assert!((t2.total - brute).abs() < 1e-12 * brute);
        let per_j: f64 = t2.per_j().iter().map(|(_, v)| v).sum();
        assert!((per_j - t2.total).abs() < 1e-12 * t2.total);
    }

    #[test]
    fn observation_check_small() {
        let r = crucial_observation_check(3, 0, 0.25, 4.0, 8, 3, 1).unwrap();
        assert!(r.pairs_checked > 0);
        assert!(r.violations.is_empty(), "{:?}", r.violations.first());
        let empty = crucial_observation_check(3, 0, 3.0, 4.0, 8, 3, 1).unwrap();
        assert!(empty.thetas.is_empty() && empty.pairs_checked == 0);
    }
}
