//! Interval arithmetic, multiplicity step functions and composite
//! Gauss–Legendre quadrature over angles.
//!
//! Every length and moment accumulation goes through [`NeumaierSum`]; parallel
//! reductions split work into fixed-size chunks whose partial sums are combined
//! in index order, so results do not depend on the number of worker threads.

use std::cmp::Ordering;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chunk length used by the ordered parallel reductions.
pub const REDUCTION_CHUNK: usize = 4096;

/// Compensated (Kahan–Babuška–Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice in index order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Sum `term(i)` for `i in 0..len` in parallel with a thread-count independent
/// reduction tree: fixed chunks, compensated inside each chunk, partials
/// combined sequentially.
pub fn par_ordered_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * REDUCTION_CHUNK;
            let end = (start + REDUCTION_CHUNK).min(len);
            (start..end).map(&term).collect::<NeumaierSum>().value()
        })
        .collect();
    ordered_sum(&partials)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let c = FACTOR * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, al * bl - (((p - ah * bh) - al * bh) - ah * bl))
}

/// `a1*b1 + a2*b2` evaluated in twice the working precision and rounded once.
///
/// Used for every projection of a lattice vertex: two vertices whose exact
/// projections coincide get bit-identical coordinates, which keeps abutting
/// projections abutting.
#[inline]
pub fn dot2(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let (p1, e1) = two_prod(a1, b1);
    let (p2, e2) = two_prod(a2, b2);
    let (s, e3) = two_sum(p1, p2);
    s + (e1 + e2 + e3)
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics if `lo > hi` or either end is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")))
        }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Length of the intersection with `other` (0 when disjoint).
    #[inline]
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// Lebesgue measure of a finite union of closed intervals.
///
/// Sort by left end and sweep; touching intervals merge.
pub fn union_length(intervals: &[Interval]) -> f64 {
    if intervals.is_empty() {
        return 0.0;
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_unstable_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut total = NeumaierSum::new();
    let mut cur = sorted[0];
    for iv in &sorted[1..] {
        if iv.lo <= cur.hi {
            cur.hi = cur.hi.max(iv.hi);
        } else {
            total.add(cur.length());
            cur = *iv;
        }
    }
    total.add(cur.length());
    total.value()
}

/// Piecewise-constant nonnegative integer function with sorted breakpoints.
///
/// `values[i]` is the value on `(breakpoints[i], breakpoints[i + 1])`; the
/// function vanishes outside `[first, last]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<u32>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<u32>) -> Result<Self> {
        if breakpoints.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let expected = breakpoints.len().saturating_sub(1);
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {expected} values, got {}",
                breakpoints.len(),
                values.len()
            )));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Value at a non-breakpoint `x`.
    pub fn value_at(&self, x: f64) -> u32 {
        match self.breakpoints.partition_point(|&b| b <= x) {
            0 => 0,
            i if i >= self.breakpoints.len() => 0,
            i => self.values[i - 1],
        }
    }

    /// Iterate `(left, right, value)` over the gaps.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, u32)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// Length of `{x : f(x) > 0}`.
    pub fn support_length(&self) -> f64 {
        self.pieces()
            .filter(|p| p.2 > 0)
            .map(|(a, b, _)| b - a)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// `∫ f(x)^p dx`, summed exactly over the gaps.
pub fn step_moment(f: &StepFunction, p: u32) -> f64 {
    f.pieces()
        .map(|(a, b, v)| (v as f64).powi(p as i32) * (b - a))
        .collect::<NeumaierSum>()
        .value()
}

/// Walk the gaps of the multiplicity function of `[los[i], his[i]]`, given
/// both endpoint lists sorted ascending. `visit(left, right, count)` is called
/// for every gap between consecutive distinct endpoints, including gaps with
/// count zero.
pub(crate) fn sweep_sorted<F: FnMut(f64, f64, u32)>(los: &[f64], his: &[f64], mut visit: F) {
    debug_assert_eq!(los.len(), his.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut count: i64 = 0;
    let mut prev: Option<f64> = None;
    while j < his.len() {
        let x = if i < los.len() && los[i] <= his[j] {
            los[i]
        } else {
            his[j]
        };
        if let Some(left) = prev {
            visit(left, x, count as u32);
        }
        while i < los.len() && los[i] == x {
            count += 1;
            i += 1;
        }
        while j < his.len() && his[j] == x {
            count -= 1;
            j += 1;
        }
        debug_assert!(count >= 0);
        prev = Some(x);
    }
}

/// Multiplicity function of a finite family of closed intervals.
pub fn build_step(intervals: &[Interval]) -> StepFunction {
    let mut los: Vec<f64> = intervals.iter().map(|iv| iv.lo).collect();
    let mut his: Vec<f64> = intervals.iter().map(|iv| iv.hi).collect();
    step_from_endpoints(&mut los, &mut his)
}

/// Same as [`build_step`] but takes (and sorts in place) the endpoint lists.
pub fn step_from_endpoints(los: &mut [f64], his: &mut [f64]) -> StepFunction {
    sort_floats(los);
    sort_floats(his);
    let mut breakpoints = Vec::with_capacity(2 * los.len());
    let mut values = Vec::with_capacity(2 * los.len());
    sweep_sorted(los, his, |left, right, count| {
        if breakpoints.is_empty() {
            breakpoints.push(left);
        }
        breakpoints.push(right);
        values.push(count);
    });
    if breakpoints.is_empty() && !los.is_empty() {
        // every interval is the same single point
        breakpoints.push(los[0]);
    }
    StepFunction {
        breakpoints,
        values,
    }
}

/// Ascending sort; parallel for large inputs. The result is a pure function of
/// the multiset of values, so thread count cannot change it.
pub(crate) fn sort_floats(v: &mut [f64]) {
    if v.len() > 1 << 16 {
        v.par_sort_unstable_by(f64::total_cmp);
    } else {
        v.sort_unstable_by(f64::total_cmp);
    }
}

/// Composite Gauss–Legendre discretization with panel doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub panel_count: usize,
    pub nodes_per_panel: usize,
    /// Relative change between two successive doublings that counts as converged.
    pub refinement_tolerance: f64,
    /// Maximum number of panel doublings.
    pub max_doublings: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panel_count: 64,
            nodes_per_panel: 8,
            refinement_tolerance: 1e-6,
            max_doublings: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn new(panel_count: usize, nodes_per_panel: usize, refinement_tolerance: f64) -> Self {
        Self {
            panel_count,
            nodes_per_panel,
            refinement_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.panel_count == 0 {
            return Err(Error::InvalidInput("panel_count must be >= 1".into()));
        }
        if self.nodes_per_panel < 2 {
            return Err(Error::InvalidInput("nodes_per_panel must be >= 2".into()));
        }
        if !(self.refinement_tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "refinement_tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a refined quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Absolute change produced by the last panel doubling.
    pub error_estimate: f64,
    /// Panels used by the returned value.
    pub panels: usize,
    /// Total integrand evaluations across all refinement passes.
    pub evaluations: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `order` nodes, computed by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let m = order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule for small orders.
    pub fn cached(order: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| (0..=64).map(|m| GaussLegendre::new(m.max(1))).collect());
        assert!(order <= 64, "cached Gauss–Legendre rules go up to order 64");
        &cache[order]
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut g: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * g(mid + half * x));
        }
        half * acc.value()
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn composite<F>(g: &F, a: f64, b: f64, panels: usize, rule: &GaussLegendre) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let m = rule.order();
    let h = (b - a) / panels as f64;
    let nodes = rule.nodes();
    let weights = rule.weights();
    let samples: Vec<f64> = (0..panels * m)
        .into_par_iter()
        .map(|idx| {
            let (panel, i) = (idx / m, idx % m);
            let left = a + h * panel as f64;
            g(left + 0.5 * h * (nodes[i] + 1.0))
        })
        .collect();
    let mut total = NeumaierSum::new();
    for panel in samples.chunks(m) {
        let s: NeumaierSum = panel.iter().zip(weights).map(|(v, w)| v * w).collect();
        total.add(0.5 * h * s.value());
    }
    total.value()
}

/// `∫_a^b g(θ) dθ` by composite Gauss–Legendre, doubling the panel count until
/// two successive values agree to `refinement_tolerance` (relative).
///
/// Node evaluations run in parallel; the reduction order is fixed.
pub fn integrate_theta<F>(g: F, range: (f64, f64), spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let (a, b) = range;
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
            evaluations: 0,
        });
    }
    let rule = if spec.nodes_per_panel <= 64 {
        std::borrow::Cow::Borrowed(GaussLegendre::cached(spec.nodes_per_panel))
    } else {
        std::borrow::Cow::Owned(GaussLegendre::new(spec.nodes_per_panel))
    };
    let m = rule.order();
    let mut panels = spec.panel_count;
    let mut previous = composite(&g, a, b, panels, &rule);
    let mut evaluations = panels * m;
    let mut error_estimate = f64::INFINITY;
    for _ in 0..spec.max_doublings {
        panels *= 2;
        let value = composite(&g, a, b, panels, &rule);
        evaluations += panels * m;
        error_estimate = (value - previous).abs();
        if error_estimate <= spec.refinement_tolerance * value.abs() {
            return Ok(Estimate {
                value,
                error_estimate,
                panels,
                evaluations,
            });
        }
        previous = value;
    }
    Err(Error::NonConvergence {
        value: previous,
        error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn union_length_examples() {
        assert_eq!(union_length(&[]), 0.0);
        assert_eq!(union_length(&[iv(0.0, 1.0), iv(0.5, 2.0)]), 2.0);
        assert_eq!(union_length(&[iv(0.0, 0.75), iv(0.75, 1.5)]), 1.5);
    }

    #[test]
    fn build_step_examples() {
        let f = build_step(&[iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert_eq!(f.breakpoints(), &[0.0, 1.0]);
        assert_eq!(f.values(), &[2]);

        let f = build_step(&[iv(0.0, 2.0), iv(1.0, 3.0)]);
        assert_eq!(f.breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.values(), &[1, 2, 1]);

        let f = build_step(&[]);
        assert!(f.breakpoints().is_empty());
        assert_eq!(f.value_at(0.3), 0);
    }

    #[test]
    fn build_step_gap_and_point() {
        let f = build_step(&[iv(0.0, 1.0), iv(2.0, 3.0), iv(5.0, 5.0)]);
        assert_eq!(f.value_at(0.5), 1);
        assert_eq!(f.value_at(1.5), 0);
        assert_eq!(f.value_at(2.5), 1);
        assert_eq!(f.value_at(7.0), 0);
        assert_eq!(f.support_length(), 2.0);
    }

    #[test]
    fn moment_examples() {
        let l = 1.7;
        let f = build_step(&[iv(0.0, l)]);
        assert_eq!(step_moment(&f, 2), l);
        let f = build_step(&[iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert_eq!(step_moment(&f, 2), 4.0);
    }

    #[test]
    fn step_function_rejects_bad_shapes() {
        assert!(StepFunction::new(vec![0.0, 0.0], vec![1]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1, 2]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1]).is_ok());
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for m in 1..=40 {
            let rule = GaussLegendre::new(m);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {m}: {s}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn integrate_theta_examples() {
        let spec = QuadratureSpec::new(4, 8, 1e-12);
        let e = integrate_theta(f64::sin, (0.0, PI), &spec).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);

        let e = integrate_theta(|t| t.cos().abs() + t.sin().abs(), (0.0, PI), &spec).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12, "{}", e.value);

        let e = integrate_theta(|_| 3.25, (0.5, 2.5), &spec).unwrap();
        assert!((e.value - 6.5).abs() <= 4.0 * f64::EPSILON * 6.5);
        assert_eq!(e.error_estimate, 0.0);
    }

    #[test]
    fn integrate_theta_reports_nonconvergence() {
        let spec = QuadratureSpec {
            panel_count: 1,
            nodes_per_panel: 2,
            refinement_tolerance: 1e-15,
            max_doublings: 2,
        };
        let step = |t: f64| if t < 0.3137 { 0.0 } else { 1.0 };
        match integrate_theta(step, (0.0, 1.0), &spec) {
            Err(Error::NonConvergence { value, .. }) => assert!((value - 0.7).abs() < 0.2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn polynomial_exactness() {
        // degree 2m - 1 is exact on each panel
        for m in 2..=10 {
            let spec = QuadratureSpec {
                panel_count: 3,
                nodes_per_panel: m,
                refinement_tolerance: 1e-9,
                max_doublings: 1,
            };
            let deg = 2 * m - 1;
            let g = |x: f64| (0..=deg).map(|k| (k as f64 + 1.0) * x.powi(k as i32)).sum::<f64>();
            let exact: f64 = (0..=deg)
                .map(|k| (k as f64 + 1.0) / (k as f64 + 1.0) * 1.5f64.powi(k as i32 + 1))
                .sum::<f64>()
                - (0..=deg)
                    .map(|k| (-0.5f64).powi(k as i32 + 1))
                    .sum::<f64>();
            let e = integrate_theta(g, (-0.5, 1.5), &spec).unwrap();
            assert!((e.value - exact).abs() < 1e-12 * exact.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn dot2_is_accurate() {
        let c = 2.0 / 5f64.sqrt();
        let s = 1.0 / 5f64.sqrt();
        // exact relation c = 2 s in binary64, so dot2(x, c, y, s) = fl((2x + y) s)
        assert_eq!(c, 2.0 * s);
        for (x, y) in [(3.0, 5.0), (12345.0, 7.0), (65535.0, 65532.0), (1.0, 262141.0)] {
            assert_eq!(dot2(x, c, y, s), (2.0 * x + y) * s);
        }
    }

    #[test]
    fn ordered_parallel_sum_matches_sequential() {
        let n = 3 * REDUCTION_CHUNK + 17;
        let term = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let seq: f64 = (0..n).map(term).collect::<NeumaierSum>().value();
        assert!((par_ordered_sum(n, term) - seq).abs() < 1e-14);
    }

    fn interval_strategy() -> impl Strategy<Value = Interval> {
        (-50i32..50, 0i32..30).prop_map(|(lo, len)| {
            let lo = lo as f64 * 0.25;
            Interval::new(lo, lo + len as f64 * 0.125)
        })
    }

    proptest! {
        #[test]
        fn union_is_subadditive(ivs in proptest::collection::vec(interval_strategy(), 0..40)) {
            let u = union_length(&ivs);
            let total: f64 = ivs.iter().map(Interval::length).sum();
            prop_assert!(u <= total + 1e-12);
            let disjoint = ivs.iter().enumerate().all(|(i, a)| {
                ivs[i + 1..].iter().all(|b| a.overlap(b) == 0.0)
            });
            if disjoint {
                prop_assert!((u - total).abs() < 1e-12);
            } else {
                prop_assert!(u < total);
            }
        }

        #[test]
        fn step_function_matches_inputs(ivs in proptest::collection::vec(interval_strategy(), 0..40)) {
            let f = build_step(&ivs);
            let total: f64 = ivs.iter().map(Interval::length).sum();
            prop_assert!((step_moment(&f, 1) - total).abs() < 1e-12);
            prop_assert!((f.support_length() - union_length(&ivs)).abs() < 1e-12);
            // probe at points that are never breakpoints
            for k in -120..120 {
                let x = k as f64 * 0.1 + 0.0371;
                let direct = ivs.iter().filter(|iv| iv.contains(x)).count() as u32;
                prop_assert_eq!(f.value_at(x), direct);
            }
        }
    }
}
