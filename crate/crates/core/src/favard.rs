//! Favard length by quadrature, Buffon needles, sectors and medians.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{integrate_theta, par_ordered_sum, Estimate, QuadratureSpec};
use crate::models::{CellTree, ModelId};
use crate::projection::{integrate_symmetric, support_fn, Direction, ExactBudget, Projector};
use crate::rng::{unit_f64, SplitMix64};

/// Angle of the 0X axis with the horizontal, `arctan(1/2)`.
pub fn axis_angle() -> f64 {
    0.5f64.atan()
}

/// The line `{z : p_φ(z) = offset}`; `direction` is its normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeedleLine {
    pub direction: Direction,
    pub offset: f64,
}

impl NeedleLine {
    pub fn new(direction: Direction, offset: f64) -> Self {
        Self { direction, offset }
    }

    /// Horizontal line `y = c`.
    pub fn horizontal(c: f64) -> Self {
        Self::new(Direction::new(PI / 2.0), c)
    }

    /// Vertical line `x = c`.
    pub fn vertical(c: f64) -> Self {
        Self::new(Direction::new(0.0), c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FavardResult {
    pub model: ModelId,
    pub n: u32,
    pub value: f64,
    pub error_estimate: f64,
    /// Integrand evaluations spent, over all refinements.
    pub node_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl MonteCarloResult {
    /// The estimate rescaled to a Favard length (`2√2 · hits / trials`).
    pub fn favard_estimate(&self) -> f64 {
        2.0 * SQRT_2 * self.estimate
    }

    pub fn favard_std_error(&self) -> f64 {
        2.0 * SQRT_2 * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianResult {
    pub model: ModelId,
    pub n: u32,
    pub median: f64,
    pub sample_count: usize,
    /// Midpoint-rule value of `∫_0^π dφ / |E_{n,φ}|`.
    pub reciprocal_integral: f64,
}

/// `(1/π) ∫_0^π |Proj_φ E_n| dφ`.
///
/// The four-corner integrand is folded onto `[0, π/4]` by its dihedral
/// symmetry before the quadrature starts.
pub fn favard(model: ModelId, n: u32, spec: &QuadratureSpec) -> Result<FavardResult> {
    ExactBudget::default().check(model, n)?;
    let support = support_fn(model, n)?;
    let integrand = |phi: f64| support(&Direction::new(phi));
    let estimate = integrate_symmetric(model, integrand, (0.0, PI), spec).map_err(|e| match e {
        Error::NonConvergence {
            value,
            error_estimate,
        } => Error::NonConvergence {
            value: value / PI,
            error_estimate: error_estimate / PI,
        },
        e => e,
    })?;
    Ok(FavardResult {
        model,
        n,
        value: estimate.value / PI,
        error_estimate: estimate.error_estimate / PI,
        node_count: estimate.evaluations,
    })
}

/// Direction sector `J_j` and the integral of the support length over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorIntegral {
    pub j: u32,
    /// Sector bounds, as angles from the 0X axis.
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub error_estimate: f64,
    /// `false` when `j > log₄ n + 1`, where the sector bound is no longer
    /// expected to hold.
    pub nominal: bool,
}

/// `∫_{J_j} |Proj E_n| dθ` over `J_j = [c1·4^-j, c2·4^-j]`, angles measured
/// counterclockwise from the 0X axis and clamped to `[0, π/2]`.
///
/// A sector with `c1 == c2` has zero width and integrates to zero; a sector
/// that is empty only after clamping is an error.
pub fn sector_integral(
    model: ModelId,
    n: u32,
    j: u32,
    c1: f64,
    c2: f64,
    spec: &QuadratureSpec,
) -> Result<SectorIntegral> {
    if !(c1.is_finite() && c2.is_finite() && c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "sector constants must be finite and nonnegative, got c1={c1}, c2={c2}"
        )));
    }
    ExactBudget::default().check(model, n)?;
    let scale = 4f64.powi(-(j as i32));
    let nominal = (j as f64) <= (n.max(1) as f64).log(4.0) + 1.0;
    if c1 == c2 {
        let at = (c1 * scale).min(PI / 2.0);
        return Ok(SectorIntegral {
            j,
            lo: at,
            hi: at,
            value: 0.0,
            error_estimate: 0.0,
            nominal,
        });
    }
    let lo = (c1 * scale).clamp(0.0, PI / 2.0);
    let hi = (c2 * scale).clamp(0.0, PI / 2.0);
    if lo >= hi {
        return Err(Error::EmptySector { j, lo, hi });
    }
    let alpha = axis_angle();
    let support = support_fn(model, n)?;
    let Estimate {
        value,
        error_estimate,
        ..
    } = integrate_theta(
        |theta| support(&Direction::new(alpha + theta)),
        (lo, hi),
        spec,
    )?;
    Ok(SectorIntegral {
        j,
        lo,
        hi,
        value,
        error_estimate,
        nominal,
    })
}

/// Whether the line meets some level-`n` cell (closed cells).
///
/// Walks the construction tree and drops every subtree whose projection
/// misses the offset.
pub fn needle_hit(model: ModelId, n: u32, line: &NeedleLine) -> bool {
    let tree = CellTree::new(model, n);
    let proj = Projector::new(&tree, &line.direction);
    let t = line.offset;
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        let (lo, hi) = proj.node(&node);
        if t < lo || t > hi {
            continue;
        }
        if tree.is_leaf(&node) {
            return true;
        }
        stack.extend_from_slice(tree.children(&node).as_slice());
    }
    false
}

/// The needle thrown in trial `index`: direction uniform on `[0, π)`, offset
/// uniform on the window `p_φ(1/2, 1/2) ± √2`.
pub fn needle_for_trial(seed: u64, index: u64) -> NeedleLine {
    let u1 = unit_f64(SplitMix64::at(seed, 2 * index + 1));
    let u2 = unit_f64(SplitMix64::at(seed, 2 * index + 2));
    let direction = Direction::new(PI * u1);
    let center = direction.project([0.5, 0.5]);
    NeedleLine::new(direction, center + SQRT_2 * (2.0 * u2 - 1.0))
}

/// Monte Carlo hit frequency of random lines.
pub fn buffon_estimate(model: ModelId, n: u32, trials: u64, seed: u64) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(trials))
                .filter(|&i| needle_hit(model, n, &needle_for_trial(seed, i)))
                .count() as u64
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    Ok(MonteCarloResult {
        trials,
        hits,
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        seed,
    })
}

/// Median of `|E_{n,φ}|` over the midpoint grid `φ_i = (i + 1/2)π/N`.
pub fn median_support(model: ModelId, n: u32, grid_size: usize) -> Result<MedianResult> {
    if grid_size < 16 {
        return Err(Error::InvalidInput(format!(
            "grid_size must be >= 16, got {grid_size}"
        )));
    }
    let support = support_fn(model, n)?;
    let h = PI / grid_size as f64;
    let mut samples: Vec<f64> = (0..grid_size)
        .into_par_iter()
        .map(|i| support(&Direction::new((i as f64 + 0.5) * h)))
        .collect();
    let reciprocal_integral = h * par_ordered_sum(samples.len(), |i| 1.0 / samples[i]);
    samples.sort_by(f64::total_cmp);
    let mid = grid_size / 2;
    let median = if grid_size % 2 == 0 {
        0.5 * (samples[mid - 1] + samples[mid])
    } else {
        samples[mid]
    };
    Ok(MedianResult {
        model,
        n,
        median,
        sample_count: grid_size,
        reciprocal_integral,
    })
}
