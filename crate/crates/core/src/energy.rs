//! Riesz 1-energy of the natural atomic measure and the projected ε-ball
//! average.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{par_ordered_sum, NeumaierSum};
use crate::models::{axis_differences, natural_measure_atoms, Atom, ModelId, ModelKind};
use crate::projection::{moments, Direction, ExactBudget};

/// Largest level for the class-based four-corner sums (`9^n` classes).
pub const CLASS_LEVEL_CAP: u32 = 10;
/// Largest atom count for direct pair sums.
pub const DIRECT_ATOM_CAP: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.mass > 0.0)) {
            return Err(Error::InvalidInput("atom masses must be positive".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn natural(model: ModelId, n: u32) -> Self {
        Self {
            atoms: natural_measure_atoms(model, n).collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Rotation by `π/2` about `(1/2, 1/2)`.
    pub fn rotated_quarter_turn(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: [1.0 - a.point[1], a.point[0]],
                mass: a.mass,
            })
            .collect();
        Self { atoms }
    }
}

/// Pairs at distance in `(4^-(k+1), 4^-k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleBin {
    pub k: i32,
    pub pair_count: u64,
    pub contribution: f64,
    /// `pair_count / 4^(2n - k)`.
    pub census_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub n: u32,
    pub energy: f64,
    pub per_scale: Vec<ScaleBin>,
}

impl EnergyResult {
    pub fn breakdown_sum(&self) -> f64 {
        self.per_scale
            .iter()
            .map(|b| b.contribution)
            .collect::<NeumaierSum>()
            .value()
    }
}

/// Scale bin `⌊log₄(1/|Δ|)⌋` of a lattice difference with `|Δ|² = d2·16^-n`:
/// the largest `k >= -1` with `16^(k+1)·d2 <= 16^(n+1)`.
fn lattice_bin(d2: u128, n: u32) -> i32 {
    let bound = 1u128 << (4 * (n + 1));
    let mut k = -2i32;
    while d2 << (4 * (k + 2)) as u32 <= bound {
        k += 1;
    }
    k
}

fn float_bin(dist: f64) -> i32 {
    (1.0 / dist).log(4.0).floor() as i32
}

struct BinSums(BTreeMap<i32, (u64, NeumaierSum)>);

impl BinSums {
    fn new() -> Self {
        Self(BTreeMap::new())
    }

    fn add(&mut self, k: i32, count: u64, value: f64) {
        let e = self.0.entry(k).or_insert((0, NeumaierSum::new()));
        e.0 += count;
        e.1.add(value);
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, (c, s)) in other.0 {
            self.add(k, c, s.value());
        }
        self
    }

    fn finish(self, n: u32) -> EnergyResult {
        let per_scale: Vec<ScaleBin> = self
            .0
            .into_iter()
            .map(|(k, (pair_count, s))| ScaleBin {
                k,
                pair_count,
                contribution: s.value(),
                census_ratio: pair_count as f64 / 4f64.powi(2 * n as i32 - k),
            })
            .collect();
        let energy = per_scale
            .iter()
            .map(|b| b.contribution)
            .collect::<NeumaierSum>()
            .value();
        EnergyResult {
            n,
            energy,
            per_scale,
        }
    }
}

/// `Σ_{z ≠ ζ} m(z) m(ζ) / |z - ζ|` over ordered pairs of atoms of the natural
/// measure.
///
/// Four-corner levels are summed over difference classes; the other models
/// fall back to [`riesz_energy_direct`] under an atom-count cap.
pub fn riesz_energy(model: ModelId, n: u32) -> Result<EnergyResult> {
    if model.kind != ModelKind::FourCorner {
        check_direct(model, n)?;
        return Ok(riesz_energy_direct(&DiscreteMeasure::natural(model, n), n));
    }
    if n > CLASS_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "class energy",
            requested: n,
            cap: CLASS_LEVEL_CAP,
        });
    }
    let axis = axis_differences(n);
    let mass2 = 16f64.powi(-(n as i32));
    let unit = 4f64.powi(-(n as i32));
    let sums = axis
        .par_iter()
        .map(|dx| {
            let mut bins = BinSums::new();
            for dy in &axis {
                let d2 = (dx.units * dx.units + dy.units * dy.units) as u128;
                if d2 == 0 {
                    continue;
                }
                let count = dx.count * dy.count;
                let dist = (d2 as f64).sqrt() * unit;
                bins.add(lattice_bin(d2, n), count, count as f64 * mass2 / dist);
            }
            bins
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(BinSums::new(), BinSums::merge);
    Ok(sums.finish(n))
}

fn check_direct(model: ModelId, n: u32) -> Result<()> {
    if model.cell_count(n) > DIRECT_ATOM_CAP {
        let mut cap = 0;
        while model.cell_count(cap + 1) <= DIRECT_ATOM_CAP {
            cap += 1;
        }
        return Err(Error::BudgetExceeded {
            what: "direct pair sum",
            requested: n,
            cap,
        });
    }
    Ok(())
}

/// Energy by the `O(N²)` pair sum, bins decided in floating point. `n` only
/// labels the result.
pub fn riesz_energy_direct(measure: &DiscreteMeasure, n: u32) -> EnergyResult {
    let atoms = &measure.atoms;
    let sums = (0..atoms.len())
        .into_par_iter()
        .map(|i| {
            let mut bins = BinSums::new();
            let a = atoms[i];
            for (j, b) in atoms.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dist = (a.point[0] - b.point[0]).hypot(a.point[1] - b.point[1]);
                bins.add(float_bin(dist), 1, a.mass * b.mass / dist);
            }
            bins
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(BinSums::new(), BinSums::merge);
    sums.finish(n)
}

/// Measure of `{θ ∈ [0, π) : |p_θ(Δ)| <= ε}` for `|Δ| = dist`.
fn close_angle_measure(dist: f64, epsilon: f64) -> f64 {
    if dist <= epsilon {
        PI
    } else {
        2.0 * (epsilon / dist).asin()
    }
}

/// `∫_0^π Σ_{z, ζ} m(z) m(ζ) 1{|p_θ(z) - p_θ(ζ)| <= ε} dθ`, self-pairs
/// included.
///
/// For a pair at distance `r` the inner indicator holds on an angular set of
/// measure `2·arcsin(min(1, ε/r))`, so the θ-integral is done in closed form
/// pair by pair.
pub fn ball_average(model: ModelId, n: u32, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if model.kind != ModelKind::FourCorner {
        check_direct(model, n)?;
        return Ok(ball_average_direct(
            &DiscreteMeasure::natural(model, n),
            epsilon,
        ));
    }
    if n > CLASS_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "class ball average",
            requested: n,
            cap: CLASS_LEVEL_CAP,
        });
    }
    let axis = axis_differences(n);
    let mass2 = 16f64.powi(-(n as i32));
    let unit = 4f64.powi(-(n as i32));
    let m = axis.len();
    Ok(par_ordered_sum(m * m, |i| {
        let (dx, dy) = (&axis[i / m], &axis[i % m]);
        let dist = (dx.units as f64).hypot(dy.units as f64) * unit;
        (dx.count * dy.count) as f64 * mass2 * close_angle_measure(dist, epsilon)
    }))
}

pub fn ball_average_direct(measure: &DiscreteMeasure, epsilon: f64) -> f64 {
    let atoms = &measure.atoms;
    let len = atoms.len();
    par_ordered_sum(len * len, |idx| {
        let (a, b) = (atoms[idx / len], atoms[idx % len]);
        let dist = (a.point[0] - b.point[0]).hypot(a.point[1] - b.point[1]);
        a.mass * b.mass * close_angle_measure(dist, epsilon)
    })
}

/// `ball_average / (ε·energy + Σ m²)`: the kernel comparison ratio, with the
/// self-pair mass `Σ m² = 1/N` standing in for the dropped self-energy.
pub fn comparability_ratio(model: ModelId, n: u32, epsilon: f64) -> Result<f64> {
    let ball = ball_average(model, n, epsilon)?;
    let energy = riesz_energy(model, n)?.energy;
    let self_term = 1.0 / model.cell_count(n) as f64;
    Ok(ball / (epsilon * energy + self_term))
}

/// Both sides of `∫ dθ/|E_θ| <= ∫ (∫f²)/(∫f)² dθ` on a midpoint grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub n: u32,
    pub grid_size: usize,
    pub reciprocal_integral: f64,
    pub moment_ratio_integral: f64,
}

impl ChainCheck {
    pub fn holds(&self) -> bool {
        self.reciprocal_integral <= self.moment_ratio_integral * (1.0 + 1e-12)
    }
}

pub fn chain_check(model: ModelId, n: u32, grid_size: usize) -> Result<ChainCheck> {
    if grid_size == 0 {
        return Err(Error::InvalidInput("grid_size must be >= 1".into()));
    }
    ExactBudget::default().check(model, n)?;
    let h = PI / grid_size as f64;
    let rows: Vec<(f64, f64)> = (0..grid_size)
        .into_par_iter()
        .map(|i| {
            let m = moments(model, n, &Direction::new((i as f64 + 0.5) * h))?;
            Ok((
                1.0 / m.support_length,
                m.second_moment / (m.first_moment * m.first_moment),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(ChainCheck {
        n,
        grid_size,
        reciprocal_integral: h * par_ordered_sum(rows.len(), |i| rows[i].0),
        moment_ratio_integral: h * par_ordered_sum(rows.len(), |i| rows[i].1),
    })
}
