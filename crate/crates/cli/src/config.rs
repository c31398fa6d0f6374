use std::ops::RangeInclusive;
use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, Parser, Subcommand, ValueEnum};
use favard_lab::geometry::QuadratureSpec;
use favard_lab::models::{ModelId, ModelKind};
use serde::Serialize;

/// Favard length experiments on planar Cantor iterates.
///
/// Every option can also be set through an environment variable named
/// FAVARD_<OPTION>, e.g. FAVARD_MODEL=sierpinski or FAVARD_N_RANGE=1..6.
/// Command-line flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "favard", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Favard length by quadrature, with the median and reciprocal integral.
    Favard,
    /// Buffon needle Monte Carlo estimate.
    Needle,
    /// Support length and moments of the multiplicity function on a θ-grid.
    Profile,
    /// Bucket counts, overlap sums and the sector observation check (four-corner).
    Pairs,
    /// Riesz energy of the natural measure.
    Energy,
    /// Median support length and reciprocal integral.
    Median,
    /// Favard lengths ζ_n of the Sierpiński iterates (ignores --model).
    Sierpinski,
    /// Favard lengths of the random model averaged over seeds (ignores --model).
    Random,
    /// Per-level tables and fitted constants.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// fourcorner, sierpinski or random.
    #[arg(long, global = true, env = "FAVARD_MODEL", default_value = "fourcorner")]
    pub model: ModelKind,
    /// Single level.
    #[arg(long, global = true, env = "FAVARD_N", conflicts_with = "n_range")]
    pub n: Option<u32>,
    /// Inclusive level range `a..b`.
    #[arg(long, global = true, env = "FAVARD_N_RANGE", value_parser = parse_range)]
    pub n_range: Option<RangeInclusive<u32>>,
    #[arg(long, global = true, env = "FAVARD_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, env = "FAVARD_TRIALS", default_value_t = 100_000)]
    pub trials: u64,
    /// Gauss–Legendre nodes per panel.
    #[arg(long, global = true, env = "FAVARD_NODES", default_value_t = 4)]
    pub nodes: usize,
    /// Initial panel count.
    #[arg(long, global = true, env = "FAVARD_PANELS", default_value_t = 256)]
    pub panels: usize,
    /// Relative change between doublings accepted as converged.
    #[arg(long, global = true, env = "FAVARD_TOL", default_value_t = 1e-5)]
    pub tol: f64,
    /// Panel doublings before giving up.
    #[arg(long, global = true, env = "FAVARD_MAX_DOUBLINGS", default_value_t = 6)]
    pub max_doublings: u32,
    /// Sector constant: J_j starts at c1·4^-j from the 0X axis.
    #[arg(long, global = true, env = "FAVARD_C1", default_value_t = 0.25)]
    pub c1: f64,
    /// Sector constant: J_j ends at c2·4^-j.
    #[arg(long, global = true, env = "FAVARD_C2", default_value_t = 4.0)]
    pub c2: f64,
    /// Allowed distance between a pair's j label and the sector index.
    #[arg(long, global = true, env = "FAVARD_SLACK", default_value_t = 1)]
    pub slack: u32,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "FAVARD_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Output directory; tables go to stdout when omitted.
    #[arg(long, global = true, env = "FAVARD_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "FAVARD_FORMAT", value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// θ-grid size for medians and profiles.
    #[arg(long, global = true, env = "FAVARD_GRID", default_value_t = 4096)]
    pub grid: usize,
    /// Sampled angles per sector in the observation check.
    #[arg(long, global = true, env = "FAVARD_SAMPLES", default_value_t = 64)]
    pub samples: usize,
    /// Number of consecutive seeds for the random model.
    #[arg(long, global = true, env = "FAVARD_SEEDS", default_value_t = 20)]
    pub seeds: u64,
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: u32 = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..=b)
}

/// Validated run configuration, echoed into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: ModelId,
    pub levels: Vec<u32>,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    pub trials: u64,
    pub c1: f64,
    pub c2: f64,
    pub slack: u32,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub grid: usize,
    pub samples: usize,
    pub seeds: u64,
}

impl Cli {
    pub fn config(&self) -> anyhow::Result<RunConfig> {
        let o = &self.options;
        let levels: Vec<u32> = match (&o.n, &o.n_range) {
            (Some(n), _) => vec![*n],
            (None, Some(r)) => r.clone().collect(),
            (None, None) => vec![4],
        };
        if o.nodes < 2 || o.nodes > 64 {
            bail!("--nodes must be in 2..=64");
        }
        if o.panels == 0 {
            bail!("--panels must be positive");
        }
        if !(o.tol > 0.0) {
            bail!("--tol must be positive");
        }
        if o.trials == 0 {
            bail!("--trials must be positive");
        }
        if !(o.c1 >= 0.0 && o.c2 > 0.0 && o.c1.is_finite() && o.c2.is_finite()) {
            bail!("--c1 must be nonnegative and --c2 positive");
        }
        if o.grid < 16 {
            bail!("--grid must be at least 16");
        }
        if o.samples == 0 || o.seeds == 0 {
            bail!("--samples and --seeds must be positive");
        }
        let model = ModelId::new(o.model, o.seed);
        Ok(RunConfig {
            model,
            levels,
            seed: o.seed,
            quadrature: QuadratureSpec {
                panel_count: o.panels,
                nodes_per_panel: o.nodes,
                refinement_tolerance: o.tol,
                max_doublings: o.max_doublings,
            },
            trials: o.trials,
            c1: o.c1,
            c2: o.c2,
            slack: o.slack,
            threads: o.threads,
            out: o.out.clone(),
            format: o.format,
            grid: o.grid,
            samples: o.samples,
            seeds: o.seeds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..6"), Ok(1..=6));
        assert_eq!(parse_range("2..=3"), Ok(2..=3));
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("x").is_err());
    }
}
