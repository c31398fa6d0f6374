use anyhow::{bail, Result};
use favard_lab::energy::riesz_energy;
use favard_lab::favard::{buffon_estimate, favard, median_support};
use favard_lab::models::{ModelId, ModelKind};
use favard_lab::pairs::{
    count_buckets, crucial_observation_check, total_overlap, BUCKET_LEVEL_CAP, OVERLAP_LEVEL_CAP,
};
use favard_lab::projection::profile_sweep;
use favard_lab::report::{fits_table, level_table, Cell, LevelRow, Report, Table};

use crate::config::{Command, RunConfig};

/// Everything a command produces, before it is written anywhere.
pub struct Emitted {
    pub command: Command,
    pub tables: Vec<Table>,
    pub report: Option<Report>,
}

pub fn execute(command: Command, config: &RunConfig) -> Result<Emitted> {
    let mut report = None;
    let tables = match command {
        Command::Favard => vec![favard_table(config.model, config)?],
        Command::Sierpinski => vec![favard_table(ModelId::sierpinski(), config)?],
        Command::Needle => vec![needle_table(config)?],
        Command::Profile => profile_tables(config)?,
        Command::Pairs => pairs_tables(config)?,
        Command::Energy => vec![energy_table(config)?],
        Command::Median => vec![median_table(config)?],
        Command::Random => random_tables(config)?,
        Command::Report => {
            let r = build_report(config)?;
            let tables = vec![level_table(&r), fits_table(&r)];
            report = Some(r);
            tables
        }
    };
    Ok(Emitted {
        command,
        tables,
        report,
    })
}

fn favard_table(model: ModelId, config: &RunConfig) -> Result<Table> {
    let mut t = Table::new(
        "favard",
        &["model", "n", "favard", "error", "median", "reciprocal_integral"],
    );
    for &n in &config.levels {
        let f = favard(model, n, &config.quadrature)?;
        let m = median_support(model, n, config.grid)?;
        t.push(vec![
            model.to_string().into(),
            n.into(),
            f.value.into(),
            f.error_estimate.into(),
            m.median.into(),
            m.reciprocal_integral.into(),
        ]);
    }
    Ok(t)
}

fn needle_table(config: &RunConfig) -> Result<Table> {
    let mut t = Table::new(
        "needle",
        &["model", "n", "trials", "hits", "estimate", "std_error", "seed"],
    );
    for &n in &config.levels {
        let r = buffon_estimate(config.model, n, config.trials, config.seed)?;
        t.push(vec![
            config.model.to_string().into(),
            n.into(),
            r.trials.into(),
            r.hits.into(),
            r.estimate.into(),
            r.std_error.into(),
            r.seed.into(),
        ]);
    }
    Ok(t)
}

fn profile_tables(config: &RunConfig) -> Result<Vec<Table>> {
    config
        .levels
        .iter()
        .map(|&n| {
            let name = format!("profile_n{n}");
            let mut t = Table::new(
                &name,
                &["theta", "support_length", "first_moment", "second_moment"],
            );
            for r in profile_sweep(config.model, n, config.grid)? {
                t.push(vec![
                    r.theta.into(),
                    r.support_length.into(),
                    r.first_moment.into(),
                    r.second_moment.into(),
                ]);
            }
            Ok(t)
        })
        .collect()
}

fn pairs_tables(config: &RunConfig) -> Result<Vec<Table>> {
    if config.model.kind != ModelKind::FourCorner {
        return Err(favard_lab::Error::WrongModel {
            op: "pairs",
            model: config.model.kind.name(),
        }
        .into());
    }
    let mut buckets = Table::new("buckets", &["n", "j", "k", "count", "bound", "ratio"]);
    let mut overlaps = Table::new("overlaps", &["n", "j", "k", "partial_sum"]);
    let mut overlap_totals = Table::new(
        "overlap_totals",
        &["n", "total", "diagonal", "pp1_constant"],
    );
    let mut checks = Table::new(
        "observation",
        &["n", "j", "lo", "hi", "samples", "pairs_checked", "violations"],
    );
    let mut violations = Table::new(
        "violations",
        &["theta", "square1", "square2", "j_expected", "j_actual"],
    );
    for &n in &config.levels {
        for r in count_buckets(n)?.rows {
            buckets.push(vec![
                n.into(),
                r.j.into(),
                r.k.into(),
                r.count.into(),
                r.bound.into(),
                r.ratio.into(),
            ]);
        }
        let totals = total_overlap(n, &config.quadrature)?;
        overlap_totals.push(vec![
            n.into(),
            totals.total.into(),
            totals.diagonal.into(),
            totals.pp1_constant.into(),
        ]);
        for r in &totals.rows {
            overlaps.push(vec![n.into(), r.j.into(), r.k.into(), r.partial_sum.into()]);
        }
        let j_max = (n.max(1) as f64).log(4.0).floor() as u32;
        for j in 0..=j_max {
            let rep = crucial_observation_check(
                n,
                j,
                config.c1,
                config.c2,
                config.samples,
                config.seed,
                config.slack,
            )?;
            let scale = 4f64.powi(-(j as i32));
            checks.push(vec![
                n.into(),
                j.into(),
                (config.c1 * scale).min(std::f64::consts::FRAC_PI_2).into(),
                (config.c2 * scale).min(std::f64::consts::FRAC_PI_2).into(),
                rep.thetas.len().into(),
                rep.pairs_checked.into(),
                rep.violations.len().into(),
            ]);
            for v in rep.violations {
                violations.push(vec![
                    v.theta.into(),
                    v.square1.to_string().into(),
                    v.square2.to_string().into(),
                    v.j_expected.into(),
                    v.j_actual.into(),
                ]);
            }
        }
    }
    Ok(vec![buckets, overlaps, overlap_totals, checks, violations])
}

fn energy_table(config: &RunConfig) -> Result<Table> {
    let results = config
        .levels
        .iter()
        .map(|&n| riesz_energy(config.model, n))
        .collect::<favard_lab::Result<Vec<_>>>()?;
    let ks: Vec<i32> = {
        let lo = results.iter().flat_map(|r| r.per_scale.first()).map(|b| b.k).min();
        let hi = results.iter().flat_map(|r| r.per_scale.last()).map(|b| b.k).max();
        match (lo, hi) {
            (Some(lo), Some(hi)) => (lo..=hi).collect(),
            _ => Vec::new(),
        }
    };
    let mut columns = vec![
        "model".to_string(),
        "n".to_string(),
        "energy".to_string(),
        "energy_over_n".to_string(),
    ];
    columns.extend(ks.iter().map(|k| format!("scale_{k}")));
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("energy", &refs);
    for r in results {
        let over_n = if r.n > 0 {
            Cell::Real(r.energy / r.n as f64)
        } else {
            Cell::Empty
        };
        let mut row = vec![
            config.model.to_string().into(),
            r.n.into(),
            r.energy.into(),
            over_n,
        ];
        for k in &ks {
            row.push(
                r.per_scale
                    .iter()
                    .find(|b| b.k == *k)
                    .map(|b| b.contribution)
                    .into(),
            );
        }
        t.push(row);
    }
    Ok(t)
}

fn median_table(config: &RunConfig) -> Result<Table> {
    let mut t = Table::new(
        "median",
        &["model", "n", "median", "sample_count", "reciprocal_integral"],
    );
    for &n in &config.levels {
        let m = median_support(config.model, n, config.grid)?;
        t.push(vec![
            config.model.to_string().into(),
            n.into(),
            m.median.into(),
            m.sample_count.into(),
            m.reciprocal_integral.into(),
        ]);
    }
    Ok(t)
}

fn random_tables(config: &RunConfig) -> Result<Vec<Table>> {
    let mut per_seed = Table::new(
        "random",
        &["n", "seed", "favard", "error", "n_times_favard"],
    );
    let mut mean = Table::new(
        "random_mean",
        &["n", "seeds", "mean_favard", "mean_n_times_favard"],
    );
    for &n in &config.levels {
        let mut values = Vec::new();
        for seed in config.seed..config.seed + config.seeds {
            let f = favard(ModelId::random(seed), n, &config.quadrature)?;
            per_seed.push(vec![
                n.into(),
                seed.into(),
                f.value.into(),
                f.error_estimate.into(),
                (n as f64 * f.value).into(),
            ]);
            values.push(f.value);
        }
        let avg = favard_lab::geometry::ordered_sum(&values) / values.len() as f64;
        mean.push(vec![
            n.into(),
            config.seeds.into(),
            avg.into(),
            (n as f64 * avg).into(),
        ]);
    }
    Ok(vec![per_seed, mean])
}

/// Per-level rows for the report. Quantities outside their budgets, or not
/// defined for the model, are left empty.
pub fn build_report(config: &RunConfig) -> Result<Report> {
    let model = config.model;
    let four_corner = model.kind == ModelKind::FourCorner;
    let mut rows = Vec::new();
    for &n in &config.levels {
        let f = favard(model, n, &config.quadrature)?;
        let m = median_support(model, n, config.grid)?;
        let total = if four_corner && n <= OVERLAP_LEVEL_CAP {
            Some(total_overlap(n, &config.quadrature)?.total)
        } else {
            None
        };
        let bucket = if four_corner && n <= BUCKET_LEVEL_CAP {
            Some(count_buckets(n)?.max_ratio())
        } else {
            None
        };
        let energy = match riesz_energy(model, n) {
            Ok(e) => Some(e.energy),
            Err(favard_lab::Error::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push(LevelRow {
            n,
            favard: f.value,
            favard_error: f.error_estimate,
            median: m.median,
            reciprocal_integral: m.reciprocal_integral,
            total_overlap: total,
            energy,
            bucket_max_ratio: bucket,
        });
    }
    if rows.is_empty() {
        bail!("no levels requested");
    }
    Ok(Report::new(model.to_string(), config.seed, rows)?)
}
