//! Monte Carlo harness for empirical size and power.
//!
//! Each replicate simulates one dataset on its own RNG substream, runs the
//! full estimate-and-test pipeline, and contributes one rejection
//! indicator. Replicates are distributed over a worker pool; aggregation is
//! an integer sum, so results are bit-identical for any worker count.
//! [`reproduce_table`] reruns the embedded reference power studies cell by
//! cell and compares against their values.

use crate::design::{Design, FixedEffects, IccProfile, SubgroupLevel, VarianceComponents};
use crate::error::Error;
use crate::estimator::analyze_trial;
use crate::sim::{simulate, substream_seed, Seed};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Configuration of one empirical power run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub design: Design,
    pub fx: FixedEffects,
    pub vc: VarianceComponents,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: Seed,
    pub workers: usize,
}

/// Aggregated rejection frequency with binomial uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// Rejections over effective (non-degenerate) replicates.
    pub empirical_power: f64,
    pub rejections: usize,
    pub replicates: usize,
    pub binomial_se: f64,
    /// Replicates whose plug-in variance was zero; excluded from the
    /// denominator rather than silently counted as non-rejections.
    pub degenerate_count: usize,
}

/// Run the replicate loop. Replicate `r` always simulates from
/// `substream_seed(seed, r)`, so the result does not depend on `workers`.
pub fn run_mc(config: &McConfig) -> Result<McResult> {
    if config.replicates == 0 {
        return Err(Error::DomainError("replicates must be >= 1".into()));
    }
    if config.vc.level != config.design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: config.vc.level,
            design: config.design.subgroup_level(),
        });
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "alpha must be in (0,1), got {}",
            config.alpha
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::DomainError(format!("worker pool: {e}")))?;

    let replicate = |r: usize| -> u8 {
        let data = simulate(
            &config.design,
            &config.fx,
            &config.vc,
            substream_seed(config.seed, r as u64),
        )
        .expect("level checked above");
        match analyze_trial(&data, config.alpha) {
            Ok(analysis) => analysis.test.reject as u8,
            Err(Error::DegenerateVariance) => 2,
            Err(e) => unreachable!("replicate analysis cannot fail otherwise: {e}"),
        }
    };
    let outcomes: Vec<u8> = pool.install(|| (0..config.replicates).into_par_iter().map(replicate).collect());

    let rejections = outcomes.iter().filter(|&&o| o == 1).count();
    let degenerate_count = outcomes.iter().filter(|&&o| o == 2).count();
    let effective = config.replicates - degenerate_count;
    let empirical_power = if effective > 0 {
        rejections as f64 / effective as f64
    } else {
        f64::NAN
    };
    let binomial_se = if effective > 0 {
        (empirical_power * (1.0 - empirical_power) / effective as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(McResult {
        empirical_power,
        rejections,
        replicates: config.replicates,
        binomial_se,
        degenerate_count,
    })
}

/// Which reference power study to rerun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    /// Level-one subgrouping, 12 designs `(N3, N2, n)`.
    One,
    /// Level-two subgrouping, 12 designs `(N3, n, N1)`.
    Two,
}

/// One reference design row: dimensions plus the recorded empirical power
/// for `delta in {0, 0.5, 1}` under phenotype Settings I and II.
pub struct TableRow {
    pub dims: (usize, usize, usize),
    /// `powers[delta_index][setting_index]`.
    pub powers: [[f64; 2]; 3],
}

pub const DELTAS: [f64; 3] = [0.0, 0.5, 1.0];

/// Reference level-one study (12 designs x 3 deltas x 2 settings).
pub const TABLE1: [TableRow; 12] = [
    TableRow { dims: (5, 6, 15), powers: [[0.002, 0.015], [0.756, 0.941], [1.0, 1.0]] },
    TableRow { dims: (5, 6, 20), powers: [[0.002, 0.009], [0.789, 0.956], [1.0, 1.0]] },
    TableRow { dims: (5, 6, 25), powers: [[0.001, 0.004], [0.807, 0.976], [1.0, 1.0]] },
    TableRow { dims: (5, 7, 15), powers: [[0.001, 0.011], [0.787, 0.954], [1.0, 1.0]] },
    TableRow { dims: (5, 7, 20), powers: [[0.001, 0.001], [0.799, 0.974], [1.0, 1.0]] },
    TableRow { dims: (5, 7, 25), powers: [[0.001, 0.006], [0.824, 0.982], [1.0, 1.0]] },
    TableRow { dims: (6, 7, 15), powers: [[0.003, 0.006], [0.877, 0.978], [1.0, 1.0]] },
    TableRow { dims: (6, 7, 20), powers: [[0.0, 0.003], [0.901, 0.991], [1.0, 1.0]] },
    TableRow { dims: (6, 7, 25), powers: [[0.0, 0.002], [0.931, 0.995], [1.0, 1.0]] },
    TableRow { dims: (6, 8, 15), powers: [[0.002, 0.004], [0.87, 0.99], [1.0, 1.0]] },
    TableRow { dims: (6, 8, 20), powers: [[0.0, 0.0], [0.912, 0.994], [1.0, 1.0]] },
    TableRow { dims: (6, 8, 25), powers: [[0.0, 0.001], [0.933, 0.995], [1.0, 1.0]] },
];

/// Reference level-two study.
pub const TABLE2: [TableRow; 12] = [
    TableRow { dims: (10, 15, 20), powers: [[0.076, 0.079], [0.925, 0.997], [1.0, 1.0]] },
    TableRow { dims: (10, 15, 30), powers: [[0.072, 0.069], [0.923, 0.996], [1.0, 1.0]] },
    TableRow { dims: (10, 15, 40), powers: [[0.078, 0.075], [0.928, 0.998], [1.0, 1.0]] },
    TableRow { dims: (20, 15, 20), powers: [[0.069, 0.068], [0.997, 1.0], [1.0, 1.0]] },
    TableRow { dims: (20, 15, 30), powers: [[0.067, 0.065], [0.996, 1.0], [1.0, 1.0]] },
    TableRow { dims: (20, 15, 40), powers: [[0.062, 0.062], [0.998, 1.0], [1.0, 1.0]] },
    TableRow { dims: (40, 20, 20), powers: [[0.054, 0.049], [1.0, 1.0], [1.0, 1.0]] },
    TableRow { dims: (40, 20, 30), powers: [[0.064, 0.064], [1.0, 1.0], [1.0, 1.0]] },
    TableRow { dims: (40, 20, 40), powers: [[0.058, 0.058], [1.0, 1.0], [1.0, 1.0]] },
    TableRow { dims: (60, 20, 20), powers: [[0.042, 0.045], [1.0, 1.0], [1.0, 1.0]] },
    TableRow { dims: (60, 20, 30), powers: [[0.042, 0.036], [1.0, 1.0], [1.0, 1.0]] },
    TableRow { dims: (60, 20, 40), powers: [[0.051, 0.051], [1.0, 1.0], [1.0, 1.0]] },
];

pub fn table_rows(which: TableId) -> &'static [TableRow; 12] {
    match which {
        TableId::One => &TABLE1,
        TableId::Two => &TABLE2,
    }
}

/// ICC profile of simulation Setting I or II for the given level.
pub fn setting_profile(setting: u8, level: SubgroupLevel) -> IccProfile {
    let (rho1, rho_p, rho2) = match setting {
        1 => (0.2, 0.15, 0.1),
        2 => (0.1, 0.075, 0.05),
        other => panic!("setting must be 1 or 2, got {other}"),
    };
    match level {
        SubgroupLevel::LevelOne => IccProfile::level_one(1.0, rho1, rho_p, rho_p, rho2),
        SubgroupLevel::LevelTwo => IccProfile::level_two(1.0, rho1, rho_p, rho2),
    }
}

/// Tolerance for comparing a rerun cell against its reference value:
/// three binomial standard errors at the reference value with a 0.01 floor
/// (reference values are 1000-replicate estimates rounded to three
/// decimals). Cells
/// printed as 1.0 are instead checked with the `empirical >= 0.99` rule;
/// this function returns the band for values below one.
pub fn reproduction_tolerance(paper: f64, replicates: usize) -> f64 {
    (3.0 * (paper * (1.0 - paper) / replicates as f64).sqrt()).max(0.01)
}

/// One rerun table cell compared against the reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproducedCell {
    pub table: TableId,
    pub design: Design,
    pub delta: f64,
    /// Variance Setting, 1 or 2.
    pub setting: u8,
    pub result: McResult,
    pub paper: f64,
    /// `|empirical - paper|`.
    pub abs_diff: f64,
    /// Tolerance band; for cells printed as 1.0 the pass rule is
    /// `empirical >= 0.99` and this holds `0.01`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Rerun one reference table. Each cell runs `replicates` fresh replicates
/// on a cell-specific substream of `seed` (mixed from the cell's position),
/// so cells are independent and individually reproducible.
pub fn reproduce_table(
    which: TableId,
    seed: Seed,
    replicates: usize,
    workers: usize,
) -> Result<Vec<ReproducedCell>> {
    let rows = table_rows(which);
    let mut cells = Vec::with_capacity(12 * 3 * 2);
    let mut cell_index = 0u64;
    for row in rows {
        let (a, b, c) = row.dims;
        let design = match which {
            TableId::One => Design::level_one(a, b, c)?,
            TableId::Two => Design::level_two(a, b, c)?,
        };
        for (d_idx, &delta) in DELTAS.iter().enumerate() {
            for setting in [1u8, 2u8] {
                let icc = setting_profile(setting, design.subgroup_level());
                let vc = crate::design::icc_to_components(&icc, design.subgroup_level())?;
                let config = McConfig {
                    design,
                    fx: FixedEffects::new(0.0, 0.0, 0.5, delta),
                    vc,
                    alpha: 0.05,
                    replicates,
                    seed: substream_seed(seed, cell_index),
                    workers,
                };
                let result = run_mc(&config)?;
                let paper = row.powers[d_idx][setting as usize - 1];
                let abs_diff = (result.empirical_power - paper).abs();
                let (tolerance, pass) = if paper >= 1.0 {
                    (0.01, result.empirical_power >= 0.99)
                } else {
                    let tol = reproduction_tolerance(paper, replicates);
                    (tol, abs_diff <= tol)
                };
                cells.push(ReproducedCell {
                    table: which,
                    design,
                    delta,
                    setting,
                    result,
                    paper,
                    abs_diff,
                    tolerance,
                    pass,
                });
                cell_index += 1;
            }
        }
    }
    Ok(cells)
}
