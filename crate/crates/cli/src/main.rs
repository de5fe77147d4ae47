//! Command line surface: simulate datasets to CSV, analyze CSV trial data,
//! compute power and sample sizes, and rerun the reference power tables.
//!
//! Machine-readable JSON goes to stdout (or `--out`); failures print a
//! structured JSON error to stderr and exit nonzero. The worker count for
//! Monte Carlo commands defaults to `CRT_SUBGROUP_WORKERS` or the available
//! parallelism.

mod csv_io;
mod report;

use clap::{Args, Parser, Subcommand};
use crt_subgroup::*;
use csv_io::CsvError;
use report::*;
use std::result::Result;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Default master seeds for `reproduce`; fixed so the shipped comparison is
/// reproducible.
const REPRODUCE_DEFAULT_SEED_TABLE1: u64 = 1;
const REPRODUCE_DEFAULT_SEED_TABLE2: u64 = 1;

#[derive(Parser)]
#[command(
    name = "crt-subgroup",
    about = "Differential subgroup effects in balanced three-level cluster randomized trials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a balanced trial dataset to CSV plus a JSON parameter sidecar
    Simulate(SimulateArgs),
    /// Estimate and test a trial dataset read from CSV
    Analyze(AnalyzeArgs),
    /// Analytic power of a design (optionally swept along one axis)
    Power(PowerArgs),
    /// Smallest sample size achieving a target power
    SampleSize(SampleSizeArgs),
    /// Rerun a reference power table and compare cell by cell
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Subgrouping level: 1 or 2
    #[arg(long)]
    level: u8,
    /// Level-three units per arm
    #[arg(long)]
    n3: usize,
    /// Level-two units per level-three unit (N2 for level 1, 2n for level 2)
    #[arg(long)]
    mid: usize,
    /// Level-one units per cell (2n for level 1, N1 for level 2)
    #[arg(long)]
    low: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    xi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    delta: f64,
    /// ICC profile: sigma2,rho1,rho_1p,rho_2p,rho2 (level 1) or
    /// sigma2,rho1,rho_2p,rho2 (level 2)
    #[arg(long, conflicts_with = "components")]
    icc: Option<String>,
    /// Raw components: sigma3_sq,sigma2_sq,sigma_low_sq,sigma_e_sq
    #[arg(long)]
    components: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; parameters are recorded next to it in
    /// <out>.params.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV in the cluster3,arm,cluster2,subgroup,unit,y format
    csv: PathBuf,
    #[arg(long)]
    level: u8,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long)]
    level: u8,
    #[arg(long)]
    n3: usize,
    /// N2 (level-one subgrouping only)
    #[arg(long)]
    n2: Option<usize>,
    /// Per-subgroup count n (level-one units for level 1, level-two units
    /// for level 2)
    #[arg(long)]
    n: Option<usize>,
    /// N1 (level-two subgrouping only)
    #[arg(long = "n1", alias = "N1")]
    n1: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, conflicts_with = "components")]
    icc: Option<String>,
    #[arg(long)]
    components: Option<String>,
    /// Sweep one axis instead of a single point: n3, mid or low
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, requires = "sweep")]
    from: Option<usize>,
    #[arg(long, requires = "sweep")]
    to: Option<usize>,
    /// Stride of the sweep (use 2 to keep level-one per-cell counts even)
    #[arg(long, requires = "sweep", default_value_t = 1)]
    step: usize,
}

#[derive(Args)]
struct SampleSizeArgs {
    #[arg(long)]
    level: u8,
    /// Individual-subgroup formulas instead of the differential-effect ones
    #[arg(long)]
    subgroup: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    power: f64,
    /// Differential effect delta (differential-effect formulas)
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Signal-to-noise ratio Delta_g (subgroup formulas)
    #[arg(long)]
    delta_over_sigma: Option<f64>,
    #[arg(long)]
    n3: usize,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "n1", alias = "N1")]
    n1: Option<usize>,
    #[arg(long)]
    sigma_e2: Option<f64>,
    #[arg(long)]
    sigma_grp2: Option<f64>,
    #[arg(long = "sigma-12")]
    sigma_12: Option<f64>,
    #[arg(long = "sigma-22")]
    sigma_22: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2p: Option<f64>,
    /// Use z_{1-alpha} instead of z_{1-alpha/2} in the differential formulas
    #[arg(long)]
    one_sided_quantile: bool,
    /// Use z_{1-alpha_g/2} instead of z_{1-alpha_g} in the subgroup formulas
    #[arg(long)]
    two_sided_quantile: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which table: 1 (level-one subgrouping) or 2 (level-two)
    #[arg(long)]
    table: u8,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the comparison rows to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Power(args) => cmd_power(args),
        Command::SampleSize(args) => cmd_sample_size(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap());
            ExitCode::from(2)
        }
    }
}

fn parse_level(level: u8) -> Result<SubgroupLevel, ErrorOut> {
    match level {
        1 => Ok(SubgroupLevel::LevelOne),
        2 => Ok(SubgroupLevel::LevelTwo),
        other => Err(ErrorOut::new(
            "InvalidFlag",
            format!("--level must be 1 or 2, got {other}"),
        )),
    }
}

fn parse_floats(raw: &str, expect: usize, what: &str) -> Result<Vec<f64>, ErrorOut> {
    let values: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == expect => Ok(v),
        Ok(v) => Err(ErrorOut::new(
            "InvalidFlag",
            format!(
                "{what} expects {expect} comma-separated values, got {}",
                v.len()
            ),
        )),
        Err(e) => Err(ErrorOut::new("InvalidFlag", format!("{what}: {e}"))),
    }
}

fn components_from_flags(
    level: SubgroupLevel,
    icc: &Option<String>,
    components: &Option<String>,
) -> Result<VarianceComponents, ErrorOut> {
    match (icc, components) {
        (Some(_), Some(_)) => Err(ErrorOut::new(
            "InvalidFlag",
            "--icc and --components are mutually exclusive",
        )),
        (None, None) => Err(ErrorOut::new(
            "InvalidFlag",
            "one of --icc or --components is required",
        )),
        (Some(raw), None) => {
            let profile = match level {
                SubgroupLevel::LevelOne => {
                    let v = parse_floats(raw, 5, "--icc (level 1)")?;
                    IccProfile::level_one(v[0], v[1], v[2], v[3], v[4])
                }
                SubgroupLevel::LevelTwo => {
                    let v = parse_floats(raw, 4, "--icc (level 2)")?;
                    IccProfile::level_two(v[0], v[1], v[2], v[3])
                }
            };
            icc_to_components(&profile, level)
                .map_err(|e| ErrorOut::new("InvalidIcc", e.to_string()))
        }
        (None, Some(raw)) => {
            let v = parse_floats(raw, 4, "--components")?;
            VarianceComponents::new(level, v[0], v[1], v[2], v[3])
                .map_err(|e| ErrorOut::new("InvalidComponents", e.to_string()))
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, ErrorOut> {
    let level = parse_level(args.level)?;
    let design = Design::from_dims(level, args.n3, args.mid, args.low)
        .map_err(|e| ErrorOut::new("InvalidDesign", e.to_string()))?;
    let vc = components_from_flags(level, &args.icc, &args.components)?;
    let fx = FixedEffects::new(args.beta0, args.tau, args.xi, args.delta);
    let data = simulate(&design, &fx, &vc, Seed(args.seed))
        .map_err(|e| ErrorOut::new("SimulationError", e.to_string()))?;
    csv_io::write_trial_csv(&args.out, &data)
        .map_err(|e| ErrorOut::new("IoError", e.to_string()))?;

    let params = SimulateParamsOut {
        schema_version: SCHEMA_VERSION.into(),
        command: "simulate".into(),
        level: args.level,
        n3: args.n3,
        mid: args.mid,
        low: args.low,
        beta0: args.beta0,
        tau: args.tau,
        xi: args.xi,
        delta: args.delta,
        sigma3_sq: vc.sigma3_sq,
        sigma2_sq: vc.sigma2_sq,
        sigma_low_sq: vc.sigma_low_sq,
        sigma_e_sq: vc.sigma_e_sq,
        seed: args.seed,
        rows: data.y().len(),
        out: args.out.display().to_string(),
    };
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".params.json");
    let sidecar = PathBuf::from(sidecar);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&params).unwrap())
        .map_err(|e| ErrorOut::new("IoError", e.to_string()))?;
    println!(
        "wrote {} rows to {} (parameters in {})",
        data.y().len(),
        args.out.display(),
        sidecar.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<ExitCode, ErrorOut> {
    let level = parse_level(args.level)?;
    let data = csv_io::read_trial_csv(&args.csv, level).map_err(|e| match &e {
        CsvError::Parse { .. } => ErrorOut::new("ParseError", e.to_string()),
        CsvError::Unbalanced(_) => ErrorOut::new("UnbalancedData", e.to_string()),
    })?;
    let analysis = analyze_trial(&data, args.alpha).map_err(|e| match e {
        Error::DegenerateVariance => ErrorOut::new("DegenerateVariance", e.to_string()),
        other => ErrorOut::new("AnalysisError", other.to_string()),
    })?;
    let report = AnalysisReport::from_analysis(data.design(), &analysis);
    let json = serde_json::to_string_pretty(&report).unwrap();
    match &args.out {
        Some(path) => std::fs::write(path, json.as_bytes())
            .map_err(|e| ErrorOut::new("IoError", e.to_string()))?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn power_design(args: &PowerArgs, level: SubgroupLevel) -> Result<Design, ErrorOut> {
    let missing = |flag: &str| ErrorOut::new("InvalidFlag", format!("--{flag} is required"));
    let design = match level {
        SubgroupLevel::LevelOne => Design::level_one(
            args.n3,
            args.n2.ok_or_else(|| missing("n2"))?,
            args.n.ok_or_else(|| missing("n"))?,
        ),
        SubgroupLevel::LevelTwo => Design::level_two(
            args.n3,
            args.n.ok_or_else(|| missing("n"))?,
            args.n1.ok_or_else(|| missing("n1"))?,
        ),
    };
    design.map_err(|e| ErrorOut::new("InvalidDesign", e.to_string()))
}

fn cmd_power(args: PowerArgs) -> Result<ExitCode, ErrorOut> {
    let level = parse_level(args.level)?;
    let design = power_design(&args, level)?;
    let vc = components_from_flags(level, &args.icc, &args.components)?;
    // the sweep only consumes delta and alpha; the power field is a filler
    let spec = PowerSpec::new(args.alpha, 0.5 * (1.0 + args.alpha), args.delta)
        .map_err(|e| ErrorOut::new("InvalidFlag", e.to_string()))?;

    let points = if let Some(axis_raw) = &args.sweep {
        let axis = match axis_raw.as_str() {
            "n3" => SweepAxis::N3,
            "mid" => SweepAxis::Mid,
            "low" => SweepAxis::Low,
            other => {
                return Err(ErrorOut::new(
                    "InvalidFlag",
                    format!("--sweep must be n3, mid or low, got {other}"),
                ))
            }
        };
        let from = args.from.unwrap_or(2);
        let to = args.to.unwrap_or(from);
        let step = args.step.max(1);
        let sweep = DesignSweep {
            base: design,
            axis,
            values: (from..=to).step_by(step).collect(),
        };
        power_curve(&spec, &sweep, &vc).map_err(|e| ErrorOut::new("PowerError", e.to_string()))?
    } else {
        let var_delta = var_delta_formula(&design, &vc);
        let power = power_lower_bound(args.delta, var_delta, args.alpha)
            .map_err(|e| ErrorOut::new("PowerError", e.to_string()))?;
        vec![PowerCurvePoint {
            design,
            var_delta,
            power,
        }]
    };
    let out = PowerOut {
        schema_version: SCHEMA_VERSION.into(),
        status: "ok".into(),
        delta: args.delta,
        alpha: args.alpha,
        points: points
            .iter()
            .map(|p| PowerPointOut {
                design: DesignEcho::from(&p.design),
                var_delta: p.var_delta,
                power: p.power,
            })
            .collect(),
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample_size(args: SampleSizeArgs) -> Result<ExitCode, ErrorOut> {
    let level = parse_level(args.level)?;
    let missing = |flag: &str| ErrorOut::new("InvalidFlag", format!("--{flag} is required"));

    let result: Result<(String, SampleSize), Error> = if args.subgroup {
        let mut spec = SubgroupPowerSpec::new(
            args.alpha,
            args.power,
            args.delta_over_sigma
                .ok_or_else(|| missing("delta-over-sigma"))?,
        )
        .map_err(|e| ErrorOut::new("InvalidFlag", e.to_string()))?;
        spec.two_sided_quantile = args.two_sided_quantile;
        let icc = IccProfile {
            sigma_sq: 1.0,
            rho1: args.rho1.ok_or_else(|| missing("rho1"))?,
            rho_1p: None,
            rho_2p: args.rho2p.ok_or_else(|| missing("rho2p"))?,
            rho2: 0.0,
        };
        match level {
            SubgroupLevel::LevelOne => {
                let n2 = args.n2.ok_or_else(|| missing("n2"))?;
                required_subgroup_n_level1(&spec, n2, args.n3, &icc).map(|s| ("n1g".to_string(), s))
            }
            SubgroupLevel::LevelTwo => {
                let n1 = args.n1.ok_or_else(|| missing("n1"))?;
                required_subgroup_n_level2(&spec, n1, args.n3, &icc).map(|s| ("n2g".to_string(), s))
            }
        }
    } else {
        let mut spec = PowerSpec::new(
            args.alpha,
            args.power,
            args.delta.ok_or_else(|| missing("delta"))?,
        )
        .map_err(|e| ErrorOut::new("InvalidFlag", e.to_string()))?;
        spec.one_sided_quantile = args.one_sided_quantile;
        let sigma_e2 = args.sigma_e2.ok_or_else(|| missing("sigma-e2"))?;
        match level {
            SubgroupLevel::LevelOne => {
                let vc = VarianceComponents::new(
                    level,
                    0.0,
                    0.0,
                    args.sigma_grp2.ok_or_else(|| missing("sigma-grp2"))?,
                    sigma_e2,
                )
                .map_err(|e| ErrorOut::new("InvalidComponents", e.to_string()))?;
                let n2 = args.n2.ok_or_else(|| missing("n2"))?;
                required_n_level1(&spec, args.n3, n2, &vc).map(|s| ("n".to_string(), s))
            }
            SubgroupLevel::LevelTwo => {
                let vc = VarianceComponents::new(
                    level,
                    0.0,
                    args.sigma_22.ok_or_else(|| missing("sigma-22"))?,
                    args.sigma_12.ok_or_else(|| missing("sigma-12"))?,
                    sigma_e2,
                )
                .map_err(|e| ErrorOut::new("InvalidComponents", e.to_string()))?;
                let n = args.n.ok_or_else(|| missing("n"))?;
                required_n1_level2(&spec, args.n3, n, &vc).map(|s| ("n1".to_string(), s))
            }
        }
    };

    let out = match result {
        Ok((target, size)) => SampleSizeOut::ok(&target, size.value, size.clamped),
        Err(Error::Infeasible(reason)) => SampleSizeOut::infeasible(reason),
        Err(e) => return Err(ErrorOut::new("SampleSizeError", e.to_string())),
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(ExitCode::SUCCESS)
}

fn default_workers() -> usize {
    std::env::var("CRT_SUBGROUP_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode, ErrorOut> {
    let (table, default_seed) = match args.table {
        1 => (TableId::One, REPRODUCE_DEFAULT_SEED_TABLE1),
        2 => (TableId::Two, REPRODUCE_DEFAULT_SEED_TABLE2),
        other => {
            return Err(ErrorOut::new(
                "InvalidFlag",
                format!("--table must be 1 or 2, got {other}"),
            ))
        }
    };
    let seed = Seed(args.seed.unwrap_or(default_seed));
    let workers = args.workers.unwrap_or_else(default_workers);
    let cells = reproduce_table(table, seed, args.reps, workers)
        .map_err(|e| ErrorOut::new("ReproduceError", e.to_string()))?;

    let dims = |cell: &ReproducedCell| match table {
        TableId::One => (
            cell.design.n3_per_arm(),
            cell.design.mid(),
            cell.design.n_per_subgroup(),
        ),
        TableId::Two => (
            cell.design.n3_per_arm(),
            cell.design.n_per_subgroup(),
            cell.design.low(),
        ),
    };
    let header = match table {
        TableId::One => ("N3", "N2", "n"),
        TableId::Two => ("N3", "n", "N1"),
    };
    println!(
        "{:>3} {:>3} {:>3} {:>5} {:>7} {:>7} {:>7} {:>7} {:>6} {:>5}",
        header.0, header.1, header.2, "delta", "setting", "paper", "ours", "diff", "tol", "pass"
    );
    let mut pass_count = 0;
    let mut delta1_violation = false;
    for cell in &cells {
        let (a, b, c) = dims(cell);
        println!(
            "{:>3} {:>3} {:>3} {:>5} {:>7} {:>7.3} {:>7.3} {:>7.3} {:>6.3} {:>5}",
            a,
            b,
            c,
            cell.delta,
            cell.setting,
            cell.paper,
            cell.result.empirical_power,
            cell.abs_diff,
            cell.tolerance,
            if cell.pass { "yes" } else { "NO" }
        );
        pass_count += cell.pass as usize;
        if cell.delta == 1.0 && cell.result.empirical_power < 0.99 {
            delta1_violation = true;
        }
    }
    println!(
        "summary: {pass_count}/{} cells within tolerance (seed {}, {} replicates)",
        cells.len(),
        seed.0,
        args.reps
    );

    if let Some(path) = &args.csv {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| ErrorOut::new("IoError", e.to_string()))?,
        );
        writeln!(
            w,
            "table,dim1,dim2,dim3,delta,setting,paper,empirical,abs_diff,tolerance,pass,rejections,replicates,degenerate"
        )
        .map_err(|e| ErrorOut::new("IoError", e.to_string()))?;
        for cell in &cells {
            let (a, b, c) = dims(cell);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                args.table,
                a,
                b,
                c,
                cell.delta,
                cell.setting,
                cell.paper,
                cell.result.empirical_power,
                cell.abs_diff,
                cell.tolerance,
                cell.pass,
                cell.result.rejections,
                cell.result.replicates,
                cell.result.degenerate_count
            )
            .map_err(|e| ErrorOut::new("IoError", e.to_string()))?;
        }
    }

    if delta1_violation {
        eprintln!("error: a delta = 1 cell fell below empirical power 0.99");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
