//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all). Tolerances are
//! pinned in code; seeds are fixed so every run is reproducible.
//!
//! Criterion 5 is expected to fail for level-one subgrouping and the test
//! documents why: the level-one plug-in variance formula
//! `4(sigma_e^2 + n*N2*sigma_grp^2)/(N3*N2*n)` treats the subgroup intercept
//! as shared across level-two units, while the generative model draws one
//! intercept per (level-2 unit, subgroup) cell, whose differential-effect
//! variance is `4(sigma_e^2 + n*sigma_grp^2)/(N3*N2*n)`. The test statistic
//! divides by the larger value, which is exactly why the level-one test is
//! strongly conservative (empirical size near 0.002 at nominal 0.05 in the
//! table reproductions). The level-two half of the criterion passes.

use crt_subgroup::*;
use nalgebra::DMatrix;
use std::process::Command;
use std::time::Instant;

fn pass(criterion: u8, title: &str, detail: String) {
    println!("criterion {criterion} ({title}): PASS - {detail}");
}

fn fail(criterion: u8, title: &str, detail: String) -> ! {
    println!("criterion {criterion} ({title}): FAIL - {detail}");
    panic!("criterion {criterion} ({title}) failed: {detail}");
}

fn setting1(level: SubgroupLevel) -> VarianceComponents {
    let icc = match level {
        SubgroupLevel::LevelOne => IccProfile::level_one(1.0, 0.2, 0.15, 0.15, 0.1),
        SubgroupLevel::LevelTwo => IccProfile::level_two(1.0, 0.2, 0.15, 0.1),
    };
    icc_to_components(&icc, level).unwrap()
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn check_table(criterion: u8, title: &str, table: TableId, seed: u64, budget_secs: u64) {
    let start = Instant::now();
    let cells = reproduce_table(table, Seed(seed), 1000, workers()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let failures: Vec<String> = cells
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            format!(
                "({},{},{}) delta={} setting={} paper={} ours={:.3}",
                c.design.n3_per_arm(),
                c.design.mid(),
                c.design.low(),
                c.delta,
                c.setting,
                c.paper,
                c.result.empirical_power
            )
        })
        .collect();
    let delta1_ok = cells
        .iter()
        .filter(|c| c.delta == 1.0)
        .all(|c| c.result.empirical_power >= 0.99);
    // empirical power is monotone in delta within every (design, setting)
    for block in cells.chunks(6) {
        for s in 0..2 {
            let phi: Vec<f64> = (0..3).map(|d| block[d * 2 + s].result.empirical_power).collect();
            assert!(
                phi[0] <= phi[1] && phi[1] <= phi[2],
                "power not monotone in delta at {:?} setting {}: {phi:?}",
                block[0].design,
                s + 1
            );
        }
    }
    // level-one type-I rates stay at or below nominal + 3 SEs
    if matches!(table, TableId::One) {
        for cell in cells.iter().filter(|c| c.delta == 0.0) {
            assert!(
                cell.result.empirical_power <= 0.05 + 3.0 * cell.result.binomial_se.max(0.001),
                "type-I rate {} too high at {:?}",
                cell.result.empirical_power,
                cell.design
            );
        }
    }
    if !failures.is_empty() || !delta1_ok || elapsed > budget_secs as f64 {
        fail(
            criterion,
            title,
            format!(
                "{}/72 cells in tolerance, delta1_ok={delta1_ok}, {elapsed:.0}s (budget {budget_secs}s): {failures:?}",
                72 - failures.len()
            ),
        );
    }
    pass(
        criterion,
        title,
        format!("72/72 cells within 3 binomial SEs (seed {seed}, 1000 reps, {elapsed:.0}s)"),
    );
}

#[test]
fn criterion_01_table1_reproduction() {
    check_table(1, "table 1 reproduction", TableId::One, 1, 300);
}

#[test]
fn criterion_02_table2_reproduction() {
    check_table(2, "table 2 reproduction", TableId::Two, 1, 900);
}

fn instance_dims(idx: u64) -> (usize, usize, usize) {
    let seed = idx.wrapping_mul(2654435761);
    let pick = |s: u64| (2 + (s % 3)) as usize;
    (pick(seed), pick(seed / 3), pick(seed / 9))
}

#[test]
fn criterion_03_oracle_equivalence() {
    let start = Instant::now();
    let fx = FixedEffects::new(0.6, -0.8, 1.1, 0.4);
    let mut checked = 0;
    for level in [SubgroupLevel::LevelOne, SubgroupLevel::LevelTwo] {
        let vc = VarianceComponents::new(level, 3.0, 2.0, 1.5, 1.0).unwrap();
        for idx in 0..20u64 {
            let (a, b, c) = instance_dims(idx);
            let design = match level {
                SubgroupLevel::LevelOne => Design::level_one(a, b, c).unwrap(),
                SubgroupLevel::LevelTwo => Design::level_two(a, b, c).unwrap(),
            };
            // first seed in the instance's block whose closed-form estimate
            // keeps all four components interior (truncation-free)
            let (data, comp) = (0..)
                .map(|s| {
                    let data = simulate(&design, &fx, &vc, Seed(idx * 10_000 + s)).unwrap();
                    let comp = variance_components_mle(&sums_of_squares(&data), &design);
                    (data, comp)
                })
                .find(|(_, comp)| comp.truncated == [false; 4])
                .unwrap();
            let est = estimate_delta(&data, &comp);

            // closed-form fixed effects equal dense GLS to 1e-10 absolute
            let gls = gls_fixed_effects(&data, &vc).unwrap();
            for (name, got, want) in [
                ("beta0", gls.beta0, est.fx_hat.beta0),
                ("tau", gls.tau, est.fx_hat.tau),
                ("xi", gls.xi, est.fx_hat.xi),
                ("delta", gls.delta, est.delta_hat),
            ] {
                if (got - want).abs() > 1e-10 {
                    fail(3, "oracle equivalence", format!("{level:?} idx {idx}: GLS {name} {got} vs {want}"));
                }
            }

            // closed-form components match the numeric likelihood maximum
            let (_, vc_num) = numeric_ml(&data).unwrap();
            for (name, got, want) in [
                ("sigma3_sq", vc_num.sigma3_sq, comp.vc_hat.sigma3_sq),
                ("sigma2_sq", vc_num.sigma2_sq, comp.vc_hat.sigma2_sq),
                ("sigma_low_sq", vc_num.sigma_low_sq, comp.vc_hat.sigma_low_sq),
                ("sigma_e_sq", vc_num.sigma_e_sq, comp.vc_hat.sigma_e_sq),
            ] {
                let ok = if want == 0.0 {
                    got.abs() <= 1e-6
                } else {
                    (got - want).abs() / want <= 1e-6
                };
                if !ok {
                    fail(3, "oracle equivalence", format!("{level:?} idx {idx}: numeric {name} {got} vs closed {want}"));
                }
            }
            checked += 1;
        }
    }
    pass(
        3,
        "oracle equivalence",
        format!(
            "{checked} instances: GLS to 1e-10, numeric ML to 1e-6 relative ({:.1}s)",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_closed_form_inverse() {
    let mut designs = 0;
    let mut worst: f64 = 0.0;
    for n3 in 1..=4 {
        for mid in 2..=4 {
            for low in 2..=4 {
                for level in [SubgroupLevel::LevelOne, SubgroupLevel::LevelTwo] {
                    let design = match level {
                        SubgroupLevel::LevelOne => Design::level_one(n3, mid, low),
                        SubgroupLevel::LevelTwo => Design::level_two(n3, mid, low),
                    }
                    .unwrap();
                    let vc = VarianceComponents::new(level, 0.7, 0.4, 0.3, 0.9).unwrap();
                    let v = build_covariance(&design, &vc).unwrap();
                    let vinv = inverse_covariance_closed_form(&design, &vc).unwrap();
                    let err = (v.matrix() * vinv.matrix() - DMatrix::identity(v.dim(), v.dim()))
                        .abs()
                        .max();
                    worst = worst.max(err);
                    if err > 1e-10 {
                        fail(4, "closed-form inverse", format!("{design:?}: V*Vinv off by {err:.2e}"));
                    }
                    designs += 1;
                }
            }
        }
    }
    pass(
        4,
        "closed-form inverse",
        format!("V * Vinv = I on {designs} designs, worst deviation {worst:.1e}"),
    );
}

#[test]
fn criterion_05_variance_formula_vs_monte_carlo() {
    let reps = 5000usize;
    let mut report = Vec::new();
    let mut violations = Vec::new();
    for (design, level) in [
        (Design::level_one(5, 6, 15).unwrap(), SubgroupLevel::LevelOne),
        (Design::level_two(10, 15, 20).unwrap(), SubgroupLevel::LevelTwo),
    ] {
        let vc = setting1(level);
        let fx = FixedEffects::new(0.0, 0.0, 0.5, 0.5);
        let mut deltas = Vec::with_capacity(reps);
        for r in 0..reps {
            let data = simulate(&design, &fx, &vc, substream_seed(Seed(815), r as u64)).unwrap();
            let comp = variance_components_mle(&sums_of_squares(&data), &design);
            deltas.push(estimate_delta(&data, &comp).delta_hat);
        }
        let mean = deltas.iter().sum::<f64>() / reps as f64;
        let mc_var =
            deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (reps - 1) as f64;
        let formula = var_delta_formula(&design, &vc);
        let rel = (mc_var - formula).abs() / formula;
        report.push(format!(
            "{level:?}: MC {mc_var:.5} vs formula {formula:.5} ({:.1}% apart)",
            rel * 100.0
        ));
        if rel > 0.10 {
            violations.push(format!(
                "{level:?}: Monte Carlo Var(delta_hat) = {mc_var:.5} vs plug-in formula {formula:.5} ({:.0}% apart)",
                rel * 100.0
            ));
        }
    }
    if !violations.is_empty() {
        fail(
            5,
            "variance formula vs Monte Carlo",
            format!(
                "{}. The level-one formula counts the subgroup intercept at weight n*N2 \
                 (shared across level-two units) while the generative model draws it per \
                 (level-2 unit, subgroup) cell, weight n; the statistic divides by the \
                 larger value, making the level-one test conservative. Level two is exact.",
                violations.join("; ")
            ),
        );
    }
    pass(5, "variance formula vs Monte Carlo", report.join("; "));
}

#[test]
fn criterion_06_unbiasedness() {
    let start = Instant::now();
    let reps = 2000usize;
    let mut lines = Vec::new();
    for level in [SubgroupLevel::LevelOne, SubgroupLevel::LevelTwo] {
        // large N3 with minimal cells: the operational estimators replace
        // true means with arm means, an O(1/N3) effect that must sit inside
        // the Monte Carlo resolution for the claim to be testable
        let design = match level {
            SubgroupLevel::LevelOne => Design::level_one(2000, 2, 2).unwrap(),
            SubgroupLevel::LevelTwo => Design::level_two(2000, 2, 2).unwrap(),
        };
        let vc = setting1(level);
        let fx = FixedEffects::new(0.0, 0.0, 0.5, 0.5);
        let truth = [vc.sigma3_sq, vc.sigma2_sq, vc.sigma_low_sq, vc.sigma_e_sq, fx.delta];
        let names = ["sigma3_sq", "sigma2_sq", "sigma_low_sq", "sigma_e_sq", "delta_hat"];
        let mut samples: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(reps)).collect();
        for r in 0..reps {
            let data = simulate(&design, &fx, &vc, substream_seed(Seed(0), r as u64)).unwrap();
            let comp = variance_components_mle(&sums_of_squares(&data), &design);
            for i in 0..4 {
                samples[i].push(comp.raw[i]);
            }
            samples[4].push(estimate_delta(&data, &comp).delta_hat);
        }
        let mut zs = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            let mean = s.iter().sum::<f64>() / reps as f64;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
            let se = (var / reps as f64).sqrt();
            let z = (mean - truth[i]) / se;
            if z.abs() > 3.0 {
                fail(
                    6,
                    "unbiasedness",
                    format!("{level:?} {}: mean {mean:.6} vs truth {:.6} is {z:.2} MC SEs", names[i], truth[i]),
                );
            }
            zs.push(format!("{}={z:+.2}", names[i]));
        }
        lines.push(format!("{level:?} z-scores [{}]", zs.join(", ")));
    }
    pass(
        6,
        "unbiasedness",
        format!("{} ({:.0}s, 2000 reps each)", lines.join("; "), start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_07_sample_size_minimality() {
    // independent integer grid search over >= 100 parameter points
    let zsum = |alpha: f64, power: f64| {
        normal_quantile(1.0 - alpha / 2.0).unwrap() + normal_quantile(power).unwrap()
    };
    let mut points = 0;
    let mut infeasible = 0;
    for &delta in &[0.25, 0.5, 1.0] {
        for &alpha in &[0.01, 0.05] {
            for &power in &[0.8, 0.9] {
                for &(s3, s2, sl, se) in &[
                    (0.05, 0.02, 0.02, 0.8),
                    (0.1, 0.05, 0.05, 0.8),
                    (0.0, 0.0, 0.0, 1.0),
                ] {
                    for &(n3, other) in &[(5usize, 6usize), (10, 15), (20, 4)] {
                        let spec = PowerSpec::new(alpha, power, delta).unwrap();
                        let z = zsum(alpha, power);
                        let thr = delta * delta / (z * z);
                        points += 2;

                        let vc1 = VarianceComponents::new(SubgroupLevel::LevelOne, s3, s2, sl, se)
                            .unwrap();
                        let var1 = |n: u64| {
                            4.0 * (se + (n as f64) * other as f64 * sl)
                                / ((n3 * other) as f64 * n as f64)
                        };
                        match required_n_level1(&spec, n3, other, &vc1) {
                            Ok(size) => {
                                let holds = |n: u64| delta * delta / var1(n) >= z * z;
                                if !holds(size.value)
                                    || (!size.clamped && size.value > 1 && holds(size.value - 1))
                                {
                                    fail(7, "sample-size minimality", format!("level1 at ({delta},{alpha},{power},{n3},{other}): size {}", size.value));
                                }
                            }
                            Err(Error::Infeasible(_)) => {
                                infeasible += 1;
                                if thr > 4.0 * sl / n3 as f64 {
                                    fail(7, "sample-size minimality", "spurious infeasibility (level 1)".into());
                                }
                            }
                            Err(e) => fail(7, "sample-size minimality", e.to_string()),
                        }

                        let vc2 = VarianceComponents::new(SubgroupLevel::LevelTwo, s3, s2, sl, se)
                            .unwrap();
                        let var2 = |n1: u64| {
                            4.0 * (se + n1 as f64 * sl + (other as f64) * n1 as f64 * s2)
                                / ((n3 * other) as f64 * n1 as f64)
                        };
                        match required_n1_level2(&spec, n3, other, &vc2) {
                            Ok(size) => {
                                let holds = |n1: u64| delta * delta / var2(n1) >= z * z;
                                if !holds(size.value)
                                    || (!size.clamped && size.value > 1 && holds(size.value - 1))
                                {
                                    fail(7, "sample-size minimality", format!("level2 at ({delta},{alpha},{power},{n3},{other}): size {}", size.value));
                                }
                            }
                            Err(Error::Infeasible(_)) => {
                                infeasible += 1;
                                if thr > 4.0 * (sl + other as f64 * s2) / ((n3 * other) as f64) {
                                    fail(7, "sample-size minimality", "spurious infeasibility (level 2)".into());
                                }
                            }
                            Err(e) => fail(7, "sample-size minimality", e.to_string()),
                        }
                    }
                }
            }
        }
    }

    // the worked cases from the formulas
    let vc = VarianceComponents::new(SubgroupLevel::LevelOne, 0.1, 0.05, 0.05, 0.8).unwrap();
    let spec = PowerSpec::new(0.05, 0.8, 1.0).unwrap();
    if required_n_level1(&spec, 5, 6, &vc).unwrap().value != 2 {
        fail(7, "sample-size minimality", "worked level-one case should give n = 2".into());
    }
    let spec05 = PowerSpec::new(0.05, 0.8, 0.5).unwrap();
    if !matches!(required_n_level1(&spec05, 5, 6, &vc), Err(Error::Infeasible(_))) {
        fail(7, "sample-size minimality", "worked level-one case at delta 0.5 should be infeasible".into());
    }
    let vc = VarianceComponents::new(SubgroupLevel::LevelTwo, 0.1, 0.05, 0.05, 0.8).unwrap();
    if required_n1_level2(&spec05, 10, 15, &vc).unwrap().value != 3 {
        fail(7, "sample-size minimality", "worked level-two case should give N1 = 3".into());
    }

    // subgroup formulas against their own grid oracle
    let zsum1 = |alpha: f64, power: f64| {
        normal_quantile(1.0 - alpha).unwrap() + normal_quantile(power).unwrap()
    };
    for &(alpha, power, d) in &[(0.05, 0.8, 0.4), (0.01, 0.9, 0.5), (0.05, 0.9, 0.25)] {
        for icc in [
            IccProfile::level_one(1.0, 0.2, 0.15, 0.15, 0.1),
            IccProfile::level_one(1.0, 0.0, 0.0, 0.0, 0.0),
        ] {
            for &(n_other, n3) in &[(6usize, 20usize), (4, 10), (8, 40)] {
                points += 2;
                let spec = SubgroupPowerSpec::new(alpha, power, d).unwrap();
                let z = zsum1(alpha, power);
                let c = 2.0 * z * z;
                let ok1 = |v: u64| {
                    d * d * v as f64 * (n_other * n3) as f64
                        >= c * (1.0
                            + icc.rho1 * (v as f64 - 1.0)
                            + icc.rho_2p * v as f64 * (n_other as f64 - 1.0))
                };
                match required_subgroup_n_level1(&spec, n_other, n3, &icc) {
                    Ok(size) => {
                        if !ok1(size.value) || (size.value > 1 && ok1(size.value - 1)) {
                            fail(7, "sample-size minimality", format!("subgroup level1 size {}", size.value));
                        }
                    }
                    Err(Error::Infeasible(_)) => {
                        infeasible += 1;
                        let denom = d * d * (n_other * n3) as f64
                            - c * (icc.rho1 + (n_other as f64 - 1.0) * icc.rho_2p);
                        if denom > 0.0 {
                            fail(7, "sample-size minimality", "spurious subgroup infeasibility".into());
                        }
                    }
                    Err(e) => fail(7, "sample-size minimality", e.to_string()),
                }
                let ok2 = |v: u64| {
                    d * d * (n_other * n3) as f64 * v as f64
                        >= c * (1.0
                            + icc.rho1 * (n_other as f64 - 1.0)
                            + icc.rho_2p * n_other as f64 * (v as f64 - 1.0))
                };
                match required_subgroup_n_level2(&spec, n_other, n3, &icc) {
                    Ok(size) => {
                        if !ok2(size.value) || (size.value > 1 && ok2(size.value - 1)) {
                            fail(7, "sample-size minimality", format!("subgroup level2 size {}", size.value));
                        }
                    }
                    Err(Error::Infeasible(_)) => {
                        infeasible += 1;
                        let denom =
                            d * d * (n_other * n3) as f64 - c * icc.rho_2p * n_other as f64;
                        if denom > 0.0 {
                            fail(7, "sample-size minimality", "spurious subgroup infeasibility".into());
                        }
                    }
                    Err(e) => fail(7, "sample-size minimality", e.to_string()),
                }
            }
        }
    }
    if points < 100 {
        fail(7, "sample-size minimality", format!("only {points} grid points exercised"));
    }
    pass(
        7,
        "sample-size minimality",
        format!("{points} grid points ({infeasible} infeasible), all minimal per the integer oracle"),
    );
}

#[test]
fn criterion_08_invariance_suite() {
    let tol = 1e-10;
    for idx in 0..50u64 {
        let seed = idx.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(17);
        let pick = |s: u64, m: u64| 2 + (s % m) as usize;
        let level = if seed % 2 == 0 { SubgroupLevel::LevelOne } else { SubgroupLevel::LevelTwo };
        let design = match level {
            SubgroupLevel::LevelOne => {
                Design::level_one(pick(seed / 2, 3), pick(seed / 7, 3), pick(seed / 21, 3)).unwrap()
            }
            SubgroupLevel::LevelTwo => {
                Design::level_two(pick(seed / 2, 3), pick(seed / 7, 3), pick(seed / 21, 3)).unwrap()
            }
        };
        let vc = VarianceComponents::new(
            level,
            (seed % 11) as f64 / 10.0,
            (seed % 7) as f64 / 10.0,
            (seed % 5) as f64 / 10.0,
            0.3 + (seed % 13) as f64 / 10.0,
        )
        .unwrap();
        let fx = FixedEffects::new(0.4, -0.6, 0.8, 0.5);
        let data = simulate(&design, &fx, &vc, Seed(seed)).unwrap();
        let base = analyze_trial(&data, 0.05).unwrap();

        let shifted = analyze_trial(&data.shifted(3.1), 0.05).unwrap();
        let arm = analyze_trial(&data.arm_shifted(-2.2), 0.05).unwrap();
        let scaled = analyze_trial(&data.scaled(1.7), 0.05).unwrap();
        let checks = [
            ("location delta", (shifted.estimate.delta_hat - base.estimate.delta_hat).abs()),
            ("location tau", (shifted.estimate.fx_hat.tau - base.estimate.fx_hat.tau).abs()),
            ("location xi", (shifted.estimate.fx_hat.xi - base.estimate.fx_hat.xi).abs()),
            ("location beta0", (shifted.estimate.fx_hat.beta0 - base.estimate.fx_hat.beta0 - 3.1).abs()),
            ("location ss0", (shifted.ss.ss0 - base.ss.ss0).abs() / (1.0 + base.ss.ss0)),
            ("location vc", (shifted.components.raw[0] - base.components.raw[0]).abs()),
            ("arm delta", (arm.estimate.delta_hat - base.estimate.delta_hat).abs()),
            ("arm tau", (arm.estimate.fx_hat.tau - base.estimate.fx_hat.tau).abs()),
            ("arm xi", (arm.estimate.fx_hat.xi - base.estimate.fx_hat.xi + 2.2).abs()),
            ("scale delta", (scaled.estimate.delta_hat - 1.7 * base.estimate.delta_hat).abs()),
            (
                "scale var",
                (scaled.estimate.var_hat - 1.7 * 1.7 * base.estimate.var_hat).abs()
                    / (1.0 + base.estimate.var_hat),
            ),
            ("scale t0", (scaled.test.t0 - base.test.t0).abs()),
            ("scale p", (scaled.test.p_value - base.test.p_value).abs()),
        ];
        for (name, err) in checks {
            if err > tol {
                fail(8, "invariance suite", format!("instance {idx} ({design:?}): {name} off by {err:.2e}"));
            }
        }
        if scaled.test.reject != base.test.reject {
            fail(8, "invariance suite", format!("instance {idx}: scaling changed the decision"));
        }
    }
    pass(8, "invariance suite", "location/arm/scale invariances hold to 1e-10 on 50 instances".into());
}

#[test]
fn criterion_09_cli_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trial.csv");
    let bin = env!("CARGO_BIN_EXE_crt-subgroup");
    let status = Command::new(bin)
        .args([
            "simulate", "--level", "1", "--n3", "6", "--mid", "8", "--low", "50",
            "--xi", "0.5", "--delta", "1.0", "--icc", "1.0,0.2,0.15,0.15,0.1",
            "--seed", "20", "--out", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(bin)
        .args(["analyze", csv.to_str().unwrap(), "--level", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    // bit-exact agreement with the in-memory pipeline
    let design = Design::level_one(6, 8, 25).unwrap();
    let vc = setting1(SubgroupLevel::LevelOne);
    let data = simulate(&design, &FixedEffects::new(0.0, 0.0, 0.5, 1.0), &vc, Seed(20)).unwrap();
    let analysis = analyze_trial(&data, 0.05).unwrap();
    let mismatches: Vec<&str> = [
        ("delta_hat", report["delta_hat"].as_f64().unwrap(), analysis.estimate.delta_hat),
        ("t0", report["t0"].as_f64().unwrap(), analysis.test.t0),
        ("p_value", report["p_value"].as_f64().unwrap(), analysis.test.p_value),
        ("se", report["se"].as_f64().unwrap(), analysis.estimate.var_hat.sqrt()),
        ("beta0", report["fx_hat"]["beta0"].as_f64().unwrap(), analysis.estimate.fx_hat.beta0),
        ("ss0", report["sums_of_squares"][0].as_f64().unwrap(), analysis.ss.ss0),
        (
            "sigma_e_sq",
            report["sigma_e_sq"]["estimate"].as_f64().unwrap(),
            analysis.components.vc_hat.sigma_e_sq,
        ),
    ]
    .iter()
    .filter(|(_, a, b)| a.to_bits() != b.to_bits())
    .map(|(n, _, _)| *n)
    .collect();
    if !mismatches.is_empty() {
        fail(9, "CLI round trip", format!("fields not bit-exact after CSV round trip: {mismatches:?}"));
    }
    // a delta = 1 dataset at this design rejects decisively
    if !(report["reject"].as_bool().unwrap() && report["p_value"].as_f64().unwrap() < 0.001) {
        fail(9, "CLI round trip", "delta = 1 instance should reject with p < 0.001".into());
    }

    // malformed inputs give the specified structured errors
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(7);
    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, lines.join("\n")).unwrap();
    let out = Command::new(bin)
        .args(["analyze", missing.to_str().unwrap(), "--level", "1"])
        .output()
        .unwrap();
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    if out.status.code() != Some(2) || err["kind"] != "UnbalancedData" {
        fail(9, "CLI round trip", format!("missing-row file should yield UnbalancedData, got {err}"));
    }

    let constant: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                l.to_string()
            } else {
                let mut parts: Vec<&str> = l.split(',').collect();
                parts[5] = "1.5";
                parts.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, constant).unwrap();
    let out = Command::new(bin)
        .args(["analyze", flat.to_str().unwrap(), "--level", "1"])
        .output()
        .unwrap();
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    if out.status.code() != Some(2) || err["kind"] != "DegenerateVariance" {
        fail(9, "CLI round trip", format!("constant file should yield DegenerateVariance, got {err}"));
    }

    pass(9, "CLI round trip", "simulate -> CSV -> analyze bit-exact; structured errors verified".into());
}
