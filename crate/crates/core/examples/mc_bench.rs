//! Throughput probe for the Monte Carlo harness on the heaviest
//! reference-table cell.

use crt_subgroup::*;
use std::time::Instant;

fn main() {
    // heaviest reference-table cell: (60, 20, 40) = 192k observations
    let design = Design::level_two(60, 20, 40).unwrap();
    let icc = IccProfile::level_two(1.0, 0.2, 0.15, 0.1);
    let vc = icc_to_components(&icc, SubgroupLevel::LevelTwo).unwrap();
    let config = McConfig {
        design,
        fx: FixedEffects::new(0.0, 0.0, 0.5, 0.5),
        vc,
        alpha: 0.05,
        replicates: 50,
        seed: Seed(1),
        workers: 1,
    };
    let t = Instant::now();
    let r = run_mc(&config).unwrap();
    let dt = t.elapsed().as_secs_f64();
    let per_rep = dt / 50.0;
    println!("50 reps of (60,20,40): {:.2}s  ({:.1} ms/rep)  phi={}", dt, per_rep * 1000.0, r.empirical_power);
    println!("full table-two reproduction estimate: {:.0}s", per_rep / 192_000.0 * 882_000.0 * 1000.0 * 6.0);
}
