//! CSV dataset format: long records `cluster3,arm,cluster2,subgroup,unit,y`
//! (UTF-8, comma delimiter, LF endings), one row per observation.
//!
//! `simulate` writes outcomes with the shortest round-trip decimal
//! representation, so `analyze` recovers bit-identical values. `analyze`
//! accepts arbitrary integer ids in any row order: clusters are relabelled
//! internally (treated arm first, ids ascending, subgroup 1 before 2) and
//! validated for balance before estimation.

use crt_subgroup::{Design, SubgroupLevel, TrialData};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One observation row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvRecord {
    pub cluster3: i64,
    pub arm: u8,
    pub cluster2: i64,
    pub subgroup: u8,
    pub unit: i64,
    pub y: f64,
}

/// Structured failure modes of CSV ingestion, mirrored into the CLI's JSON
/// error output.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("unbalanced data: {0}")]
    Unbalanced(String),
}

/// Write a simulated dataset with 1-based ids in flat layout order.
pub fn write_trial_csv(path: &Path, data: &TrialData) -> std::io::Result<()> {
    let design = data.design();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "cluster3,arm,cluster2,subgroup,unit,y")?;
    let (d1, d2, d3) = data.axis_dims();
    for i in 0..2 * design.n3_per_arm() {
        let arm = u8::from(data.arm_treated(i));
        for a in 0..d1 {
            for b in 0..d2 {
                for k in 0..d3 {
                    let (j, g) = match design.subgroup_level() {
                        SubgroupLevel::LevelOne => (a, b),
                        SubgroupLevel::LevelTwo => (b, a),
                    };
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        i + 1,
                        arm,
                        j + 1,
                        g + 1,
                        k + 1,
                        data.y()[data.idx(i, a, b, k)]
                    )?;
                }
            }
        }
    }
    out.flush()
}

/// Read and validate a trial CSV, returning the relabelled balanced data.
pub fn read_trial_csv(path: &Path, level: SubgroupLevel) -> Result<TrialData, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CsvError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    {
        let headers = reader.headers().map_err(|e| CsvError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let expect = ["cluster3", "arm", "cluster2", "subgroup", "unit", "y"];
        if headers.iter().collect::<Vec<_>>() != expect {
            return Err(CsvError::Parse {
                line: 1,
                message: format!("header must be {}, got {:?}", expect.join(","), headers),
            });
        }
    }
    let mut records = Vec::new();
    for row in reader.deserialize::<CsvRecord>() {
        match row {
            Ok(rec) => {
                if rec.arm > 1 {
                    return Err(CsvError::Parse {
                        line: records.len() as u64 + 2,
                        message: format!("arm must be 0 or 1, got {}", rec.arm),
                    });
                }
                if !(rec.subgroup == 1 || rec.subgroup == 2) {
                    return Err(CsvError::Parse {
                        line: records.len() as u64 + 2,
                        message: format!("subgroup must be 1 or 2, got {}", rec.subgroup),
                    });
                }
                if !rec.y.is_finite() {
                    return Err(CsvError::Parse {
                        line: records.len() as u64 + 2,
                        message: format!("y must be finite, got {}", rec.y),
                    });
                }
                records.push(rec);
            }
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(records.len() as u64 + 2);
                return Err(CsvError::Parse {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    assemble(records, level)
}

type CellKey = (i64, u8); // (cluster2, subgroup) or (subgroup as key policy below)

struct Cluster {
    arm: u8,
    // (cluster2, subgroup) -> unit -> y
    cells: BTreeMap<CellKey, BTreeMap<i64, f64>>,
}

fn assemble(records: Vec<CsvRecord>, level: SubgroupLevel) -> Result<TrialData, CsvError> {
    if records.is_empty() {
        return Err(CsvError::Unbalanced("the file contains no data rows".into()));
    }
    let mut clusters: BTreeMap<i64, Cluster> = BTreeMap::new();
    for rec in &records {
        let cluster = clusters.entry(rec.cluster3).or_insert_with(|| Cluster {
            arm: rec.arm,
            cells: BTreeMap::new(),
        });
        if cluster.arm != rec.arm {
            return Err(CsvError::Unbalanced(format!(
                "arm is not constant within cluster3={}: saw both {} and {}",
                rec.cluster3, cluster.arm, rec.arm
            )));
        }
        let cell = cluster
            .cells
            .entry((rec.cluster2, rec.subgroup))
            .or_default();
        if cell.insert(rec.unit, rec.y).is_some() {
            return Err(CsvError::Unbalanced(format!(
                "duplicate observation (cluster3={}, cluster2={}, subgroup={}, unit={})",
                rec.cluster3, rec.cluster2, rec.subgroup, rec.unit
            )));
        }
    }

    // equal arms
    let treated: Vec<i64> = clusters
        .iter()
        .filter(|(_, c)| c.arm == 1)
        .map(|(&id, _)| id)
        .collect();
    let control: Vec<i64> = clusters
        .iter()
        .filter(|(_, c)| c.arm == 0)
        .map(|(&id, _)| id)
        .collect();
    if treated.len() != control.len() || treated.is_empty() {
        return Err(CsvError::Unbalanced(format!(
            "arms are unequal: {} treated vs {} control level-three clusters",
            treated.len(),
            control.len()
        )));
    }
    let n3 = treated.len();

    // every cluster must expose the same cell structure
    let reference = describe_cells(clusters.values().next().unwrap(), level)?;
    for (&id, cluster) in &clusters {
        let desc = describe_cells(cluster, level)?;
        if desc != reference {
            return Err(CsvError::Unbalanced(format!(
                "cluster3={id} has shape {desc:?}, expected {reference:?} (cluster2 counts x units per cell)"
            )));
        }
        // and every cell must carry the same number of units
        for ((c2, g), units) in &cluster.cells {
            if units.len() != reference.1 {
                return Err(CsvError::Unbalanced(format!(
                    "cell (cluster3={id}, cluster2={c2}, subgroup={g}) has {} rows, expected {}",
                    units.len(),
                    reference.1
                )));
            }
        }
    }
    let (per_subgroup_mid, per_cell_units) = reference;

    let design = match level {
        SubgroupLevel::LevelOne => {
            // per cluster2: both subgroups with n units each
            Design::level_one(n3, per_subgroup_mid, per_cell_units)
        }
        SubgroupLevel::LevelTwo => Design::level_two(n3, per_subgroup_mid, per_cell_units),
    }
    .map_err(|e| CsvError::Unbalanced(e.to_string()))?;

    // treated first, ids ascending within arms
    let ordered: Vec<i64> = treated.iter().chain(control.iter()).copied().collect();
    let mut y = Vec::with_capacity(design.total_observations());
    for &c3 in &ordered {
        let cluster = &clusters[&c3];
        match level {
            SubgroupLevel::LevelOne => {
                let mut c2_ids: Vec<i64> =
                    cluster.cells.keys().map(|&(c2, _)| c2).collect();
                c2_ids.dedup();
                for c2 in c2_ids {
                    for g in [1u8, 2u8] {
                        let cell = &cluster.cells[&(c2, g)];
                        y.extend(cell.values());
                    }
                }
            }
            SubgroupLevel::LevelTwo => {
                for g in [1u8, 2u8] {
                    let c2_ids: Vec<i64> = cluster
                        .cells
                        .keys()
                        .filter(|&&(_, gg)| gg == g)
                        .map(|&(c2, _)| c2)
                        .collect();
                    for c2 in c2_ids {
                        let cell = &cluster.cells[&(c2, g)];
                        y.extend(cell.values());
                    }
                }
            }
        }
    }
    TrialData::from_parts(design, y).map_err(|e| CsvError::Unbalanced(e.to_string()))
}

/// Returns (level-dependent mid count, units per cell) after checking the
/// cell pattern inside one cluster.
fn describe_cells(cluster: &Cluster, level: SubgroupLevel) -> Result<(usize, usize), CsvError> {
    let mut c2_by_subgroup: BTreeMap<u8, Vec<i64>> = BTreeMap::new();
    let mut unit_counts = BTreeMap::new();
    for (&(c2, g), units) in &cluster.cells {
        c2_by_subgroup.entry(g).or_default().push(c2);
        unit_counts.insert((c2, g), units.len());
    }
    let ones = c2_by_subgroup.get(&1).cloned().unwrap_or_default();
    let twos = c2_by_subgroup.get(&2).cloned().unwrap_or_default();
    let per_cell = *unit_counts.values().next().unwrap_or(&0);
    if let Some((&(c2, g), &count)) = unit_counts.iter().find(|(_, &c)| c != per_cell) {
        return Err(CsvError::Unbalanced(format!(
            "cell (cluster2={c2}, subgroup={g}) has {count} rows, expected {per_cell}"
        )));
    }
    match level {
        SubgroupLevel::LevelOne => {
            // both subgroups must appear in exactly the same level-two units
            if ones != twos {
                return Err(CsvError::Unbalanced(format!(
                    "subgroups cover different cluster2 sets: {ones:?} vs {twos:?}"
                )));
            }
            Ok((ones.len(), per_cell))
        }
        SubgroupLevel::LevelTwo => {
            if ones.len() != twos.len() {
                return Err(CsvError::Unbalanced(format!(
                    "subgroups have different level-two counts: {} vs {}",
                    ones.len(),
                    twos.len()
                )));
            }
            Ok((ones.len(), per_cell))
        }
    }
}
