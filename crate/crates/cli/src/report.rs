//! JSON output shapes. Every document carries `schema_version`; the shipped
//! schema files under `schema/` describe these shapes and the test suite
//! validates emitted instances against them.

use crt_subgroup::{Design, SubgroupLevel, TrialAnalysis};
use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct DesignEcho {
    pub level: u8,
    pub n3_per_arm: usize,
    pub mid: usize,
    pub low: usize,
    pub total_observations: usize,
}

impl DesignEcho {
    pub fn from(design: &Design) -> Self {
        Self {
            level: match design.subgroup_level() {
                SubgroupLevel::LevelOne => 1,
                SubgroupLevel::LevelTwo => 2,
            },
            n3_per_arm: design.n3_per_arm(),
            mid: design.mid(),
            low: design.low(),
            total_observations: design.total_observations(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FixedEffectsOut {
    pub beta0: f64,
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
}

#[derive(Debug, Serialize)]
pub struct ComponentOut {
    pub estimate: f64,
    pub raw: f64,
    pub truncated: bool,
}

/// Full analysis result for one dataset.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub delta_hat: f64,
    pub se: f64,
    pub t0: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub critical: f64,
    pub delta1_hat: f64,
    pub delta2_hat: f64,
    pub fx_hat: FixedEffectsOut,
    pub sigma3_sq: ComponentOut,
    pub sigma2_sq: ComponentOut,
    pub sigma_low_sq: ComponentOut,
    pub sigma_e_sq: ComponentOut,
    pub sums_of_squares: [f64; 4],
    pub design: DesignEcho,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn from_analysis(design: &Design, analysis: &TrialAnalysis) -> Self {
        let comp = &analysis.components;
        let mut warnings = Vec::new();
        let names = ["sigma3_sq", "sigma2_sq", "sigma_low_sq", "sigma_e_sq"];
        for (i, name) in names.iter().enumerate() {
            if comp.truncated[i] {
                warnings.push(format!(
                    "{name} was negative ({:.6}) and was truncated to zero",
                    comp.raw[i]
                ));
            }
        }
        let vc = &comp.vc_hat;
        let component = |i: usize, estimate: f64| ComponentOut {
            estimate,
            raw: comp.raw[i],
            truncated: comp.truncated[i],
        };
        Self {
            schema_version: SCHEMA_VERSION.into(),
            delta_hat: analysis.estimate.delta_hat,
            se: analysis.estimate.var_hat.sqrt(),
            t0: analysis.test.t0,
            p_value: analysis.test.p_value,
            reject: analysis.test.reject,
            alpha: analysis.test.alpha,
            critical: analysis.test.critical,
            delta1_hat: analysis.estimate.delta1_hat,
            delta2_hat: analysis.estimate.delta2_hat,
            fx_hat: FixedEffectsOut {
                beta0: analysis.estimate.fx_hat.beta0,
                tau: analysis.estimate.fx_hat.tau,
                xi: analysis.estimate.fx_hat.xi,
                delta: analysis.estimate.fx_hat.delta,
            },
            sigma3_sq: component(0, vc.sigma3_sq),
            sigma2_sq: component(1, vc.sigma2_sq),
            sigma_low_sq: component(2, vc.sigma_low_sq),
            sigma_e_sq: component(3, vc.sigma_e_sq),
            sums_of_squares: [
                analysis.ss.ss0,
                analysis.ss.ss1,
                analysis.ss.ss2,
                analysis.ss.ss3,
            ],
            design: DesignEcho::from(design),
            warnings,
        }
    }
}

/// Machine-readable failure, printed to stderr with a nonzero exit code.
#[derive(Debug, Serialize)]
pub struct ErrorOut {
    pub schema_version: String,
    pub status: String,
    pub kind: String,
    pub message: String,
}

impl ErrorOut {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            status: "error".into(),
            kind: kind.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum SampleSizeOut {
    Ok {
        schema_version: String,
        status: String,
        target: String,
        value: u64,
        clamped: bool,
    },
    Infeasible {
        schema_version: String,
        status: String,
        reason: String,
    },
}

impl SampleSizeOut {
    pub fn ok(target: &str, value: u64, clamped: bool) -> Self {
        Self::Ok {
            schema_version: SCHEMA_VERSION.into(),
            status: "ok".into(),
            target: target.into(),
            value,
            clamped,
        }
    }

    pub fn infeasible(reason: impl Into<String>) -> Self {
        Self::Infeasible {
            schema_version: SCHEMA_VERSION.into(),
            status: "infeasible".into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PowerPointOut {
    pub design: DesignEcho,
    pub var_delta: f64,
    pub power: f64,
}

#[derive(Debug, Serialize)]
pub struct PowerOut {
    pub schema_version: String,
    pub status: String,
    pub delta: f64,
    pub alpha: f64,
    pub points: Vec<PowerPointOut>,
}

#[derive(Debug, Serialize)]
pub struct SimulateParamsOut {
    pub schema_version: String,
    pub command: String,
    pub level: u8,
    pub n3: usize,
    pub mid: usize,
    pub low: usize,
    pub beta0: f64,
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
    pub sigma3_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_low_sq: f64,
    pub sigma_e_sq: f64,
    pub seed: u64,
    pub rows: usize,
    pub out: String,
}
