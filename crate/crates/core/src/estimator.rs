//! Cell means, sums of squares, closed-form variance-component MLEs with
//! zero-truncation, and the differential-effect estimate with its plug-in
//! variance.
//!
//! The balanced covariance has four eigenvalue aggregates
//! `lambda_0 <= lambda_1 <= lambda_2 <= lambda_3`, one per contrast space,
//! each estimated by a sum of squares over its dimension count; the
//! variance-component MLEs are scaled differences of consecutive aggregates.
//! Negative components are truncated at zero (equivalent to dropping that
//! random effect), and the plug-in variance of `delta_hat` uses the
//! truncated values.

use crate::design::{Design, FixedEffects, SubgroupLevel, VarianceComponents};

use crate::inference::{test_delta, TestResult};
use crate::sim::TrialData;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which form of `SS_0` to use for level-two subgrouping.
///
/// The within-cell residual form is the maximum-likelihood quantity (its
/// contrast space has dimension `2*N3*2n*(N1-1)` and eigenvalue
/// `sigma_e^2`); it is also the only form used for level-one subgrouping.
/// The grand-mean form `N1 * sum (Ybar_cell - Ybar_grand)^2` reproduces the
/// printed level-two display verbatim and is exposed for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsZeroForm {
    #[default]
    WithinCell,
    GrandMeanCells,
}

/// The four sums of squares plus the cell/arm means they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumsOfSquares {
    pub ss0: f64,
    pub ss1: f64,
    pub ss2: f64,
    pub ss3: f64,
    /// Arm-by-subgroup outcome means `[treated sub1, treated sub2]`.
    pub treated_subgroup_means: [f64; 2],
    /// `[control sub1, control sub2]`.
    pub control_subgroup_means: [f64; 2],
    /// Grand means of the treated and control arms.
    pub treated_mean: f64,
    pub control_mean: f64,
}

/// Lowest-level cell means in flat `(i, a, b)` order plus arm summaries.
struct CellMeans {
    cells: Vec<f64>,
    summary: ArmMeans,
}

struct ArmMeans {
    treated_subgroup: [f64; 2],
    control_subgroup: [f64; 2],
    treated: f64,
    control: f64,
}

fn cell_means(data: &TrialData) -> CellMeans {
    let design = data.design();
    let (d1, d2, d3) = data.axis_dims();
    let n3 = design.n3_per_arm();
    let units = 2 * n3;
    let y = data.y();

    let mut cells = vec![0.0; units * d1 * d2];
    for (c, chunk) in cells.iter_mut().zip(y.chunks_exact(d3)) {
        *c = chunk.iter().sum::<f64>() / d3 as f64;
    }

    // Subgroup means per arm, averaged over the cells of that subgroup.
    let mut sums = [[0.0f64; 2]; 2]; // [arm][subgroup]
    for i in 0..units {
        let arm = usize::from(i >= n3); // 0 = treated
        for a in 0..d1 {
            for b in 0..d2 {
                let g = match design.subgroup_level() {
                    SubgroupLevel::LevelOne => b,
                    SubgroupLevel::LevelTwo => a,
                };
                sums[arm][g] += cells[(i * d1 + a) * d2 + b];
            }
        }
    }
    let cells_per_arm_subgroup = (n3 * d1 * d2 / 2) as f64;
    let m = |arm: usize, g: usize| sums[arm][g] / cells_per_arm_subgroup;
    let treated_subgroup = [m(0, 0), m(0, 1)];
    let control_subgroup = [m(1, 0), m(1, 1)];
    CellMeans {
        cells,
        summary: ArmMeans {
            treated_subgroup,
            control_subgroup,
            treated: 0.5 * (treated_subgroup[0] + treated_subgroup[1]),
            control: 0.5 * (control_subgroup[0] + control_subgroup[1]),
        },
    }
}

/// Sum of squared deviations of `values` from their own mean.
fn centered_sq(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Compute `SS_0..SS_3` with the default within-cell `SS_0`.
pub fn sums_of_squares(data: &TrialData) -> SumsOfSquares {
    sums_of_squares_with(data, SsZeroForm::WithinCell)
}

/// Compute the sums of squares, selecting the `SS_0` form for level-two
/// subgrouping (the flag has no effect on level-one designs, whose `SS_0`
/// is the within-cell residual sum by definition).
pub fn sums_of_squares_with(data: &TrialData, ss0_form: SsZeroForm) -> SumsOfSquares {
    let design = data.design();
    let (_, _, d3) = data.axis_dims();
    let n3 = design.n3_per_arm();
    let units = 2 * n3;
    let y = data.y();
    let CellMeans { cells, summary } = cell_means(data);

    // Within-cell residual sum, shared by both levels.
    let within: f64 = cells
        .iter()
        .zip(y.chunks_exact(d3))
        .map(|(c, chunk)| chunk.iter().map(|v| (v - c) * (v - c)).sum::<f64>())
        .sum();

    let n = design.n_per_subgroup() as f64;
    let (ss0, ss1, ss2, ss3);
    match design.subgroup_level() {
        SubgroupLevel::LevelOne => {
            let n2 = design.mid();
            ss0 = within;

            // D_ij = Ybar_ij1. - Ybar_ij2., centered within each arm.
            let d: Vec<f64> = (0..units * n2)
                .map(|c| cells[c * 2] - cells[c * 2 + 1])
                .collect();
            ss1 = n * (centered_sq(&d[..n3 * n2]) + centered_sq(&d[n3 * n2..]));

            // Level-two block means centered within their level-three unit.
            let blocks: Vec<f64> = (0..units * n2)
                .map(|c| 0.5 * (cells[c * 2] + cells[c * 2 + 1]))
                .collect();
            let unit_means: Vec<f64> = blocks
                .chunks_exact(n2)
                .map(|b| b.iter().sum::<f64>() / n2 as f64)
                .collect();
            ss2 = 2.0
                * n
                * blocks
                    .chunks_exact(n2)
                    .zip(&unit_means)
                    .map(|(b, u)| b.iter().map(|v| (v - u) * (v - u)).sum::<f64>())
                    .sum::<f64>();
            ss3 = n2 as f64
                * 2.0
                * n
                * (centered_sq(&unit_means[..n3]) + centered_sq(&unit_means[n3..]));
        }
        SubgroupLevel::LevelTwo => {
            let n1 = design.low() as f64;
            ss0 = match ss0_form {
                SsZeroForm::WithinCell => within,
                SsZeroForm::GrandMeanCells => {
                    let grand = 0.5 * (summary.treated + summary.control);
                    n1 * cells.iter().map(|c| (c - grand) * (c - grand)).sum::<f64>()
                }
            };

            // Within-(i, g) spread of the level-two cell means.
            let nn = design.n_per_subgroup();
            let sub_means: Vec<f64> = cells
                .chunks_exact(nn)
                .map(|c| c.iter().sum::<f64>() / nn as f64)
                .collect(); // (i, g) flat
            ss1 = n1
                * cells
                    .chunks_exact(nn)
                    .zip(&sub_means)
                    .map(|(c, s)| c.iter().map(|v| (v - s) * (v - s)).sum::<f64>())
                    .sum::<f64>();

            let d: Vec<f64> = (0..units)
                .map(|i| sub_means[i * 2] - sub_means[i * 2 + 1])
                .collect();
            ss2 = n * n1 * (centered_sq(&d[..n3]) + centered_sq(&d[n3..]));

            let unit_means: Vec<f64> = (0..units)
                .map(|i| 0.5 * (sub_means[i * 2] + sub_means[i * 2 + 1]))
                .collect();
            ss3 = 2.0 * n * n1 * (centered_sq(&unit_means[..n3]) + centered_sq(&unit_means[n3..]));
        }
    }

    SumsOfSquares {
        ss0,
        ss1,
        ss2,
        ss3,
        treated_subgroup_means: summary.treated_subgroup,
        control_subgroup_means: summary.control_subgroup,
        treated_mean: summary.treated,
        control_mean: summary.control,
    }
}

/// Variance-component MLEs with zero-truncation flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimates {
    /// Post-truncation estimates.
    pub vc_hat: VarianceComponents,
    /// Pre-truncation estimates in `(sigma3, sigma2, sigma_low, sigma_e)`
    /// order; any of the first three may be negative.
    pub raw: [f64; 4],
    /// Truncation flags in the same order. The error-variance estimate is a
    /// ratio of a sum of squares to a positive divisor, so its flag never
    /// fires.
    pub truncated: [bool; 4],
}

impl ComponentEstimates {
    /// The lambda aggregates implied by the raw estimates,
    /// `(lambda0, lambda1, lambda2, lambda3)`.
    pub fn raw_lambdas(&self, design: &Design) -> [f64; 4] {
        let [s3, s2, sl, se] = self.raw;
        let n = design.n_per_subgroup() as f64;
        match design.subgroup_level() {
            SubgroupLevel::LevelOne => {
                let n2 = design.mid() as f64;
                [
                    se,
                    se + n * sl,
                    se + n * sl + 2.0 * n * s2,
                    se + n * sl + 2.0 * n * s2 + 2.0 * n * n2 * s3,
                ]
            }
            SubgroupLevel::LevelTwo => {
                let n1 = design.low() as f64;
                [
                    se,
                    se + n1 * sl,
                    se + n1 * sl + n * n1 * s2,
                    se + n1 * sl + n * n1 * s2 + 2.0 * n * n1 * s3,
                ]
            }
        }
    }
}

/// Closed-form maximum likelihood estimates of the variance components.
///
/// Each lambda aggregate is its sum of squares over the dimension of its
/// contrast space; components are scaled consecutive differences. All four
/// raw values are computed first, each is truncated at zero independently,
/// and downstream plug-ins use the truncated set.
pub fn variance_components_mle(ss: &SumsOfSquares, design: &Design) -> ComponentEstimates {
    let n3 = design.n3_per_arm() as f64;
    let n = design.n_per_subgroup() as f64;
    let (lam, scale): ([f64; 4], [f64; 3]) = match design.subgroup_level() {
        SubgroupLevel::LevelOne => {
            let n2 = design.mid() as f64;
            (
                [
                    ss.ss0 / (2.0 * n3 * n2 * 2.0 * (n - 1.0)),
                    ss.ss1 / (2.0 * n3 * n2 * 2.0),
                    ss.ss2 / (2.0 * n3 * (n2 - 1.0)),
                    ss.ss3 / (2.0 * n3),
                ],
                // divisors taking (lambda1-lambda0, lambda2-lambda1, lambda3-lambda2)
                // to (sigma_grp^2, sigma_2^2, sigma_3^2)
                [n, 2.0 * n, 2.0 * n * n2],
            )
        }
        SubgroupLevel::LevelTwo => {
            let n1 = design.low() as f64;
            (
                [
                    ss.ss0 / (2.0 * n3 * 2.0 * n * (n1 - 1.0)),
                    ss.ss1 / (2.0 * n3 * 2.0 * (n - 1.0)),
                    ss.ss2 / (2.0 * n3 * 2.0),
                    ss.ss3 / (2.0 * n3),
                ],
                [n1, n * n1, 2.0 * n * n1],
            )
        }
    };
    let raw_low = (lam[1] - lam[0]) / scale[0];
    let raw_2 = (lam[2] - lam[1]) / scale[1];
    let raw_3 = (lam[3] - lam[2]) / scale[2];
    let raw = [raw_3, raw_2, raw_low, lam[0]];
    let truncated = [raw_3 < 0.0, raw_2 < 0.0, raw_low < 0.0, false];
    let vc_hat = VarianceComponents::new(
        design.subgroup_level(),
        raw_3.max(0.0),
        raw_2.max(0.0),
        raw_low.max(0.0),
        lam[0],
    )
    .expect("truncated estimates are nonnegative");
    ComponentEstimates {
        vc_hat,
        raw,
        truncated,
    }
}

/// Differential treatment effect estimate with companions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// `delta_hat = delta1_hat - delta2_hat`, exactly.
    pub delta_hat: f64,
    /// Treated-vs-control contrast within Subgroup 1.
    pub delta1_hat: f64,
    /// Same within Subgroup 2.
    pub delta2_hat: f64,
    /// Plug-in variance of `delta_hat` using the truncated components.
    pub var_hat: f64,
    /// All four fixed-effect estimates from the GLS normal equations.
    pub fx_hat: FixedEffects,
}

/// MLE of the differential treatment effect and the remaining fixed effects.
///
/// `delta_hat` is the difference of the two subgroup-specific
/// treated-minus-control contrasts of arm means. The other fixed effects
/// solve the GLS normal equations in closed form: `tau_hat` is the control
/// arm's subgroup contrast, `beta0_hat = control mean - tau_hat/2`, and
/// `xi_hat = treated mean - control mean - delta_hat/2`. The plug-in
/// variance is `4(sigma_e^2 + n*N2*sigma_grp^2)/(N3*N2*n)` for level-one
/// subgrouping and `4(sigma_e^2 + N1*sigma_1^2 + n*N1*sigma_2^2)/(N3*n*N1)`
/// for level-two, evaluated at the truncated estimates.
pub fn estimate_delta(data: &TrialData, comp: &ComponentEstimates) -> DeltaEstimate {
    let design = data.design();
    debug_assert_eq!(comp.vc_hat.level, design.subgroup_level());
    let ss = cell_means(data).summary;
    let delta1_hat = ss.treated_subgroup[0] - ss.control_subgroup[0];
    let delta2_hat = ss.treated_subgroup[1] - ss.control_subgroup[1];
    let delta_hat = delta1_hat - delta2_hat;
    let tau = ss.control_subgroup[0] - ss.control_subgroup[1];
    let beta0 = ss.control - 0.5 * tau;
    let xi = ss.treated - ss.control - 0.5 * delta_hat;
    DeltaEstimate {
        delta_hat,
        delta1_hat,
        delta2_hat,
        var_hat: var_delta_plugin(design, &comp.vc_hat),
        fx_hat: FixedEffects::new(beta0, tau, xi, delta_hat),
    }
}

/// The plug-in variance formula shared with the power module.
pub(crate) fn var_delta_plugin(design: &Design, vc: &VarianceComponents) -> f64 {
    let n3 = design.n3_per_arm() as f64;
    let n = design.n_per_subgroup() as f64;
    match design.subgroup_level() {
        SubgroupLevel::LevelOne => {
            let n2 = design.mid() as f64;
            4.0 * (vc.sigma_e_sq + n * n2 * vc.sigma_low_sq) / (n3 * n2 * n)
        }
        SubgroupLevel::LevelTwo => {
            let n1 = design.low() as f64;
            4.0 * (vc.sigma_e_sq + n1 * vc.sigma_low_sq + n * n1 * vc.sigma2_sq) / (n3 * n * n1)
        }
    }
}

/// Full estimation-and-test pipeline for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialAnalysis {
    pub ss: SumsOfSquares,
    pub components: ComponentEstimates,
    pub estimate: DeltaEstimate,
    pub test: TestResult,
}

/// Run sums of squares, variance-component MLE, delta estimation and the
/// level-`alpha` test on one dataset.
pub fn analyze_trial(data: &TrialData, alpha: f64) -> Result<TrialAnalysis> {
    let ss = sums_of_squares(data);
    let components = variance_components_mle(&ss, data.design());
    let estimate = estimate_delta(data, &components);
    let test = test_delta(&estimate, alpha)?;
    Ok(TrialAnalysis {
        ss,
        components,
        estimate,
        test,
    })
}
