//! Analytic power lower bound and sample-size formulas.
//!
//! Power is bounded below by `Phi(|delta|/sqrt(Var(delta_hat)) -
//! z_{1-alpha/2})`, and a target power `phi = 1 - beta` is achieved once
//! `delta^2 / Var(delta_hat) >= (z_{1-alpha/2} + z_{1-beta})^2`. Since
//! `Var(delta_hat)` decomposes as `A/size + B` in the size being solved
//! for, the smallest admissible size has the closed form `A / (delta^2 /
//! (z+z)^2 - B)`; a nonpositive denominator means no finite size reaches
//! the power. The per-subgroup formulas from the supplementary material use
//! the `z_{1-alpha_g}` quantile exactly as printed, with a switch for the
//! two-sided variant.

use crate::design::{Design, IccProfile, VarianceComponents};
use crate::error::Error;
use crate::estimator::var_delta_plugin;
use crate::inference::{normal_cdf, normal_quantile};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Target size/power pair for detecting a differential effect `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub alpha: f64,
    /// Target power `phi = 1 - beta`.
    pub power: f64,
    pub delta: f64,
    /// When `false` (default) the rejection quantile is `z_{1-alpha/2}` as in
    /// the sample-size propositions; `true` switches to `z_{1-alpha}`.
    pub one_sided_quantile: bool,
}

impl PowerSpec {
    pub fn new(alpha: f64, power: f64, delta: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            power,
            delta,
            one_sided_quantile: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::DomainError(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.power > 0.0 && self.power < 1.0) {
            return Err(Error::DomainError(format!("power must be in (0,1), got {}", self.power)));
        }
        if self.power <= self.alpha {
            return Err(Error::DomainError(format!(
                "power {} must exceed alpha {}",
                self.power, self.alpha
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::DomainError("delta must be finite".into()));
        }
        Ok(())
    }

    /// `(z_crit + z_{1-beta})^2`.
    fn threshold(&self) -> Result<f64> {
        let z_crit = if self.one_sided_quantile {
            normal_quantile(1.0 - self.alpha)?
        } else {
            normal_quantile(1.0 - self.alpha / 2.0)?
        };
        let z_beta = normal_quantile(self.power)?;
        Ok((z_crit + z_beta) * (z_crit + z_beta))
    }
}

/// Size/power target for one individual subgroup, on the signal-to-noise
/// scale `Delta_g = |delta_g| / sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgroupPowerSpec {
    pub alpha_g: f64,
    pub power: f64,
    pub delta_over_sigma: f64,
    /// When `false` (default) the critical quantile is `z_{1-alpha_g}`,
    /// matching the printed formulas; `true` switches to `z_{1-alpha_g/2}`.
    pub two_sided_quantile: bool,
}

impl SubgroupPowerSpec {
    pub fn new(alpha_g: f64, power: f64, delta_over_sigma: f64) -> Result<Self> {
        if !(alpha_g > 0.0 && alpha_g < 1.0) || !(power > 0.0 && power < 1.0) {
            return Err(Error::DomainError(
                "alpha_g and power must lie in (0,1)".into(),
            ));
        }
        if !(delta_over_sigma > 0.0) {
            return Err(Error::DomainError(format!(
                "signal-to-noise ratio must be positive, got {delta_over_sigma}"
            )));
        }
        Ok(Self {
            alpha_g,
            power,
            delta_over_sigma,
            two_sided_quantile: false,
        })
    }

    /// `2 (z_crit + z_{1-beta})^2`.
    fn two_z_sq(&self) -> Result<f64> {
        let z_crit = if self.two_sided_quantile {
            normal_quantile(1.0 - self.alpha_g / 2.0)?
        } else {
            normal_quantile(1.0 - self.alpha_g)?
        };
        let z_beta = normal_quantile(self.power)?;
        Ok(2.0 * (z_crit + z_beta) * (z_crit + z_beta))
    }
}

/// A sample size together with a flag telling whether it was raised to the
/// estimator preconditions (per-subgroup `n >= 2`, `N1 >= 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSize {
    pub value: u64,
    pub clamped: bool,
}

/// `Var(delta_hat)` for a design and components, by the closed-form plug-in
/// expression. Components must be parameterized for the design's level.
pub fn var_delta_formula(design: &Design, vc: &VarianceComponents) -> f64 {
    assert_eq!(
        vc.level,
        design.subgroup_level(),
        "components/design level mismatch"
    );
    var_delta_plugin(design, vc)
}

/// Analytic power lower bound `Phi(|delta|/sqrt(var) - z_{1-alpha/2})`.
pub fn power_lower_bound(delta: f64, var_delta: f64, alpha: f64) -> Result<f64> {
    if !(var_delta > 0.0) {
        return Err(Error::DomainError(format!(
            "var_delta must be positive, got {var_delta}"
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(normal_cdf(delta.abs() / var_delta.sqrt() - z))
}

/// Smallest integer strictly greater than `x` (the propositions' "smallest
/// integer greater than" convention).
fn strictly_greater(x: f64) -> u64 {
    (x.floor() + 1.0).max(1.0) as u64
}

fn clamp_to(min_allowed: u64, value: u64) -> SampleSize {
    SampleSize {
        value: value.max(min_allowed),
        clamped: value < min_allowed,
    }
}

fn solve_linear_size(a: f64, b: f64, spec: &PowerSpec) -> Result<f64> {
    let ratio = spec.delta * spec.delta / spec.threshold()?;
    if ratio <= b {
        return Err(Error::Infeasible(format!(
            "B >= threshold: B = {b:.6}, delta^2/(z sum)^2 = {ratio:.6}; no finite size achieves power {}",
            spec.power
        )));
    }
    Ok(a / (ratio - b))
}

/// Level-one units needed per subgroup (within every level-two unit) to
/// reach the target power, with `A = 4 sigma_e^2 / (N3 N2)` and
/// `B = 4 sigma_grp^2 / N3`.
pub fn required_n_level1(
    spec: &PowerSpec,
    n3: usize,
    n2: usize,
    vc: &VarianceComponents,
) -> Result<SampleSize> {
    spec.validate()?;
    if n3 == 0 || n2 == 0 {
        return Err(Error::InvalidDesign("N3 and N2 must be positive".into()));
    }
    let a = 4.0 * vc.sigma_e_sq / (n3 * n2) as f64;
    let b = 4.0 * vc.sigma_low_sq / n3 as f64;
    let x = solve_linear_size(a, b, spec)?;
    Ok(clamp_to(2, strictly_greater(x)))
}

/// Level-one units per level-two unit needed for level-two subgrouping,
/// with `A' = 4 sigma_e^2 / (N3 n)` and `B' = 4 (sigma_1^2 + n sigma_2^2)
/// / (N3 n)`.
pub fn required_n1_level2(
    spec: &PowerSpec,
    n3: usize,
    n: usize,
    vc: &VarianceComponents,
) -> Result<SampleSize> {
    spec.validate()?;
    if n3 == 0 || n == 0 {
        return Err(Error::InvalidDesign("N3 and n must be positive".into()));
    }
    let a = 4.0 * vc.sigma_e_sq / (n3 * n) as f64;
    let b = 4.0 * (vc.sigma_low_sq + n as f64 * vc.sigma2_sq) / (n3 * n) as f64;
    let x = solve_linear_size(a, b, spec)?;
    Ok(clamp_to(2, strictly_greater(x)))
}

/// Smallest integer satisfying `size >= bound` (the supplementary formulas
/// are closed inequalities, so an integral bound is itself admissible).
fn at_least(bound: f64) -> u64 {
    (bound.ceil()).max(1.0) as u64
}

/// Per-subgroup level-one count `N_{1g}` for testing one subgroup's own
/// treatment effect (level-one subgrouping). Uses `rho1` and `rho_2p` of
/// the profile.
pub fn required_subgroup_n_level1(
    spec: &SubgroupPowerSpec,
    n2: usize,
    n3: usize,
    icc: &IccProfile,
) -> Result<SampleSize> {
    check_subgroup_iccs(icc)?;
    let c = spec.two_z_sq()?;
    let d2 = spec.delta_over_sigma * spec.delta_over_sigma;
    let denom =
        d2 * (n2 * n3) as f64 - c * (icc.rho1 + (n2 as f64 - 1.0) * icc.rho_2p);
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "denominator {denom:.6} <= 0: no finite subgroup size achieves power {}",
            spec.power
        )));
    }
    let bound = c * (1.0 - icc.rho1) / denom;
    Ok(SampleSize {
        value: at_least(bound),
        clamped: false,
    })
}

/// Per-subgroup level-two count `N_{2g}` for testing one subgroup's own
/// treatment effect (level-two subgrouping).
pub fn required_subgroup_n_level2(
    spec: &SubgroupPowerSpec,
    n1: usize,
    n3: usize,
    icc: &IccProfile,
) -> Result<SampleSize> {
    check_subgroup_iccs(icc)?;
    let c = spec.two_z_sq()?;
    let d2 = spec.delta_over_sigma * spec.delta_over_sigma;
    let denom = d2 * (n1 * n3) as f64 - c * icc.rho_2p * n1 as f64;
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "denominator {denom:.6} <= 0: no finite subgroup size achieves power {}",
            spec.power
        )));
    }
    let bound = c * (1.0 - icc.rho1 + (icc.rho1 - icc.rho_2p) * n1 as f64) / denom;
    Ok(SampleSize {
        value: at_least(bound),
        clamped: false,
    })
}

/// The subgroup formulas need only `rho1` and `rho_2p`.
fn check_subgroup_iccs(icc: &IccProfile) -> Result<()> {
    if !(icc.rho1 <= 1.0 && icc.rho1 >= icc.rho_2p && icc.rho_2p >= 0.0) {
        return Err(Error::InvalidIcc(format!(
            "need 1 >= rho1 >= rho_2p >= 0, got rho1={}, rho_2p={}",
            icc.rho1, icc.rho_2p
        )));
    }
    Ok(())
}

/// Which design dimension a power curve sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Level-three units per arm.
    N3,
    /// Level-two units per level-three unit (`N2` or `2n`).
    Mid,
    /// Level-one units per cell (`2n` or `N1`).
    Low,
}

/// Sweep descriptor: vary one axis of a base design over explicit values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSweep {
    pub base: Design,
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

/// One row of a power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurvePoint {
    pub design: Design,
    pub var_delta: f64,
    pub power: f64,
}

/// Tabulate the analytic power over a design sweep.
pub fn power_curve(
    spec: &PowerSpec,
    sweep: &DesignSweep,
    vc: &VarianceComponents,
) -> Result<Vec<PowerCurvePoint>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        let base = &sweep.base;
        let (n3, mid, low) = match sweep.axis {
            SweepAxis::N3 => (v, base.mid(), base.low()),
            SweepAxis::Mid => (base.n3_per_arm(), v, base.low()),
            SweepAxis::Low => (base.n3_per_arm(), base.mid(), v),
        };
        let design = Design::from_dims(base.subgroup_level(), n3, mid, low)?;
        let var_delta = var_delta_formula(&design, vc);
        let power = power_lower_bound(spec.delta, var_delta, spec.alpha)?;
        rows.push(PowerCurvePoint {
            design,
            var_delta,
            power,
        });
    }
    Ok(rows)
}
