//! Trial design parameters, fixed effects, variance components and
//! intra-class-correlation profiles.
//!
//! Two balanced three-level designs are supported, distinguished by which
//! level carries the two-way subgroup partition:
//!
//! - **Level-one subgrouping** (e.g. students by gender): `N3` level-three
//!   units per arm, `N2` level-two units each, and within every level-two
//!   unit `n` level-one units per subgroup (`2n` in total).
//! - **Level-two subgrouping** (e.g. classes by size): `N3` level-three units
//!   per arm, `n` level-two units per subgroup (`2n` in total), and `N1`
//!   level-one units per level-two unit.
//!
//! Randomization is at level three; the first `N3` level-three units receive
//! the experimental intervention.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for ICC ordering/identity constraints on
/// pure-arithmetic inputs.
const ICC_TOL: f64 = 1e-12;

/// Which level of the hierarchy carries the two-way subgroup partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubgroupLevel {
    /// Subgroups partition the level-one units within every level-two unit.
    LevelOne,
    /// Subgroups partition the level-two units within every level-three unit.
    LevelTwo,
}

/// Balanced trial dimensions.
///
/// `mid` is the number of level-two units per level-three unit (`N2` for
/// level-one subgrouping, `2n` for level-two subgrouping); `low` is the
/// number of level-one units per level-two cell (`2n` for level-one
/// subgrouping, `N1` for level-two). Total observation count is
/// `2 * n3_per_arm * mid * low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    n3_per_arm: usize,
    mid: usize,
    low: usize,
    subgroup_level: SubgroupLevel,
}

impl Design {
    /// Level-one subgrouping design with `n3` level-three units per arm,
    /// `n2` level-two units per level-three unit and `n` level-one units per
    /// subgroup (so `2n` per level-two unit).
    pub fn level_one(n3: usize, n2: usize, n: usize) -> Result<Self> {
        Self::from_dims(SubgroupLevel::LevelOne, n3, n2, 2 * n)
    }

    /// Level-two subgrouping design with `n3` level-three units per arm,
    /// `n` level-two units per subgroup (so `2n` per level-three unit) and
    /// `n1` level-one units per level-two unit.
    pub fn level_two(n3: usize, n: usize, n1: usize) -> Result<Self> {
        Self::from_dims(SubgroupLevel::LevelTwo, n3, 2 * n, n1)
    }

    /// Construct from raw `(mid, low)` dimensions, validating the divisor
    /// preconditions of the closed-form estimators (`n >= 2`, `N2 >= 2`
    /// resp. `N1 >= 2`).
    pub fn from_dims(
        subgroup_level: SubgroupLevel,
        n3_per_arm: usize,
        mid: usize,
        low: usize,
    ) -> Result<Self> {
        if n3_per_arm == 0 {
            return Err(Error::InvalidDesign("N3 per arm must be >= 1".into()));
        }
        match subgroup_level {
            SubgroupLevel::LevelOne => {
                if low % 2 != 0 || low / 2 < 2 {
                    return Err(Error::InvalidDesign(format!(
                        "level-one subgrouping needs an even per-cell count 2n with n >= 2, got {low}"
                    )));
                }
                if mid < 2 {
                    return Err(Error::InvalidDesign(format!(
                        "level-one subgrouping needs N2 >= 2, got {mid}"
                    )));
                }
            }
            SubgroupLevel::LevelTwo => {
                if mid % 2 != 0 || mid / 2 < 2 {
                    return Err(Error::InvalidDesign(format!(
                        "level-two subgrouping needs an even level-two count 2n with n >= 2, got {mid}"
                    )));
                }
                if low < 2 {
                    return Err(Error::InvalidDesign(format!(
                        "level-two subgrouping needs N1 >= 2, got {low}"
                    )));
                }
            }
        }
        Ok(Self {
            n3_per_arm,
            mid,
            low,
            subgroup_level,
        })
    }

    /// Level-three units per arm (`N3`).
    pub fn n3_per_arm(&self) -> usize {
        self.n3_per_arm
    }

    /// Level-two units per level-three unit.
    pub fn mid(&self) -> usize {
        self.mid
    }

    /// Level-one units per level-two cell.
    pub fn low(&self) -> usize {
        self.low
    }

    pub fn subgroup_level(&self) -> SubgroupLevel {
        self.subgroup_level
    }

    /// Per-subgroup replicate count `n` (level-one units per subgroup for
    /// level-one subgrouping, level-two units per subgroup for level-two).
    pub fn n_per_subgroup(&self) -> usize {
        match self.subgroup_level {
            SubgroupLevel::LevelOne => self.low / 2,
            SubgroupLevel::LevelTwo => self.mid / 2,
        }
    }

    /// `N2` for a level-one subgrouping design.
    pub fn n2(&self) -> Option<usize> {
        matches!(self.subgroup_level, SubgroupLevel::LevelOne).then_some(self.mid)
    }

    /// `N1` for a level-two subgrouping design.
    pub fn n1(&self) -> Option<usize> {
        matches!(self.subgroup_level, SubgroupLevel::LevelTwo).then_some(self.low)
    }

    /// Total number of observations, `2 * N3 * mid * low`.
    pub fn total_observations(&self) -> usize {
        2 * self.n3_per_arm * self.mid * self.low
    }
}

/// The four fixed coefficients of the mixed model.
///
/// `beta0` is the control effect on Subgroup 2, `tau` the subgroup main
/// effect, `xi` the treatment effect on Subgroup 2 (`delta_2`), and `delta`
/// the differential treatment effect `delta_1 - delta_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedEffects {
    pub beta0: f64,
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
}

impl FixedEffects {
    pub fn new(beta0: f64, tau: f64, xi: f64, delta: f64) -> Self {
        Self {
            beta0,
            tau,
            xi,
            delta,
        }
    }

    /// Treatment effect on Subgroup 1, `delta_1 = xi + delta`.
    pub fn delta1(&self) -> f64 {
        self.xi + self.delta
    }

    /// Treatment effect on Subgroup 2, `delta_2 = xi`.
    pub fn delta2(&self) -> f64 {
        self.xi
    }

    /// Mean response for a cell: `beta0 + tau*L + xi*X + delta*L*X` with
    /// `L = 1` for Subgroup 1 and `X = 1` for the treated arm.
    pub fn cell_mean(&self, treated: bool, subgroup1: bool) -> f64 {
        let l = subgroup1 as u8 as f64;
        let x = treated as u8 as f64;
        self.beta0 + self.tau * l + self.xi * x + self.delta * l * x
    }
}

/// Variance components of the nested random intercepts and the error term.
///
/// `sigma_low_sq` is the subgroup-level intercept variance: `sigma_grp^2`
/// (one intercept per subgroup within each level-two unit) for level-one
/// subgrouping, `sigma_1^2` (one intercept per level-two unit) for level-two
/// subgrouping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma3_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_low_sq: f64,
    pub sigma_e_sq: f64,
    pub level: SubgroupLevel,
}

impl VarianceComponents {
    pub fn new(
        level: SubgroupLevel,
        sigma3_sq: f64,
        sigma2_sq: f64,
        sigma_low_sq: f64,
        sigma_e_sq: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("sigma3_sq", sigma3_sq),
            ("sigma2_sq", sigma2_sq),
            ("sigma_low_sq", sigma_low_sq),
            ("sigma_e_sq", sigma_e_sq),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidComponents(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            sigma3_sq,
            sigma2_sq,
            sigma_low_sq,
            sigma_e_sq,
            level,
        })
    }

    /// Total outcome variance `sigma^2`, the sum of the four components.
    pub fn total_variance(&self) -> f64 {
        self.sigma3_sq + self.sigma2_sq + self.sigma_low_sq + self.sigma_e_sq
    }
}

/// Intra-class-correlation parameterization of the variance components.
///
/// `rho1` is the within-cell correlation, `rho2` the across-subgroup
/// correlation sharing only the level-three unit. `rho_1p` (same level-two
/// unit, different subgroup) applies to level-one subgrouping only and must
/// be `None` for level-two profiles; `rho_2p` is the same-subgroup,
/// different-lower-unit correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccProfile {
    pub sigma_sq: f64,
    pub rho1: f64,
    pub rho_1p: Option<f64>,
    pub rho_2p: f64,
    pub rho2: f64,
}

impl IccProfile {
    pub fn level_one(sigma_sq: f64, rho1: f64, rho_1p: f64, rho_2p: f64, rho2: f64) -> Self {
        Self {
            sigma_sq,
            rho1,
            rho_1p: Some(rho_1p),
            rho_2p,
            rho2,
        }
    }

    pub fn level_two(sigma_sq: f64, rho1: f64, rho_2p: f64, rho2: f64) -> Self {
        Self {
            sigma_sq,
            rho1,
            rho_1p: None,
            rho_2p,
            rho2,
        }
    }

    /// Check the admissibility constraints for the given subgroup level.
    ///
    /// Level one: `1 >= rho1 >= rho_1p, rho_2p >= rho2 >= 0` and
    /// `rho1 + rho2 = rho_1p + rho_2p`. Level two:
    /// `1 >= rho1 >= rho_2p >= rho2 >= 0` with `rho_1p` unused.
    pub fn validate(&self, level: SubgroupLevel) -> Result<()> {
        if !(self.sigma_sq.is_finite() && self.sigma_sq > 0.0) {
            return Err(Error::InvalidIcc(format!(
                "sigma_sq must be positive, got {}",
                self.sigma_sq
            )));
        }
        let ge = |a: f64, b: f64| a >= b - ICC_TOL;
        match level {
            SubgroupLevel::LevelOne => {
                let rho_1p = self.rho_1p.ok_or_else(|| {
                    Error::InvalidIcc("rho_1p is required for level-one profiles".into())
                })?;
                if !(ge(1.0, self.rho1)
                    && ge(self.rho1, rho_1p)
                    && ge(self.rho1, self.rho_2p)
                    && ge(rho_1p, self.rho2)
                    && ge(self.rho_2p, self.rho2)
                    && ge(self.rho2, 0.0))
                {
                    return Err(Error::InvalidIcc(format!(
                        "need 1 >= rho1 >= rho_1p, rho_2p >= rho2 >= 0; got rho1={}, rho_1p={}, rho_2p={}, rho2={}",
                        self.rho1, rho_1p, self.rho_2p, self.rho2
                    )));
                }
                let gap = (self.rho1 + self.rho2) - (rho_1p + self.rho_2p);
                if gap.abs() > ICC_TOL {
                    return Err(Error::InvalidIcc(format!(
                        "rho1 + rho2 must equal rho_1p + rho_2p (off by {gap:e})"
                    )));
                }
            }
            SubgroupLevel::LevelTwo => {
                if !(ge(1.0, self.rho1)
                    && ge(self.rho1, self.rho_2p)
                    && ge(self.rho_2p, self.rho2)
                    && ge(self.rho2, 0.0))
                {
                    return Err(Error::InvalidIcc(format!(
                        "need 1 >= rho1 >= rho_2p >= rho2 >= 0; got rho1={}, rho_2p={}, rho2={}",
                        self.rho1, self.rho_2p, self.rho2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Convert an ICC profile into raw variance components.
///
/// Level one: `sigma3^2 = sigma^2 rho2`, `sigma_grp^2 = sigma^2 rho_2p -
/// sigma3^2`, `sigma2^2 = sigma^2 rho_1p - sigma3^2`, `sigma_e^2 =
/// sigma^2 (1 - rho1)`. Level two: `sigma3^2 = sigma^2 rho2`, `sigma2^2 =
/// sigma^2 rho_2p - sigma3^2`, `sigma1^2 = sigma^2 rho1 - sigma3^2 -
/// sigma2^2`, `sigma_e^2 = sigma^2 (1 - rho1)`.
pub fn icc_to_components(profile: &IccProfile, level: SubgroupLevel) -> Result<VarianceComponents> {
    profile.validate(level)?;
    let s2 = profile.sigma_sq;
    let clamp = |v: f64| if v.abs() <= ICC_TOL * s2 { 0.0 } else { v };
    let sigma3_sq = clamp(s2 * profile.rho2);
    let sigma_e_sq = clamp(s2 * (1.0 - profile.rho1));
    let (sigma2_sq, sigma_low_sq) = match level {
        SubgroupLevel::LevelOne => {
            let rho_1p = profile.rho_1p.expect("validated above");
            (
                clamp(s2 * rho_1p - sigma3_sq),
                clamp(s2 * profile.rho_2p - sigma3_sq),
            )
        }
        SubgroupLevel::LevelTwo => {
            let sigma2_sq = clamp(s2 * profile.rho_2p - sigma3_sq);
            (
                sigma2_sq,
                clamp(s2 * profile.rho1 - sigma3_sq - sigma2_sq),
            )
        }
    };
    VarianceComponents::new(level, sigma3_sq, sigma2_sq, sigma_low_sq, sigma_e_sq)
        .map_err(|e| Error::InvalidIcc(e.to_string()))
}

/// Exact inverse of [`icc_to_components`]: `sigma^2` is the sum of the four
/// components and each `rho` is the corresponding sharing-class covariance
/// over `sigma^2`. All-zero components map to the all-zero profile.
pub fn components_to_icc(vc: &VarianceComponents) -> IccProfile {
    let s2 = vc.total_variance();
    if s2 == 0.0 {
        return IccProfile {
            sigma_sq: 0.0,
            rho1: 0.0,
            rho_1p: matches!(vc.level, SubgroupLevel::LevelOne).then_some(0.0),
            rho_2p: 0.0,
            rho2: 0.0,
        };
    }
    let rho2 = vc.sigma3_sq / s2;
    match vc.level {
        SubgroupLevel::LevelOne => IccProfile {
            sigma_sq: s2,
            rho1: (vc.sigma3_sq + vc.sigma2_sq + vc.sigma_low_sq) / s2,
            rho_1p: Some((vc.sigma3_sq + vc.sigma2_sq) / s2),
            rho_2p: (vc.sigma3_sq + vc.sigma_low_sq) / s2,
            rho2,
        },
        SubgroupLevel::LevelTwo => IccProfile {
            sigma_sq: s2,
            rho1: (vc.sigma3_sq + vc.sigma2_sq + vc.sigma_low_sq) / s2,
            rho_1p: None,
            rho_2p: (vc.sigma3_sq + vc.sigma2_sq) / s2,
            rho2,
        },
    }
}
