//! Seeded simulation of balanced trial datasets from the mixed model.
//!
//! Outcomes are assembled as
//! `Y = beta0 + tau*L + xi*X + delta*L*X + u3 + u_mid + u_low + eps`
//! with all random intercepts and errors independent normals. Draws follow
//! the generation order of the simulation procedure: level-three intercepts
//! first, then the mid-level intercepts, then the lowest-level intercepts,
//! then the errors, each in flat index order.
//!
//! # Reproducibility contract
//!
//! Every dataset is a pure function of `(Design, FixedEffects,
//! VarianceComponents, Seed)` and this crate's pinned RNG stack: the stream
//! is `ChaCha8Rng::seed_from_u64(seed)` and normal variates come from the
//! `rand_distr` ziggurat. A zero-variance component still consumes its
//! draws, so datasets with different components but the same seed share the
//! same underlying standard normals. Replicate substreams are derived with
//! [`substream_seed`], the SplitMix64 output sequence of the master seed.

use crate::design::{Design, FixedEffects, SubgroupLevel, VarianceComponents};
use crate::error::Error;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Master seed for a simulation or a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// Derive the seed of replicate `replicate_index` from a master seed.
///
/// This is the `(replicate_index + 1)`-th output of the SplitMix64 generator
/// seeded with the master: advance the state by the Weyl constant per index,
/// then apply the 64-bit finalizer. The derivation is frozen; published
/// results only need the master seed and the replicate index.
pub fn substream_seed(master: Seed, replicate_index: u64) -> Seed {
    let mut z = master
        .0
        .wrapping_add(replicate_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    Seed(z ^ (z >> 31))
}

/// A balanced outcome vector together with its design.
///
/// The flat layout is lexicographic by level-three unit and then by the
/// model's own subscript order:
///
/// - level-one subgrouping: `(i, j, g, k)` with dims `(2*N3, N2, 2, n)`;
/// - level-two subgrouping: `(i, g, j, k)` with dims `(2*N3, 2, n, N1)`.
///
/// Indices are zero-based; level-three units `0..N3` are the treated arm.
/// All estimators consume the layout through [`TrialData::idx`] only.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    design: Design,
    y: Vec<f64>,
}

impl TrialData {
    /// Wrap an existing outcome vector, checking that its length matches the
    /// design.
    pub fn from_parts(design: Design, y: Vec<f64>) -> Result<Self> {
        if y.len() != design.total_observations() {
            return Err(Error::UnbalancedData(format!(
                "outcome length {} does not match design total {}",
                y.len(),
                design.total_observations()
            )));
        }
        Ok(Self { design, y })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Flat index of observation `(i, a, b, k)` where `(a, b) = (j, g)` for
    /// level-one subgrouping and `(a, b) = (g, j)` for level-two.
    #[inline]
    pub fn idx(&self, i: usize, a: usize, b: usize, k: usize) -> usize {
        let (d1, d2, d3) = self.axis_dims();
        debug_assert!(i < 2 * self.design.n3_per_arm() && a < d1 && b < d2 && k < d3);
        ((i * d1 + a) * d2 + b) * d3 + k
    }

    /// Per-level axis dimensions after the level-three axis:
    /// `(N2, 2, n)` for level-one subgrouping, `(2, n, N1)` for level-two.
    #[inline]
    pub fn axis_dims(&self) -> (usize, usize, usize) {
        match self.design.subgroup_level() {
            SubgroupLevel::LevelOne => (self.design.mid(), 2, self.design.n_per_subgroup()),
            SubgroupLevel::LevelTwo => (2, self.design.n_per_subgroup(), self.design.low()),
        }
    }

    /// Whether level-three unit `i` (zero-based) is in the treated arm.
    #[inline]
    pub fn arm_treated(&self, i: usize) -> bool {
        i < self.design.n3_per_arm()
    }

    /// Shift every outcome by `c` (test support for invariance checks).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            design: self.design,
            y: self.y.iter().map(|v| v + c).collect(),
        }
    }

    /// Scale every outcome by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            design: self.design,
            y: self.y.iter().map(|v| v * s).collect(),
        }
    }

    /// Shift only treated-arm outcomes by `c`.
    pub fn arm_shifted(&self, c: f64) -> Self {
        let mut y = self.y.clone();
        let per_unit = self.design.mid() * self.design.low();
        y[..self.design.n3_per_arm() * per_unit]
            .iter_mut()
            .for_each(|v| *v += c);
        Self {
            design: self.design,
            y,
        }
    }
}

/// Generate one balanced dataset from the mixed model.
///
/// Draw order follows the simulation procedure steps: (a) `u_i` for every
/// level-three unit, (b) mid-level intercepts for each `i`, (c) lowest-level
/// intercepts for each mid cell, (d) errors per observation, then the fixed
/// mean structure is added. Deterministic given the seed regardless of
/// thread count.
pub fn simulate(
    design: &Design,
    fx: &FixedEffects,
    vc: &VarianceComponents,
    seed: Seed,
) -> Result<TrialData> {
    if vc.level != design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: vc.level,
            design: design.subgroup_level(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut normal = |sd: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        sd * z
    };
    let sd3 = vc.sigma3_sq.sqrt();
    let sd2 = vc.sigma2_sq.sqrt();
    let sd_low = vc.sigma_low_sq.sqrt();
    let sd_e = vc.sigma_e_sq.sqrt();

    let n3 = design.n3_per_arm();
    let units = 2 * n3;
    let mut y = Vec::with_capacity(design.total_observations());

    match design.subgroup_level() {
        SubgroupLevel::LevelOne => {
            let (n2, n) = (design.mid(), design.n_per_subgroup());
            let u3: Vec<f64> = (0..units).map(|_| normal(sd3)).collect();
            let u2: Vec<f64> = (0..units * n2).map(|_| normal(sd2)).collect();
            let ug: Vec<f64> = (0..units * n2 * 2).map(|_| normal(sd_low)).collect();
            for i in 0..units {
                let treated = i < n3;
                for j in 0..n2 {
                    for g in 0..2 {
                        let mean = fx.cell_mean(treated, g == 0);
                        let intercepts = u3[i] + u2[i * n2 + j] + ug[(i * n2 + j) * 2 + g];
                        for _ in 0..n {
                            y.push(mean + intercepts + normal(sd_e));
                        }
                    }
                }
            }
        }
        SubgroupLevel::LevelTwo => {
            let (n, n1) = (design.n_per_subgroup(), design.low());
            let u3: Vec<f64> = (0..units).map(|_| normal(sd3)).collect();
            let ug: Vec<f64> = (0..units * 2).map(|_| normal(sd2)).collect();
            let uj: Vec<f64> = (0..units * 2 * n).map(|_| normal(sd_low)).collect();
            for i in 0..units {
                let treated = i < n3;
                for g in 0..2 {
                    let mean = fx.cell_mean(treated, g == 0);
                    for j in 0..n {
                        let intercepts = u3[i] + ug[i * 2 + g] + uj[(i * 2 + g) * n + j];
                        for _ in 0..n1 {
                            y.push(mean + intercepts + normal(sd_e));
                        }
                    }
                }
            }
        }
    }
    TrialData::from_parts(*design, y)
}
