//! Independent dense-covariance verification engine.
//!
//! Everything here works from the model's covariance matrix `V = Cov(Y)`
//! assembled entry by entry, not from the closed-form estimators it is used
//! to certify: the exact Gaussian log-likelihood and the GLS normal
//! equations use a dense symmetric (Cholesky) factorization of the
//! per-level-three-unit covariance block (units are independent by
//! randomization, so `V` is block diagonal with `2*N3` identical blocks),
//! and `numeric_ml` maximizes that likelihood with a derivative-free search
//! plus a finite-difference Newton polish.
//!
//! [`inverse_covariance_closed_form`] assembles the four-term Kronecker
//! expression for `V^{-1}` (the `1/lambda_b` projections onto the nested
//! contrast spaces) so it can be checked against [`build_covariance`] by
//! direct multiplication.
//!
//! Explicit ML solutions exist for this model class: Szatrowski's condition
//! `n(W) = r + 1` holds for both subgrouping levels (three random factors
//! plus error, four distinct columns in the subscript-incidence closure).
//! That is a property of the model family, recorded here rather than
//! checked at runtime.

use crate::design::{Design, FixedEffects, SubgroupLevel, VarianceComponents};
use crate::error::Error;
use crate::sim::TrialData;
use crate::Result;
use nalgebra::{Cholesky, DMatrix, DVector, Matrix4, Vector4};

/// Default cap on the full covariance dimension; the oracle is meant for
/// small instances.
pub const DEFAULT_DIM_CAP: usize = 5000;

/// Dense symmetric covariance matrix of the full outcome vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCovariance {
    dim: usize,
    entries: DMatrix<f64>,
}

impl DenseCovariance {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// The nested eigenvalue aggregates of the balanced covariance:
/// `lambda0 = sigma_e^2` up to `lambda3`, which adds every intercept
/// variance at its replication weight. Ordered whenever all components are
/// nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaAggregates {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl LambdaAggregates {
    /// Aggregates for the given design.
    ///
    /// Level one: `(sigma_e^2, +n*sigma_grp^2, +2n*sigma_2^2,
    /// +2n*N2*sigma_3^2)`. Level two: `(sigma_e^2, +N1*sigma_1^2,
    /// +n*N1*sigma_2^2, +2n*N1*sigma_3^2)`.
    pub fn from_components(design: &Design, vc: &VarianceComponents) -> Self {
        let n = design.n_per_subgroup() as f64;
        let (w_low, w_2, w_3) = match design.subgroup_level() {
            SubgroupLevel::LevelOne => {
                let n2 = design.mid() as f64;
                (n, 2.0 * n, 2.0 * n * n2)
            }
            SubgroupLevel::LevelTwo => {
                let n1 = design.low() as f64;
                (n1, n * n1, 2.0 * n * n1)
            }
        };
        let lambda0 = vc.sigma_e_sq;
        let lambda1 = lambda0 + w_low * vc.sigma_low_sq;
        let lambda2 = lambda1 + w_2 * vc.sigma2_sq;
        let lambda3 = lambda2 + w_3 * vc.sigma3_sq;
        Self {
            lambda0,
            lambda1,
            lambda2,
            lambda3,
        }
    }

    /// Invert the aggregate map back to raw components; errors if the
    /// ordering (and hence nonnegativity) is violated.
    pub fn to_components(&self, design: &Design) -> Result<VarianceComponents> {
        let n = design.n_per_subgroup() as f64;
        let (w_low, w_2, w_3) = match design.subgroup_level() {
            SubgroupLevel::LevelOne => {
                let n2 = design.mid() as f64;
                (n, 2.0 * n, 2.0 * n * n2)
            }
            SubgroupLevel::LevelTwo => {
                let n1 = design.low() as f64;
                (n1, n * n1, 2.0 * n * n1)
            }
        };
        VarianceComponents::new(
            design.subgroup_level(),
            (self.lambda3 - self.lambda2) / w_3,
            (self.lambda2 - self.lambda1) / w_2,
            (self.lambda1 - self.lambda0) / w_low,
            self.lambda0,
        )
    }

    /// Contrast-space dimensions `(m0, m1, m2, m3)` matching the aggregates.
    pub fn multiplicities(design: &Design) -> [usize; 4] {
        let units = 2 * design.n3_per_arm();
        let n = design.n_per_subgroup();
        match design.subgroup_level() {
            SubgroupLevel::LevelOne => {
                let n2 = design.mid();
                [units * n2 * 2 * (n - 1), units * n2, units * (n2 - 1), units]
            }
            SubgroupLevel::LevelTwo => {
                let n1 = design.low();
                [units * 2 * n * (n1 - 1), units * 2 * (n - 1), units, units]
            }
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.lambda0, self.lambda1, self.lambda2, self.lambda3]
    }
}

/// Covariance block of a single level-three unit, `(mid*low) x (mid*low)`,
/// from the sharing-class table of the model.
fn unit_block(design: &Design, vc: &VarianceComponents) -> DMatrix<f64> {
    let (d1, d2, d3) = match design.subgroup_level() {
        SubgroupLevel::LevelOne => (design.mid(), 2, design.n_per_subgroup()),
        SubgroupLevel::LevelTwo => (2, design.n_per_subgroup(), design.low()),
    };
    let b = d1 * d2 * d3;
    let pos = |flat: usize| {
        let k = flat % d3;
        let rest = flat / d3;
        (rest / d2, rest % d2, k)
    };
    // Axes are (j, g, k) for level-one subgrouping and (g, j, k) for
    // level-two. In both cases the first axis indexes the intercept nested
    // directly under the level-three unit and the first two together index
    // the lowest intercept, so the sharing classes coincide:
    // same (a, b): all three intercepts; same a: sigma3^2 + sigma2^2;
    // otherwise sigma3^2 only.
    DMatrix::from_fn(b, b, |r, c| {
        let (a1, b1, k1) = pos(r);
        let (a2, b2, k2) = pos(c);
        if a1 == a2 && b1 == b2 {
            let base = vc.sigma3_sq + vc.sigma2_sq + vc.sigma_low_sq;
            if k1 == k2 {
                base + vc.sigma_e_sq
            } else {
                base
            }
        } else if a1 == a2 {
            vc.sigma3_sq + vc.sigma2_sq
        } else {
            vc.sigma3_sq
        }
    })
}

fn check_cap(design: &Design, cap: usize) -> Result<usize> {
    let dim = design.total_observations();
    if dim > cap {
        return Err(Error::TooLarge { dim, cap });
    }
    Ok(dim)
}

/// Assemble the full dense covariance matrix (default size cap).
pub fn build_covariance(design: &Design, vc: &VarianceComponents) -> Result<DenseCovariance> {
    build_covariance_with_cap(design, vc, DEFAULT_DIM_CAP)
}

/// Assemble the full dense covariance with an explicit size cap.
pub fn build_covariance_with_cap(
    design: &Design,
    vc: &VarianceComponents,
    cap: usize,
) -> Result<DenseCovariance> {
    if vc.level != design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: vc.level,
            design: design.subgroup_level(),
        });
    }
    let dim = check_cap(design, cap)?;
    let block = unit_block(design, vc);
    let b = block.nrows();
    let mut entries = DMatrix::zeros(dim, dim);
    for unit in 0..2 * design.n3_per_arm() {
        entries
            .view_mut((unit * b, unit * b), (b, b))
            .copy_from(&block);
    }
    Ok(DenseCovariance { dim, entries })
}

/// `I_a - J_a/a`, the centering matrix.
fn centering(a: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a, a, |r, c| {
        let j = 1.0 / a as f64;
        if r == c {
            1.0 - j
        } else {
            -j
        }
    })
}

/// `J_a / a`, the averaging matrix.
fn averaging(a: usize) -> DMatrix<f64> {
    DMatrix::from_element(a, a, 1.0 / a as f64)
}

/// Closed-form inverse covariance: the four-term Kronecker sum
/// `sum_b (1/lambda_b) * (projector onto contrast space b)`, assembled
/// densely. Errors with [`Error::SingularComponents`] when any aggregate is
/// zero.
pub fn inverse_covariance_closed_form(
    design: &Design,
    vc: &VarianceComponents,
) -> Result<DenseCovariance> {
    if vc.level != design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: vc.level,
            design: design.subgroup_level(),
        });
    }
    let dim = check_cap(design, DEFAULT_DIM_CAP)?;
    let lam = LambdaAggregates::from_components(design, vc).as_array();
    for (index, l) in lam.iter().enumerate() {
        if *l <= 0.0 {
            return Err(Error::SingularComponents { index });
        }
    }
    let (d1, d2, d3) = match design.subgroup_level() {
        SubgroupLevel::LevelOne => (design.mid(), 2, design.n_per_subgroup()),
        SubgroupLevel::LevelTwo => (2, design.n_per_subgroup(), design.low()),
    };
    let (i1, i2) = (DMatrix::identity(d1, d1), DMatrix::identity(d2, d2));
    let (c1, c2, c3) = (centering(d1), centering(d2), centering(d3));
    let (j1, j2, j3) = (averaging(d1), averaging(d2), averaging(d3));

    let mut block = i1.kronecker(&i2).kronecker(&c3) / lam[0];
    block += i1.kronecker(&c2).kronecker(&j3) / lam[1];
    block += c1.kronecker(&j2).kronecker(&j3) / lam[2];
    block += j1.kronecker(&j2).kronecker(&j3) / lam[3];

    let b = block.nrows();
    let mut entries = DMatrix::zeros(dim, dim);
    for unit in 0..2 * design.n3_per_arm() {
        entries
            .view_mut((unit * b, unit * b), (b, b))
            .copy_from(&block);
    }
    Ok(DenseCovariance { dim, entries })
}

/// Fixed-effect design matrix of one level-three unit: columns
/// `(1, L, X, L*X)` in the flat observation order.
fn unit_design_matrix(design: &Design, treated: bool) -> DMatrix<f64> {
    let (d1, d2, d3) = match design.subgroup_level() {
        SubgroupLevel::LevelOne => (design.mid(), 2, design.n_per_subgroup()),
        SubgroupLevel::LevelTwo => (2, design.n_per_subgroup(), design.low()),
    };
    let b = d1 * d2 * d3;
    let x = treated as u8 as f64;
    DMatrix::from_fn(b, 4, |r, c| {
        let rest = r / d3;
        let (a, bb) = (rest / d2, rest % d2);
        let g = match design.subgroup_level() {
            SubgroupLevel::LevelOne => bb,
            SubgroupLevel::LevelTwo => a,
        };
        let l = (g == 0) as u8 as f64;
        match c {
            0 => 1.0,
            1 => l,
            2 => x,
            _ => l * x,
        }
    })
}

struct BlockFactor {
    chol: Cholesky<f64, nalgebra::Dyn>,
    block_dim: usize,
}

impl BlockFactor {
    fn new(design: &Design, vc: &VarianceComponents) -> Result<Self> {
        let block = unit_block(design, vc);
        let block_dim = block.nrows();
        let chol = Cholesky::new(block).ok_or_else(|| {
            Error::SingularCovariance("unit covariance block is not positive definite".into())
        })?;
        Ok(Self { chol, block_dim })
    }

    fn log_det_full(&self, units: usize) -> f64 {
        let l = self.chol.l_dirty();
        let per_block: f64 = (0..self.block_dim).map(|i| l[(i, i)].ln()).sum();
        2.0 * per_block * units as f64
    }

    fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    fn solve_vec(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

/// Solve the 4x4 GLS normal equations `X' V^{-1} X beta = X' V^{-1} Y`
/// densely. On balanced data the solution does not depend on the variance
/// components used, which is itself checked by the test suite.
pub fn gls_fixed_effects(data: &TrialData, vc: &VarianceComponents) -> Result<FixedEffects> {
    let design = data.design();
    check_cap(design, DEFAULT_DIM_CAP)?;
    if vc.level != design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: vc.level,
            design: design.subgroup_level(),
        });
    }
    let factor = BlockFactor::new(design, vc)?;
    let b = factor.block_dim;
    let units = 2 * design.n3_per_arm();

    let mut xtvx = Matrix4::<f64>::zeros();
    let mut xtvy = Vector4::<f64>::zeros();
    for unit in 0..units {
        let x = unit_design_matrix(design, unit < design.n3_per_arm());
        let w = factor.solve(&x); // V_block^{-1} X_block
        let y = DVector::from_column_slice(&data.y()[unit * b..(unit + 1) * b]);
        let xt_w = x.transpose() * &w;
        let wt_y = w.transpose() * y;
        for r in 0..4 {
            xtvy[r] += wt_y[r];
            for c in 0..4 {
                xtvx[(r, c)] += xt_w[(r, c)];
            }
        }
    }
    let beta = xtvx
        .lu()
        .solve(&xtvy)
        .ok_or_else(|| Error::SingularSystem("X'V^{-1}X is singular".into()))?;
    Ok(FixedEffects::new(beta[0], beta[1], beta[2], beta[3]))
}

/// Exact log density of `Y ~ N(X beta, V)`.
pub fn log_likelihood(data: &TrialData, fx: &FixedEffects, vc: &VarianceComponents) -> Result<f64> {
    let design = data.design();
    check_cap(design, DEFAULT_DIM_CAP)?;
    if vc.level != design.subgroup_level() {
        return Err(Error::LevelMismatch {
            components: vc.level,
            design: design.subgroup_level(),
        });
    }
    let factor = BlockFactor::new(design, vc)?;
    let b = factor.block_dim;
    let units = 2 * design.n3_per_arm();
    let m = design.total_observations() as f64;

    let mut quad = 0.0;
    for unit in 0..units {
        let treated = unit < design.n3_per_arm();
        let x = unit_design_matrix(design, treated);
        let mut r = DVector::from_column_slice(&data.y()[unit * b..(unit + 1) * b]);
        let beta = DVector::from_column_slice(&[fx.beta0, fx.tau, fx.xi, fx.delta]);
        r -= x * beta;
        quad += r.dot(&factor.solve_vec(&r));
    }
    Ok(-0.5 * (m * (2.0 * std::f64::consts::PI).ln() + factor.log_det_full(units) + quad))
}

/// Ordinary least squares for the four fixed effects; on balanced data this
/// equals the GLS solution for every positive-definite `V`.
fn ols_fixed_effects(data: &TrialData) -> Result<FixedEffects> {
    let design = data.design();
    let b = design.mid() * design.low();
    let units = 2 * design.n3_per_arm();
    let mut xtx = Matrix4::<f64>::zeros();
    let mut xty = Vector4::<f64>::zeros();
    for unit in 0..units {
        let x = unit_design_matrix(design, unit < design.n3_per_arm());
        let y = DVector::from_column_slice(&data.y()[unit * b..(unit + 1) * b]);
        let xt_x = x.transpose() * &x;
        let xt_y = x.transpose() * y;
        for r in 0..4 {
            xty[r] += xt_y[r];
            for c in 0..4 {
                xtx[(r, c)] += xt_x[(r, c)];
            }
        }
    }
    let beta = xtx
        .lu()
        .solve(&xty)
        .ok_or_else(|| Error::SingularSystem("X'X is singular".into()))?;
    Ok(FixedEffects::new(beta[0], beta[1], beta[2], beta[3]))
}

/// Numeric maximum likelihood over the nonnegative component orthant.
///
/// Fixed effects are profiled out once (the balanced GLS solution is
/// component-free). The component search runs over log-increments of the
/// lambda aggregates: `lambda0 = exp(t0)`, `lambda_b = lambda_{b-1} +
/// exp(t_b)`, which keeps the ordering constraint implicit, using
/// Nelder-Mead followed by coordinate refinement and a finite-difference
/// Newton polish, to tolerance 1e-9 in log-likelihood. Used only to certify
/// the closed-form estimates.
pub fn numeric_ml(data: &TrialData) -> Result<(FixedEffects, VarianceComponents)> {
    let design = *data.design();
    check_cap(&design, DEFAULT_DIM_CAP)?;
    let fx = ols_fixed_effects(data)?;

    let lambdas_of = |t: &[f64; 4]| {
        let mut lam = [0.0; 4];
        lam[0] = t[0].exp();
        for b in 1..4 {
            lam[b] = lam[b - 1] + t[b].exp();
        }
        lam
    };
    let neg_loglik = |t: &[f64; 4]| -> f64 {
        let lam = lambdas_of(t);
        let agg = LambdaAggregates {
            lambda0: lam[0],
            lambda1: lam[1],
            lambda2: lam[2],
            lambda3: lam[3],
        };
        let vc = match agg.to_components(&design) {
            Ok(vc) => vc,
            Err(_) => return f64::INFINITY,
        };
        match log_likelihood(data, &fx, &vc) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    };

    // Neutral start: aggregates at multiples of the sample variance.
    let mean = data.y().iter().sum::<f64>() / data.y().len() as f64;
    let var = data
        .y()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / data.y().len() as f64;
    let start = (var.max(1e-12)).ln();
    let mut t = [start, start, start, start];

    let mut best = nelder_mead(&neg_loglik, &mut t, 0.5, 2000, 1e-11);
    best = coordinate_refine(&neg_loglik, &mut t, best);
    for _ in 0..3 {
        best = newton_polish(&neg_loglik, &mut t, best);
    }
    // Declare convergence only if one more refinement round is within the
    // 1e-9 log-likelihood tolerance.
    let check = coordinate_refine(&neg_loglik, &mut t.clone(), best);
    if best - check > 1e-9 {
        return Err(Error::NoConvergence { iterations: 2000 });
    }

    let lam = lambdas_of(&t);
    let vc = LambdaAggregates {
        lambda0: lam[0],
        lambda1: lam[1],
        lambda2: lam[2],
        lambda3: lam[3],
    }
    .to_components(&design)?;
    Ok((fx, vc))
}

const T_MIN: f64 = -41.0;
const T_MAX: f64 = 41.0;

/// Standard Nelder-Mead on R^4 with box clamping of the parameters.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    f: &F,
    x: &mut [f64; 4],
    step: f64,
    max_iter: usize,
    ftol: f64,
) -> f64 {
    let clamp = |p: &mut [f64; 4]| {
        for v in p.iter_mut() {
            *v = v.clamp(T_MIN, T_MAX);
        }
    };
    let mut simplex: Vec<[f64; 4]> = vec![*x];
    for i in 0..4 {
        let mut p = *x;
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(f).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second_worst) = (order[0], order[4], order[3]);
        if (values[worst] - values[best]).abs() < ftol {
            break;
        }
        let mut centroid = [0.0; 4];
        for &i in &order[..4] {
            for d in 0..4 {
                centroid[d] += simplex[i][d] / 4.0;
            }
        }
        let combine = |alpha: f64| {
            let mut p = [0.0; 4];
            for d in 0..4 {
                p[d] = centroid[d] + alpha * (simplex[worst][d] - centroid[d]);
            }
            clamp(&mut p);
            p
        };
        let reflected = combine(-1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = combine(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = combine(0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink towards the best vertex
                let anchor = simplex[best];
                for i in 0..5 {
                    if i == best {
                        continue;
                    }
                    for d in 0..4 {
                        simplex[i][d] = anchor[d] + 0.5 * (simplex[i][d] - anchor[d]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best_idx = 0;
    for i in 1..5 {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    *x = simplex[best_idx];
    values[best_idx]
}

/// Golden-section refinement of each coordinate in turn; brackets expand
/// downward so boundary components (true zeros) can run off to `T_MIN`.
fn coordinate_refine<F: Fn(&[f64; 4]) -> f64>(f: &F, x: &mut [f64; 4], mut fx: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _sweep in 0..3 {
        for d in 0..4 {
            let mut lo = (x[d] - 2.0).max(T_MIN);
            let mut hi = (x[d] + 2.0).min(T_MAX);
            // expand the lower edge while it keeps improving
            loop {
                let mut probe = *x;
                probe[d] = lo;
                if f(&probe) < fx && lo > T_MIN {
                    lo = (lo - 8.0).max(T_MIN);
                } else {
                    break;
                }
            }
            let mut c = hi - INV_PHI * (hi - lo);
            let mut dd = lo + INV_PHI * (hi - lo);
            let (mut pc, mut pd) = (*x, *x);
            pc[d] = c;
            pd[d] = dd;
            let (mut fc, mut fd) = (f(&pc), f(&pd));
            for _ in 0..90 {
                if fc < fd {
                    hi = dd;
                    dd = c;
                    fd = fc;
                    c = hi - INV_PHI * (hi - lo);
                    pc[d] = c;
                    fc = f(&pc);
                } else {
                    lo = c;
                    c = dd;
                    fc = fd;
                    dd = lo + INV_PHI * (hi - lo);
                    pd[d] = dd;
                    fd = f(&pd);
                }
            }
            let cand = 0.5 * (lo + hi);
            let mut p = *x;
            p[d] = cand;
            let fp = f(&p);
            if fp < fx {
                x[d] = cand;
                fx = fp;
            }
        }
    }
    fx
}

/// One safeguarded Newton step from central finite differences.
fn newton_polish<F: Fn(&[f64; 4]) -> f64>(f: &F, x: &mut [f64; 4], fx: f64) -> f64 {
    let h = 1e-5;
    let mut grad = [0.0; 4];
    let mut hess = Matrix4::<f64>::zeros();
    let eval = |p: &[f64; 4]| f(p);
    for i in 0..4 {
        let (mut up, mut dn) = (*x, *x);
        up[i] += h;
        dn[i] -= h;
        grad[i] = (eval(&up) - eval(&dn)) / (2.0 * h);
    }
    for i in 0..4 {
        for j in i..4 {
            let mut pp = *x;
            let mut pm = *x;
            let mut mp = *x;
            let mut mm = *x;
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            let v = (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm)) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let g = Vector4::from_row_slice(&grad);
    let Some(step) = hess.lu().solve(&g) else {
        return fx;
    };
    if !step.iter().all(|v| v.is_finite()) || step.norm() > 1.0 {
        return fx;
    }
    let mut cand = *x;
    for d in 0..4 {
        cand[d] = (cand[d] - step[d]).clamp(T_MIN, T_MAX);
    }
    let fc = f(&cand);
    if fc <= fx {
        *x = cand;
        fc
    } else {
        fx
    }
}
