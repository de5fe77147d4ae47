//! Python bindings: the main design/simulation/estimation/power operations
//! behind a small, flat API. Build the cdylib with `cargo build -p
//! crt-subgroup-py --release` and import it as `crt_subgroup_py` (see
//! `python/smoke_test.py`).

use crt_subgroup as core;
use crt_subgroup::{
    analyze_trial, icc_to_components, normal_cdf as core_normal_cdf,
    normal_quantile as core_normal_quantile, power_lower_bound, required_n1_level2,
    required_n_level1, required_subgroup_n_level1, required_subgroup_n_level2, run_mc, simulate,
    var_delta_formula, FixedEffects, IccProfile, McConfig, PowerSpec, Seed, SubgroupLevel,
    SubgroupPowerSpec, TrialData, VarianceComponents,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn level_of(level: u8) -> PyResult<SubgroupLevel> {
    match level {
        1 => Ok(SubgroupLevel::LevelOne),
        2 => Ok(SubgroupLevel::LevelTwo),
        other => Err(PyValueError::new_err(format!(
            "level must be 1 or 2, got {other}"
        ))),
    }
}

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Balanced design: `level` is 1 or 2, `n3` the level-three units per arm,
/// `mid`/`low` the per-unit cell dimensions.
#[pyclass(name = "Design")]
#[derive(Clone)]
struct PyDesign {
    inner: core::Design,
}

#[pymethods]
impl PyDesign {
    /// Level-one subgrouping: n3 level-three units per arm, n2 level-two
    /// units each, n level-one units per subgroup.
    #[staticmethod]
    fn level_one(n3: usize, n2: usize, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: core::Design::level_one(n3, n2, n).map_err(err)?,
        })
    }

    /// Level-two subgrouping: n3 per arm, n level-two units per subgroup,
    /// n1 level-one units per level-two unit.
    #[staticmethod]
    fn level_two(n3: usize, n: usize, n1: usize) -> PyResult<Self> {
        Ok(Self {
            inner: core::Design::level_two(n3, n, n1).map_err(err)?,
        })
    }

    #[getter]
    fn level(&self) -> u8 {
        match self.inner.subgroup_level() {
            SubgroupLevel::LevelOne => 1,
            SubgroupLevel::LevelTwo => 2,
        }
    }

    #[getter]
    fn n3_per_arm(&self) -> usize {
        self.inner.n3_per_arm()
    }

    #[getter]
    fn total_observations(&self) -> usize {
        self.inner.total_observations()
    }

    fn __repr__(&self) -> String {
        format!(
            "Design(level={}, n3={}, mid={}, low={})",
            self.level(),
            self.inner.n3_per_arm(),
            self.inner.mid(),
            self.inner.low()
        )
    }
}

fn components_of(
    design: &core::Design,
    components: (f64, f64, f64, f64),
) -> PyResult<VarianceComponents> {
    VarianceComponents::new(
        design.subgroup_level(),
        components.0,
        components.1,
        components.2,
        components.3,
    )
    .map_err(err)
}

/// Map an ICC profile to raw variance components
/// (sigma3_sq, sigma2_sq, sigma_low_sq, sigma_e_sq). `rho_1p` is required
/// for level 1 and ignored for level 2.
#[pyfunction]
#[pyo3(signature = (level, sigma_sq, rho1, rho_2p, rho2, rho_1p=None))]
fn icc_components(
    level: u8,
    sigma_sq: f64,
    rho1: f64,
    rho_2p: f64,
    rho2: f64,
    rho_1p: Option<f64>,
) -> PyResult<(f64, f64, f64, f64)> {
    let level = level_of(level)?;
    let profile = IccProfile {
        sigma_sq,
        rho1,
        rho_1p,
        rho_2p,
        rho2,
    };
    let vc = icc_to_components(&profile, level).map_err(err)?;
    Ok((vc.sigma3_sq, vc.sigma2_sq, vc.sigma_low_sq, vc.sigma_e_sq))
}

/// Simulate one balanced dataset; returns the outcomes in flat layout order.
#[pyfunction]
fn simulate_trial(
    design: &PyDesign,
    fixed_effects: (f64, f64, f64, f64),
    components: (f64, f64, f64, f64),
    seed: u64,
) -> PyResult<Vec<f64>> {
    let vc = components_of(&design.inner, components)?;
    let fx = FixedEffects::new(
        fixed_effects.0,
        fixed_effects.1,
        fixed_effects.2,
        fixed_effects.3,
    );
    let data = simulate(&design.inner, &fx, &vc, Seed(seed)).map_err(err)?;
    Ok(data.y().to_vec())
}

/// Estimate and test one dataset (flat outcome vector in layout order).
#[pyfunction]
#[pyo3(signature = (design, y, alpha=0.05))]
fn analyze(design: &PyDesign, y: Vec<f64>, alpha: f64) -> PyResult<Py<PyDict>> {
    let data = TrialData::from_parts(design.inner, y).map_err(err)?;
    let analysis = analyze_trial(&data, alpha).map_err(err)?;
    Python::with_gil(|py| {
        let out = PyDict::new_bound(py);
        out.set_item("delta_hat", analysis.estimate.delta_hat)?;
        out.set_item("delta1_hat", analysis.estimate.delta1_hat)?;
        out.set_item("delta2_hat", analysis.estimate.delta2_hat)?;
        out.set_item("var_hat", analysis.estimate.var_hat)?;
        out.set_item("se", analysis.estimate.var_hat.sqrt())?;
        out.set_item("t0", analysis.test.t0)?;
        out.set_item("p_value", analysis.test.p_value)?;
        out.set_item("reject", analysis.test.reject)?;
        out.set_item("alpha", analysis.test.alpha)?;
        out.set_item(
            "fx_hat",
            (
                analysis.estimate.fx_hat.beta0,
                analysis.estimate.fx_hat.tau,
                analysis.estimate.fx_hat.xi,
                analysis.estimate.fx_hat.delta,
            ),
        )?;
        let vc = &analysis.components.vc_hat;
        out.set_item(
            "components",
            (vc.sigma3_sq, vc.sigma2_sq, vc.sigma_low_sq, vc.sigma_e_sq),
        )?;
        out.set_item("raw_components", analysis.components.raw)?;
        out.set_item("truncated", analysis.components.truncated)?;
        out.set_item(
            "sums_of_squares",
            (
                analysis.ss.ss0,
                analysis.ss.ss1,
                analysis.ss.ss2,
                analysis.ss.ss3,
            ),
        )?;
        Ok(out.unbind())
    })
}

/// Plug-in Var(delta_hat) for a design and components.
#[pyfunction]
fn var_delta(design: &PyDesign, components: (f64, f64, f64, f64)) -> PyResult<f64> {
    let vc = components_of(&design.inner, components)?;
    Ok(var_delta_formula(&design.inner, &vc))
}

/// Analytic power lower bound Phi(|delta|/sqrt(var) - z_{1-alpha/2}).
#[pyfunction]
#[pyo3(signature = (delta, var, alpha=0.05))]
fn analytic_power(delta: f64, var: f64, alpha: f64) -> PyResult<f64> {
    power_lower_bound(delta, var, alpha).map_err(err)
}

/// Per-subgroup level-one count for level-one subgrouping; raises
/// ValueError when no finite size reaches the power.
#[pyfunction]
#[pyo3(signature = (delta, alpha, power, n3, n2, sigma_e_sq, sigma_grp_sq))]
fn required_n_level_one(
    delta: f64,
    alpha: f64,
    power: f64,
    n3: usize,
    n2: usize,
    sigma_e_sq: f64,
    sigma_grp_sq: f64,
) -> PyResult<(u64, bool)> {
    let spec = PowerSpec::new(alpha, power, delta).map_err(err)?;
    let vc = VarianceComponents::new(SubgroupLevel::LevelOne, 0.0, 0.0, sigma_grp_sq, sigma_e_sq)
        .map_err(err)?;
    let size = required_n_level1(&spec, n3, n2, &vc).map_err(err)?;
    Ok((size.value, size.clamped))
}

/// Level-one count N1 for level-two subgrouping.
#[pyfunction]
#[pyo3(signature = (delta, alpha, power, n3, n, sigma_e_sq, sigma_1_sq, sigma_2_sq))]
#[allow(clippy::too_many_arguments)]
fn required_n1_level_two(
    delta: f64,
    alpha: f64,
    power: f64,
    n3: usize,
    n: usize,
    sigma_e_sq: f64,
    sigma_1_sq: f64,
    sigma_2_sq: f64,
) -> PyResult<(u64, bool)> {
    let spec = PowerSpec::new(alpha, power, delta).map_err(err)?;
    let vc =
        VarianceComponents::new(SubgroupLevel::LevelTwo, 0.0, sigma_2_sq, sigma_1_sq, sigma_e_sq)
            .map_err(err)?;
    let size = required_n1_level2(&spec, n3, n, &vc).map_err(err)?;
    Ok((size.value, size.clamped))
}

/// Per-subgroup sizes for the individual-subgroup tests; `level` selects
/// N_{1g} (1) or N_{2g} (2).
#[pyfunction]
#[pyo3(signature = (level, delta_over_sigma, alpha_g, power, other_count, n3, rho1, rho_2p))]
#[allow(clippy::too_many_arguments)]
fn required_subgroup_size(
    level: u8,
    delta_over_sigma: f64,
    alpha_g: f64,
    power: f64,
    other_count: usize,
    n3: usize,
    rho1: f64,
    rho_2p: f64,
) -> PyResult<u64> {
    let spec = SubgroupPowerSpec::new(alpha_g, power, delta_over_sigma).map_err(err)?;
    let icc = IccProfile {
        sigma_sq: 1.0,
        rho1,
        rho_1p: None,
        rho_2p,
        rho2: 0.0,
    };
    let size = match level_of(level)? {
        SubgroupLevel::LevelOne => required_subgroup_n_level1(&spec, other_count, n3, &icc),
        SubgroupLevel::LevelTwo => required_subgroup_n_level2(&spec, other_count, n3, &icc),
    }
    .map_err(err)?;
    Ok(size.value)
}

/// Empirical power over seeded Monte Carlo replicates. Returns
/// (empirical_power, rejections, degenerate_count).
#[pyfunction]
#[pyo3(signature = (design, fixed_effects, components, replicates, seed, alpha=0.05, workers=1))]
#[allow(clippy::too_many_arguments)]
fn empirical_power(
    design: &PyDesign,
    fixed_effects: (f64, f64, f64, f64),
    components: (f64, f64, f64, f64),
    replicates: usize,
    seed: u64,
    alpha: f64,
    workers: usize,
) -> PyResult<(f64, usize, usize)> {
    let config = McConfig {
        design: design.inner,
        fx: FixedEffects::new(
            fixed_effects.0,
            fixed_effects.1,
            fixed_effects.2,
            fixed_effects.3,
        ),
        vc: components_of(&design.inner, components)?,
        alpha,
        replicates,
        seed: Seed(seed),
        workers,
    };
    let result = run_mc(&config).map_err(err)?;
    Ok((
        result.empirical_power,
        result.rejections,
        result.degenerate_count,
    ))
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    core_normal_cdf(x)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    core_normal_quantile(p).map_err(err)
}

#[pymodule]
fn crt_subgroup_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDesign>()?;
    m.add_function(wrap_pyfunction!(icc_components, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trial, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(var_delta, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_power, m)?)?;
    m.add_function(wrap_pyfunction!(required_n_level_one, m)?)?;
    m.add_function(wrap_pyfunction!(required_n1_level_two, m)?)?;
    m.add_function(wrap_pyfunction!(required_subgroup_size, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_power, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    Ok(())
}
