//! Grid checks of the dense oracle against the closed forms.

use crt_subgroup::*;
use nalgebra::DMatrix;

fn all_small_designs() -> Vec<Design> {
    let mut designs = Vec::new();
    for n3 in 2..=4 {
        for mid in 2..=4 {
            for low in 2..=4 {
                if let Ok(d) = Design::from_dims(SubgroupLevel::LevelOne, n3, mid, 2 * low) {
                    designs.push(d);
                }
                if let Ok(d) = Design::from_dims(SubgroupLevel::LevelTwo, n3, 2 * mid, low) {
                    designs.push(d);
                }
            }
        }
    }
    designs
}

#[test]
fn closed_form_inverse_on_the_small_design_grid() {
    for design in all_small_designs() {
        let vc = VarianceComponents::new(design.subgroup_level(), 0.7, 0.4, 0.3, 0.9).unwrap();
        let v = build_covariance(&design, &vc).unwrap();
        let vinv = inverse_covariance_closed_form(&design, &vc).unwrap();
        let prod = v.matrix() * vinv.matrix();
        let id = DMatrix::<f64>::identity(v.dim(), v.dim());
        let err = (prod - id).abs().max();
        assert!(err < 1e-10, "{design:?}: max abs deviation {err:.2e}");
    }
}

#[test]
fn gls_equals_closed_form_on_seeded_instances() {
    // dims drawn from {2,3,4} per instance, both levels
    let fx = FixedEffects::new(0.6, -0.8, 1.1, 0.4);
    let dims = |seed: u64| {
        let pick = |s: u64| (2 + (s % 3)) as usize;
        (pick(seed), pick(seed / 3), pick(seed / 9))
    };
    for level in [SubgroupLevel::LevelOne, SubgroupLevel::LevelTwo] {
        let vc = VarianceComponents::new(level, 0.15, 0.1, 0.08, 0.9).unwrap();
        for seed in 0..20u64 {
            let (a, b, c) = dims(seed.wrapping_mul(2654435761));
            let design = match level {
                SubgroupLevel::LevelOne => Design::level_one(a, b, c).unwrap(),
                SubgroupLevel::LevelTwo => Design::level_two(a, b, c).unwrap(),
            };
            let data = simulate(&design, &fx, &vc, Seed(5000 + seed)).unwrap();
            let gls = gls_fixed_effects(&data, &vc).unwrap();
            let comp = variance_components_mle(&sums_of_squares(&data), &design);
            let est = estimate_delta(&data, &comp);
            for (got, want) in [
                (gls.beta0, est.fx_hat.beta0),
                (gls.tau, est.fx_hat.tau),
                (gls.xi, est.fx_hat.xi),
                (gls.delta, est.delta_hat),
            ] {
                assert!(
                    (got - want).abs() < 1e-10,
                    "{level:?} seed {seed}: GLS {got} vs closed form {want}"
                );
            }
        }
    }
}

#[test]
fn paper_literal_ss0_is_not_the_likelihood_maximizer() {
    // The grand-mean form of SS_0 does not maximize the exact likelihood;
    // the within-cell form does. This documents the resolution of the
    // printed level-two display.
    let design = Design::level_two(3, 3, 4).unwrap();
    let fx = FixedEffects::new(1.5, 0.7, -0.4, 0.9);
    let vc = VarianceComponents::new(SubgroupLevel::LevelTwo, 3.0, 2.0, 1.5, 1.0).unwrap();
    let data = simulate(&design, &fx, &vc, Seed(2000)).unwrap();

    let within = variance_components_mle(&sums_of_squares(&data), &design);
    let literal = variance_components_mle(
        &sums_of_squares_with(&data, SsZeroForm::GrandMeanCells),
        &design,
    );
    let est = estimate_delta(&data, &within);

    let ll_within = log_likelihood(&data, &est.fx_hat, &within.vc_hat).unwrap();
    if let Ok(ll_literal) = log_likelihood(&data, &est.fx_hat, &literal.vc_hat) {
        assert!(
            ll_within > ll_literal + 1e-3,
            "within-cell {ll_within} should dominate grand-mean {ll_literal}"
        );
    }
    // and the numeric maximizer agrees with the within-cell form
    let (_, vc_num) = numeric_ml(&data).unwrap();
    assert!((vc_num.sigma_e_sq - within.vc_hat.sigma_e_sq).abs() / within.vc_hat.sigma_e_sq < 1e-6);
    assert!((vc_num.sigma_e_sq - literal.vc_hat.sigma_e_sq).abs() / literal.vc_hat.sigma_e_sq > 1e-3);
}

#[test]
fn numeric_ml_matches_closed_form_both_levels() {
    // three instances per level here; the full 20-per-level sweep is the
    // acceptance suite's criterion
    let fx = FixedEffects::new(1.5, 0.7, -0.4, 0.9);
    for level in [SubgroupLevel::LevelOne, SubgroupLevel::LevelTwo] {
        let vc = VarianceComponents::new(level, 3.0, 2.0, 1.5, 1.0).unwrap();
        let mut checked = 0;
        let mut seed = 9000u64;
        while checked < 3 {
            seed += 1;
            let design = match level {
                SubgroupLevel::LevelOne => Design::level_one(3, 3, 3).unwrap(),
                SubgroupLevel::LevelTwo => Design::level_two(3, 3, 3).unwrap(),
            };
            let data = simulate(&design, &fx, &vc, Seed(seed)).unwrap();
            let comp = variance_components_mle(&sums_of_squares(&data), &design);
            if comp.truncated != [false; 4] {
                continue;
            }
            checked += 1;
            let (_, vc_num) = numeric_ml(&data).unwrap();
            for (got, want) in [
                (vc_num.sigma3_sq, comp.vc_hat.sigma3_sq),
                (vc_num.sigma2_sq, comp.vc_hat.sigma2_sq),
                (vc_num.sigma_low_sq, comp.vc_hat.sigma_low_sq),
                (vc_num.sigma_e_sq, comp.vc_hat.sigma_e_sq),
            ] {
                assert!(
                    (got - want).abs() / want.max(1e-12) < 1e-6,
                    "{level:?} seed {seed}: numeric {got} vs closed {want}"
                );
            }
        }
    }
}
