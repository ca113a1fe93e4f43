use std::sync::Arc;

use quasilin::grid::{Grid, GridField, Sector, SectorSpec};
use quasilin::nonlinearity::BLNonlinearity;
use quasilin::pohozaev::{FunctionalContext, Transform};
use quasilin::solver::{
    euler_lagrange_residual, find_bracket, minimize, quasilinear_residual, shooting_oracle, SolveConfig,
};
use quasilin::transform::ChangeOfVariables;
use quasilin::Error;

fn radial(transform: Transform) -> FunctionalContext {
    FunctionalContext::new(
        transform,
        BLNonlinearity::model_power(3.0, 1.0, 3).unwrap(),
        SectorSpec::radial(3).unwrap(),
    )
}

fn gaussian_seed(ctx: &FunctionalContext, r_max: f64, dr: f64, a: f64) -> GridField {
    let grid = Arc::new(Grid::new(*ctx.spec(), r_max, dr).unwrap());
    GridField::from_fn(grid, |x| a * (-0.25 * x[0] * x[0]).exp())
}

fn compare_with_shooting(transform: Transform) {
    let ctx = radial(transform);
    let shot = shooting_oracle(&ctx, find_bracket(&ctx).unwrap(), 20.0, 0.01).unwrap();
    let report = minimize(&ctx, &gaussian_seed(&ctx, 20.0, 0.01, 10.0), &SolveConfig::default()).unwrap();
    assert!(report.converged);
    let u_var = ctx.transform().value(report.center_value());
    assert!((u_var - shot.center_u).abs() <= 1e-2 * shot.center_u, "{u_var} vs {}", shot.center_u);
    assert!((report.beta - shot.energy).abs() <= 1e-3 * shot.energy, "{} vs {}", report.beta, shot.energy);
}

#[test]
fn quasilinear_minimizer_matches_shooting() {
    compare_with_shooting(Transform::default());
}

#[test]
fn semilinear_minimizer_matches_shooting() {
    compare_with_shooting(Transform::Identity);
}

#[test]
fn report_invariants() {
    let ctx = radial(Transform::default());
    let r = minimize(&ctx, &gaussian_seed(&ctx, 20.0, 0.05, 10.0), &SolveConfig::default()).unwrap();
    assert!((r.beta - r.psi / 3.0).abs() <= 1e-10 * r.psi);
    assert!(r.deficit.abs() <= 1e-10 * r.psi);
    assert!((r.theta - 1.0).abs() <= 1e-3);
    assert!(r.duality_gap <= 1e-8 * (1.0 + r.beta.abs()));
    assert!(r.el_residual <= 1e-2 && r.el_residual > 0.0);
    assert!(r.quasilinear_residual <= 1e-3);
    assert!(r.history.windows(2).all(|w| w[1].rescaled || w[1].energy <= w[0].energy + 1e-12 * w[0].energy));
}

#[test]
fn converged_field_is_a_fixed_point() {
    let ctx = radial(Transform::default());
    let first = minimize(&ctx, &gaussian_seed(&ctx, 20.0, 0.05, 10.0), &SolveConfig::default()).unwrap();
    let again = minimize(&ctx, &first.field, &SolveConfig::default()).unwrap();
    assert!(again.iterations <= 2, "{}", again.iterations);
    assert!((again.beta - first.beta).abs() <= 1e-12 * first.beta);
}

#[test]
fn residual_decays_under_refinement() {
    let ctx = radial(Transform::default());
    let res: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dr| {
            let r = minimize(&ctx, &gaussian_seed(&ctx, 20.0, dr, 10.0), &SolveConfig::default()).unwrap();
            euler_lagrange_residual(&ctx, &r.field).unwrap()
        })
        .collect();
    for w in res.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{res:?}");
    }
}

#[test]
fn residuals_of_trivial_and_generic_fields() {
    let ctx = radial(Transform::default());
    let seed = gaussian_seed(&ctx, 20.0, 0.05, 10.0);
    assert!(euler_lagrange_residual(&ctx, &seed).unwrap() > 1e-2);
    assert_eq!(quasilinear_residual(&ctx, &GridField::zeros(seed.grid().clone())).unwrap(), 0.0);
    assert!(quasilinear_residual(&ctx, &seed).unwrap() > 1e-2);
}

#[test]
fn inadmissible_start_is_rejected() {
    let ctx = radial(Transform::default());
    let seed = gaussian_seed(&ctx, 20.0, 0.05, 0.5);
    assert!(matches!(
        minimize(&ctx, &seed, &SolveConfig::default()),
        Err(Error::Admissibility { .. })
    ));
}

#[test]
fn invalid_config_is_rejected() {
    let ctx = radial(Transform::default());
    let cfg = SolveConfig {
        grad_tol: -1.0,
        ..SolveConfig::default()
    };
    assert!(matches!(
        minimize(&ctx, &gaussian_seed(&ctx, 20.0, 0.05, 10.0), &cfg),
        Err(Error::Validation(_))
    ));
}

#[test]
fn biaxial_descent_stays_antisymmetric() {
    let spec = SectorSpec::new(4, 2, Sector::BiaxialTau).unwrap();
    let ctx = FunctionalContext::new(Transform::default(), BLNonlinearity::model_power(3.0, 1.0, 4).unwrap(), spec);
    let grid = Arc::new(Grid::new(spec, 12.0, 0.3).unwrap());
    let seed = GridField::from_fn(grid.clone(), |x| 12.0 * (x[0] - x[1]) * (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp());
    let cfg = SolveConfig {
        max_iter: 40,
        ..SolveConfig::default()
    };
    let r = minimize(&ctx, &seed, &cfg).unwrap();
    let g = r.field.grid();
    assert!(r.field.max_abs() > 0.0);
    for i in 0..g.len() {
        assert_eq!(r.field.values()[i], -r.field.values()[g.tau_index(i)]);
    }
    assert!(r.history.windows(2).all(|w| w[1].rescaled || w[1].energy <= w[0].energy * (1.0 + 1e-12)));
}
