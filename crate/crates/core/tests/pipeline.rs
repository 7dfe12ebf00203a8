use irrmc::diagnostics::{fit_gaussian_envelope, terminal_histogram};
use irrmc::irregular_error::{fit_rate, qerror_curve};
use irrmc::mlmc::{run_mlmc, MlmcOptions};
use irrmc::payoff::Payoff;
use irrmc::quadrature::normal_expectation;
use irrmc::sde::SdeModel;
use irrmc::Error;

#[test]
fn error_curve_is_reproducible_and_fits() {
    let model = SdeModel::sincos_1d(0.3, 1.0).unwrap();
    let payoff = Payoff::clamp_ramp();
    let a = qerror_curve(&model, &payoff, 2.0, &[4, 8, 16, 32], 2000, 128, 5).unwrap();
    let b = qerror_curve(&model, &payoff, 2.0, &[4, 8, 16, 32], 2000, 128, 5).unwrap();
    assert_eq!(a, b);
    let fit = fit_rate(&a).unwrap();
    assert!(fit.slope < -0.5, "{fit:?}");
}

#[test]
fn constant_model_has_degenerate_curve() {
    let model = SdeModel::constant(vec![0.1], 0.4, vec![0.0], 1.0).unwrap();
    let payoff = Payoff::interval_indicator(0.0, 1.0).unwrap();
    let curve = qerror_curve(&model, &payoff, 1.0, &[4, 8, 16], 1000, 64, 1).unwrap();
    assert!(curve.points.iter().all(|p| p.value == 0.0));
    assert!(matches!(fit_rate(&curve), Err(Error::DegenerateCurve(_))));
}

#[test]
fn mlmc_constant_model_hits_quadrature_truth() {
    let model = SdeModel::constant(vec![-0.2], 0.6, vec![0.4], 2.0).unwrap();
    let payoff = Payoff::clamp_ramp();
    let truth = normal_expectation(|x| payoff.eval(&[x]), 0.0, 0.6 * 2f64.sqrt(), 160);
    let r = run_mlmc(&model, &payoff, 0.01, 2, &MlmcOptions::default(), 17).unwrap();
    assert!((r.estimate - truth).abs() < 0.03, "{} vs {truth}", r.estimate);
    assert!(r.levels.iter().skip(1).all(|l| l.variance == 0.0));
}

#[test]
fn envelope_of_euler_density() {
    let model = SdeModel::sincos_1d(0.0, 0.5).unwrap();
    let h = terminal_histogram(&model, 32, 20_000, 40, 4).unwrap();
    let env = fit_gaussian_envelope(&h, 0.0, 0.5).unwrap();
    assert!(env.big_c >= 1.0 && env.big_c < 3.0, "{env:?}");
}
