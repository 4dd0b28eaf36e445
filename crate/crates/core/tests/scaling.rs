use semires_core::classify::{LawForm, ScalingLaw};
use semires_core::probe::ResolventSample;
use semires_core::scaling::{
    fit_power, fit_power_log, verdict, FitModel, Verdict, DEFAULT_TOL_GAMMA,
};

fn sample(h: f64, norm: f64) -> ResolventSample {
    ResolventSample {
        h,
        z: 1.0,
        norm,
        iterations: 10,
        converged: true,
        grid_n: 1000,
        cap_eta: 1.0,
    }
}

fn h_list(n: usize, h_hi: f64, h_lo: f64) -> Vec<f64> {
    (0..n)
        .map(|i| h_hi * (h_lo / h_hi).powf(i as f64 / (n - 1) as f64))
        .collect()
}

#[test]
fn exact_power_law_is_recovered() {
    let samples: Vec<ResolventSample> = h_list(7, 0.02, 0.0025)
        .iter()
        .map(|&h| sample(h, 7.0 * h.powf(-4.0 / 3.0)))
        .collect();
    let fit = fit_power(&samples).unwrap();
    assert_eq!(fit.model, FitModel::PurePower);
    assert!((fit.gamma - 4.0 / 3.0).abs() < 1e-12);
    assert!((fit.log_c - 7.0f64.ln()).abs() < 1e-12);
    assert!((fit.r2 - 1.0).abs() < 1e-12);
    assert!(fit.sse < 1e-12);
    assert_eq!(fit.n_points, 7);
}

#[test]
fn inverse_h_law_gives_gamma_one() {
    let samples: Vec<ResolventSample> = h_list(5, 0.04, 0.005)
        .iter()
        .map(|&h| sample(h, 5.0 / h))
        .collect();
    let fit = fit_power(&samples).unwrap();
    assert!((fit.gamma - 1.0).abs() < 1e-12);
}

#[test]
fn power_log_law_is_recovered_exactly() {
    // norm = (1/h) * log(1/h): gamma = 1, kappa = 1
    let samples: Vec<ResolventSample> = h_list(9, 0.02, 0.0005)
        .iter()
        .map(|&h| sample(h, (1.0 / h) * (1.0 / h).ln()))
        .collect();
    let fit = fit_power_log(&samples).unwrap();
    assert!((fit.gamma - 1.0).abs() < 1e-6, "gamma = {}", fit.gamma);
    assert!((fit.kappa - 1.0).abs() < 1e-6, "kappa = {}", fit.kappa);
    assert!(fit.sse < 1e-16);
}

#[test]
fn power_log_model_wins_on_power_log_data() {
    let samples: Vec<ResolventSample> = h_list(9, 0.02, 0.0005)
        .iter()
        .map(|&h| sample(h, (1.0 / h) * (1.0 / h).ln()))
        .collect();
    let pp = fit_power(&samples).unwrap();
    let pl = fit_power_log(&samples).unwrap();
    assert!(pl.sse < pp.sse);
    // and the converse on pure-power data the sse tie goes to near-zero both
    let pure: Vec<ResolventSample> = h_list(9, 0.02, 0.0005)
        .iter()
        .map(|&h| sample(h, h.powf(-1.5)))
        .collect();
    let pp = fit_power(&pure).unwrap();
    assert!(pp.sse < 1e-16);
}

#[test]
fn noise_reduces_r2_but_keeps_gamma() {
    let mut phase = 0.3f64;
    let samples: Vec<ResolventSample> = h_list(9, 0.02, 0.00125)
        .iter()
        .map(|&h| {
            phase = (phase * 7.13).fract();
            sample(h, h.powf(-1.2) * (1.0 + 0.02 * (phase - 0.5)))
        })
        .collect();
    let fit = fit_power(&samples).unwrap();
    assert!((fit.gamma - 1.2).abs() < 0.05);
    assert!(fit.r2 > 0.99 && fit.r2 < 1.0);
}

#[test]
fn affine_equivariance_of_the_fit() {
    let base: Vec<ResolventSample> = h_list(7, 0.02, 0.0025)
        .iter()
        .map(|&h| sample(h, 3.0 * h.powf(-1.4)))
        .collect();
    let scaled: Vec<ResolventSample> = base
        .iter()
        .map(|s| sample(s.h, 10.0 * s.norm))
        .collect();
    let f0 = fit_power(&base).unwrap();
    let f1 = fit_power(&scaled).unwrap();
    assert!((f0.gamma - f1.gamma).abs() < 1e-12);
    assert!((f1.log_c - f0.log_c - 10.0f64.ln()).abs() < 1e-12);
}

#[test]
fn sample_order_does_not_matter() {
    let mut samples: Vec<ResolventSample> = h_list(7, 0.02, 0.0025)
        .iter()
        .map(|&h| sample(h, 2.0 * h.powf(-1.1) * (1.0 + 0.01 * h.sin())))
        .collect();
    let f0 = fit_power(&samples).unwrap();
    samples.reverse();
    samples.swap(1, 4);
    let f1 = fit_power(&samples).unwrap();
    assert_eq!(f0.gamma.to_bits(), f1.gamma.to_bits());
    assert_eq!(f0.log_c.to_bits(), f1.log_c.to_bits());
    assert_eq!(f0.sse.to_bits(), f1.sse.to_bits());
}

#[test]
fn unusable_samples_are_filtered() {
    let mut samples: Vec<ResolventSample> = h_list(7, 0.02, 0.0025)
        .iter()
        .map(|&h| sample(h, h.powf(-1.3)))
        .collect();
    samples[2].converged = false;
    samples[4].norm = f64::INFINITY;
    let fit = fit_power(&samples).unwrap();
    assert_eq!(fit.n_points, 5);
    assert!((fit.gamma - 1.3).abs() < 1e-12);
}

#[test]
fn too_few_samples_or_narrow_span_fails() {
    let samples: Vec<ResolventSample> = h_list(3, 0.02, 0.005)
        .iter()
        .map(|&h| sample(h, 1.0 / h))
        .collect();
    assert!(fit_power(&samples).is_err());
    // 5 points but only a factor 2 of h span
    let samples: Vec<ResolventSample> = h_list(5, 0.02, 0.01)
        .iter()
        .map(|&h| sample(h, 1.0 / h))
        .collect();
    assert!(fit_power(&samples).is_err());
    assert!(fit_power_log(&samples).is_err());
}

#[test]
fn power_log_requires_small_h() {
    // h = 0.9 makes log log(1/h) undefined territory
    let samples: Vec<ResolventSample> = vec![
        sample(0.9, 1.0),
        sample(0.4, 2.0),
        sample(0.1, 8.0),
        sample(0.02, 30.0),
    ];
    assert!(fit_power_log(&samples).is_err());
}

#[test]
fn collinearity_fallback_engages_on_narrow_spans() {
    // span is factor 4 (barely admissible); ln t varies little, but the
    // regressors are still distinguishable here, so just check the flag is
    // reported coherently and gamma stays sane
    let samples: Vec<ResolventSample> = h_list(5, 0.02, 0.005)
        .iter()
        .map(|&h| sample(h, h.powf(-1.0)))
        .collect();
    let fit = fit_power_log(&samples).unwrap();
    if fit.collinearity_warning {
        assert_eq!(fit.kappa, 0.0);
    }
    assert!((fit.gamma - 1.0).abs() < 0.2);
}

fn law(form: LawForm, exponent: f64) -> ScalingLaw {
    ScalingLaw { form, exponent }
}

#[test]
fn verdict_rules() {
    let fit = |gamma: f64, r2: f64| {
        let mut f = fit_power(
            &h_list(5, 0.02, 0.0025)
                .iter()
                .map(|&h| sample(h, h.powf(-gamma)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        f.r2 = r2;
        f
    };
    // plain power law
    assert_eq!(
        verdict(&fit(1.32, 0.999), &law(LawForm::Power, 4.0 / 3.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Consistent
    );
    assert_eq!(
        verdict(&fit(1.7, 0.999), &law(LawForm::Power, 4.0 / 3.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Inconsistent
    );
    assert_eq!(
        verdict(&fit(1.33, 0.9), &law(LawForm::Power, 4.0 / 3.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Inconclusive
    );
    // 2 + eta band
    assert_eq!(
        verdict(&fit(1.85, 0.999), &law(LawForm::PowerPlusEta, 2.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Consistent
    );
    assert_eq!(
        verdict(&fit(2.1, 0.999), &law(LawForm::PowerPlusEta, 2.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Consistent
    );
    assert_eq!(
        verdict(&fit(1.5, 0.999), &law(LawForm::PowerPlusEta, 2.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Inconsistent
    );
    assert_eq!(
        verdict(&fit(2.6, 0.999), &law(LawForm::PowerPlusEta, 2.0), DEFAULT_TOL_GAMMA, false),
        Verdict::Inconsistent
    );
    // superpolynomial accepts either huge fitted gamma or infinity sentinels
    assert_eq!(
        verdict(&fit(3.4, 0.5), &law(LawForm::Superpolynomial, f64::INFINITY), DEFAULT_TOL_GAMMA, false),
        Verdict::Consistent
    );
    assert_eq!(
        verdict(&fit(1.2, 0.999), &law(LawForm::Superpolynomial, f64::INFINITY), DEFAULT_TOL_GAMMA, true),
        Verdict::Consistent
    );
    assert_eq!(
        verdict(&fit(1.2, 0.999), &law(LawForm::Superpolynomial, f64::INFINITY), DEFAULT_TOL_GAMMA, false),
        Verdict::Inconsistent
    );
}
