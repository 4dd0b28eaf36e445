//! Least-squares scaling-law fits over `(h, norm)` samples and verdicts
//! against predicted laws.

use serde::Serialize;

use crate::classify::{LawForm, ScalingLaw};
use crate::error::{CoreError, Result};
use crate::probe::ResolventSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    PurePower,
    PowerLog,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingFitResult {
    pub model: FitModel,
    /// Fitted exponent of `h^{-gamma}`.
    pub gamma: f64,
    /// Coefficient of `log log(1/h)` (power_log only).
    pub kappa: f64,
    pub log_c: f64,
    pub r2: f64,
    pub sse: f64,
    pub n_points: usize,
    /// Set when the `log log(1/h)` regressor is nearly collinear with
    /// `log(1/h)` over the sampled span.
    pub collinearity_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

/// Converged, finite samples sorted by h (descending), as `(t, y)` with
/// `t = log(1/h)`, `y = log norm`.
fn usable(samples: &[ResolventSample]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.converged && s.norm.is_finite() && s.norm > 0.0)
        .map(|s| ((1.0 / s.h).ln(), s.norm.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn span_ok(pts: &[(f64, f64)]) -> bool {
    if pts.len() < 4 {
        return false;
    }
    // h must span at least a factor of 4
    pts[pts.len() - 1].0 - pts[0].0 >= 4.0f64.ln() - 1e-12
}

fn check_pre(pts: &[(f64, f64)]) -> Result<()> {
    if pts.len() < 4 {
        return Err(CoreError::Fit(format!(
            "need >= 4 converged samples, got {}",
            pts.len()
        )));
    }
    if !span_ok(pts) {
        return Err(CoreError::Fit("h values must span at least a factor 4".into()));
    }
    Ok(())
}

/// `log norm = log_c + gamma * log(1/h)`.
pub fn fit_power(samples: &[ResolventSample]) -> Result<ScalingFitResult> {
    let pts = usable(samples);
    check_pre(&pts)?;
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for &(t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    let gamma = sty / stt;
    let log_c = my - gamma * mt;
    let sse: f64 = pts
        .iter()
        .map(|&(t, y)| {
            let r = y - log_c - gamma * t;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ScalingFitResult {
        model: FitModel::PurePower,
        gamma,
        kappa: 0.0,
        log_c,
        r2,
        sse,
        n_points: pts.len(),
        collinearity_warning: false,
    })
}

/// `log norm = log_c + gamma * log(1/h) + kappa * log log(1/h)`.
pub fn fit_power_log(samples: &[ResolventSample]) -> Result<ScalingFitResult> {
    let pts = usable(samples);
    check_pre(&pts)?;
    for &(t, _) in &pts {
        if t <= 1.0 {
            return Err(CoreError::Fit(
                "power_log fit requires h < 1/e so that log log(1/h) is defined".into(),
            ));
        }
    }
    let n = pts.len() as f64;
    // regressors: 1, t, ln t
    let (mut st, mut sl, mut sy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        st += t;
        sl += t.ln();
        sy += y;
    }
    let (mt, ml, my) = (st / n, sl / n, sy / n);
    let (mut att, mut atl, mut all, mut bty, mut bly, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        let dt = t - mt;
        let dl = t.ln() - ml;
        let dy = y - my;
        att += dt * dt;
        atl += dt * dl;
        all += dl * dl;
        bty += dt * dy;
        bly += dl * dy;
        syy += dy * dy;
    }
    let det = att * all - atl * atl;
    let collinear = det <= 1e-10 * att * all;
    let (gamma, kappa) = if collinear {
        // fall back to the pure power direction
        (bty / att, 0.0)
    } else {
        ((all * bty - atl * bly) / det, (att * bly - atl * bty) / det)
    };
    let log_c = my - gamma * mt - kappa * ml;
    let sse: f64 = pts
        .iter()
        .map(|&(t, y)| {
            let r = y - log_c - gamma * t - kappa * t.ln();
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ScalingFitResult {
        model: FitModel::PowerLog,
        gamma,
        kappa,
        log_c,
        r2,
        sse,
        n_points: pts.len(),
        collinearity_warning: collinear,
    })
}

/// Compare a fit against the predicted law.
///
/// Superpolynomial verdicts also accept `+inf` sentinels in the raw samples
/// (the caller passes `had_infinite`).
pub fn verdict(
    fit: &ScalingFitResult,
    law: &ScalingLaw,
    tol_gamma: f64,
    had_infinite: bool,
) -> Verdict {
    match law.form {
        LawForm::Superpolynomial => {
            if had_infinite || fit.gamma >= 3.0 {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            }
        }
        LawForm::PowerPlusEta => {
            if fit.r2 < 0.98 {
                return Verdict::Inconclusive;
            }
            if fit.gamma >= 1.7 && fit.gamma <= 2.0 + tol_gamma {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            }
        }
        _ => {
            if fit.r2 < 0.98 {
                return Verdict::Inconclusive;
            }
            if (fit.gamma - law.exponent).abs() <= tol_gamma {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            }
        }
    }
}

pub const DEFAULT_TOL_GAMMA: f64 = 0.15;
