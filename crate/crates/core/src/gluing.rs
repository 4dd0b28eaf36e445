//! Two pieces of "worst component wins" evidence: a discrete check of the
//! elementary propagation inequality for `P = h D_x`, and a comparison of a
//! multi-component resolvent norm against single-component surgeries.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::probe::{h_sweep, CutoffSpec, FnPotential, ProbeConfig, ResolventSample};

/// Band-limited test function `u(x) = sum_j c_j e^{i omega_j x}` with exact
/// derivatives, so the inequality check is not polluted by differencing
/// error.
#[derive(Debug, Clone)]
pub struct BandLimited {
    /// `(omega, re c, im c)` triples.
    pub modes: Vec<(f64, f64, f64)>,
}

impl BandLimited {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for &(w, cr, ci) in &self.modes {
            let (s, c) = (w * x).sin_cos();
            re += cr * c - ci * s;
            im += cr * s + ci * c;
        }
        (re, im)
    }

    /// `u'(x)`: each mode picks up `i omega`.
    pub fn deriv(&self, x: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for &(w, cr, ci) in &self.modes {
            let (s, c) = (w * x).sin_cos();
            // i w (cr + i ci) e^{iwx} = (-w ci + i w cr)(c + i s)
            re += -w * ci * c - w * cr * s;
            im += -w * ci * s + w * cr * c;
        }
        (re, im)
    }

    pub fn max_freq(&self) -> f64 {
        self.modes.iter().fold(0.0f64, |m, &(w, ..)| m.max(w.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct PropagationCase {
    pub a: f64,
    pub b: f64,
    /// Length `K` of the control window `[b, b+K]`.
    pub big_k: f64,
    pub h: f64,
    pub u: BandLimited,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PropagationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`.
    pub slack: f64,
}

fn l2_window<F: Fn(f64) -> (f64, f64)>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    // composite trapezoid on |f|^2
    let step = (hi - lo) / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = lo + step * i as f64;
        let (re, im) = f(x);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * (re * re + im * im);
    }
    (acc * step).sqrt()
}

/// Check `||u||_{L2(a,a+1)} <= sqrt(2/K) ||u||_{L2(b,b+K)}
///            + sqrt(2) h^{-1} (b+K-a)^{1/2} ||h u'||_{L2(a,b+K)}`
/// on a quadrature grid resolving the band limit.
pub fn propagation_inequality_check(case: &PropagationCase) -> Result<PropagationCheck> {
    if case.b < case.a + 1.0 {
        return Err(CoreError::Config(format!(
            "need b >= a + 1 (got a = {}, b = {})",
            case.a, case.b
        )));
    }
    if case.big_k <= 0.0 || case.h <= 0.0 {
        return Err(CoreError::Config("K and h must be positive".into()));
    }
    let span = case.b + case.big_k - case.a;
    let wavelength = 2.0 * std::f64::consts::PI / case.u.max_freq().max(1.0);
    let n_per_unit = (40.0 / wavelength).ceil().max(200.0);
    let pts = |len: f64| ((len * n_per_unit) as usize).max(64) + 1;

    let u = |x: f64| case.u.eval(x);
    let pu = |x: f64| {
        let (re, im) = case.u.deriv(x);
        (case.h * re, case.h * im)
    };
    let lhs = l2_window(u, case.a, case.a + 1.0, pts(1.0));
    let ctrl = l2_window(u, case.b, case.b + case.big_k, pts(case.big_k));
    let forcing = l2_window(pu, case.a, case.b + case.big_k, pts(span));
    let rhs = (2.0 / case.big_k).sqrt() * ctrl
        + std::f64::consts::SQRT_2 / case.h * span.sqrt() * forcing;
    Ok(PropagationCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-9),
        slack: rhs - lhs,
    })
}

// ---------------------------------------------------------------------------
// Glued vs. local resolvent norms
// ---------------------------------------------------------------------------

/// One trapping window `[x_left - pad, x_right + pad]` kept intact by the
/// surgery for the corresponding local problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurgeryWindow {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GluedReport {
    pub glued: Vec<ResolventSample>,
    pub locals: Vec<Vec<ResolventSample>>,
    /// `glued_norm / max(local_norm)` at the smallest `h`.
    pub ratio: f64,
    /// Index of the dominant local component at the smallest `h`.
    pub dominant: usize,
}

/// Outside the window, continue the potential with a C1 decaying tail
/// `tail + (v_e - tail + c t) e^{-t}` matched in value and slope at the edge.
fn surgery_value<F: Fn(f64) -> f64>(v0: &F, win: SurgeryWindow, tail: f64, x: f64) -> f64 {
    let fd = 1e-5;
    if x > win.hi {
        let v_e = v0(win.hi);
        let s_e = (v0(win.hi + fd) - v0(win.hi - fd)) / (2.0 * fd);
        let t = x - win.hi;
        let c = s_e + (v_e - tail);
        tail + (v_e - tail + c * t) * (-t).exp()
    } else if x < win.lo {
        let v_e = v0(win.lo);
        let s_e = (v0(win.lo + fd) - v0(win.lo - fd)) / (2.0 * fd);
        let t = win.lo - x;
        let c = -s_e + (v_e - tail);
        tail + (v_e - tail + c * t) * (-t).exp()
    } else {
        v0(x)
    }
}

/// Probe the full potential and each single-window surgery with the same
/// cutoff and sweep, then compare norms at the smallest `h`.
pub fn glued_vs_local<F: Fn(f64) -> f64>(
    v0: F,
    windows: &[SurgeryWindow],
    tail: f64,
    z: f64,
    h_list: &[f64],
    chi: &CutoffSpec,
    cfg: &ProbeConfig,
) -> Result<GluedReport> {
    if windows.is_empty() {
        return Err(CoreError::Config("need at least one surgery window".into()));
    }
    for w in windows {
        if w.hi <= w.lo {
            return Err(CoreError::Config("surgery window is empty".into()));
        }
    }
    for pair in windows.windows(2) {
        if pair[1].lo <= pair[0].hi {
            return Err(CoreError::Config("surgery windows must be disjoint".into()));
        }
    }
    let glued = h_sweep(&FnPotential(&v0), z, h_list, chi, cfg)?;
    let mut locals = Vec::with_capacity(windows.len());
    for &win in windows {
        let local = FnPotential(|x: f64| surgery_value(&v0, win, tail, x));
        locals.push(h_sweep(&local, z, h_list, chi, cfg)?);
    }
    let last = h_list.len() - 1;
    let g = glued[last].norm;
    let mut dominant = 0;
    let mut best = f64::NEG_INFINITY;
    for (j, loc) in locals.iter().enumerate() {
        if loc[last].norm > best {
            best = loc[last].norm;
            dominant = j;
        }
    }
    if !(g.is_finite() && best.is_finite() && best > 0.0) {
        return Err(CoreError::Fit(
            "norms at the smallest h did not converge; cannot form ratio".into(),
        ));
    }
    Ok(GluedReport {
        glued,
        locals,
        ratio: g / best,
        dominant,
    })
}
