//! Warp functions `A(x)` and the effective 1D potential data they induce:
//! `V0 = A^{-2}` and the subprincipal term
//! `V1 = (n-1)/2 * A'' A^{-1} - (n-1)(n-3)/4 * (A')^2 A^{-2}`.

use serde::{Deserialize, Serialize};

use crate::discretize::Grid;
use crate::error::{CoreError, Result};

/// Built-in warp/potential families.  Each carries closed-form first and
/// second derivatives; `RawPotential` supplies tables and falls back to
/// 4th-order central differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `A(x) = a0 + amp * exp(-(x/width)^2)`.  A dip in A (`amp < 0`) gives a
    /// nondegenerate maximum of `V0 = A^{-2}`.
    ConstantPlusBump { a0: f64, amp: f64, width: f64 },
    /// `V0(x) = floor + amp * exp(-(x/width)^{2m})`: degenerate maximum of
    /// order `2m` at the origin, value `floor + amp`.
    DegenerateBump {
        m: u32,
        amp: f64,
        width: f64,
        floor: f64,
    },
    /// `V0(x) = level - depth * tanh(((x-center)/width)^{2*m2+1})`: a
    /// monotone profile with an odd-order inflection at `center`, critical
    /// value `level`.
    InflectionProfile {
        m2: u32,
        level: f64,
        depth: f64,
        width: f64,
        center: f64,
    },
    /// `V0(x) = amp - drop * exp(-dist(x, [-plateau, plateau])^{-p})`: an
    /// infinitely degenerate maximum (point when `plateau = 0`, cylinder
    /// otherwise) at value `amp`.
    GevreyFlat {
        p: f64,
        amp: f64,
        drop: f64,
        plateau: f64,
    },
    /// `V0(x) = v_min + depth * (1 - exp(-(x/width)^2))`: an honest local
    /// minimum (stable trapping).
    WellProfile { v_min: f64, depth: f64, width: f64 },
    /// User-supplied samples of `V0` (and optionally `V1`) on `xs`.
    RawPotential {
        xs: Vec<f64>,
        v0: Vec<f64>,
        #[serde(default)]
        v1: Option<Vec<f64>>,
    },
}

/// A warp function plus the metadata needed to form mode operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarpSpec {
    pub family: Family,
    /// Manifold dimension, `n >= 2`.
    pub n_dim: u32,
    /// Claimed 0-Gevrey index of the profile (metadata; required by
    /// [`check_gevrey`]).
    #[serde(default)]
    pub tau: Option<f64>,
    /// Positivity floor for sampled `A`.
    #[serde(default = "default_a_floor")]
    pub a_floor: f64,
    /// Radius beyond which the advisory short-range check applies.
    #[serde(default = "default_r_short")]
    pub r_short: f64,
}

fn default_a_floor() -> f64 {
    1e-8
}
fn default_r_short() -> f64 {
    5.0
}

impl WarpSpec {
    pub fn new(family: Family, n_dim: u32) -> Self {
        WarpSpec {
            family,
            n_dim,
            tau: None,
            a_floor: default_a_floor(),
            r_short: default_r_short(),
        }
    }
}

/// Sampled potential data on a grid.
#[derive(Debug, Clone)]
pub struct PotentialProfile {
    pub grid: Grid,
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    pub v0p: Vec<f64>,
    pub v0pp: Vec<f64>,
}

struct FamPoint {
    a: f64,
    ap: f64,
    app: f64,
    v0: f64,
    v0p: f64,
    v0pp: f64,
}

fn from_v0(v0: f64, v0p: f64, v0pp: f64) -> FamPoint {
    // A = V0^{-1/2}
    let a = v0.powf(-0.5);
    let ap = -0.5 * v0.powf(-1.5) * v0p;
    let app = 0.75 * v0.powf(-2.5) * v0p * v0p - 0.5 * v0.powf(-1.5) * v0pp;
    FamPoint {
        a,
        ap,
        app,
        v0,
        v0p,
        v0pp,
    }
}

impl Family {
    fn eval(&self, x: f64) -> Option<FamPoint> {
        match *self {
            Family::ConstantPlusBump { a0, amp, width } => {
                let u = x / width;
                let g = (-u * u).exp();
                let a = a0 + amp * g;
                let ap = amp * g * (-2.0 * u) / width;
                let app = amp * g * (4.0 * u * u - 2.0) / (width * width);
                if a <= 0.0 {
                    return None;
                }
                let v0 = a.powi(-2);
                let v0p = -2.0 * a.powi(-3) * ap;
                let v0pp = 6.0 * a.powi(-4) * ap * ap - 2.0 * a.powi(-3) * app;
                Some(FamPoint {
                    a,
                    ap,
                    app,
                    v0,
                    v0p,
                    v0pp,
                })
            }
            Family::DegenerateBump {
                m,
                amp,
                width,
                floor,
            } => {
                let u = x / width;
                let tm = 2.0 * m as f64;
                let upow = u.abs().powf(tm); // even power
                let g = (-upow).exp();
                let um1 = u.signum() * u.abs().powf(tm - 1.0);
                let gp = g * (-tm * um1) / width;
                let um2 = u.abs().powf(tm - 2.0);
                let gpp = g * ((tm * um1).powi(2) - tm * (tm - 1.0) * um2) / (width * width);
                Some(from_v0(floor + amp * g, amp * gp, amp * gpp))
            }
            Family::InflectionProfile {
                m2,
                level,
                depth,
                width,
                center,
            } => {
                let q = (2 * m2 + 1) as f64;
                let u = (x - center) / width;
                let t = u.signum() * u.abs().powf(q); // odd power
                let th = t.tanh();
                let sech2 = 1.0 - th * th;
                let tp = q * u.abs().powf(q - 1.0) / width;
                let tpp = q * (q - 1.0) * u.signum() * u.abs().powf(q - 2.0) / (width * width);
                let v0 = level - depth * th;
                let v0p = -depth * sech2 * tp;
                let v0pp = -depth * sech2 * (tpp - 2.0 * th * tp * tp);
                Some(from_v0(v0, v0p, v0pp))
            }
            Family::GevreyFlat {
                p,
                amp,
                drop,
                plateau,
            } => {
                let d = x.abs() - plateau;
                if d <= 0.0 {
                    return Some(from_v0(amp, 0.0, 0.0));
                }
                let s = x.signum();
                let e = (-d.powf(-p)).exp();
                let ep = e * p * d.powf(-p - 1.0);
                let epp = e * (p * p * d.powf(-2.0 * p - 2.0) - p * (p + 1.0) * d.powf(-p - 2.0));
                Some(from_v0(amp - drop * e, -drop * ep * s, -drop * epp))
            }
            Family::WellProfile { v_min, depth, width } => {
                let u = x / width;
                let g = (-u * u).exp();
                let v0 = v_min + depth * (1.0 - g);
                let v0p = depth * g * 2.0 * u / width;
                let v0pp = depth * g * (2.0 - 4.0 * u * u) / (width * width);
                Some(from_v0(v0, v0p, v0pp))
            }
            Family::RawPotential { .. } => None,
        }
    }

    /// Critical value of `V0` for the trapping the family was designed to
    /// exhibit, when the family has one.
    pub fn critical_value(&self) -> Option<f64> {
        match *self {
            Family::ConstantPlusBump { a0, amp, .. } => Some((a0 + amp).powi(-2)),
            Family::DegenerateBump { amp, floor, .. } => Some(floor + amp),
            Family::InflectionProfile { level, .. } => Some(level),
            Family::GevreyFlat { amp, .. } => Some(amp),
            Family::WellProfile { v_min, .. } => Some(v_min),
            Family::RawPotential { .. } => None,
        }
    }

    /// Larger of the two tail limits of `V0`, used by domain truncation.
    pub fn v_far_max(&self) -> Option<f64> {
        match *self {
            Family::ConstantPlusBump { a0, .. } => Some(a0.powi(-2)),
            Family::DegenerateBump { floor, .. } => Some(floor),
            Family::InflectionProfile { level, depth, .. } => Some(level + depth.abs()),
            Family::GevreyFlat { amp, drop, .. } => Some(amp - drop),
            Family::WellProfile { v_min, depth, .. } => Some(v_min + depth),
            Family::RawPotential { .. } => None,
        }
    }
}

/// `h = lambda_k^{-1}`.
pub fn mode_parameters(lambda_k: f64) -> Result<f64> {
    if lambda_k <= 0.0 {
        return Err(CoreError::Domain(format!(
            "angular eigenvalue must be positive, got {lambda_k}"
        )));
    }
    Ok(1.0 / lambda_k)
}

/// Sample `V0`, `V1`, `V0'`, `V0''` on the grid.
pub fn effective_potential(spec: &WarpSpec, grid: &Grid) -> Result<PotentialProfile> {
    if spec.n_dim < 2 {
        return Err(CoreError::Config(format!(
            "manifold dimension must be >= 2, got {}",
            spec.n_dim
        )));
    }
    if let Family::RawPotential { xs, v0, v1 } = &spec.family {
        return raw_profile(xs, v0, v1.as_deref(), grid);
    }
    let n = spec.n_dim as f64;
    let c1 = (n - 1.0) / 2.0;
    let c2 = (n - 1.0) * (n - 3.0) / 4.0;
    let mut out = PotentialProfile {
        grid: *grid,
        v0: Vec::with_capacity(grid.n),
        v1: Vec::with_capacity(grid.n),
        v0p: Vec::with_capacity(grid.n),
        v0pp: Vec::with_capacity(grid.n),
    };
    for x in grid.points() {
        let pt = spec
            .family
            .eval(x)
            .ok_or_else(|| CoreError::Domain(format!("family not evaluable at x = {x}")))?;
        if pt.a < spec.a_floor || !pt.a.is_finite() {
            return Err(CoreError::Domain(format!(
                "warp A(x) = {} below floor {} at x = {x}",
                pt.a, spec.a_floor
            )));
        }
        if pt.v0 <= 0.0 {
            return Err(CoreError::Domain(format!("V0(x) <= 0 at x = {x}")));
        }
        out.v0.push(pt.v0);
        out.v1
            .push(c1 * pt.app / pt.a - c2 * pt.ap * pt.ap / (pt.a * pt.a));
        out.v0p.push(pt.v0p);
        out.v0pp.push(pt.v0pp);
    }
    Ok(out)
}

fn raw_profile(
    xs: &[f64],
    v0_tab: &[f64],
    v1_tab: Option<&[f64]>,
    grid: &Grid,
) -> Result<PotentialProfile> {
    if xs.is_empty() || v0_tab.is_empty() {
        return Err(CoreError::Config("raw_potential requires v0 samples".into()));
    }
    if xs.len() != v0_tab.len() {
        return Err(CoreError::SizeMismatch {
            expected: xs.len(),
            got: v0_tab.len(),
        });
    }
    let interp = |tab: &[f64], x: f64| -> f64 {
        // linear interpolation, clamped at the table ends
        if x <= xs[0] {
            return tab[0];
        }
        if x >= xs[xs.len() - 1] {
            return tab[tab.len() - 1];
        }
        let j = xs.partition_point(|&t| t <= x).min(xs.len() - 1);
        let (x0, x1) = (xs[j - 1], xs[j]);
        let t = (x - x0) / (x1 - x0);
        tab[j - 1] * (1.0 - t) + tab[j] * t
    };
    let v0: Vec<f64> = grid.points().map(|x| interp(v0_tab, x)).collect();
    if v0.iter().any(|&v| v <= 0.0) {
        return Err(CoreError::Domain("raw V0 must be positive".into()));
    }
    let v1: Vec<f64> = match v1_tab {
        Some(tab) => {
            if tab.len() != xs.len() {
                return Err(CoreError::SizeMismatch {
                    expected: xs.len(),
                    got: tab.len(),
                });
            }
            grid.points().map(|x| interp(tab, x)).collect()
        }
        None => vec![0.0; grid.n],
    };
    let (v0p, v0pp) = finite_differences(&v0, grid.delta());
    Ok(PotentialProfile {
        grid: *grid,
        v0,
        v1,
        v0p,
        v0pp,
    })
}

/// 4th-order central differences in the interior, 2nd-order one-sided at the
/// edges.
pub fn finite_differences(v: &[f64], delta: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut vp = vec![0.0; n];
    let mut vpp = vec![0.0; n];
    for i in 0..n {
        if i >= 2 && i + 2 < n {
            vp[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * delta);
            vpp[i] = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2])
                / (12.0 * delta * delta);
        } else if i == 0 {
            vp[i] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * delta);
            vpp[i] = (v[0] - 2.0 * v[1] + v[2]) / (delta * delta);
        } else if i == n - 1 {
            vp[i] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * delta);
            vpp[i] = (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / (delta * delta);
        } else {
            vp[i] = (v[i + 1] - v[i - 1]) / (2.0 * delta);
            vpp[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (delta * delta);
        }
    }
    (vp, vpp)
}

impl PotentialProfile {
    /// Build a profile from closed-form callables (test and raw-data helper).
    pub fn from_functions(
        grid: &Grid,
        v0: impl Fn(f64) -> f64,
        v0p: impl Fn(f64) -> f64,
        v0pp: impl Fn(f64) -> f64,
    ) -> Self {
        PotentialProfile {
            grid: *grid,
            v0: grid.points().map(&v0).collect(),
            v1: vec![0.0; grid.n],
            v0p: grid.points().map(&v0p).collect(),
            v0pp: grid.points().map(&v0pp).collect(),
        }
    }

    /// `V = V0 + h^2 V1` elementwise.
    pub fn full_potential(&self, h: f64) -> Vec<f64> {
        self.v0
            .iter()
            .zip(self.v1.iter())
            .map(|(&v0, &v1)| v0 + h * h * v1)
            .collect()
    }
}

/// Advisory short-range sanity check: `|V0(x)| - tail` should decay like
/// `<x>^{-2}` beyond `r_short` up to a fitted constant.  Returns a warning
/// string instead of failing; the numerical domain is truncated anyway.
pub fn short_range_advisory(spec: &WarpSpec, profile: &PotentialProfile) -> Option<String> {
    let grid = &profile.grid;
    let tail = profile.v0[grid.n - 1];
    let mut worst: f64 = 0.0;
    let mut c_fit: f64 = 0.0;
    for (i, x) in grid.points().enumerate() {
        if x.abs() < spec.r_short {
            continue;
        }
        let dev = (profile.v0[i] - tail).abs() * (1.0 + x * x);
        c_fit = c_fit.max(dev);
        worst = worst.max(dev);
    }
    // constant is arbitrary; warn only about growth relative to the fitted C
    // at the checked radius
    if worst > 10.0 * c_fit.min(1.0) && worst > 1.0 {
        Some(format!(
            "short-range check: |V0 - tail|*<x>^2 reaches {worst:.3e} beyond |x| = {}",
            spec.r_short
        ))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// 0-Gevrey spot check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GevreyReport {
    pub passes: bool,
    pub worst_ratio: f64,
    pub fitted_c: f64,
}

/// Natural log of `|f^(k)(x) - f^(k)(x0)|` for the family's generating
/// profile, exact up to floating point.  `None` when the family has no
/// closed-form high-order derivatives.
fn log_abs_dev(family: &Family, k: usize, x: f64, x0: f64) -> Option<f64> {
    match *family {
        Family::ConstantPlusBump { amp, width, .. } => {
            Some(exp_poly_dev(1, amp, width, k, x, x0))
        }
        Family::DegenerateBump { m, amp, width, .. } => {
            Some(exp_poly_dev(m, amp, width, k, x, x0))
        }
        Family::WellProfile { depth, width, .. } => Some(exp_poly_dev(1, -depth, width, k, x, x0)),
        Family::GevreyFlat { p, drop, plateau, .. } => {
            // supported on the right flank with x0 at the plateau edge
            if x0 != plateau && !(plateau == 0.0 && x0 == 0.0) {
                return None;
            }
            let t = x - plateau;
            if t <= 0.0 {
                return None;
            }
            Some(drop.abs().ln() + gevrey_log_deriv(p, k, t))
        }
        _ => None,
    }
}

/// `f = amp * exp(-(x/w)^{2m})`; `f^{(k)}(x) = amp w^{-k} Q_k(u) exp(-u^{2m})`
/// with `Q_{k+1} = Q_k' - 2m u^{2m-1} Q_k`.
fn exp_poly_dev(m: u32, amp: f64, width: f64, k: usize, x: f64, x0: f64) -> f64 {
    let tm = 2 * m as usize;
    let mut q = vec![0.0f64; 1];
    q[0] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0f64; q.len() + tm - 1];
        for (j, &c) in q.iter().enumerate() {
            if j >= 1 {
                next[j - 1] += j as f64 * c;
            }
            next[j + tm - 1] -= tm as f64 * c;
        }
        q = next;
    }
    let eval = |u: f64| -> f64 {
        let poly: f64 = q
            .iter()
            .enumerate()
            .map(|(j, &c)| c * u.powi(j as i32))
            .sum();
        poly * (-u.abs().powf(tm as f64)).exp()
    };
    let u = x / width;
    let u0 = x0 / width;
    let dev = amp * width.powi(-(k as i32)) * (eval(u) - eval(u0));
    dev.abs().ln()
}

/// log of `|d^k/dt^k exp(-t^{-p})|` via the sparse recursion
/// `P_{k+1}(u) = -u^2 P_k'(u) + p u^{p+1} P_k(u)`, `u = 1/t`.
fn gevrey_log_deriv(p: f64, k: usize, t: f64) -> f64 {
    let u = 1.0 / t;
    if k == 0 {
        return -u.powf(p);
    }
    let mut terms: Vec<(f64, f64)> = vec![(0.0, 1.0)]; // (exponent, coefficient)
    for _ in 0..k {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(terms.len() * 2);
        for &(a, c) in &terms {
            push_term(&mut next, a + 1.0, -a * c);
            push_term(&mut next, a + p + 1.0, p * c);
        }
        terms = next;
    }
    let val: f64 = terms.iter().map(|&(a, c)| c * u.powf(a)).sum();
    val.abs().ln() - u.powf(p)
}

fn push_term(terms: &mut Vec<(f64, f64)>, exp: f64, coef: f64) {
    if coef == 0.0 {
        return;
    }
    for t in terms.iter_mut() {
        if t.0 == exp {
            t.1 += coef;
            return;
        }
    }
    terms.push((exp, coef));
}

/// Finite spot-check of the 0-Gevrey inequality
/// `|d^k f(x) - d^k f(x0)| <= C (k!)^C |x-x0|^{-tau(k-s)} |d^s f(x) - d^s f(x0)|`
/// at sampled `(k, s, x)` triples, with the constant `C` fitted over a
/// bounded grid.  Not a proof.
pub fn check_gevrey(
    spec: &WarpSpec,
    x0: f64,
    k_max: usize,
    sample_xs: &[f64],
) -> Result<GevreyReport> {
    let tau = spec
        .tau
        .ok_or_else(|| CoreError::Config("check_gevrey requires a declared tau".into()))?;
    if sample_xs.is_empty() {
        return Err(CoreError::Config("check_gevrey requires sample points".into()));
    }
    // precompute log deviations
    let mut log_dev = vec![vec![0.0f64; sample_xs.len()]; k_max + 1];
    for k in 0..=k_max {
        for (j, &x) in sample_xs.iter().enumerate() {
            log_dev[k][j] = log_abs_dev(&spec.family, k, x, x0).ok_or_else(|| {
                CoreError::Config(
                    "family lacks closed-form high-order derivatives for check_gevrey".into(),
                )
            })?;
        }
    }
    let ln_fact: Vec<f64> = (0..=k_max)
        .scan(0.0f64, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();

    let c_grid: Vec<f64> = (2..=16).map(|i| i as f64 * 0.25).collect(); // 0.5 .. 4.0
    let mut best_ratio = f64::INFINITY;
    let mut best_c = c_grid[0];
    for &c in &c_grid {
        let mut worst = f64::NEG_INFINITY;
        for k in 1..=k_max {
            for s in 0..k {
                for (j, &x) in sample_xs.iter().enumerate() {
                    let lhs = log_dev[k][j];
                    let rhs = c.ln() + c * ln_fact[k] - tau * (k - s) as f64 * (x - x0).abs().ln()
                        + log_dev[s][j];
                    worst = worst.max(lhs - rhs);
                }
            }
        }
        if worst < best_ratio {
            best_ratio = worst;
            best_c = c;
        }
        // prefer the smallest constant that already satisfies the inequality
        if worst <= 0.0 {
            best_ratio = worst;
            best_c = c;
            break;
        }
    }
    let worst_ratio = best_ratio.exp();
    Ok(GevreyReport {
        passes: worst_ratio <= 1.0 + 1e-9,
        worst_ratio,
        fitted_c: best_c,
    })
}
