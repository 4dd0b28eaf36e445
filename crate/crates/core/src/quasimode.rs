//! Stable-trapping quasimode construction: confine a well eigenfunction with
//! a smooth cutoff and certify the induced resolvent lower bound `1/residual`.

use serde::Serialize;

use crate::classify::{ComponentKind, CriticalComponent};
use crate::discretize::{apply_real, eigen_window, DiscreteOperator, Grid};
use crate::error::{CoreError, Result};
use crate::probe::{cutoff_resolvent_norm, CutoffSpec};
use crate::warp::{finite_differences, PotentialProfile};

/// Geometry of an admissible stable well: the level `v_min + delta` is hit at
/// `center - a` (slope < 0) and `center + b` (slope > 0), and the potential
/// regains `v_min + 3 delta / 2` within `eps` beyond both points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WellSpec {
    pub center: f64,
    pub v_min: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub beta: f64,
}

impl WellSpec {
    pub fn x_left(&self) -> f64 {
        self.center - self.a
    }
    pub fn x_right(&self) -> f64 {
        self.center + self.b
    }
    /// Energy window `[v_min + delta/2, v_min + 2 delta/3]`.
    pub fn energy_window(&self) -> (f64, f64) {
        (self.v_min + self.delta / 2.0, self.v_min + 2.0 * self.delta / 3.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Quasimode {
    pub energy: f64,
    /// Normalized `chi * phi` samples.
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// `||(P - E) chi phi|| / ||chi phi||` against the original potential.
    pub residual: f64,
    /// L2 mass of the normalized quasimode outside `[center - a, center + b]`.
    pub mass_outside: f64,
}

/// Cubic-Hermite interpolation of `V0` between grid samples, using the
/// stored derivative samples (error O(delta^4)).
fn hermite_v0(profile: &PotentialProfile, x: f64) -> f64 {
    let grid = &profile.grid;
    let delta = grid.delta();
    let fi = ((x - grid.x_min) / delta).floor();
    let i = (fi.max(0.0) as usize).min(grid.n - 2);
    let t = ((x - grid.x(i)) / delta).clamp(0.0, 1.0);
    let (p0, p1) = (profile.v0[i], profile.v0[i + 1]);
    let (m0, m1) = (profile.v0p[i] * delta, profile.v0p[i + 1] * delta);
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * m1
}

fn hermite_v0p(profile: &PotentialProfile, x: f64) -> f64 {
    let grid = &profile.grid;
    let i = grid.index_of(x).min(grid.n - 2);
    // linear interpolation of the stored derivative is plenty here
    let t = ((x - grid.x(i)) / grid.delta()).clamp(-1.0, 1.0);
    if t >= 0.0 {
        profile.v0p[i] * (1.0 - t) + profile.v0p[i + 1] * t
    } else {
        profile.v0p[i]
    }
}

/// Solve `V0(x) = level` by bisection on `[lo, hi]` (V0 assumed monotone
/// across the bracket), refined through the Hermite interpolant.
fn bisect_level(profile: &PotentialProfile, level: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| hermite_v0(profile, x) - level;
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Find an admissible `delta` (shrinking by halving from `delta_init`) and
/// the matching `a`, `b`, `eps` for a local-minimum component.
pub fn fit_well(
    profile: &PotentialProfile,
    comp: &CriticalComponent,
    delta_init: f64,
) -> Result<WellSpec> {
    if comp.kind != ComponentKind::LocalMin {
        return Err(CoreError::DegenerateWell(format!(
            "component at x = {} is not a local minimum",
            0.5 * (comp.x_left + comp.x_right)
        )));
    }
    let grid = &profile.grid;
    let center = 0.5 * (comp.x_left + comp.x_right);
    let ci = grid.index_of(center);
    let v_min = profile.v0[ci];
    let scale = {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &profile.v0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi - lo).max(1e-12)
    };
    let floor = 1e-6 * scale;
    let mut delta = delta_init;
    while delta > floor {
        if let Some(spec) = try_delta(profile, center, ci, v_min, delta) {
            return Ok(spec);
        }
        delta *= 0.5;
    }
    Err(CoreError::DegenerateWell(format!(
        "no admissible delta above {floor:.3e}"
    )))
}

fn try_delta(
    profile: &PotentialProfile,
    center: f64,
    ci: usize,
    v_min: f64,
    delta: f64,
) -> Option<WellSpec> {
    let grid = &profile.grid;
    let level = v_min + delta;
    // walk outward for the first crossings of v_min + delta
    let mut li = ci;
    while li > 0 && profile.v0[li] < level {
        li -= 1;
    }
    let mut ri = ci;
    while ri + 1 < grid.n && profile.v0[ri] < level {
        ri += 1;
    }
    if profile.v0[li] < level || profile.v0[ri] < level {
        return None; // level set not compact on the grid
    }
    let xl = bisect_level(profile, level, grid.x(li), grid.x(li + 1));
    let xr = bisect_level(profile, level, grid.x(ri - 1), grid.x(ri));
    if !(hermite_v0p(profile, xl) < 0.0 && hermite_v0p(profile, xr) > 0.0) {
        return None;
    }
    // convexity of V0 on the sublevel component
    for i in li..=ri {
        if profile.v0pp[i] < -1e-9 {
            return None;
        }
    }
    // margin points: V0 >= v_min + 3 delta / 2 within eps on both sides
    let margin = v_min + 1.5 * delta;
    let mut eps_l = None;
    let mut i = li;
    while i > 0 {
        i -= 1;
        if profile.v0[i] >= margin {
            eps_l = Some(xl - grid.x(i));
            break;
        }
    }
    let mut eps_r = None;
    let mut j = ri;
    while j + 1 < grid.n {
        j += 1;
        if profile.v0[j] >= margin {
            eps_r = Some(grid.x(j) - xr);
            break;
        }
    }
    // any eps beyond the margin minimum is admissible; a generous one buys
    // Agmon decay under the cutoff taper and drives the residual to O(h^inf)
    let eps = (1.05 * eps_l?.max(eps_r?)).max(1.0);
    Some(WellSpec {
        center,
        v_min,
        delta,
        a: center - xl,
        b: xr - center,
        eps,
        beta: 1.0,
    })
}

/// Extend the (full) potential `v` convexly: keep it on
/// `[x_left - eps, x_right + eps]`, grow as `v_min + beta (x - center)^2`
/// beyond `X_out = max(a, b) + 5 eps`, with C1 monotone cubic joins.
pub fn extend_convex(v: &[f64], grid: &Grid, well: &WellSpec) -> Result<Vec<f64>> {
    if v.len() != grid.n {
        return Err(CoreError::SizeMismatch {
            expected: grid.n,
            got: v.len(),
        });
    }
    let x_out = well.a.max(well.b) + 5.0 * well.eps;
    let (vp, _) = finite_differences(v, grid.delta());
    let quad = |x: f64| well.v_min + well.beta * (x - well.center) * (x - well.center);
    let quad_p = |x: f64| 2.0 * well.beta * (x - well.center);

    let join = |x0: f64, x1: f64, y0: f64, s0: f64, y1: f64, s1: f64, x: f64| -> f64 {
        let w = x1 - x0;
        let t = (x - x0) / w;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * s0 * w
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * s1 * w
    };

    let rj0 = well.x_right() + well.eps;
    let rj1 = well.center + x_out;
    let lj0 = well.x_left() - well.eps;
    let lj1 = well.center - x_out;
    if rj1 <= rj0 || lj1 >= lj0 {
        return Err(CoreError::Extension(
            "join interval empty; increase X_out".into(),
        ));
    }
    let i_r = grid.index_of(rj0);
    let i_l = grid.index_of(lj0);
    let (yr, sr) = (v[i_r], vp[i_r]);
    let (yl, sl) = (v[i_l], vp[i_l]);

    let mut out = v.to_vec();
    for (i, x) in grid.points().enumerate() {
        if x > rj0 && x < rj1 {
            out[i] = join(rj0, rj1, yr, sr, quad(rj1), quad_p(rj1), x);
        } else if x >= rj1 {
            out[i] = quad(x);
        } else if x < lj0 && x > lj1 {
            out[i] = join(lj0, lj1, yl, sl, quad(lj1), quad_p(lj1), x);
        } else if x <= lj1 {
            out[i] = quad(x);
        }
    }
    // monotonicity of the joins
    for (i, x) in grid.points().enumerate() {
        if x > rj0 && x < rj1 && out[i + 1] < out[i] - 1e-12 {
            return Err(CoreError::Extension(format!(
                "right join not monotone near x = {x}; try larger X_out"
            )));
        }
        if x > lj1 && x < lj0 && i > 0 && out[i] > out[i - 1] + 1e-12 {
            return Err(CoreError::Extension(format!(
                "left join not monotone near x = {x}; try larger X_out"
            )));
        }
    }
    // sublevel containment: extended potential at quasimode energies stays
    // inside [x_left, x_right]
    let (_, e_hi) = well.energy_window();
    for (i, x) in grid.points().enumerate() {
        if out[i] <= e_hi && !(x >= well.x_left() - 1e-9 && x <= well.x_right() + 1e-9) {
            return Err(CoreError::Extension(format!(
                "sublevel set escapes [-a, b] at x = {x}"
            )));
        }
    }
    Ok(out)
}

/// Smooth cutoff: 1 on `[x_left, x_right]` (and a bit beyond, where the
/// eigenfunction is already exponentially small), supported within `eps` of
/// the well interval.  Starting the taper deep in the forbidden region keeps
/// the commutator residual at the Agmon scale `exp(-S/h)`.
pub fn well_cutoff(well: &WellSpec) -> CutoffSpec {
    CutoffSpec {
        center: 0.5 * (well.x_left() + well.x_right()),
        inner_radius: 0.5 * (well.x_right() - well.x_left()) + 0.6 * well.eps,
        taper_width: 0.4 * well.eps,
    }
}

/// Take an eigenpair of `(hD)^2 + v_tilde` in the energy window, cut it off,
/// and recompute the residual against the original potential `v`.
pub fn build_quasimode(
    v_tilde: &[f64],
    v: &[f64],
    h: f64,
    well: &WellSpec,
    grid: &Grid,
) -> Result<Quasimode> {
    let (e_lo, e_hi) = well.energy_window();
    let pairs = eigen_window(v_tilde, h, grid, e_lo, e_hi)?;
    if pairs.is_empty() {
        return Err(CoreError::Domain(format!(
            "no eigenvalue in [{e_lo:.6}, {e_hi:.6}]: decrease h (Weyl count ~ 1/h)"
        )));
    }
    let chi = well_cutoff(well);
    let chi_vec = chi.sample(grid);
    let mut best: Option<Quasimode> = None;
    for (e, phi) in &pairs {
        let mut w: Vec<f64> = phi.iter().zip(chi_vec.iter()).map(|(&p, &c)| p * c).collect();
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            continue;
        }
        let res_vec = apply_real(v, h, grid, *e, &w);
        let residual = res_vec.iter().map(|x| x * x).sum::<f64>().sqrt() / nw;
        for x in w.iter_mut() {
            *x /= nw;
        }
        let mut outside = 0.0;
        for (i, x) in grid.points().enumerate() {
            if x < well.x_left() || x > well.x_right() {
                outside += w[i] * w[i];
            }
        }
        let qm = Quasimode {
            energy: *e,
            vector: w,
            residual,
            mass_outside: outside,
        };
        if best.as_ref().map_or(true, |b| qm.residual < b.residual) {
            best = Some(qm);
        }
    }
    best.ok_or_else(|| CoreError::Domain("all candidate eigenvectors vanished under the cutoff".into()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupCertificate {
    pub lower_bound: f64,
    pub measured: f64,
    pub cross_check_ok: bool,
}

/// `1/residual` as a certified lower bound for the cutoff resolvent norm at
/// `z = E`, cross-checked against the direct CAP measurement.
pub fn certify_blowup(
    qm: &Quasimode,
    op: &DiscreteOperator,
    chi_tilde: &CutoffSpec,
) -> Result<BlowupCertificate> {
    let lower = if qm.residual == 0.0 {
        f64::INFINITY
    } else {
        1.0 / qm.residual
    };
    let sample = cutoff_resolvent_norm(op, qm.energy, chi_tilde, 1e-4, 5000, 42)?;
    let ok = sample.norm >= 0.5 * lower || sample.norm.is_infinite();
    Ok(BlowupCertificate {
        lower_bound: lower,
        measured: sample.norm,
        cross_check_ok: ok,
    })
}
