//! Cutoff-resolvent norm estimation: the largest singular value of
//! `M = chi (P(h) - iW - z)^{-1} chi`, found by power iteration on `M* M`.
//!
//! One application of `M* M` costs one solve plus one conjugate solve (the
//! operator is complex-symmetric, so the adjoint solve is the conjugate of a
//! solve with conjugated input) and two diagonal multiplies.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discretize::{auto_grid, build_operator, CapProfile, DiscreteOperator, Grid, TriFactor};
use crate::error::{CoreError, Result};
use crate::warp::{effective_potential, WarpSpec};

/// Spatial cutoff: 1 on `|x - center| <= inner_radius`, cosine taper to 0
/// over `taper_width`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffSpec {
    pub center: f64,
    pub inner_radius: f64,
    pub taper_width: f64,
}

impl CutoffSpec {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center).abs() - self.inner_radius;
        if t <= 0.0 {
            1.0
        } else if t >= self.taper_width {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * t / self.taper_width).cos())
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.points().map(|x| self.eval(x)).collect()
    }

    /// Outer edge of the cutoff support.
    pub fn outer_radius(&self) -> f64 {
        self.inner_radius + self.taper_width
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolventSample {
    pub h: f64,
    pub z: f64,
    pub norm: f64,
    pub iterations: u32,
    pub converged: bool,
    pub grid_n: usize,
    pub cap_eta: f64,
}

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: u32 = 2000;
pub const DEFAULT_SEED: u64 = 42;

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Apply `M = chi (op - z)^{-1} chi` using a prepared factorization.
fn apply_m(factor: &TriFactor, chi: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let cut: Vec<Complex64> = v.iter().zip(chi.iter()).map(|(&a, &c)| a * c).collect();
    let sol = factor.solve(&cut);
    sol.iter().zip(chi.iter()).map(|(&a, &c)| a * c).collect()
}

/// Adjoint apply: `M* v = conj(M conj(v))` for complex-symmetric `op`.
fn apply_m_adj(factor: &TriFactor, chi: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let conj: Vec<Complex64> = v.iter().map(|c| c.conj()).collect();
    apply_m(factor, chi, &conj).iter().map(|c| c.conj()).collect()
}

/// Estimate `|| chi (op - z)^{-1} chi ||` by power iteration on `M* M`,
/// started from a fixed-seed random vector.
pub fn cutoff_resolvent_norm(
    op: &DiscreteOperator,
    z: f64,
    chi: &CutoffSpec,
    tol: f64,
    max_iter: u32,
    seed: u64,
) -> Result<ResolventSample> {
    let grid = &op.grid;
    let chi_vec = chi.sample(grid);
    let cap_eta = op
        .diag
        .iter()
        .map(|c| -c.im)
        .fold(0.0f64, f64::max);
    let mk_sample = |norm: f64, iterations: u32, converged: bool| ResolventSample {
        h: op.h,
        z,
        norm,
        iterations,
        converged,
        grid_n: grid.n,
        cap_eta,
    };
    if chi_vec.iter().all(|&c| c == 0.0) {
        return Ok(mk_sample(0.0, 0, true));
    }
    let factor = match TriFactor::new(op, Complex64::new(z, 0.0)) {
        Ok(f) => f,
        // z is essentially an eigenvalue of the CAP operator: blowup marker
        Err(CoreError::NearSingular { .. }) => {
            return Ok(mk_sample(f64::INFINITY, 0, true));
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..grid.n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = l2(&v);
    v.iter_mut().for_each(|c| *c /= nv);

    let mut sigma_prev = f64::NAN;
    for it in 1..=max_iter {
        let w = apply_m(&factor, &chi_vec, &v);
        let sigma = l2(&w);
        if sigma == 0.0 {
            return Ok(mk_sample(0.0, it, true));
        }
        let mut u = apply_m_adj(&factor, &chi_vec, &w);
        let nu = l2(&u);
        if !nu.is_finite() {
            return Ok(mk_sample(f64::INFINITY, it, true));
        }
        u.iter_mut().for_each(|c| *c /= nu);
        v = u;
        if sigma_prev.is_finite() && (sigma - sigma_prev).abs() <= tol * sigma {
            return Ok(mk_sample(sigma, it, true));
        }
        sigma_prev = sigma;
    }
    Ok(mk_sample(sigma_prev, max_iter, false))
}

/// Everything needed to rebuild the discretization at each `h`.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Half-width of the computational domain (CAP included).
    pub half_width: f64,
    pub cap: CapProfile,
    pub tol: f64,
    pub max_iter: u32,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(half_width: f64) -> Self {
        ProbeConfig {
            half_width,
            cap: CapProfile::default(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
        }
    }
}

/// A potential that can be re-sampled on any grid for a given `h`.
pub trait PotentialSource {
    fn potential(&self, grid: &Grid, h: f64) -> Result<Vec<f64>>;
    /// Lower bound hint for `min V0` (resolution rule).
    fn v0_min_hint(&self) -> f64 {
        0.0
    }
}

impl PotentialSource for WarpSpec {
    fn potential(&self, grid: &Grid, h: f64) -> Result<Vec<f64>> {
        Ok(effective_potential(self, grid)?.full_potential(h))
    }
}

/// Closed-form potential with no subprincipal part.
pub struct FnPotential<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> PotentialSource for FnPotential<F> {
    fn potential(&self, grid: &Grid, _h: f64) -> Result<Vec<f64>> {
        Ok(grid.points().map(&self.0).collect())
    }
}

/// Build the operator for one `(h, z)` and measure the cutoff norm.
pub fn probe_once(
    source: &dyn PotentialSource,
    h: f64,
    z: f64,
    chi: &CutoffSpec,
    cfg: &ProbeConfig,
) -> Result<ResolventSample> {
    let grid = auto_grid(cfg.half_width, h, z, source.v0_min_hint())?;
    let v = source.potential(&grid, h)?;
    let op = build_operator(&v, h, &grid, &cfg.cap)?;
    let (wl, wr) = cfg.cap.interior_window(&grid);
    if chi.center - chi.outer_radius() < wl || chi.center + chi.outer_radius() > wr {
        return Err(CoreError::Config(format!(
            "cutoff support [{:.2}, {:.2}] overlaps the CAP layer (interior window [{wl:.2}, {wr:.2}])",
            chi.center - chi.outer_radius(),
            chi.center + chi.outer_radius()
        )));
    }
    cutoff_resolvent_norm(&op, z, chi, cfg.tol, cfg.max_iter, cfg.seed)
}

/// One sample per `h`, identical `z` and cutoff; the grid is re-sized per
/// `h` by the resolution rule.  Per-`h` failures are recorded in place as
/// non-converged sentinel samples rather than aborting the sweep.
pub fn h_sweep(
    source: &dyn PotentialSource,
    z: f64,
    h_list: &[f64],
    chi: &CutoffSpec,
    cfg: &ProbeConfig,
) -> Result<Vec<ResolventSample>> {
    if h_list.is_empty() {
        return Err(CoreError::Config("h_list is empty".into()));
    }
    for w in h_list.windows(2) {
        if w[1] >= w[0] {
            return Err(CoreError::Config("h_list must be strictly decreasing".into()));
        }
    }
    let mut out = Vec::with_capacity(h_list.len());
    for &h in h_list {
        match probe_once(source, h, z, chi, cfg) {
            Ok(s) => out.push(s),
            Err(CoreError::Config(msg)) => return Err(CoreError::Config(msg)),
            Err(_) => out.push(ResolventSample {
                h,
                z,
                norm: f64::NAN,
                iterations: 0,
                converged: false,
                grid_n: 0,
                cap_eta: cfg.cap.strength,
            }),
        }
    }
    Ok(out)
}

/// Fixed `h`, varying `z` across an interval; used to locate the norm peak.
pub fn energy_scan(
    source: &dyn PotentialSource,
    h: f64,
    z_list: &[f64],
    chi: &CutoffSpec,
    cfg: &ProbeConfig,
) -> Result<Vec<ResolventSample>> {
    if z_list.is_empty() {
        return Err(CoreError::Config("z_list is empty".into()));
    }
    let mut out = Vec::with_capacity(z_list.len());
    for &z in z_list {
        match probe_once(source, h, z, chi, cfg) {
            Ok(s) => out.push(s),
            Err(CoreError::Config(msg)) => return Err(CoreError::Config(msg)),
            Err(_) => out.push(ResolventSample {
                h,
                z,
                norm: f64::NAN,
                iterations: 0,
                converged: false,
                grid_n: 0,
                cap_eta: cfg.cap.strength,
            }),
        }
    }
    Ok(out)
}

/// Default cutoff for a trapped component: centered on it, inner radius =
/// component width + 1, taper 0.5.
pub fn default_cutoff(x_left: f64, x_right: f64) -> CutoffSpec {
    CutoffSpec {
        center: 0.5 * (x_left + x_right),
        inner_radius: (x_right - x_left) + 1.0,
        taper_width: 0.5,
    }
}

/// Pick a domain half-width so the classically allowed region reaches the
/// absorbing layer: the smallest `L` with `V0(+-L) <= z - 0.2 * scale`,
/// extended so the cutoff clears the CAP.
pub fn auto_half_width(
    source: &dyn PotentialSource,
    z: f64,
    chi: &CutoffSpec,
    cap: &CapProfile,
) -> Result<f64> {
    let chi_outer = chi.center.abs() + chi.outer_radius();
    let scan = Grid::new(-60.0, 60.0, 4801)?;
    let v = source.potential(&scan, 1e-3)?;
    let scale = {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &vi in &v {
            lo = lo.min(vi);
            hi = hi.max(vi);
        }
        (hi - lo).max(0.5)
    };
    let target = z - 0.2 * scale;
    let mut l0 = chi_outer + 1.0;
    for (i, x) in scan.points().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let j = scan.index_of(-x);
        if v[i] <= target && v[j] <= target {
            l0 = l0.max(x);
            break;
        }
        if i == scan.n - 1 {
            l0 = l0.max(chi_outer + 2.0);
        }
    }
    Ok((l0 + 0.5) / (1.0 - cap.width_fraction))
}
