//! Nearly rectangular billiard with flat-bottomed wings: separate into
//! transverse modes and probe each mode's 1D operator near the trapped
//! energy `1/pi^2`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::probe::{energy_scan, CutoffSpec, FnPotential, ProbeConfig, ResolventSample};
use crate::scaling::{fit_power, ScalingFitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Half-width profile `Y(x) = pi + r(x)`: exactly `pi` on `[-a, a]`, with
/// Gevrey-flat wings `r(x) = sign * wing_amp * exp(-(|x|-a)^{-wing_p})`
/// outside.  `outward = true` bulges the boundary outward (`r > 0`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub a: f64,
    pub wing_amp: f64,
    pub wing_p: f64,
    pub outward_left: bool,
    pub outward_right: bool,
}

impl BoundaryProfile {
    pub fn r(&self, x: f64) -> f64 {
        let d = x.abs() - self.a;
        if d <= 0.0 {
            return 0.0;
        }
        let sign = if x > 0.0 {
            if self.outward_right { 1.0 } else { -1.0 }
        } else if self.outward_left {
            1.0
        } else {
            -1.0
        };
        sign * self.wing_amp * (-d.powf(-self.wing_p)).exp()
    }

    pub fn y(&self, x: f64) -> f64 {
        std::f64::consts::PI + self.r(x)
    }

    /// The trapped mode potential `V(x) = Y(x)^{-2}` (times `beta_k^2`
    /// absorbed into the semiclassical scaling).
    pub fn potential(&self, x: f64) -> f64 {
        let y = self.y(x);
        1.0 / (y * y)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a <= 0.0 || self.wing_amp <= 0.0 || self.wing_p <= 0.0 {
            return Err(CoreError::Config(
                "boundary profile parameters must be positive".into(),
            ));
        }
        if self.wing_amp >= std::f64::consts::PI {
            return Err(CoreError::Config(
                "wing amplitude must stay below pi so the strip width stays positive".into(),
            ));
        }
        Ok(())
    }

    /// Cylinder-type trapping at `z = pi^{-2}` needs an escape route: at
    /// least one outward wing (`V < pi^{-2}` there).  Both wings inward turns
    /// the plateau into a stable well with superpolynomial blowup instead.
    pub fn plateau_is_unstable_trapping(&self) -> bool {
        self.outward_left || self.outward_right
    }
}

/// Transverse eigenvalue parameters `beta_k` on the cross-section of width
/// `2 Y ~ 2 pi`: `k pi / 2` for Dirichlet, `(k-1) pi / 2` for Neumann,
/// `k = 1, 2, ...`.
pub fn transverse_spectrum(bc: BoundaryCondition, k_max: u32) -> Vec<f64> {
    (1..=k_max)
        .map(|k| match bc {
            BoundaryCondition::Dirichlet => k as f64 * std::f64::consts::FRAC_PI_2,
            BoundaryCondition::Neumann => (k - 1) as f64 * std::f64::consts::FRAC_PI_2,
        })
        .collect()
}

/// Semiclassical data for transverse mode `k`: `h = 1/beta_k`, spectral
/// variable `z = h^2 lambda^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeProblem {
    pub k: u32,
    pub beta_k: f64,
    pub h: f64,
}

pub fn mode_problem(bc: BoundaryCondition, k: u32) -> Result<ModeProblem> {
    if k == 0 {
        return Err(CoreError::Config("mode index starts at 1".into()));
    }
    let beta_k = match bc {
        BoundaryCondition::Dirichlet => k as f64 * std::f64::consts::FRAC_PI_2,
        BoundaryCondition::Neumann => {
            if k == 1 {
                return Err(CoreError::Config(
                    "Neumann k = 1 has beta = 0: no semiclassical mode problem".into(),
                ));
            }
            (k - 1) as f64 * std::f64::consts::FRAC_PI_2
        }
    };
    Ok(ModeProblem {
        k,
        beta_k,
        h: 1.0 / beta_k,
    })
}

/// Trapped energy `pi^{-2}` of the plateau.
pub fn trapped_energy() -> f64 {
    1.0 / (std::f64::consts::PI * std::f64::consts::PI)
}

#[derive(Debug, Clone, Serialize)]
pub struct NonconcentrationReport {
    /// Peak sample over the `z`-scan, one per mode.
    pub peaks: Vec<ResolventSample>,
    pub fit: ScalingFitResult,
    /// Off-peak control samples at `z = trapped +- offset`.
    pub elliptic: Vec<ResolventSample>,
    pub hyperbolic: Vec<ResolventSample>,
}

/// For each mode `k` in `k_list`, scan `z` around the trapped energy, keep
/// the peak, and fit the peak norms against `h = 1/beta_k`.  Also record the
/// bounded off-peak regimes `z = pi^{-2} -+ offset`.
pub fn nonconcentration_check(
    profile: &BoundaryProfile,
    bc: BoundaryCondition,
    k_list: &[u32],
    scan_halfwidth: f64,
    scan_points: usize,
    offset: f64,
    chi: &CutoffSpec,
    cfg: &ProbeConfig,
) -> Result<NonconcentrationReport> {
    profile.validate()?;
    if !profile.plateau_is_unstable_trapping() {
        return Err(CoreError::Config(
            "both wings inward: the plateau is a stable well, not cylinder trapping".into(),
        ));
    }
    if k_list.len() < 4 {
        return Err(CoreError::Config("need at least 4 modes for the fit".into()));
    }
    let z0 = trapped_energy();
    let source = FnPotential(|x: f64| profile.potential(x));
    let mut peaks = Vec::with_capacity(k_list.len());
    let mut elliptic = Vec::with_capacity(k_list.len());
    let mut hyperbolic = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let mp = mode_problem(bc, k)?;
        let z_list: Vec<f64> = (0..scan_points)
            .map(|i| {
                z0 - scan_halfwidth
                    + 2.0 * scan_halfwidth * i as f64 / (scan_points - 1).max(1) as f64
            })
            .collect();
        let scan = energy_scan(&source, mp.h, &z_list, chi, cfg)?;
        let peak = scan
            .into_iter()
            .filter(|s| s.converged && s.norm.is_finite())
            .max_by(|a, b| a.norm.total_cmp(&b.norm))
            .ok_or_else(|| CoreError::Fit(format!("no converged sample for mode k = {k}")))?;
        peaks.push(peak);
        elliptic.push(crate::probe::probe_once(&source, mp.h, z0 - offset, chi, cfg)?);
        hyperbolic.push(crate::probe::probe_once(&source, mp.h, z0 + offset, chi, cfg)?);
    }
    let fit = fit_power(&peaks)?;
    Ok(NonconcentrationReport {
        peaks,
        fit,
        elliptic,
        hyperbolic,
    })
}
