//! TOML experiment configuration.  Schema is versioned via `schema_version`;
//! see README for the documented layout.

use serde::Deserialize;
use semires_core::discretize::CapProfile;
use semires_core::probe::CutoffSpec;
use semires_core::warp::WarpSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub warp: Option<WarpSpec>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub cap: CapConfig,
    #[serde(default)]
    pub cutoff: Option<CutoffConfig>,
    #[serde(default)]
    pub probe: ProbeOpts,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub quasimode: Option<QuasimodeConfig>,
    #[serde(default)]
    pub glue: Option<GlueConfig>,
    #[serde(default)]
    pub billiard: Option<BilliardConfig>,
    #[serde(default)]
    pub gevrey: Option<GevreyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Domain half-width override; computed from the potential when absent.
    pub half_width: Option<f64>,
    /// Point count for classification grids (not h-sweeps, which follow the
    /// resolution rule).
    pub classify_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    pub strength: f64,
    pub width_fraction: f64,
    pub ramp_power: u32,
}

impl Default for CapConfig {
    fn default() -> Self {
        let d = CapProfile::default();
        CapConfig {
            strength: d.strength,
            width_fraction: d.width_fraction,
            ramp_power: d.ramp_power,
        }
    }
}

impl CapConfig {
    pub fn to_profile(&self) -> CapProfile {
        CapProfile {
            strength: self.strength,
            width_fraction: self.width_fraction,
            ramp_power: self.ramp_power,
        }
    }
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub center: f64,
    pub inner_radius: f64,
    pub taper_width: f64,
}

impl CutoffConfig {
    pub fn to_spec(&self) -> CutoffSpec {
        CutoffSpec {
            center: self.center,
            inner_radius: self.inner_radius,
            taper_width: self.taper_width,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeOpts {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ProbeOpts {
    fn default() -> Self {
        ProbeOpts {
            tol: semires_core::probe::DEFAULT_TOL,
            max_iter: semires_core::probe::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub tol_gamma: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol_gamma: semires_core::scaling::DEFAULT_TOL_GAMMA,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Spectral parameter; defaults to the classified critical value.
    pub z: Option<f64>,
    /// Explicit decreasing h list; wins over the range fields.
    pub h_list: Option<Vec<f64>>,
    #[serde(default = "default_h_min")]
    pub h_min: f64,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default = "default_h_points")]
    pub h_points: usize,
}

fn default_h_min() -> f64 {
    1.0 / 400.0
}
fn default_h_max() -> f64 {
    1.0 / 50.0
}
fn default_h_points() -> usize {
    7
}

impl SweepConfig {
    /// Final decreasing h list, honoring an `--h-points` override.
    pub fn resolve_h_list(&self, h_points_override: Option<usize>) -> Vec<f64> {
        if let (Some(list), None) = (&self.h_list, h_points_override) {
            return list.clone();
        }
        let n = h_points_override.unwrap_or(self.h_points).max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                self.h_max * (self.h_min / self.h_max).powf(t)
            })
            .collect()
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            z: None,
            h_list: None,
            h_min: default_h_min(),
            h_max: default_h_max(),
            h_points: default_h_points(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasimodeConfig {
    #[serde(default = "default_qm_h_list")]
    pub h_list: Vec<f64>,
    #[serde(default = "default_delta_init")]
    pub delta_init: f64,
    /// Finite certification order: residual must be <= h^order.
    #[serde(default = "default_cert_order")]
    pub cert_order: u32,
}

fn default_qm_h_list() -> Vec<f64> {
    vec![1.0 / 40.0, 1.0 / 60.0, 1.0 / 80.0]
}
fn default_delta_init() -> f64 {
    0.6
}
fn default_cert_order() -> u32 {
    4
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
    /// Degeneracy order: the bump is `amp * exp(-u^{2m})`.
    #[serde(default = "default_bump_m")]
    pub m: u32,
}

fn default_bump_m() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueConfig {
    pub bumps: Vec<Bump>,
    #[serde(default = "default_glue_floor")]
    pub floor: f64,
    pub z: f64,
    pub h_list: Vec<f64>,
    /// One `[lo, hi]` window kept intact per trapped component.
    pub windows: Vec<[f64; 2]>,
    #[serde(default = "default_glue_tail")]
    pub tail: f64,
}

fn default_glue_floor() -> f64 {
    0.1
}
fn default_glue_tail() -> f64 {
    0.1
}

impl GlueConfig {
    pub fn v0(&self, x: f64) -> f64 {
        self.floor
            + self
                .bumps
                .iter()
                .map(|b| {
                    let u = (x - b.center) / b.width;
                    b.amp * (-u.abs().powi(2 * b.m as i32)).exp()
                })
                .sum::<f64>()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardConfig {
    pub a: f64,
    pub wing_amp: f64,
    pub wing_p: f64,
    #[serde(default = "default_true")]
    pub outward_left: bool,
    #[serde(default = "default_true")]
    pub outward_right: bool,
    #[serde(default = "default_bc")]
    pub bc: String,
    pub k_list: Vec<u32>,
    #[serde(default = "default_scan_halfwidth")]
    pub scan_halfwidth: f64,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_true() -> bool {
    true
}
fn default_bc() -> String {
    "dirichlet".into()
}
fn default_scan_halfwidth() -> f64 {
    0.01
}
fn default_scan_points() -> usize {
    9
}
fn default_offset() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreyConfig {
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    pub sample_xs: Vec<f64>,
}

fn default_k_max() -> usize {
    6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    /// Static validation for one experiment kind.  Empty list means runnable.
    pub fn validate(&self, kind: &str) -> Vec<String> {
        let mut diags = Vec::new();
        match kind {
            "classify" | "sweep" | "gevrey" => {
                if self.warp.is_none() {
                    diags.push(format!("[warp] block is required for `{kind}`"));
                }
            }
            "quasimode" => {
                if self.warp.is_none() {
                    diags.push("[warp] block is required for `quasimode`".into());
                }
                if let Some(q) = &self.quasimode {
                    if q.h_list.is_empty() {
                        diags.push("[quasimode] h_list must be non-empty".into());
                    }
                }
            }
            "glue" => match &self.glue {
                None => diags.push("[glue] block is required for `glue`".into()),
                Some(g) => {
                    if g.bumps.is_empty() {
                        diags.push("[glue] bumps must be non-empty".into());
                    }
                    if g.windows.is_empty() {
                        diags.push("[glue] windows must be non-empty".into());
                    }
                    for w in &g.windows {
                        if w[1] <= w[0] {
                            diags.push(format!("[glue] window [{}, {}] is empty", w[0], w[1]));
                        }
                    }
                    for pair in g.windows.windows(2) {
                        if pair[1][0] <= pair[0][1] {
                            diags.push("[glue] windows overlap".into());
                        }
                    }
                    if g.h_list.is_empty() {
                        diags.push("[glue] h_list must be non-empty".into());
                    }
                }
            },
            "billiard" => match &self.billiard {
                None => diags.push("[billiard] block is required for `billiard`".into()),
                Some(b) => {
                    if b.bc != "dirichlet" && b.bc != "neumann" {
                        diags.push(format!("[billiard] unknown bc `{}`", b.bc));
                    }
                    if b.k_list.len() < 4 {
                        diags.push("[billiard] k_list needs at least 4 modes".into());
                    }
                }
            },
            _ => diags.push(format!("unknown experiment kind `{kind}`")),
        }
        if kind == "gevrey" {
            match &self.gevrey {
                None => diags.push("[gevrey] block is required for `gevrey`".into()),
                Some(g) => {
                    if g.sample_xs.is_empty() {
                        diags.push("[gevrey] sample_xs must be non-empty".into());
                    }
                }
            }
            if let Some(w) = &self.warp {
                if w.tau.is_none() {
                    diags.push("[warp] tau is required for `gevrey`".into());
                }
            }
        }
        if let Some(s) = &self.sweep {
            if let Some(list) = &s.h_list {
                for w in list.windows(2) {
                    if w[1] >= w[0] {
                        diags.push("[sweep] h_list must be decreasing".into());
                        break;
                    }
                }
                if list.iter().any(|&h| h <= 0.0) {
                    diags.push("[sweep] h_list entries must be positive".into());
                }
            }
            if s.h_min <= 0.0 || s.h_max <= s.h_min {
                diags.push("[sweep] need 0 < h_min < h_max".into());
            }
        }
        if !(self.cap.width_fraction > 0.0 && self.cap.width_fraction < 0.4) {
            diags.push("[cap] width_fraction must lie in (0, 0.4)".into());
        }
        if let (Some(chi), Some(hw)) = (&self.cutoff, self.grid.half_width) {
            let spec = chi.to_spec();
            let cap_width = self.cap.width_fraction * 2.0 * hw;
            let interior = hw - cap_width;
            if spec.center.abs() + spec.outer_radius() > interior {
                diags.push(format!(
                    "[cutoff] support reaches past x = {interior:.3}, into the [cap] layer"
                ));
            }
        }
        diags
    }
}
