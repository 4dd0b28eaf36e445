//! Trapped-set detection and classification for the principal potential
//! `V0`, plus the predicted cutoff-resolvent scaling law for each kind of
//! critical component.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::warp::PotentialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    NondegenerateMax,
    DegenerateMax,
    InfinitelyDegenerateMax,
    CylinderMax,
    Inflection,
    InfinitelyDegenerateInflection,
    CylinderInflection,
    LocalMin,
}

/// Degeneracy order; `Infinite` means the fitted order exceeded the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(m) => s.serialize_u32(*m),
            Order::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// A connected component of the trapped set (an interval, or a point when
/// `x_left == x_right`).
#[derive(Debug, Clone, Serialize)]
pub struct CriticalComponent {
    pub x_left: f64,
    pub x_right: f64,
    pub kind: ComponentKind,
    pub order: Order,
    pub critical_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawForm {
    Power,
    PowerLog,
    PowerPlusEta,
    Superpolynomial,
    Nontrapping,
    Elliptic,
}

/// Predicted bound `norm ~ h^{-gamma}` (times `log(1/h)` for `PowerLog`;
/// `gamma = 2` with "for every eta > 0" semantics for `PowerPlusEta`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingLaw {
    pub form: LawForm,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalCase {
    Case1AlmostBounded,
    Case2Blowup,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrappingReport {
    pub components: Vec<CriticalComponent>,
    pub per_component_law: Vec<ScalingLaw>,
    pub case: GlobalCase,
    pub worst_gamma: f64,
    pub smoothing_order: Option<f64>,
}

fn scale_of(profile: &PotentialProfile) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &profile.v0 {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi - lo).max(1e-12)
}

pub fn default_deriv_tol(profile: &PotentialProfile) -> f64 {
    1e-3 * profile.v0p.iter().fold(0.0f64, |m, &d| m.max(d.abs()))
}

pub fn default_merge_width(profile: &PotentialProfile) -> f64 {
    5.0 * profile.grid.delta()
}

/// Maximal intervals where `|V0'| <= deriv_tol`, merged across gaps narrower
/// than `merge_width`.  Intervals that reach into the outer 5% boundary
/// margin are discarded as truncation artifacts (flat potential tails).
pub fn find_critical_components(
    profile: &PotentialProfile,
    deriv_tol: f64,
    merge_width: f64,
) -> Result<Vec<CriticalComponent>> {
    if profile.v0.is_empty() || profile.v0p.is_empty() {
        return Err(CoreError::Classification("empty profile".into()));
    }
    if deriv_tol <= 0.0 || merge_width <= 0.0 {
        return Err(CoreError::Classification("tolerances must be positive".into()));
    }
    let max_slope = profile.v0p.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    if deriv_tol >= max_slope {
        return Err(CoreError::Classification(format!(
            "deriv_tol {deriv_tol:.3e} >= max |V0'| = {max_slope:.3e}: everything is critical"
        )));
    }
    let grid = &profile.grid;
    let delta = grid.delta();
    // raw runs of small derivative
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..grid.n {
        let flat = profile.v0p[i].abs() <= deriv_tol;
        match (flat, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, grid.n - 1));
    }
    // merge across narrow gaps
    let gap_cells = (merge_width / delta).round().max(1.0) as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in runs {
        if let Some(last) = merged.last_mut() {
            if s - last.1 <= gap_cells {
                last.1 = e;
                continue;
            }
        }
        merged.push((s, e));
    }
    // drop boundary-touching runs
    let margin = (grid.n as f64 * 0.05).ceil() as usize;
    merged.retain(|&(s, e)| s > margin && e + margin < grid.n);

    let scale = scale_of(profile);
    let mut out = Vec::new();
    for (s, e) in merged {
        out.push(build_component(profile, s, e, merge_width, scale)?);
    }
    Ok(out)
}

/// Flank pattern relative to the component's critical value.
#[derive(Clone, Copy, PartialEq)]
enum Pattern {
    Max,
    Min,
    Inflection,
}

fn flank_pattern(profile: &PotentialProfile, s: usize, e: usize, scale: f64) -> (Pattern, usize) {
    // each flank is probed against its own run endpoint; a shared midpoint
    // reference misreads runs whose two ends sit at different heights
    let probe_tol = 1e-6 * scale;
    let mut left = 0.0;
    let mut i = s;
    while i > 0 {
        i -= 1;
        if (profile.v0[i] - profile.v0[s]).abs() > probe_tol {
            left = profile.v0[i] - profile.v0[s];
            break;
        }
    }
    let mut right = 0.0;
    let mut j = e;
    while j + 1 < profile.grid.n {
        j += 1;
        if (profile.v0[j] - profile.v0[e]).abs() > probe_tol {
            right = profile.v0[j] - profile.v0[e];
            break;
        }
    }
    let pattern = if left < 0.0 && right < 0.0 {
        Pattern::Max
    } else if left > 0.0 && right > 0.0 {
        Pattern::Min
    } else {
        Pattern::Inflection
    };
    // representative center index
    let center = match pattern {
        Pattern::Max => (s..=e).max_by(|&a, &b| profile.v0[a].total_cmp(&profile.v0[b])),
        Pattern::Min => (s..=e).min_by(|&a, &b| profile.v0[a].total_cmp(&profile.v0[b])),
        Pattern::Inflection => {
            (s..=e).min_by(|&a, &b| profile.v0p[a].abs().total_cmp(&profile.v0p[b].abs()))
        }
    }
    .unwrap_or(s);
    (pattern, center)
}

fn build_component(
    profile: &PotentialProfile,
    s: usize,
    e: usize,
    merge_width: f64,
    scale: f64,
) -> Result<CriticalComponent> {
    let grid = &profile.grid;
    let (pattern, center) = flank_pattern(profile, s, e, scale);
    // a genuine plateau: wide stretch around the representative point on
    // which V0 is constant to rounding.  The detected run extends onto the
    // flanks (where V0' is merely small), so trim before testing the width.
    let thr = 1e-10 * scale;
    let v_ref = profile.v0[center];
    let mut ps = center;
    while ps > s && (profile.v0[ps - 1] - v_ref).abs() <= thr {
        ps -= 1;
    }
    let mut pe = center;
    while pe < e && (profile.v0[pe + 1] - v_ref).abs() <= thr {
        pe += 1;
    }
    // a finite- or infinite-order point maximum is also constant to rounding
    // over a short stretch; a genuine plateau dominates its own run
    let plateau_width = (pe - ps) as f64 * grid.delta();
    let run_width = (e - s) as f64 * grid.delta();
    if plateau_width > merge_width && plateau_width >= 0.5 * run_width {
        let kind = match pattern {
            Pattern::Max => ComponentKind::CylinderMax,
            Pattern::Inflection => ComponentKind::CylinderInflection,
            Pattern::Min => ComponentKind::LocalMin,
        };
        return Ok(CriticalComponent {
            x_left: grid.x(ps),
            x_right: grid.x(pe),
            kind,
            order: Order::Infinite,
            critical_value: v_ref,
        });
    }
    // point component
    Ok(CriticalComponent {
        x_left: grid.x(center),
        x_right: grid.x(center),
        kind: match pattern {
            Pattern::Max => ComponentKind::NondegenerateMax, // refined by classify_order
            Pattern::Min => ComponentKind::LocalMin,
            Pattern::Inflection => ComponentKind::Inflection,
        },
        order: Order::Finite(1),
        critical_value: profile.v0[center],
    })
}

/// Least-squares slope of `log |V0 - critical_value|` against `log |x - xc|`
/// over the flank window `|V0 - Vc| in [1e-8, 1e-2] * scale`.
fn flank_order_fit(
    profile: &PotentialProfile,
    xc: f64,
    vc: f64,
    scale: f64,
    right: bool,
) -> Result<f64> {
    let grid = &profile.grid;
    let (lo, hi) = (1e-8 * scale, 1e-2 * scale);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, x) in grid.points().enumerate() {
        if right && x <= xc || !right && x >= xc {
            continue;
        }
        let dev = (profile.v0[i] - vc).abs();
        if dev < lo || dev > hi {
            continue;
        }
        // restrict to the monotone piece nearest the component: stop once
        // the deviation window has been exited moving away from xc
        xs.push((x - xc).abs().ln());
        ys.push(dev.ln());
    }
    if xs.len() < 6 {
        return Err(CoreError::Classification(format!(
            "flank window too short ({} usable samples) near x = {xc}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(CoreError::Classification("degenerate flank window".into()));
    }
    Ok(sxy / sxx)
}

/// Refine a detected component into `(kind, order)` by fitting the vanishing
/// order on each flank.  Orders above `2 * m_cap` are reported as infinite.
pub fn classify_order(
    profile: &PotentialProfile,
    comp: &CriticalComponent,
    m_cap: u32,
) -> Result<(ComponentKind, Order)> {
    // cylinder components keep their kind
    if matches!(
        comp.kind,
        ComponentKind::CylinderMax | ComponentKind::CylinderInflection
    ) {
        return Ok((comp.kind, Order::Infinite));
    }
    let scale = scale_of(profile);
    let xc = 0.5 * (comp.x_left + comp.x_right);
    let vc = comp.critical_value;
    let slope_l = flank_order_fit(profile, xc, vc, scale, false)?;
    let slope_r = flank_order_fit(profile, xc, vc, scale, true)?;
    let cap = (2 * m_cap) as f64;
    match comp.kind {
        ComponentKind::LocalMin => {
            let q = slope_l.max(slope_r);
            let order = if q > cap {
                Order::Infinite
            } else {
                Order::Finite(((q / 2.0).round() as u32).max(1))
            };
            Ok((ComponentKind::LocalMin, order))
        }
        ComponentKind::Inflection | ComponentKind::InfinitelyDegenerateInflection => {
            // mixed orders classify as the worse (higher-gamma) flank
            let q = slope_l.max(slope_r);
            if q > cap {
                return Ok((ComponentKind::InfinitelyDegenerateInflection, Order::Infinite));
            }
            let q_int = q.round().max(3.0) as u32;
            let m2 = ((q_int.max(3) - 1) / 2).max(1);
            Ok((ComponentKind::Inflection, Order::Finite(m2)))
        }
        _ => {
            let q = slope_l.max(slope_r);
            if q > cap {
                return Ok((ComponentKind::InfinitelyDegenerateMax, Order::Infinite));
            }
            let m = ((q / 2.0).round() as u32).max(1);
            let kind = if m == 1 {
                ComponentKind::NondegenerateMax
            } else {
                ComponentKind::DegenerateMax
            };
            Ok((kind, Order::Finite(m)))
        }
    }
}

/// Inverse of the microlocal lower bounds: the predicted cutoff-resolvent
/// scaling for one component.
pub fn predicted_law(comp: &CriticalComponent) -> ScalingLaw {
    match (comp.kind, comp.order) {
        (ComponentKind::NondegenerateMax, _) => ScalingLaw {
            form: LawForm::PowerLog,
            exponent: 1.0,
        },
        (ComponentKind::DegenerateMax, Order::Finite(m)) => ScalingLaw {
            form: LawForm::Power,
            exponent: 2.0 * m as f64 / (m as f64 + 1.0),
        },
        (ComponentKind::Inflection, Order::Finite(m2)) => ScalingLaw {
            form: LawForm::Power,
            exponent: (4.0 * m2 as f64 + 2.0) / (2.0 * m2 as f64 + 3.0),
        },
        (ComponentKind::LocalMin, _) => ScalingLaw {
            form: LawForm::Superpolynomial,
            exponent: f64::INFINITY,
        },
        // infinitely degenerate or cylindrical kinds, and any fit that ran
        // past the order cap
        _ => ScalingLaw {
            form: LawForm::PowerPlusEta,
            exponent: 2.0,
        },
    }
}

/// Worst-of verdict over the component list (Case 1), or blowup when any
/// stable component is present (Case 2).
pub fn global_verdict(
    components: Vec<CriticalComponent>,
    laws: Vec<ScalingLaw>,
) -> TrappingReport {
    assert_eq!(components.len(), laws.len());
    let blowup = components
        .iter()
        .any(|c| c.kind == ComponentKind::LocalMin);
    if blowup {
        return TrappingReport {
            components,
            per_component_law: laws,
            case: GlobalCase::Case2Blowup,
            worst_gamma: f64::INFINITY,
            smoothing_order: None,
        };
    }
    // no trapping at all: non-trapping O(h^{-1}) baseline
    let worst_gamma = laws
        .iter()
        .map(|l| l.exponent)
        .fold(1.0f64, f64::max);
    let smoothing_order = if worst_gamma < 2.0 {
        Some((2.0 - worst_gamma) / 2.0)
    } else {
        None
    };
    TrappingReport {
        components,
        per_component_law: laws,
        case: GlobalCase::Case1AlmostBounded,
        worst_gamma,
        smoothing_order,
    }
}

/// Full pipeline with default tolerances: detect, classify, predict, judge.
pub fn classify_profile(profile: &PotentialProfile, m_cap: u32) -> Result<TrappingReport> {
    let comps = find_critical_components(
        profile,
        default_deriv_tol(profile),
        default_merge_width(profile),
    )?;
    let mut refined = Vec::with_capacity(comps.len());
    let mut laws = Vec::with_capacity(comps.len());
    for mut comp in comps {
        let (kind, order) = classify_order(profile, &comp, m_cap)?;
        comp.kind = kind;
        comp.order = order;
        laws.push(predicted_law(&comp));
        refined.push(comp);
    }
    Ok(global_verdict(refined, laws))
}
