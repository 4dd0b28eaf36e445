//! Experiment drivers: one function per kind, each producing the three
//! artifacts plus an overall verdict.

use serde_json::json;

use semires_core::billiard::{nonconcentration_check, BoundaryCondition, BoundaryProfile};
use semires_core::classify::{classify_profile, ComponentKind, LawForm, TrappingReport};
use semires_core::discretize::{build_operator, Grid};
use semires_core::gluing::{glued_vs_local, SurgeryWindow};
use semires_core::probe::{
    auto_half_width, default_cutoff, h_sweep, CutoffSpec, ProbeConfig, ResolventSample,
};
use semires_core::quasimode::{build_quasimode, certify_blowup, extend_convex, fit_well, well_cutoff};
use semires_core::scaling::{fit_power, fit_power_log, verdict, ScalingFitResult, Verdict};
use semires_core::warp::{check_gevrey, effective_potential};
use semires_core::CoreError;

use crate::config::ExperimentConfig;
use crate::output::Artifacts;

pub struct RunOutcome {
    pub artifacts: Artifacts,
    /// `None` for kinds that only complete (classify, gevrey pass).
    pub verdict: Option<Verdict>,
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub h_points: Option<usize>,
}

fn seed_of(cfg: &ExperimentConfig, ov: &Overrides) -> u64 {
    ov.seed.unwrap_or(cfg.seed)
}

fn err(e: CoreError) -> String {
    e.to_string()
}

/// Grid used for classification and well fitting (not h-sweeps).
fn classify_grid(cfg: &ExperimentConfig, default_half: f64) -> Result<Grid, String> {
    let hw = cfg.grid.half_width.unwrap_or(default_half);
    let n = cfg.grid.classify_points.unwrap_or(6001);
    Grid::new(-hw, hw, n).map_err(err)
}

fn samples_csv(rows: &[(&str, &ResolventSample)]) -> String {
    let mut out = String::from("label,h,z,norm,iterations,converged,grid_n,cap_eta\n");
    for (label, s) in rows {
        out.push_str(&format!(
            "{label},{},{},{},{},{},{},{}\n",
            s.h, s.z, s.norm, s.iterations, s.converged, s.grid_n, s.cap_eta
        ));
    }
    out
}

fn sweep_plot_script() -> String {
    "set logscale xy\n\
     set datafile separator ','\n\
     set xlabel '1/h'\n\
     set ylabel 'cutoff resolvent norm'\n\
     plot 'data.csv' using (1/$2):4 skip 1 with linespoints title 'measured'\n"
        .to_string()
}

fn meta(cfg: &ExperimentConfig, ov: &Overrides, kind: &str) -> serde_json::Value {
    let threads = std::env::var("SEMIRES_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map(|t| t.max(1))
        .unwrap_or(1);
    json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "experiment": kind,
        "seed": seed_of(cfg, ov),
        "threads": threads,
    })
}

fn fit_json(fit: &Option<ScalingFitResult>) -> serde_json::Value {
    match fit {
        Some(f) => serde_json::to_value(f).unwrap(),
        None => serde_json::Value::Null,
    }
}

fn trapping_json(report: &TrappingReport) -> serde_json::Value {
    let comps: Vec<serde_json::Value> = report
        .components
        .iter()
        .zip(report.per_component_law.iter())
        .map(|(c, law)| {
            json!({
                "x_left": c.x_left,
                "x_right": c.x_right,
                "kind": c.kind,
                "order": c.order,
                "critical_value": c.critical_value,
                "predicted_form": law.form,
                "predicted_gamma": law.exponent,
            })
        })
        .collect();
    json!({
        "components": comps,
        "global": {
            "case": report.case,
            "worst_gamma": report.worst_gamma,
            "smoothing_order": report.smoothing_order,
        }
    })
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

pub fn run_classify(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let warp = cfg.warp.as_ref().ok_or("[warp] block is required")?;
    let grid = classify_grid(cfg, 8.0)?;
    let profile = effective_potential(warp, &grid).map_err(err)?;
    let report = classify_profile(&profile, 8).map_err(err)?;

    let mut csv = String::from("x,v0,v1,v0p,v0pp\n");
    for (i, x) in grid.points().enumerate() {
        csv.push_str(&format!(
            "{x},{},{},{},{}\n",
            profile.v0[i], profile.v1[i], profile.v0p[i], profile.v0pp[i]
        ));
    }
    let report_json = json!({
        "meta": meta(cfg, ov, "classify"),
        "trapping": trapping_json(&report),
    });
    let plot = "set datafile separator ','\n\
                set xlabel 'x'\n\
                plot 'data.csv' using 1:2 skip 1 with lines title 'V0'\n"
        .to_string();
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: csv,
            plot_script: plot,
        },
        verdict: None,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn run_sweep(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let warp = cfg.warp.as_ref().ok_or("[warp] block is required")?;
    let grid = classify_grid(cfg, 8.0)?;
    let profile = effective_potential(warp, &grid).map_err(err)?;
    let trapping = classify_profile(&profile, 8).map_err(err)?;

    let sweep = cfg.sweep.clone().unwrap_or_default();
    // the component driving the worst-of verdict
    let target = trapping
        .per_component_law
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.exponent.total_cmp(&b.1.exponent))
        .map(|(i, _)| i);
    let law = match target {
        Some(i) => trapping.per_component_law[i],
        None => semires_core::ScalingLaw {
            form: LawForm::Nontrapping,
            exponent: 1.0,
        },
    };
    let z = sweep
        .z
        .or_else(|| target.map(|i| trapping.components[i].critical_value))
        .ok_or("[sweep] z is required when no trapping is detected")?;
    let chi = match (&cfg.cutoff, target) {
        (Some(c), _) => c.to_spec(),
        (None, Some(i)) => default_cutoff(
            trapping.components[i].x_left,
            trapping.components[i].x_right,
        ),
        (None, None) => CutoffSpec {
            center: 0.0,
            inner_radius: 2.0,
            taper_width: 0.5,
        },
    };
    let cap = cfg.cap.to_profile();
    let half_width = match cfg.grid.half_width {
        Some(hw) => hw,
        None => auto_half_width(warp, z, &chi, &cap).map_err(err)?,
    };
    let pc = ProbeConfig {
        half_width,
        cap,
        tol: cfg.probe.tol,
        max_iter: cfg.probe.max_iter,
        seed: seed_of(cfg, ov),
    };
    let h_list = sweep.resolve_h_list(ov.h_points);
    let samples = h_sweep(warp, z, &h_list, &chi, &pc).map_err(err)?;
    let had_infinite = samples.iter().any(|s| s.norm.is_infinite());

    let fit_pp = fit_power(&samples).ok();
    let fit_pl = fit_power_log(&samples).ok();
    let chosen = if law.form == LawForm::PowerLog {
        fit_pl.as_ref().or(fit_pp.as_ref())
    } else {
        fit_pp.as_ref()
    };
    let v = match chosen {
        Some(f) => verdict(f, &law, cfg.fit.tol_gamma, had_infinite),
        None if had_infinite && law.form == LawForm::Superpolynomial => Verdict::Consistent,
        None => Verdict::Inconclusive,
    };

    let rows: Vec<(&str, &ResolventSample)> = samples.iter().map(|s| ("sweep", s)).collect();
    let report_json = json!({
        "meta": meta(cfg, ov, "sweep"),
        "trapping": trapping_json(&trapping),
        "z": z,
        "h_range": [h_list.first(), h_list.last()],
        "predicted": {"form": law.form, "gamma": law.exponent},
        "fitted": {
            "pure_power": fit_json(&fit_pp),
            "power_log": fit_json(&fit_pl),
        },
        "r2": chosen.map(|f| f.r2),
        "verdict": v,
    });
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: samples_csv(&rows),
            plot_script: sweep_plot_script(),
        },
        verdict: Some(v),
    })
}

// ---------------------------------------------------------------------------
// quasimode
// ---------------------------------------------------------------------------

pub fn run_quasimode(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let warp = cfg.warp.as_ref().ok_or("[warp] block is required")?;
    let qcfg = cfg.quasimode.as_ref();
    let h_list = qcfg.map(|q| q.h_list.clone()).unwrap_or_else(|| {
        vec![1.0 / 40.0, 1.0 / 60.0, 1.0 / 80.0]
    });
    let delta_init = qcfg.map(|q| q.delta_init).unwrap_or(0.6);
    let cert_order = qcfg.map(|q| q.cert_order).unwrap_or(4) as i32;

    let grid = classify_grid(cfg, 6.0)?;
    let profile = effective_potential(warp, &grid).map_err(err)?;
    let trapping = classify_profile(&profile, 8).map_err(err)?;
    let comp = trapping
        .components
        .iter()
        .find(|c| c.kind == ComponentKind::LocalMin)
        .ok_or("no local minimum component found; quasimode needs a stable well")?;
    let well = fit_well(&profile, comp, delta_init).map_err(err)?;
    let x_out = well.a.max(well.b) + 5.0 * well.eps;

    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut csv = String::from(
        "h,energy,residual,residual_bound,lower_bound,lower_target,measured,mass_outside,pass\n",
    );
    for &h in &h_list {
        // self-adjoint eigenproblem grid over the extension support
        let l = x_out + 3.0;
        let delta = h / 20.0;
        let n = ((2.0 * l / delta).ceil() as usize + 1).max(16);
        let qm_grid = Grid::new(well.center - l, well.center + l, n).map_err(err)?;
        let qm_profile = effective_potential(warp, &qm_grid).map_err(err)?;
        let v_full = qm_profile.full_potential(h);
        let v_tilde = extend_convex(&v_full, &qm_grid, &well).map_err(err)?;
        let qm = build_quasimode(&v_tilde, &v_full, h, &well, &qm_grid).map_err(err)?;

        // CAP problem for the cross-check: same spacing as the eigenproblem
        // grid (so the two discrete eigenvalues track each other), extended
        // so the absorbing layer stays off the eigenproblem domain
        let chi = well_cutoff(&well);
        let chi_tilde = CutoffSpec {
            center: chi.center,
            inner_radius: chi.outer_radius() + 0.5,
            taper_width: 0.5,
        };
        let dx = qm_grid.delta();
        let wf = cfg.cap.width_fraction;
        let pad_cells = ((2.0 * l * wf / (1.0 - 2.0 * wf)) / dx).ceil() as usize + 1;
        let pad = pad_cells as f64 * dx;
        let cap_grid = Grid::new(
            qm_grid.x_min - pad,
            qm_grid.x_max + pad,
            qm_grid.n + 2 * pad_cells,
        )
        .map_err(err)?;
        let cap_profile = effective_potential(warp, &cap_grid).map_err(err)?;
        let v_cap = cap_profile.full_potential(h);
        let op = build_operator(&v_cap, h, &cap_grid, &cfg.cap.to_profile()).map_err(err)?;
        let cert = certify_blowup(&qm, &op, &chi_tilde).map_err(err)?;

        let residual_bound = h.powi(cert_order);
        let lower_target = h.powi(-3);
        let pass = qm.residual <= residual_bound
            && cert.lower_bound >= lower_target
            && cert.cross_check_ok;
        all_pass &= pass;
        csv.push_str(&format!(
            "{h},{},{},{residual_bound},{},{lower_target},{},{},{pass}\n",
            qm.energy, qm.residual, cert.lower_bound, cert.measured, qm.mass_outside
        ));
        rows.push(json!({
            "h": h,
            "energy": qm.energy,
            "residual": qm.residual,
            "residual_bound": residual_bound,
            "lower_bound": cert.lower_bound,
            "lower_target": lower_target,
            "measured": cert.measured,
            "mass_outside": qm.mass_outside,
            "pass": pass,
        }));
    }
    let v = if all_pass {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    let report_json = json!({
        "meta": meta(cfg, ov, "quasimode"),
        "well": well,
        "runs": rows,
        "verdict": v,
    });
    let plot = "set logscale xy\n\
                set datafile separator ','\n\
                set xlabel '1/h'\n\
                plot 'data.csv' using (1/$1):3 skip 1 with linespoints title 'residual', \
                'data.csv' using (1/$1):5 skip 1 with linespoints title 'lower bound'\n"
        .to_string();
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: csv,
            plot_script: plot,
        },
        verdict: Some(v),
    })
}

// ---------------------------------------------------------------------------
// glue
// ---------------------------------------------------------------------------

pub fn run_glue(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let g = cfg.glue.as_ref().ok_or("[glue] block is required")?;
    let windows: Vec<SurgeryWindow> = g
        .windows
        .iter()
        .map(|w| SurgeryWindow { lo: w[0], hi: w[1] })
        .collect();
    let span_lo = windows.iter().map(|w| w.lo).fold(f64::INFINITY, f64::min);
    let span_hi = windows.iter().map(|w| w.hi).fold(f64::NEG_INFINITY, f64::max);
    let chi = match &cfg.cutoff {
        Some(c) => c.to_spec(),
        None => CutoffSpec {
            center: 0.5 * (span_lo + span_hi),
            inner_radius: 0.5 * (span_hi - span_lo) + 1.0,
            taper_width: 0.5,
        },
    };
    let cap = cfg.cap.to_profile();
    let half_width = cfg.grid.half_width.unwrap_or_else(|| {
        (chi.center.abs() + chi.outer_radius() + 2.0) / (1.0 - cap.width_fraction)
    });
    let pc = ProbeConfig {
        half_width,
        cap,
        tol: cfg.probe.tol,
        max_iter: cfg.probe.max_iter,
        seed: seed_of(cfg, ov),
    };
    let report =
        glued_vs_local(|x| g.v0(x), &windows, g.tail, g.z, &g.h_list, &chi, &pc).map_err(err)?;

    let consistent = report.ratio >= 1.0 / 3.0 && report.ratio <= 3.0;
    let v = if consistent {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    let mut rows: Vec<(String, &ResolventSample)> = Vec::new();
    for s in &report.glued {
        rows.push(("glued".to_string(), s));
    }
    for (j, loc) in report.locals.iter().enumerate() {
        for s in loc {
            rows.push((format!("local{j}"), s));
        }
    }
    let row_refs: Vec<(&str, &ResolventSample)> =
        rows.iter().map(|(l, s)| (l.as_str(), *s)).collect();
    let last = g.h_list.len() - 1;
    let report_json = json!({
        "meta": meta(cfg, ov, "glue"),
        "global_norm": report.glued[last].norm,
        "local": report
            .locals
            .iter()
            .enumerate()
            .map(|(j, loc)| json!({"component": j, "norm": loc[last].norm}))
            .collect::<Vec<_>>(),
        "ratio": report.ratio,
        "dominant": report.dominant,
        "verdict": v,
    });
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: samples_csv(&row_refs),
            plot_script: sweep_plot_script(),
        },
        verdict: Some(v),
    })
}

// ---------------------------------------------------------------------------
// billiard
// ---------------------------------------------------------------------------

pub fn run_billiard(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let b = cfg.billiard.as_ref().ok_or("[billiard] block is required")?;
    let bc = match b.bc.as_str() {
        "dirichlet" => BoundaryCondition::Dirichlet,
        "neumann" => BoundaryCondition::Neumann,
        other => return Err(format!("[billiard] unknown bc `{other}`")),
    };
    let profile = BoundaryProfile {
        a: b.a,
        wing_amp: b.wing_amp,
        wing_p: b.wing_p,
        outward_left: b.outward_left,
        outward_right: b.outward_right,
    };
    let chi = match &cfg.cutoff {
        Some(c) => c.to_spec(),
        None => CutoffSpec {
            center: 0.0,
            inner_radius: b.a + 2.0,
            taper_width: 0.5,
        },
    };
    let cap = cfg.cap.to_profile();
    let half_width = cfg.grid.half_width.unwrap_or_else(|| {
        (chi.outer_radius() + 2.0) / (1.0 - cap.width_fraction)
    });
    let pc = ProbeConfig {
        half_width,
        cap,
        tol: cfg.probe.tol,
        max_iter: cfg.probe.max_iter,
        seed: seed_of(cfg, ov),
    };
    let report = nonconcentration_check(
        &profile,
        bc,
        &b.k_list,
        b.scan_halfwidth,
        b.scan_points,
        b.offset,
        &chi,
        &pc,
    )
    .map_err(err)?;

    let spread = |xs: &[f64]| -> f64 {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    };
    let elliptic_norms: Vec<f64> = report.elliptic.iter().map(|s| s.norm).collect();
    let hyperbolic_nh: Vec<f64> = report.hyperbolic.iter().map(|s| s.norm * s.h).collect();
    let elliptic_spread = spread(&elliptic_norms);
    let hyperbolic_spread = spread(&hyperbolic_nh);
    let consistent =
        report.fit.gamma <= 2.3 && elliptic_spread <= 3.0 && hyperbolic_spread <= 3.0;
    let v = if consistent {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };

    let mut csv = String::from("k,beta_k,h,z_peak,norm,elliptic_norm,hyperbolic_norm\n");
    for (i, &k) in b.k_list.iter().enumerate() {
        let p = &report.peaks[i];
        csv.push_str(&format!(
            "{k},{},{},{},{},{},{}\n",
            1.0 / p.h,
            p.h,
            p.z,
            p.norm,
            report.elliptic[i].norm,
            report.hyperbolic[i].norm
        ));
    }
    let report_json = json!({
        "meta": meta(cfg, ov, "billiard"),
        "trapped_energy": semires_core::billiard::trapped_energy(),
        "fit": report.fit,
        "elliptic_spread": elliptic_spread,
        "hyperbolic_spread": hyperbolic_spread,
        "verdict": v,
    });
    let plot = "set logscale xy\n\
                set datafile separator ','\n\
                set xlabel '1/h'\n\
                plot 'data.csv' using (1/$3):5 skip 1 with linespoints title 'peak norm'\n"
        .to_string();
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: csv,
            plot_script: plot,
        },
        verdict: Some(v),
    })
}

// ---------------------------------------------------------------------------
// gevrey
// ---------------------------------------------------------------------------

pub fn run_gevrey(cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let warp = cfg.warp.as_ref().ok_or("[warp] block is required")?;
    let g = cfg.gevrey.as_ref().ok_or("[gevrey] block is required")?;
    let report = check_gevrey(warp, g.x0, g.k_max, &g.sample_xs).map_err(err)?;
    let v = if report.passes {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    let mut csv = String::from("x\n");
    for x in &g.sample_xs {
        csv.push_str(&format!("{x}\n"));
    }
    let report_json = json!({
        "meta": meta(cfg, ov, "gevrey"),
        "x0": g.x0,
        "k_max": g.k_max,
        "passes": report.passes,
        "worst_ratio": report.worst_ratio,
        "fitted_c": report.fitted_c,
        "verdict": v,
    });
    Ok(RunOutcome {
        artifacts: Artifacts {
            report_json: serde_json::to_string_pretty(&report_json).unwrap() + "\n",
            data_csv: csv,
            plot_script: "# nothing to plot for the smoothness spot check\n".to_string(),
        },
        verdict: Some(v),
    })
}

pub fn run(kind: &str, cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome, String> {
    let diags = cfg.validate(kind);
    if !diags.is_empty() {
        return Err(diags.join("; "));
    }
    match kind {
        "classify" => run_classify(cfg, ov),
        "sweep" => run_sweep(cfg, ov),
        "quasimode" => run_quasimode(cfg, ov),
        "glue" => run_glue(cfg, ov),
        "billiard" => run_billiard(cfg, ov),
        "gevrey" => run_gevrey(cfg, ov),
        other => Err(format!("unknown experiment kind `{other}`")),
    }
}
