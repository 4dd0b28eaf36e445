use semires_core::classify::classify_profile;
use semires_core::discretize::{build_operator, CapProfile, Grid};
use semires_core::quasimode::{
    build_quasimode, certify_blowup, extend_convex, fit_well, well_cutoff, WellSpec,
};
use semires_core::warp::PotentialProfile;
use semires_core::CoreError;

fn parabola_profile(grid: &Grid, v_min: f64) -> PotentialProfile {
    PotentialProfile::from_functions(grid, |x| v_min + x * x, |x| 2.0 * x, |_| 2.0)
}

fn well_component(profile: &PotentialProfile) -> semires_core::classify::CriticalComponent {
    let report = classify_profile(profile, 6).unwrap();
    report
        .components
        .into_iter()
        .find(|c| c.kind == semires_core::classify::ComponentKind::LocalMin)
        .expect("local minimum component")
}

#[test]
fn parabola_well_geometry_is_symmetric() {
    // curvature 1.1 keeps the level crossings strictly between grid nodes
    let grid = Grid::new(-10.0, 10.0, 4001).unwrap();
    let profile = PotentialProfile::from_functions(
        &grid,
        |x| 0.5 + 1.1 * x * x,
        |x| 2.2 * x,
        |_| 2.2,
    );
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    assert!((well.v_min - 0.5).abs() < 1e-4);
    assert!(well.center.abs() < 1e-2);
    // V crosses v_min + delta at +-sqrt(delta / 1.1)
    let half = (well.delta / 1.1).sqrt();
    assert!((well.a - half).abs() < 1e-6, "a = {} vs {half}", well.a);
    assert!((well.b - half).abs() < 1e-6, "b = {} vs {half}", well.b);
    let (e_lo, e_hi) = well.energy_window();
    assert!((e_lo - (0.5 + well.delta / 2.0)).abs() < 1e-12);
    assert!((e_hi - (0.5 + 2.0 * well.delta / 3.0)).abs() < 1e-12);
}

#[test]
fn asymmetric_well_reports_distinct_half_widths() {
    // crossings of v_min + delta at -sqrt(delta) and +sqrt(delta/4) = b with
    // V = x^2 for x < 0 and 4 x^2 for x > 0 (smoothed at the corner)
    let grid = Grid::new(-10.0, 10.0, 4001).unwrap();
    let f = |x: f64| if x < 0.0 { x * x } else { 4.0 * x * x };
    let fp = |x: f64| if x < 0.0 { 2.0 * x } else { 8.0 * x };
    let fpp = |x: f64| if x < 0.0 { 2.0 } else { 8.0 };
    let profile = PotentialProfile::from_functions(&grid, f, fp, fpp);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    assert!(
        (well.a - well.delta.sqrt()).abs() < 1e-2,
        "a = {} delta = {}",
        well.a,
        well.delta
    );
    assert!(
        (well.b - (well.delta / 4.0).sqrt()).abs() < 1e-2,
        "b = {} delta = {}",
        well.b,
        well.delta
    );
    assert!(well.a > well.b);
}

#[test]
fn non_minimum_component_is_rejected() {
    let grid = Grid::new(-10.0, 10.0, 2001).unwrap();
    let profile = PotentialProfile::from_functions(
        &grid,
        |x| 1.0 + (-x * x).exp(),
        |x| -2.0 * x * (-x * x).exp(),
        |x| (4.0 * x * x - 2.0) * (-x * x).exp(),
    );
    let report = classify_profile(&profile, 6).unwrap();
    let comp = &report.components[0];
    assert!(matches!(
        fit_well(&profile, comp, 0.25),
        Err(CoreError::DegenerateWell(_))
    ));
}

#[test]
fn harmonic_well_quasimode_residual_is_tiny() {
    // V is globally convex, so the extension leaves it unchanged on the well
    // and the eigenfunction is exact up to the cutoff tail
    let grid = Grid::new(-12.0, 12.0, 4801).unwrap();
    let profile = parabola_profile(&grid, 0.5);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    let h = 1.0 / 60.0;
    let v = profile.full_potential(h);
    let v_tilde = extend_convex(&v, &grid, &well).unwrap();
    let qm = build_quasimode(&v_tilde, &v, h, &well, &grid).unwrap();
    let (e_lo, e_hi) = well.energy_window();
    assert!(qm.energy >= e_lo && qm.energy <= e_hi);
    assert!(qm.residual <= 1e-8, "residual = {:e}", qm.residual);
    // the selected level sits several quanta up, so its tail pokes slightly
    // past the classical interval; it must still be well under half the mass
    assert!(qm.mass_outside < 0.5, "mass outside = {}", qm.mass_outside);
}

#[test]
fn residual_halves_faster_than_h() {
    // shallow gaussian well glued into a plateau: the extension is nontrivial
    let grid = Grid::new(-14.0, 14.0, 5601).unwrap();
    let f = |x: f64| 1.5 - (-x * x / 2.0).exp();
    let fp = |x: f64| x * (-x * x / 2.0).exp();
    let fpp = |x: f64| (1.0 - x * x) * (-x * x / 2.0).exp();
    let profile = PotentialProfile::from_functions(&grid, f, fp, fpp);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    // not every h puts an eigenvalue inside the narrow window, so scan and
    // keep the successes
    let mut hits: Vec<(f64, f64)> = Vec::new();
    for &h in &[0.25, 0.2, 0.15, 0.125, 0.1, 0.08, 0.0625, 0.05] {
        let v = profile.full_potential(h);
        let v_tilde = extend_convex(&v, &grid, &well).unwrap();
        if let Ok(qm) = build_quasimode(&v_tilde, &v, h, &well, &grid) {
            hits.push((h, qm.residual));
        }
    }
    assert!(hits.len() >= 2, "too few admissible h values: {hits:?}");
    let (h_hi, r_hi) = hits[0];
    let (h_lo, r_lo) = *hits.last().unwrap();
    assert!(h_lo <= 0.5 * h_hi, "span too small: {hits:?}");
    assert!(r_hi > 1e-12, "large-h residual already at rounding floor");
    // exponential smallness beats any power of h: going down a factor of two
    // or more in h must shrink the residual superlinearly
    assert!(
        r_lo <= r_hi * (h_lo / h_hi),
        "residual decay not superlinear: {hits:?}"
    );
}

#[test]
fn doubling_eps_does_not_blow_up_the_residual() {
    let grid = Grid::new(-20.0, 20.0, 8001).unwrap();
    let profile = parabola_profile(&grid, 0.5);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    let wide = WellSpec {
        eps: 2.0 * well.eps,
        ..well
    };
    let h = 1.0 / 60.0;
    let v = profile.full_potential(h);
    let res = |w: &WellSpec| {
        let v_tilde = extend_convex(&v, &grid, w).unwrap();
        build_quasimode(&v_tilde, &v, h, w, &grid).unwrap().residual
    };
    let (r0, r1) = (res(&well), res(&wide));
    // the bound is eps-robust: a factor-2 change in eps moves the residual by
    // at most an order of magnitude (both sit near the rounding floor here)
    assert!(r1 <= 10.0 * r0.max(1e-14), "{r0:e} vs {r1:e}");
}

#[test]
fn extension_keeps_the_well_and_grows_quadratically() {
    let grid = Grid::new(-16.0, 16.0, 6401).unwrap();
    let profile = parabola_profile(&grid, 0.0);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    let v = profile.full_potential(0.05);
    let v_tilde = extend_convex(&v, &grid, &well).unwrap();
    let x_out = well.a.max(well.b) + 5.0 * well.eps;
    for (i, x) in grid.points().enumerate() {
        if x >= well.x_left() - well.eps && x <= well.x_right() + well.eps {
            assert_eq!(v_tilde[i], v[i], "well region altered at x = {x}");
        }
        if x >= well.center + x_out || x <= well.center - x_out {
            let q = well.v_min + well.beta * (x - well.center) * (x - well.center);
            assert!((v_tilde[i] - q).abs() < 1e-12, "tail not quadratic at {x}");
        }
    }
}

#[test]
fn extension_rejects_escaping_sublevel_sets() {
    // a second dip inside the kept region (|x| <= b + eps) drags the
    // sublevel set at quasimode energies outside [-a, b]
    let grid = Grid::new(-30.0, 30.0, 12001).unwrap();
    let f = |x: f64| {
        1.0 - (-4.0 * x * x).exp() - 0.95 * (-16.0 * (x - 1.2) * (x - 1.2)).exp()
    };
    let profile = PotentialProfile::from_functions(&grid, f, |_| 0.0, |_| 0.0);
    let well = WellSpec {
        center: 0.0,
        v_min: 0.0,
        delta: 0.25,
        a: 0.5,
        b: 0.5,
        eps: 1.0,
        beta: 1.0,
    };
    let v = profile.v0.clone();
    assert!(matches!(
        extend_convex(&v, &grid, &well),
        Err(CoreError::Extension(_))
    ));
}

#[test]
fn cutoff_covers_the_well_with_margin() {
    let well = WellSpec {
        center: 1.0,
        v_min: 0.0,
        delta: 0.25,
        a: 0.4,
        b: 0.6,
        eps: 1.0,
        beta: 1.0,
    };
    let chi = well_cutoff(&well);
    assert_eq!(chi.eval(well.x_left()), 1.0);
    assert_eq!(chi.eval(well.x_right()), 1.0);
    // support stays within eps of the interval
    assert!(chi.eval(well.x_right() + well.eps + 1e-9) == 0.0);
    assert!(chi.eval(well.x_left() - well.eps - 1e-9) == 0.0);
}

#[test]
fn blowup_certificate_cross_checks_against_direct_measurement() {
    let grid = Grid::new(-12.0, 12.0, 4801).unwrap();
    let f = |x: f64| 1.5 - (-x * x / 2.0).exp();
    let fp = |x: f64| x * (-x * x / 2.0).exp();
    let fpp = |x: f64| (1.0 - x * x) * (-x * x / 2.0).exp();
    let profile = PotentialProfile::from_functions(&grid, f, fp, fpp);
    let comp = well_component(&profile);
    let well = fit_well(&profile, &comp, 0.25).unwrap();
    let h = 1.0 / 40.0;
    let v = profile.full_potential(h);
    let v_tilde = extend_convex(&v, &grid, &well).unwrap();
    let qm = build_quasimode(&v_tilde, &v, h, &well, &grid).unwrap();
    assert!(qm.residual <= h.powi(4), "residual {:e} > h^4", qm.residual);

    let op = build_operator(&v, h, &grid, &CapProfile::default()).unwrap();
    let chi = well_cutoff(&well);
    let cert = certify_blowup(&qm, &op, &chi).unwrap();
    assert!(cert.lower_bound >= h.powi(-3));
    assert!(cert.cross_check_ok, "measured {:e} vs lower {:e}", cert.measured, cert.lower_bound);
}
