use semires_core::discretize::Grid;
use semires_core::warp::{
    check_gevrey, effective_potential, finite_differences, mode_parameters, Family,
    PotentialProfile, WarpSpec,
};
use semires_core::CoreError;

fn grid() -> Grid {
    Grid::new(-6.0, 6.0, 2401).unwrap()
}

#[test]
fn constant_warp_gives_constant_v0_and_zero_v1() {
    let spec = WarpSpec::new(
        Family::ConstantPlusBump {
            a0: 1.0,
            amp: 0.0,
            width: 1.0,
        },
        3,
    );
    let p = effective_potential(&spec, &grid()).unwrap();
    for i in 0..p.grid.n {
        assert!((p.v0[i] - 1.0).abs() < 1e-14);
        assert!(p.v1[i].abs() < 1e-14);
        assert!(p.v0p[i].abs() < 1e-14);
    }

    // A = 1.25 constant: V0 = 1.25^-2 everywhere
    let spec = WarpSpec::new(
        Family::ConstantPlusBump {
            a0: 1.25,
            amp: 0.0,
            width: 1.0,
        },
        4,
    );
    let p = effective_potential(&spec, &grid()).unwrap();
    for &v in &p.v0 {
        assert!((v - 1.25f64.powi(-2)).abs() < 1e-14);
    }
}

// Independent reconstruction of the bump warp used to cross-check V1.
fn bump_a(a0: f64, amp: f64, w: f64, x: f64) -> f64 {
    a0 + amp * (-(x / w) * (x / w)).exp()
}

#[test]
fn v1_matches_direct_formula_for_n3() {
    // n = 3 kills the (A'/A)^2 term: V1 = A''/A
    let (a0, amp, w) = (1.0, -0.3, 1.2);
    let spec = WarpSpec::new(
        Family::ConstantPlusBump {
            a0,
            amp,
            width: w,
        },
        3,
    );
    let g = grid();
    let p = effective_potential(&spec, &g).unwrap();
    let fd = 1e-4;
    for (i, x) in g.points().enumerate().step_by(37) {
        let app = (bump_a(a0, amp, w, x + fd) - 2.0 * bump_a(a0, amp, w, x)
            + bump_a(a0, amp, w, x - fd))
            / (fd * fd);
        let expected = app / bump_a(a0, amp, w, x);
        assert!(
            (p.v1[i] - expected).abs() < 1e-6,
            "x = {x}: v1 = {} vs {expected}",
            p.v1[i]
        );
    }
}

#[test]
fn v1_matches_direct_formula_for_general_n() {
    for n_dim in [2u32, 5] {
        let (a0, amp, w) = (1.1, 0.4, 0.9);
        let spec = WarpSpec::new(
            Family::ConstantPlusBump {
                a0,
                amp,
                width: w,
            },
            n_dim,
        );
        let g = grid();
        let p = effective_potential(&spec, &g).unwrap();
        let n = n_dim as f64;
        let fd = 1e-4;
        for (i, x) in g.points().enumerate().step_by(53) {
            let a = bump_a(a0, amp, w, x);
            let ap = (bump_a(a0, amp, w, x + fd) - bump_a(a0, amp, w, x - fd)) / (2.0 * fd);
            let app = (bump_a(a0, amp, w, x + fd) - 2.0 * a + bump_a(a0, amp, w, x - fd))
                / (fd * fd);
            let expected =
                (n - 1.0) / 2.0 * app / a - (n - 1.0) * (n - 3.0) / 4.0 * (ap / a) * (ap / a);
            assert!(
                (p.v1[i] - expected).abs() < 1e-6,
                "n = {n_dim}, x = {x}: v1 = {} vs {expected}",
                p.v1[i]
            );
        }
    }
}

#[test]
fn closed_form_derivatives_match_finite_differences() {
    // every built-in family's stored V0', V0'' must agree with differencing
    let families = vec![
        Family::ConstantPlusBump {
            a0: 1.0,
            amp: -0.3,
            width: 1.0,
        },
        Family::DegenerateBump {
            m: 2,
            amp: 1.0,
            width: 1.0,
            floor: 0.2,
        },
        Family::InflectionProfile {
            m2: 1,
            level: 1.0,
            depth: 0.4,
            width: 1.0,
            center: 0.3,
        },
        Family::GevreyFlat {
            p: 2.0,
            amp: 1.2,
            drop: 1.0,
            plateau: 0.5,
        },
        Family::WellProfile {
            v_min: 0.5,
            depth: 2.0,
            width: 1.0,
        },
    ];
    let g = Grid::new(-6.0, 6.0, 24001).unwrap();
    for fam in families {
        let spec = WarpSpec::new(fam, 3);
        let p = effective_potential(&spec, &g).unwrap();
        let (fd_p, fd_pp) = finite_differences(&p.v0, g.delta());
        let scale = p.v0p.iter().fold(0.0f64, |m, &d| m.max(d.abs())).max(1.0);
        for i in 4..g.n - 4 {
            assert!(
                (p.v0p[i] - fd_p[i]).abs() < 1e-6 * scale,
                "{:?}: v0p mismatch at i = {i}",
                spec.family
            );
            assert!(
                (p.v0pp[i] - fd_pp[i]).abs() < 2e-4 * scale,
                "{:?}: v0pp mismatch at i = {i}",
                spec.family
            );
        }
    }
}

#[test]
fn finite_differences_fourth_order_accuracy() {
    let g = Grid::new(-2.0, 2.0, 401).unwrap();
    let v: Vec<f64> = g.points().map(|x| (2.0 * x).sin()).collect();
    let (vp, vpp) = finite_differences(&v, g.delta());
    for (i, x) in g.points().enumerate() {
        if i < 2 || i + 2 >= g.n {
            continue;
        }
        assert!((vp[i] - 2.0 * (2.0 * x).cos()).abs() < 1e-6);
        assert!((vpp[i] + 4.0 * (2.0 * x).sin()).abs() < 1e-4);
    }
}

#[test]
fn mode_parameters_inverts_the_eigenvalue() {
    assert_eq!(mode_parameters(4.0).unwrap(), 0.25);
    assert!(mode_parameters(0.0).is_err());
    assert!(mode_parameters(-3.0).is_err());
}

#[test]
fn critical_and_far_values() {
    let fam = Family::DegenerateBump {
        m: 2,
        amp: 1.0,
        width: 1.0,
        floor: 0.2,
    };
    assert_eq!(fam.critical_value(), Some(1.2));
    assert_eq!(fam.v_far_max(), Some(0.2));
    let fam = Family::ConstantPlusBump {
        a0: 1.0,
        amp: -0.3,
        width: 1.0,
    };
    assert!((fam.critical_value().unwrap() - 0.7f64.powi(-2)).abs() < 1e-14);
    assert_eq!(fam.v_far_max(), Some(1.0));
}

#[test]
fn dimension_below_two_is_rejected() {
    let spec = WarpSpec::new(
        Family::ConstantPlusBump {
            a0: 1.0,
            amp: 0.0,
            width: 1.0,
        },
        1,
    );
    assert!(matches!(
        effective_potential(&spec, &grid()),
        Err(CoreError::Config(_))
    ));
}

#[test]
fn warp_positivity_floor_is_enforced() {
    // A(0) = 1e-12 sits below the default floor
    let spec = WarpSpec::new(
        Family::ConstantPlusBump {
            a0: 1.0,
            amp: -1.0 + 1e-12,
            width: 1.0,
        },
        3,
    );
    assert!(matches!(
        effective_potential(&spec, &grid()),
        Err(CoreError::Domain(_))
    ));
}

#[test]
fn raw_potential_interpolates_and_differences() {
    let xs: Vec<f64> = (0..241).map(|i| -6.0 + i as f64 * 0.05).collect();
    let v0: Vec<f64> = xs.iter().map(|&x| 1.0 + (-x * x).exp()).collect();
    let spec = WarpSpec::new(
        Family::RawPotential {
            xs: xs.clone(),
            v0,
            v1: None,
        },
        3,
    );
    let g = Grid::new(-5.0, 5.0, 2001).unwrap();
    let p = effective_potential(&spec, &g).unwrap();
    for (i, x) in g.points().enumerate().step_by(41) {
        let exact = 1.0 + (-x * x).exp();
        // piecewise-linear interpolation of the table: O(table step^2)
        assert!((p.v0[i] - exact).abs() < 1e-3, "x = {x}");
    }
    // derivative tables populated by differencing the interpolant
    let mid = g.index_of(0.7);
    let exact_p = -2.0 * 0.7 * (-0.49f64).exp();
    assert!((p.v0p[mid] - exact_p).abs() < 0.05);
}

#[test]
fn raw_potential_rejects_bad_tables() {
    let spec = WarpSpec::new(
        Family::RawPotential {
            xs: vec![0.0, 1.0],
            v0: vec![1.0],
            v1: None,
        },
        3,
    );
    assert!(effective_potential(&spec, &grid()).is_err());
    let spec = WarpSpec::new(
        Family::RawPotential {
            xs: vec![0.0, 1.0],
            v0: vec![1.0, -1.0],
            v1: None,
        },
        3,
    );
    assert!(effective_potential(&spec, &grid()).is_err());
}

fn gevrey_spec(p: f64, tau: f64) -> WarpSpec {
    let mut spec = WarpSpec::new(
        Family::GevreyFlat {
            p,
            amp: 1.2,
            drop: 1.0,
            plateau: 0.0,
        },
        3,
    );
    spec.tau = Some(tau);
    spec
}

const GEVREY_XS: [f64; 6] = [0.05, 0.08, 0.12, 0.2, 0.3, 0.4];

#[test]
fn gevrey_check_accepts_the_honest_index() {
    for p in [1.0f64, 2.0, 3.0] {
        let spec = gevrey_spec(p, p + 1.0);
        let rep = check_gevrey(&spec, 0.0, 6, &GEVREY_XS).unwrap();
        assert!(rep.passes, "p = {p}: worst_ratio = {}", rep.worst_ratio);
        assert!(rep.fitted_c <= 4.0);
    }
}

#[test]
fn gevrey_check_rejects_an_understated_index() {
    for p in [1.0f64, 2.0, 3.0] {
        let spec = gevrey_spec(p, p / 2.0);
        let rep = check_gevrey(&spec, 0.0, 6, &GEVREY_XS).unwrap();
        assert!(!rep.passes, "p = {p}: worst_ratio = {}", rep.worst_ratio);
    }
}

#[test]
fn gevrey_check_requires_tau_and_samples() {
    let mut spec = gevrey_spec(2.0, 3.0);
    spec.tau = None;
    assert!(check_gevrey(&spec, 0.0, 6, &GEVREY_XS).is_err());
    let spec = gevrey_spec(2.0, 3.0);
    assert!(check_gevrey(&spec, 0.0, 6, &[]).is_err());
}

#[test]
fn from_functions_and_full_potential() {
    let g = Grid::new(-1.0, 1.0, 101).unwrap();
    let p = PotentialProfile::from_functions(&g, |x| 1.0 + x * x, |x| 2.0 * x, |_| 2.0);
    let v = p.full_potential(0.1);
    for (i, x) in g.points().enumerate() {
        // v1 is zero for from_functions profiles
        assert!((v[i] - (1.0 + x * x)).abs() < 1e-14);
    }
}
