use num_complex::Complex64;
use proptest::prelude::*;
use semires_core::classify::classify_profile;
use semires_core::discretize::{solve, Grid};
use semires_core::gluing::{propagation_inequality_check, BandLimited, PropagationCase};
use semires_core::probe::{CutoffSpec, ResolventSample};
use semires_core::scaling::fit_power;
use semires_core::warp::{effective_potential, Family, WarpSpec};
use semires_core::DiscreteOperator;

fn sample(h: f64, norm: f64) -> ResolventSample {
    ResolventSample {
        h,
        z: 1.0,
        norm,
        iterations: 1,
        converged: true,
        grid_n: 100,
        cap_eta: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_power_recovers_planted_exponents(
        gamma in 0.2f64..3.0,
        log_c in -3.0f64..3.0,
    ) {
        let samples: Vec<ResolventSample> = (0..7)
            .map(|i| {
                let h = 0.02 * 0.5f64.powf(i as f64 / 2.0);
                sample(h, log_c.exp() * h.powf(-gamma))
            })
            .collect();
        let fit = fit_power(&samples).unwrap();
        prop_assert!((fit.gamma - gamma).abs() < 1e-9);
        prop_assert!((fit.log_c - log_c).abs() < 1e-9);
    }

    #[test]
    fn fit_power_is_permutation_invariant(seed in 0u64..1000) {
        let mut samples: Vec<ResolventSample> = (0..6)
            .map(|i| {
                let h = 0.02 * 0.55f64.powi(i);
                // irregular but deterministic noise
                let jitter = 1.0 + 0.05 * (((seed + i as u64) * 2654435761 % 1000) as f64 / 1000.0 - 0.5);
                sample(h, h.powf(-1.3) * jitter)
            })
            .collect();
        let f0 = fit_power(&samples).unwrap();
        // rotate by seed
        let k = (seed % 6) as usize;
        samples.rotate_left(k);
        let f1 = fit_power(&samples).unwrap();
        prop_assert_eq!(f0.gamma.to_bits(), f1.gamma.to_bits());
        prop_assert_eq!(f0.sse.to_bits(), f1.sse.to_bits());
    }

    #[test]
    fn cutoff_values_are_a_partition_shape(
        center in -3.0f64..3.0,
        inner in 0.1f64..4.0,
        taper in 0.05f64..2.0,
        x in -10.0f64..10.0,
    ) {
        let chi = CutoffSpec { center, inner_radius: inner, taper_width: taper };
        let v = chi.eval(x);
        prop_assert!((0.0..=1.0).contains(&v));
        // radially monotone: moving away from the center never increases chi
        let further = center + (x - center) * 1.1;
        prop_assert!(chi.eval(further) <= v + 1e-12);
        // plateau and support
        if (x - center).abs() <= inner {
            prop_assert_eq!(v, 1.0);
        }
        if (x - center).abs() >= inner + taper {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn propagation_inequality_always_holds(
        a in -2.0f64..2.0,
        gap in 1.0f64..2.5,
        big_k in 0.4f64..3.0,
        h in 0.02f64..0.5,
        w1 in -10.0f64..10.0,
        w2 in -10.0f64..10.0,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        s2 in -1.0f64..1.0,
    ) {
        let case = PropagationCase {
            a,
            b: a + gap,
            big_k,
            h,
            u: BandLimited { modes: vec![(w1, c1, 0.3), (w2, c2, s2)] },
        };
        let c = propagation_inequality_check(&case).unwrap();
        prop_assert!(c.holds, "lhs = {} rhs = {}", c.lhs, c.rhs);
    }

    #[test]
    fn tridiagonal_solve_residual_is_tight(seed in 0u64..500) {
        // small deterministic diagonally dominant complex system
        let n = 40usize;
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let f = |i: u64| {
            let v = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(i.wrapping_mul(1442695040888963407))
                >> 11;
            (v % 2000) as f64 / 1000.0 - 1.0
        };
        let mut off = Vec::new();
        for i in 0..n - 1 {
            off.push(Complex64::new(f(i as u64), f(i as u64 + 100)));
        }
        let mut diag = Vec::new();
        for i in 0..n {
            let mut s = 1.0;
            if i > 0 { s += off[i - 1].norm(); }
            if i < n - 1 { s += off[i].norm(); }
            diag.push(Complex64::new(f(i as u64 + 200) + s, f(i as u64 + 300)));
        }
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(f(i as u64 + 400), f(i as u64 + 500)))
            .collect();
        let op = DiscreteOperator { h: 1.0, diag, offdiag: off, grid };
        let u = solve(&op, Complex64::ZERO, &rhs).unwrap();
        let r = op.apply_shifted(Complex64::ZERO, &u);
        let res: f64 = r.iter().zip(rhs.iter()).map(|(x, b)| (x - b).norm_sqr()).sum::<f64>().sqrt();
        let bn: f64 = rhs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(res / bn <= 1e-10);
    }
}

proptest! {
    // classification involves full profile construction; keep the case count low
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classification_is_stable_under_amplitude_scaling(
        m in 1u32..4,
        s in 0.5f64..2.0,
    ) {
        let grid = Grid::new(-8.0, 8.0, 3201).unwrap();
        let classify = |amp: f64, floor: f64| {
            let spec = WarpSpec::new(
                Family::DegenerateBump { m, amp, width: 1.0, floor },
                3,
            );
            let profile = effective_potential(&spec, &grid).unwrap();
            classify_profile(&profile, 6).unwrap()
        };
        let base = classify(1.0, 0.2);
        let scaled = classify(s, 0.2 * s);
        prop_assert_eq!(base.components.len(), scaled.components.len());
        for (a, b) in base.components.iter().zip(scaled.components.iter()) {
            prop_assert_eq!(a.kind, b.kind);
            prop_assert_eq!(a.order, b.order);
        }
        prop_assert_eq!(base.worst_gamma.to_bits(), scaled.worst_gamma.to_bits());
    }
}
