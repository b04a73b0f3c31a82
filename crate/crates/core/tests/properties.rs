use proptest::prelude::*;

use tclflex::battery::{self, BatteryParams};
use tclflex::fleet::{self, Fleet, TclParams};
use tclflex::lp::{dual_check, solve_lp, LpProblem, Sense};
use tclflex::report::round_half_away;
use tclflex::search::{self, MuGrid};

fn tcl_strategy() -> impl Strategy<Value = TclParams> {
    (
        0.5f64..3.0,
        0.1f64..3.0,
        0.2f64..1.0,
        1.0f64..3.0,
        1.0f64..3.0,
        2.0f64..3.5,
    )
        .prop_map(|(p_b, ratio, dth, c, r, eta)| TclParams {
            id: String::new(),
            p_b,
            p_m: p_b * (1.0 + ratio),
            theta_r: 22.0,
            delta_theta: dth,
            c_th: c,
            r_th: r,
            eta,
            f: None,
        })
}

fn fleet_strategy() -> impl Strategy<Value = Fleet> {
    (prop::collection::vec(tcl_strategy(), 1..8), 0.05f64..1.0).prop_map(|(mut tcls, dt)| {
        for (i, t) in tcls.iter_mut().enumerate() {
            t.id = format!("t{i}");
        }
        Fleet::new(tcls, dt).unwrap()
    })
}

fn params_strategy() -> impl Strategy<Value = BatteryParams> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.0f64..1.0).prop_map(
        |(c, n_plus, n_minus, alpha)| BatteryParams {
            c,
            n_plus,
            n_minus,
            alpha,
        },
    )
}

proptest! {
    #[test]
    fn storage_recursion_is_affine(
        tcl in tcl_strategy(),
        dt in 0.05f64..1.0,
        x0 in -0.2f64..0.2,
        u1 in prop::collection::vec(-1.0f64..1.0, 1..10),
        u2 in prop::collection::vec(-1.0f64..1.0, 1..10),
    ) {
        let d = fleet::derive_coefficients(&tcl, dt).unwrap();
        let n = u1.len().min(u2.len());
        let sum: Vec<f64> = u1[..n].iter().zip(&u2[..n]).map(|(a, b)| a + b).collect();
        let a = fleet::simulate_tcl(&d, x0, &u1[..n]);
        let b = fleet::simulate_tcl(&d, 0.0, &u2[..n]);
        let c = fleet::simulate_tcl(&d, x0, &sum);
        for t in 0..n {
            prop_assert!((c[t] - a[t] - b[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn sbm_nested_in_nbm(fleet in fleet_strategy()) {
        let alpha = fleet.baseline_weighted_alpha();
        let s = battery::sbm_params(&fleet, alpha).unwrap();
        let n = battery::nbm_params(&fleet, alpha).unwrap();
        prop_assert!(s.c <= n.c * (1.0 + 1e-12));
        prop_assert!(s.n_plus <= n.n_plus * (1.0 + 1e-12));
        prop_assert_eq!(s.n_minus, n.n_minus);
    }

    #[test]
    fn combine_is_monotone_in_mu(fleet in fleet_strategy(), a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
        let alpha = fleet.baseline_weighted_alpha();
        let s = battery::sbm_params(&fleet, alpha).unwrap();
        let n = battery::nbm_params(&fleet, alpha).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = battery::combine(&s, &n, lo).unwrap();
        let q = battery::combine(&s, &n, hi).unwrap();
        prop_assert!(p.le(&q, 1e-9));
    }

    #[test]
    fn shrink_branch_scales_sbm(p in params_strategy(), mu in -1.0f64..0.0) {
        let big = BatteryParams { c: p.c * 2.0, n_plus: p.n_plus * 2.0, n_minus: p.n_minus * 2.0, ..p };
        let r = battery::combine(&p, &big, mu).unwrap();
        let k = 1.0 + mu;
        prop_assert!((r.c - k * p.c).abs() < 1e-12 * p.c.max(1.0));
        prop_assert!((r.n_plus - k * p.n_plus).abs() < 1e-12 * p.n_plus.max(1.0));
        prop_assert!((r.n_minus - k * p.n_minus).abs() < 1e-12 * p.n_minus.max(1.0));
    }

    #[test]
    fn admissible_set_is_star_shaped(
        p in params_strategy(),
        dt in 0.1f64..1.0,
        raw in prop::collection::vec(-1.0f64..1.0, 1..8),
        s in 0.0f64..=1.0,
    ) {
        let traj: Vec<f64> = raw.iter().map(|v| if *v >= 0.0 { v * p.n_plus } else { v * p.n_minus }).collect();
        if battery::admissible(&p, &traj, dt).admissible {
            let scaled: Vec<f64> = traj.iter().map(|v| v * s).collect();
            prop_assert!(battery::admissible(&p, &scaled, dt).admissible);
        }
    }

    #[test]
    fn lazy_search_matches_grid(threshold in -1.2f64..1.2, k in 1usize..=200) {
        let grid = MuGrid::new(2.0 / k as f64).unwrap();
        let stub = move |mu: f64| if mu <= threshold { 0.0 } else { 1.0 + mu };
        let evals = search::grid_eval(&stub, grid).unwrap();
        match (search::search_lazy(&stub, grid), search::search_evaluations(grid, &evals)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.mu_star, b.mu_star);
                prop_assert!(a.oracle_calls as f64 <= 2.0 + (grid.k as f64).log2().ceil());
            }
            (Err(_), Err(_)) => prop_assert!(threshold < -1.0),
            (a, b) => prop_assert!(false, "modes disagree: {:?} vs {:?}", a.map(|r| r.mu_star), b.map(|r| r.mu_star)),
        }
    }

    #[test]
    fn two_decimal_rounding_is_within_half_a_cent(x in -1e6f64..1e6) {
        let s = round_half_away(x, 2);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 0.005 + 1e-9 * x.abs());
        prop_assert_eq!(s.split('.').nth(1).map(str::len), Some(2));
    }

    #[test]
    fn feasible_lps_satisfy_optimality_conditions(
        n in 1usize..10,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lp = LpProblem::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
        for j in 0..n {
            lp.set_bounds(j, x0[j] - rng.gen_range(0.1..2.0), x0[j] + rng.gen_range(0.1..2.0));
        }
        for _ in 0..rng.gen_range(0..=n) {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ax: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
            let rhs = match sense {
                Sense::Le => ax + rng.gen_range(0.0..1.0),
                Sense::Ge => ax - rng.gen_range(0.0..1.0),
                Sense::Eq => ax,
            };
            lp.add_row(a, sense, rhs);
        }
        let sol = solve_lp(&lp).unwrap();
        prop_assert!(sol.is_optimal());
        let r = dual_check(&lp, &sol);
        prop_assert!(r.max_residual() < 1e-7, "{:?}", r);
        // the interior point is feasible, so the optimum cannot exceed it
        let at_x0: f64 = lp.objective.iter().zip(&x0).map(|(c, x)| c * x).sum();
        prop_assert!(sol.objective <= at_x0 + 1e-9);
    }
}
