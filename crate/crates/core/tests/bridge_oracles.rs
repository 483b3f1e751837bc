mod common;

use msb_lab::bridge::{
    benamou_bridge, benamou_reference, bridge_drift, entropic_interpolation, girsanov_interval_kl,
    kl_vs_wiener, midpoint_nodes, solve_bridge, BridgeProblem, BridgeSolution, SinkhornParams,
};
use msb_lab::fokker_planck::{evolve, marginal_path, MarginalPath, StepPolicy};
use msb_lab::lab::{bound_constants, ExperimentConfig};
use msb_lab::msb::interval_bound;
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};
use proptest::prelude::*;

/// Path through `t_a`, the midpoint nodes and `t_b`, started from `ρ₀` at 0.
fn path_for(rho0: &GridDensity, spec: &PotentialSpec, t_a: f64, t_b: f64, n_t: usize) -> MarginalPath {
    let mut times = vec![0.0, t_a];
    times.extend(midpoint_nodes(t_a, t_b, n_t));
    times.push(t_b);
    times.dedup();
    marginal_path(rho0, spec, 1.0, &times, StepPolicy::default()).unwrap()
}

fn bridge_on(path: &MarginalPath, t_a: f64, t_b: f64) -> BridgeSolution {
    let p = BridgeProblem::new(
        path.density_at(t_a).unwrap().clone(),
        path.density_at(t_b).unwrap().clone(),
        t_a,
        t_b,
        path.tau(),
    )
    .unwrap();
    solve_bridge(&p, &SinkhornParams::default()).unwrap()
}

#[test]
fn sinkhorn_matches_dense_oracle_on_eight_points() {
    let n = 8;
    let g = make_grid(1, n).unwrap();
    let a = common::density_from(n, f64::cos);
    let b = common::density_from(n, f64::sin);
    let p = BridgeProblem::new_unguarded(
        GridDensity::new(g, a.clone()).unwrap(),
        GridDensity::new(g, b.clone()).unwrap(),
        0.0,
        0.2,
        1.0,
    )
    .unwrap();
    let sol = solve_bridge(&p, &SinkhornParams::default()).unwrap();
    assert!(sol.marginal_residual() <= 1e-10);
    let h = g.cell_volume();
    let xs = common::nodes(n);
    let k: common::Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| common::heat_series(xs[i] - xs[j], 0.2) * h)
                .collect()
        })
        .collect();
    let ma: Vec<f64> = a.iter().map(|v| v * h).collect();
    let mb: Vec<f64> = b.iter().map(|v| v * h).collect();
    let oracle = common::dense_sinkhorn(&k, &ma, &mb);
    let got = sol.coupling_masses();
    for i in 0..n {
        for j in 0..n {
            assert!((got[[i, j]] - oracle[i][j]).abs() <= 1e-8, "({i}, {j})");
        }
    }
}

#[test]
fn drift_and_coupling_are_gauge_invariant() {
    let g = make_grid(1, 64).unwrap();
    let spec = PotentialSpec::benchmark();
    let path = path_for(&GridDensity::von_mises(g, 1.0, 0.0), &spec, 0.0, 0.25, 8);
    let sol = bridge_on(&path, 0.0, 0.25);
    let f = sol.log_dual_a().to_vec();
    let g5: Vec<f64> = sol.log_dual_b().iter().map(|v| v + 5.0).collect();
    let shifted = sol.with_log_duals(f.clone(), g5.clone()).unwrap();
    for t in [0.01, 0.1, 0.2] {
        let a = bridge_drift(&sol, t).unwrap();
        let b = bridge_drift(&shifted, t).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }
    let balanced = sol
        .with_log_duals(f.iter().map(|v| v - 5.0).collect(), g5)
        .unwrap();
    let (ca, cb) = (sol.coupling_masses(), balanced.coupling_masses());
    assert!((&ca - &cb).iter().all(|d| d.abs() <= 1e-14));
    let k0 = girsanov_interval_kl(&sol, &spec, &path, 8).unwrap();
    let k1 = girsanov_interval_kl(&balanced, &spec, &path, 8).unwrap();
    assert!((k0 - k1).abs() <= 1e-12 * k0.max(1e-300) + 1e-18);
    let mid = 0.125;
    let ia = entropic_interpolation(&sol, mid).unwrap();
    let ib = entropic_interpolation(&balanced, mid).unwrap();
    assert!(ia.max_abs_diff(&ib).unwrap() <= 1e-12);
}

#[test]
fn zero_potential_bridge_reproduces_heat_flow() {
    let g = make_grid(1, 128).unwrap();
    let spec = PotentialSpec::zero();
    let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
    let path = path_for(&rho0, &spec, 0.0, 0.2, 16);
    let sol = bridge_on(&path, 0.0, 0.2);
    for t in [0.025, 0.1, 0.175] {
        let drift = bridge_drift(&sol, t).unwrap();
        assert!(drift.values().iter().all(|v| v.abs() <= 1e-9));
        let mu = entropic_interpolation(&sol, t).unwrap();
        let heat = evolve(&rho0, &spec, 1.0, 0.0, t, 1).unwrap();
        assert!(mu.l1_distance(&heat).unwrap() <= 1e-7);
    }
    assert!(girsanov_interval_kl(&sol, &spec, &path, 16).unwrap() <= 1e-8);
}

#[test]
fn uniform_bridge_is_at_rest() {
    let g = make_grid(1, 64).unwrap();
    let u = GridDensity::uniform(g);
    let sol = solve_bridge(
        &BridgeProblem::new(u.clone(), u.clone(), 0.0, 0.3, 1.0).unwrap(),
        &SinkhornParams::default(),
    )
    .unwrap();
    let state = sol.state_at(0.15).unwrap();
    assert!(state.density.max_abs_diff(&u).unwrap() <= 1e-12);
    assert!(state.velocity.values().iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn wiener_kl_of_stationary_cosine_matches_quadrature() {
    let g = make_grid(1, 256).unwrap();
    let spec = PotentialSpec::cosine(1.0, 1);
    let rho0 = GridDensity::normalized(g, g.nodes().iter().map(|x| (2.0 * x.cos()).exp()).collect()).unwrap();
    let path = path_for(&rho0, &spec, 0.0, 0.5, 32);
    let got = kl_vs_wiener(&spec, &path, 0.0, 0.5, 32).unwrap();
    let fine = 1_000_000;
    let z = common::periodic_quadrature(fine, |x| (2.0 * x.cos()).exp());
    let oracle =
        0.5 * 0.5 * common::periodic_quadrature(fine, |x| x.sin().powi(2) * (2.0 * x.cos()).exp() / z);
    assert!((got - oracle).abs() <= 1e-8, "{got} vs {oracle}");
}

#[test]
fn girsanov_quadrature_self_converges() {
    let g = make_grid(1, 256).unwrap();
    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
    let mut times = vec![0.0];
    times.extend(midpoint_nodes(0.0, 0.25, 32));
    times.extend(midpoint_nodes(0.0, 0.25, 64));
    times.push(0.25);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let path = marginal_path(&rho0, &spec, 1.0, &times, StepPolicy::default()).unwrap();
    let sol = bridge_on(&path, 0.0, 0.25);
    let k32 = girsanov_interval_kl(&sol, &spec, &path, 32).unwrap();
    let k64 = girsanov_interval_kl(&sol, &spec, &path, 64).unwrap();
    assert!((k32 - k64).abs() <= 1e-4 * k32.max(1.0), "{k32} vs {k64}");
}

#[test]
fn girsanov_stays_within_wiener_plus_bound_on_short_intervals() {
    let config = ExperimentConfig::benchmark();
    let (c1, c2) = bound_constants(&config).unwrap();
    let spec = config.potential.clone();
    let rho0 = config.initial_density().unwrap();
    for (t_a, eps) in [(0.0, 0.05), (0.5, 0.05), (0.3, 0.025)] {
        let path = path_for(&rho0, &spec, t_a, t_a + eps, 32);
        let sol = bridge_on(&path, t_a, t_a + eps);
        let kl = girsanov_interval_kl(&sol, &spec, &path, 32).unwrap();
        let wiener = kl_vs_wiener(&spec, &path, t_a, t_a + eps, 32).unwrap();
        assert!(
            kl <= wiener + interval_bound(c1, c2, eps),
            "t_a = {t_a}, ε = {eps}"
        );
    }
}

#[test]
fn benamou_bridge_does_not_exceed_reference() {
    let g = make_grid(1, 128).unwrap();
    let spec = PotentialSpec::benchmark();
    let path = path_for(&GridDensity::von_mises(g, 1.0, 0.0), &spec, 0.2, 0.3, 32);
    let sol = bridge_on(&path, 0.2, 0.3);
    let bridge = benamou_bridge(&sol, 32).unwrap().total();
    let reference = benamou_reference(&spec, &path, 0.2, 0.3, 32).unwrap().total();
    assert!(bridge <= reference + 1e-6, "{bridge} vs {reference}");
}

#[test]
fn fisher_term_scales_with_eps_squared() {
    let g = make_grid(1, 128).unwrap();
    let spec = PotentialSpec::zero();
    let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
    let fisher = |eps: f64| {
        let path = path_for(&rho0, &spec, 0.0, eps, 32);
        benamou_bridge(&bridge_on(&path, 0.0, eps), 32).unwrap().fisher
    };
    let ratio = fisher(0.1) / fisher(0.05);
    assert!((ratio / 4.0 - 1.0).abs() <= 0.05, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn girsanov_kl_is_nonnegative(
        amplitude in -1.0f64..1.0,
        k in 1i32..4,
        t_a in 0.0f64..0.8,
        len in 0.2f64..0.5,
    ) {
        let g = make_grid(1, 32).unwrap();
        let spec = PotentialSpec::cosine(amplitude, k);
        let path = path_for(&GridDensity::von_mises(g, 0.5, 1.0), &spec, t_a, t_a + len, 8);
        let sol = bridge_on(&path, t_a, t_a + len);
        prop_assert!(girsanov_interval_kl(&sol, &spec, &path, 8).unwrap() >= 0.0);
    }
}
