mod common;

use std::f64::consts::PI;

use msb_lab::fokker_planck::{evolve, marginal_path, simulate_particles, transition_matrix, StepPolicy};
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};

#[test]
fn transition_rows_match_dense_generator() {
    let g = make_grid(1, 32).unwrap();
    let q = transition_matrix(
        g,
        &PotentialSpec::benchmark(),
        1.0,
        0.25,
        0.75,
        StepPolicy::default(),
    )
    .unwrap();
    let oracle = common::dense_transition(32, common::benchmark_grad, 1.0, 0.25, 0.75, 2000);
    let mut err: f64 = 0.0;
    for i in 0..32 {
        for j in 0..32 {
            err = err.max((q[[i, j]] - oracle[i][j]).abs());
        }
    }
    assert!(err <= 1e-6, "max entry error {err:e}");
}

#[test]
fn refinement_order_on_wrapped_gaussian() {
    let spec = PotentialSpec::benchmark();
    let run = |n: usize, steps: usize| {
        let g = make_grid(1, n).unwrap();
        let rho0 = GridDensity::wrapped_gaussian(g, PI, 0.05).unwrap();
        evolve(&rho0, &spec, 1.0, 0.0, 1.0, steps).unwrap()
    };
    let reference = run(256, 800);
    let error = |n: usize, steps: usize| {
        let out = run(n, steps);
        let stride = 256 / n;
        out.values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - reference.values()[i * stride]).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(64, 25), error(128, 50));
    let order = (coarse / fine).log2();
    assert!(order >= 1.8, "errors {coarse:e} -> {fine:e}, order {order}");
}

#[test]
fn brownian_particles_stay_uniform() {
    let g = make_grid(1, 64).unwrap();
    let rho0 = GridDensity::uniform(g);
    let ens = simulate_particles(&rho0, &PotentialSpec::zero(), 1.0, &[1.0], 100_000, 1e-2, 3).unwrap();
    let hist = ens[0].histogram(64);
    let tv = common::total_variation(&hist, &[1.0 / 64.0; 64]);
    assert!(tv <= 0.02, "total variation {tv}");
}

#[test]
fn benchmark_particles_follow_the_grid_density() {
    let g = make_grid(1, 128).unwrap();
    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
    let ens = simulate_particles(&rho0, &spec, 1.0, &[0.5], 20_000, 1e-3, 11).unwrap();
    let path = marginal_path(&rho0, &spec, 1.0, &[0.5], StepPolicy::default()).unwrap();
    let masses = path.density_at(0.5).unwrap().bin_masses(32, 16);
    let tv = common::total_variation(&ens[0].histogram(32), &masses);
    assert!(tv <= 0.05, "total variation {tv}");
}

#[test]
fn particle_runs_are_reproducible() {
    let g = make_grid(1, 32).unwrap();
    let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
    let spec = PotentialSpec::benchmark();
    let a = simulate_particles(&rho0, &spec, 1.0, &[0.1, 0.2], 500, 1e-2, 5).unwrap();
    let b = simulate_particles(&rho0, &spec, 1.0, &[0.1, 0.2], 500, 1e-2, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn heat_flow_of_von_mises_matches_kernel_convolution() {
    let n = 64;
    let g = make_grid(1, n).unwrap();
    let rho0 = GridDensity::von_mises(g, 2.0, 1.0);
    let out = evolve(&rho0, &PotentialSpec::zero(), 0.5, 0.0, 0.4, 1).unwrap();
    let xs = common::nodes(n);
    let h = 2.0 * PI / n as f64;
    for i in 0..n {
        let conv: f64 = (0..n)
            .map(|j| common::heat_series(xs[i] - xs[j], 0.2) * rho0.values()[j] * h)
            .sum();
        assert!((out.values()[i] - conv).abs() <= 1e-10);
    }
}
