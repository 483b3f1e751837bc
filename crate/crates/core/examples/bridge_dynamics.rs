// Entropic interpolation, current velocity, the continuity equation and the
// kinetic-plus-Fisher objective of a bridge against the SDE it was fitted to.

use msb_lab::bridge::{
    benamou_bridge, benamou_reference, entropic_interpolation, midpoint_nodes, solve_bridge, BridgeProblem,
    SinkhornParams,
};
use msb_lab::fokker_planck::{marginal_path, StepPolicy};
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 128)?;
    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(grid, 1.0, 0.0);
    let (t_a, t_b, n_t) = (0.0, 0.2, 16);
    let mut times = midpoint_nodes(t_a, t_b, n_t);
    times.push(t_b);
    let path = marginal_path(&rho0, &spec, 1.0, &times, StepPolicy::default())?;
    let problem = BridgeProblem::new(rho0, path.density_at(t_b)?.clone(), t_a, t_b, 1.0)?;
    let sol = solve_bridge(&problem, &SinkhornParams::default())?;

    let t = times[n_t / 2];
    let dt = 1e-4;
    let state = sol.state_at(t)?;
    let flux = state.density.as_field().mul(&state.velocity)?.gradient();
    let before = entropic_interpolation(&sol, t - dt)?;
    let after = entropic_interpolation(&sol, t + dt)?;
    let residual = (0..grid.len())
        .map(|i| ((after.values()[i] - before.values()[i]) / (2.0 * dt) + flux.values()[i]).abs())
        .fold(0.0, f64::max);
    println!("continuity residual {residual:.2e}");
    println!(
        "bridge vs SDE marginal at t = {t:.4}: L1 {:.3e}",
        state.density.l1_distance(path.density_at(t)?)?
    );

    let bridge = benamou_bridge(&sol, n_t)?;
    let reference = benamou_reference(&spec, &path, t_a, t_b, n_t)?;
    println!(
        "objective: bridge {:.8}, SDE pair {:.8}",
        bridge.total(),
        reference.total()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
