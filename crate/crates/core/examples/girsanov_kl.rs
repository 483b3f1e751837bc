// Path-space KL of the SDE against its interval bridge and against
// reversible Brownian motion.

use msb_lab::bridge::{
    girsanov_interval_kl, kl_vs_wiener, midpoint_nodes, solve_bridge, BridgeProblem, SinkhornParams,
};
use msb_lab::fokker_planck::{marginal_path, StepPolicy};
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 128)?;
    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(grid, 1.0, 0.0);
    let n_t = 32;
    for eps in [0.4, 0.2, 0.1] {
        let mut times = midpoint_nodes(0.0, eps, n_t);
        times.push(eps);
        let path = marginal_path(&rho0, &spec, 1.0, &times, StepPolicy::default())?;
        let problem = BridgeProblem::new(rho0.clone(), path.density_at(eps)?.clone(), 0.0, eps, 1.0)?;
        let sol = solve_bridge(&problem, &SinkhornParams::default())?;
        let kl = girsanov_interval_kl(&sol, &spec, &path, n_t)?;
        let wiener = kl_vs_wiener(&spec, &path, 0.0, eps, n_t)?;
        println!("ε = {eps}: KL to bridge {kl:.4e}, KL to Brownian motion {wiener:.4e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
