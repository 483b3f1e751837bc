// The benchmark potential, its auxiliary function 𝒰 and the two constants
// entering the KL bound.

use msb_lab::fokker_planck::{marginal_path, StepPolicy};
use msb_lab::potential::{constant_c1, constant_c2, sample_times, PotentialSpec};
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PotentialSpec::benchmark();
    let grid = make_grid(1, 128)?;
    println!("Ψ(0.5, 1.0) = {:.6}", spec.psi(0.5, 1.0));
    println!("∇Ψ(0.5, 1.0) = {:.6}", spec.grad(0.5, 1.0));
    println!("𝒰(0.5, 1.0) = {:.6}", spec.u_eval(0.5, 1.0, 1.0)?);

    let c1 = constant_c1(&spec, &grid, 1.0, 64)?;
    let rho0 = GridDensity::von_mises(grid, 1.0, 0.0);
    let path = marginal_path(&rho0, &spec, 1.0, &sample_times(1.0, 64), StepPolicy::default())?;
    let c2 = constant_c2(&spec, &path)?;
    println!("C1 = {c1:.6}, C2 = {c2:.6}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
