// Euler–Maruyama particles against the Fokker–Planck density.

use msb_lab::fokker_planck::{marginal_path, simulate_particles, StepPolicy};
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 128)?;
    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(grid, 1.0, 0.0);
    let t = 0.5;
    let ensembles = simulate_particles(&rho0, &spec, 1.0, &[t], 20_000, 2e-3, 7)?;
    let path = marginal_path(&rho0, &spec, 1.0, &[t], StepPolicy::default())?;

    let bins = 32;
    let hist = ensembles[0].histogram(bins);
    let masses = path.density_at(t)?.bin_masses(bins, 16);
    let tv = 0.5 * hist.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum::<f64>();
    println!(
        "total variation at t = {t}: {tv:.4} with {} particles",
        ensembles[0].positions.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
