// Spectral Fokker–Planck evolution: a heat benchmark with a closed form and
// the marginal path of the benchmark SDE.

use msb_lab::fokker_planck::{evolve, marginal_path, StepPolicy};
use msb_lab::potential::PotentialSpec;
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 256)?;

    // a wrapped Gaussian of variance σ² becomes one of variance σ² + τt
    let start = GridDensity::wrapped_gaussian(grid, 3.0, 0.05)?;
    let end = evolve(&start, &PotentialSpec::zero(), 1.0, 0.0, 0.1, 100)?;
    let exact = GridDensity::wrapped_gaussian(grid, 3.0, 0.15)?;
    println!("heat benchmark max error {:.2e}", end.max_abs_diff(&exact)?);

    let spec = PotentialSpec::benchmark();
    let rho0 = GridDensity::von_mises(grid, 1.0, 0.0);
    let path = marginal_path(&rho0, &spec, 1.0, &[0.0, 0.25, 0.5, 1.0], StepPolicy::default())?;
    for (t, rho) in path.times().iter().zip(path.densities()) {
        let peak = rho.values().iter().cloned().fold(0.0, f64::max);
        println!("t = {t:.2}: mass {:.12}, peak {peak:.5}", rho.mass());
    }
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    println!("CSV export: {} lines", String::from_utf8(csv)?.lines().count());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
