// Grid, quadrature, spectral gradient and KL between grid densities.

use msb_lab::torus::{kl_divergence, make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 64)?;
    let one = grid.sample(|_| 1.0);
    println!("measure of the circle: {:.12}", one.integrate());

    let f = grid.sample(|x| (3.0 * x).sin());
    let df = f.gradient();
    let err = grid
        .nodes()
        .iter()
        .zip(df.values())
        .map(|(x, d)| (d - 3.0 * (3.0 * x).cos()).abs())
        .fold(0.0, f64::max);
    println!("spectral d/dx sin 3x, max error {err:.2e}");

    let p = GridDensity::uniform(grid);
    let q = GridDensity::von_mises(grid, 1.0, 0.0);
    println!("KL(uniform || von Mises) = {:.10}", kl_divergence(&p, &q)?);
    println!("KL(von Mises || uniform) = {:.10}", kl_divergence(&q, &p)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
