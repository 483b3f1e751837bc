// Heat kernel matrices: image sum vs Fourier series, row mass, and
// Chapman–Kolmogorov composition.

use msb_lab::torus::{fourier_heat_series, heat_kernel, make_grid, wrapped_gaussian_sum};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 128)?;
    let h = grid.spacing();

    let worst = (0..grid.len())
        .map(|i| (wrapped_gaussian_sum(grid.node(i), 0.1) - fourier_heat_series(grid.node(i), 0.1)).abs())
        .fold(0.0, f64::max);
    println!("representations differ by at most {worst:.2e}");

    let half = heat_kernel(&grid, 0.05, 1.0)?;
    let full = heat_kernel(&grid, 0.1, 1.0)?;
    let composed = half.entries().dot(half.entries()) * h;
    let ck = (&composed - full.entries())
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    println!("Chapman–Kolmogorov error {ck:.2e}");
    println!("row mass {:.12}", full.row_mass(0));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
