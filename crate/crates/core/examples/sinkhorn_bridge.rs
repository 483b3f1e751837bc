// One Schrödinger bridge between two von Mises densities.

use msb_lab::bridge::{bridge_drift, solve_bridge, BridgeProblem, SinkhornParams};
use msb_lab::torus::{make_grid, GridDensity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(1, 128)?;
    let a = GridDensity::von_mises(grid, 2.0, 1.0);
    let b = GridDensity::von_mises(grid, 1.0, 4.0);
    let problem = BridgeProblem::new(a, b, 0.0, 0.5, 1.0)?;
    let sol = solve_bridge(&problem, &SinkhornParams::default())?;
    println!(
        "converged in {} sweeps, residual {:.2e}",
        sol.iterations(),
        sol.marginal_residual()
    );
    println!(
        "residual history: {:?}",
        &sol.residual_history()[..sol.residual_history().len().min(4)]
    );

    let (rows, cols) = sol.coupling_marginals();
    println!("coupling mass {:.12}", rows.iter().sum::<f64>());
    println!("column mass {:.12}", cols.iter().sum::<f64>());

    let drift = bridge_drift(&sol, 0.25)?;
    let strongest = drift.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
    println!("max |drift| at t = 0.25: {strongest:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
