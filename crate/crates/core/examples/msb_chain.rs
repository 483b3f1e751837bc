// The multi-marginal bridge as a chain, its total KL, the explicit bound and
// the two-time marginal diagnostic.

use msb_lab::fokker_planck::StepPolicy;
use msb_lab::lab::{bound_constants, ExperimentConfig};
use msb_lab::msb::{pairwise_kl_diagnostic, solve_msb, theoretical_bound, MsbParams, TimeGrid};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::benchmark();
    config.grid_points = 32;
    let rho0 = config.initial_density()?;
    let (c1, c2) = bound_constants(&config)?;
    for m in [1, 2, 4] {
        let grid = TimeGrid::uniform(1.0, m)?;
        let sol = solve_msb(&config.potential, &rho0, 1.0, &grid, &MsbParams::default())?;
        let diag = pairwise_kl_diagnostic(&sol, StepPolicy::default())?;
        println!(
            "m = {m}: total KL {:.4e}, bound {:.4e}",
            sol.total_kl(),
            theoretical_bound(c1, c2, 1.0, grid.delta())
        );
        for (j, (kl, d)) in sol.per_interval_kl().iter().zip(&diag).enumerate() {
            println!("  interval {j}: path KL {kl:.4e} >= two-time KL {d:.4e}");
        }
    }
    println!(
        "{}",
        serde_json::to_string(
            &solve_msb(
                &config.potential,
                &rho0,
                1.0,
                &TimeGrid::uniform(1.0, 2)?,
                &MsbParams::default(),
            )?
            .summary(c1, c2)
        )?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
