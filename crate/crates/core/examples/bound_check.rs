// The explicit bound, first on honest chains and then with one bridge's duals
// deliberately damaged.

use msb_lab::lab::{run_bound_check, run_bound_check_with, ExperimentConfig, SweepKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::benchmark().with_sweep(SweepKind::BoundCheck, &[2.0, 4.0]);
    config.grid_points = 64;
    config.quadrature_nodes = 8;

    let report = run_bound_check(&config)?;
    println!("C1 = {:.4}, C2 = {:.4}", report.c1.unwrap(), report.c2.unwrap());
    for check in &report.checks {
        println!("{:?} {}: {}", check.status, check.name, check.detail);
    }

    let damaged = run_bound_check_with(&config, |m, sol| {
        if m != 2 {
            return Ok(sol);
        }
        let b = &sol.bridges()[0];
        let grid = b.problem().grid();
        let g = (0..grid.len())
            .map(|i| b.log_dual_b()[i] + 8.0 * grid.node(i).cos())
            .collect();
        sol.replace_bridge_duals(0, b.log_dual_a().to_vec(), g)
    })?;
    println!("after damaging m = 2, interval 0: passed = {}", damaged.passed());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
