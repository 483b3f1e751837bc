// KL of a single bridge against its length.

use msb_lab::lab::{run_eps_sweep, ExperimentConfig, SweepKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::benchmark().with_sweep(SweepKind::EpsSweep, &[0.4, 0.2, 0.1]);
    config.grid_points = 128;
    let report = run_eps_sweep(&config)?;
    for ((eps, kl), bound) in report.abscissae.iter().zip(&report.kl_values).zip(&report.bounds) {
        println!("ε = {eps}: KL {kl:.4e}, bound {:.4e}", bound.unwrap_or(f64::NAN));
    }
    println!("slope {:.3} (r² {:.4})", report.slope(), report.r_squared());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
