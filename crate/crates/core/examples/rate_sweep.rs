// KL against the number of intervals, with a log–log fit and report files.

use msb_lab::lab::{emit_report, run_m_sweep, ExperimentConfig, SweepKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::benchmark().with_sweep(SweepKind::MSweep, &[1.0, 2.0, 4.0, 8.0]);
    config.grid_points = 64;
    config.quadrature_nodes = 16;
    let report = run_m_sweep(&config)?;
    for (m, kl) in report.abscissae.iter().zip(&report.kl_values) {
        println!("m = {m:>2}: KL {kl:.4e}");
    }
    println!("slope {:.3} (r² {:.4})", report.slope(), report.r_squared());
    for check in &report.checks {
        println!("{:?} {}: {}", check.status, check.name, check.detail);
    }
    let dir = std::env::temp_dir().join("msb-lab-rate-sweep");
    let paths = emit_report(&report, &dir, "rate_sweep")?;
    println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
