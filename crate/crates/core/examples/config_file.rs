// Load an experiment from TOML and run the `bridge` command on it.

use msb_lab::lab::{run_command, Command, ExperimentConfig};

const CONFIG: &str = r#"
tau = 1.0
horizon = 1.0
grid_points = 32
quadrature_nodes = 8

[initial]
kind = "wrapped_gaussian"
center = 3.14159
variance = 0.3

[[potential.terms]]
k = 1
phase = "sin"
time_coeff = { kind = "polynomial", coefficients = [0.2, 0.4] }

[bridge]
t_a = 0.25
t_b = 0.75
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml_str(CONFIG)?;
    let dir = std::env::temp_dir().join("msb-lab-config-file");
    let outcome = run_command(Command::Bridge, &config, &dir)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    print!("{}", std::fs::read_to_string(dir.join("bridge.log"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
