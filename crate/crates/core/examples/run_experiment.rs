//! Builds an experiment config in code, runs it and lists the output files.

use centroid_imaging::experiment::{run_config, ExperimentConfig, RunOptions};

const CONFIG: &str = r#"
[grid]
points = 64
dx = 0.25
sin_theta = 0.25

[state]
kind = "noon"
n = 3

[experiment]
kind = "sample"
trials = 50000
seed = 12
"#;

fn main() -> centroid_imaging::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("ocm-example");
    let report = run_config(&cfg, &RunOptions { out_dir: Some(out), ..Default::default() })?;
    println!("wrote to {}", report.out_dir.display());
    for (name, digest) in &report.files {
        println!("  {name}  sha256 {}", &digest[..16]);
    }
    Ok(())
}
