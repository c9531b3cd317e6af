//! Runs the four experiments on the bundled configs and writes their reports.

use std::path::Path;

use rough_sparse::lab::{self, ExperimentConfig};

fn main() -> rough_sparse::Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let out = std::env::temp_dir().join("roughlab-examples");
    let runs: [(&str, lab::Runner); 3] = [
        ("lambda_sweep", lab::run_lambda_sweep),
        ("weak_norm", lab::run_weak_norm),
        ("eps_split", lab::run_eps_split),
    ];
    for (name, run) in runs {
        let cfg = ExperimentConfig::load(&configs.join(format!("{name}.json")))?;
        let result = run(&cfg, 1)?;
        result.write(&out.join(name))?;
        for c in &result.checks {
            println!("{name}: {} {} ({})", if c.passed { "pass" } else { "fail" }, c.name, c.detail);
        }
    }
    println!("reports in {}", out.display());
    Ok(())
}
