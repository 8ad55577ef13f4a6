// Figure preset sweep with overrides, written as CSV.

use std::error::Error;

use qfp_readout::sweep::{run_sweep, ConfigSources, SweepResult};

pub fn run() -> Result<(), Box<dyn Error>> {
    let cfg = ConfigSources {
        recipe: Some("2qo_zz_j".into()),
        overrides: vec!["sweep.steps=4".into(), "model.n_max=16".into()],
        ..Default::default()
    }
    .resolve()?;
    let result = run_sweep(&cfg);
    let csv = result.to_csv();
    for line in csv.lines().filter(|l| !l.starts_with('#')) {
        println!("{line}");
    }
    assert_eq!(SweepResult::from_csv(&csv)?, result);
    println!("{} header lines, round trip exact", result.header.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
