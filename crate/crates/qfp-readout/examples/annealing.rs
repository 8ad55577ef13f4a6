// Parametron annealing: storage fidelity along the ramp and the overlap
// between bare and dressed states once the coupling is strong.

use std::error::Error;
use std::f64::consts::FRAC_PI_4;

use qfp_readout::anneal::{bare_dressed_overlap, storage_fidelity, QfpParams};
use qfp_readout::bases::{BasisTag, QubitParams};

pub fn run() -> Result<(), Box<dyn Error>> {
    let p = QfpParams::default();
    let q = QubitParams::new(1.0, 1.0);
    println!("t/t_qfp   flux      energy");
    for k in 0..=5 {
        let t = p.t_qfp() * k as f64 / 5.0;
        println!(
            "{:>6.2}  {:.6}  {:.6}",
            k as f64 / 5.0,
            storage_fidelity(&p, &q, t, BasisTag::Flux)?,
            storage_fidelity(&p, &q, t, BasisTag::EnergyQ2)?
        );
    }
    for g in [0.0, 1.0, 2.0, 3.0] {
        println!("g/w_r={g}: bare/dressed overlap at N=49 {:.4}", bare_dressed_overlap(49, g, FRAC_PI_4, FRAC_PI_4));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
