// Homodyne-type measurement channel: POVM checks and readout fidelity of
// the single-qubit model in both bases.

use std::error::Error;
use std::f64::consts::FRAC_PI_2;

use qfp_readout::bases::BasisTag;
use qfp_readout::hilbert::{ComplexMatrix, FockSpace};
use qfp_readout::measurement::{model_config, povm_element, run_protocol_with, FidelityMode, InitialState, Outcome};
use qfp_readout::models::{InteractionMode, ModelKind, ModelParams, ModelSpec};

pub fn run() -> Result<(), Box<dyn Error>> {
    let space = FockSpace::new(27);
    let sum = &povm_element(space, Outcome::Plus) + &povm_element(space, Outcome::Minus);
    println!("|E+ + E- - I|max = {:.1e}", sum.max_abs_diff(&ComplexMatrix::identity(27)));

    let params = ModelParams::default();
    for basis in [BasisTag::Flux, BasisTag::EnergyQ2] {
        let spec = ModelSpec::new(ModelKind::SingleQubit, basis, InteractionMode::Full, params);
        for alpha in [0.5, 1.0, 2.0] {
            let cfg = model_config(&spec, alpha, FRAC_PI_2)?;
            let out = run_protocol_with(&spec, &InitialState::Zero.vector(), None, &cfg)?;
            println!(
                "{basis:?} alpha={alpha}: fidelity {:.6}, p+ {:.4}, p- {:.4}, selective(-) {:.4}",
                out.value(FidelityMode::NonSelective),
                out.channel.p_plus,
                out.channel.p_minus,
                out.value(FidelityMode::Selective(Outcome::Minus))
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
