// Model catalogue: derived couplings, regime warnings and the photon
// number at which the dressed basis becomes the better approximation.

use std::error::Error;

use qfp_readout::bases::BasisTag;
use qfp_readout::models::{build_blocks, derive, rwa_ratio, InteractionMode, ModelKind, ModelParams, ModelSpec};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = ModelParams { n_max: 21, ..ModelParams::default() };
    for kind in ModelKind::ALL {
        if kind == ModelKind::ExchangeReference {
            continue;
        }
        let spec = ModelSpec::new(kind, BasisTag::Flux, InteractionMode::Full, params);
        let d = derive(&spec)?;
        let blocks = build_blocks(&spec)?;
        println!(
            "{kind}: chi={:.3e} g={:.4} J={:.4} blocks {}x{} of size {}, warnings {:?}",
            d.chi,
            d.g,
            d.j,
            blocks.blocks.len(),
            blocks.qubit_dim(),
            blocks.qubit_dim(),
            d.warnings.iter().map(ToString::to_string).collect::<Vec<_>>()
        );
    }
    let xx = ModelSpec::new(
        ModelKind::TwoQubitWithAnneal,
        BasisTag::EnergyQ1Q2,
        InteractionMode::XX,
        ModelParams { delta2_ratio: 8.0, eta1: 1.0, eta2: 1.0, ..params },
    );
    for r in rwa_ratio(&xx, 1.0)? {
        println!(
            "{:?}: bare ratio {:.3e}, dressed ratio {:.3e}, crossover alpha {:?}",
            r.branch, r.bare_ratio, r.dressed_ratio, r.crossover_value
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
