// Flux and energy bases of a flux qubit, and the dressed angles of the
// measured qubit when a second qubit is coupled to it.

use std::error::Error;

use qfp_readout::bases::{flux_energy_unitary, fq2_dressed_angles, mixing_angle, QubitParams};

pub fn run() -> Result<(), Box<dyn Error>> {
    for ratio in [0.1, 0.5, 1.0, 10.0] {
        let q = QubitParams::new(1.0, ratio);
        let theta = mixing_angle(q)?;
        let u = flux_energy_unitary(theta);
        let h = u.conjugate(&q.hamiltonian());
        println!(
            "delta/eps={ratio:>4}: theta={theta:.4} omega={:.4} energy-basis H = diag({:.4}, {:.4}), off-diagonal {:.1e}",
            q.omega(),
            h[(0, 0)].re,
            h[(1, 1)].re,
            h.max_offdiag()
        );
    }
    // Dressing of the measured qubit by a neighbour through zz and zx couplings.
    let (minus, plus) = fq2_dressed_angles(5.0, 0.4, 0.02)?;
    println!("dressed block angles: {minus:.3e} (FQ1 in 0), {plus:.3e} (FQ1 in 1)");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
