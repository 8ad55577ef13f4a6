// Jaynes-Cummings spectrum, its dispersive limit, and the effective
// qubit seen by the resonator after annealing.

use std::error::Error;

use qfp_readout::bases::QubitParams;
use qfp_readout::hilbert::{hermitian_eig, ComplexMatrix, FockSpace};
use qfp_readout::jcm::{
    dispersive_relative_error, effective_qubit, jc_block_energies, jc_hamiltonian, DispersiveParams, ResonatorParams,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let wr = 3.0;
    let r = ResonatorParams { omega_r: wr, space: FockSpace::new(10) };
    let (delta, omega0) = (0.4, 0.3);
    let q = QubitParams::new(wr + delta, 0.0);
    let h = jc_hamiltonian(&q, &r, omega0 / 2.0);
    for n in 0..3 {
        let (i, j) = (n, 10 + n + 1);
        let block = ComplexMatrix::from_vec(2, 2, vec![h[(i, i)], h[(i, j)], h[(j, i)], h[(j, j)]]);
        let numeric = hermitian_eig(&block)?.values;
        let (lo, hi) = jc_block_energies(n, wr, delta, omega0);
        println!("n={n}: numeric ({:.6}, {:.6}) closed form ({lo:.6}, {hi:.6})", numeric[0], numeric[1]);
    }

    // Dispersive error relative to chi shrinks as (g/delta)^2.
    let r = ResonatorParams { omega_r: 10.0, space: FockSpace::new(8) };
    for lambda in [0.08, 0.04, 0.02] {
        let g = 0.002 / lambda;
        let q = QubitParams::new(10.0 + g / lambda, 0.0);
        println!("g/delta={lambda}: relative error {:.3e}", dispersive_relative_error(&q, &r, g, 3)?);
    }

    let eq = effective_qubit(QubitParams::new(1.0, 1.0), 1.25, 10.0);
    let wr = eq.omega_eff() / 2.0;
    let d = DispersiveParams::for_qubit(&eq, wr, (eq.omega_eff() - wr) / 8.0)?;
    println!(
        "annealed qubit: omega={:.4} theta={:.5} chi={:.3e} dispersive={}",
        eq.omega_eff(),
        eq.theta_eff(),
        d.chi,
        d.is_dispersive()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
