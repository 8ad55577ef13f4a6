// Truncated Fock space: ladder operators, coherent states, displacement
// and partial traces.

use std::error::Error;

use qfp_readout::hilbert::{
    coherent_state, displacement, kron, ladder_ops, partial_trace, pauli, ComplexMatrix, FockSpace, C64,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let space = FockSpace::new(30);
    let (a, a_dag, n_op) = ladder_ops(space);
    // [a, a^dag] = 1 except in the last level, where truncation bites.
    let comm = a.commutator(&a_dag);
    println!("[a, a^dag] at n=0: {:.3}, at the cutoff: {:.3}", comm[(0, 0)].re, comm[(29, 29)].re);

    let alpha = 1.5;
    let psi = coherent_state(space, alpha)?;
    let mean_n = n_op.sandwich(&psi, &psi).re;
    println!("coherent state alpha={alpha}: <n> = {mean_n:.6} (alpha^2 = {})", alpha * alpha);

    // D(alpha)|0> reproduces the coherent state.
    let shifted = displacement(space, C64::new(alpha, 0.0)).apply(&space.basis(0));
    let err = shifted.iter().zip(&psi).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("|D(alpha)|0> - |alpha>|max = {err:.1e}");

    // Product of a qubit in |+> with the field; tracing the field returns the qubit.
    let plus = [C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)];
    let rho = kron(&ComplexMatrix::outer(&plus), &ComplexMatrix::outer(&psi));
    let qubit = partial_trace(&rho, &[2, 30], &[0])?;
    println!("reduced qubit <sx> = {:.6}", (&qubit * &pauli::x()).trace().re);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
