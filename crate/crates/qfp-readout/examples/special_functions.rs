// Special functions behind the overlap and storage formulas.

use qfp_readout::special::{erf, laguerre, normal_cdf};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for x in [0.0, 0.5, 1.0, 2.0] {
        println!("erf({x}) = {:.12}  Phi({x}) = {:.12}", erf(x), normal_cdf(x));
    }
    for n in [0, 1, 5, 49] {
        println!("L_{n}(2.0) = {:.10}", laguerre(n, 2.0));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
