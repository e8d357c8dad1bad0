//! Exact, variational and su(2)-reference spectra of the three-boson model
//! on the blocks of a small Fock cube.

use num_complex::Complex64;
use slpd::exact::{build_hamiltonian, eigensolve, sl2_reference_spectrum};
use slpd::three_boson::{block_constants, block_for_label, enumerate_blocks, ThreeBosonParams};
use slpd::variational::variational_spectrum;

fn main() -> slpd::Result<()> {
    let params = ThreeBosonParams {
        omega1: 1.0,
        omega2: 1.2,
        omega3: 2.1,
        g: Complex64::from_polar(0.8, 0.4),
    };
    println!("{:<8} {:>3} {:>14} {:>14} {:>14}", "block", "v", "exact", "variational", "sl2 ref");
    for label in enumerate_blocks(2) {
        let block = block_for_label(&label, &params)?;
        let hp = block_constants(&label, &params);
        let exact = eigensolve(&build_hamiltonian(&block, &hp)?)?;
        let reference = sl2_reference_spectrum(&block, &hp);
        let variational = variational_spectrum(&block, &hp)?;
        for v in 0..block.dim() {
            println!(
                "{:<8} {:>3} {:>14.8} {:>14.8} {:>14.8}",
                label.to_string(),
                v,
                exact.energies[v],
                variational.energies[v],
                reference.energies[v]
            );
        }
    }
    Ok(())
}
