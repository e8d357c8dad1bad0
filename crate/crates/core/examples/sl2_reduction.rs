//! For psi(x) = (j + x)(j + 1 - x) the variational spectrum is the exact
//! equidistant ladder a(l0 + j) + (v - j) sqrt(a^2 + 4|g|^2).

use std::collections::BTreeMap;

use num_complex::Complex64;
use slpd::algebra::{build_block, StructureFunction};
use slpd::exact::{build_hamiltonian, eigensolve, HamiltonianParams};
use slpd::variational::variational_spectrum;

fn main() -> slpd::Result<()> {
    let (a, g) = (0.7, Complex64::from_polar(1.3, -0.9));
    let params = HamiltonianParams::new(a, g, 0.0);
    println!("omega = {}", params.rabi_frequency());
    for two_j in 1..=8usize {
        let j = two_j as f64 / 2.0;
        let block = build_block(&StructureFunction::su2(j), -j, BTreeMap::new(), 0.0, two_j + 2)?;
        let exact = eigensolve(&build_hamiltonian(&block, &params)?)?.energies;
        let var = variational_spectrum(&block, &params)?;
        let worst = exact.iter().zip(&var.energies).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("2j = {two_j}: alpha = {:+.6}, max |E_exact - E_var| = {worst:.2e}", var.alpha_selected());
    }
    Ok(())
}
