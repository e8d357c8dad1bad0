//! Builds a lowest-weight block from a structure function and checks the
//! polynomial commutation relations and the Holstein-Primakoff images.

use std::collections::BTreeMap;

use slpd::algebra::{block_operators, build_block, holstein_primakoff, StructureFunction};

fn main() -> slpd::Result<()> {
    // cubic psi(x) = -(x + 2)^2 (x - 7), lowest weight at x = -2
    let psi = StructureFunction::new(-1.0, vec![-2.0, -2.0, 7.0]);
    let block = build_block(&psi, -2.0, BTreeMap::new(), 0.0, 64)?;
    println!("l0 = {}, d = {}, j = {}", block.l0(), block.dim(), block.j());
    println!("psi(l0 + v), v = 1..d-1: {:?}", &block.psi_values()[1..]);

    let ops = block_operators(&block, block.psi());
    println!("[V-, V+] residual  {:.2e}", ops.commutator_residual(block.psi()));
    println!("V+ V- residual     {:.2e}", ops.product_residual(block.psi()));
    println!("su(2) residual (Y) {:.2e}", holstein_primakoff(&block, block.psi()).su2_residual());

    let faulty = psi.with_perturbed_root(2, 1e-3);
    let ops = block_operators(&block, &faulty);
    println!("perturbed root: [V-, V+] residual {:.2e}", ops.commutator_residual(block.psi()));
    Ok(())
}
