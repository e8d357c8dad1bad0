//! Stationary points of the variational energy for one cubic block, the
//! energy curves E_v(r) and the per-level variant.

use slpd::exact::{build_hamiltonian, eigensolve};
use slpd::three_boson::{block_constants, block_for_label, BlockLabel, Sign, ThreeBosonParams};
use slpd::variational::{energy_functional, per_level_spectrum, variational_spectrum};

fn main() -> slpd::Result<()> {
    let params = ThreeBosonParams::resonant(1.0);
    let label = BlockLabel::new(1, Sign::Plus, 6);
    let block = block_for_label(&label, &params)?;
    let hp = block_constants(&label, &params);

    let solution = variational_spectrum(&block, &hp)?;
    println!("block {label}, d = {}", block.dim());
    for (i, root) in solution.roots.iter().enumerate() {
        let mark = if i == solution.selected { " (selected)" } else { "" };
        println!("  alpha = {:+.8}  r = {:+.8}  residual {:.1e}{mark}", root.alpha, root.r, root.residual);
    }

    println!("E_v(r) on a coarse grid:");
    for i in 1..12 {
        let r = -1.5 + 3.0 * i as f64 / 12.0;
        let row: Vec<String> = (0..block.dim())
            .map(|v| format!("{:>9.4}", energy_functional(&block, &hp, v, r).unwrap()))
            .collect();
        println!("  r = {r:+.3} {}", row.join(""));
    }

    let exact = eigensolve(&build_hamiltonian(&block, &hp)?)?.energies;
    let per_level = per_level_spectrum(&block, &hp)?;
    println!("{:>3} {:>12} {:>12} {:>12}", "v", "exact", "common r", "per level");
    for v in 0..block.dim() {
        println!("{v:>3} {:>12.6} {:>12.6} {:>12.6}", exact[v], solution.energies[v], per_level[v].energy);
    }
    Ok(())
}
