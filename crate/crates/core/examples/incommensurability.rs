//! Ratios of consecutive level spacings of small resonant blocks and their
//! distance to rationals with small denominators.

use slpd::dynamics::incommensurability_measure;
use slpd::exact::{build_hamiltonian, spectral_polynomial_roots};
use slpd::three_boson::{block_constants, block_for_label, BlockLabel, Sign, ThreeBosonParams};

fn main() -> slpd::Result<()> {
    let params = ThreeBosonParams::resonant(1.0);
    for m in 2..=8 {
        let label = BlockLabel::new(0, Sign::Plus, m);
        let block = block_for_label(&label, &params)?;
        let energies = spectral_polynomial_roots(&build_hamiltonian(&block, &block_constants(&label, &params))?);
        let r = incommensurability_measure(&energies, 8)?;
        println!(
            "{label}: closest ratio {:.6} ~ {}/{} at distance {:.3e} (pair {})",
            r.ratio, r.p, r.q, r.min_distance, r.pair
        );
    }
    Ok(())
}
