//! Mean-field orbit (p, q) on one three-boson block, with energy drift and a
//! forward-backward round trip.

use slpd::dynamics::{meanfield_trajectory, MeanFieldState};
use slpd::three_boson::{block_constants, block_for_label, BlockLabel, Sign, ThreeBosonParams};

fn main() -> slpd::Result<()> {
    let params = ThreeBosonParams::resonant(0.9);
    let label = BlockLabel::new(0, Sign::Plus, 5);
    let block = block_for_label(&label, &params)?;
    let hp = block_constants(&label, &params);
    let start = MeanFieldState { p: 0.8, q: 0.4 };

    let forward = meanfield_trajectory(&block, &hp, start, 0.002, 10_000)?;
    for (t, s) in forward.times.iter().zip(&forward.states).step_by(1000) {
        println!("t = {t:>6.2}  p = {:+.6}  q = {:+.6}", s.p, s.q);
    }
    println!("energy {:.10}, drift {:.2e}", forward.energies[0], forward.energy_drift());

    let end = *forward.states.last().unwrap();
    let back = meanfield_trajectory(&block, &hp, end, -0.002, 10_000)?;
    let s = back.states.last().unwrap();
    println!("round trip error: dp = {:.2e}, dq = {:.2e}", s.p - start.p, s.q - start.q);
    Ok(())
}
