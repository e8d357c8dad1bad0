//! <N3(t)> for a coherent pump mode on resonance, with the collapse and
//! revival times found by the sliding-RMS detector.

use num_complex::Complex64;
use slpd::dynamics::{detect_collapse_revival, rabi_signal, uniform_grid, DetectorSettings};
use slpd::three_boson::{CoherentInput, ThreeBosonParams};

fn main() -> slpd::Result<()> {
    let input = CoherentInput {
        alpha1: Complex64::new(0.0, 0.0),
        alpha2: Complex64::new(0.0, 0.0),
        alpha3: Complex64::new(5.0, 0.0),
        ncut: 120,
    };
    let times = uniform_grid(100.0, 2001);
    let signal = rabi_signal(&input, &ThreeBosonParams::resonant(1.0), &times, 1e-10)?;
    println!("{} blocks, discarded probability {:.1e}", signal.blocks_used, signal.discarded_probability);

    let report = detect_collapse_revival(&signal.signal, &DetectorSettings::default())?;
    println!("carrier period {:?}", report.carrier_period);
    println!("collapse at {:?}, revivals at {:?}", report.collapse_time, report.revival_times);
    for (t, x) in signal.signal.times.iter().zip(&signal.signal.values).step_by(100) {
        let bar = "#".repeat((2.0 * x).round().max(0.0) as usize);
        println!("{t:>6.1} {x:>8.4} {bar}");
    }
    Ok(())
}
