//! Exact time evolution inside blocks and the three-boson Rabi signal.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::exact::{build_hamiltonian, eigensolve, Spectrum, TridiagonalHamiltonian};
use crate::three_boson::{
    block_constants, block_for_label, enumerate_blocks, project_coherent, BlockLabel, CoherentInput,
    ThreeBosonParams,
};

/// A real observable sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `samples` equally spaced times on `[0, tmax]`.
pub fn uniform_grid(tmax: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| tmax * i as f64 / (n - 1) as f64).collect(),
    }
}

fn gauge(phase: f64, v: usize) -> Complex64 {
    Complex64::from_polar(1.0, v as f64 * phase)
}

/// Initial amplitudes expanded in the eigenbasis of a block.
#[derive(Debug, Clone)]
pub struct BlockEvolution {
    spectrum: Spectrum,
    /// `b_f = <E_f|c0>`.
    coefficients: Vec<Complex64>,
}

impl BlockEvolution {
    pub fn new(spectrum: Spectrum, c0: &[Complex64]) -> Self {
        let d = spectrum.dim();
        assert_eq!(c0.len(), d, "amplitudes do not match the block dimension");
        let coefficients = (0..d)
            .map(|f| {
                (0..d)
                    .map(|v| spectrum.amplitudes[(v, f)] * gauge(spectrum.gauge_phase, v).conj() * c0[v])
                    .sum()
            })
            .collect();
        Self { spectrum, coefficients }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// `c(t) = Q diag(e^{-i E t}) Q^dagger c0`.
    pub fn amplitudes(&self, t: f64) -> Vec<Complex64> {
        let d = self.dim();
        let rotated: Vec<Complex64> = (0..d)
            .map(|f| Complex64::from_polar(1.0, -self.spectrum.energies[f] * t) * self.coefficients[f])
            .collect();
        (0..d)
            .map(|v| {
                let z: Complex64 = (0..d).map(|f| self.spectrum.amplitudes[(v, f)] * rotated[f]).sum();
                gauge(self.spectrum.gauge_phase, v) * z
            })
            .collect()
    }

    /// `sum_v w_v |c_v(t)|^2`; the gauge phases drop out.
    pub fn population(&self, weights: &[f64], t: f64) -> f64 {
        let d = self.dim();
        let rotated: Vec<Complex64> = (0..d)
            .map(|f| Complex64::from_polar(1.0, -self.spectrum.energies[f] * t) * self.coefficients[f])
            .collect();
        (0..d)
            .map(|v| {
                let z: Complex64 = (0..d).map(|f| self.spectrum.amplitudes[(v, f)] * rotated[f]).sum();
                weights[v] * z.norm_sqr()
            })
            .sum()
    }

    pub fn signal(&self, weights: &[f64], times: &[f64]) -> Signal {
        Signal {
            times: times.to_vec(),
            values: times.iter().map(|&t| self.population(weights, t)).collect(),
        }
    }
}

/// One-shot evolution of `c0` under a block spectrum.
pub fn evolve_block(spectrum: &Spectrum, c0: &[Complex64], t: f64) -> Vec<Complex64> {
    BlockEvolution::new(spectrum.clone(), c0).amplitudes(t)
}

/// `<c|H|c>` for amplitudes in the original gauge.
pub fn energy_expectation(tri: &TridiagonalHamiltonian, c: &[Complex64]) -> f64 {
    let reduced = DVector::from_iterator(
        c.len(),
        c.iter().enumerate().map(|(v, z)| gauge(tri.gauge_phase, v).conj() * z),
    );
    let h = tri.to_dense().map(|x| Complex64::new(x, 0.0));
    (reduced.adjoint() * h * &reduced)[(0, 0)].re
}

pub fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Mode-3 occupation `m - v` of each basis vector.
pub fn n3_weights(label: &BlockLabel) -> Vec<f64> {
    (0..label.dim()).map(|v| (label.m - v) as f64).collect()
}

/// `<N3> = sum_v |c_v|^2 (m - v)` on one block.
pub fn observable_n3(label: &BlockLabel, amplitudes: &[Complex64]) -> f64 {
    amplitudes
        .iter()
        .zip(n3_weights(label))
        .map(|(z, w)| z.norm_sqr() * w)
        .sum()
}

/// `<N3(t)>` of a product coherent state together with truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiSignal {
    pub signal: Signal,
    /// Probability lost to the Fock cutoff.
    pub discarded_probability: f64,
    /// Set when the discarded probability exceeds the requested bound.
    pub tail_warning: bool,
    /// Blocks that carried weight.
    pub blocks_used: usize,
}

/// Blocks whose total weight is below this are skipped.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-20;

const CHUNK: usize = 64;

/// Sums the block-wise evolved `<N3(t)>` over every block of the cutoff.
/// Blocks are evaluated in parallel and reduced in label order.
pub fn rabi_signal(
    input: &CoherentInput,
    params: &ThreeBosonParams,
    times: &[f64],
    tail_bound: f64,
) -> Result<RabiSignal> {
    let mut seeded: Vec<(BlockLabel, Vec<Complex64>)> = enumerate_blocks(input.ncut)
        .into_iter()
        .map(|label| (label, project_coherent(input, &label)))
        .filter(|(_, c)| c.iter().map(|z| z.norm_sqr()).sum::<f64>() > NEGLIGIBLE_WEIGHT)
        .collect();
    seeded.sort_by_key(|(label, _)| *label);

    let mut values = vec![0.0; times.len()];
    for chunk in seeded.chunks(CHUNK) {
        let parts: Vec<Result<Vec<f64>>> = chunk
            .par_iter()
            .map(|(label, c0)| {
                let block = block_for_label(label, params)?;
                let tri = build_hamiltonian(&block, &block_constants(label, params))?;
                let evolution = BlockEvolution::new(eigensolve(&tri)?, c0);
                let weights = n3_weights(label);
                Ok(times.iter().map(|&t| evolution.population(&weights, t)).collect())
            })
            .collect();
        for part in parts {
            for (acc, x) in values.iter_mut().zip(part?) {
                *acc += x;
            }
        }
    }
    let discarded_probability = input.discarded_probability();
    Ok(RabiSignal {
        signal: Signal {
            times: times.to_vec(),
            values,
        },
        discarded_probability,
        tail_warning: discarded_probability > tail_bound,
        blocks_used: seeded.len(),
    })
}
