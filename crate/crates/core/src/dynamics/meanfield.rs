//! Mean-field motion on the coherent-state manifold.
//!
//! With `|z> = exp(-xi Y+ + xi* Y-) |0>`, `xi = (theta/2) e^{-i phi}`, the
//! canonical pair `p = j cos theta`, `q = phi` obeys
//!
//! ```text
//! dq/dt = dH/dp,   dp/dt = -dH/dq,   H(p, q) = <z|H|z>
//! ```
//!
//! `H(p, q)` is evaluated on the block matrix and differentiated numerically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{holstein_primakoff, Block};
use crate::error::{Error, Result};
use crate::exact::HamiltonianParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub p: f64,
    pub q: f64,
}

/// Evaluates `H(p, q)` for a fixed block and coupling.
#[derive(Debug, Clone)]
pub struct MeanFieldHamiltonian {
    j: f64,
    hamiltonian: DMatrix<Complex64>,
    y_plus: DMatrix<Complex64>,
}

impl MeanFieldHamiltonian {
    pub fn new(block: &Block, params: &HamiltonianParams) -> Result<Self> {
        let d = block.dim();
        let g = params.g();
        let mut h = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for v in 0..d {
            h[(v, v)] = Complex64::new(params.constant + params.a * (block.l0() + v as f64), 0.0);
            if v + 1 < d {
                let value = block.psi().eval(block.l0() + v as f64 + 1.0);
                if value < 0.0 {
                    return Err(Error::NonUnitary { v: v + 1, value });
                }
                h[(v + 1, v)] = g * value.sqrt();
                h[(v, v + 1)] = g.conj() * value.sqrt();
            }
        }
        Ok(Self {
            j: block.j(),
            hamiltonian: h,
            y_plus: holstein_primakoff(block, block.psi()).plus,
        })
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Coherent state for `(p, q)`; `p/j` is clamped to `[-1, 1]`.
    pub fn state(&self, p: f64, q: f64) -> DVector<Complex64> {
        let d = self.hamiltonian.nrows();
        let cos_theta = if self.j == 0.0 { 1.0 } else { (p / self.j).clamp(-1.0, 1.0) };
        let xi = Complex64::from_polar(0.5 * cos_theta.acos(), -q);
        let generator = self.y_plus.map(|x| -xi * x) + self.y_plus.adjoint().map(|x| xi.conj() * x);
        generator.exp().column(0).into_owned().resize_vertically(d, Complex64::new(0.0, 0.0))
    }

    pub fn energy(&self, p: f64, q: f64) -> f64 {
        let z = self.state(p, q);
        (z.adjoint() * &self.hamiltonian * &z)[(0, 0)].re
    }

    /// `(dH/dp, dH/dq)` by central differences.
    pub fn gradient(&self, p: f64, q: f64) -> (f64, f64) {
        let h = 1e-6 * 1f64.max(p.abs()).max(q.abs());
        let dp = (self.energy(p + h, q) - self.energy(p - h, q)) / (2.0 * h);
        let dq = (self.energy(p, q + h) - self.energy(p, q - h)) / (2.0 * h);
        (dp, dq)
    }

    /// `(dp/dt, dq/dt)`.
    pub fn velocity(&self, state: MeanFieldState) -> (f64, f64) {
        let (dp, dq) = self.gradient(state.p, state.q);
        (-dq, dp)
    }
}

/// `<z|H|z>` at `(p, q)`.
pub fn meanfield_energy(block: &Block, params: &HamiltonianParams, state: MeanFieldState) -> Result<f64> {
    Ok(MeanFieldHamiltonian::new(block, params)?.energy(state.p, state.q))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    pub energies: Vec<f64>,
    /// Set when `|p|` had to be clamped to `j`.
    pub clamped: bool,
}

impl MeanFieldTrajectory {
    /// `max |H(t) - H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }
}

/// Classical RK4 integration over `steps` steps of size `dt` (negative `dt`
/// integrates backwards).
pub fn meanfield_trajectory(
    block: &Block,
    params: &HamiltonianParams,
    start: MeanFieldState,
    dt: f64,
    steps: usize,
) -> Result<MeanFieldTrajectory> {
    let field = MeanFieldHamiltonian::new(block, params)?;
    let j = field.j();
    if start.p.abs() > j {
        return Err(Error::InvalidInput(format!("|p0| = {} exceeds j = {j}", start.p.abs())));
    }
    let mut clamped = false;
    let mut state = start;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state);
    energies.push(field.energy(state.p, state.q));

    let shifted = |s: MeanFieldState, k: (f64, f64), h: f64| MeanFieldState {
        p: s.p + h * k.0,
        q: s.q + h * k.1,
    };
    for step in 1..=steps {
        let k1 = field.velocity(state);
        let k2 = field.velocity(shifted(state, k1, 0.5 * dt));
        let k3 = field.velocity(shifted(state, k2, 0.5 * dt));
        let k4 = field.velocity(shifted(state, k3, dt));
        state.p += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        state.q += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if state.p.abs() > j {
            state.p = state.p.clamp(-j, j);
            clamped = true;
        }
        times.push(step as f64 * dt);
        states.push(state);
        energies.push(field.energy(state.p, state.q));
    }
    Ok(MeanFieldTrajectory {
        times,
        states,
        energies,
        clamped,
    })
}
