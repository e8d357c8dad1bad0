//! Exact per-block spectra.
//!
//! On a block the Hamiltonian `a V0 + g V+ + g* V- + C` is a Jacobi matrix.
//! The phase of `g` is removed by the diagonal unitary `D_v = exp(-i v arg g)`,
//! leaving a real symmetric tridiagonal matrix that is diagonalized by an
//! implicit QL iteration. Eigenvalues are cross-checked independently by Sturm
//! sign counts of the characteristic-polynomial recurrence.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::Block;
use crate::coherent::rotation_column;
use crate::error::{Error, Result};

const QL_MAX_ITERATIONS: usize = 60;

/// Detuning `a`, coupling `g = g_mod e^{i g_phase}` and additive constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub a: f64,
    pub g_mod: f64,
    pub g_phase: f64,
    pub constant: f64,
}

impl HamiltonianParams {
    pub fn new(a: f64, g: Complex64, constant: f64) -> Self {
        Self {
            a,
            g_mod: g.norm(),
            g_phase: if g.norm() == 0.0 { 0.0 } else { g.arg() },
            constant,
        }
    }

    pub fn g(&self) -> Complex64 {
        Complex64::from_polar(self.g_mod, self.g_phase)
    }

    /// `sqrt(a^2 + 4|g|^2)`, the su(2) level spacing.
    pub fn rabi_frequency(&self) -> f64 {
        (self.a * self.a + 4.0 * self.g_mod * self.g_mod).sqrt()
    }
}

/// Gauge-reduced block Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// Phase of `g` removed by the gauge transformation.
    pub gauge_phase: f64,
}

impl TridiagonalHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm, an upper bound on the spectral radius.
    pub fn norm(&self) -> f64 {
        (0..self.dim())
            .map(|v| {
                let left = if v > 0 { self.offdiag[v - 1].abs() } else { 0.0 };
                let right = self.offdiag.get(v).map_or(0.0, |x| x.abs());
                self.diag[v].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in 0..self.dim() {
            let left = if v > 0 { self.offdiag[v - 1].abs() } else { 0.0 };
            let right = self.offdiag.get(v).map_or(0.0, |x| x.abs());
            lo = lo.min(self.diag[v] - left - right);
            hi = hi.max(self.diag[v] + left + right);
        }
        (lo, hi)
    }

    /// Dense real symmetric matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                self.diag[r]
            } else if r == c + 1 {
                self.offdiag[c]
            } else if c == r + 1 {
                self.offdiag[r]
            } else {
                0.0
            }
        })
    }

    /// Leading `k x k` principal submatrix.
    pub fn leading_minor(&self, k: usize) -> Self {
        Self {
            diag: self.diag[..k].to_vec(),
            offdiag: self.offdiag[..k.saturating_sub(1)].to_vec(),
            gauge_phase: self.gauge_phase,
        }
    }
}

/// Energies (ascending) and eigenamplitudes `Q[v][f] = <v|E_f>` in the
/// gauge-reduced basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub amplitudes: DMatrix<f64>,
    pub gauge_phase: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `<v|E_f>` in the original gauge, `e^{i v arg g} Q[v][f]`.
    pub fn amplitude(&self, v: usize, f: usize) -> Complex64 {
        Complex64::from_polar(1.0, v as f64 * self.gauge_phase) * self.amplitudes[(v, f)]
    }

    /// Largest `|<E_f|E_f'> - delta|` over all column pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.amplitudes.transpose() * &self.amplitudes;
        let d = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((gram[(r, c)] - target).abs());
            }
        }
        worst
    }

    /// Largest `|H q_f - E_f q_f|` entry.
    pub fn residual(&self, tri: &TridiagonalHamiltonian) -> f64 {
        let h = tri.to_dense();
        let mut worst = 0.0_f64;
        for f in 0..self.dim() {
            let col = self.amplitudes.column(f);
            let r = &h * col - col * self.energies[f];
            worst = worst.max(r.amax());
        }
        worst
    }
}

/// Jacobi matrix of `a V0 + g V+ + g* V- + C` on the block:
/// `diag[v] = C + a (l0 + v)`, `offdiag[v] = |g| sqrt(psi(l0 + v + 1))`.
pub fn build_hamiltonian(block: &Block, params: &HamiltonianParams) -> Result<TridiagonalHamiltonian> {
    let d = block.dim();
    let diag = (0..d)
        .map(|v| params.constant + params.a * (block.l0() + v as f64))
        .collect();
    let mut offdiag = Vec::with_capacity(d.saturating_sub(1));
    for v in 0..d.saturating_sub(1) {
        let value = block.psi().eval(block.l0() + v as f64 + 1.0);
        if value < 0.0 {
            return Err(Error::NonUnitary { v: v + 1, value });
        }
        offdiag.push(params.g_mod * value.sqrt());
    }
    Ok(TridiagonalHamiltonian {
        diag,
        offdiag,
        gauge_phase: params.g_phase,
    })
}

/// Full eigendecomposition by implicit QL with Wilkinson-type shifts.
pub fn eigensolve(tri: &TridiagonalHamiltonian) -> Result<Spectrum> {
    let n = tri.dim();
    let mut d = tri.diag.clone();
    let mut e: Vec<f64> = tri.offdiag.clone();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iterations == QL_MAX_ITERATIONS {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations,
                    residual: e[l].abs(),
                    partial: d.clone(),
                });
            }
            iterations += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (left, right) = z.as_mut_slice()[i * n..(i + 2) * n].split_at_mut(n);
                for (zi, zf) in left.iter_mut().zip(right.iter_mut()) {
                    let f = *zf;
                    *zf = s * *zi + c * f;
                    *zi = c * *zi - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let energies: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut amplitudes = DMatrix::from_fn(n, n, |row, col| z[(row, order[col])]);

    reorthogonalize_clusters(&energies, &mut amplitudes, tri.norm());
    for col in 0..n {
        fix_sign(&mut amplitudes, col);
    }
    Ok(Spectrum {
        energies,
        amplitudes,
        gauge_phase: tri.gauge_phase,
    })
}

fn reorthogonalize_clusters(energies: &[f64], q: &mut DMatrix<f64>, norm: f64) {
    let threshold = 1e-12 * norm.max(f64::MIN_POSITIVE);
    let n = energies.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < threshold {
            end += 1;
        }
        if end - start > 1 {
            for col in start..end {
                for prev in start..col {
                    let overlap = q.column(prev).dot(&q.column(col));
                    let prev_col = q.column(prev).clone_owned();
                    let mut target = q.column_mut(col);
                    target.axpy(-overlap, &prev_col, 1.0);
                }
                let nrm = q.column(col).norm();
                q.column_mut(col).scale_mut(1.0 / nrm);
            }
        }
        start = end;
    }
}

// First component above noise is made positive.
fn fix_sign(q: &mut DMatrix<f64>, col: usize) {
    let cutoff = 1e-8 * q.column(col).amax();
    if let Some(pivot) = q.column(col).iter().copied().find(|x| x.abs() > cutoff) {
        if pivot < 0.0 {
            q.column_mut(col).neg_mut();
        }
    }
}

/// Number of eigenvalues strictly below `x`, from the signs of
/// `P_{v+1}(x) / P_v(x)` where `P_{v+1} = (x - diag[v]) P_v - offdiag[v-1]^2 P_{v-1}`.
pub fn sturm_count_below(tri: &TridiagonalHamiltonian, x: f64) -> usize {
    let squared: Vec<f64> = tri.offdiag.iter().map(|b| b * b).collect();
    count_below(&tri.diag, &squared, x, f64::EPSILON * tri.norm().max(f64::MIN_POSITIVE))
}

/// Number of eigenvalues below `x`, from the diagonal and the squared couplings.
fn count_below(diag: &[f64], squared: &[f64], x: f64, tiny: f64) -> usize {
    count_below_many(diag, squared, [x], tiny)[0]
}

/// `count_below` at several points, run in lockstep.
fn count_below_many<const N: usize>(diag: &[f64], squared: &[f64], x: [f64; N], tiny: f64) -> [usize; N] {
    let mut ratio = [0.0; N];
    let mut above = [0; N];
    for (v, &a) in diag.iter().enumerate() {
        for i in 0..N {
            let coupling = if v > 0 { squared[v - 1] / ratio[i] } else { 0.0 };
            ratio[i] = x[i] - a - coupling;
            if ratio[i] == 0.0 {
                ratio[i] = -tiny;
            }
            above[i] += usize::from(ratio[i] < 0.0);
        }
    }
    above.map(|n| diag.len() - n)
}

const SECTIONS: usize = 4;

/// Eigenvalues as roots of the spectral polynomial, by Sturm-count
/// multisection on the Gershgorin interval. Every count also tightens the
/// brackets of the other roots.
pub fn spectral_polynomial_roots(tri: &TridiagonalHamiltonian) -> Vec<f64> {
    let d = tri.dim();
    let (lo0, hi0) = tri.gershgorin();
    let scale = lo0.abs().max(hi0.abs());
    if scale == 0.0 {
        return vec![0.0; d];
    }
    let floor = f64::EPSILON * scale;
    let tiny = f64::EPSILON * tri.norm().max(f64::MIN_POSITIVE);
    let squared: Vec<f64> = tri.offdiag.iter().map(|b| b * b).collect();
    let mut lower = vec![lo0 - floor; d];
    let mut upper = vec![hi0 + floor; d];
    let mut roots = Vec::with_capacity(d);
    for k in 0..d {
        // k-th root is the smallest x with more than k eigenvalues below it
        let (mut lo, mut hi) = (lower[k], upper[k]);
        loop {
            let width = hi - lo;
            if width <= floor.max(4.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
                break;
            }
            let step = width / (SECTIONS + 1) as f64;
            let points: [f64; SECTIONS] = std::array::from_fn(|i| lo + step * (i + 1) as f64);
            if points[0] <= lo || points[SECTIONS - 1] >= hi {
                break;
            }
            let counts = count_below_many(&tri.diag, &squared, points, tiny);
            for (&x, &count) in points.iter().zip(&counts) {
                for u in &mut upper[k + 1..count.max(k + 1)] {
                    *u = u.min(x);
                }
                for l in &mut lower[count.max(k + 1)..] {
                    *l = l.max(x);
                }
            }
            for (&x, &count) in points.iter().zip(&counts).rev() {
                if count <= k {
                    lo = x;
                    break;
                }
                hi = x;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Amplitudes generated by the three-term recurrence at a trial energy.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceAmplitudes {
    /// Normalized amplitudes `Q_v`.
    pub amplitudes: Vec<f64>,
    /// Closure residual of the last row, zero at an exact eigenvalue.
    pub residual: f64,
}

/// Propagates `E Q_v = diag[v] Q_v + offdiag[v-1] Q_{v-1} + offdiag[v] Q_{v+1}`
/// from a unit seed. Vanishing couplings split the chain; the recurrence is
/// reseeded at the start of each sub-chain and the one closing best is kept.
pub fn amplitude_recurrence(tri: &TridiagonalHamiltonian, energy: f64) -> RecurrenceAmplitudes {
    let d = tri.dim();
    let mut best: Option<RecurrenceAmplitudes> = None;
    let mut start = 0;
    while start < d {
        let mut end = start;
        while end + 1 < d && tri.offdiag[end] != 0.0 {
            end += 1;
        }
        let mut q = vec![0.0; d];
        q[start] = 1.0;
        for v in start..end {
            let prev = if v > start { tri.offdiag[v - 1] * q[v - 1] } else { 0.0 };
            q[v + 1] = ((energy - tri.diag[v]) * q[v] - prev) / tri.offdiag[v];
            let big = q[v + 1].abs();
            if big > 1e150 {
                q[start..=v + 1].iter_mut().for_each(|x| *x /= big);
            }
        }
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= norm);
        let prev = if end > start { tri.offdiag[end - 1] * q[end - 1] } else { 0.0 };
        let residual = ((energy - tri.diag[end]) * q[end] - prev).abs();
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(RecurrenceAmplitudes {
                amplitudes: q,
                residual,
            });
        }
        start = end + 1;
    }
    best.unwrap_or(RecurrenceAmplitudes {
        amplitudes: Vec::new(),
        residual: 0.0,
    })
}

/// Rotation angle of the su(2) diagonalization, `tan 2r = 2|g| / a`.
pub fn sl2_rotation_angle(params: &HamiltonianParams) -> f64 {
    0.5 * (2.0 * params.g_mod).atan2(params.a)
}

/// Quasi-equidistant su(2) reference `C + a(l0 + j) + (-j + v) sqrt(a^2 + 4|g|^2)`
/// with the su(2)-rotated basis vectors as amplitudes. Exact when `psi` is
/// the su(2) structure function.
pub fn sl2_reference_spectrum(block: &Block, params: &HamiltonianParams) -> Spectrum {
    let j = block.j();
    let two_j = block.two_j();
    let omega = params.rabi_frequency();
    let energies = (0..block.dim())
        .map(|v| params.constant + params.a * (block.l0() + j) + (v as f64 - j) * omega)
        .collect();
    let r0 = sl2_rotation_angle(params);
    let d = block.dim();
    let mut amplitudes = DMatrix::zeros(d, d);
    for v in 0..d {
        for (f, x) in rotation_column(two_j, v, r0).into_iter().enumerate() {
            amplitudes[(f, v)] = x;
        }
    }
    Spectrum {
        energies,
        amplitudes,
        gauge_phase: params.g_phase,
    }
}

/// Overlaps `<f| exp(-xi Y+ + xi* Y-) |v>` with `xi = r e^{i theta}`.
pub fn gcs_overlaps(block: &Block, v: usize, r: f64, theta: f64) -> Result<Vec<Complex64>> {
    if v >= block.dim() {
        return Err(Error::LevelOutOfRange { v, dim: block.dim() });
    }
    Ok(rotation_column(block.two_j(), v, r)
        .into_iter()
        .enumerate()
        .map(|(f, x)| Complex64::from_polar(1.0, theta * (f as f64 - v as f64)) * x)
        .collect())
}
