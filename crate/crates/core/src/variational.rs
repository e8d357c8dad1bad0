//! Smooth sl(2) variational approximation.
//!
//! The trial states are the generalized coherent states
//! `|v; xi> = exp(-xi Y+ + xi* Y-) |v>` with `xi = r e^{i theta}` built from the
//! Holstein-Primakoff images of the block ladder operators. With
//! `e^{i theta} = g/|g|` the energy of level `v` is
//!
//! ```text
//! E_v(r) = C + a(l0 + j) + a(-j + v) cos 2r + 2|g| sum_f sqrt(psi(l0 + 1 + f)) d_f,v(r) d_f+1,v(r)
//! ```
//!
//! where `d_f,v(r)` are the rotation overlaps of [`crate::coherent`]. Written
//! out with hypergeometric functions this is the closed form
//!
//! ```text
//! E_v = C + a(l0+j) + a(-j+v) cos 2r - 2|g| (cos^2 r)^(2(j-v)) (2j-v)!/v! sum_{f=0}^{2j-1} E_v(f)
//! E_v(f) = tan^(2(f-v)+1) r (f+1)! / ((2j-f-1)!) sqrt(psi(l0+1+f) / ((2j-f)(f+1)))
//!          F~(-v, 2j+1-v; f-v+1; sin^2 r) F~(-v, 2j+1-v; f-v+2; sin^2 r)
//! ```
//!
//! with the regularized `F~ = F / Gamma(c)` absorbing the `1/(f-v)!` factors.
//! One angle `r0` per block is fixed by `dE_0/dr = 0`, which in `alpha = -tan r`
//! reads
//!
//! ```text
//! 0 = sum_{f=0}^{2j-1} alpha^(2f) / ((2j-1-f)! f!)
//!     { a alpha/|g| - [4 alpha^2 j - (1 + alpha^2)(2f + 1)] sqrt(psi(l0+1+f) / ((2j-f)(f+1))) }
//! ```

use std::f64::consts::FRAC_PI_2;

use statrs::function::factorial::ln_factorial;

use crate::algebra::Block;
use crate::coherent::rotation_column;
use crate::error::{Error, Result};
use crate::exact::HamiltonianParams;

/// Number of interior grid points in `r` scanned for stationary points.
pub const ROOT_GRID_POINTS: usize = 4001;

/// A root of the stationarity condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub alpha: f64,
    /// `r = -atan(alpha)`.
    pub r: f64,
    /// Residual relative to the sum of absolute terms.
    pub residual: f64,
}

/// Stationary points of a block and the spectrum at the selected one.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    /// Phase of `g`.
    pub theta: f64,
    /// All stationary points, sorted by `alpha`.
    pub roots: Vec<StationaryPoint>,
    /// Index into `roots` of the point minimizing `E_0`.
    pub selected: usize,
    /// `E_v` at the selected point, `v = 0..d`.
    pub energies: Vec<f64>,
}

impl VariationalSolution {
    pub fn alpha_selected(&self) -> f64 {
        self.roots[self.selected].alpha
    }

    pub fn r_selected(&self) -> f64 {
        self.roots[self.selected].r
    }

    pub fn alpha_roots(&self) -> Vec<f64> {
        self.roots.iter().map(|p| p.alpha).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.roots.iter().map(|p| p.residual).collect()
    }
}

fn check_level(block: &Block, v: usize) -> Result<()> {
    if v >= block.dim() {
        Err(Error::LevelOutOfRange { v, dim: block.dim() })
    } else {
        Ok(())
    }
}

fn energy_unchecked(block: &Block, params: &HamiltonianParams, v: usize, r: f64) -> f64 {
    let j = block.j();
    let two_j = block.two_j();
    let mut e = params.constant + params.a * (block.l0() + j) + params.a * (v as f64 - j) * (2.0 * r).cos();
    if two_j == 0 {
        return e;
    }
    let d = rotation_column(two_j, v, r);
    let coupling: f64 = (0..two_j)
        .map(|f| block.psi().eval(block.l0() + 1.0 + f as f64).max(0.0).sqrt() * d[f] * d[f + 1])
        .sum();
    e += 2.0 * params.g_mod * coupling;
    e
}

/// Energy of level `v` of the block for the trial angle `r`.
pub fn energy_functional(block: &Block, params: &HamiltonianParams, v: usize, r: f64) -> Result<f64> {
    check_level(block, v)?;
    if r.cos().abs() < 1e-12 {
        return Err(Error::SingularAngle(r));
    }
    Ok(energy_unchecked(block, params, v, r))
}

// Terms of the stationarity sum divided by (1 + alpha^2)^(2j-1) / (2j-1)!,
// which keeps them bounded for any alpha. Returns (sum, sum of |terms|).
fn scaled_terms(block: &Block, params: &HamiltonianParams, alpha: f64) -> (f64, f64) {
    let two_j = block.two_j();
    if two_j == 0 {
        return (0.0, 0.0);
    }
    let j = block.j();
    let n = (two_j - 1) as u64;
    let log_a2 = if alpha == 0.0 { f64::NEG_INFINITY } else { 2.0 * alpha.abs().ln() };
    let log_norm = ln_factorial(n) - n as f64 * alpha.mul_add(alpha, 1.0).ln();
    let a2 = alpha * alpha;
    let (mut sum, mut abs_sum) = (0.0, 0.0);
    for f in 0..two_j {
        let ff = f as f64;
        let log_w = if f == 0 { 0.0 } else { ff * log_a2 }
            - ln_factorial((two_j - 1 - f) as u64)
            - ln_factorial(f as u64)
            + log_norm;
        let weight = log_w.exp();
        if weight == 0.0 {
            continue;
        }
        let psi = block.psi().eval(block.l0() + 1.0 + ff).max(0.0);
        let ratio = (psi / ((two_j - f) as f64 * (ff + 1.0))).sqrt();
        let brace = params.a * alpha / params.g_mod - (4.0 * a2 * j - (1.0 + a2) * (2.0 * ff + 1.0)) * ratio;
        sum += weight * brace;
        abs_sum += weight * brace.abs();
    }
    (sum, abs_sum)
}

/// Right-hand side of the stationarity condition at `alpha = -tan r`.
pub fn stationarity_residual(block: &Block, params: &HamiltonianParams, alpha: f64) -> Result<f64> {
    if params.g_mod == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let two_j = block.two_j();
    if two_j == 0 {
        return Ok(0.0);
    }
    let n = (two_j - 1) as u64;
    let (scaled, _) = scaled_terms(block, params, alpha);
    let log_scale = n as f64 * alpha.mul_add(alpha, 1.0).ln() - ln_factorial(n);
    Ok(scaled * log_scale.exp())
}

fn scaled_at_r(block: &Block, params: &HamiltonianParams, r: f64) -> f64 {
    scaled_terms(block, params, -r.tan()).0
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn interior_grid() -> impl Iterator<Item = f64> {
    let step = std::f64::consts::PI / (ROOT_GRID_POINTS + 1) as f64;
    (1..=ROOT_GRID_POINTS).map(move |i| -FRAC_PI_2 + i as f64 * step)
}

/// All stationary points, located by sign changes on a grid in
/// `r in (-pi/2, pi/2)` and refined by bisection. The grid in `r` covers
/// every real `alpha`.
pub fn solve_alpha(block: &Block, params: &HamiltonianParams) -> Result<Vec<StationaryPoint>> {
    if params.g_mod == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    if block.dim() == 1 {
        return Ok(vec![StationaryPoint {
            alpha: 0.0,
            r: 0.0,
            residual: 0.0,
        }]);
    }
    let grid: Vec<f64> = interior_grid().collect();
    let values: Vec<f64> = grid.iter().map(|&r| scaled_at_r(block, params, r)).collect();

    let mut found = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            found.push(grid[i]);
        } else if i + 1 < grid.len() && values[i + 1] != 0.0 && (values[i] < 0.0) != (values[i + 1] < 0.0) {
            found.push(bisect(|r| scaled_at_r(block, params, r), grid[i], grid[i + 1], values[i]));
        }
    }
    if found.is_empty() {
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        return Err(Error::NoStationaryPoint {
            alpha_lo: -hi.tan(),
            alpha_hi: -lo.tan(),
            lo: values[grid.len() - 1],
            hi: values[0],
        });
    }
    let mut roots: Vec<StationaryPoint> = found
        .into_iter()
        .map(|r| {
            let alpha = -r.tan();
            let (sum, abs_sum) = scaled_terms(block, params, alpha);
            StationaryPoint {
                alpha,
                r,
                residual: if abs_sum > 0.0 { sum.abs() / abs_sum } else { 0.0 },
            }
        })
        .collect();
    roots.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
    Ok(roots)
}

/// Spectrum at the stationary point with the lowest `E_0`.
pub fn variational_spectrum(block: &Block, params: &HamiltonianParams) -> Result<VariationalSolution> {
    let roots = solve_alpha(block, params)?;
    let e0: Vec<f64> = roots.iter().map(|p| energy_unchecked(block, params, 0, p.r)).collect();
    let selected = (0..roots.len())
        .min_by(|&x, &y| e0[x].total_cmp(&e0[y]))
        .expect("solve_alpha returns at least one root");
    let r = roots[selected].r;
    let energies = (0..block.dim()).map(|v| energy_unchecked(block, params, v, r)).collect();
    Ok(VariationalSolution {
        theta: params.g_phase,
        roots,
        selected,
        energies,
    })
}

/// Stationary point of a single level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSolution {
    pub v: usize,
    pub r: f64,
    pub energy: f64,
}

fn energy_slope(block: &Block, params: &HamiltonianParams, v: usize, r: f64) -> f64 {
    let h = 1e-6;
    (energy_unchecked(block, params, v, r + h) - energy_unchecked(block, params, v, r - h)) / (2.0 * h)
}

/// Per-level variant: each level takes the stationary point of its own
/// `E_v(r)` closest to the block angle `r0` of [`variational_spectrum`].
pub fn per_level_spectrum(block: &Block, params: &HamiltonianParams) -> Result<Vec<LevelSolution>> {
    let r0 = variational_spectrum(block, params)?.r_selected();
    let grid: Vec<f64> = interior_grid().step_by(4).collect();
    (0..block.dim())
        .map(|v| {
            let slope = |r: f64| energy_slope(block, params, v, r);
            let values: Vec<f64> = grid.iter().map(|&r| slope(r)).collect();
            let mut best = r0;
            let mut best_dist = f64::INFINITY;
            if block.dim() > 1 {
                for i in 0..grid.len() - 1 {
                    if (values[i] < 0.0) != (values[i + 1] < 0.0) {
                        let r = bisect(slope, grid[i], grid[i + 1], values[i]);
                        if (r - r0).abs() < best_dist {
                            best = r;
                            best_dist = (r - r0).abs();
                        }
                    }
                }
            }
            Ok(LevelSolution {
                v,
                r: best,
                energy: energy_unchecked(block, params, v, best),
            })
        })
        .collect()
}
