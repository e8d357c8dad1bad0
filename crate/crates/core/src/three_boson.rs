//! The three-boson model
//!
//! ```text
//! H = w1 N1 + w2 N2 + w3 N3 + g a1+ a2+ a3 + g* a1 a2 a3+
//! ```
//!
//! splits into finite blocks labelled by `k = |N1 - N2|`, the mode carrying
//! the excess, and `m = N3` of the lowest vector. Basis vector `v` of a block
//! is the Fock state `|k + v, v, m - v>` (excess in mode 1) or
//! `|v, k + v, m - v>` (excess in mode 2), and the block carries the cubic
//! structure function
//!
//! ```text
//! psi(x) = -(x - (R1 - R2)/2)(x + (R1 + R2)/2)(x - R2 - 1),  R1 = N1 - N2,  3 R2 = N1 + N2 + 2 N3
//! ```
//!
//! with `V0 = (N1 + N2 - N3)/3`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::algebra::{build_block, Block, StructureFunction};
use crate::error::Result;
use crate::exact::HamiltonianParams;

/// Mode frequencies and the complex coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeBosonParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub g: Complex64,
}

impl ThreeBosonParams {
    /// Resonant model `w1 = w2 = 1, w3 = 2` with real coupling.
    pub fn resonant(g: f64) -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
            omega3: 2.0,
            g: Complex64::new(g, 0.0),
        }
    }

    pub fn detuning(&self) -> f64 {
        self.omega1 + self.omega2 - self.omega3
    }

    /// Diagonal part `w . n` of the Hamiltonian on a Fock state.
    pub fn fock_energy(&self, n: [usize; 3]) -> f64 {
        self.omega1 * n[0] as f64 + self.omega2 * n[1] as f64 + self.omega3 * n[2] as f64
    }
}

/// Which of modes 1 and 2 carries the excess `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// Block label; for `k = 0` the sign is always `Plus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockLabel {
    pub k: usize,
    pub sign: Sign,
    pub m: usize,
}

impl BlockLabel {
    pub fn new(k: usize, sign: Sign, m: usize) -> Self {
        let sign = if k == 0 { Sign::Plus } else { sign };
        Self { k, sign, m }
    }

    pub fn dim(&self) -> usize {
        self.m + 1
    }

    /// `R1 = N1 - N2`.
    pub fn r1(&self) -> f64 {
        match self.sign {
            Sign::Plus => self.k as f64,
            Sign::Minus => -(self.k as f64),
        }
    }

    /// `R2 = (N1 + N2 + 2 N3) / 3`.
    pub fn r2(&self) -> f64 {
        (self.k + 2 * self.m) as f64 / 3.0
    }

    /// `V0` on the lowest vector, `(k - m) / 3`.
    pub fn l0(&self) -> f64 {
        (self.k as f64 - self.m as f64) / 3.0
    }

    /// Occupation numbers of basis vector `v`.
    pub fn fock_state(&self, v: usize) -> [usize; 3] {
        assert!(v <= self.m, "level {v} outside block of dimension {}", self.dim());
        match self.sign {
            Sign::Plus => [self.k + v, v, self.m - v],
            Sign::Minus => [v, self.k + v, self.m - v],
        }
    }

    /// Block and level containing a Fock state.
    pub fn locate(n: [usize; 3]) -> (Self, usize) {
        let v = n[0].min(n[1]);
        let sign = if n[0] >= n[1] { Sign::Plus } else { Sign::Minus };
        (Self::new(n[0].abs_diff(n[1]), sign, n[2] + v), v)
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 0 {
            write!(f, "k0m{}", self.m)
        } else {
            let s = match self.sign {
                Sign::Plus => '+',
                Sign::Minus => '-',
            };
            write!(f, "k{}{}m{}", self.k, s, self.m)
        }
    }
}

/// Cubic structure function of a block and its lowest weight.
pub fn psi3_for_block(label: &BlockLabel) -> (StructureFunction, f64) {
    let (r1, r2) = (label.r1(), label.r2());
    let psi = StructureFunction::new(-1.0, vec![(r1 - r2) / 2.0, -(r1 + r2) / 2.0, r2 + 1.0]);
    (psi, label.l0())
}

/// `a = w1 + w2 - w3`, `g`, and `2C = R1 (w1 - w2) + R2 (w1 + w2 + 2 w3)`.
pub fn block_constants(label: &BlockLabel, params: &ThreeBosonParams) -> HamiltonianParams {
    let constant = 0.5
        * (label.r1() * (params.omega1 - params.omega2)
            + label.r2() * (params.omega1 + params.omega2 + 2.0 * params.omega3));
    HamiltonianParams::new(params.detuning(), params.g, constant)
}

/// The block of a label, with `k`, `sign`, `m`, `R1`, `R2` recorded as labels.
pub fn block_for_label(label: &BlockLabel, params: &ThreeBosonParams) -> Result<Block> {
    let (psi, l0) = psi3_for_block(label);
    let mut labels = BTreeMap::new();
    labels.insert("k".to_string(), label.k as f64);
    labels.insert("sign".to_string(), if label.sign == Sign::Plus { 1.0 } else { -1.0 });
    labels.insert("m".to_string(), label.m as f64);
    labels.insert("R1".to_string(), label.r1());
    labels.insert("R2".to_string(), label.r2());
    let constant = block_constants(label, params).constant;
    build_block(&psi, l0, labels, constant, label.dim() + 1)
}

/// All labels whose block meets the Fock cube `n_i <= ncut`, ordered by
/// `(k, sign, m)`.
pub fn enumerate_blocks(ncut: usize) -> Vec<BlockLabel> {
    let mut out = Vec::new();
    for k in 0..=ncut {
        let signs: &[Sign] = if k == 0 { &[Sign::Plus] } else { &[Sign::Plus, Sign::Minus] };
        for &sign in signs {
            for m in 0..=2 * ncut - k {
                out.push(BlockLabel::new(k, sign, m));
            }
        }
    }
    out
}

/// Levels of a block lying inside the cube `n_i <= ncut`.
pub fn levels_in_cube(label: &BlockLabel, ncut: usize) -> std::ops::Range<usize> {
    let lo = label.m.saturating_sub(ncut);
    let hi = (ncut + 1).saturating_sub(label.k).min(label.m + 1);
    lo..hi.max(lo)
}

/// Product coherent state `|alpha1> |alpha2> |alpha3>` cut to the Fock cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentInput {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub alpha3: Complex64,
    pub ncut: usize,
}

impl CoherentInput {
    pub fn alphas(&self) -> [Complex64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }

    /// `1 - sum |c|^2` over the cube, from the Poisson marginals.
    pub fn discarded_probability(&self) -> f64 {
        let kept: f64 = self
            .alphas()
            .iter()
            .map(|a| (0..=self.ncut).map(|n| poisson_amplitude(*a, n).norm_sqr()).sum::<f64>())
            .product();
        (1.0 - kept).max(0.0)
    }
}

/// `exp(-|alpha|^2 / 2) alpha^n / sqrt(n!)`, evaluated in log space.
pub fn poisson_amplitude(alpha: Complex64, n: usize) -> Complex64 {
    let modulus = alpha.norm();
    if modulus == 0.0 {
        return if n == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let log_mag = -0.5 * modulus * modulus + n as f64 * modulus.ln() - 0.5 * ln_factorial(n as u64);
    Complex64::from_polar(log_mag.exp(), n as f64 * alpha.arg())
}

/// Amplitudes `c_v = <fock(v)|alpha1, alpha2, alpha3>`, zero outside the cube.
pub fn project_coherent(input: &CoherentInput, label: &BlockLabel) -> Vec<Complex64> {
    let alphas = input.alphas();
    (0..label.dim())
        .map(|v| {
            let n = label.fock_state(v);
            if n.iter().any(|&x| x > input.ncut) {
                return Complex64::new(0.0, 0.0);
            }
            (0..3).map(|i| poisson_amplitude(alphas[i], n[i])).product()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::block_operators;
    use crate::exact::build_hamiltonian;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn k0_structure_function() {
        for m in 0..12usize {
            let (psi, l0) = psi3_for_block(&BlockLabel::new(0, Sign::Plus, m));
            for v in 0..=m + 1 {
                let expected = (v * v * (m + 1 - v)) as f64;
                assert!((psi.eval(l0 + v as f64) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn k1_m1_matrix_element() {
        for sign in [Sign::Plus, Sign::Minus] {
            let (psi, l0) = psi3_for_block(&BlockLabel::new(1, sign, 1));
            assert!((psi.eval(l0 + 1.0) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singlet_block() {
        let p = ThreeBosonParams::resonant(1.0);
        let block = block_for_label(&BlockLabel::new(0, Sign::Plus, 0), &p).unwrap();
        assert_eq!(block.dim(), 1);
    }

    #[test]
    fn block_dimension_is_m_plus_one() {
        let p = ThreeBosonParams::resonant(1.0);
        for label in enumerate_blocks(6) {
            let block = block_for_label(&label, &p).unwrap();
            assert_eq!(block.dim(), label.dim(), "{label}");
            assert!(!block.truncated());
        }
    }

    #[test]
    fn constants() {
        let p = ThreeBosonParams {
            omega1: 1.3,
            omega2: 0.4,
            omega3: 1.7,
            g: Complex64::new(0.5, 0.0),
        };
        assert!(block_constants(&BlockLabel::new(0, Sign::Plus, 0), &ThreeBosonParams::resonant(1.0))
            .a
            .abs()
            < 1e-15);
        let m = 5;
        let c = block_constants(&BlockLabel::new(0, Sign::Plus, m), &p).constant;
        let expected = m as f64 / 3.0 * (1.3 + 0.4 + 3.4);
        assert!((c - expected).abs() < 1e-12);

        let sym = ThreeBosonParams { omega2: 1.3, ..p };
        let plus = block_constants(&BlockLabel::new(3, Sign::Plus, 2), &sym).constant;
        let minus = block_constants(&BlockLabel::new(3, Sign::Minus, 2), &sym).constant;
        assert!((plus - minus).abs() < 1e-12);
    }

    #[test]
    fn diagonal_reproduces_fock_energies() {
        let p = ThreeBosonParams {
            omega1: 1.1,
            omega2: 0.7,
            omega3: 2.3,
            g: Complex64::new(0.3, -0.2),
        };
        for label in enumerate_blocks(4) {
            let block = block_for_label(&label, &p).unwrap();
            let h = build_hamiltonian(&block, &block_constants(&label, &p)).unwrap();
            for v in 0..label.dim() {
                let want = p.fock_energy(label.fock_state(v));
                assert!((h.diag[v] - want).abs() < 1e-12, "{label} v={v}");
            }
        }
    }

    #[test]
    fn ladder_matches_second_quantization() {
        // <n1+1, n2+1, n3-1| a1+ a2+ a3 |n1, n2, n3> = sqrt((n1+1)(n2+1) n3)
        let p = ThreeBosonParams::resonant(1.0);
        for label in enumerate_blocks(5) {
            let block = block_for_label(&label, &p).unwrap();
            let ops = block_operators(&block, block.psi());
            for v in 0..label.m {
                let n = label.fock_state(v);
                let want = (((n[0] + 1) * (n[1] + 1) * n[2]) as f64).sqrt();
                assert!((ops.plus[(v + 1, v)].re - want).abs() < 1e-10, "{label} v={v}");
                if label.k == 0 {
                    let k0 = (v + 1) as f64 * ((label.m - v) as f64).sqrt();
                    assert!((ops.plus[(v + 1, v)].re - k0).abs() < 1e-10);
                }
            }
        }
    }

    fn exact_psi(label: &BlockLabel, v: usize) -> BigRational {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let r1 = match label.sign {
            Sign::Plus => label.k as i64,
            Sign::Minus => -(label.k as i64),
        };
        let r2 = r((label.k + 2 * label.m) as i64, 3);
        let x = r(label.k as i64 - label.m as i64, 3) + r(v as i64, 1);
        let two = r(2, 1);
        let one = r(1, 1);
        let quarter = r(1, 4);
        let f1 = &two * &x + &r2 - r(r1, 1);
        let f2 = &two * &x + r(r1, 1) + &r2;
        let f3 = -&x + &r2 + one;
        quarter * f1 * f2 * f3
    }

    #[test]
    fn rational_psi_is_nonnegative_integer() {
        for k in 0..=10usize {
            for m in 0..=8usize {
                for sign in [Sign::Plus, Sign::Minus] {
                    let label = BlockLabel::new(k, sign, m);
                    let (psi, l0) = psi3_for_block(&label);
                    for v in 0..=m + 1 {
                        let exact = exact_psi(&label, v);
                        assert!(exact.is_integer());
                        assert!(exact >= BigRational::from_integer(BigInt::from(0)));
                        let want = (v * (k + v) * (m + 1 - v)) as i64;
                        assert_eq!(exact, BigRational::from_integer(BigInt::from(want)));
                        assert!((psi.eval(l0 + v as f64) - want as f64).abs() < 1e-9 * (want as f64).max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn small_cutoffs() {
        assert_eq!(enumerate_blocks(0), vec![BlockLabel::new(0, Sign::Plus, 0)]);
        let labels: BTreeSet<_> = enumerate_blocks(1).into_iter().collect();
        let want: BTreeSet<_> = [
            BlockLabel::new(0, Sign::Plus, 0),
            BlockLabel::new(0, Sign::Plus, 1),
            BlockLabel::new(0, Sign::Plus, 2),
            BlockLabel::new(1, Sign::Plus, 0),
            BlockLabel::new(1, Sign::Minus, 0),
            BlockLabel::new(1, Sign::Plus, 1),
            BlockLabel::new(1, Sign::Minus, 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(labels, want);
    }

    fn check_partition(ncut: usize) {
        let labels = enumerate_blocks(ncut);
        assert_eq!(labels.iter().collect::<BTreeSet<_>>().len(), labels.len());
        let mut seen = BTreeSet::new();
        for label in &labels {
            let range = levels_in_cube(label, ncut);
            assert!(!range.is_empty(), "{label} misses the cube");
            for v in 0..label.dim() {
                let n = label.fock_state(v);
                let inside = n.iter().all(|&x| x <= ncut);
                assert_eq!(inside, range.contains(&v));
                if inside {
                    assert!(seen.insert(n), "{n:?} appears twice");
                    assert_eq!(BlockLabel::locate(n), (*label, v));
                }
            }
        }
        assert_eq!(seen.len(), (ncut + 1).pow(3));
    }

    #[test]
    fn partition_of_fock_cube() {
        for ncut in 0..=7 {
            check_partition(ncut);
        }
    }

    #[test]
    fn vacuum_projection() {
        let zero = Complex64::new(0.0, 0.0);
        let input = CoherentInput {
            alpha1: zero,
            alpha2: zero,
            alpha3: zero,
            ncut: 3,
        };
        for label in enumerate_blocks(3) {
            let c = project_coherent(&input, &label);
            let weight: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            if label == BlockLabel::new(0, Sign::Plus, 0) {
                assert_eq!(c, vec![Complex64::new(1.0, 0.0)]);
            } else {
                assert_eq!(weight, 0.0);
            }
        }
    }

    #[test]
    fn pump_only_populates_lowest_levels() {
        let input = CoherentInput {
            alpha1: Complex64::new(0.0, 0.0),
            alpha2: Complex64::new(0.0, 0.0),
            alpha3: Complex64::new(1.5, 0.5),
            ncut: 6,
        };
        for label in enumerate_blocks(6) {
            let c = project_coherent(&input, &label);
            for (v, z) in c.iter().enumerate() {
                if v >= 1 || label.k > 0 {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
    }

    fn total_weight(input: &CoherentInput) -> f64 {
        enumerate_blocks(input.ncut)
            .iter()
            .flat_map(|l| project_coherent(input, l))
            .map(|z| z.norm_sqr())
            .sum()
    }

    #[test]
    fn weight_converges_with_cutoff() {
        let mk = |ncut| CoherentInput {
            alpha1: Complex64::new(1.2, 0.8),
            alpha2: Complex64::new(-0.5, 1.0),
            alpha3: Complex64::new(0.0, 2.0),
            ncut,
        };
        let w20 = total_weight(&mk(20));
        let w40 = total_weight(&mk(40));
        assert!(w20 <= w40 + 1e-15);
        assert!(1.0 - w40 < 1e-8);
        assert!((1.0 - w20 - mk(20).discarded_probability()).abs() < 1e-12);
    }

    #[test]
    fn poisson_large_n_is_finite() {
        let a = poisson_amplitude(Complex64::new(60.0, 0.0), 3600);
        assert!(a.norm().is_finite() && a.norm() > 0.01);
        assert!(poisson_amplitude(Complex64::new(1.0, 0.0), 5000).norm() == 0.0);
    }

    proptest! {
        #[test]
        fn locate_inverts_fock_state(k in 0usize..20, m in 0usize..20, minus in any::<bool>(), frac in 0.0..1.0f64) {
            let label = BlockLabel::new(k, if minus { Sign::Minus } else { Sign::Plus }, m);
            let v = ((m as f64 + 1.0) * frac) as usize;
            let v = v.min(m);
            prop_assert_eq!(BlockLabel::locate(label.fock_state(v)), (label, v));
        }
    }
}
