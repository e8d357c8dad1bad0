//! Structure functions, irreducible blocks and their matrix realizations.
//!
//! A polynomial deformation of sl(2) is fixed by its structure function
//! `psi(x) = A * prod_i (x - lambda_i)`: on an irreducible block with lowest
//! weight `l0` the ladder operators act as
//!
//! ```text
//! V0 |v> = (l0 + v) |v>,   V+ |v> = sqrt(psi(l0 + v + 1)) |v + 1>,   V- = (V+)^dagger
//! ```
//!
//! so that `[V-, V+] = psi(V0 + 1) - psi(V0)` and `V+ V- = psi(V0)` on the block.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for root detection and block termination.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Polynomial structure function stored in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunction {
    leading_coeff: f64,
    roots: Vec<f64>,
}

impl StructureFunction {
    pub fn new(leading_coeff: f64, roots: Vec<f64>) -> Self {
        Self {
            leading_coeff,
            roots,
        }
    }

    /// The undeformed su(2) structure function `(j + x)(j + 1 - x)`, whose
    /// lowest weight is `-j`.
    pub fn su2(j: f64) -> Self {
        Self::new(-1.0, vec![-j, j + 1.0])
    }

    pub fn leading_coeff(&self) -> f64 {
        self.leading_coeff
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    /// `A * prod_i (x - lambda_i)`, multiplied in ascending root order.
    pub fn eval(&self, x: f64) -> f64 {
        self.roots
            .iter()
            .fold(self.leading_coeff, |acc, &root| acc * (x - root))
    }

    /// Falling product `prod_{r=0}^{v-1} psi(x - r)`; the empty product is 1.
    pub fn falling_product(&self, x: f64, v: usize) -> f64 {
        (0..v).fold(1.0, |acc, r| acc * self.eval(x - r as f64))
    }

    /// Returns a copy with one root shifted by `delta`.
    pub fn with_perturbed_root(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.roots[index] += delta;
        out
    }
}

/// Evaluates `psi` at `x`.
pub fn eval_psi(psi: &StructureFunction, x: f64) -> f64 {
    psi.eval(x)
}

/// `prod_{r=0}^{v-1} psi(x - r)`.
pub fn falling_product(psi: &StructureFunction, x: f64, v: usize) -> f64 {
    psi.falling_product(x, v)
}

/// One irreducible subspace: the tower `|v>, v = 0..dim` above a lowest
/// vector annihilated by `V-`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    psi: StructureFunction,
    l0: f64,
    dim: usize,
    labels: BTreeMap<String, f64>,
    constant: f64,
    truncated: bool,
}

impl Block {
    pub fn psi(&self) -> &StructureFunction {
        &self.psi
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Effective spin `j = (d - 1) / 2`.
    pub fn j(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    /// `2j` as an integer (`d - 1`).
    pub fn two_j(&self) -> usize {
        self.dim - 1
    }

    pub fn labels(&self) -> &BTreeMap<String, f64> {
        &self.labels
    }

    /// The additive constant `C` (a function of the integrals of motion).
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// True when the tower was cut at `dmax` instead of terminating.
    /// Exactness claims do not apply to truncated blocks.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// `psi(l0 + v)` for `v = 0..=dim`.
    pub fn psi_values(&self) -> Vec<f64> {
        (0..=self.dim).map(|v| self.psi.eval(self.l0 + v as f64)).collect()
    }

    /// Max `|psi|` over the tower, the scale used by the algebra invariants.
    pub fn psi_scale(&self) -> f64 {
        self.psi_values()
            .iter()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

/// Builds the block above `l0`. The dimension is the first `v >= 1` with
/// `|psi(l0 + v)|` below tolerance, capped at `dmax` (then flagged truncated).
pub fn build_block(
    psi: &StructureFunction,
    l0: f64,
    labels: BTreeMap<String, f64>,
    constant: f64,
    dmax: usize,
) -> Result<Block> {
    if dmax == 0 {
        return Err(Error::InvalidInput("dmax must be positive".into()));
    }
    let scale = (0..=dmax)
        .map(|v| psi.eval(l0 + v as f64).abs())
        .fold(0.0_f64, f64::max);
    let tol = ROOT_TOLERANCE * scale;

    let at_l0 = psi.eval(l0);
    if at_l0.abs() > tol || scale == 0.0 {
        return Err(Error::NotALowestWeight { l0, value: at_l0 });
    }

    let mut dim = dmax;
    let mut truncated = true;
    for v in 1..=dmax {
        let value = psi.eval(l0 + v as f64);
        if value.abs() <= tol {
            dim = v;
            truncated = false;
            break;
        }
        if value < 0.0 {
            return Err(Error::NonUnitary { v, value });
        }
    }
    Ok(Block {
        psi: psi.clone(),
        l0,
        dim,
        labels,
        constant,
        truncated,
    })
}

/// A triple of ladder matrices `(diagonal, raising, lowering)` in the ordered
/// basis `|v>, v = 0..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOperators {
    pub zero: DMatrix<Complex64>,
    pub plus: DMatrix<Complex64>,
    pub minus: DMatrix<Complex64>,
}

fn commutator(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

impl LadderOperators {
    pub fn dim(&self) -> usize {
        self.zero.nrows()
    }

    /// `max |[V-, V+] - diag(psi(V0 + 1) - psi(V0))|` against a reference
    /// structure function.
    pub fn commutator_residual(&self, psi: &StructureFunction) -> f64 {
        let lhs = commutator(&self.minus, &self.plus);
        let rhs = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c {
                let x = self.zero[(r, r)].re;
                Complex64::new(psi.eval(x + 1.0) - psi.eval(x), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        max_abs(&(lhs - rhs))
    }

    /// `max |V+ V- - diag(psi(V0))|` against a reference structure function.
    pub fn product_residual(&self, psi: &StructureFunction) -> f64 {
        let lhs = &self.plus * &self.minus;
        let rhs = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c {
                Complex64::new(psi.eval(self.zero[(r, r)].re), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        max_abs(&(lhs - rhs))
    }

    /// Largest violation of `[Y0, Y±] = ±Y±` and `[Y+, Y-] = 2 Y0`.
    pub fn su2_residual(&self) -> f64 {
        let r_plus = max_abs(&(commutator(&self.zero, &self.plus) - &self.plus));
        let r_minus = max_abs(&(commutator(&self.zero, &self.minus) + &self.minus));
        let r_cas = max_abs(&(commutator(&self.plus, &self.minus) - &self.zero * Complex64::new(2.0, 0.0)));
        r_plus.max(r_minus).max(r_cas)
    }
}

fn ladder_from_subdiagonal(diagonal: &[f64], sub: &[f64]) -> LadderOperators {
    let d = diagonal.len();
    let zero = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(diagonal[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let plus = DMatrix::from_fn(d, d, |r, c| {
        if r == c + 1 {
            Complex64::new(sub[c], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let minus = plus.adjoint();
    LadderOperators { zero, plus, minus }
}

/// Matrices of `V0, V+, V-` on the block, built from `psi` (normally the
/// block's own structure function).
pub fn block_operators(block: &Block, psi: &StructureFunction) -> LadderOperators {
    let diagonal: Vec<f64> = (0..block.dim).map(|v| block.l0 + v as f64).collect();
    let sub: Vec<f64> = (0..block.dim.saturating_sub(1))
        .map(|v| psi.eval(block.l0 + v as f64 + 1.0).max(0.0).sqrt())
        .collect();
    ladder_from_subdiagonal(&diagonal, &sub)
}

/// Holstein-Primakoff images `Y0 = V0 - l0 - j` and `Y±`, obtained by
/// rescaling each ladder element to its su(2) value `sqrt((v + 1)(2j - v))`.
pub fn holstein_primakoff(block: &Block, psi: &StructureFunction) -> LadderOperators {
    let ops = block_operators(block, psi);
    let j = block.j();
    let two_j = block.two_j() as f64;
    let diagonal: Vec<f64> = (0..block.dim).map(|v| v as f64 - j).collect();
    let sub: Vec<f64> = (0..block.dim.saturating_sub(1))
        .map(|v| {
            let vf = v as f64;
            let su2 = (vf + 1.0) * (two_j - vf);
            let deformed = psi.eval(block.l0 + vf + 1.0);
            let current = ops.plus[(v + 1, v)].re;
            // Y+ = V+ sqrt((j - Y0)(j + 1 + Y0) / psi(V0 + 1))
            if deformed > 0.0 {
                current * (su2 / deformed).sqrt()
            } else {
                su2.sqrt()
            }
        })
        .collect();
    ladder_from_subdiagonal(&diagonal, &sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_boson_k0(m: usize) -> StructureFunction {
        let m = m as f64;
        StructureFunction::new(-1.0, vec![-m / 3.0, -m / 3.0, 2.0 * m / 3.0 + 1.0])
    }

    #[test]
    fn eval_at_root_is_zero() {
        let psi = StructureFunction::new(1.0, vec![0.0]);
        assert_eq!(psi.eval(0.0), 0.0);
        assert_eq!(psi.degree(), 1);
    }

    #[test]
    fn cubic_k0_values() {
        for m in 0..8usize {
            let psi = three_boson_k0(m);
            let l0 = -(m as f64) / 3.0;
            for v in 0..=m + 1 {
                let expected = (v * v) as f64 * (m as f64 + 1.0 - v as f64);
                assert!((psi.eval(l0 + v as f64) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn su2_value_at_half() {
        let psi = StructureFunction::su2(0.5);
        assert!((psi.eval(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn falling_product_examples() {
        let psi = three_boson_k0(2);
        let l0 = -2.0 / 3.0;
        assert_eq!(psi.falling_product(1.7, 0), 1.0);
        assert!((psi.falling_product(l0 + 2.0, 2) - 8.0).abs() < 1e-10);
        let x = 0.37;
        assert_eq!(
            psi.falling_product(x, 2),
            psi.eval(x) * psi.eval(x - 1.0)
        );
    }

    #[test]
    fn su2_block_dimension() {
        let psi = StructureFunction::su2(1.5);
        let block = build_block(&psi, -1.5, BTreeMap::new(), 0.0, 50).unwrap();
        assert_eq!(block.dim(), 4);
        assert!(!block.truncated());
        assert_eq!(block.j(), 1.5);
    }

    #[test]
    fn cubic_block_dimension() {
        let block = build_block(&three_boson_k0(2), -2.0 / 3.0, BTreeMap::new(), 0.0, 10).unwrap();
        assert_eq!(block.dim(), 3);
        let vals = block.psi_values();
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        // psi(x) = -x (x + 3): root at 0, psi(1) = -4
        let psi = StructureFunction::new(-1.0, vec![0.0, -3.0]);
        let err = build_block(&psi, 0.0, BTreeMap::new(), 0.0, 5).unwrap_err();
        assert!(matches!(err, Error::NonUnitary { v: 1, .. }));
        assert!(err.to_string().contains("non-unitary block"));
    }

    #[test]
    fn rejects_non_root() {
        let psi = StructureFunction::su2(1.0);
        assert!(matches!(
            build_block(&psi, -0.5, BTreeMap::new(), 0.0, 5),
            Err(Error::NotALowestWeight { .. })
        ));
    }

    #[test]
    fn infinite_tower_is_truncated() {
        // su(1,1)-like: psi(x) = x (x - 1) has no upper termination above l0 = 1
        let psi = StructureFunction::new(1.0, vec![0.0, 1.0]);
        let block = build_block(&psi, 1.0, BTreeMap::new(), 0.0, 12).unwrap();
        assert!(block.truncated());
        assert_eq!(block.dim(), 12);
    }

    #[test]
    fn one_dimensional_block_has_zero_ladders() {
        let block = build_block(&three_boson_k0(0), 0.0, BTreeMap::new(), 0.0, 4).unwrap();
        assert_eq!(block.dim(), 1);
        let ops = block_operators(&block, block.psi());
        assert_eq!(ops.plus[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(ops.minus[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cubic_subdiagonal() {
        let block = build_block(&three_boson_k0(2), -2.0 / 3.0, BTreeMap::new(), 0.0, 10).unwrap();
        let ops = block_operators(&block, block.psi());
        assert!((ops.plus[(1, 0)].re - 2f64.sqrt()).abs() < 1e-12);
        assert!((ops.plus[(2, 1)].re - 2.0).abs() < 1e-12);
        assert_eq!(ops.minus, ops.plus.adjoint());
        assert!(ops.commutator_residual(block.psi()) < 1e-12 * block.psi_scale());
    }

    #[test]
    fn hp_two_level() {
        let block = build_block(&three_boson_k0(1), -1.0 / 3.0, BTreeMap::new(), 0.0, 10).unwrap();
        let y = holstein_primakoff(&block, block.psi());
        assert!((y.plus[(1, 0)].re - 1.0).abs() < 1e-15);
        assert!(y.su2_residual() < 1e-12);
    }

    #[test]
    fn hp_is_identity_in_su2_limit() {
        let psi = StructureFunction::su2(2.0);
        let block = build_block(&psi, -2.0, BTreeMap::new(), 0.0, 20).unwrap();
        let v = block_operators(&block, &psi);
        let y = holstein_primakoff(&block, &psi);
        for (a, b) in v.plus.iter().zip(y.plus.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn perturbed_structure_breaks_commutator() {
        let psi = three_boson_k0(4);
        let faulty = psi.with_perturbed_root(1, 1e-3);
        let block = build_block(&faulty, -4.0 / 3.0, BTreeMap::new(), 0.0, 10).unwrap();
        let ops = block_operators(&block, &faulty);
        assert!(ops.commutator_residual(&psi) > 1e-6);
    }

    proptest! {
        #[test]
        fn falling_product_recursion(x in -5.0..5.0f64, v in 0usize..8, m in 0usize..6) {
            let psi = three_boson_k0(m);
            let lhs = psi.falling_product(x, v + 1);
            let rhs = psi.falling_product(x, v) * psi.eval(x - v as f64);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn ladder_identities(m in 0usize..40) {
            let l0 = -(m as f64) / 3.0;
            let block = build_block(&three_boson_k0(m), l0, BTreeMap::new(), 0.0, m + 2).unwrap();
            let ops = block_operators(&block, block.psi());
            let scale = block.psi_scale().max(1.0);
            prop_assert!(ops.commutator_residual(block.psi()) <= 1e-12 * scale);
            prop_assert!(ops.product_residual(block.psi()) <= 1e-12 * scale);
            let y = holstein_primakoff(&block, block.psi());
            prop_assert!(y.su2_residual() <= 1e-10);
        }
    }
}
