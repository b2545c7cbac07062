//! Singular-value machinery for dense discretized operators.
//!
//! A [`DenseOperator`] stores the sampled integral kernel of an operator on
//! the position or momentum lattice together with the cell weight `w` (`h^d`
//! or `δ^d`). Continuum quantities fold the weight exactly once:
//!
//! * trace        = `Σ diag · w`
//! * S² norm      = `(Σ |entries|² w²)^{1/2}`
//! * sing. values = `svd(matrix) · w`
//! * composition  = `A · B · w`
//!
//! Folding at one place keeps position/momentum conventions from
//! double-scaling anywhere downstream.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Default suites refuse to decompose anything larger than this.
pub const DENSE_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Position,
    Momentum,
}

impl BasisTag {
    fn code(self) -> u32 {
        match self {
            BasisTag::Position => 0,
            BasisTag::Momentum => 1,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(BasisTag::Position),
            1 => Ok(BasisTag::Momentum),
            other => Err(LabError::InvalidParameter(format!("unknown basis tag {other}"))),
        }
    }
}

/// Dense square kernel with its lattice weight.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<Complex64>,
    pub basis: BasisTag,
    pub weight: f64,
    hermitian: bool,
}

/// Nonincreasing, nonnegative singular values with the weight folded in.
#[derive(Debug, Clone)]
pub struct SingularSpectrum(Vec<f64>);

impl SingularSpectrum {
    fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn largest(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    /// `(Σ s_k^r)^{1/r}` for `r ≥ 1`.
    pub fn schatten_norm(&self, r: f64) -> f64 {
        assert!(r >= 1.0, "Schatten norm needs r >= 1");
        if self.0.is_empty() {
            return 0.0;
        }
        // scale by s_1 in the log domain so large r cannot underflow
        let s1 = self.largest();
        if s1 == 0.0 {
            return 0.0;
        }
        let sum: f64 = self.0.iter().map(|s| (s / s1).powf(r)).sum();
        s1 * sum.powf(1.0 / r)
    }

    /// `sup_k k^{1/r} s_k` for `r > 0`.
    pub fn weak_quasinorm(&self, r: f64) -> f64 {
        assert!(r > 0.0, "weak quasi-norm needs r > 0");
        self.0
            .iter()
            .enumerate()
            .map(|(k, s)| ((k + 1) as f64).powf(1.0 / r) * s)
            .fold(0.0, f64::max)
    }
}

/// Complex GEMM via matrixmultiply; nalgebra's generic path is several times
/// slower for Complex64 and this sits on the Dyson hot loop.
pub(crate) fn zmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = DMatrix::<Complex64>::zeros(m, n);
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>, basis: BasisTag, weight: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LabError::ShapeMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if !matrix.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(LabError::NumericalBreakdown("non-finite operator entries".into()));
        }
        if !(weight > 0.0) {
            return Err(LabError::InvalidParameter("cell weight must be positive".into()));
        }
        let hermitian = hermitian_defect(&matrix) < HERMITIAN_TOLERANCE;
        Ok(Self { matrix, basis, weight, hermitian })
    }

    /// Identity operator (kernel `I/w`, so that applying it is the identity).
    pub fn identity(n: usize, basis: BasisTag, weight: f64) -> Self {
        let m = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / weight, 0.0));
        Self { matrix: m, basis, weight, hermitian: true }
    }

    pub fn zero(n: usize, basis: BasisTag, weight: f64) -> Self {
        Self { matrix: DMatrix::zeros(n, n), basis, weight, hermitian: true }
    }

    /// Rank-one `|u⟩⟨v|` from sample vectors (kernel `u(x) conj(v(y))`).
    pub fn rank_one(u: &[Complex64], v: &[Complex64], basis: BasisTag, weight: f64) -> Self {
        let n = u.len();
        let m = DMatrix::from_fn(n, n, |i, j| u[i] * v[j].conj());
        let hermitian = hermitian_defect(&m) < HERMITIAN_TOLERANCE;
        Self { matrix: m, basis, weight, hermitian }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Re-validate the cached Hermitian flag against the entries.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            basis: self.basis,
            weight: self.weight,
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(&self.matrix + &other.matrix, self.basis, self.weight)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut m = self.matrix.clone();
        for v in m.iter_mut() {
            *v *= c;
        }
        let hermitian = self.hermitian && c.im == 0.0;
        Self { matrix: m, basis: self.basis, weight: self.weight, hermitian }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(LabError::ShapeMismatch { expected: self.dim(), got: other.dim() });
        }
        if self.basis != other.basis || (self.weight - other.weight).abs() > 1e-15 * self.weight {
            return Err(LabError::InvalidParameter(
                "operators live on different lattices".into(),
            ));
        }
        Ok(())
    }

    /// Operator composition `A ∘ B` (kernel `A · B · w`).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut m = zmul(&self.matrix, &other.matrix);
        for v in m.iter_mut() {
            *v *= self.weight;
        }
        Self::new(m, self.basis, self.weight)
    }

    /// Apply to a coefficient vector: `(A u)_i = Σ_j A_ij u_j w`.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.dim() {
            return Err(LabError::ShapeMismatch { expected: self.dim(), got: u.len() });
        }
        let v = DVector::from_column_slice(u);
        let out = &self.matrix * v;
        Ok(out.iter().map(|z| z * self.weight).collect())
    }

    /// Continuum trace `Σ diag · w`.
    pub fn trace(&self) -> Complex64 {
        let mut t = Complex64::default();
        for i in 0..self.dim() {
            t += self.matrix[(i, i)];
        }
        t * self.weight
    }

    /// Hilbert–Schmidt norm `(Σ |entries|² w²)^{1/2}`, no decomposition needed.
    pub fn s2_norm(&self) -> f64 {
        let sum: f64 = self.matrix.iter().map(|v| v.norm_sqr()).sum();
        sum.sqrt() * self.weight
    }

    /// Largest singular value (operator norm) by power iteration on `A*A`.
    pub fn operator_norm(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        // deterministic start vector; 60 iterations is far past convergence
        // for the spectra seen here, and cheap compared to a full SVD
        let mut v = DVector::from_fn(n, |i, _| {
            Complex64::new(1.0 + (i as f64 * 0.37).sin(), (i as f64 * 0.71).cos())
        });
        v /= Complex64::new(v.norm(), 0.0);
        let mut lambda = 0.0f64;
        for _ in 0..60 {
            let w = &self.matrix * &v;
            let w = self.matrix.adjoint() * w;
            let nw = w.norm();
            if nw == 0.0 {
                return 0.0;
            }
            let next = w / Complex64::new(nw, 0.0);
            let new_lambda = nw;
            let rel = (new_lambda - lambda).abs() / new_lambda.max(1e-300);
            v = next;
            lambda = new_lambda;
            if rel < 1e-13 {
                break;
            }
        }
        lambda.sqrt() * self.weight
    }

    /// Continuum-weighted singular values. Hermitian kernels go through the
    /// symmetric eigensolver, everything else through the full SVD.
    pub fn singular_values(&self) -> Result<SingularSpectrum> {
        if self.dim() > DENSE_DIM_CAP {
            return Err(LabError::InvalidParameter(format!(
                "matrix dimension {} exceeds the {} cap",
                self.dim(),
                DENSE_DIM_CAP
            )));
        }
        let vals: Vec<f64> = if self.hermitian {
            let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
            eig.eigenvalues.iter().map(|l| l.abs() * self.weight).collect()
        } else {
            let svd = nalgebra::SVD::new_unordered(self.matrix.clone(), false, false);
            svd.singular_values.iter().map(|s| s * self.weight).collect()
        };
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NumericalBreakdown("singular values not finite".into()));
        }
        Ok(SingularSpectrum::new(vals))
    }

    /// Eigenvalues of a Hermitian operator, descending, weight folded in.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.hermitian {
            return Err(LabError::InvalidParameter("operator is not Hermitian".into()));
        }
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|l| l * self.weight).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(vals)
    }

    /// `‖A‖_{S^r} = (Σ s_k^r)^{1/r}`, `r ≥ 1`.
    pub fn schatten_norm(&self, r: f64) -> Result<f64> {
        if !(r >= 1.0) {
            return Err(LabError::InvalidParameter(format!("Schatten exponent {r} < 1")));
        }
        if r == 2.0 {
            return Ok(self.s2_norm());
        }
        Ok(self.singular_values()?.schatten_norm(r))
    }

    /// `sup_k k^{1/r} s_k`, `r > 0`.
    pub fn weak_schatten_quasinorm(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(LabError::InvalidParameter(format!("weak exponent {r} <= 0")));
        }
        Ok(self.singular_values()?.weak_quasinorm(r))
    }

    /// `Tr A^m` by repeated composition.
    pub fn trace_power(&self, m: u32) -> Complex64 {
        assert!(m >= 1);
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.compose(self).expect("self-composition is always compatible");
        }
        acc.trace()
    }

    /// Binary dump: 16-byte header (rows, cols, basis tag, reserved; little
    /// endian u32) followed by row-major interleaved re/im f64 pairs.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let rows = self.matrix.nrows() as u32;
        let cols = self.matrix.ncols() as u32;
        f.write_all(&rows.to_le_bytes())?;
        f.write_all(&cols.to_le_bytes())?;
        f.write_all(&self.basis.code().to_le_bytes())?;
        f.write_all(&0u32.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.matrix.len() * 16);
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let v = self.matrix[(i, j)];
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        f.write_all(&buf)?;
        Ok(())
    }

    /// Load a [`DenseOperator::save`] dump; the lattice weight is supplied by
    /// the caller (it is part of the cache key, not the file format).
    pub fn load(path: &Path, weight: f64) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut head = [0u8; 16];
        f.read_exact(&mut head)?;
        let rows = u32::from_le_bytes(head[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let basis = BasisTag::from_code(u32::from_le_bytes(head[8..12].try_into().unwrap()))?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        if buf.len() != rows * cols * 16 {
            return Err(LabError::ShapeMismatch { expected: rows * cols * 16, got: buf.len() });
        }
        let mut m = DMatrix::<Complex64>::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let off = (i * cols + j) * 16;
                let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        Self::new(m, basis, weight)
    }
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn small_matrix() -> impl Strategy<Value = DMatrix<Complex64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16).prop_map(|v| {
            DMatrix::from_fn(4, 4, |i, j| {
                let (re, im) = v[i * 4 + j];
                Complex64::new(re, im)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn triangle_inequality_in_schatten_r(
            a in small_matrix(),
            b in small_matrix(),
            r in 1.0f64..4.0,
        ) {
            let oa = DenseOperator::new(a.clone(), BasisTag::Position, 1.0).unwrap();
            let ob = DenseOperator::new(b, BasisTag::Position, 1.0).unwrap();
            let sum = oa.add(&ob).unwrap();
            let lhs = sum.schatten_norm(r).unwrap();
            let rhs = oa.schatten_norm(r).unwrap() + ob.schatten_norm(r).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn interpolation_monotonicity(a in small_matrix(), r in 1.0f64..3.0, dr in 0.1f64..3.0) {
            let op = DenseOperator::new(a, BasisTag::Position, 1.0).unwrap();
            let lo = op.schatten_norm(r).unwrap();
            let hi = op.schatten_norm(r + dr).unwrap();
            prop_assert!(hi <= lo * (1.0 + 1e-9) + 1e-12);
        }
    }
}
