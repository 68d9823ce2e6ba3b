//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Everything here is sized for qubits and qubit pairs (d = 2 and d = 4),
//! although nothing assumes a particular dimension. Matrices are stored
//! row-major and are immutable once wrapped in one of the validated
//! operator newtypes ([`HermitianOperator`], [`UnitaryOperator`],
//! [`DensityMatrix`]).

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum entrywise deviation of `A` from `A†` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Maximum entrywise deviation of `U†U` from the identity accepted as unitary.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-10;
/// Slack on probability sums and on POVM completeness.
pub const PROB_TOL: f64 = 1e-9;
/// Trace and orthonormality slack for states and bases.
pub const STATE_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

pub type C64 = Complex64;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("matrix has {got} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, got: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation of U†U from I is {0:.3e})")]
    NotUnitary(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("basis is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("invalid probability vector: {0}")]
    Probability(String),
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, QmathError> {
        if data.len() != rows * cols {
            return Err(QmathError::Shape { rows, cols, got: data.len() });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmathError::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows. Panics on ragged input; meant for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged matrix literal");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(n, m, data).expect("matrix literal must be finite")
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged matrix literal");
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| c64(x, 0.0))).collect();
        Self::new(n, m, data).expect("matrix literal must be finite")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::default(); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for k in 0..dim {
            m.data[k * dim + k] = c64(1.0, 0.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (k, &v) in values.iter().enumerate() {
            m.data[k * n + k] = c64(v, 0.0);
        }
        m
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        let data = ket
            .iter()
            .flat_map(|&a| bra.iter().map(move |&b| a * b.conj()))
            .collect();
        Self { rows: ket.len(), cols: bra.len(), data }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(c64(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Matrix product, checked.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, QmathError> {
        if self.cols != rhs.rows {
            return Err(QmathError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::default() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>, QmathError> {
        if v.len() != self.cols {
            return Err(QmathError::Dimension(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, QmathError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(QmathError::Dimension(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, QmathError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, QmathError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Largest entrywise modulus of `self - rhs`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        match self.try_sub(rhs) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `⟨u| self |v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> Result<C64, QmathError> {
        let mv = self.apply(v)?;
        if u.len() != mv.len() {
            return Err(QmathError::Dimension("bra length".into()));
        }
        Ok(u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (row, col): (usize, usize)) -> &C64 {
        &self.data[row * self.cols + col]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("shape mismatch in matrix addition")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("shape mismatch in matrix subtraction")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// JSON layout: array of rows, each row an array of [re, im] pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| {
                let z = self.get(i, j);
                [z.re, z.im]
            }).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(de::Error::custom("ragged matrix rows"));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| c64(re, im)).collect();
        ComplexMatrix::new(n, m, data).map_err(de::Error::custom)
    }
}

/// Kronecker product with `(i·rB + k, j·cB + l) = a[i,j]·b[k,l]`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out.data[(i * b.rows + k) * cols + (j * b.cols + l)] = aij * b.get(k, l);
                }
            }
        }
    }
    out
}

pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn require_square(m: &ComplexMatrix) -> Result<(), QmathError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(QmathError::NotSquare { rows: m.rows, cols: m.cols })
    }
}

/// Square matrix equal to its adjoint within [`HERMITICITY_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QmathError> {
        require_square(&matrix)?;
        let dev = matrix.hermiticity_residual();
        if dev > HERMITICITY_TOL {
            return Err(QmathError::NotHermitian(dev));
        }
        Ok(Self(matrix))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        HermitianOperator::new(ComplexMatrix::deserialize(deserializer)?).map_err(de::Error::custom)
    }
}

/// Square matrix with `U†U = I` within [`UNITARITY_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryOperator(ComplexMatrix);

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QmathError> {
        require_square(&matrix)?;
        let dev = (&matrix.adjoint() * &matrix).max_abs_diff(&ComplexMatrix::identity(matrix.rows));
        if dev > UNITARITY_TOL {
            return Err(QmathError::NotUnitary(dev));
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    /// `cos θ σ_z + sin θ σ_x`.
    pub fn rotation_family(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(ComplexMatrix::from_real(&[&[c, s], &[s, -c]]))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }
}

impl<'de> Deserialize<'de> for UnitaryOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        UnitaryOperator::new(ComplexMatrix::deserialize(deserializer)?).map_err(de::Error::custom)
    }
}

/// Hermitian, unit-trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QmathError> {
        let herm = HermitianOperator::new(matrix)
            .map_err(|e| QmathError::NotDensity(e.to_string()))?;
        let tr = herm.matrix().trace();
        if (tr - c64(1.0, 0.0)).norm() > STATE_TOL {
            return Err(QmathError::NotDensity(format!("trace {tr} differs from 1")));
        }
        let min = eigvals_hermitian(&herm)?[0];
        if min < -PSD_TOL {
            return Err(QmathError::NotDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(herm.into_matrix()))
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn pure(ket: &[C64]) -> Result<Self, QmathError> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QmathError::NotDensity(format!("ket norm² {norm} differs from 1")));
        }
        Ok(Self(ComplexMatrix::projector(ket)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `ρ ⊗ σ`, which is again a valid state.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(tensor(&self.0, &other.0))
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &UnitaryOperator) -> Result<DensityMatrix, QmathError> {
        let m = u.matrix().matmul(&self.0)?.matmul(&u.matrix().adjoint())?;
        Ok(DensityMatrix(m))
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        DensityMatrix::new(ComplexMatrix::deserialize(deserializer)?).map_err(de::Error::custom)
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[c64(0.0, 0.0), c64(0.0, -1.0)], &[c64(0.0, 1.0), c64(0.0, 0.0)]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Computational basis vector `|k⟩` of dimension `dim`.
pub fn basis_ket(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::default(); dim];
    v[k] = c64(1.0, 0.0);
    v
}

pub fn plus_ket() -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![c64(h, 0.0), c64(h, 0.0)]
}

pub fn minus_ket() -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![c64(h, 0.0), c64(-h, 0.0)]
}

/// Spectral decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then zeroes it with a real Givens rotation, so the combined
/// update is `G = S·R` with `G_pp = c`, `G_pq = s`, `G_qp = -s·e^{-iφ}`,
/// `G_qq = c·e^{-iφ}`.
pub fn eigh(a: &HermitianOperator) -> Result<Eigen, QmathError> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    // Symmetrize exactly so rounding in the input never biases the rotations.
    for i in 0..n {
        m.data[i * n + i] = c64(m.get(i, i).re, 0.0);
        for j in (i + 1)..n {
            let avg = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
            m.data[i * n + j] = avg;
            m.data[j * n + i] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > 1e-15 * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(QmathError::NoConvergence { sweeps, off: off_norm(&m) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let gpp = c64(c, 0.0);
                let gpq = c64(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                // m <- m G
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.data[k * n + p] = mkp * gpp + mkq * gqp;
                    m.data[k * n + q] = mkp * gpq + mkq * gqq;
                }
                // m <- G† m
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.data[p * n + k] = gpp.conj() * mpk + gqp.conj() * mqk;
                    m.data[q * n + k] = gpq.conj() * mpk + gqq.conj() * mqk;
                }
                m.data[p * n + q] = C64::default();
                m.data[q * n + p] = C64::default();
                m.data[p * n + p] = c64(m.get(p, p).re, 0.0);
                m.data[q * n + q] = c64(m.get(q, q).re, 0.0);
                // v <- v G
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.data[k * n + p] = vkp * gpp + vkq * gqp;
                    v.data[k * n + q] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.total_cmp(&m.get(j, j).re));
    let values = order.iter().map(|&k| m.get(k, k).re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors.data[row * n + col] = v.get(row, k);
        }
    }
    Ok(Eigen { values, vectors })
}

/// Real eigenvalues in ascending order.
pub fn eigvals_hermitian(a: &HermitianOperator) -> Result<Vec<f64>, QmathError> {
    eigh(a).map(|e| e.values)
}

pub fn min_eigenvalue(a: &HermitianOperator) -> Result<f64, QmathError> {
    Ok(eigvals_hermitian(a)?.first().copied().unwrap_or(0.0))
}

/// True iff the smallest eigenvalue is at least `-tol`.
///
/// A solver failure is reported as not PSD.
pub fn is_psd(a: &HermitianOperator, tol: f64) -> bool {
    min_eigenvalue(a).is_ok_and(|m| m >= -tol)
}

/// Largest deviation of the Gram matrix of `basis` from the identity.
pub fn orthonormality_residual(basis: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, u) in basis.iter().enumerate() {
        for (b, v) in basis.iter().enumerate() {
            if u.len() != v.len() {
                return f64::INFINITY;
            }
            let ip: C64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - c64(target, 0.0)).norm());
        }
    }
    worst
}

/// `Σ_k ⟨k|ρ|k⟩ |k⟩⟨k|` over an orthonormal basis spanning the space.
pub fn dephase(rho: &DensityMatrix, basis: &[Vec<C64>]) -> Result<DensityMatrix, QmathError> {
    let d = rho.dim();
    if basis.len() != d || basis.iter().any(|v| v.len() != d) {
        return Err(QmathError::Dimension(format!(
            "dephasing basis must contain {d} vectors of length {d}"
        )));
    }
    let dev = orthonormality_residual(basis);
    if dev > STATE_TOL {
        return Err(QmathError::NotOrthonormal(dev));
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for k in basis {
        let pop = rho.matrix().sandwich(k, k)?.re;
        out = &out + &ComplexMatrix::projector(k).scale_real(pop);
    }
    Ok(DensityMatrix(out))
}

/// Bhattacharyya overlap `Σ_k √(p_k q_k)` of two probability vectors.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> Result<f64, QmathError> {
    if p.len() != q.len() {
        return Err(QmathError::Dimension(format!(
            "probability vectors of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_probability_vector(p)?;
    check_probability_vector(q)?;
    Ok(p.iter().zip(q).map(|(&a, &b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum())
}

pub fn check_probability_vector(p: &[f64]) -> Result<(), QmathError> {
    if let Some(x) = p.iter().find(|&&x| !x.is_finite() || x < -1e-12) {
        return Err(QmathError::Probability(format!("entry {x} is negative or not finite")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(QmathError::Probability(format!("entries sum to {total}")));
    }
    Ok(())
}
