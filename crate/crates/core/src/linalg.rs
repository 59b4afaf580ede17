//! Dense complex linear algebra for 3-qubit states.
//!
//! Everything in this crate lives in dimension 2, 4, or 8, so the
//! representation is a plain row-major `Vec<Complex64>` and the eigensolver is
//! a cyclic Jacobi iteration: at this size robustness beats speed.
//!
//! Basis convention: the computational basis label `|xyz>` of three qubits
//! maps to the row/column index `4x + 2y + z`, so party A owns the most
//! significant bit. Every matrix-element identity in [`crate::family`] depends
//! on this convention.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Complex64 = Complex<f64>;

/// Off-diagonal Frobenius-norm threshold at which the Jacobi sweep stops.
const JACOBI_OFF_THRESHOLD: f64 = 1e-13;
/// Hard cap on Jacobi sweeps; convergence is quadratic so this is generous.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Certification thresholds, shared by every check in the crate.
///
/// One record is the single source of truth: the eigensolver precondition,
/// [`crate::family::certify`], and the CLI all read from here. `psd_floor` is
/// negative because eigenvalues of a positive-semidefinite matrix may dip
/// slightly below zero in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max elementwise |m - m†| for a matrix to count as Hermitian.
    pub hermiticity: f64,
    /// Smallest admissible eigenvalue of a positive-semidefinite matrix.
    pub psd_floor: f64,
    /// Max |trace - 1| for a density matrix.
    pub trace: f64,
    /// Max elementwise |rho - PT_X(rho)| for partial-transpose invariance.
    pub pt_invariance: f64,
    /// Max elementwise |rho - U_pi rho U_pi†| over all party permutations.
    pub permutation_symmetry: f64,
    /// Max |<psi_j|psi_k> - delta_jk| over basis-state pairs.
    pub orthonormality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            psd_floor: -1e-10,
            trace: 1e-12,
            pt_invariance: 1e-12,
            permutation_symmetry: 1e-12,
            orthonormality: 1e-10,
        }
    }
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("expected a {expected}x{expected} matrix, got {got}x{got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not Hermitian: max |m - m†| = {residual:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { residual: f64, tolerance: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("trace = {trace:.12} is not 1 within {tolerance:.1e}")]
    NotUnitTrace { trace: f64, tolerance: f64 },
    #[error(
        "Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from real entries, row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    /// Pauli sigma_x.
    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    /// Pauli sigma_z.
    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    /// Tensor (Kronecker) product: entry `((i*bd + k), (j*bd + l)) = a[i,j] * b[k,l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let bd = other.dim;
        let dim = self.dim * bd;
        let mut out = Self::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let aij = self[(i, j)];
                for k in 0..bd {
                    for l in 0..bd {
                        out[(i * bd + k, j * bd + l)] = aij * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self::from_fn(self.dim, |r, c| self[(r, c)] + other[(r, c)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sub");
        Self::from_fn(self.dim, |r, c| self[(r, c)] - other[(r, c)])
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_fn(self.dim, |r, c| self[(r, c)] * factor)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise difference from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max elementwise |m - m†|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// trace(self · other) without forming the product matrix.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in trace_product");
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                acc += self[(r, c)] * other[(c, r)];
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Pure-state amplitude vector over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    data: Vec<Complex64>,
}

impl Ket {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self {
            data: amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Computational basis state |index> in the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim];
        data[index] = Complex64::new(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.data[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &Ket) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in inner");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rank-1 projector |self><self|.
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, |r, c| self.data[r] * self.data[c].conj())
    }
}

/// The three parties; A owns the most significant basis bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    /// Left-to-right slot in the |xyz> label: A = 0, B = 1, C = 2.
    pub fn slot(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }

    /// Bit position of this party inside a basis index.
    fn bit(self) -> usize {
        2 - self.slot()
    }
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Party::A => write!(f, "A"),
            Party::B => write!(f, "B"),
            Party::C => write!(f, "C"),
        }
    }
}

/// Permutation of the three parties.
///
/// `targets[s]` is the slot that the qubit in slot `s` moves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartyPerm {
    targets: [usize; 3],
}

impl PartyPerm {
    pub fn identity() -> Self {
        Self { targets: [0, 1, 2] }
    }

    pub fn swap(x: Party, y: Party) -> Self {
        let mut targets = [0, 1, 2];
        targets.swap(x.slot(), y.slot());
        Self { targets }
    }

    /// All six permutations, identity first, in a fixed order.
    pub fn all() -> [PartyPerm; 6] {
        [
            Self { targets: [0, 1, 2] },
            Self { targets: [0, 2, 1] },
            Self { targets: [1, 0, 2] },
            Self { targets: [1, 2, 0] },
            Self { targets: [2, 0, 1] },
            Self { targets: [2, 1, 0] },
        ]
    }

    /// Image of a 3-bit basis index under the permutation.
    fn apply_index(&self, index: usize) -> usize {
        let mut out = 0usize;
        for s in 0..3 {
            let bit = (index >> (2 - s)) & 1;
            out |= bit << (2 - self.targets[s]);
        }
        out
    }
}

fn require_dim8(m: &ComplexMatrix) -> Result<(), LinalgError> {
    if m.dim() != 8 {
        return Err(LinalgError::Dimension {
            expected: 8,
            got: m.dim(),
        });
    }
    Ok(())
}

/// Partial transposition with respect to one qubit: with basis labels
/// `(xyz | x'y'z')`, transposing party C swaps `z` and `z'`, and likewise for
/// A and B on their own bits.
pub fn partial_transpose(rho: &ComplexMatrix, party: Party) -> Result<ComplexMatrix, LinalgError> {
    require_dim8(rho)?;
    let bit = party.bit();
    let mut out = ComplexMatrix::zeros(8);
    for r in 0..8 {
        for c in 0..8 {
            let rb = (r >> bit) & 1;
            let cb = (c >> bit) & 1;
            let nr = (r & !(1 << bit)) | (cb << bit);
            let nc = (c & !(1 << bit)) | (rb << bit);
            out[(nr, nc)] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Conjugation by the unitary that permutes the tensor factors.
pub fn permute_parties(rho: &ComplexMatrix, perm: PartyPerm) -> Result<ComplexMatrix, LinalgError> {
    require_dim8(rho)?;
    let mut out = ComplexMatrix::zeros(8);
    for r in 0..8 {
        for c in 0..8 {
            out[(perm.apply_index(r), perm.apply_index(c))] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

/// Diagonalizes a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input must be Hermitian to within the default elementwise tolerance; it
/// is symmetrized before iterating so the rotations see an exactly Hermitian
/// matrix. Sweeps stop once the off-diagonal Frobenius norm drops below
/// 1e-13, capped at 100 sweeps.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let tol = Tolerances::default();
    let residual = m.hermiticity_residual();
    if residual > tol.hermiticity {
        return Err(LinalgError::NotHermitian {
            residual,
            tolerance: tol.hermiticity,
        });
    }

    let n = m.dim();
    // (m + m†)/2, exactly Hermitian.
    let mut a = m.add(&m.dagger()).scale(0.5);
    let mut v = ComplexMatrix::identity(n);

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    acc += a[(r, c)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= JACOBI_OFF_THRESHOLD {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Zero a[p][q] with the unitary
                //   U[p][p] = c, U[p][q] = -s*phase,
                //   U[q][p] = s*conj(phase), U[q][q] = c,
                // phase = a[p][q]/|a[p][q]|, t the small root of
                // t^2 - 2*tau*t - 1 = 0 with tau = (a[q][q]-a[p][p])/(2|a[p][q]|).
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                // small root of t^2 - 2*tau*t - 1 = 0, written without the
                // cancellation that tau - sqrt(tau^2+1) suffers for large tau
                let t = -tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let phase = apq / mag;

                // columns: A <- A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * s * phase.conj();
                    a[(k, q)] = -akp * s * phase + akq * c;
                }
                // rows: A <- U† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * s * phase;
                    a[(q, k)] = -apk * s * phase.conj() + aqk * c;
                }
                // eigenvectors: V <- V U
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * s * phase.conj();
                    v[(k, q)] = -vkp * s * phase + vkq * c;
                }
            }
        }
    }
    if !converged && off_norm(&a) > JACOBI_OFF_THRESHOLD {
        return Err(LinalgError::NoConvergence {
            sweeps,
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eig_hermitian(m)?.eigenvalues[0])
}

/// Validated 8x8 density matrix: Hermitian and unit trace within tolerance.
///
/// Positivity is deliberately not checked here; [`crate::family::certify`]
/// reports the full spectrum instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self, LinalgError> {
        require_dim8(&matrix)?;
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let residual = matrix.hermiticity_residual();
        if residual > tol.hermiticity {
            return Err(LinalgError::NotHermitian {
                residual,
                tolerance: tol.hermiticity,
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.trace.max(1e-10) || trace.im.abs() > tol.hermiticity {
            return Err(LinalgError::NotUnitTrace {
                trace: trace.re,
                tolerance: tol.trace.max(1e-10),
            });
        }
        Ok(Self { matrix })
    }

    /// Projector onto a normalized 8-dimensional ket.
    pub fn pure(ket: &Ket) -> Result<Self, LinalgError> {
        Self::from_matrix(ket.projector(), &Tolerances::default())
    }

    /// Convex mixture of projectors onto the given kets.
    pub fn mixture(terms: &[(f64, &Ket)]) -> Result<Self, LinalgError> {
        let mut acc = ComplexMatrix::zeros(8);
        for (w, ket) in terms {
            acc = acc.add(&ket.projector().scale(*w));
        }
        Self::from_matrix(acc, &Tolerances::default())
    }

    /// I/8.
    pub fn maximally_mixed() -> Self {
        Self {
            matrix: ComplexMatrix::identity(8).scale(0.125),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}
