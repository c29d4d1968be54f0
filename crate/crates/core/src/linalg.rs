//! Dense complex linear algebra and quantum-state validity checks.
//!
//! Vectors and matrices are plain `nalgebra` dynamic types over `Complex64`;
//! the newtypes here only exist where a validated invariant has to travel
//! with the value (density matrices, unitaries).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `Σᵢ conj(xᵢ)·yᵢ`.
pub fn inner(x: &CVector, y: &CVector) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            context: "inner product",
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.dotc(y))
}

/// Checks that `v` is nonempty and has unit norm within the validity tolerance.
pub fn check_unit(v: &CVector) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParameter(
            "vector must have dimension >= 1".into(),
        ));
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > tolerance::VALIDITY {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest elementwise deviation `|m - m†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest elementwise deviation `|W†W - I|`.
pub fn isometry_deviation(w: &CMatrix) -> f64 {
    let gram = w.adjoint() * w;
    max_abs(&(gram - CMatrix::identity(w.ncols(), w.ncols())))
}

fn require_square(m: &CMatrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            context,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter(format!("{context}: empty matrix")));
    }
    Ok(())
}

/// Symmetrizes `m` if it is Hermitian within `tol`, otherwise fails.
fn hermitian_part(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let deviation = hermitian_deviation(m);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let diag = CMatrix::from_diagonal(&self.eigenvalues.map(|l| Complex64::new(l, 0.0)));
        &self.eigenvectors * diag * self.eigenvectors.adjoint()
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
///
/// Inputs within the validity tolerance of Hermitian are symmetrized as
/// `(m + m†)/2` first; anything further off is rejected.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    require_square(m, "hermitian_eig")?;
    let h = hermitian_part(m, tolerance::VALIDITY)?;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues =
        DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i))
            .collect::<Vec<_>>(),
    );
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, a1: usize, a2: usize) -> Complex64 {
        self.matrix[(a1, a2)]
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        check_unit(psi)?;
        Ok(Self {
            matrix: psi * psi.adjoint(),
        })
    }

    /// Maximally mixed state on `n` levels.
    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n, n).scale(1.0 / n as f64),
        }
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        // Already validated Hermitian, so this cannot fail.
        hermitian_eig(&self.matrix)
            .map(|e| e.eigenvalues)
            .expect("density matrix is Hermitian")
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &CVector) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::Dimension {
                context: "fidelity",
                expected: self.dim(),
                found: psi.len(),
            });
        }
        Ok(psi.dotc(&(&self.matrix * psi)).re)
    }

    /// `½ Σ |λ(ρ - σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::Dimension {
                context: "trace distance",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let eig = hermitian_eig(&diff)?;
        Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
    }
}

/// Validates `rho` as a density matrix.
///
/// Errors name the violated invariant and the worst offending value.
pub fn validate_density(rho: &CMatrix, tol: f64) -> Result<DensityMatrix> {
    require_square(rho, "validate_density")?;
    let h = hermitian_part(rho, tol)?;
    let trace = h.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(Error::TraceNotOne { trace });
    }
    let eig = SymmetricEigen::new(h.clone());
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -tol {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix { matrix: h })
}

/// A square matrix with `U†U = I` within the validity tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    matrix: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix, "unitary")?;
        let deviation = isometry_deviation(&matrix);
        if deviation > tolerance::VALIDITY {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn commutes_with(&self, other: &UnitaryMatrix, tol: f64) -> bool {
        self.dim() == other.dim()
            && max_abs(&(&self.matrix * &other.matrix - &other.matrix * &self.matrix)) <= tol
    }
}

/// Orthonormal basis (as columns) of the orthogonal complement of the span of
/// the orthonormal columns of `q`.
pub fn orthonormal_complement(q: &CMatrix) -> CMatrix {
    let d = q.nrows();
    let mut basis: Vec<CVector> = q.column_iter().map(|c| c.into_owned()).collect();
    let start = basis.len();
    while basis.len() < d {
        // Pick the standard basis vector with the largest component outside
        // the current span; two projection passes keep it orthogonal.
        let best = (0..d)
            .map(|k| {
                let mut v = CVector::zeros(d);
                v[k] = ONE;
                for _ in 0..2 {
                    for b in &basis {
                        let c = b.dotc(&v);
                        v -= b * c;
                    }
                }
                v
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("d >= 1");
        let norm = best.norm();
        basis.push(best.unscale(norm));
    }
    if start == d {
        return CMatrix::zeros(d, 0);
    }
    CMatrix::from_columns(&basis[start..])
}

/// Nearest matrix with orthonormal columns (polar factor `U V†` of `m = U Σ V†`).
pub fn polar_isometry(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
